"""Output-perturbation mechanisms, parameter selection and risk bounds.

Every mechanism is split in two. ``prepare_*`` runs the optimizer and
calibrates the noise. ``PreparedRelease.release`` adds one noise draw. A
deterministic optimizer is therefore run once for a whole Monte-Carlo batch.
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import noise
from .core import Dataset, FunctionClassSpec, InvalidArgument, PrivacyParams, RegimeError, Unsupported, project_ball
from .noise import NoiseSpec
from .objectives import AdversarialObjective, Objective, RegularizedObjective, TiltedObjective
from .optimizers import Method, OptimizerConfig, OptResult, extragradient_saddle, iterations_for, run
from .sensitivity import (
    SensitivityBound,
    class_sensitivity,
    inflate_for_approximate_minimizer,
    regularized_sensitivity,
    term_sensitivity,
)


class Route(str, enum.Enum):
    SC = "sc"
    SMOOTH_SC = "smooth-sc"
    CONVEX = "convex"
    SMOOTH_CONVEX = "smooth-convex"
    TERM = "term"
    ADVERSARIAL = "adversarial"


class Mode(str, enum.Enum):
    EMPIRICAL = "empirical"
    POPULATION = "population"


@dataclass(frozen=True)
class Certificate:
    epsilon: float
    delta: float
    sensitivity: float


@dataclass
class PrivateOutput:
    w_private: np.ndarray
    noise_spec_used: NoiseSpec
    certificate: Certificate
    pre_noise_point: np.ndarray | None = None
    audit: bool = False


@dataclass(frozen=True)
class MechanismConfig:
    """How to run a black-box mechanism.

    ``optimizer=None`` means the exact minimizer. An optimizer with ``T=0``
    gets its iteration count from ``alpha`` and the method's contract.
    """

    privacy: PrivacyParams
    spec: FunctionClassSpec
    optimizer: OptimizerConfig | None = None
    lam: float = 0.0
    alpha: float = 0.0
    project_after_noise: bool = True
    sensitivity_override: SensitivityBound | None = None
    audit: bool = False

    def __post_init__(self):
        if self.lam < 0:
            raise InvalidArgument("lambda must be nonnegative")
        if self.alpha < 0:
            raise InvalidArgument("alpha must be nonnegative")
        if self.spec.mu <= 0 and self.lam <= 0:
            raise InvalidArgument("a merely convex loss needs lambda > 0")
        if self.spec.beta <= 0 and not self.project_after_noise:
            # the non-smooth analysis only covers the projected release
            object.__setattr__(self, "project_after_noise", True)


@dataclass
class PreparedRelease:
    noise_spec: NoiseSpec
    R: float
    project: bool
    center: np.ndarray | None = None
    solve: Callable[[np.random.Generator], np.ndarray] | None = None
    solver: OptResult | None = None
    audit: bool = False

    @property
    def certificate(self) -> Certificate:
        return Certificate(*self.noise_spec.calibration)

    def release(self, rng: np.random.Generator) -> PrivateOutput:
        point = self.center if self.center is not None else self.solve(rng)
        w = point + noise.sample(self.noise_spec, rng)
        if self.project:
            w = project_ball(w, self.R)
        return PrivateOutput(w, self.noise_spec, self.certificate, point.copy() if self.audit else None, self.audit)


def _warn_audit(audit: bool):
    if audit:
        warnings.warn("audit mode keeps the pre-noise point; the output is NOT private", stacklevel=3)


def _solver(obj: Objective, X: Dataset, optimizer: OptimizerConfig | None, alpha: float, spec_for_T: FunctionClassSpec):
    """Fixed point or a per-release solve, depending on the method."""
    if optimizer is None:
        optimizer = OptimizerConfig(Method.EXACT)
    if optimizer.method is not Method.EXACT and optimizer.T == 0:
        if not alpha > 0:
            raise InvalidArgument("alpha must be positive to derive an iteration count")
        T = iterations_for(optimizer.method, spec_for_T, alpha)
        optimizer = OptimizerConfig(optimizer.method, T, alpha, optimizer.w0, optimizer.max_iters, optimizer.trace_path)
    if optimizer.method.randomized:
        return None, (lambda rng: run(optimizer, obj, X, rng).w_out), None
    result = run(optimizer, obj, X)
    return result.w_out, None, result


def prepare_conceptual(obj: Objective, X: Dataset, privacy: PrivacyParams, project: bool, sensitivity: SensitivityBound | None = None, audit: bool = False) -> PreparedRelease:
    spec = obj.spec
    if not obj.has_exact_minimizer:
        raise Unsupported(f"{type(obj).__name__} has no exact minimizer")
    if sensitivity is None:
        sensitivity = term_sensitivity(spec, obj.tau, obj.a_R, obj.A_R) if isinstance(obj, TiltedObjective) else class_sensitivity(spec)
    if spec.beta <= 0:
        project = True
    _warn_audit(audit)
    spec_noise = noise.calibrate(privacy, float(sensitivity), spec.d)
    return PreparedRelease(spec_noise, spec.R, project, center=obj.exact_minimizer(X), audit=audit)


def conceptual_output_perturbation(obj, X, privacy, project, rng, sensitivity=None, audit=False) -> PrivateOutput:
    """w*(X) + z, optionally projected onto B(0, R)."""
    return prepare_conceptual(obj, X, privacy, project, sensitivity, audit).release(rng)


def prepare_blackbox(obj: Objective, X: Dataset, config: MechanismConfig) -> PreparedRelease:
    spec = config.spec
    if spec.mu <= 0:
        raise Unsupported("the black-box mechanism needs mu > 0; use regularized_blackbox")
    if not config.alpha > 0:
        raise InvalidArgument("alpha must be positive")
    base = config.sensitivity_override
    if base is None:
        if isinstance(obj, TiltedObjective):
            base = term_sensitivity(spec, obj.tau, obj.a_R, obj.A_R)
        else:
            base = class_sensitivity(spec)
    sens = inflate_for_approximate_minimizer(base, config.alpha, spec.mu)
    center, solve, result = _solver(obj, X, config.optimizer, config.alpha, obj.spec)
    _warn_audit(config.audit)
    return PreparedRelease(noise.calibrate(config.privacy, float(sens), spec.d), spec.R, config.project_after_noise, center, solve, result, config.audit)


def blackbox_output_perturbation(obj, X, config: MechanismConfig, rng) -> PrivateOutput:
    """Approximate minimizer plus noise scaled to Delta + 2 sqrt(2 alpha / mu)."""
    return prepare_blackbox(obj, X, config).release(rng)


def prepare_regularized(obj: Objective, X: Dataset, config: MechanismConfig) -> PreparedRelease:
    lam = config.lam
    if not lam > 0:
        raise InvalidArgument("lambda must be positive")
    if not config.alpha > 0:
        raise InvalidArgument("alpha must be positive")
    reg = RegularizedObjective(obj, lam)
    base = config.sensitivity_override or regularized_sensitivity(config.spec, lam)
    sens = inflate_for_approximate_minimizer(base, config.alpha, lam)
    center, solve, result = _solver(reg, X, config.optimizer, config.alpha, reg.spec)
    _warn_audit(config.audit)
    return PreparedRelease(
        noise.calibrate(config.privacy, float(sens), config.spec.d),
        config.spec.R, config.project_after_noise, center, solve, result, config.audit,
    )


def regularized_blackbox(obj, X, config: MechanismConfig, rng) -> PrivateOutput:
    """Approximately minimize F + (lam/2)||w||^2, then perturb."""
    return prepare_regularized(obj, X, config).release(rng)


def prepare_adversarial(obj: AdversarialObjective, X: Dataset, config: MechanismConfig, max_iters: int = 200_000) -> PreparedRelease:
    spec = config.spec
    if spec.mu <= 0:
        raise Unsupported("adversarial output perturbation needs mu > 0")
    if not config.alpha > 0:
        raise InvalidArgument("alpha must be positive")
    base = config.sensitivity_override or class_sensitivity(spec)
    # the same sqrt inflation as the plain black-box mechanism, for both delta branches
    sens = inflate_for_approximate_minimizer(base, config.alpha, spec.mu)
    result = extragradient_saddle(obj, config.alpha, max_iters=max_iters, X=X)
    _warn_audit(config.audit)
    return PreparedRelease(noise.calibrate(config.privacy, float(sens), spec.d), spec.R, True, result.w_out, None, result, config.audit)


def adversarial_blackbox(obj: AdversarialObjective, X: Dataset, config: MechanismConfig, rng) -> PrivateOutput:
    """Pi(w_T + z) where (w_T, v_T) is an alpha-saddle point."""
    return prepare_adversarial(obj, X, config).release(rng)


# ------------------------------------------------------------ parameters

def privacy_ratio(spec: FunctionClassSpec, privacy: PrivacyParams, per_sample: bool | None = None) -> float:
    """d/eps, or sqrt(d)(c + sqrt(c^2 + eps))/eps when delta > 0; divided by n for averaged losses."""
    eps, c = privacy.epsilon, privacy.c_delta
    if privacy.pure:
        q = spec.d / eps
    else:
        q = math.sqrt(spec.d) * (c + math.sqrt(c * c + eps)) / eps
    if spec.erm if per_sample is None else per_sample:
        q /= spec.n
    return q


@dataclass(frozen=True)
class ParamChoice:
    route: Route
    lam: float
    alpha: float
    T: dict
    regime_ok: bool
    ratio: float


def _require(cond: bool, message: str):
    if not cond:
        raise InvalidArgument(message)


def regime_holds(spec: FunctionClassSpec, privacy: PrivacyParams, route: Route) -> bool:
    q = privacy_ratio(spec, privacy)
    if route is Route.SMOOTH_CONVEX:
        return q * q <= spec.L / (spec.R * spec.beta)
    if route is Route.TERM:
        return True
    return q <= 1.0


def _check_route(spec: FunctionClassSpec, route: Route):
    if route in (Route.SC, Route.TERM, Route.ADVERSARIAL):
        _require(spec.mu > 0, f"route {route.value} needs mu > 0")
    if route is Route.SMOOTH_SC:
        _require(spec.mu > 0 and spec.beta > 0, "route smooth-sc needs mu > 0 and beta > 0")
    if route is Route.SMOOTH_CONVEX:
        _require(spec.beta > 0, "route smooth-convex needs beta > 0")


def select_params(spec: FunctionClassSpec, privacy: PrivacyParams, route: Route | str, *, c_tau: float = 1.0, mode: Mode | str = Mode.EMPIRICAL, force: bool = False) -> ParamChoice:
    """lambda, alpha and per-method iteration counts for a route.

    Raises :class:`RegimeError` outside the guarantee's regime unless
    ``force`` is set, in which case the formulas are still evaluated.
    """
    route, mode = Route(route), Mode(mode)
    _check_route(spec, route)
    ok = regime_holds(spec, privacy, route)
    if not ok and not force:
        raise RegimeError(f"parameters outside the {route.value} regime (ratio {privacy_ratio(spec, privacy):.4g})")
    L, mu, beta, R, n = spec.L, spec.mu, spec.beta, spec.R, spec.n
    q = privacy_ratio(spec, privacy)
    q_raw = privacy_ratio(spec, privacy, per_sample=False)
    n_eff = n if spec.erm else 1
    lam, T = 0.0, {}

    if route is Route.SC:
        alpha = L * L / (mu * n) * min(1.0 / n, q_raw) if spec.erm else L * L / mu * q_raw
        for m in (Method.SUBGRADIENT, Method.SGD):
            T[m.value] = iterations_for(m, spec, alpha)
    elif route in (Route.SMOOTH_SC, Route.ADVERSARIAL):
        alpha = L * L / (mu * n_eff**2) * min(spec.kappa * q_raw**2, 1.0)
        if route is Route.SMOOTH_SC:
            T[Method.AGD.value] = iterations_for(Method.AGD, spec, alpha)
            if spec.erm:
                T[Method.KATYUSHA.value] = iterations_for(Method.KATYUSHA, spec, alpha)
    elif route is Route.TERM:
        alpha = L * L * c_tau / (mu * n) * min(c_tau / n, q_raw)
        T[Method.SUBGRADIENT.value] = iterations_for(Method.SUBGRADIENT, spec, alpha)
    elif route is Route.CONVEX:
        if mode is Mode.POPULATION:
            lam = (L / R) * (math.sqrt(q) + 1.0 / math.sqrt(n))
        else:
            lam = L / (R * math.sqrt(1.0 + 1.0 / q))
        if privacy.pure and spec.erm:
            alpha = L * R * q**1.5 / (1.0 + spec.d / privacy.epsilon) ** 2
        else:
            alpha = L * R * q**1.5
        reg = spec.with_(L=L + lam * R, mu=lam, beta=beta + lam if beta > 0 else 0.0)
        for m in (Method.SUBGRADIENT, Method.SGD):
            T[m.value] = iterations_for(m, reg, alpha)
    else:
        scale = (beta * L * L / (R * R)) ** (1.0 / 3.0)
        lam = scale * q ** (2.0 / 3.0)
        if mode is Mode.POPULATION:
            lam = scale * (q ** (2.0 / 3.0) + 1.0 / math.sqrt(n))
        alpha = min(
            L ** (4 / 3) * R ** (2 / 3) * beta ** (-1 / 3) * (1.0 / q) ** (2 / 3) / n_eff**2,
            beta ** (1 / 3) * L ** (2 / 3) * R ** (4 / 3) * q ** (2 / 3),
        )
        reg = spec.with_(L=L + lam * R, mu=lam, beta=beta + lam)
        T[Method.AGD.value] = iterations_for(Method.AGD, reg, alpha)
        if spec.erm:
            T[Method.KATYUSHA.value] = iterations_for(Method.KATYUSHA, reg, alpha)
    return ParamChoice(route, lam, alpha, T, ok, q)


def theoretical_bound(spec: FunctionClassSpec, privacy: PrivacyParams, route: Route | str, mode: Mode | str = Mode.EMPIRICAL, *, implementation: bool = False, c_tau: float = 1.0, force: bool = False) -> float:
    """Expected excess risk bound, capped at the trivial L R.

    With ``implementation=False`` this is the bound for the exact-minimizer
    mechanism; otherwise it is the bound for the black-box mechanism run
    with the parameters from :func:`select_params`.
    """
    route, mode = Route(route), Mode(mode)
    _check_route(spec, route)
    L, mu, beta, R, n = spec.L, spec.mu, spec.beta, spec.R, spec.n
    trivial = L * R
    if not regime_holds(spec, privacy, route):
        if force:
            return trivial
        raise RegimeError(f"parameters outside the {route.value} regime")
    q = privacy_ratio(spec, privacy)
    pure = privacy.pure
    kappa = spec.kappa
    smooth_scale = beta ** (1 / 3) * L ** (2 / 3) * R ** (4 / 3)

    if mode is Mode.POPULATION:
        q = privacy_ratio(spec, privacy, per_sample=True)
        if route is Route.SC:
            value = (L * L / mu) * ((5.0 / n + 9.0 * q) if implementation else 2.0 * (1.0 / n + q))
        elif route is Route.SMOOTH_SC:
            value = (L * L / mu) * ((5.0 / n + 26.0 * kappa * q * q) if implementation else (2.0 / n + 4.0 * kappa * q * q))
        elif implementation:
            raise Unsupported(f"no implementation population bound for route {route.value}")
        elif route is Route.CONVEX:
            value = L * R * ((127.0 if pure else 19.0) * math.sqrt(q) + 0.5 / math.sqrt(n))
        elif route is Route.SMOOTH_CONVEX:
            value = smooth_scale * (11.0 / math.sqrt(n) + (83.0 if pure else 43.0) * q ** (2 / 3))
        else:
            raise Unsupported(f"no population bound for route {route.value}")
        return min(trivial, value)

    if route is Route.SC:
        const = (9.0 if pure else 6.0) if implementation else (2.0 if pure else math.sqrt(2.0))
        value = const * (L * L / mu) * q
    elif route in (Route.SMOOTH_SC, Route.ADVERSARIAL):
        const = (26.0 if pure else 13.5) if implementation else 4.0
        value = const * kappa * (L * L / mu) * q * q
    elif route is Route.CONVEX:
        const = (49.0 if pure else 25.0) if implementation else 8.5
        value = const * L * R * math.sqrt(q)
    elif route is Route.SMOOTH_CONVEX:
        const = (65.0 if pure else 127.0) if implementation else 48.5
        value = const * smooth_scale * q ** (2 / 3)
    else:
        q_raw = privacy_ratio(spec, privacy, per_sample=False)
        if implementation:
            value = 9.0 * (L * L * c_tau / mu) * q_raw / n
        else:
            value = (2.0 if pure else math.sqrt(2.0)) * (L * L / mu) * q_raw * min(1.0, c_tau / n)
    return min(trivial, value)
