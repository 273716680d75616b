"""Monte-Carlo experiments, configuration files and the verification suite."""

from __future__ import annotations

import configparser
import csv
import enum
import io
import math
import subprocess
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import optimize

from . import noise
from .core import ConvergenceError, Dataset, InvalidArgument, PrivacyParams, Unsupported, project_ball
from .mechanisms import (
    MechanismConfig,
    Mode,
    PreparedRelease,
    Route,
    prepare_adversarial,
    prepare_blackbox,
    prepare_conceptual,
    prepare_regularized,
    select_params,
    theoretical_bound,
)
from .objectives import (
    AbsoluteDeviationObjective,
    AdversarialObjective,
    AdversarialValue,
    LeastSquaresObjective,
    LinearAdversarialObjective,
    LogisticObjective,
    Objective,
    QuadraticMeanObjective,
    RegularizedObjective,
    TightSensitivityInstance,
    TiltedObjective,
)
from .optimizers import Method, OptimizerConfig, agd, agd_iterations, subgradient_method
from .sensitivity import regularized_sensitivity

CSV_COLUMNS = (
    "route,eps,delta,n,d,L,mu,beta,R,lambda,alpha,T,trials,mc_mean,mc_std,"
    "ci99_upper,theory_bound,bound_ratio,wallclock_ms,seed"
).split(",")
Z99 = 2.5758293035489004


class ConfigError(InvalidArgument):
    """A configuration file or value could not be used."""


def derive_rng(seed: int, *keys: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(seed), *map(int, keys)]))


def trial_streams(seed: int, key: int, trials: int) -> list[np.random.Generator]:
    """One independent generator per trial, split from (seed, key)."""
    children = np.random.SeedSequence([int(seed), int(key)]).spawn(trials)
    return [np.random.default_rng(c) for c in children]


# ------------------------------------------------------------------ data

class DataKind(str, enum.Enum):
    UNIFORM_BALL = "uniform-ball"
    SPHERE = "sphere"
    GAUSSIAN_PROJECTED = "gaussian-projected"
    FIXED = "fixed"


class LabelKind(str, enum.Enum):
    NONE = "none"
    LOGISTIC = "logistic"
    LINEAR = "linear"


@dataclass(frozen=True)
class DataDistribution:
    """Points in the ball of ``radius``, optionally with labels.

    ``shift`` moves the Gaussian center before projection. Labels come from
    a fixed direction ``teacher``: logistic labels are flipped with
    probability ``label_noise``, linear labels get Gaussian noise and are
    clipped to [-1, 1].
    """

    kind: DataKind
    d: int
    radius: float = 1.0
    scale: float = 1.0
    shift: tuple[float, ...] | None = None
    points: np.ndarray | None = None
    labels: LabelKind = LabelKind.NONE
    teacher: tuple[float, ...] | None = None
    label_noise: float = 0.1

    def __post_init__(self):
        object.__setattr__(self, "kind", DataKind(self.kind))
        object.__setattr__(self, "labels", LabelKind(self.labels))
        if self.kind is DataKind.FIXED and self.points is None:
            raise InvalidArgument("a fixed distribution needs its points")

    def _features(self, n: int, rng: np.random.Generator) -> np.ndarray:
        d, r = self.d, self.radius
        if self.kind is DataKind.FIXED:
            return np.asarray(self.points, dtype=float)[rng.integers(len(self.points), size=n)]
        g = rng.standard_normal((n, d))
        if self.kind is DataKind.SPHERE:
            return r * g / np.linalg.norm(g, axis=1, keepdims=True)
        if self.kind is DataKind.UNIFORM_BALL:
            radii = r * rng.random(n) ** (1.0 / d)
            return g / np.linalg.norm(g, axis=1, keepdims=True) * radii[:, None]
        pts = self.scale * g
        if self.shift is not None:
            pts = pts + np.asarray(self.shift, dtype=float)
        norms = np.linalg.norm(pts, axis=1, keepdims=True)
        return pts * np.minimum(1.0, r / np.maximum(norms, 1e-300))

    def sample(self, n: int, rng: np.random.Generator) -> Dataset:
        pts = self._features(n, rng)
        if self.labels is LabelKind.NONE:
            return Dataset(pts)
        teacher = np.ones(self.d) if self.teacher is None else np.asarray(self.teacher, dtype=float)
        score = pts @ teacher
        if self.labels is LabelKind.LOGISTIC:
            y = np.where(score >= 0, 1.0, -1.0)
            y[rng.random(n) < self.label_noise] *= -1.0
        else:
            y = np.clip(score + self.label_noise * rng.standard_normal(n), -1.0, 1.0)
        return Dataset(pts, y)

    @property
    def symmetric(self) -> bool:
        """True when the feature mean is zero by symmetry."""
        return self.kind in (DataKind.SPHERE, DataKind.UNIFORM_BALL) or (
            self.kind is DataKind.GAUSSIAN_PROJECTED and self.shift is None
        )


# ------------------------------------------------------------ instances

def _get(params: dict, key: str, cast=float, default=None):
    if key not in params:
        if default is None:
            raise ConfigError(f"missing objective parameter '{key}'")
        return default
    try:
        return cast(params[key])
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad value for '{key}': {params[key]!r}") from exc


def _as_bool(value) -> bool:
    if isinstance(value, bool):
        return value
    text = str(value).strip().lower()
    if text in ("1", "true", "yes", "on"):
        return True
    if text in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"not a boolean: {value!r}")


def _floats(value) -> tuple[float, ...]:
    if isinstance(value, (list, tuple)):
        return tuple(float(v) for v in value)
    return tuple(float(v) for v in str(value).replace(",", " ").split())


def build_instance(params: dict) -> tuple[object, DataDistribution]:
    """Objective plus data distribution from an ``[objective]`` parameter map."""
    kind = str(params.get("kind", "")).strip().lower()
    n = _get(params, "n", int)
    d = _get(params, "d", int, 1)
    data_kind = params.get("data")
    data_radius = _get(params, "data_radius", float, 1.0)
    shift = _floats(params["shift"]) if "shift" in params else None
    scale = _get(params, "scale", float, 1.0)

    def dist(default_kind, radius=data_radius, labels=LabelKind.NONE, **kw):
        return DataDistribution(DataKind(data_kind or default_kind), d, radius, scale, shift, labels=labels, **kw)

    if kind == "quadratic":
        beta = _get(params, "beta", float, 1.0)
        kappa = _get(params, "kappa", float, 1.0)
        R = _get(params, "R", float, 1.0)
        radius = _get(params, "data_radius", float, R / math.sqrt(kappa))
        obj = QuadraticMeanObjective.conditioned(d, beta, kappa, R, n, data_radius=R)
        return obj, dist("uniform-ball", radius)
    if kind == "tight":
        mu, L = _get(params, "mu"), _get(params, "L")
        R = _get(params, "R", float, L / mu)
        obj = TightSensitivityInstance(mu, L, R, n, d, erm=_as_bool(params.get("erm", True)))
        return obj, dist("sphere", 1.0)
    if kind == "absdev":
        R = _get(params, "R", float, 1.0)
        return AbsoluteDeviationObjective(R, n, d, data_radius), dist("gaussian-projected")
    if kind == "logistic":
        R = _get(params, "R", float, 4.0)
        teacher = _floats(params["teacher"]) if "teacher" in params else None
        obj = LogisticObjective(R, n, d, data_radius)
        return obj, dist("uniform-ball", labels=LabelKind.LOGISTIC, teacher=teacher, label_noise=_get(params, "label_noise", float, 0.1))
    if kind == "ridge":
        R = _get(params, "R", float, 2.0)
        obj = RegularizedObjective(LeastSquaresObjective(R, n, d, data_radius), _get(params, "lam"))
        return obj, dist("uniform-ball", labels=LabelKind.LINEAR, label_noise=_get(params, "label_noise", float, 0.1))
    if kind == "tilted":
        beta = _get(params, "beta", float, 1.0)
        R = _get(params, "R", float, 1.0)
        tau = _get(params, "tau")
        inner = QuadraticMeanObjective(np.eye(d), beta, R, n, data_radius=data_radius)
        return TiltedObjective(inner, tau), dist("uniform-ball")
    if kind == "adversarial":
        mu = _get(params, "mu", float, 1.0)
        rho = _get(params, "rho", float, 0.5)
        R = _get(params, "R", float, 2.0)
        obj = LinearAdversarialObjective(mu, rho, R, n, d, _get(params, "mu_v", float, 0.0), data_radius)
        return obj, dist("gaussian-projected")
    raise ConfigError(f"unknown objective kind '{kind}'")


# ------------------------------------------------------------- references

def reference_minimum(obj: Objective, X: Dataset) -> float:
    """min over B(0, R) of obj, exactly when possible and to ~1e-10 otherwise."""
    if obj.has_exact_minimizer:
        return obj.eval(obj.exact_minimizer(X), X)
    s = obj.spec
    if s.mu > 0 and s.beta > 0:
        T = agd_iterations(s.kappa, s.mu, s.beta, 2 * s.R, 1e-13 * max(1.0, s.L * s.R))
        return agd(obj, X, T).value
    if s.beta > 0:
        res = optimize.minimize(
            lambda w: obj.eval(w, X), np.zeros(s.d), jac=lambda w: obj.subgradient(w, X),
            method="BFGS", options={"gtol": 1e-11, "maxiter": 10_000},
        )
        if np.linalg.norm(res.x) <= s.R:
            return float(res.fun)
        # the unconstrained minimizer is outside: solve on the ball instead
        res = optimize.minimize(
            lambda w: obj.eval(w, X), project_ball(res.x, s.R), jac=lambda w: obj.subgradient(w, X),
            method="SLSQP", options={"ftol": 1e-14, "maxiter": 10_000},
            constraints=[{"type": "ineq", "fun": lambda w: s.R**2 - w @ w, "jac": lambda w: -2 * w}],
        )
        if not res.success:
            raise ConvergenceError(f"reference solve failed: {res.message}", float(res.fun))
        return float(res.fun)
    if s.mu > 0:
        return subgradient_method(obj, X, 200_000).value
    raise Unsupported(f"no reference solver for {type(obj).__name__}")


# ------------------------------------------------------------ estimation

@dataclass(frozen=True)
class RiskEstimate:
    mean: float
    std: float
    median: float
    trials: int

    @property
    def half_width(self) -> float:
        return Z99 * self.std / math.sqrt(self.trials)

    @property
    def ci99_upper(self) -> float:
        return self.mean + self.half_width

    @property
    def ci99_lower(self) -> float:
        return self.mean - self.half_width

    @classmethod
    def from_samples(cls, samples) -> "RiskEstimate":
        x = np.asarray(samples, dtype=float)
        std = float(x.std(ddof=1)) if x.size > 1 else 0.0
        return cls(float(x.mean()), std, float(np.median(x)), int(x.size))


def _map_trials(fn, streams, workers: int) -> list[float]:
    # results stay in trial order, so the estimate does not depend on scheduling
    if workers <= 1:
        return [fn(rng) for rng in streams]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, streams))


def git_revision() -> str:
    try:
        out = subprocess.run(["git", "rev-parse", "--short", "HEAD"], capture_output=True, text=True, timeout=5)
    except (OSError, subprocess.SubprocessError):
        return "unknown"
    return out.stdout.strip() or "unknown"


def estimate_excess_risk(
    release: PreparedRelease | Callable[[np.random.Generator], np.ndarray],
    obj: Objective,
    X: Dataset,
    trials: int,
    seed: int,
    f_star: float | None = None,
    key: int = 0,
    workers: int = 1,
) -> RiskEstimate:
    """Mean, spread and 99% interval of F(w_private) - F* over independent releases."""
    if trials < 1:
        raise InvalidArgument("trials must be positive")
    if f_star is None:
        f_star = reference_minimum(obj, X)
    draw = release.release if isinstance(release, PreparedRelease) else release

    def one(rng):
        out = draw(rng)
        w = out.w_private if hasattr(out, "w_private") else out
        return obj.eval(w, X) - f_star

    return RiskEstimate.from_samples(_map_trials(one, trial_streams(seed, key, trials), workers))


def estimate_population_loss(
    make_release: Callable[[Dataset], PreparedRelease],
    obj: Objective,
    distribution: DataDistribution,
    n: int,
    trials: int,
    holdout_size: int,
    seed: int,
    population_minimizer,
    key: int = 0,
    workers: int = 1,
) -> RiskEstimate:
    """Fresh data each trial; excess loss over the population minimizer on a holdout sample."""
    if trials < 1:
        raise InvalidArgument("trials must be positive")
    w_pop = np.asarray(population_minimizer, dtype=float)

    def one(rng):
        X = distribution.sample(n, rng)
        w = make_release(X).release(rng).w_private
        holdout = distribution.sample(holdout_size, rng)
        return obj.eval(w, holdout) - obj.eval(w_pop, holdout)

    return RiskEstimate.from_samples(_map_trials(one, trial_streams(seed, key, trials), workers))


# ---------------------------------------------------------------- routes

DEFAULT_METHOD = {
    Route.SC: Method.SUBGRADIENT,
    Route.SMOOTH_SC: Method.AGD,
    Route.CONVEX: Method.SUBGRADIENT,
    Route.SMOOTH_CONVEX: Method.AGD,
    Route.TERM: Method.SUBGRADIENT,
    Route.ADVERSARIAL: Method.EXTRAGRADIENT,
}


@dataclass
class RouteSetup:
    release: PreparedRelease
    risk_objective: Objective
    bound: float
    lam: float
    alpha: float
    T: int
    method: Method


def _c_tau(obj) -> float:
    return obj.c_tau if isinstance(obj, TiltedObjective) else 1.0


def prepare_route(obj, X: Dataset, privacy: PrivacyParams, route: Route | str, method: Method | str | None = None, mode: Mode | str = Mode.EMPIRICAL, force: bool = False, trace: str | None = None, audit: bool = False) -> RouteSetup:
    """Pick parameters for a route, run the optimizer and report the matching bound."""
    route, mode = Route(route), Mode(mode)
    spec = obj.spec
    c_tau = _c_tau(obj)
    params = select_params(spec, privacy, route, c_tau=c_tau, mode=mode, force=force)

    if mode is Mode.POPULATION:
        bound = theoretical_bound(spec, privacy, route, mode, force=force)
        project = route in (Route.SC, Route.CONVEX)
        if route in (Route.CONVEX, Route.SMOOTH_CONVEX):
            target = RegularizedObjective(obj, params.lam)
            release = prepare_conceptual(target, X, privacy, project, regularized_sensitivity(spec, params.lam), audit)
        else:
            release = prepare_conceptual(obj, X, privacy, project, audit=audit)
        return RouteSetup(release, obj, bound, params.lam, 0.0, 0, Method.EXACT)

    bound = theoretical_bound(spec, privacy, route, implementation=True, c_tau=c_tau, force=force)
    if route is Route.ADVERSARIAL:
        if not isinstance(obj, AdversarialObjective):
            raise InvalidArgument("the adversarial route needs an adversarial objective")
        config = MechanismConfig(privacy, spec, None, 0.0, params.alpha, True, audit=audit)
        release = prepare_adversarial(obj, X, config)
        return RouteSetup(release, AdversarialValue(obj), bound, 0.0, params.alpha, release.solver.iterations, Method.EXTRAGRADIENT)

    method = Method(method) if method is not None else DEFAULT_METHOD[route]
    if method is Method.EXACT:
        T = 0
    else:
        if method.value not in params.T:
            raise InvalidArgument(f"method {method.value} has no iteration contract on route {route.value}")
        T = params.T[method.value]
    optimizer = None if method is Method.EXACT else OptimizerConfig(method, T, params.alpha, trace_path=trace)
    smooth_route = route in (Route.SMOOTH_SC, Route.SMOOTH_CONVEX)
    config = MechanismConfig(privacy, spec, optimizer, params.lam, params.alpha, project_after_noise=not smooth_route, audit=audit)
    if route in (Route.CONVEX, Route.SMOOTH_CONVEX):
        release = prepare_regularized(obj, X, config)
    else:
        release = prepare_blackbox(obj, X, config)
    return RouteSetup(release, obj, bound, params.lam, params.alpha, T, method)


# ------------------------------------------------------------ experiments

@dataclass
class ExperimentConfig:
    objective: dict
    route: Route
    privacy_grid: list[tuple[float, float]]
    trials: int = 1000
    seed: int = 0
    output: str | None = None
    mode: Mode = Mode.EMPIRICAL
    method: Method | None = None
    force: bool = False
    holdout: int = 10_000
    data_seed: int | None = None
    workers: int = 1

    def __post_init__(self):
        if str(getattr(self.mode, "value", self.mode)) == "adversarial":
            self.route, self.mode = Route.ADVERSARIAL, Mode.EMPIRICAL
        self.route = Route(self.route)
        self.mode = Mode(self.mode)
        if self.method is not None:
            self.method = Method(self.method)
        if self.trials < 1:
            raise ConfigError("trials must be at least 1")
        if not self.privacy_grid:
            raise ConfigError("the privacy grid is empty")
        for eps, delta in self.privacy_grid:
            PrivacyParams(eps, delta)


@dataclass
class ExperimentReport:
    rows: list[dict]
    metadata: dict = field(default_factory=dict)

    def to_csv(self, include_wallclock: bool = True) -> str:
        buf = io.StringIO()
        cols = CSV_COLUMNS if include_wallclock else [c for c in CSV_COLUMNS if c != "wallclock_ms"]
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(cols)
        for row in self.rows:
            writer.writerow([_fmt(row[c]) for c in cols])
        return buf.getvalue()

    def write(self, path: str):
        with open(path, "w", newline="") as fh:
            fh.write(self.to_csv())

    @property
    def dominance_failures(self) -> list[dict]:
        return [r for r in self.rows if r["trials"] >= 100 and r["bound_ratio"] > 1.0]


def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def strip_wallclock(csv_text: str) -> str:
    """The CSV with the wall-clock column removed, for byte comparisons."""
    rows = list(csv.reader(io.StringIO(csv_text)))
    if not rows:
        return ""
    drop = rows[0].index("wallclock_ms")
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    for row in rows:
        writer.writerow(row[:drop] + row[drop + 1 :])
    return out.getvalue()


def _population_minimizer(obj, dist: DataDistribution):
    if isinstance(obj, TightSensitivityInstance) and dist.symmetric:
        return np.zeros(obj.d)
    if isinstance(obj, QuadraticMeanObjective) and dist.symmetric:
        return np.zeros(obj.d)
    raise Unsupported("population minimizer is only known for symmetric data on quadratic instances")


def run_experiment(config: ExperimentConfig) -> ExperimentReport:
    """Sweep the privacy grid and estimate excess risk at each point."""
    obj, dist = build_instance(config.objective)
    data_seed = config.seed if config.data_seed is None else config.data_seed
    X = dist.sample(obj.spec.n, derive_rng(data_seed, 10**6))
    rows = []
    for k, (eps, delta) in enumerate(config.privacy_grid):
        privacy = PrivacyParams(eps, delta)
        start = time.perf_counter()
        setup = prepare_route(obj, X, privacy, config.route, config.method, config.mode, config.force)
        if config.mode is Mode.POPULATION:
            w_pop = _population_minimizer(obj, dist)
            make = lambda data: prepare_route(obj, data, privacy, config.route, config.method, config.mode, config.force).release  # noqa: E731
            est = estimate_population_loss(make, obj, dist, obj.spec.n, config.trials, config.holdout, config.seed, w_pop, key=k, workers=config.workers)
        else:
            est = estimate_excess_risk(setup.release, setup.risk_objective, X, config.trials, config.seed, key=k, workers=config.workers)
        elapsed = (time.perf_counter() - start) * 1e3
        s = obj.spec
        rows.append({
            "route": config.route.value if config.mode is Mode.EMPIRICAL else f"{config.route.value}-population",
            "eps": float(eps), "delta": float(delta), "n": s.n, "d": s.d,
            "L": float(s.L), "mu": float(s.mu), "beta": float(s.beta), "R": float(s.R),
            "lambda": float(setup.lam), "alpha": float(setup.alpha), "T": int(setup.T),
            "trials": est.trials, "mc_mean": est.mean, "mc_std": est.std,
            "ci99_upper": float(est.ci99_upper), "theory_bound": float(setup.bound),
            "bound_ratio": float(est.ci99_upper / setup.bound) if setup.bound > 0 else math.inf,
            "wallclock_ms": round(elapsed, 3), "seed": config.seed,
        })
    meta = {"git": git_revision(), "seed": config.seed, "route": config.route.value, "mode": config.mode.value, "objective": dict(config.objective)}
    report = ExperimentReport(rows, meta)
    if config.output:
        report.write(config.output)
    return report


def load_config(path: str) -> ExperimentConfig:
    """Read an INI-style file with [objective], [privacy], [mechanism] and [experiment]."""
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    parser.optionxform = str  # keep L and R distinct from l and r
    try:
        with open(path) as fh:
            parser.read_file(fh)
    except (OSError, configparser.Error) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    for section in ("objective", "privacy", "mechanism", "experiment"):
        if not parser.has_section(section):
            raise ConfigError(f"config is missing the [{section}] section")
    try:
        eps_list = _floats(parser.get("privacy", "eps"))
        delta_list = _floats(parser.get("privacy", "delta", fallback="0"))
        mech = parser["mechanism"]
        exp = parser["experiment"]
        method = mech.get("method")
        return ExperimentConfig(
            objective=dict(parser["objective"]),
            route=mech.get("route", "sc"),
            privacy_grid=[(e, dl) for dl in delta_list for e in eps_list],
            trials=exp.getint("trials", 1000),
            seed=exp.getint("seed", 0),
            output=exp.get("output"),
            mode=exp.get("mode", "empirical"),
            method=method,
            force=_as_bool(mech.get("force", "false")),
            holdout=exp.getint("holdout", 10_000),
            data_seed=exp.getint("data_seed") if "data_seed" in exp else parser["objective"].getint("data_seed"),
            workers=exp.getint("workers", 1),
        )
    except (ValueError, configparser.Error) as exc:
        raise ConfigError(str(exc)) from exc


# ------------------------------------------------------------------ verify

def verification_suite(seed: int, quick: bool = False) -> list[ExperimentConfig]:
    """The shipped instance suite: every route on an instance inside its regime."""
    trials = 200 if quick else 1000
    return [
        ExperimentConfig({"kind": "tight", "n": 1, "d": 2, "mu": 1, "L": 1, "erm": "false"}, Route.SC, [(e, 0.0) for e in (2, 4, 8, 16)], trials, seed),
        ExperimentConfig({"kind": "tight", "n": 200, "d": 2, "mu": 1, "L": 1}, Route.SC, [(2.0, 0.0), (2.0, 1e-3)], trials, seed),
        ExperimentConfig({"kind": "quadratic", "n": 200, "d": 5, "beta": 1, "kappa": 10, "R": 1}, Route.SMOOTH_SC, [(4.0, 0.0), (8.0, 0.0), (4.0, 1e-3)], trials, seed),
        ExperimentConfig({"kind": "absdev", "n": 2000, "d": 1, "R": 1, "shift": "0.3", "scale": 0.5}, Route.CONVEX, [(1.0, 0.0), (4.0, 0.0)], trials, seed, method=Method.EXACT),
        ExperimentConfig({"kind": "logistic", "n": 1000, "d": 2, "R": 4, "teacher": "1 -0.5", "label_noise": 0.25}, Route.SMOOTH_CONVEX, [(2.0, 0.0), (2.0, 1e-3)], trials, seed),
        ExperimentConfig({"kind": "tilted", "n": 100, "d": 2, "beta": 1, "R": 1, "tau": 0.25}, Route.TERM, [(2.0, 0.0)], trials, seed),
        ExperimentConfig({"kind": "adversarial", "n": 100, "d": 2, "mu": 1, "rho": 0.2, "R": 2, "shift": "0.8 0.4", "scale": 0.1}, Route.ADVERSARIAL, [(1.0, 0.0), (4.0, 0.0)], trials, seed),
        ExperimentConfig({"kind": "tight", "n": 200, "d": 2, "mu": 1, "L": 1}, Route.SC, [(1.0, 0.0)], max(100, trials // 5), seed, mode=Mode.POPULATION, holdout=2000),
    ]


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str


def invariant_checks(seed: int) -> list[CheckResult]:
    """Quick closed-form checks that run before the dominance sweep."""
    out = []
    rng = derive_rng(seed, 1)
    spec = noise.calibrate(PrivacyParams(1.0), 1.0, 3)
    z = noise.sample(spec, rng, size=100_000)
    norms = np.linalg.norm(z, axis=1)
    rel = abs(norms.mean() / 3.0 - 1.0)
    out.append(CheckResult("gamma-norm mean radius", rel <= 0.02, f"relative error {rel:.4f}"))
    rel2 = abs((norms**2).mean() / 12.0 - 1.0)
    out.append(CheckResult("gamma-norm second moment", rel2 <= 0.03, f"relative error {rel2:.4f}"))
    probes = np.zeros((1000, 3))
    probes[:, 0] = np.linspace(-50, 50, 1000)
    ratio = noise.privacy_ratio_check(spec, 1.0, probes)
    out.append(CheckResult("log-density ratio at full shift", ratio <= 1.0 + 1e-9, f"max ratio {ratio:.12f}"))
    obj = TightSensitivityInstance(1.0, 1.0, n=10, d=2)
    base = np.zeros((10, 2))
    a, b = base.copy(), base.copy()
    a[-1, 0], b[-1, 0] = 1.0, -1.0
    gap = float(np.linalg.norm(obj.exact_minimizer(Dataset(a)) - obj.exact_minimizer(Dataset(b))))
    out.append(CheckResult("minimizer gap on the tight pair", abs(gap - 0.1) <= 1e-9, f"gap {gap:.12f}"))
    return out


def verify(seed: int = 0, quick: bool = False) -> tuple[ExperimentReport, list[CheckResult]]:
    checks = invariant_checks(seed)
    rows = []
    for config in verification_suite(seed, quick):
        rows.extend(run_experiment(config).rows)
    return ExperimentReport(rows, {"git": git_revision(), "seed": seed, "quick": quick}), checks


def load_objective(path: str) -> tuple[object, DataDistribution, Dataset]:
    """Instance, distribution and a seeded training set from a config's [objective] section.

    The data seed is ``data_seed`` in [objective], then [experiment], then 0.
    """
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    parser.optionxform = str  # keep L and R distinct from l and r
    try:
        with open(path) as fh:
            parser.read_file(fh)
    except (OSError, configparser.Error) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not parser.has_section("objective"):
        raise ConfigError("config is missing the [objective] section")
    params = dict(parser["objective"])
    seed = params.pop("data_seed", None)
    if seed is None and parser.has_section("experiment"):
        seed = parser["experiment"].get("data_seed", parser["experiment"].get("seed"))
    try:
        seed = int(seed or 0)
    except ValueError as exc:
        raise ConfigError(f"bad data seed {seed!r}") from exc
    obj, dist = build_instance(params)
    return obj, dist, dist.sample(obj.spec.n, derive_rng(seed, 10**6))
