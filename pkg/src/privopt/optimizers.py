"""Non-private first-order solvers and their iteration contracts.

Each solver returns an :class:`OptResult`. ``iterations_for`` turns a target
suboptimality into the iteration count each method needs.
"""

from __future__ import annotations

import csv
import enum
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass, field

import numpy as np

from .core import ConvergenceError, Dataset, InvalidArgument, Unsupported, as_vector, project_ball
from .objectives import AdversarialObjective, Objective


class Method(str, enum.Enum):
    EXACT = "exact"
    SUBGRADIENT = "subgradient"
    SGD = "sgd"
    AGD = "agd"
    KATYUSHA = "katyusha"
    EXTRAGRADIENT = "extragradient"

    @property
    def randomized(self) -> bool:
        return self in (Method.SGD, Method.KATYUSHA, Method.EXTRAGRADIENT)


@dataclass(frozen=True)
class OptimizerConfig:
    method: Method
    T: int = 0
    target_alpha: float | None = None
    w0: tuple[float, ...] | None = None
    max_iters: int = 200_000
    trace_path: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "method", Method(self.method))
        if self.T < 0:
            raise InvalidArgument("T must be nonnegative")
        if self.target_alpha is not None and not self.target_alpha > 0:
            raise InvalidArgument("target_alpha must be positive")


@dataclass
class OptResult:
    w_out: np.ndarray
    iterations: int
    value: float
    trace: list[float] | None = None
    v_out: np.ndarray | None = None
    gap: float | None = None
    gap_trace: list[float] | None = field(default=None, repr=False)


def _start(obj: Objective, w0) -> np.ndarray:
    if w0 is None:
        return np.zeros(obj.d)
    return project_ball(as_vector(w0, obj.d), obj.spec.R)


def _check_finite(g: np.ndarray, t: int, trace):
    if not np.all(np.isfinite(g)):
        raise ConvergenceError(f"non-finite gradient at iteration {t}", math.nan if not trace else trace[-1])


# ---------------------------------------------------------------- contracts

def subgradient_iterations(L: float, mu: float, alpha: float) -> int:
    """T = 2 L^2 / (mu alpha), rounded up."""
    return max(1, math.ceil(2.0 * L * L / (mu * alpha) - 1e-9))


def agd_iterations(kappa: float, mu: float, beta: float, R: float, alpha: float) -> int:
    """T = sqrt(kappa) log((mu + beta) R^2 / (2 alpha)), rounded up and at least 1."""
    ratio = (mu + beta) * R * R / (2.0 * alpha)
    if ratio <= 1:
        return 1
    return max(1, math.ceil(math.sqrt(kappa) * math.log(ratio)))


def katyusha_epochs(n: int, mu: float, beta: float, gap0: float, alpha: float, constant: float = 4.0) -> int:
    """Epochs of length 2n for the expected gap to fall from gap0 to alpha."""
    m = 2 * n
    if m * mu / beta <= 0.75:
        per_epoch = m * math.log1p(math.sqrt(mu / (6.0 * beta * m)))
    else:
        per_epoch = math.log(1.5)
    need = math.log(constant * gap0 / alpha)
    return max(1, math.ceil(need / per_epoch))


def iterations_for(method: Method, spec, alpha: float) -> int:
    method = Method(method)
    if method in (Method.SUBGRADIENT, Method.SGD):
        return subgradient_iterations(spec.L, spec.mu, alpha)
    if method is Method.AGD:
        return agd_iterations(spec.kappa, spec.mu, spec.beta, spec.R, alpha)
    if method is Method.KATYUSHA:
        return katyusha_epochs(spec.n, spec.mu, spec.beta, spec.L * spec.R, alpha)
    return 0


# ---------------------------------------------------------------- methods

def subgradient_method(obj: Objective, X: Dataset, T: int, w0=None, record: bool = False) -> OptResult:
    """Projected subgradient descent with steps 2/(mu (t+1)); returns the best iterate.

    Ties go to the earliest iterate.
    """
    mu, R = obj.spec.mu, obj.spec.R
    if mu <= 0:
        raise Unsupported("the subgradient schedule needs mu > 0")
    w = _start(obj, w0)
    best_w, best_val = w, math.inf
    trace = [] if record else None
    for t in range(T):
        g = obj.subgradient(w, X)
        _check_finite(g, t, trace)
        w = project_ball(w - 2.0 / (mu * (t + 1)) * g, R)
        val = obj.eval(w, X)
        if record:
            trace.append(val)
        if val < best_val:
            best_w, best_val = w, val
    if T == 0:
        best_val = obj.eval(w, X)
    return OptResult(best_w, T, best_val, trace)


def stochastic_subgradient(obj: Objective, X: Dataset, T: int, rng: np.random.Generator, w0=None, record: bool = False) -> OptResult:
    """Projected SGD with uniform sampling; returns the 2t/(T(T+1))-weighted average."""
    spec = obj.spec
    if not spec.erm:
        raise Unsupported("stochastic subgradients need an averaged loss")
    if spec.mu <= 0:
        raise Unsupported("the SGD schedule needs mu > 0")
    mu, R = spec.mu, spec.R
    w = _start(obj, w0)
    avg = np.zeros_like(w)
    trace = [] if record else None
    idx = rng.integers(X.n, size=T)
    for t in range(1, T + 1):
        g = obj.per_sample_gradient(w, X, int(idx[t - 1]))
        step = 2.0 / (mu * t)
        w = w - step * g
        norm = math.sqrt(float(w @ w))
        if norm > R:
            w *= R / norm
        avg += (2.0 * t / (T * (T + 1))) * w
        if record:
            trace.append(obj.eval(w, X))
    out = avg if T > 0 else w
    return OptResult(out, T, obj.eval(out, X), trace)


def agd(obj: Objective, X: Dataset, T: int, w0=None, record: bool = False) -> OptResult:
    """Projected accelerated gradient with constant momentum (sqrt(k)-1)/(sqrt(k)+1)."""
    spec = obj.spec
    if spec.beta <= 0 or spec.mu <= 0:
        raise Unsupported("AGD needs mu > 0 and beta > 0")
    beta, R = spec.beta, spec.R
    root = math.sqrt(spec.kappa)
    q = (root - 1.0) / (root + 1.0)
    y = _start(obj, w0)
    w = y
    trace = [] if record else None
    for t in range(T):
        g = obj.subgradient(w, X)
        _check_finite(g, t, trace)
        y_next = project_ball(w - g / beta, R)
        w = (1.0 + q) * y_next - q * y
        y = y_next
        if record:
            trace.append(obj.eval(y, X))
    return OptResult(y, T, obj.eval(y, X), trace)


def katyusha(obj: Objective, X: Dataset, epochs: int, rng: np.random.Generator, w0=None, record: bool = False) -> OptResult:
    """Accelerated variance-reduced SGD for (1/n) sum g_i + (mu/2)||w||^2.

    The decomposition takes g_i = f_i - (mu/2)||w||^2, which is convex and
    (beta - mu)-smooth when each per-sample loss is mu-strongly convex and
    beta-smooth. Iterates are not projected.
    """
    spec = obj.spec
    if not spec.erm or spec.mu <= 0 or spec.beta <= 0:
        raise Unsupported("Katyusha needs an averaged, smooth, strongly convex loss")
    n, mu = X.n, spec.mu
    # smoothness of g_i, assuming every per-sample loss is mu-strongly convex
    beta = max(spec.beta - mu, 1e-12 * spec.beta)
    m = 2 * n
    tau2 = 0.5
    tau1 = min(math.sqrt(m * mu / (3.0 * beta)), 0.5)
    gamma = 1.0 / (3.0 * tau1 * beta)
    # (1 + gamma mu)^j overflows for large gamma, so normalize in log space
    log_w = np.arange(m) * math.log1p(gamma * mu)
    weights = np.exp(log_w - log_w.max())
    weights /= weights.sum()

    anchor = np.zeros(spec.d) if w0 is None else as_vector(w0, spec.d).copy()
    y = anchor.copy()
    z = anchor.copy()
    trace = [] if record else None
    for _ in range(epochs):
        full = obj.subgradient(anchor, X) - mu * anchor
        nxt = np.zeros_like(anchor)
        for j, i in enumerate(rng.integers(n, size=m)):
            x = tau1 * z + tau2 * anchor + (1.0 - tau1 - tau2) * y
            est = full + obj.per_sample_gradient(x, X, i) - obj.per_sample_gradient(anchor, X, i) - mu * (x - anchor)
            z = (z - gamma * est) / (1.0 + gamma * mu)
            y = (3.0 * beta * x - est) / (3.0 * beta + mu)
            nxt += weights[j] * y
        anchor = nxt
        if record:
            trace.append(obj.eval(anchor, X))
    return OptResult(anchor, epochs * m, obj.eval(anchor, X), trace)


def run(config: OptimizerConfig, obj: Objective, X: Dataset, rng: np.random.Generator | None = None) -> OptResult:
    """Dispatch on ``config.method``; writes a trace file when requested."""
    record = config.trace_path is not None
    method = config.method
    if method is Method.EXACT:
        w = obj.exact_minimizer(X)
        result = OptResult(w, 0, obj.eval(w, X), [] if record else None)
    elif method is Method.SUBGRADIENT:
        result = subgradient_method(obj, X, config.T, config.w0, record)
    elif method is Method.AGD:
        result = agd(obj, X, config.T, config.w0, record)
    elif method in (Method.SGD, Method.KATYUSHA):
        if rng is None:
            raise InvalidArgument(f"{method.value} needs a random generator")
        solver = stochastic_subgradient if method is Method.SGD else katyusha
        result = solver(obj, X, config.T, rng, config.w0, record)
    else:
        raise Unsupported("extragradient runs on saddle problems; use extragradient_saddle")
    if record:
        write_trace(config.trace_path, result.trace)
    return result


def write_trace(path: str, values, gaps=None) -> None:
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh)
        out.writerow(["iter", "value", "gap"])
        for t, v in enumerate(values or [], start=1):
            gap = "" if gaps is None else repr(gaps[t - 1])
            out.writerow([t, repr(float(v)), gap])


# ---------------------------------------------------------------- saddles

class SaddleProblem(ABC):
    """min over w, max over v of value(w, v), convex-concave on compact sets."""

    @abstractmethod
    def value(self, w, v) -> float: ...

    @abstractmethod
    def grad_w(self, w, v) -> np.ndarray: ...

    @abstractmethod
    def grad_v(self, w, v) -> np.ndarray:
        """Ascent direction for v in the solver's metric."""

    @abstractmethod
    def project_w(self, w) -> np.ndarray: ...

    @abstractmethod
    def project_v(self, v) -> np.ndarray: ...

    @abstractmethod
    def max_value(self, w) -> float: ...

    @abstractmethod
    def min_value(self, v) -> float: ...

    @abstractmethod
    def start(self) -> tuple[np.ndarray, np.ndarray]: ...

    def step_constant(self, rng: np.random.Generator | None = None) -> float:
        return 1.0


class BilinearSaddle(SaddleProblem):
    """value(w, v) = w.v on the box [-1, 1]^d for both players."""

    def __init__(self, d: int = 1, start=(0.7, -0.4)):
        self.d = d
        self._start = (np.full(d, start[0]), np.full(d, start[1]))

    def value(self, w, v):
        return float(w @ v)

    def grad_w(self, w, v):
        return np.asarray(v, dtype=float)

    def grad_v(self, w, v):
        return np.asarray(w, dtype=float)

    def project_w(self, w):
        return np.clip(w, -1.0, 1.0)

    def project_v(self, v):
        return np.clip(v, -1.0, 1.0)

    def max_value(self, w):
        return float(np.abs(w).sum())

    def min_value(self, v):
        return -float(np.abs(v).sum())

    def start(self):
        return self._start[0].copy(), self._start[1].copy()


class QuadraticSaddle(SaddleProblem):
    """(mu/2)||w||^2 + c<w, v> - (mu_v/2)||v||^2 + <a, w> + <b, v> on two balls."""

    def __init__(self, mu: float, c: float, mu_v: float, a=0.0, b=0.0, d: int = 1, R_w: float = 10.0, R_v: float = 10.0):
        if mu <= 0 or mu_v <= 0:
            raise InvalidArgument("mu and mu_v must be positive")
        self.mu, self.c, self.mu_v = float(mu), float(c), float(mu_v)
        self.a = np.broadcast_to(np.asarray(a, dtype=float), (d,)).copy()
        self.b = np.broadcast_to(np.asarray(b, dtype=float), (d,)).copy()
        self.d, self.R_w, self.R_v = d, R_w, R_v

    def stationary_point(self) -> tuple[np.ndarray, np.ndarray]:
        """Solve mu w + c v + a = 0 and c w - mu_v v + b = 0."""
        K = np.array([[self.mu, self.c], [self.c, -self.mu_v]])
        sol = np.linalg.solve(K, -np.vstack([self.a, self.b]))
        return sol[0], sol[1]

    def value(self, w, v):
        return float(0.5 * self.mu * w @ w + self.c * w @ v - 0.5 * self.mu_v * v @ v + self.a @ w + self.b @ v)

    def grad_w(self, w, v):
        return self.mu * w + self.c * v + self.a

    def grad_v(self, w, v):
        return self.c * w - self.mu_v * v + self.b

    def project_w(self, w):
        return project_ball(w, self.R_w)

    def project_v(self, v):
        return project_ball(v, self.R_v)

    def max_value(self, w):
        v = self.project_v((self.c * w + self.b) / self.mu_v)
        return self.value(w, v)

    def min_value(self, v):
        w = self.project_w(-(self.c * v + self.a) / self.mu)
        return self.value(w, v)

    def start(self):
        return np.full(self.d, 0.5 * self.R_w), np.full(self.d, -0.5 * self.R_v)

    def step_constant(self, rng=None):
        return max(self.mu, self.mu_v, abs(self.c))


class _FixedPerturbation(Objective):
    def __init__(self, adv: AdversarialObjective, V, X):
        self.adv, self.V, self.X = adv, V, X
        self.spec = adv.spec

    def eval(self, w, X):
        return self.adv.value(w, self.V, self.X)

    def subgradient(self, w, X):
        return self.adv.grad_w(w, self.V, self.X)


class AdversarialSaddle(SaddleProblem):
    """An adversarial objective bound to a dataset.

    Perturbations are (n, p) arrays. Each row gets its own per-sample
    gradient, which amounts to measuring V with the norm ||V||_F / sqrt(n).
    """

    def __init__(self, adv: AdversarialObjective, X: Dataset, inner_tol: float = 1e-10):
        self.adv, self.X, self.inner_tol = adv, X, inner_tol

    def value(self, w, v):
        return self.adv.value(w, v, self.X)

    def grad_w(self, w, v):
        return self.adv.grad_w(w, v, self.X)

    def grad_v(self, w, v):
        return self.adv.grad_v(w, v, self.X)

    def project_w(self, w):
        return project_ball(w, self.adv.spec.R)

    def project_v(self, v):
        return self.adv.project_v(v)

    def max_value(self, w):
        return self.adv.adversarial_value(w, self.X)

    def min_value(self, v):
        try:
            w = self.adv.primal_min(v, self.X)
        except Unsupported:
            inner = _FixedPerturbation(self.adv, v, self.X)
            s = self.adv.spec
            T = agd_iterations(s.kappa, s.mu, s.beta, 2 * s.R, self.inner_tol)
            w = agd(inner, self.X, T).w_out
        return self.value(w, v)

    def start(self):
        return np.zeros(self.adv.d), np.zeros_like(self.X.points)

    def step_constant(self, rng=None):
        s = self.adv.spec
        cross = self.adv.cross
        if cross is None:
            cross = self._estimate_cross(rng or np.random.default_rng(0))
        return max(s.beta, self.adv.beta_v, cross)

    def _estimate_cross(self, rng, pairs: int = 32) -> float:
        s, X = self.adv.spec, self.X
        scale = math.sqrt(X.n)
        best = 0.0
        for _ in range(pairs):
            w1, w2 = (project_ball(rng.normal(size=s.d), s.R) for _ in range(2))
            V1, V2 = (self.project_v(rng.normal(size=X.points.shape)) for _ in range(2))
            dw = np.linalg.norm(w1 - w2)
            dv = np.linalg.norm(V1 - V2) / scale
            if dw > 0:
                best = max(best, np.linalg.norm(self.grad_v(w1, V1) - self.grad_v(w2, V1)) / scale / dw)
            if dv > 0:
                best = max(best, np.linalg.norm(self.grad_w(w1, V1) - self.grad_w(w1, V2)) / dv)
        return best


def duality_gap(problem: SaddleProblem | AdversarialObjective, w, v, X: Dataset | None = None) -> float:
    """max_v value(w, v) - min_w value(w, v_hat), clipped at zero."""
    if isinstance(problem, AdversarialObjective):
        problem = AdversarialSaddle(problem, X)
    return max(0.0, problem.max_value(w) - problem.min_value(v))


def extragradient_saddle(
    problem: SaddleProblem | AdversarialObjective,
    target_alpha: float,
    max_iters: int = 100_000,
    rng: np.random.Generator | None = None,
    X: Dataset | None = None,
    check_every: int = 5,
    patience: int = 40,
    record: bool = False,
) -> OptResult:
    """Projected extragradient until the duality gap is at most target_alpha.

    The step starts at 1/(2 max(beta, beta_v, cross)) and halves whenever
    the best gap fails to improve by 1% over ``patience`` checks.
    """
    if isinstance(problem, AdversarialObjective):
        if X is None:
            raise InvalidArgument("an adversarial objective needs its dataset")
        problem = AdversarialSaddle(problem, X, inner_tol=0.01 * target_alpha)
    if not target_alpha > 0:
        raise InvalidArgument("target_alpha must be positive")
    eta = 1.0 / (2.0 * problem.step_constant(rng))
    w, v = problem.start()
    w, v = problem.project_w(w), problem.project_v(v)
    best = (w, v, duality_gap(problem, w, v))
    gaps = [best[2]] if record else None
    stale, mark = 0, best[2]
    for t in range(1, max_iters + 1):
        if best[2] <= target_alpha:
            return OptResult(best[0], t - 1, problem.max_value(best[0]), None, best[1], best[2], gaps)
        w_half = problem.project_w(w - eta * problem.grad_w(w, v))
        v_half = problem.project_v(v + eta * problem.grad_v(w, v))
        w = problem.project_w(w - eta * problem.grad_w(w_half, v_half))
        v = problem.project_v(v + eta * problem.grad_v(w_half, v_half))
        if t % check_every:
            continue
        gap = duality_gap(problem, w, v)
        if record:
            gaps.append(gap)
        if gap < best[2]:
            best = (w, v, gap)
        if best[2] < 0.99 * mark:
            stale, mark = 0, best[2]
        else:
            stale += 1
            if stale >= patience:
                eta *= 0.5
                stale, mark = 0, best[2]
    if best[2] <= target_alpha:
        return OptResult(best[0], max_iters, problem.max_value(best[0]), None, best[1], best[2], gaps)
    raise ConvergenceError(f"duality gap above {target_alpha} after {max_iters} iterations", best[2])
