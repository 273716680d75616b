"""Loss functions and the concrete instances used throughout the package.

An objective is evaluated as ``obj.eval(w, X)`` on a :class:`Dataset`. Its
declared constants live in ``obj.spec``. Objectives that average per-sample
losses also expose ``losses`` and ``per_sample_gradient``.
"""

from __future__ import annotations

import math
from abc import ABC, abstractmethod

import numpy as np
from scipy.special import logsumexp, softmax

from .core import Dataset, FunctionClassSpec, InvalidArgument, Unsupported, as_vector, project_ball, project_rows, validate_spec
from .sensitivity import tilt_constant


class Objective(ABC):
    spec: FunctionClassSpec

    @abstractmethod
    def eval(self, w, X: Dataset) -> float: ...

    @abstractmethod
    def subgradient(self, w, X: Dataset) -> np.ndarray: ...

    def per_sample_gradient(self, w, X: Dataset, i: int) -> np.ndarray:
        raise Unsupported(f"{type(self).__name__} has no per-sample gradients")

    def exact_minimizer(self, X: Dataset) -> np.ndarray:
        raise Unsupported(f"{type(self).__name__} has no closed-form minimizer")

    @property
    def has_exact_minimizer(self) -> bool:
        return False

    @property
    def d(self) -> int:
        return self.spec.d

    def minimum(self, X: Dataset) -> float:
        return self.eval(self.exact_minimizer(X), X)


class ERMObjective(Objective):
    """F(w, X) = (1/n) sum_i f(w, x_i)."""

    @abstractmethod
    def losses(self, w, X: Dataset) -> np.ndarray: ...

    @abstractmethod
    def gradients(self, w, X: Dataset) -> np.ndarray:
        """Per-sample gradients stacked as an (n, d) array."""

    def eval(self, w, X):
        return float(np.mean(self.losses(w, X)))

    def subgradient(self, w, X):
        return self.gradients(w, X).mean(axis=0)

    def per_sample_gradient(self, w, X, i):
        labels = None if X.labels is None else X.labels[i : i + 1]
        return self.gradients(w, Dataset(X.points[i : i + 1], labels))[0]

    def loss_range(self) -> tuple[float, float]:
        """Bounds (a_R, A_R) on a single loss over the ball and the data universe."""
        raise Unsupported(f"{type(self).__name__} does not declare loss bounds")


class QuadraticMeanObjective(ERMObjective):
    """f(w, x) = (beta/2) ||M w - x||^2 with data in B(0, data_radius).

    M must be symmetric positive definite with spectral norm at most 1, so the
    Hessian beta M^2 sits between mu I and beta I.
    """

    def __init__(self, M, beta: float, R: float, n: int, data_radius: float | None = None, erm: bool = True):
        M = np.atleast_2d(np.asarray(M, dtype=float))
        if M.shape[0] != M.shape[1] or not np.allclose(M, M.T):
            raise InvalidArgument("M must be a symmetric square matrix")
        eig = np.linalg.eigvalsh(M)
        if eig[0] <= 0:
            raise InvalidArgument("M must be positive definite")
        if eig[-1] > 1 + 1e-12:
            raise InvalidArgument("M must have spectral norm at most 1")
        if beta <= 0:
            raise InvalidArgument("beta must be positive")
        self.M = M
        self.beta = float(beta)
        self.data_radius = float(R if data_radius is None else data_radius)
        d = M.shape[0]
        mu = self.beta * eig[0] ** 2
        self.spec = validate_spec(FunctionClassSpec(L=2 * self.beta * R, mu=mu, beta=self.beta, R=R, n=n, d=d, erm=erm))

    @classmethod
    def conditioned(cls, d: int, beta: float, kappa: float, R: float, n: int, **kw) -> "QuadraticMeanObjective":
        """Diagonal M whose squared entries span [1/kappa, 1]."""
        if kappa < 1:
            raise InvalidArgument("kappa must be at least 1")
        diag = np.linspace(1.0, 1.0 / math.sqrt(kappa), d) if d > 1 else np.ones(1)
        return cls(np.diag(diag), beta, R, n, **kw)

    def losses(self, w, X):
        r = (self.M @ as_vector(w, self.d)) - X.points
        return 0.5 * self.beta * np.einsum("ij,ij->i", r, r)

    def gradients(self, w, X):
        r = (self.M @ as_vector(w, self.d)) - X.points
        return self.beta * r @ self.M

    def per_sample_gradient(self, w, X, i):
        return self.beta * self.M @ (self.M @ w - X.points[i])

    def eval(self, w, X):
        # exact expansion around the mean keeps this cheap for large n
        w = as_vector(w, self.d)
        mean = X.mean()
        spread = float(np.mean(np.einsum("ij,ij->i", X.points, X.points)) - mean @ mean)
        r = self.M @ w - mean
        return 0.5 * self.beta * (float(r @ r) + spread)

    def subgradient(self, w, X):
        return self.beta * self.M @ (self.M @ as_vector(w, self.d) - X.mean())

    @property
    def has_exact_minimizer(self):
        return True

    def exact_minimizer(self, X):
        return np.linalg.solve(self.M, X.mean())

    has_regularized_minimizer = True

    def regularized_minimizer(self, X, lam: float) -> np.ndarray:
        A = self.beta * self.M @ self.M + lam * np.eye(self.d)
        return np.linalg.solve(A, self.beta * self.M @ X.mean())

    def refined_sensitivity(self) -> float:
        """2 R sqrt(kappa) / n, valid when data live in B(0, R)."""
        s = self.spec
        return 2 * self.data_radius * math.sqrt(s.kappa) / s.n

    def loss_range(self):
        top = np.linalg.norm(self.M, 2) * self.spec.R + self.data_radius
        return 0.0, 0.5 * self.beta * top**2


class TightSensitivityInstance(ERMObjective):
    """f(w, x) = (mu/4)||w||^2 + (L/4) x.w with data in the unit ball.

    The minimizer is -(L / (2 mu)) times the data mean, so swapping e_1 for
    -e_1 moves it by exactly L / (mu n). The Hessian is (mu/2) I, and that is
    the modulus recorded in ``spec.mu``.
    """

    def __init__(self, mu: float, L: float, R: float | None = None, n: int = 1, d: int = 1, erm: bool = True):
        if mu <= 0 or L <= 0:
            raise InvalidArgument("mu and L must be positive")
        R = L / mu if R is None else R
        if R < L / mu * (1 - 1e-12):
            raise InvalidArgument("need R >= L/mu so the minimizer stays in the ball")
        if 0.5 * (mu * R + L / 2) > L * (1 + 1e-12):
            raise InvalidArgument("gradient norm would exceed L on B(0, R); need mu R <= 1.5 L")
        self.mu_param = float(mu)
        self.L_param = float(L)
        self.spec = validate_spec(
            FunctionClassSpec(L=L, mu=mu / 2, beta=mu / 2, R=R, n=n, d=d, erm=erm)
        )

    def losses(self, w, X):
        w = as_vector(w, self.d)
        return 0.25 * self.mu_param * float(w @ w) + 0.25 * self.L_param * (X.points @ w)

    def gradients(self, w, X):
        w = as_vector(w, self.d)
        return 0.5 * self.mu_param * w + 0.25 * self.L_param * X.points

    def per_sample_gradient(self, w, X, i):
        return 0.5 * self.mu_param * w + 0.25 * self.L_param * X.points[i]

    def eval(self, w, X):
        w = as_vector(w, self.d)
        return 0.25 * self.mu_param * float(w @ w) + 0.25 * self.L_param * float(X.mean() @ w)

    def subgradient(self, w, X):
        return 0.5 * self.mu_param * as_vector(w, self.d) + 0.25 * self.L_param * X.mean()

    @property
    def has_exact_minimizer(self):
        return True

    def exact_minimizer(self, X):
        return -(self.L_param / (2 * self.mu_param)) * X.mean()

    def population_minimizer(self, mean_x) -> np.ndarray:
        return -(self.L_param / (2 * self.mu_param)) * np.asarray(mean_x, dtype=float)

    def loss_range(self):
        R = self.spec.R
        return -0.25 * self.L_param * R, 0.25 * self.mu_param * R * R + 0.25 * self.L_param * R


class AbsoluteDeviationObjective(ERMObjective):
    """f(w, x) = ||w - x||, 1-Lipschitz, convex and non-smooth."""

    def __init__(self, R: float, n: int, d: int = 1, data_radius: float | None = None):
        self.data_radius = float(R if data_radius is None else data_radius)
        self.spec = validate_spec(FunctionClassSpec(L=1.0, mu=0.0, beta=0.0, R=R, n=n, d=d, erm=True))

    def losses(self, w, X):
        return np.linalg.norm(X.points - as_vector(w, self.d), axis=1)

    def gradients(self, w, X):
        diff = as_vector(w, self.d) - X.points
        norms = np.linalg.norm(diff, axis=1, keepdims=True)
        return np.divide(diff, norms, out=np.zeros_like(diff), where=norms > 0)

    def per_sample_gradient(self, w, X, i):
        diff = w - X.points[i]
        norm = float(np.linalg.norm(diff))
        return diff / norm if norm > 0 else np.zeros_like(diff)

    @property
    def has_exact_minimizer(self):
        return self.d == 1

    def exact_minimizer(self, X):
        if self.d != 1:
            raise Unsupported("the geometric median has no closed form for d > 1")
        return np.array([float(np.median(X.points[:, 0]))])

    @property
    def has_regularized_minimizer(self):
        return self.d == 1

    def regularized_minimizer(self, X, lam: float) -> np.ndarray:
        """argmin of (lam/2) w^2 + mean |w - x_i| in one dimension, exactly.

        The right derivative lam*w + (#{x <= w} - #{x > w})/n is nondecreasing,
        so the minimizer is found from the first data point where it turns
        nonnegative.
        """
        if self.d != 1:
            raise Unsupported("exact regularized solve is one-dimensional only")
        if lam <= 0:
            raise InvalidArgument("lambda must be positive")
        x = np.sort(X.points[:, 0])
        n = x.size
        # at a repeated value the right derivative counts every copy
        last_copy = np.searchsorted(x, x, side="right")
        right = lam * x + (2.0 * last_copy - n) / n
        hits = np.flatnonzero(right >= 0)
        k = int(hits[0]) if hits.size else n
        below = int(np.searchsorted(x, x[k], side="left")) if k < n else n
        stationary = (n - 2.0 * below) / (n * lam)
        w = stationary if k == n else min(stationary, x[k])
        return np.array([w])

    def loss_range(self):
        return 0.0, self.spec.R + self.data_radius


class LogisticObjective(ERMObjective):
    """f(w, (a, b)) = log(1 + exp(-b a.w)) with ||a|| <= data_radius and b in {-1, 1}."""

    def __init__(self, R: float, n: int, d: int, data_radius: float = 1.0):
        self.data_radius = float(data_radius)
        L = self.data_radius
        beta = self.data_radius**2 / 4
        self.spec = validate_spec(FunctionClassSpec(L=L, mu=0.0, beta=beta, R=R, n=n, d=d, erm=True))

    @staticmethod
    def _labels(X):
        if X.labels is None:
            raise InvalidArgument("logistic loss needs labels")
        return X.labels

    def losses(self, w, X):
        margins = self._labels(X) * (X.points @ as_vector(w, self.d))
        return np.logaddexp(0.0, -margins)

    def gradients(self, w, X):
        b = self._labels(X)
        margins = b * (X.points @ as_vector(w, self.d))
        coef = -b * _sigmoid(-margins)
        return coef[:, None] * X.points

    def per_sample_gradient(self, w, X, i):
        b = X.labels[i]
        a = X.points[i]
        return -b * _sigmoid(-b * float(a @ w)) * a

    def hessian(self, w, X) -> np.ndarray:
        margins = self._labels(X) * (X.points @ as_vector(w, self.d))
        s = _sigmoid(margins)
        weights = s * (1 - s)
        return (X.points * weights[:, None]).T @ X.points / X.n


class LeastSquaresObjective(ERMObjective):
    """f(w, (a, b)) = (1/2)(a.w - b)^2 with ||a|| <= data_radius and |b| <= label_bound.

    Declared merely convex; wrap in :class:`RegularizedObjective` for ridge.
    """

    has_regularized_minimizer = True

    def __init__(self, R: float, n: int, d: int, data_radius: float = 1.0, label_bound: float = 1.0):
        self.data_radius, self.label_bound = float(data_radius), float(label_bound)
        L = data_radius * (data_radius * R + label_bound)
        self.spec = validate_spec(FunctionClassSpec(L=L, mu=0.0, beta=data_radius**2, R=R, n=n, d=d, erm=True))

    def _residual(self, w, X):
        return X.points @ as_vector(w, self.d) - X.labels

    def losses(self, w, X):
        return 0.5 * self._residual(w, X) ** 2

    def gradients(self, w, X):
        return self._residual(w, X)[:, None] * X.points

    def per_sample_gradient(self, w, X, i):
        a = X.points[i]
        return (float(a @ w) - X.labels[i]) * a

    def eval(self, w, X):
        r = self._residual(w, X)
        return 0.5 * float(r @ r) / X.n

    def subgradient(self, w, X):
        return X.points.T @ self._residual(w, X) / X.n

    def regularized_minimizer(self, X, lam: float) -> np.ndarray:
        A = X.points
        return np.linalg.solve(A.T @ A / X.n + lam * np.eye(self.d), A.T @ X.labels / X.n)


def _sigmoid(t):
    return 0.5 * (1.0 + np.tanh(0.5 * t))


class RegularizedObjective(Objective):
    """F(w, X) + (lam/2) ||w||^2."""

    def __init__(self, inner: Objective, lam: float):
        if not lam > 0:
            raise InvalidArgument(f"lambda must be positive, got {lam}")
        self.inner = inner
        self.lam = float(lam)
        s = inner.spec
        self.spec = s.with_(
            L=s.L + lam * s.R,
            mu=s.mu + lam,
            beta=s.beta + lam if s.beta > 0 else 0.0,
        )

    def eval(self, w, X):
        w = as_vector(w, self.d)
        return self.inner.eval(w, X) + 0.5 * self.lam * float(w @ w)

    def subgradient(self, w, X):
        w = as_vector(w, self.d)
        return self.inner.subgradient(w, X) + self.lam * w

    def per_sample_gradient(self, w, X, i):
        return self.inner.per_sample_gradient(w, X, i) + self.lam * w

    def losses(self, w, X):
        w = as_vector(w, self.d)
        return self.inner.losses(w, X) + 0.5 * self.lam * float(w @ w)

    @property
    def has_exact_minimizer(self):
        return getattr(self.inner, "has_regularized_minimizer", False)

    def exact_minimizer(self, X):
        solver = getattr(self.inner, "regularized_minimizer", None)
        if solver is None:
            raise Unsupported(f"{type(self.inner).__name__} has no closed-form regularized minimizer")
        return solver(X, self.lam)


class TiltedObjective(Objective):
    """(1/tau) log((1/n) sum_i exp(tau f(w, x_i))) over an averaged loss f.

    Bounds (a_R, A_R) on f over the ball feed the tilt constant
    exp(tau (A_R - a_R)); they default to ``inner.loss_range()``.
    """

    def __init__(self, inner: ERMObjective, tau: float, a_R: float | None = None, A_R: float | None = None, tau_max: float = 1e3):
        if not (0 < tau <= tau_max):
            raise InvalidArgument(f"tau must lie in (0, {tau_max}], got {tau}")
        self.inner = inner
        self.tau = float(tau)
        if a_R is None or A_R is None:
            try:
                a_R, A_R = inner.loss_range()
            except Unsupported:
                a_R = A_R = None
        self.a_R, self.A_R = a_R, A_R
        s = inner.spec
        beta = s.beta + 2 * s.L**2 * tau if s.beta > 0 else 0.0
        self.spec = s.with_(beta=beta, erm=False)

    @property
    def c_tau(self) -> float:
        if self.a_R is None:
            raise Unsupported("loss bounds are needed for the tilt constant")
        return tilt_constant(self.tau, self.a_R, self.A_R)

    def weights(self, w, X) -> np.ndarray:
        return softmax(self.tau * self.inner.losses(w, X))

    def eval(self, w, X):
        return term_eval(self, w, X)

    def subgradient(self, w, X):
        return term_gradient(self, w, X)


def term_eval(obj: TiltedObjective, w, X: Dataset) -> float:
    losses = obj.inner.losses(w, X)
    return float((logsumexp(obj.tau * losses) - math.log(losses.size)) / obj.tau)


def term_gradient(obj: TiltedObjective, w, X: Dataset) -> np.ndarray:
    return obj.weights(w, X) @ obj.inner.gradients(w, X)


class AdversarialObjective(ABC):
    """H(w, V) = (1/n) sum_i f(w, x_i + v_i, y_i) with each v_i in a ball of diameter rho.

    ``spec`` describes the w-block (uniformly over feasible V). ``beta_v`` and
    ``mu_v`` are the smoothness and strong concavity in each v_i, and
    ``cross`` bounds how fast the gradient in one block moves with the other.
    """

    spec: FunctionClassSpec
    rho: float
    beta_v: float = 0.0
    mu_v: float = 0.0
    cross: float | None = None

    @property
    def radius(self) -> float:
        return 0.5 * self.rho

    @property
    def d(self) -> int:
        return self.spec.d

    @abstractmethod
    def sample_losses(self, w, U: np.ndarray, y) -> np.ndarray: ...

    @abstractmethod
    def sample_grad_w(self, w, U: np.ndarray, y) -> np.ndarray: ...

    @abstractmethod
    def sample_grad_u(self, w, U: np.ndarray, y) -> np.ndarray: ...

    def value(self, w, V, X: Dataset) -> float:
        return float(np.mean(self.sample_losses(w, X.points + V, X.labels)))

    def grad_w(self, w, V, X: Dataset) -> np.ndarray:
        return self.sample_grad_w(w, X.points + V, X.labels).mean(axis=0)

    def grad_v(self, w, V, X: Dataset) -> np.ndarray:
        """Per-sample ascent directions, i.e. n times the partial gradient in V."""
        return self.sample_grad_u(w, X.points + V, X.labels)

    def project_v(self, V: np.ndarray) -> np.ndarray:
        return project_rows(V, self.radius)

    def best_response(self, w, X: Dataset, tol: float = 1e-10, max_iter: int = 10_000) -> np.ndarray:
        """Maximize each sample's loss over its perturbation by projected ascent."""
        V = np.zeros_like(X.points)
        if self.radius == 0:
            return V
        step = 1.0 / max(self.beta_v, 1e-12) if self.beta_v > 0 else self.radius
        for _ in range(max_iter):
            new = self.project_v(V + step * self.grad_v(w, V, X))
            if np.max(np.abs(new - V)) < tol:
                return new
            V = new
        return V

    def adversarial_value(self, w, X: Dataset) -> float:
        """G(w) = max over feasible V of H(w, V)."""
        return self.value(w, self.best_response(w, X), X)

    def primal_min(self, V, X: Dataset) -> np.ndarray:
        """argmin over B(0, R) of H(., V); subclasses may supply a closed form."""
        raise Unsupported(f"{type(self).__name__} has no closed-form primal best response")

    has_adversarial_minimizer = False

    def adversarial_minimizer(self, X: Dataset) -> np.ndarray:
        raise Unsupported(f"{type(self).__name__} has no closed-form robust minimizer")

    @property
    def value_smoothness(self) -> float:
        """Smoothness of G; finite only when the v-block is strongly concave."""
        if self.mu_v > 0 and self.spec.beta > 0 and self.cross is not None:
            return self.spec.beta + self.cross**2 / self.mu_v
        return math.inf

    def value_objective(self) -> "AdversarialValue":
        return AdversarialValue(self)

    def clean_objective(self) -> "CleanLoss":
        """The loss with the adversary removed, H(., 0)."""
        return CleanLoss(self)


class AdversarialValue(Objective):
    """G(w, X) = max_V H(w, V, X) as an ordinary objective, gradients by Danskin."""

    def __init__(self, adv: AdversarialObjective):
        self.adv = adv
        beta = adv.value_smoothness
        self.spec = adv.spec.with_(beta=beta if math.isfinite(beta) else 0.0)

    def eval(self, w, X):
        return self.adv.adversarial_value(w, X)

    def subgradient(self, w, X):
        return self.adv.grad_w(w, self.adv.best_response(w, X), X)

    @property
    def has_exact_minimizer(self):
        return self.adv.has_adversarial_minimizer

    def exact_minimizer(self, X):
        return self.adv.adversarial_minimizer(X)


class CleanLoss(ERMObjective):
    def __init__(self, adv: AdversarialObjective):
        self.adv = adv
        self.spec = adv.spec

    def losses(self, w, X):
        return self.adv.sample_losses(as_vector(w, self.d), X.points, X.labels)

    def gradients(self, w, X):
        return self.adv.sample_grad_w(as_vector(w, self.d), X.points, X.labels)

    @property
    def has_exact_minimizer(self):
        return True

    def exact_minimizer(self, X):
        return self.adv.primal_min(np.zeros_like(X.points), X)


class LinearAdversarialObjective(AdversarialObjective):
    """f(w, u) = (mu/2)||w||^2 + <w, u> - (mu_v/2)||u||^2 with u = x + v.

    With mu_v = 0 the best response is v = (rho/2) w/||w|| and
    G(w) = (mu/2)||w||^2 + <w, mean x> + (rho/2)||w||.
    """

    def __init__(self, mu: float, rho: float, R: float, n: int, d: int, mu_v: float = 0.0, data_radius: float = 1.0):
        if mu < 0 or rho < 0 or mu_v < 0:
            raise InvalidArgument("mu, rho and mu_v must be nonnegative")
        self.mu = float(mu)
        self.rho = float(rho)
        self.mu_v = float(mu_v)
        self.beta_v = float(mu_v)
        self.cross = 1.0
        self.data_radius = float(data_radius)
        L = mu * R + data_radius + 0.5 * rho
        self.spec = FunctionClassSpec(L=L, mu=mu, beta=mu, R=R, n=n, d=d, erm=True)

    def sample_losses(self, w, U, y):
        w = as_vector(w, self.d)
        return 0.5 * self.mu * float(w @ w) + U @ w - 0.5 * self.mu_v * np.einsum("ij,ij->i", U, U)

    def sample_grad_w(self, w, U, y):
        return self.mu * as_vector(w, self.d) + U

    def sample_grad_u(self, w, U, y):
        return as_vector(w, self.d)[None, :] - self.mu_v * U

    def best_response(self, w, X, tol=0.0, max_iter=0):
        w = as_vector(w, self.d)
        if self.radius == 0:
            return np.zeros_like(X.points)
        if self.mu_v > 0:
            return self.project_v(w / self.mu_v - X.points)
        norm = float(np.linalg.norm(w))
        direction = w / norm if norm > 0 else np.zeros_like(w)
        return np.tile(self.radius * direction, (X.n, 1))

    def primal_min(self, V, X):
        shift = (X.points + V).mean(axis=0)
        R = self.spec.R
        if self.mu > 0:
            return project_ball(-shift / self.mu, R)
        norm = float(np.linalg.norm(shift))
        return -R * shift / norm if norm > 0 else np.zeros(self.d)

    @property
    def has_adversarial_minimizer(self):
        return self.mu_v == 0 and self.mu > 0

    def adversarial_minimizer(self, X):
        if self.mu_v > 0 or self.mu == 0:
            raise Unsupported("closed form only for mu > 0 and mu_v = 0")
        mean = X.mean()
        norm = float(np.linalg.norm(mean))
        if norm == 0:
            return np.zeros(self.d)
        r = min(max(0.0, (norm - self.radius) / self.mu), self.spec.R)
        return -r * mean / norm
