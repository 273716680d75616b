"""Shared types, validation and Euclidean-ball geometry.

Every stochastic routine in the package takes an explicit
``numpy.random.Generator``; nothing here touches global random state.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace
from typing import Any

import numpy as np


class InvalidArgument(ValueError):
    """A caller passed a value outside an operation's domain."""


class Unsupported(TypeError):
    """The object lacks a capability the operation needs."""


class RegimeError(ValueError):
    """Parameters fall outside the regime where a guarantee holds."""


class ConvergenceError(RuntimeError):
    """An iterative solver stopped before meeting its target."""

    def __init__(self, message: str, achieved: float):
        super().__init__(f"{message} (achieved {achieved:.3e})")
        self.achieved = achieved


def compute_c_delta(delta: float) -> float:
    """sqrt(log(2 / (sqrt(16 delta + 1) - 1))) for 0 < delta < 1/2."""
    if not (0.0 < delta < 0.5):
        raise InvalidArgument(f"delta must lie in (0, 1/2), got {delta}")
    inner = 2.0 / (math.sqrt(16.0 * delta + 1.0) - 1.0)
    # inner > 1 on the open interval, but guard rounding near 1/2
    return math.sqrt(max(math.log(inner), 0.0))


@dataclass(frozen=True)
class PrivacyParams:
    epsilon: float
    delta: float = 0.0
    c_delta: float = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not (math.isfinite(self.epsilon) and self.epsilon > 0):
            raise InvalidArgument(f"epsilon must be positive and finite, got {self.epsilon}")
        if not (0.0 <= self.delta < 0.5):
            raise InvalidArgument(f"delta must lie in [0, 1/2), got {self.delta}")
        c = compute_c_delta(self.delta) if self.delta > 0 else 0.0
        object.__setattr__(self, "c_delta", c)

    @property
    def pure(self) -> bool:
        return self.delta == 0.0


@dataclass(frozen=True)
class FunctionClassSpec:
    """Constants describing the loss class on the ball B(0, R).

    ``mu = 0`` means merely convex and ``beta = 0`` means non-smooth.
    """

    L: float
    mu: float
    beta: float
    R: float
    n: int
    d: int
    erm: bool = True

    @property
    def kappa(self) -> float:
        if self.mu > 0 and self.beta > 0:
            return self.beta / self.mu
        return math.inf

    @property
    def smooth(self) -> bool:
        return self.beta > 0

    @property
    def strongly_convex(self) -> bool:
        return self.mu > 0

    def with_(self, **changes: Any) -> "FunctionClassSpec":
        return replace(self, **changes)


def validate_spec(spec: FunctionClassSpec) -> FunctionClassSpec:
    """Check a spec; raise on hard violations and warn on soft ones."""
    for name in ("L", "R"):
        value = getattr(spec, name)
        if not (math.isfinite(value) and value > 0):
            raise InvalidArgument(f"{name} must be positive, got {value}")
    for name in ("n", "d"):
        value = getattr(spec, name)
        if int(value) != value or value < 1:
            raise InvalidArgument(f"{name} must be a positive integer, got {value}")
    if spec.mu < 0 or spec.beta < 0:
        raise InvalidArgument("mu and beta must be nonnegative")
    if spec.mu > 0 and spec.beta > 0 and spec.beta < spec.mu:
        raise InvalidArgument(f"beta ({spec.beta}) < mu ({spec.mu}): condition number below 1")
    if spec.beta > 0 and spec.L > 2 * spec.beta * spec.R * (1 + 1e-12):
        warnings.warn(
            f"L={spec.L} exceeds 2*beta*R={2 * spec.beta * spec.R}; "
            "smooth bounds usually assume L <= 2 beta R",
            stacklevel=2,
        )
    return spec


def as_vector(w, d: int | None = None) -> np.ndarray:
    """Coerce to a finite 1-D float array, optionally checking its length."""
    arr = np.asarray(w, dtype=float)
    if arr.ndim == 0:
        arr = arr.reshape(1)
    if arr.ndim != 1:
        raise InvalidArgument(f"expected a vector, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidArgument("vector has non-finite entries")
    if d is not None and arr.shape[0] != d:
        raise InvalidArgument(f"expected dimension {d}, got {arr.shape[0]}")
    return arr


def project_ball(w, R: float) -> np.ndarray:
    """Euclidean projection onto the closed ball of radius R at the origin."""
    if not R > 0:
        raise InvalidArgument(f"R must be positive, got {R}")
    w = as_vector(w)
    norm = float(np.linalg.norm(w))
    if norm <= R:
        return w.copy()
    return w * (R / norm)


def project_rows(V: np.ndarray, radius: float) -> np.ndarray:
    """Project each row of V onto the ball of the given radius (radius 0 allowed)."""
    norms = np.linalg.norm(V, axis=1, keepdims=True)
    if radius <= 0:
        return np.zeros_like(V)
    scale = np.minimum(1.0, radius / np.maximum(norms, 1e-300))
    return V * scale


@dataclass(frozen=True)
class Dataset:
    """n records, stored as an (n, p) array, plus optional labels."""

    points: np.ndarray
    labels: np.ndarray | None = None

    def __post_init__(self):
        pts = np.array(self.points, dtype=float)
        if pts.ndim == 1:
            pts = pts.reshape(-1, 1)
        if pts.ndim != 2 or pts.shape[0] < 1:
            raise InvalidArgument("a dataset needs at least one record")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)
        if self.labels is not None:
            lab = np.array(self.labels, dtype=float).reshape(-1)
            if lab.shape[0] != pts.shape[0]:
                raise InvalidArgument("labels and points differ in length")
            lab.setflags(write=False)
            object.__setattr__(self, "labels", lab)

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def __len__(self) -> int:
        return self.n

    def mean(self) -> np.ndarray:
        return self.points.mean(axis=0)


def adjacent_dataset(X: Dataset, index: int, replacement, label: float | None = None) -> Dataset:
    """Copy of X with record ``index`` replaced; every other record is untouched."""
    if not (0 <= index < X.n):
        raise InvalidArgument(f"index {index} out of range for n={X.n}")
    points = X.points.copy()
    points[index] = np.asarray(replacement, dtype=float)
    labels = None
    if X.labels is not None:
        labels = X.labels.copy()
        if label is not None:
            labels[index] = label
    return Dataset(points, labels)


def differing_records(X: Dataset, Y: Dataset) -> int:
    """Number of slots where two equal-size datasets differ."""
    if X.n != Y.n:
        raise InvalidArgument("datasets differ in size")
    diff = np.any(X.points != Y.points, axis=1)
    if X.labels is not None and Y.labels is not None:
        diff |= X.labels != Y.labels
    return int(diff.sum())


def make_rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)
