"""Low-dimensional baselines: grid exponential mechanism and localization.

These sample on an explicit grid, so they are only offered for d <= 2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import noise
from .core import Dataset, InvalidArgument, PrivacyParams, RegimeError, Unsupported, as_vector, project_ball
from .objectives import Objective
from .sensitivity import class_sensitivity

MIN_RESOLUTION = 64


@dataclass(frozen=True)
class GridSpec:
    """Axis-aligned grid over the ball of ``radius`` around ``center``.

    Points outside ``outer_radius`` (a ball at the origin) are dropped.
    """

    d: int
    resolution: int
    radius: float
    center: tuple[float, ...] | None = None
    outer_radius: float | None = None

    def __post_init__(self):
        if self.d not in (1, 2):
            raise Unsupported("grid sampling is limited to d <= 2")
        if self.resolution < MIN_RESOLUTION:
            raise InvalidArgument(f"resolution must be at least {MIN_RESOLUTION}")
        if not self.radius > 0:
            raise InvalidArgument("grid radius must be positive")
        center = (0.0,) * self.d if self.center is None else tuple(float(c) for c in self.center)
        if len(center) != self.d:
            raise InvalidArgument("center dimension does not match d")
        object.__setattr__(self, "center", center)

    @property
    def spacing(self) -> float:
        return 2.0 * self.radius / (self.resolution - 1)

    def points(self) -> np.ndarray:
        c = np.asarray(self.center)
        axis = np.linspace(-self.radius, self.radius, self.resolution)
        if self.d == 1:
            pts = axis[:, None]
        else:
            gx, gy = np.meshgrid(axis, axis, indexing="ij")
            pts = np.column_stack([gx.ravel(), gy.ravel()])
            pts = pts[np.einsum("ij,ij->i", pts, pts) <= self.radius**2 * (1 + 1e-12)]
        pts = pts + c
        if self.outer_radius is not None:
            keep = np.linalg.norm(pts, axis=1) <= self.outer_radius * (1 + 1e-12)
            if not keep.any():
                # the localized ball can miss every grid node near the boundary
                pts = project_ball(c, self.outer_radius)[None, :]
            else:
                pts = pts[keep]
        return pts


def _values(obj: Objective, X: Dataset, pts: np.ndarray) -> np.ndarray:
    return np.array([obj.eval(p, X) for p in pts])


def exponential_probabilities(obj: Objective, X: Dataset, grid: GridSpec, eps: float, L: float | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Grid points and their selection probabilities, proportional to exp(-eps F / (4 L r))."""
    if grid.d != obj.d:
        raise InvalidArgument("grid dimension does not match the objective")
    if not eps > 0:
        raise InvalidArgument("eps must be positive")
    L = obj.spec.L if L is None else L
    pts = grid.points()
    logits = -eps * _values(obj, X, pts) / (4.0 * L * grid.radius)
    logits -= logits.max()
    probs = np.exp(logits)
    return pts, probs / probs.sum()


def exponential_mechanism(obj: Objective, X: Dataset, grid: GridSpec, eps: float, rng: np.random.Generator, size: int | None = None, L: float | None = None) -> np.ndarray:
    """One grid point (or ``size`` points) drawn from the exponential mechanism."""
    pts, probs = exponential_probabilities(obj, X, grid, eps, L)
    idx = rng.choice(len(pts), size=size, p=probs)
    return pts[idx]


def localization_radius(sensitivity: float, d: int, eps: float, xi: float) -> float:
    """xi * sensitivity * d / eps."""
    return xi * sensitivity * d / eps


def localization(obj: Objective, X: Dataset, eps: float, xi: float, rng: np.random.Generator, resolution: int = 256) -> GridSpec:
    """Shrink the domain to a ball around a privately perturbed minimizer.

    The ball captures the true minimizer with probability at least
    1 - d exp(-xi).
    """
    if not xi > 0:
        raise InvalidArgument("xi must be positive")
    spec = obj.spec
    sens = float(class_sensitivity(spec))
    spec_noise = noise.calibrate(PrivacyParams(eps), sens, spec.d)
    w0 = project_ball(obj.exact_minimizer(X) + noise.sample(spec_noise, rng), spec.R)
    radius = localization_radius(sens, spec.d, eps, xi)
    return GridSpec(spec.d, resolution, radius, tuple(w0), outer_radius=spec.R)


def localization_xi(obj: Objective, eps: float) -> float:
    """log(eps^2 mu R / (d L))."""
    s = obj.spec
    return math.log(eps * eps * s.mu * s.R / (s.d * s.L))


def localization_regime_holds(obj: Objective, eps: float) -> bool:
    s = obj.spec
    return s.d * s.mu * s.R >= 2 * s.L and eps > s.d


@dataclass
class LocalizedDraw:
    w: np.ndarray
    grid: GridSpec
    xi: float
    epsilon_parts: tuple[float, float]
    discretization_error: float

    @property
    def epsilon(self) -> float:
        return sum(self.epsilon_parts)


def exp_plus_localization(obj: Objective, X: Dataset, eps: float, rng: np.random.Generator, resolution: int = 256, force: bool = False) -> LocalizedDraw:
    """Localize with half the budget, then run the exponential mechanism on the rest."""
    if obj.d > 2:
        raise Unsupported("grid sampling is limited to d <= 2")
    if not localization_regime_holds(obj, eps) and not force:
        raise RegimeError("needs d mu R >= 2 L and eps > d")
    xi = localization_xi(obj, eps)
    if not xi > 0:
        raise RegimeError(f"localization parameter xi = {xi:.3g} is not positive")
    half = eps / 2.0
    grid = localization(obj, X, half, xi, rng, resolution)
    w = exponential_mechanism(obj, X, grid, half, rng)
    return LocalizedDraw(as_vector(w), grid, xi, (half, half), grid.spacing * obj.spec.L)
