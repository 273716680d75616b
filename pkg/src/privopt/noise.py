"""Calibrated noise laws for output perturbation.

Two laws are supported. With delta = 0 the noise has density proportional
to exp(-eps * ||z|| / sens), which means ||z|| ~ Gamma(d, sens / eps) and a
uniformly random direction. With delta > 0 the noise is isotropic Gaussian
with the standard deviation returned by :func:`gaussian_sigma`.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .core import InvalidArgument, PrivacyParams, Unsupported, as_vector, compute_c_delta


class NoiseKind(str, enum.Enum):
    GAMMA_NORM = "gamma"
    GAUSSIAN = "gauss"


@dataclass(frozen=True)
class NoiseSpec:
    kind: NoiseKind
    d: int
    scale: float
    epsilon: float
    delta: float
    sensitivity: float

    def __post_init__(self):
        if self.d < 1:
            raise InvalidArgument("noise dimension must be positive")
        if not (math.isfinite(self.scale) and self.scale >= 0):
            raise InvalidArgument(f"noise scale must be finite and nonnegative, got {self.scale}")

    @property
    def calibration(self) -> tuple[float, float, float]:
        """The (epsilon, delta, sensitivity) triple this spec was built from."""
        return (self.epsilon, self.delta, self.sensitivity)

    def expected_sq_norm(self) -> float:
        if self.kind is NoiseKind.GAMMA_NORM:
            return self.d * (self.d + 1) * self.scale**2
        return self.d * self.scale**2

    def expected_norm(self) -> float:
        if self.kind is NoiseKind.GAMMA_NORM:
            return self.d * self.scale
        # mean of a chi distribution with d degrees of freedom, times sigma
        return self.scale * math.sqrt(2) * math.exp(math.lgamma((self.d + 1) / 2) - math.lgamma(self.d / 2))


def c_delta(delta: float) -> float:
    return compute_c_delta(delta)


def gaussian_sigma(privacy: PrivacyParams, sensitivity: float) -> float:
    """Per-coordinate sigma = (c + sqrt(c^2 + eps)) * sens / (sqrt(2) * eps)."""
    if privacy.delta == 0:
        raise Unsupported("delta = 0 calls for the Gamma-norm law, not Gaussian noise")
    if sensitivity < 0:
        raise InvalidArgument("sensitivity must be nonnegative")
    c, eps = privacy.c_delta, privacy.epsilon
    return (c + math.sqrt(c * c + eps)) * sensitivity / (math.sqrt(2.0) * eps)


def classical_gaussian_sigma(privacy: PrivacyParams, sensitivity: float) -> float:
    """The textbook sqrt(2 log(1.25/delta)) * sens / eps, kept for comparison only."""
    return math.sqrt(2.0 * math.log(1.25 / privacy.delta)) * sensitivity / privacy.epsilon


def calibrate(privacy: PrivacyParams, sensitivity: float, d: int) -> NoiseSpec:
    """Noise spec for releasing a d-vector of the given L2 sensitivity."""
    if sensitivity < 0 or not math.isfinite(sensitivity):
        raise InvalidArgument(f"sensitivity must be finite and nonnegative, got {sensitivity}")
    if privacy.pure:
        kind, scale = NoiseKind.GAMMA_NORM, sensitivity / privacy.epsilon
    else:
        kind, scale = NoiseKind.GAUSSIAN, gaussian_sigma(privacy, sensitivity)
    return NoiseSpec(kind, int(d), scale, privacy.epsilon, privacy.delta, sensitivity)


def sample(spec: NoiseSpec, rng: np.random.Generator, size: int | None = None) -> np.ndarray:
    """One draw of shape (d,), or ``size`` draws of shape (size, d)."""
    shape = (spec.d,) if size is None else (size, spec.d)
    g = rng.standard_normal(shape)
    if spec.kind is NoiseKind.GAUSSIAN:
        return spec.scale * g
    norms = np.linalg.norm(g, axis=-1, keepdims=True)
    radius = rng.gamma(spec.d, spec.scale, size=None if size is None else (size, 1))
    return g / norms * radius


def log_density(spec: NoiseSpec, t) -> float:
    """Unnormalized log-density; only differences are meaningful."""
    t = as_vector(t, spec.d)
    if spec.kind is NoiseKind.GAMMA_NORM:
        if spec.scale == 0:
            raise InvalidArgument("degenerate noise has no density")
        return -float(np.linalg.norm(t)) / spec.scale
    return -float(t @ t) / (2.0 * spec.scale**2)


def privacy_ratio_check(spec: NoiseSpec, shift: float, probes) -> float:
    """Largest |log p(t - c1) - log p(t - c2)| over probes, with ||c1 - c2|| = shift.

    The centers are the origin and ``shift * e_1``.
    """
    if spec.kind is not NoiseKind.GAMMA_NORM:
        raise Unsupported("pointwise ratio checks only apply to the Gamma-norm law")
    if shift < 0 or shift > spec.sensitivity * (1 + 1e-12):
        raise InvalidArgument(f"shift {shift} exceeds the calibrated sensitivity {spec.sensitivity}")
    probes = np.atleast_2d(np.asarray(probes, dtype=float))
    if probes.shape[1] != spec.d:
        raise InvalidArgument("probe dimension does not match the noise dimension")
    other = np.zeros(spec.d)
    other[0] = shift
    worst = 0.0
    for t in probes:
        worst = max(worst, abs(log_density(spec, t) - log_density(spec, t - other)))
    return worst
