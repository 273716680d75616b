"""L2-sensitivity bounds for minimizers of strongly convex losses."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

from .core import FunctionClassSpec, InvalidArgument, Unsupported


class BoundKind(str, enum.Enum):
    EXACT = "exact"
    CLASS = "class"


@dataclass(frozen=True)
class SensitivityBound:
    value: float
    kind: BoundKind = BoundKind.CLASS
    rule: str = ""

    def __post_init__(self):
        if not (self.value >= 0 and math.isfinite(self.value)):
            raise InvalidArgument(f"sensitivity must be finite and nonnegative, got {self.value}")

    def __float__(self) -> float:
        return float(self.value)


def class_sensitivity(spec: FunctionClassSpec) -> SensitivityBound:
    """2L/mu, divided by n for averaged losses."""
    if spec.mu <= 0:
        raise Unsupported("class sensitivity needs mu > 0; regularize first")
    value = 2.0 * spec.L / spec.mu
    if spec.erm:
        value /= spec.n
    return SensitivityBound(value, BoundKind.CLASS, "strongly-convex")


def regularized_sensitivity(spec: FunctionClassSpec, lam: float) -> SensitivityBound:
    """2(L + lam R)/lam, divided by n for averaged losses."""
    if not lam > 0:
        raise InvalidArgument(f"lambda must be positive, got {lam}")
    value = 2.0 * (spec.L + lam * spec.R) / lam
    if spec.erm:
        value /= spec.n
    return SensitivityBound(value, BoundKind.CLASS, "regularized")


def tilt_constant(tau: float, a_R: float, A_R: float) -> float:
    """exp(tau (A_R - a_R)) for losses bounded in [a_R, A_R] on the ball."""
    if A_R < a_R:
        raise InvalidArgument("upper loss bound A_R is below the lower bound a_R")
    if tau <= 0:
        raise InvalidArgument("tau must be positive")
    return math.exp(tau * (A_R - a_R))


def term_sensitivity(spec: FunctionClassSpec, tau: float, a_R: float, A_R: float) -> SensitivityBound:
    """(2L/mu) * min(1, C_tau / n)."""
    if spec.mu <= 0:
        raise Unsupported("tilted sensitivity needs mu > 0")
    c_tau = tilt_constant(tau, a_R, A_R)
    value = 2.0 * spec.L / spec.mu * min(1.0, c_tau / spec.n)
    return SensitivityBound(value, BoundKind.CLASS, "tilted")


def inflate_for_approximate_minimizer(base: SensitivityBound, alpha: float, mu_eff: float) -> SensitivityBound:
    """Account for releasing an alpha-suboptimal point instead of the minimizer.

    An alpha-suboptimal point of a mu-strongly convex function lies within
    sqrt(2 alpha / mu) of the minimizer, once for each of the two datasets.
    """
    if alpha < 0:
        raise InvalidArgument("alpha must be nonnegative")
    if not mu_eff > 0:
        raise InvalidArgument("mu_eff must be positive")
    value = float(base) + 2.0 * math.sqrt(2.0 * alpha / mu_eff)
    return SensitivityBound(value, BoundKind.CLASS, f"{base.rule}+inflated" if base.rule else "inflated")
