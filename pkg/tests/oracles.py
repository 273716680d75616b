"""Independent closed forms and frozen reference values used by the tests.

Nothing here imports the package; each oracle is written from the defining
formula so a shared mistake cannot hide in both places.
"""

import math

import numpy as np

# frozen values, evaluated once at full precision
C_DELTA_ONE_NINTH = 1.048147073968205  # sqrt(log 3)
C_DELTA_ONE_SIXTEENTH = 1.2547990945085545  # sqrt(log(2 / (sqrt 2 - 1)))
SIGMA_EPS1_DELTA_ONE_NINTH = 1.7655083574312072
TILTED_TWO_LOSSES = 0.6201145069582775  # log((1 + e) / 2)
TERM_SENS_N8 = 0.6795704571147613  # 2 e / 8
CONVEX_LAMBDA_EN100 = 0.09950371902099892  # 1 / sqrt(101)


def c_delta(delta):
    return math.sqrt(math.log(2.0 / (math.sqrt(16.0 * delta + 1.0) - 1.0)))


def gaussian_sigma(eps, delta, sens):
    c = c_delta(delta)
    return (c + math.sqrt(c * c + eps)) * sens / (math.sqrt(2.0) * eps)


def gamma_norm_second_moment(d, sens, eps):
    return d * (d + 1) * (sens / eps) ** 2


def gaussian_second_moment(d, sigma):
    return d * sigma**2


def project(w, R):
    w = np.asarray(w, dtype=float)
    n = np.linalg.norm(w)
    return w if n <= R else w * (R / n)


def tight_minimizer(mu, L, points):
    return -(L / (2.0 * mu)) * np.mean(points, axis=0)


def ridge_solution(A, b, lam):
    n, d = A.shape
    return np.linalg.solve(A.T @ A / n + lam * np.eye(d), A.T @ b / n)


def abs_dev_regularized_minimizer(x, lam, grid_size=200_001):
    """Brute-force 1-D argmin of (lam/2) w^2 + mean |w - x_i| on a fine grid, then refined."""
    x = np.asarray(x, dtype=float)
    lo, hi = min(x.min(), -1.0 / lam), max(x.max(), 1.0 / lam)
    grid = np.linspace(lo, hi, grid_size)
    vals = 0.5 * lam * grid**2 + np.abs(grid[:, None] - x[None, :]).mean(axis=1)
    k = int(np.argmin(vals))
    a, b = grid[max(k - 1, 0)], grid[min(k + 1, grid_size - 1)]
    for _ in range(200):  # ternary search on the convex bracket
        m1, m2 = a + (b - a) / 3, b - (b - a) / 3
        f1 = 0.5 * lam * m1**2 + np.abs(m1 - x).mean()
        f2 = 0.5 * lam * m2**2 + np.abs(m2 - x).mean()
        if f1 <= f2:
            b = m2
        else:
            a = m1
    return 0.5 * (a + b)


def tilted_value(losses, tau):
    losses = np.asarray(losses, dtype=float)
    top = losses.max()
    return top + math.log(np.mean(np.exp(tau * (losses - top)))) / tau


def finite_difference(fn, w, h=1e-5):
    w = np.asarray(w, dtype=float)
    out = np.zeros_like(w)
    for i in range(w.size):
        e = np.zeros_like(w)
        e[i] = h
        out[i] = (fn(w + e) - fn(w - e)) / (2 * h)
    return out


def linear_adversarial_value(w, points, mu, rho):
    """(mu/2)||w||^2 + <w, mean x> + (rho/2)||w|| for the linear loss with mu_v = 0."""
    w = np.asarray(w, dtype=float)
    return 0.5 * mu * w @ w + w @ np.mean(points, axis=0) + 0.5 * rho * np.linalg.norm(w)


def agd_contract(kappa, mu, beta, R, alpha):
    return math.ceil(math.sqrt(kappa) * math.log((mu + beta) * R * R / (2 * alpha)))
