import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from privopt.core import Dataset, InvalidArgument, Unsupported
from privopt.objectives import (
    AbsoluteDeviationObjective,
    AdversarialValue,
    LeastSquaresObjective,
    LinearAdversarialObjective,
    LogisticObjective,
    QuadraticMeanObjective,
    RegularizedObjective,
    TightSensitivityInstance,
    TiltedObjective,
    term_eval,
    term_gradient,
)


def test_quadratic_identity_minimizer_is_the_mean(rng):
    X = Dataset(rng.uniform(-0.5, 0.5, (30, 3)))
    obj = QuadraticMeanObjective(np.eye(3), 2.0, 1.0, 30)
    np.testing.assert_allclose(obj.exact_minimizer(X), X.mean())
    assert obj.spec.L == 4.0 and obj.spec.mu == 2.0 and obj.spec.beta == 2.0


def test_quadratic_eval_matches_per_sample_mean(rng):
    obj = QuadraticMeanObjective.conditioned(4, 1.5, 9.0, 1.0, 20)
    X = Dataset(rng.uniform(-0.3, 0.3, (20, 4)))
    w = rng.standard_normal(4) * 0.3
    assert obj.eval(w, X) == pytest.approx(np.mean(obj.losses(w, X)), rel=1e-12)
    np.testing.assert_allclose(obj.subgradient(w, X), obj.gradients(w, X).mean(axis=0), atol=1e-14)
    assert obj.spec.kappa == pytest.approx(9.0)


def test_quadratic_rejects_bad_matrix():
    with pytest.raises(InvalidArgument):
        QuadraticMeanObjective(np.array([[1.0, 0.5], [0.0, 1.0]]), 1.0, 1.0, 1)
    with pytest.raises(InvalidArgument):
        QuadraticMeanObjective(2 * np.eye(2), 1.0, 1.0, 1)


def test_tight_instance_minimizers():
    obj = TightSensitivityInstance(1.0, 2.0, n=1, d=2)
    np.testing.assert_allclose(obj.exact_minimizer(Dataset(np.array([[1.0, 0.0]]))), [-1.0, 0.0])
    np.testing.assert_allclose(obj.exact_minimizer(Dataset(np.zeros((4, 2)))), [0.0, 0.0])
    np.testing.assert_allclose(obj.exact_minimizer(Dataset(np.array([[1.0, 0.0]]))), oracles.tight_minimizer(1.0, 2.0, [[1.0, 0.0]]))


@settings(max_examples=50, deadline=None)
@given(st.floats(0.1, 5), st.floats(0.1, 5), st.integers(1, 20))
def test_tight_instance_lipschitz_on_ball(mu, L, n):
    if mu * (L / mu) > 1.5 * L:
        return
    obj = TightSensitivityInstance(mu, L, n=n, d=2)
    R = obj.spec.R
    w = np.array([R, 0.0])
    x = np.array([[1.0, 0.0]])
    assert np.linalg.norm(obj.per_sample_gradient(w, Dataset(x), 0)) <= L * (1 + 1e-12)


def test_abs_dev_median_and_regularized_solution(rng):
    x = rng.normal(0.2, 0.5, 41)
    obj = AbsoluteDeviationObjective(1.0, 41, data_radius=2.0)
    X = Dataset(x.reshape(-1, 1))
    assert obj.exact_minimizer(X)[0] == pytest.approx(np.median(x))
    for lam in (0.05, 0.5, 5.0):
        got = obj.regularized_minimizer(X, lam)[0]
        assert got == pytest.approx(oracles.abs_dev_regularized_minimizer(x, lam), abs=1e-6)


def test_abs_dev_regularized_handles_ties():
    x = np.array([0.0, 0.0, 0.0, 1.0])
    obj = AbsoluteDeviationObjective(1.0, 4)
    got = obj.regularized_minimizer(Dataset(x.reshape(-1, 1)), 0.3)[0]
    assert got == pytest.approx(oracles.abs_dev_regularized_minimizer(x, 0.3), abs=1e-6)


def test_abs_dev_has_no_closed_form_in_two_dimensions():
    obj = AbsoluteDeviationObjective(1.0, 3, d=2)
    with pytest.raises(Unsupported):
        obj.exact_minimizer(Dataset(np.zeros((3, 2))))


def test_ridge_matches_normal_equations(rng):
    A = rng.uniform(-0.5, 0.5, (50, 3))
    b = np.clip(A @ [1.0, -1.0, 0.5] + 0.1 * rng.standard_normal(50), -1, 1)
    X = Dataset(A, b)
    reg = RegularizedObjective(LeastSquaresObjective(2.0, 50, 3), 0.3)
    np.testing.assert_allclose(reg.exact_minimizer(X), oracles.ridge_solution(A, b, 0.3), rtol=1e-10)
    assert reg.spec.mu == pytest.approx(0.3)


def test_logistic_gradient_and_hessian(rng):
    A = rng.uniform(-0.7, 0.7, (40, 2))
    y = np.where(rng.random(40) < 0.5, -1.0, 1.0)
    X = Dataset(A, y)
    obj = LogisticObjective(4.0, 40, 2)
    w = np.array([0.3, -0.8])
    np.testing.assert_allclose(obj.subgradient(w, X), oracles.finite_difference(lambda u: obj.eval(u, X), w), rtol=1e-6, atol=1e-9)
    H = obj.hessian(w, X)
    fd = np.column_stack([oracles.finite_difference(lambda u: obj.subgradient(u, X)[k], w) for k in range(2)])
    np.testing.assert_allclose(H, fd, rtol=1e-5, atol=1e-8)
    with pytest.raises(InvalidArgument):
        obj.eval(w, Dataset(A))


def test_regularized_wrapper_constants():
    inner = AbsoluteDeviationObjective(2.0, 10)
    reg = RegularizedObjective(inner, 0.5)
    assert reg.spec.L == pytest.approx(1.0 + 0.5 * 2.0)
    assert reg.spec.beta == 0.0 and reg.spec.mu == 0.5
    with pytest.raises(InvalidArgument):
        RegularizedObjective(inner, 0.0)


def tilted_instance(n=6, tau=0.5):
    inner = QuadraticMeanObjective(np.eye(2), 1.0, 1.0, n)
    return TiltedObjective(inner, tau)


def test_term_constant_losses():
    obj = tilted_instance()
    X = Dataset(np.tile([0.3, -0.2], (6, 1)))
    w = np.array([0.1, 0.4])
    assert term_eval(obj, w, X) == pytest.approx(obj.inner.losses(w, X)[0], rel=1e-12)
    np.testing.assert_allclose(term_gradient(obj, w, X), obj.inner.gradients(w, X).mean(axis=0), atol=1e-14)


def test_term_two_losses_frozen_value():
    # losses (1/2)(w - x)^2 at w = 0 with x in {0, sqrt 2} give {0, 1}
    inner = QuadraticMeanObjective(np.eye(1), 1.0, 2.0, 2)
    obj = TiltedObjective(inner, 1.0)
    X = Dataset(np.array([[0.0], [np.sqrt(2.0)]]))
    assert term_eval(obj, [0.0], X) == pytest.approx(oracles.TILTED_TWO_LOSSES, abs=1e-12)


def test_term_small_tau_recovers_average(rng):
    obj = tilted_instance(n=30, tau=1e-6)
    X = Dataset(rng.uniform(-0.5, 0.5, (30, 2)))
    w = rng.uniform(-0.5, 0.5, 2)
    assert abs(term_eval(obj, w, X) - obj.inner.eval(w, X)) <= 1e-6


def test_term_large_tau_follows_worst_sample():
    inner = QuadraticMeanObjective(np.eye(1), 1.0, 2.0, 3)
    obj = TiltedObjective(inner, 500.0)
    X = Dataset(np.array([[0.0], [0.1], [1.0]]))
    w = np.array([0.0])
    np.testing.assert_allclose(term_gradient(obj, w, X), inner.gradients(w, X)[2], atol=1e-10)
    assert term_eval(obj, w, X) == pytest.approx(oracles.tilted_value(inner.losses(w, X), 500.0), rel=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.floats(0.01, 5.0), st.integers(0, 10_000))
def test_term_gradient_matches_finite_differences(tau, seed):
    rng = np.random.default_rng(seed)
    obj = tilted_instance(n=8, tau=tau)
    X = Dataset(rng.uniform(-0.6, 0.6, (8, 2)))
    w = rng.uniform(-0.6, 0.6, 2)
    fd = oracles.finite_difference(lambda u: term_eval(obj, u, X), w)
    g = term_gradient(obj, w, X)
    assert np.linalg.norm(g - fd) <= 1e-4 * max(1.0, np.linalg.norm(fd))


def test_tilted_spec_smoothness():
    obj = tilted_instance(tau=0.25)
    assert obj.spec.beta == pytest.approx(1.0 + 2 * obj.inner.spec.L**2 * 0.25)
    assert not obj.spec.erm


def test_adversarial_value_without_adversary_is_clean_loss(rng):
    X = Dataset(rng.uniform(-0.5, 0.5, (10, 2)))
    adv = LinearAdversarialObjective(1.0, 0.0, 2.0, 10, 2)
    w = np.array([0.3, -0.1])
    assert adv.adversarial_value(w, X) == pytest.approx(adv.clean_objective().eval(w, X))


def test_linear_adversarial_closed_form(rng):
    X = Dataset(rng.uniform(-0.5, 0.5, (10, 2)))
    adv = LinearAdversarialObjective(1.0, 0.6, 2.0, 10, 2)
    w = np.array([0.4, 0.2])
    V = adv.best_response(w, X)
    np.testing.assert_allclose(V[0], 0.3 * w / np.linalg.norm(w))
    assert adv.adversarial_value(w, X) == pytest.approx(oracles.linear_adversarial_value(w, X.points, 1.0, 0.6))


def test_linear_adversarial_minimizer_beats_neighbors(rng):
    X = Dataset(rng.normal([0.6, 0.3], 0.1, (20, 2)))
    adv = LinearAdversarialObjective(1.0, 0.4, 2.0, 20, 2)
    G = AdversarialValue(adv)
    w_star = G.exact_minimizer(X)
    base = G.eval(w_star, X)
    for _ in range(50):
        assert G.eval(w_star + 0.05 * rng.standard_normal(2), X) >= base - 1e-12


def test_strongly_concave_best_response_against_grid():
    X = Dataset(np.array([[0.2, -0.1]]))
    adv = LinearAdversarialObjective(1.0, 1.0, 2.0, 1, 2, mu_v=2.0)
    w = np.array([0.5, 0.3])
    v = adv.best_response(w, X)[0]
    axis = np.linspace(-0.5, 0.5, 401)
    gx, gy = np.meshgrid(axis, axis)
    cand = np.column_stack([gx.ravel(), gy.ravel()])
    cand = cand[np.linalg.norm(cand, axis=1) <= 0.5]
    vals = adv.sample_losses(w, X.points + cand, None)
    assert adv.value(w, v[None, :], X) >= vals.max() - 1e-10
    assert np.linalg.norm(cand[np.argmax(vals)] - v) < 0.01


def test_generic_best_response_matches_closed_form(rng):
    X = Dataset(rng.uniform(-0.5, 0.5, (5, 2)))
    adv = LinearAdversarialObjective(1.0, 1.0, 2.0, 5, 2, mu_v=3.0)
    w = np.array([0.9, -0.4])
    generic = super(LinearAdversarialObjective, adv).best_response(w, X, tol=1e-13)
    np.testing.assert_allclose(generic, adv.best_response(w, X), atol=1e-9)
