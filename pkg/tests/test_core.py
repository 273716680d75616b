import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from privopt.core import (
    Dataset,
    FunctionClassSpec,
    InvalidArgument,
    PrivacyParams,
    adjacent_dataset,
    compute_c_delta,
    differing_records,
    project_ball,
    validate_spec,
)


@pytest.mark.parametrize(
    "w, R, expected",
    [((0.3, 0.4), 1.0, (0.3, 0.4)), ((3.0, 4.0), 1.0, (0.6, 0.8)), ((-6.0, 0.0, 0.0), 2.0, (-2.0, 0.0, 0.0))],
)
def test_project_ball_examples(w, R, expected):
    np.testing.assert_allclose(project_ball(w, R), expected, atol=1e-15)


@settings(max_examples=200, deadline=None)
@given(
    st.lists(st.floats(-1e3, 1e3), min_size=1, max_size=6),
    st.floats(1e-3, 1e3),
)
def test_project_ball_properties(w, R):
    p = project_ball(w, R)
    assert np.linalg.norm(p) <= R * (1 + 1e-12)
    np.testing.assert_allclose(project_ball(p, R), p, rtol=1e-12, atol=1e-12)
    # nonexpansive against the origin, which lies in the ball
    assert np.linalg.norm(p) <= np.linalg.norm(w) + 1e-12


def test_project_ball_rejects_bad_radius():
    with pytest.raises(InvalidArgument):
        project_ball([1.0], 0.0)


def test_adjacent_dataset_examples():
    X = Dataset(np.array([[1.0], [2.0], [3.0]]))
    same = adjacent_dataset(X, 1, [2.0])
    np.testing.assert_array_equal(same.points, X.points)
    swapped = adjacent_dataset(X, 2, [9.0])
    np.testing.assert_array_equal(swapped.points[:, 0], [1.0, 2.0, 9.0])
    assert differing_records(X, swapped) == 1
    assert differing_records(X, same) == 0
    with pytest.raises(InvalidArgument):
        adjacent_dataset(X, 3, [0.0])


def test_dataset_is_read_only():
    X = Dataset(np.zeros((2, 2)))
    with pytest.raises(ValueError):
        X.points[0, 0] = 1.0


def test_validate_spec_examples():
    spec = validate_spec(FunctionClassSpec(L=1, mu=1, beta=2, R=1, n=10, d=3))
    assert spec.kappa == 2
    with pytest.raises(InvalidArgument, match="beta"):
        validate_spec(FunctionClassSpec(L=1, mu=3, beta=2, R=1, n=10, d=3))
    with pytest.raises(InvalidArgument, match="L must be positive"):
        validate_spec(FunctionClassSpec(L=0, mu=1, beta=2, R=1, n=10, d=3))


def test_validate_spec_warns_on_large_lipschitz():
    with pytest.warns(UserWarning):
        validate_spec(FunctionClassSpec(L=10, mu=1, beta=1, R=1, n=1, d=1))


def test_privacy_params_domain():
    assert PrivacyParams(1.0).pure
    assert PrivacyParams(1.0, 0.1).c_delta == pytest.approx(compute_c_delta(0.1))
    for eps, delta in [(0.0, 0.0), (-1.0, 0.0), (math.inf, 0.0), (1.0, 0.5), (1.0, -0.1)]:
        with pytest.raises(InvalidArgument):
            PrivacyParams(eps, delta)


def test_c_delta_near_half_tends_to_zero():
    assert compute_c_delta(0.5 - 1e-12) == pytest.approx(0.0, abs=1e-5)
