import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import TERM_SENS_N8
from privopt.core import Dataset, FunctionClassSpec, InvalidArgument, Unsupported
from privopt.objectives import TightSensitivityInstance
from privopt.sensitivity import (
    SensitivityBound,
    class_sensitivity,
    inflate_for_approximate_minimizer,
    regularized_sensitivity,
    term_sensitivity,
    tilt_constant,
)


def spec(**kw):
    base = dict(L=1.0, mu=0.5, beta=0.0, R=1.0, n=100, d=2, erm=True)
    base.update(kw)
    return FunctionClassSpec(**base)


def test_class_sensitivity_examples():
    assert float(class_sensitivity(spec(erm=False))) == pytest.approx(4.0)
    assert float(class_sensitivity(spec())) == pytest.approx(0.04)
    with pytest.raises(Unsupported):
        class_sensitivity(spec(mu=0.0))


def test_tight_pair_meets_half_the_class_bound():
    mu, L, n = 2.0, 3.0, 7
    obj = TightSensitivityInstance(mu, L, n=n, d=3)
    base = np.zeros((n, 3))
    a, b = base.copy(), base.copy()
    a[-1, 0], b[-1, 0] = 1.0, -1.0
    gap = np.linalg.norm(obj.exact_minimizer(Dataset(a)) - obj.exact_minimizer(Dataset(b)))
    assert gap == pytest.approx(L / (mu * n), abs=1e-12)
    assert gap <= float(class_sensitivity(obj.spec)) + 1e-12


def test_regularized_sensitivity_examples():
    s = spec(mu=0.0, erm=False)
    assert float(regularized_sensitivity(s, 1.0)) == pytest.approx(4.0)
    assert float(regularized_sensitivity(spec(mu=0.0, n=10), 1.0)) == pytest.approx(0.4)
    assert float(regularized_sensitivity(s, 1e9)) == pytest.approx(2.0, rel=1e-6)
    with pytest.raises(InvalidArgument):
        regularized_sensitivity(s, 0.0)


def test_term_sensitivity_examples():
    s = spec(mu=1.0, n=8)
    assert float(term_sensitivity(s, 1.0, 0.0, 1.0)) == pytest.approx(TERM_SENS_N8, abs=1e-12)
    assert float(term_sensitivity(s, 1e-9, 0.0, 1.0)) == pytest.approx(2 / 8, rel=1e-6)
    assert float(term_sensitivity(spec(mu=1.0, n=2), 5.0, 0.0, 1.0)) == pytest.approx(2.0)


def test_tilt_constant_domain():
    assert tilt_constant(0.5, 1.0, 3.0) == pytest.approx(math.e)
    with pytest.raises(InvalidArgument):
        tilt_constant(0.5, 3.0, 1.0)


def test_inflation_examples():
    assert float(inflate_for_approximate_minimizer(SensitivityBound(1.0), 0.5, 1.0)) == pytest.approx(3.0)
    assert float(inflate_for_approximate_minimizer(SensitivityBound(0.04), 1e-4, 0.5)) == pytest.approx(0.08)
    assert float(inflate_for_approximate_minimizer(SensitivityBound(0.3), 0.0, 1.0)) == pytest.approx(0.3)


@settings(max_examples=100, deadline=None)
@given(st.floats(0.1, 10), st.floats(0.01, 10), st.integers(1, 1000), st.booleans())
def test_class_sensitivity_monotone(L, mu, n, erm):
    s = spec(L=L, mu=mu, n=n, erm=erm)
    bigger = spec(L=2 * L, mu=mu, n=n, erm=erm)
    assert float(class_sensitivity(bigger)) == pytest.approx(2 * float(class_sensitivity(s)))
    if erm:
        assert float(class_sensitivity(s)) <= float(class_sensitivity(s.with_(erm=False)))
