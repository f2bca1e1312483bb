import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ultrajet.quadrature import adaptive_simpson, log_integral


@pytest.mark.parametrize("f,a,b,exact", [
    (np.sin, 0.0, math.pi, 2.0),
    (lambda x: x ** 4, 0.0, 2.0, 32 / 5),
    (lambda x: np.exp(-x), 0.0, 30.0, 1 - math.exp(-30)),
    (lambda x: 1 / (1 + x * x), -50.0, 50.0, 2 * math.atan(50.0)),
])
def test_simpson(f, a, b, exact):
    val, err, evals = adaptive_simpson(f, a, b, tol=1e-12)
    assert val == pytest.approx(exact, rel=1e-10)
    assert evals > 0 and err >= 0


def test_simpson_gives_up_on_infinite_values():
    val, _, _ = adaptive_simpson(lambda x: np.where(x > 0.5, np.inf, 1.0), 0.0, 1.0)
    assert val == math.inf


@pytest.mark.parametrize("q", [1.5, 2.0, 3.0, 7.0])
def test_power_tail(q):
    # int_0^inf (1+v)^-q dv = 1/(q-1); tail handled by the model past the cutoff
    res = log_integral(lambda v: -q * np.log1p(v), tol=1e-10, x_offset=1.0)
    assert not res.diverges
    assert res.value == pytest.approx(1 / (q - 1), rel=1e-7)


@pytest.mark.parametrize("q", [0.5, 1.0])
def test_power_tail_divergence(q):
    res = log_integral(lambda v: -q * np.log1p(v), x_offset=1.0)
    assert res.diverges and not res.finite


def test_exponential_decay_is_cut_early():
    res = log_integral(lambda v: -2.0 * v, tol=1e-10)
    assert res.value == pytest.approx(0.5, rel=1e-10)
    assert res.cutoff < 1000


def test_log_value_of_huge_integrand():
    # exp(800 - v): value e^800 is out of float range, its log is not
    res = log_integral(lambda v: 800.0 - v, tol=1e-10)
    assert res.log_value == pytest.approx(800.0, abs=1e-9)


@given(st.floats(0.2, 5.0), st.floats(-20.0, 20.0))
@settings(max_examples=40, deadline=None)
def test_scaled_exponential(rate, shift):
    res = log_integral(lambda v: shift - rate * v, tol=1e-10)
    assert res.log_value == pytest.approx(shift - math.log(rate), abs=1e-8)
