import json
import math
import pathlib

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ultrajet.conjugate import (ConjugateBoundaryError, check_matrix_growth, double_conjugate,
                                phi_of, weight_matrix, young_conjugate)
from ultrajet.weights import omega_alpha, power_weight, shifted_linear

FROZEN = json.loads((pathlib.Path(__file__).parent / "oracles" / "frozen.json").read_text())


def quad(s):
    return 0.5 * np.asarray(s) ** 2


def kinked(s):
    return np.maximum(0.0, 2 * (np.asarray(s) - 1))


def expm1(s):
    return np.expm1(np.asarray(s))


def shifted_linear_star(y):
    y = np.asarray(y, dtype=float)
    return np.where(y >= 1, y * np.log(np.maximum(y, 1)) - y + 1, 0.0)


def test_closed_forms():
    assert young_conjugate(quad, [1.5]).values[0] == pytest.approx(1.125, abs=1e-12)
    tab = young_conjugate(kinked, [0.0, 1.0, 2.0])
    assert tab.values == pytest.approx([0.0, 1.0, 2.0], abs=1e-10)
    ys = np.linspace(0, 20, 41)
    got = young_conjugate(phi_of(shifted_linear()), ys).values
    assert got == pytest.approx(shifted_linear_star(ys), abs=1e-10)


def test_argmax_is_the_slope():
    tab = young_conjugate(expm1, [2.0, 5.0])
    assert tab.argmax == pytest.approx(np.log([2.0, 5.0]), abs=1e-7)


def test_boundary_error_names_growth():
    with pytest.raises(ConjugateBoundaryError, match="grows too slowly"):
        young_conjugate(lambda s: np.asarray(s, dtype=float), [2.0])
    tab = young_conjugate(lambda s: np.asarray(s, dtype=float), [0.5, 2.0], on_boundary="inf")
    assert tab.values[0] == 0.0 and tab.values[1] == math.inf


def test_rejects_unsorted_grid():
    with pytest.raises(ValueError):
        young_conjugate(quad, [2.0, 1.0])


@pytest.mark.parametrize("case", FROZEN["conjugate_omega2"], ids=lambda c: f"y={c['y']}")
def test_log_weight_conjugate_against_frozen_oracle(case):
    tab = young_conjugate(phi_of(omega_alpha(2).truncated(1.0)), [case["y"]])
    assert tab.values[0] == pytest.approx(case["value"], rel=1e-9)


@pytest.mark.parametrize("phi", [quad, kinked, expm1], ids=["quadratic", "kinked", "expm1"])
def test_involution(phi):
    s = np.linspace(0, 6, 121)
    back = double_conjugate(phi, s)
    scale = 1 + np.max(np.abs(phi(s)))
    assert np.max(np.abs(back.values - phi(s))) <= 1e-6 * scale


def test_biconjugate_is_convex_minorant():
    def concave_kink(s):
        return np.minimum(2 * np.asarray(s), np.asarray(s) + 1)
    s = np.linspace(0, 4, 81)
    back = double_conjugate(concave_kink, s, y_max=3.0)
    assert np.all(back.values <= concave_kink(s) + 1e-9)
    # convex envelope of min(2s, s+1) on [0, inf) is s
    assert back.values == pytest.approx(s, abs=1e-6)


@given(st.lists(st.floats(0, 5), min_size=1, max_size=6), st.lists(st.floats(0, 5), min_size=1, max_size=6))
@settings(max_examples=50, deadline=None)
def test_fenchel_young(ss, ys):
    ys = np.sort(np.array(ys))
    star = young_conjugate(expm1, ys).values
    for s in ss:
        assert np.all(s * ys <= expm1(s) + star + 1e-9)


@given(st.floats(0.5, 3.0))
@settings(max_examples=25, deadline=None)
def test_order_reversal(c):
    ys = np.linspace(0, 8, 17)
    small = young_conjugate(lambda s: 0.5 * np.asarray(s) ** 2, ys).values
    big = young_conjugate(lambda s: 0.5 * (1 + c) * np.asarray(s) ** 2, ys).values
    assert np.all(small >= big - 1e-12)


@pytest.mark.parametrize("phi", [quad, expm1, phi_of(power_weight(0.5).truncated(1.0))],
                         ids=["quadratic", "expm1", "sqrt"])
def test_conjugate_is_monotone_and_convex(phi):
    ys = np.linspace(0, 10, 101)
    v = young_conjugate(phi, ys).values
    assert np.all(np.diff(v) >= -1e-12)
    assert np.all(v[1:-1] <= 0.5 * (v[:-2] + v[2:]) + 1e-9)


def test_weight_matrix_examples():
    m = weight_matrix(shifted_linear(), 1.0, 5)
    assert m.entries[:3] == pytest.approx([1.0, 1.0, 4 / math.e], rel=1e-9)
    assert m.entries[5] == pytest.approx(math.exp(5 * math.log(5) - 4), rel=1e-9)
    assert not m.overflow


@pytest.mark.parametrize("w", [power_weight(0.5), omega_alpha(2), shifted_linear()],
                         ids=["sqrt", "omega_2", "shifted"])
@pytest.mark.parametrize("x", [0.5, 1.0, 3.0])
def test_weight_matrix_normalized_and_log_convex(w, x):
    lw = weight_matrix(w, x, 20).log_entries
    assert lw[0] == 0.0
    assert np.all(lw[1:-1] <= 0.5 * (lw[:-2] + lw[2:]) + 1e-9)


def test_weight_matrix_overflow_flag():
    m = weight_matrix(power_weight(0.5), 1.0, 200)
    assert m.overflow and np.isinf(m.entries[-1]) and np.isfinite(m.log_entries[-1])


def test_weight_matrix_rejects_x():
    with pytest.raises(ValueError):
        weight_matrix(shifted_linear(), 0.0, 3)


def test_matrix_growth_examples():
    g = check_matrix_growth(shifted_linear(), 2.0, 1.0)
    assert g.holds and g.H == 2.0 and g.C <= math.exp(0.5) * (1 + 1e-9)
    g = check_matrix_growth(shifted_linear(), 1.0, 1.0)
    assert g.holds and g.H == 1.0 and g.C == pytest.approx(1.0)
    g = check_matrix_growth(shifted_linear(), 2.0, 1.0, H_values=[1.5])
    assert not g.holds and g.C == math.inf
    assert g.profile[-1] > g.profile[len(g.profile) // 2]
