import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ultrajet.core import DEFAULT_GRID, GeometricGrid, Verdict
from ultrajet.weights import (DerivativeError, WeightFunction, asymptotic_verdict,
                              check_weight_axioms, eval_weight, infer_t_min, log_weight,
                              omega_alpha, power_weight, shifted_linear, weight_derivative)

H, F, I = Verdict.HOLDS, Verdict.FAILS, Verdict.INCONCLUSIVE
AXIOMS = ("increasing", "moderate_growth", "log_small", "phi_convex", "concave")


def test_eval_examples():
    assert eval_weight(WeightFunction.parse("t^0.5"), 4.0) == 2.0
    w = WeightFunction.parse("t/(log t)^2", t_min=math.e ** 2)
    assert eval_weight(w, math.e ** 2) == pytest.approx(math.e ** 2 / 4, rel=1e-15)
    assert eval_weight(WeightFunction.parse("t^0.5"), 0.25) == 0.25
    assert eval_weight(w, 0.0) == 0.0


def test_ramp_is_continuous_at_t_min():
    w = omega_alpha(2)
    left, right = w(np.nextafter(w.t_min, 0)), w(w.t_min)
    assert left == pytest.approx(right, rel=1e-14)


def test_domain_error_reports_t():
    w = WeightFunction.parse("log(t-5)", t_min=1.0)
    with pytest.raises(ValueError, match="t=3.0"):
        eval_weight(w, 3.0)


def test_truncation():
    w = power_weight(0.5).truncated(1.0)
    assert w(1.0) == 0.0 and w(4.0) == 2.0
    assert w.log_eval(np.array([0.0]))[0] == -np.inf


@pytest.mark.parametrize("w,t,expected,rel", [
    (power_weight(0.5), 4.0, 0.25, 1e-15),
    (omega_alpha(2), math.e ** 4, 1 / 32, 1e-14),
    (WeightFunction.parse("t^0.5"), 4.0, 0.25, 1e-8),
    (WeightFunction.parse("t/(log t)^2", t_min=math.e ** 3), math.e ** 4, 1 / 32, 1e-8),
])
def test_derivative_examples(w, t, expected, rel):
    assert weight_derivative(w, t) == pytest.approx(expected, rel=rel)


def test_derivative_error_is_diagnosed():
    w = WeightFunction.parse("exp(exp(t))")
    with pytest.raises(DerivativeError, match="step"):
        weight_derivative(w, 800.0)


CATALOG = [power_weight(0.5), power_weight(1.0), power_weight(0.25), omega_alpha(1),
           omega_alpha(2), omega_alpha(3), shifted_linear()]


@pytest.mark.parametrize("w", CATALOG, ids=lambda w: w.name)
def test_analytic_and_numeric_derivatives_agree(w):
    t = np.geomspace(10, 1e10, 50)
    t = t[t > w.t_min * 1.01]
    numeric = WeightFunction(w.expr, None, w.t_min, w.name)
    assert np.allclose(weight_derivative(numeric, t), weight_derivative(w, t), rtol=1e-6, atol=0)


@pytest.mark.parametrize("w", CATALOG[:-1], ids=lambda w: w.name)
def test_ramp_keeps_catalog_weights_concave(w):
    rep = check_weight_axioms(w, GeometricGrid(1e-2, 1e12, 300))
    assert rep.concave.verdict is H
    assert rep.increasing.verdict is H


# closed-form expectations on the default grid [10, 1e12]; the ramp of
# t/(log t)^a meets the curve at e^(a+1) with a drop in slope of s -> w(e^s),
# so phi_convex fails whenever that junction lies inside the grid
EXPECTED = [
    (power_weight(0.5), (H, H, H, H, H)),
    (power_weight(1.0), (H, H, H, H, H)),
    (shifted_linear(), (H, H, H, H, H)),
    (omega_alpha(1), (H, H, H, H, H)),
    (omega_alpha(2), (H, H, H, F, H)),
    (omega_alpha(3), (H, H, H, F, H)),
    (log_weight(), (H, H, F, H, H)),
    (WeightFunction.parse("t^2"), (H, H, H, H, F)),
    (WeightFunction.parse("exp(t)"), (H, F, H, I, I)),
]


@pytest.mark.parametrize("w,verdicts", EXPECTED, ids=lambda x: getattr(x, "name", ""))
def test_axiom_table(w, verdicts):
    rep = check_weight_axioms(w)
    assert tuple(getattr(rep, a).verdict for a in AXIOMS) == verdicts
    assert all(getattr(rep, a).grid == DEFAULT_GRID for a in AXIOMS)
    for a, v in zip(AXIOMS, verdicts):
        if v is F:
            assert getattr(rep, a).witnesses


def test_omega_alpha_above_junction_is_a_weight():
    rep = check_weight_axioms(omega_alpha(2), GeometricGrid(100, 1e12, 200))
    assert rep.is_weight and rep.concave.holds


def test_moderate_growth_constant():
    rep = check_weight_axioms(power_weight(0.5))
    assert rep.c2 == pytest.approx(math.sqrt(2), rel=1e-12)


def test_exp_witnesses_blow_up():
    rep = check_weight_axioms(WeightFunction.parse("exp(t)"))
    ratios = [r for _, r in rep.moderate_growth.witnesses]
    assert ratios[-1] == math.inf or ratios[-1] > 1e100


def test_grid_too_small():
    with pytest.raises(ValueError):
        check_weight_axioms(power_weight(0.5), GeometricGrid(10, 100, 8))


@pytest.mark.parametrize("f,g,rel,verdict", [
    ("log(t)", "t^0.5", "little_o", H),
    ("t^0.6", "t^0.5", "big_O", F),
    ("t^0.5", "3*t^0.5 + 7", "equivalent", H),
    ("t^0.5", "t^0.6", "little_o", H),
    ("t", "t^0.5", "equivalent", F),
])
def test_asymptotic_examples(f, g, rel, verdict):
    v = asymptotic_verdict(WeightFunction.parse(f), WeightFunction.parse(g), rel)
    assert v.verdict is verdict
    if verdict is F:
        assert v.witnesses


def test_big_o_witness_at_grid_top():
    v = asymptotic_verdict(WeightFunction.parse("t^0.6"), WeightFunction.parse("t^0.5"), "big_O")
    assert max(t for t, _ in v.witnesses) == pytest.approx(1e12)


@pytest.mark.parametrize("w", CATALOG, ids=lambda w: w.name)
def test_equivalence_is_reflexive(w):
    assert asymptotic_verdict(w, w, "equivalent").holds


def test_unknown_relation():
    with pytest.raises(ValueError):
        asymptotic_verdict(power_weight(0.5), power_weight(0.5), "theta")


@pytest.mark.parametrize("text,expected", [
    ("t^0.5", 1.0), ("t", 1.0), ("t/(log t)^2", math.e ** 3), ("t/(log t)^3", math.e ** 4),
])
def test_infer_t_min(text, expected):
    # grid spacing is about 1.2%, and the inferred point never precedes the true start
    got = infer_t_min(text)
    assert expected <= got <= expected * 1.012


def test_infer_t_min_rejects_convex_growth():
    assert infer_t_min("exp(t)") is None


@given(st.floats(0.05, 1.0), st.floats(1e-3, 1e9))
@settings(max_examples=60, deadline=None)
def test_power_weights_are_monotone_and_vanish_at_zero(beta, t):
    w = power_weight(beta)
    assert w(0.0) == 0.0
    assert w(t) <= w(t * 1.5)


@given(st.floats(1.0, 4.0), st.floats(-3.0, 30.0))
@settings(max_examples=60, deadline=None)
def test_log_eval_matches_eval(alpha, lt):
    w = omega_alpha(alpha)
    direct = w(math.exp(lt))
    assert math.exp(w.log_eval(np.array([lt]))[0]) == pytest.approx(direct, rel=1e-12)
