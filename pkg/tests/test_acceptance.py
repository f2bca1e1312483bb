"""The ten acceptance criteria, each at its stated tolerance and time limit.

Every criterion prints one ``criterion N: PASS|FAIL`` line, repeated in the
terminal summary so it shows without ``-s``.
"""
import math
import time
from fractions import Fraction

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES
from oracles import brute_jets as brute
from ultrajet.conditions import (check_discrete_condition, check_nonquasianalytic, check_r_strong,
                                 growth_index, kappa)
from ultrajet.conjugate import double_conjugate, phi_of, weight_matrix
from ultrajet.core import Verdict
from ultrajet.jets import (Jet, exp_jet, jet_growth_profile, jet_sups, polynomial_jet,
                           remainder_table)
from ultrajet.pipeline import PipelineConfig, beurling_to_roumieu_pipeline
from ultrajet.reduction import ReductionInput, build_reduction, eval_tilde, nq_tail, validate_reduction
from ultrajet.weights import WeightFunction, omega_alpha, power_weight, shifted_linear

SQRT = power_weight(0.5)


def record(number, checks):
    """Print and store the verdict line, then fail on the first false check."""
    bad = [name for name, ok in checks if not ok]
    line = f"criterion {number:2d}: {'PASS' if not bad else 'FAIL'}" + (f" ({', '.join(bad)})" if bad else "")
    print(line)
    ACCEPTANCE_LINES.append(line)
    assert not bad, line


def timed(fn):
    start = time.perf_counter()
    out = fn()
    return out, time.perf_counter() - start


def test_criterion_01_log_weight_kappa_identity():
    checks = []
    for alpha in (2, 3):
        t = math.exp(30)
        k, secs = timed(lambda: kappa(omega_alpha(alpha), t, tol=1e-8).value)
        ratio = (alpha - 1) * k / omega_alpha(alpha - 1)(t)
        checks += [(f"alpha={alpha} ratio={ratio:.6g}", abs(ratio - 1) <= 0.05),
                   (f"alpha={alpha} {secs:.2f}s", secs < 5)]
    record(1, checks)


def test_criterion_02_strong_but_not_r_strong():
    w2, w1 = omega_alpha(2), omega_alpha(1)
    at_one = check_r_strong(w2, w1, 1.0)
    below = check_r_strong(w2, w1, 0.9)
    vals = [v for *_, v in below.witnesses]
    discrete = check_discrete_condition(w2, w1)
    record(2, [("r=1 holds", at_one.holds),
               ("r=0.9 fails", below.verdict is Verdict.FAILS),
               ("witnesses increase", len(vals) >= 2 and vals == sorted(vals)),
               ("discrete fails", discrete.verdict is Verdict.FAILS)])


def test_criterion_03_growth_indices():
    cases = [(SQRT, SQRT, 1.9, 2.1), (power_weight(1 / 3), power_weight(1 / 3), 2.85, 3.15),
             (omega_alpha(1), omega_alpha(2), 0.95, 1.05)]
    checks = []
    for i, (s, w, lo, hi) in enumerate(cases):
        g, secs = timed(lambda: growth_index(s, w))
        checks += [(f"case {i} gamma={g.gamma:.4g}", lo <= g.gamma <= hi), (f"case {i} {secs:.2f}s", secs < 10)]
    record(3, checks)


def test_criterion_04_young_conjugation():
    s = np.linspace(0, 6, 121)
    phis = {"quadratic": lambda u: 0.5 * np.asarray(u) ** 2,
            "kinked": lambda u: np.maximum(0.0, 2 * (np.asarray(u) - 1)),
            "shifted linear": phi_of(shifted_linear())}
    checks = []
    for name, phi in phis.items():
        err = float(np.max(np.abs(double_conjugate(phi, s).values - phi(s))))
        checks.append((f"{name} error {err:.3g}", err <= 1e-6 * (1 + float(np.max(np.abs(phi(s)))))))
    w12 = weight_matrix(shifted_linear(), 1.0, 2).entries[2]
    checks.append((f"W^1_2={w12!r}", abs(w12 / (4 / math.e) - 1) <= 1e-6))
    record(4, checks)


def _sqrt_reduction(nq):
    constants = check_discrete_condition(SQRT, SQRT).constants
    res = build_reduction(ReductionInput(SQRT, SQRT, power_weight(0.75), constants, 8, nq))
    return res, validate_reduction(res), constants


def test_criterion_05_reduction_run():
    (res, rep, consts), secs = timed(lambda: _sqrt_reduction(False))
    checks = [(f"runtime {secs:.2f}s", secs < 10)]
    for n in range(2, 9):
        ratio = res.y[n - 1] / res.x[n - 1]
        checks.append((f"y/x at n={n}", abs(ratio / (n / (n - 1)) ** 2 - 1) <= 1e-6))
    checks.append(("z2/x2", abs(res.z[1] / res.x[1] / 2.25 - 1) <= 1e-6))
    for name in ("omega_lower", "omega_upper", "sigma_lower", "sigma_upper", "omega_concave",
                 "sigma_below_f", "sigma_below_t", "recertified"):
        checks.append((name, rep.get(name).ok))
    jump = max(abs(eval_tilde(res, "omega", np.nextafter(y, 0)) / eval_tilde(res, "omega", y) - 1)
               for y in res.y[1:-1])
    checks.append((f"continuity at y_n {jump:.2g}", jump <= 1e-9))
    ht = rep.constants.get("H_tilde", math.nan)
    checks.append(("H~ in (H, K)", consts["H"] < ht < consts["K"]))
    record(5, checks)


def test_criterion_06_tail_variant():
    res, rep, _ = _sqrt_reduction(True)
    checks = []
    for n in range(2, res.n_max + 1):
        tail = nq_tail(SQRT, res.x[n - 1])
        checks.append((f"n={n} tail {tail:.3g}", tail <= n ** -3.0))
    record(6, checks)


def _random_jet(rng):
    npts = int(rng.integers(2, 4))
    cap = int(rng.integers(0, 5))
    coords = rng.choice(np.arange(-12, 13), size=npts, replace=False)
    pts = [(Fraction(int(c), 4),) for c in coords]
    values = {(i, (k,)): Fraction(int(rng.integers(-600, 601)), 60)
              for i in range(npts) for k in range(cap + 1)}
    return Jet(1, pts, cap, values)


def test_criterion_07_jet_oracle_equivalence():
    rng = np.random.default_rng(20261019)
    lw = [k * math.log(k) - k + 1 if k >= 1 else 0.0 for k in range(8)]
    mismatches = []
    for trial in range(50):
        jet = _random_jet(rng)
        cap = jet.order_cap
        table = remainder_table(jet, cap)
        if any(r != brute.remainder(jet, xi, yi, a, p) for (p, a, xi, yi), r in table.items()):
            mismatches.append(f"remainders {trial}")
        prof = jet_growth_profile(jet)
        a, b = brute.profile(jet, cap)
        if prof.a != a or not np.allclose(prof.b, b, rtol=1e-12, atol=0):
            mismatches.append(f"profile {trial}")
        s = jet_sups(jet, lambda k: lw[k], cap)
        norm, semi = brute.sups(jet, lambda k: lw[k], cap)
        if not (math.isclose(s.norm, norm, rel_tol=1e-12, abs_tol=0)
                and math.isclose(s.seminorm, semi, rel_tol=1e-12, abs_tol=0)):
            mismatches.append(f"sups {trial}")
    record(7, [(m, False) for m in mismatches] or [("50 jets", True)])


def test_criterion_08_polynomial_exactness():
    checks = []
    for dim in (1, 2):
        for d in range(5):
            coeffs = {a: Fraction(1 + sum(a), 1 + a[0]) for a in brute.indices(dim, d)}
            pts = [tuple(Fraction(i * (j + 2), 3) for j in range(dim)) for i in range(3)]
            jet = polynomial_jet(coeffs, pts, d + 2)
            zero = all(r == 0 for (p, *_), r in remainder_table(jet, d + 2).items() if p >= d)
            high = {k: v for k, v in brute.scaled_remainders(jet, d + 2).items() if k[0] >= d}
            checks.append((f"dim={dim} d={d}", zero and not any(high.values())))
    record(8, checks)


def test_criterion_09_pipeline_end_to_end():
    start = time.perf_counter()
    good = beurling_to_roumieu_pipeline(exp_jet([0, Fraction(1, 2), 1], 30), SQRT, SQRT)
    vals = {(0, (k,)): Fraction(math.exp(k * k)) for k in range(21)}
    bad = beurling_to_roumieu_pipeline(Jet(1, [(0,)], 20, vals), SQRT, SQRT, PipelineConfig(j_max=8))
    secs = time.perf_counter() - start
    names = ["hypotheses", "fit", "interpolant", "majorant", "reduction", "final", "membership"]
    checks = [(f"stage {s.name}", s.ok) for s in good.stages]
    checks += [("all stages ran", [s.name for s in good.stages] == names),
               ("adversarial jet aborts at fit", bool(bad.aborted) and bad.aborted.startswith("fit")),
               ("witness named", {"j", "k", "excess"} <= set(bad.artifacts.get("witness", {}))),
               (f"runtime {secs:.1f}s", secs < 30)]
    record(9, checks)


def test_criterion_10_nonquasianalytic_battery():
    sq = check_nonquasianalytic(SQRT)
    expected = {0.5: Verdict.FAILS, 1.5: Verdict.HOLDS, 2.0: Verdict.HOLDS}
    checks = [(f"sqrt tail {sq.value:.6g}", sq.holds and abs(sq.value - 2) <= 1e-4),
              ("t diverges", check_nonquasianalytic(WeightFunction.parse("t")).verdict is Verdict.FAILS)]
    for alpha, v in expected.items():
        checks.append((f"omega_{alpha}", check_nonquasianalytic(omega_alpha(alpha)).verdict is v))
    record(10, checks)
