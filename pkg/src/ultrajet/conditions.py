"""Integral and discrete growth conditions on pairs of weights.

Includes the kernel integrals ``int_1^inf omega(tu) u^-(1+r) du``, the
non-quasianalyticity integral, the discrete dilation condition
``omega(K^j t) <= C H^j sigma(t)`` and the growth index.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import DEFAULT_GRID, GeometricGrid, Verdict, bounded_trend, log_values
from .quadrature import QuadResult, adaptive_simpson, log_integral

__all__ = [
    "PairVerdict", "DiscreteSearch", "TauResult", "InterlacingReport", "GrowthIndex",
    "sigma_r", "kappa", "check_nonquasianalytic", "check_r_strong", "check_discrete_condition",
    "tau_r", "verify_interlacing", "growth_index", "exp_integral",
]


@dataclass
class PairVerdict:
    """Verdict for one condition; witnesses are ``(t, j, value)`` triples."""

    condition: str
    verdict: Verdict
    constants: dict = field(default_factory=dict)
    witnesses: list = field(default_factory=list)
    grid: GeometricGrid | None = None
    value: float | None = None

    @property
    def holds(self) -> bool:
        return self.verdict is Verdict.HOLDS


def _check_tol(tol):
    if not 0 < tol <= 1e-2:
        raise ValueError("tol must lie in (0, 1e-2]")


def _kernel_log(w, r, log_t):
    return lambda v: w.log_eval(log_t + v) - r * v


def sigma_r(w, r: float, t: float, tol: float = 1e-8) -> QuadResult:
    """``int_1^inf w(tu) / u^(1+r) du`` computed in ``v = log u``."""
    _check_tol(tol)
    if not 0 < r <= 1.5:
        raise ValueError("r must lie in (0, 1.5]")
    lt = math.log(t)
    return log_integral(_kernel_log(w, r, lt), tol=tol, x_offset=lt)


def kappa(w, t: float, tol: float = 1e-8) -> QuadResult:
    return sigma_r(w, 1.0, t, tol)


def check_nonquasianalytic(w, tol: float = 1e-8) -> PairVerdict:
    """Convergence of ``int_1^inf w(t)/t^2 dt``.

    ``value`` is the whole integral; ``constants["ramp_part"]`` is the piece
    over ``[1, t_min]`` where the weight is its linear continuation.
    """
    _check_tol(tol)
    res = log_integral(lambda v: w.log_eval(v) - v, tol=tol)
    if res.diverges:
        wit = []
        for cut in (10.0, 30.0, 100.0):
            val, _, _ = adaptive_simpson(lambda v: np.exp(w.log_eval(v) - v), 0.0, cut, tol=1e-6)
            wit.append((math.exp(cut), 0, val))
        return PairVerdict("non_quasianalytic", Verdict.FAILS,
                           {"tail_exponent": res.tail_exponent}, wit)
    ramp_end = math.log(getattr(w, "t_min", 1.0))
    ramp = 0.0
    if ramp_end > 0:
        ramp, _, _ = adaptive_simpson(lambda v: np.exp(w.log_eval(v) - v), 0.0, ramp_end, tol=tol)
    return PairVerdict("non_quasianalytic", Verdict.HOLDS,
                       {"ramp_part": ramp, "error": res.error}, [], value=res.value)


def _divergence_witnesses(w, r, t):
    """Partial integrals over ``u <= e^V`` for growing ``V``; increasing when divergent."""
    lt = math.log(t)
    g = _kernel_log(w, r, lt)
    out = []
    for cut in (10.0, 30.0, 100.0):
        val, _, _ = adaptive_simpson(lambda v: np.exp(g(v)), 0.0, cut, tol=1e-6)
        out.append((t, cut, val))
    return out


def check_r_strong(w, sigma, r: float, grid: GeometricGrid = DEFAULT_GRID,
                   tol: float = 1e-8) -> PairVerdict:
    """Grid check of ``sigma_r(w)(t) <= C sigma(t) + C``.

    ``M(t) = sigma_r(t) / (sigma(t) + 1)`` must not trend upward over the
    last decade.  A divergent integral at any grid point fails immediately,
    with partial integrals as witnesses.  Upward growth by a factor of at
    least 10 beyond every earlier value also fails; weaker growth is
    inconclusive.
    """
    if not 0 < r <= 1:
        raise ValueError("r must lie in (0, 1]")
    t = grid.points()
    logm = np.empty_like(t)
    for i, ti in enumerate(t):
        res = sigma_r(w, r, ti, tol)
        if res.diverges:
            return PairVerdict(f"S_r({r:g})", Verdict.FAILS, {"r": r},
                               _divergence_witnesses(w, r, ti), grid)
        logm[i] = res.log_value - np.logaddexp(0.0, log_values(sigma, np.array([ti]))[0])
    verdict, wit, sup = bounded_trend(t, logm)
    consts = {"C": sup, "r": r}
    if verdict is Verdict.HOLDS:
        return PairVerdict(f"S_r({r:g})", verdict, consts, [], grid)
    earlier = np.maximum.accumulate(logm)
    grew = logm[-1] >= earlier[len(t) // 2] + math.log(10.0)
    witnesses = [(ti, 0, m) for ti, m in wit]
    return PairVerdict(f"S_r({r:g})", Verdict.FAILS if grew else Verdict.INCONCLUSIVE,
                       consts, witnesses, grid)


# ------------------------------------------------------------------ discrete

@dataclass(frozen=True)
class DiscreteSearch:
    K_grid: tuple = (2.0, math.e, 4.0, 8.0)
    H_exponents: tuple = (0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 0.95)
    t0_grid: tuple = (1.0, 10.0, 100.0)
    j_max: int = 20
    t_hi: float = 1e12
    t_count: int = 60

    def candidates(self):
        for K in self.K_grid:
            for e in self.H_exponents:
                for t0 in self.t0_grid:
                    yield K, K ** e, t0


_PROBE_J = np.unique(np.round(np.geomspace(1, 4096, 40)).astype(int))


def check_discrete_condition(w, sigma, search: DiscreteSearch = DiscreteSearch()) -> PairVerdict:
    """Search ``(K, H, t0)`` for ``w(K^j t) <= C H^j sigma(t)`` on ``t >= t0``.

    ``C`` is the sup over the grid and ``0 <= j <= j_max``.  A candidate is
    accepted only if that sup is stable: probing ``j`` up to 4096 finds
    nothing larger and the per-``t`` sup shows no upward trend in ``t``.
    Candidates are tried in grid order and the first stable one is returned.
    """
    if not (search.K_grid and search.H_exponents and search.t0_grid):
        raise ValueError("discrete search grids must be nonempty")
    if search.j_max < 1:
        raise ValueError("j_max must be at least 1")
    witnesses = []
    js = np.arange(search.j_max + 1)
    probe = np.union1d(js, _PROBE_J)
    for K, H, t0 in search.candidates():
        if not H < K:
            raise ValueError(f"H={H:g} must be below K={K:g}")
        t = np.geomspace(t0, search.t_hi, search.t_count)
        lt = np.log(t)
        lsig = log_values(sigma, t)
        table = (w.log_eval(lt[:, None] + probe[None, :] * math.log(K))
                 - probe[None, :] * math.log(H) - lsig[:, None])
        inside = probe <= search.j_max
        lc = float(table[:, inside].max())
        lfull = float(table.max())
        per_t = table[:, inside].max(axis=1)
        trend, _, _ = bounded_trend(t, per_t)
        if lfull <= lc + 1e-9 * (1 + abs(lc)) and trend is Verdict.HOLDS and math.isfinite(lc):
            return PairVerdict("discrete_3_2", Verdict.HOLDS,
                               {"C": math.exp(lc), "K": K, "H": H, "t0": t0}, [])
        i, j = np.unravel_index(int(np.argmax(table)), table.shape)
        witnesses.append((float(t[i]), int(probe[j]), float(np.exp(min(table[i, j], 700.0)))))
    return PairVerdict("discrete_3_2", Verdict.FAILS, {}, witnesses)


@dataclass(frozen=True)
class TauResult:
    value: float
    argmax: int
    diverges: bool


def tau_r(w, K: float, r: float, t: float, j_max: int = 64, tol: float = 1e-9) -> TauResult:
    """``sup_{0 <= j <= j_max} w(K^j t) / K^(rj)``, flagged when still rising at ``j_max``."""
    if not K > 1:
        raise ValueError("K must exceed 1")
    j = np.arange(j_max + 1)
    terms = w.log_eval(math.log(t) + j * math.log(K)) - r * j * math.log(K)
    k = int(np.argmax(terms))
    rising = j_max >= 1 and k == j_max and terms[-1] >= terms[-2] + math.log1p(tol)
    if terms[k] < 700:
        # direct evaluation at the maximizer keeps j = 0 exact
        value = float(w(K ** k * t)) / K ** (r * k)
    else:
        value = float(np.exp(terms[k]))
    return TauResult(value, k, bool(rising))


@dataclass
class InterlacingReport:
    c4: float
    c5: float
    separation: Verdict
    verdict: Verdict
    note: str = ""


def verify_interlacing(w, K: float, r: float, s: float,
                       grid: GeometricGrid = GeometricGrid(10.0, 1e12, 60),
                       j_max: int = 64, tol: float = 1e-8) -> InterlacingReport:
    """Grid constants for ``tau_r <= C4 sigma_r`` and ``sigma_r <= C5 tau_s``, and
    whether ``tau_s = O(tau_r)``.  Any divergent quantity makes the report inconclusive.
    """
    if not 0 < s <= r <= 1:
        raise ValueError("need 0 < s <= r <= 1")
    t = grid.points()
    lsig, ltr, lts = (np.empty_like(t) for _ in range(3))
    for i, ti in enumerate(t):
        q = sigma_r(w, r, ti, tol)
        a, b = tau_r(w, K, r, ti, j_max), tau_r(w, K, s, ti, j_max)
        if q.diverges or a.diverges or b.diverges:
            which = "sigma_r" if q.diverges else ("tau_r" if a.diverges else "tau_s")
            return InterlacingReport(math.inf, math.inf, Verdict.INCONCLUSIVE, Verdict.INCONCLUSIVE,
                                     f"{which} diverges at t={ti:.6g}")
        lsig[i], ltr[i], lts[i] = q.log_value, math.log(a.value), math.log(b.value)
    c4 = float(np.exp((ltr - lsig).max()))
    c5 = float(np.exp((lsig - lts).max()))
    sep, _, _ = bounded_trend(t, lts - ltr)
    return InterlacingReport(c4, c5, sep, Verdict.HOLDS)


@dataclass(frozen=True)
class GrowthIndex:
    gamma: float
    lower: float
    upper: float
    strong: bool
    label: str

    def __str__(self) -> str:
        return self.label


def growth_index(sigma, w, tol: float = 0.05, r_floor: float = 0.01,
                 grid: GeometricGrid = GeometricGrid(10.0, 1e12, 32)) -> GrowthIndex:
    """``sup{s : (w, sigma) is 1/s-strong}`` by bisection on ``r`` over grid verdicts.

    The bracket is refined until its width in ``gamma`` is at most ``tol``
    times the estimate.
    """
    if not 0 < tol <= 0.1:
        raise ValueError("tol must lie in (0, 0.1]")

    def ok(r):
        return check_r_strong(w, sigma, r, grid, tol=1e-6).holds

    if not ok(1.0):
        return GrowthIndex(math.nan, math.nan, 1.0, False, "< 1 (pair not strong)")
    if ok(r_floor):
        g = 1 / r_floor
        return GrowthIndex(g, g, math.inf, True, f">= {g:g}")
    lo, hi = r_floor, 1.0
    while 1 / lo - 1 / hi > tol * 2 / (lo + hi):
        mid = 0.5 * (lo + hi)
        if ok(mid):
            hi = mid
        else:
            lo = mid
    g = 2 / (lo + hi)
    return GrowthIndex(g, 1 / hi, 1 / lo, True, f"{g:.12g}")


def exp_integral(alpha: float, x: float, tol: float = 1e-10) -> QuadResult:
    """``int_1^inf y^-alpha e^(-x y) dy``; divergent when ``x < 0`` or ``x = 0, alpha <= 1``."""
    if alpha < 0:
        raise ValueError("alpha must be nonnegative")
    if x < 0 or (x == 0 and alpha <= 1):
        return QuadResult(math.inf, math.inf, True, math.inf, math.inf, 0.0, 0)
    if x == 0:
        return log_integral(lambda v: -(alpha - 1) * np.asarray(v, float), tol=tol)

    def log_f(v):
        with np.errstate(over="ignore"):
            return -(alpha - 1) * v - x * np.exp(v)
    return log_integral(log_f, tol=tol, x_offset=1.0)
