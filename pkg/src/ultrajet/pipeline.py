"""From a Beurling-type jet bound to a Roumieu-type certificate.

The stages are: growth profile ``g`` of the jet, offsets ``C_j`` with
``g <= psi_j + C_j`` where ``psi_j(t) = j psi*(t/j)``, a convex ``h`` squeezed
between ``inf_j(psi_j + C_j)`` and ``inf_j(psi_j + D_j)``, the majorant
``f(t) = h*(max(0, log t))``, the reduced pair, and the closing inequality
``g <= psi~* + B``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .conditions import check_discrete_condition
from .conjugate import young_conjugate
from .core import GeometricGrid, UltrajetError, Verdict
from .jets import Jet, jet_growth_profile, roumieu_membership
from .reduction import ReductionInput, build_reduction, eval_tilde, validate_reduction
from .weights import asymptotic_verdict, check_weight_axioms, weight_derivative

__all__ = [
    "PipelineAbort", "PsiFamily", "ConjugateFamily", "ExplicitFamily", "ConvexInterpolant",
    "Majorant", "TildeWeight", "majorant_numeric", "PipelineConfig", "StageResult", "PipelineReport",
    "fit_offsets", "build_convex_interpolant", "envelope_to_majorant", "beurling_to_roumieu_pipeline",
]

C_FLOOR = 1.0 + 1e-6


class PipelineAbort(UltrajetError):
    def __init__(self, stage: str, message: str, witness=None):
        self.stage = stage
        self.witness = witness
        super().__init__(f"{stage}: {message}")


# ------------------------------------------------------------------ families

class PsiFamily:
    """Indexed convex functions ``psi_j`` on ``[0, inf)`` with slopes ``d_j``."""

    def value(self, j: int, t):
        raise NotImplementedError

    def slope(self, j: int, t):
        raise NotImplementedError

    def slope_inverse(self, j: int, m: float, cap: float = 1e300) -> float:
        """Smallest ``t`` with ``slope(j, t) >= m``; ``inf`` if not reached below ``cap``."""
        if float(self.slope(j, 0.0)) >= m:
            return 0.0
        hi = 1.0
        while float(self.slope(j, hi)) < m:
            hi *= 2
            if hi > cap:
                return math.inf
        lo = 0.0
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if float(self.slope(j, mid)) >= m:
                hi = mid
            else:
                lo = mid
            if hi - lo <= 1e-13 * hi:
                break
        return hi


class ConjugateFamily(PsiFamily):
    """``psi_j(t) = j psi*(t/j)`` for ``psi(s) = sigma(e^s) - sigma(1)``.

    Subtracting ``sigma(1)`` makes ``psi(0) = 0`` while keeping ``psi``
    convex; the slope of ``psi_j`` at ``t`` is the maximizer in ``psi*(t/j)``.
    """

    def __init__(self, sigma):
        self.sigma = sigma
        self.base = float(sigma(1.0))

    def psi(self, s):
        s = np.asarray(s, dtype=float)
        with np.errstate(over="ignore"):
            return np.exp(self.sigma.log_eval(s)) - self.base

    def psi_slope(self, s):
        s = np.asarray(s, dtype=float)
        return weight_derivative(self.sigma, np.exp(s)) * np.exp(s)

    def _conj(self, y):
        y = np.atleast_1d(np.asarray(y, dtype=float))
        order = np.argsort(y)
        tab = young_conjugate(self.psi, y[order])
        val, arg = np.empty_like(y), np.empty_like(y)
        val[order], arg[order] = tab.values, tab.argmax
        return val, arg

    def value(self, j, t):
        val, _ = self._conj(np.asarray(t, dtype=float) / j)
        return j * val if np.ndim(t) else float(j * val[0])

    def slope(self, j, t):
        _, arg = self._conj(np.asarray(t, dtype=float) / j)
        return arg if np.ndim(t) else float(arg[0])

    def slope_inverse(self, j, m, cap=1e300):
        # slope of psi_j reaches m where t/j = psi'(m)
        if m <= 0:
            return 0.0
        t = j * float(self.psi_slope(m))
        return t if t <= cap else math.inf


class ExplicitFamily(PsiFamily):
    """Family given by lists of value and slope callables."""

    def __init__(self, values, slopes):
        self.values, self.slopes = list(values), list(slopes)

    def value(self, j, t):
        return self.values[j - 1](t)

    def slope(self, j, t):
        return self.slopes[j - 1](t)


def fit_offsets(profile, family: PsiFamily, j_max: int):
    """``C_j = max(1 + 1e-6, max_k (g(k) - psi_j(k)))`` for ``j = 1..j_max``.

    Raises when the maximizing ``k`` is the last sampled order and
    ``g - psi_j`` is still increasing there, i.e. the jet outgrows ``psi_j``.
    A weight in place of ``family`` means ``ConjugateFamily(weight)``.
    """
    if not isinstance(family, PsiFamily):
        family = ConjugateFamily(family)
    steps = profile.g_steps()[: profile.p_max + 1]
    k = np.arange(steps.size, dtype=float)
    offsets, argmax = [], []
    for j in range(1, j_max + 1):
        d = steps - np.asarray(family.value(j, k), dtype=float)
        i = int(np.argmax(d))
        if i == steps.size - 1 and steps.size > 1 and d[-1] > d[-2] + 1e-12 * (1 + abs(d[-2])):
            raise PipelineAbort(
                "fit", f"jet not empirically Beurling: C_j floor exceeded growth at j = {j}",
                {"j": j, "k": i, "excess": float(d[-1])})
        offsets.append(max(C_FLOOR, float(d[i])))
        argmax.append(i)
    return np.array(offsets), argmax


# ------------------------------------------------------------------ interpolant

@dataclass
class ConvexInterpolant:
    """``h = psi_j + O_j`` on ``[U_(j-1), S_j]``, tangent line of slope ``m_j`` on ``[S_j, U_j]``."""

    family: PsiFamily
    C: np.ndarray
    starts: list
    switches: list
    ends: list
    slopes: list
    offsets: list
    truncated: bool = False
    D: np.ndarray | None = None

    @property
    def count(self) -> int:
        return len(self.offsets)

    def __call__(self, t):
        t = np.atleast_1d(np.asarray(t, dtype=float))
        out = np.empty_like(t)
        done = np.zeros(t.shape, dtype=bool)
        for j in range(1, self.count + 1):
            i = j - 1
            last = j == self.count
            on_curve = ~done & ((t <= self.switches[i]) | last)
            if on_curve.any():
                out[on_curve] = np.asarray(self.family.value(j, t[on_curve]), dtype=float) + self.offsets[i]
            done |= on_curve
            if last:
                break
            on_line = ~done & (t <= self.ends[i])
            if on_line.any():
                s = self.switches[i]
                hs = float(self.family.value(j, s)) + self.offsets[i]
                out[on_line] = hs + self.slopes[i] * (t[on_line] - s)
            done |= on_line
        return out

    def lower_envelope(self, t):
        t = np.asarray(t, dtype=float)
        return np.min([np.asarray(self.family.value(j, t), float) + self.C[j - 1]
                       for j in range(1, len(self.C) + 1)], axis=0)


def _check_family(family, j_max, grid):
    vals = [np.asarray(family.value(j, grid), float) for j in range(1, j_max + 1)]
    slopes = [np.asarray(family.slope(j, grid), float) for j in range(1, j_max + 1)]
    tol = 1e-9
    for j in range(j_max):
        v, d = vals[j], slopes[j]
        if abs(v[0]) > tol or np.any(np.diff(v) < -tol * (1 + np.abs(v[:-1]))):
            raise PipelineAbort("interpolant", f"psi_{j + 1} is not increasing from 0")
        if np.any(np.diff(d) < -tol * (1 + np.abs(d[:-1]))):
            raise PipelineAbort("interpolant", f"psi_{j + 1} is not convex on the grid")
        if j + 1 < j_max:
            nxt = slopes[j + 1]
            # strict where the slopes are positive; flat stretches may coincide
            bad = (d < nxt - tol) | ((d > tol) & (d <= nxt + tol * (1 + np.abs(d))))
            if bad.any():
                t = float(grid[int(np.argmax(bad))])
                raise PipelineAbort("interpolant",
                                    f"slope of psi_{j + 1} does not exceed slope of psi_{j + 2} at t={t:.6g}")
            gap = v - vals[j + 1]
            if not gap[-1] > gap[0] + tol:
                raise PipelineAbort("interpolant", f"psi_{j + 1} - psi_{j + 2} does not grow on the grid")
    if not slopes[0][-1] > slopes[0][len(grid) // 2]:
        raise PipelineAbort("interpolant", "slopes do not increase toward the end of the grid")


def build_convex_interpolant(family: PsiFamily, C, t_max: float = 1e15, slope_step: float = 1.0,
                             check_grid=None) -> ConvexInterpolant:
    """Convex ``h`` with ``inf_j(psi_j + C_j) <= h``.

    Piece ``j`` leaves ``psi_j + O_j`` at ``S_j``, no earlier than both the
    first point where ``psi_j + O_j - psi_(j+1) >= C_(j+1)`` and the point
    where the slope of ``psi_j`` reaches ``j * slope_step``.  It follows the
    tangent until the slope of ``psi_(j+1)`` catches up, at ``U_j``, and then
    continues on ``psi_(j+1)`` shifted for continuity.
    """
    C = np.asarray(C, dtype=float)
    J = len(C)
    if check_grid is None:
        check_grid = np.concatenate([[0.0], np.geomspace(1e-2, 1e6, 200)])
    _check_family(family, J, check_grid)
    starts, switches, ends, slopes, offsets = [0.0], [], [], [], [float(C[0])]
    truncated = False
    for j in range(1, J):
        o = offsets[-1]

        def excess(t, j=j, o=o):
            return float(family.value(j, t)) + o - float(family.value(j + 1, t)) - C[j]
        lo = starts[-1]
        if excess(lo) >= 0:
            admissible = lo
        else:
            hi = max(lo, 1.0) * 2
            while excess(hi) < 0 and hi < t_max:
                hi *= 2
            if excess(hi) < 0:
                truncated = True
                break
            for _ in range(200):
                mid = 0.5 * (lo + hi)
                lo, hi = (lo, mid) if excess(mid) >= 0 else (mid, hi)
                if hi - lo <= 1e-12 * hi:
                    break
            admissible = hi
        scheduled = family.slope_inverse(j, j * slope_step, cap=t_max)
        s = max(admissible, scheduled, starts[-1])
        if not math.isfinite(s) or s > t_max:
            truncated = True
            break
        m = float(family.slope(j, s))
        if slopes and s == starts[-1]:
            # in exact arithmetic the slope at the start of a piece is the previous one
            m = max(m, slopes[-1])
        u = max(family.slope_inverse(j + 1, m, cap=t_max), s)
        if not math.isfinite(u):
            truncated = True
            break
        hs = float(family.value(j, s)) + o
        switches.append(s)
        slopes.append(m)
        ends.append(u)
        starts.append(u)
        offsets.append(hs + m * (u - s) - float(family.value(j + 1, u)))
    switches.append(math.inf)
    h = ConvexInterpolant(family, C, starts, switches, ends, slopes, offsets, truncated)
    for i in range(1, len(slopes)):
        if slopes[i] < slopes[i - 1]:
            raise PipelineAbort("interpolant", f"slope decreases at switch {i + 1}")
    return h


def interpolant_grid(h: ConvexInterpolant, t_hi: float | None = None, count: int = 400):
    top = t_hi or 4 * max([u for u in h.ends if math.isfinite(u)] + [10.0])
    return np.union1d(np.linspace(0.0, top, count), np.geomspace(1e-3, top, count))


def attach_upper_offsets(h: ConvexInterpolant, grid) -> np.ndarray:
    """``D_j = sup_grid (h - psi_j)``, stored on ``h`` and returned."""
    hv = h(grid)
    D = np.array([float(np.max(hv - np.asarray(h.family.value(j, grid), float)))
                  for j in range(1, len(h.C) + 1)])
    h.D = D
    return D


# ------------------------------------------------------------------ majorant

class Majorant:
    """``f(t) = h*(max(0, log t))``.

    For ``log t`` in the slope range ``[m_(j-1), m_j]`` of piece ``j`` the
    conjugate is ``j psi(log t) - O_j`` exactly, because the conjugate of
    ``psi_j`` is ``j psi``; below slope 0 it is ``-h(0)``.
    """

    def __init__(self, h: ConvexInterpolant):
        self.h = h
        self.family = h.family
        self.t_min = 1.0
        self.bounds = np.array([0.0] + list(h.slopes))
        self.name = "h*(log t)"

    def at_log(self, s):
        s = np.maximum(np.atleast_1d(np.asarray(s, dtype=float)), 0.0)
        idx = np.clip(np.searchsorted(self.bounds, s, side="left") - 1, 0, self.h.count - 1)
        j = idx + 1
        off = np.asarray(self.h.offsets)[idx]
        return j * np.asarray(self.family.psi(s), float) - off

    def __call__(self, t):
        arr = np.asarray(t, dtype=float)
        with np.errstate(divide="ignore"):
            out = self.at_log(np.log(np.maximum(np.atleast_1d(arr), 1e-300)))
        return float(out[0]) if arr.ndim == 0 else out

    def log_eval(self, log_t):
        v = self.at_log(log_t)
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(v > 0, np.log(np.where(v > 0, v, 1.0)), -np.inf)

    def numeric(self, t, s_max: float | None = None):
        """``f(t)`` by direct numerical conjugation of ``h``, for cross-checks."""
        top = s_max or 4 * max([u for u in self.h.ends if math.isfinite(u)] + [64.0])
        return majorant_numeric(self.h, t, s_max=top)


def majorant_numeric(h, t, s_max: float = 64.0, on_boundary: str = "raise"):
    """``h*(max(0, log t))`` for a convex callable ``h`` on ``[0, inf)``."""
    arr = np.atleast_1d(np.asarray(t, dtype=float))
    with np.errstate(divide="ignore"):
        s = np.maximum(np.log(np.maximum(arr, 1e-300)), 0.0)
    order = np.argsort(s)
    out = np.empty_like(s)
    out[order] = young_conjugate(h, s[order], s_max=s_max, on_boundary=on_boundary).values
    return float(out[0]) if np.ndim(t) == 0 else out


def envelope_to_majorant(h: ConvexInterpolant, j_samples=None, grid=None) -> tuple:
    """Majorant ``f`` and the check ``sigma(t) - sigma(1) <= f(t)/j + D_j/j`` on a grid.

    Returns ``(f, worst)`` where ``worst`` is the largest violation (``<= 0`` when
    the check passes).
    """
    f = Majorant(h)
    if h.D is None:
        attach_upper_offsets(h, interpolant_grid(h))
    grid = np.geomspace(1.0, 1e12, 200) if grid is None else grid
    js = range(1, len(h.C) + 1) if j_samples is None else j_samples
    psi = np.asarray(h.family.psi(np.log(grid)), float)
    fv = f(grid)
    worst = max(float(np.max(psi - fv / j - h.D[j - 1] / j)) for j in js)
    return f, worst


# ------------------------------------------------------------------ tilde weight

class TildeWeight:
    """``omega~`` or ``sigma~`` as a weight handle (base weight below ``x_2``,
    last segment continued past ``x_(n_max)``)."""

    def __init__(self, result, which: str, truncate_at: float | None = None):
        self.result, self.which, self.truncate_at = result, which, truncate_at
        self.t_min = 1.0
        self.name = f"{which}~"

    def truncated(self, at: float = 1.0):
        return TildeWeight(self.result, self.which, at)

    def __call__(self, t):
        out = eval_tilde(self.result, self.which, t, extend=True)
        if self.truncate_at is not None:
            out = np.where(np.asarray(t) <= self.truncate_at, 0.0, out)
            return float(out) if np.ndim(t) == 0 else out
        return out

    def log_eval(self, log_t):
        lt = np.atleast_1d(np.asarray(log_t, dtype=float))
        big = lt > 700
        t = np.exp(np.minimum(lt, 700))
        v = np.asarray(self(t), dtype=float)
        with np.errstate(divide="ignore"):
            out = np.where(v > 0, np.log(np.where(v > 0, v, 1.0)), -np.inf)
        return np.where(big, np.inf, out)


# ------------------------------------------------------------------ pipeline

@dataclass
class PipelineConfig:
    j_max: int = 32
    p_max: int | None = None
    n_max: int = 4
    slope_step: float = 1.0
    final_k: int = 30
    little_o_grid: GeometricGrid = GeometricGrid(10.0, 1e12, 200)
    membership_x: tuple = (0.25, 0.5, 1.0, 2.0, 4.0)


@dataclass
class StageResult:
    name: str
    ok: bool
    detail: str = ""


@dataclass
class PipelineReport:
    stages: list = field(default_factory=list)
    artifacts: dict = field(default_factory=dict)
    aborted: str | None = None

    @property
    def ok(self) -> bool:
        return self.aborted is None and all(s.ok for s in self.stages)

    def add(self, name, ok, detail=""):
        self.stages.append(StageResult(name, bool(ok), detail))
        return ok


def _hypotheses(w, sigma, report):
    ax = check_weight_axioms(w)
    so = asymptotic_verdict(sigma, lambda t: np.asarray(t, float), "little_o")
    disc = check_discrete_condition(w, sigma)
    ok = ax.concave.holds and ax.moderate_growth.holds and so.holds and disc.holds
    report.add("hypotheses", ok,
               f"concave={ax.concave.verdict} moderate_growth={ax.moderate_growth.verdict} "
               f"sigma=o(t)={so.verdict} discrete={disc.verdict}")
    if not ok:
        raise PipelineAbort("hypotheses", "input pair fails the hypothesis battery")
    return disc.constants


def beurling_to_roumieu_pipeline(jet: Jet, w, sigma, cfg: PipelineConfig = PipelineConfig()) -> PipelineReport:
    """Run every stage; a failing stage aborts with its name (``report.aborted``)."""
    report = PipelineReport()
    try:
        _run(jet, w, sigma, cfg, report)
    except PipelineAbort as exc:
        report.aborted = str(exc)
        report.artifacts["witness"] = exc.witness
        report.add(exc.stage, False, str(exc))
    return report


def _run(jet, w, sigma, cfg, report):
    p_max = jet.order_cap if cfg.p_max is None else cfg.p_max
    consts = _hypotheses(w, sigma, report)
    report.artifacts["constants"] = consts

    profile = jet_growth_profile(jet, p_max)
    report.artifacts["profile"] = profile
    family = ConjugateFamily(sigma)
    C, _ = fit_offsets(profile, family, cfg.j_max)
    report.artifacts["C"] = C
    report.add("fit", True, f"C_1={C[0]:.12g} C_{cfg.j_max}={C[-1]:.12g}")

    h = build_convex_interpolant(family, C, slope_step=cfg.slope_step)
    grid = interpolant_grid(h)
    D = attach_upper_offsets(h, grid)
    hv = h(grid)
    low = float(np.max(h.lower_envelope(grid) - hv))
    steps = profile.g_steps()
    g_gap = float(np.max(steps[: p_max + 1] - h(np.arange(p_max + 1, dtype=float))))
    report.artifacts["h"] = h
    report.add("interpolant", low <= 1e-9 and g_gap <= 1e-9 and not h.truncated,
               f"pieces={h.count} lower-sandwich excess={low:.3g} g-h excess={g_gap:.3g} "
               f"truncated={h.truncated}")

    f, worst = envelope_to_majorant(h)
    report.artifacts["f"] = f
    so = asymptotic_verdict(sigma, f, "little_o", cfg.little_o_grid)
    report.add("majorant", worst <= 1e-9 and so.holds,
               f"sigma/j bound excess={worst:.3g} sigma=o(f): {so.verdict}")
    if not so.holds:
        raise PipelineAbort("majorant", "sigma = o(f) not supported on the grid", so.witnesses)

    res = build_reduction(ReductionInput(w, sigma, f, consts, cfg.n_max))
    rep = validate_reduction(res)
    report.artifacts["reduction"] = res
    report.artifacts["validation"] = rep
    failed = [c.name for c in rep.claims if not c.ok]
    report.add("reduction", rep.ok, "all claims hold" if rep.ok else f"failed: {failed}")

    st = TildeWeight(res, "sigma")
    tgrid = np.linspace(0.0, math.log(res.x[-1]) + 10, 2000)
    psi_t = np.exp(st.log_eval(tgrid))
    B = max(0.0, float(np.max(psi_t - f(np.exp(tgrid)))))
    k = np.arange(min(cfg.final_k, p_max) + 1, dtype=float)
    tab = young_conjugate(lambda s: np.exp(st.log_eval(s)), k)
    gap = steps[k.astype(int)] - (tab.values + B)
    report.artifacts["B"] = B
    report.add("final", bool(np.all(gap <= 1e-9)),
               f"B={B:.12g} max(g - psi~* - B)={float(gap.max()):.3g} over k<={int(k[-1])}")

    mem = roumieu_membership(jet, st, cfg.membership_x, p_max)
    report.artifacts["membership"] = mem
    report.add("membership", mem.x is not None,
               f"stable at x={mem.x}" if mem.x is not None else mem.message)
