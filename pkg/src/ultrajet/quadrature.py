"""Adaptive quadrature for the improper integrals over ``[0, inf)`` in log variables.

Integrands are passed as ``log_f(v)`` (log of a nonnegative integrand,
vectorized).  Working with logs keeps ``omega(t e^v)`` representable far
beyond the float range of ``t e^v`` itself.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

__all__ = ["QuadResult", "adaptive_simpson", "log_integral"]


@dataclass(frozen=True)
class QuadResult:
    value: float
    log_value: float
    diverges: bool
    tail: float
    error: float
    cutoff: float
    evaluations: int
    tail_exponent: float = math.nan

    @property
    def finite(self) -> bool:
        return not self.diverges and math.isfinite(self.value)


def adaptive_simpson(f: Callable[[np.ndarray], np.ndarray], a: float, b: float,
                     tol: float = 1e-10, panels: int = 64, max_rounds: int = 40,
                     max_panels: int = 1 << 18):
    """Vectorized adaptive Simpson rule for ``int_a^b f``.

    All panels are refined breadth first; a panel is accepted once its two
    halves agree with the whole to within its share of ``tol`` (absolute,
    measured against the running total).  Refinement stops once more than
    ``max_panels`` panels are active.  Returns ``(value, error, evals)``.
    """
    if b <= a:
        return 0.0, 0.0, 0
    edges = np.linspace(a, b, panels + 1)
    lo, hi = edges[:-1], edges[1:]
    flo, fhi, fmid = f(lo), f(hi), f(0.5 * (lo + hi))
    evals = 3 * panels
    whole = (hi - lo) / 6 * (flo + 4 * fmid + fhi)
    if not np.all(np.isfinite(whole)):
        return math.inf, math.inf, evals
    total = 0.0
    err = 0.0
    span = b - a
    for _ in range(max_rounds):
        mid = 0.5 * (lo + hi)
        q1, q3 = 0.5 * (lo + mid), 0.5 * (mid + hi)
        f1, f3 = f(q1), f(q3)
        evals += 2 * lo.size
        left = (mid - lo) / 6 * (flo + 4 * f1 + fmid)
        right = (hi - mid) / 6 * (fmid + 4 * f3 + fhi)
        refined = left + right
        diff = np.abs(refined - whole) / 15
        scale = abs(total) + abs(refined.sum())
        ok = diff <= tol * max(scale, 1e-300) * (hi - lo) / span
        total += float((refined[ok] + (refined[ok] - whole[ok]) / 15).sum())
        err += float(diff[ok].sum())
        if ok.all():
            return total, err, evals
        if 2 * (~ok).sum() > max_panels:
            whole = refined[~ok]
            err += float(diff[~ok].sum())
            break
        keep = ~ok
        lo, mid, hi = lo[keep], mid[keep], hi[keep]
        flo, f1, fmid, f3, fhi = flo[keep], f1[keep], fmid[keep], f3[keep], fhi[keep]
        lo = np.concatenate([lo, mid])
        hi = np.concatenate([mid, hi])
        fmid_new = np.concatenate([f1, f3])
        flo, fhi = np.concatenate([flo, fmid]), np.concatenate([fmid, fhi])
        fmid = fmid_new
        whole = np.concatenate([left[keep], right[keep]])
    else:
        err += float(np.abs(whole).sum())
    total += float(whole.sum())
    return total, err, evals


def _slope(log_f, v: float, h: float) -> float:
    a, b = log_f(np.array([v - h, v + h]))
    if not (np.isfinite(a) and np.isfinite(b)):
        return math.nan
    return float(b - a) / (2 * h)


def log_integral(log_f: Callable[[np.ndarray], np.ndarray], tol: float = 1e-8,
                 x_offset: float = 0.0, v_max: float = 1000.0,
                 min_exponent: float = 1.0 + 1e-6) -> QuadResult:
    """``int_0^inf exp(log_f(v)) dv`` with a modelled tail.

    The integrand is assumed to behave like a power of ``x = x_offset + v``
    times an exponential in ``v`` far out.  Past the cutoff the local decay
    exponent ``q = -x d(log f)/dv`` decides: ``q <= min_exponent`` flags
    divergence, otherwise the tail ``f(V) x / (q - 1)`` is added.  The cutoff
    is the first probe where the integrand has fallen below ``tol`` relative
    to its peak, or ``v_max``.
    """
    probes = np.concatenate([[0.0], np.geomspace(1e-3, v_max, 120)])
    lp = np.asarray(log_f(probes), dtype=float)
    if np.isnan(lp).any():
        raise ValueError("integrand is undefined on the integration range")
    finite = np.isfinite(lp)
    if not finite.any():
        return QuadResult(0.0, -math.inf, False, 0.0, 0.0, 0.0, probes.size)
    if np.isposinf(lp).any():
        return QuadResult(math.inf, math.inf, True, math.inf, math.inf, 0.0, probes.size)
    peak = float(lp[finite].max())
    small = np.nonzero(finite & (lp < peak + math.log(tol * 1e-4)) & (probes >= probes[int(np.argmax(lp))]))[0]
    cutoff = float(probes[small[0]]) if small.size else v_max

    def f(v):
        with np.errstate(under="ignore"):
            return np.exp(np.asarray(log_f(v), dtype=float) - peak)

    body, err, evals = adaptive_simpson(f, 0.0, cutoff, tol=tol * 0.1, panels=128)
    x = max(x_offset + cutoff, 1.0)
    lv = float(log_f(np.array([cutoff]))[0]) - peak
    q = x * -_slope(log_f, cutoff, min(0.5, 0.25 * cutoff))
    if not math.isfinite(lv):
        tail = 0.0
    elif math.isfinite(q) and q > min_exponent:
        tail = math.exp(lv) * x / (q - 1)
    else:
        return QuadResult(math.inf, math.inf, True, math.inf, math.inf, cutoff, evals + 4, q)
    total = body + tail
    log_value = peak + math.log(total) if total > 0 else -math.inf
    with np.errstate(over="ignore"):
        value = float(np.exp(log_value))
        scale = float(np.exp(peak))
    # the tail model is exact for pure powers of x; charge 0.1% when it carries weight
    model_err = 0.0 if small.size else 1e-3 * tail
    return QuadResult(value, log_value, False, tail * scale, (err + model_err) * scale,
                      cutoff, evals + 4, q)
