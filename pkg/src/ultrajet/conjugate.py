"""Young conjugates on the half-line and the associated weight matrices."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .core import UltrajetError

__all__ = [
    "ConjugateBoundaryError", "ConjugateTable", "WeightMatrix", "MatrixGrowth",
    "phi_of", "young_conjugate", "double_conjugate", "weight_matrix", "check_matrix_growth",
]

_GOLDEN = (math.sqrt(5) - 1) / 2
_COARSE = 4097
_MAX_DOUBLINGS = 8


class ConjugateBoundaryError(UltrajetError):
    """The maximizer of ``s y - phi(s)`` sits at the end of the search interval."""


def phi_of(w) -> Callable[[np.ndarray], np.ndarray]:
    """``s -> w(e^s)`` evaluated through the weight's log evaluator."""
    def phi(s):
        with np.errstate(over="ignore"):
            return np.exp(w.log_eval(np.asarray(s, dtype=float)))
    return phi


@dataclass
class ConjugateTable:
    y_grid: np.ndarray
    values: np.ndarray
    argmax: np.ndarray
    s_domain: tuple

    def __call__(self, y):
        """Piecewise-linear interpolation of the sampled conjugate."""
        return np.interp(y, self.y_grid, self.values)


def _objective(phi, s, y):
    with np.errstate(invalid="ignore", over="ignore"):
        v = y[:, None] * s[None, :] - phi(s)[None, :]
    return np.where(np.isnan(v), -np.inf, v)


def _golden(phi, y, a, b, tol):
    """Vectorized golden-section maximization of ``s y - phi(s)`` on ``[a, b]``."""
    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)

    def obj(s):
        with np.errstate(invalid="ignore", over="ignore"):
            v = s * y - phi(s)
        return np.where(np.isnan(v), -np.inf, v)
    fc, fd = obj(c), obj(d)
    for _ in range(200):
        if np.all(b - a <= tol * np.maximum(1.0, np.abs(a))):
            break
        left = fc >= fd
        b = np.where(left, d, b)
        a = np.where(left, a, c)
        nc = np.where(left, b - _GOLDEN * (b - a), d)
        nd = np.where(left, c, a + _GOLDEN * (b - a))
        fnew = obj(np.where(left, nc, nd))
        fd, fc = np.where(left, fc, fnew), np.where(left, fnew, fd)
        c, d = nc, nd
    s = 0.5 * (a + b)
    return s, obj(s)


def young_conjugate(phi: Callable, y_grid, s_max: float = 64.0, on_boundary: str = "raise",
                    tol: float = 1e-10) -> ConjugateTable:
    """``phi*(y) = sup_{s >= 0} (s y - phi(s))`` on ``y_grid``.

    A coarse grid on ``[0, s_max]`` locates the maximizer, which golden-section
    search then polishes to ``tol`` in ``s``.  While the maximizer for some
    ``y`` sits on the right end, ``s_max`` is doubled (at most eight times).
    After that, ``on_boundary="raise"`` raises and ``"inf"`` reports ``+inf``.
    ``argmax`` holds the maximizers, i.e. the slopes of ``phi*``.
    """
    if on_boundary not in ("raise", "inf"):
        raise ValueError("on_boundary must be 'raise' or 'inf'")
    y = np.atleast_1d(np.asarray(y_grid, dtype=float))
    if y.size > 1 and np.any(np.diff(y) < 0):
        raise ValueError("y_grid must be increasing")
    for _ in range(_MAX_DOUBLINGS + 1):
        s = np.linspace(0.0, s_max, _COARSE)
        obj = _objective(phi, s, y)
        idx = np.argmax(obj, axis=1)
        inner = obj[:, :-1].max(axis=1)
        scale = 1e-12 * (1 + np.abs(inner))
        at_edge = obj[:, -1] > inner + scale
        if not at_edge.any():
            break
        s_max *= 2
    h = s[1] - s[0]
    lo = np.maximum(s[idx] - h, 0.0)
    hi = np.minimum(s[idx] + h, s_max)
    arg, val = _golden(phi, y, lo, hi, tol)
    coarse = obj[np.arange(y.size), idx]
    better = coarse > val
    val = np.where(better, coarse, val)
    arg = np.where(better, s[idx], arg)
    if at_edge.any():
        if on_boundary == "raise":
            bad = y[at_edge][0]
            raise ConjugateBoundaryError(
                f"maximizer for y={bad:.6g} reaches s_max={s_max:g}; phi grows too slowly "
                f"(needs phi(s)/s > {bad:.6g} for large s)")
        val = np.where(at_edge, np.inf, val)
        arg = np.where(at_edge, np.inf, arg)
    return ConjugateTable(y, val, arg, (0.0, s_max))


def double_conjugate(phi: Callable, s_grid, y_max: float | None = None, y_count: int = 2049,
                     s_max: float = 64.0, tol: float = 1e-10) -> ConjugateTable:
    """``phi**`` on ``s_grid``.

    ``phi*`` is sampled on ``[0, y_max]`` (default: just past the largest
    slope of ``phi`` on ``s_grid``), the outer sup is taken on that sample and
    then polished with exact evaluations of ``phi*``.
    """
    s = np.atleast_1d(np.asarray(s_grid, dtype=float))
    if y_max is None:
        top = s.max()
        h = 1e-6 * max(1.0, top)
        y_max = 1.05 * float((phi(np.array([top + h])) - phi(np.array([top - h])))[0] / (2 * h))
        y_max = max(y_max, 1.0)
    ys = np.linspace(0.0, y_max, y_count)
    first = young_conjugate(phi, ys, s_max, on_boundary="inf", tol=tol)
    finite = np.isfinite(first.values)
    if not finite.all():
        # phi* is infinite past the asymptotic slope of phi, read off as the
        # slope of phi at the end of the widest search interval used
        end = first.s_domain[1]
        h = 1e-3 * end
        slope = float((phi(np.array([end])) - phi(np.array([end - h])))[0] / h) * (1 - 1e-9)
        slope = min(max(slope, ys[finite][-1]), ys[~finite][0])
        ys = np.append(ys[finite], slope)
        fv = young_conjugate(phi, ys, end, on_boundary="inf", tol=tol).values
    else:
        fv = first.values
    obj = s[:, None] * ys[None, :] - fv[None, :]
    idx = np.argmax(obj, axis=1)
    coarse = obj[np.arange(s.size), idx]
    step = ys[1] - ys[0] if ys.size > 1 else 1.0

    def star(y):
        order = np.argsort(y)
        out = np.empty_like(y)
        out[order] = young_conjugate(phi, y[order], s_max, on_boundary="inf", tol=tol).values
        return out

    a = np.maximum(ys[idx] - step, 0.0)
    b = np.minimum(ys[idx] + step, ys[-1])
    arg, val = _golden(star, s, a, b, tol)
    better = coarse > val
    return ConjugateTable(s, np.where(better, coarse, val), np.where(better, ys[idx], arg),
                          (0.0, float(ys[-1])))


@dataclass
class WeightMatrix:
    """One sequence ``exp(phi*(k x) / x)``, ``k = 0..k_max``, stored as logs."""

    x: float
    log_entries: np.ndarray

    @property
    def overflow(self) -> bool:
        return bool(np.any(self.log_entries > 709.0))

    @property
    def entries(self) -> np.ndarray:
        with np.errstate(over="ignore"):
            return np.exp(self.log_entries)


def _normalized(w):
    if getattr(w, "truncate_at", None) is None:
        return w.truncated(1.0)
    return w


def weight_matrix(w, x: float, k_max: int) -> WeightMatrix:
    """Entries ``exp(phi*(k x) / x)`` for the weight made to vanish on ``[0, 1]``."""
    if not x > 0:
        raise ValueError("x must be positive")
    phi = phi_of(_normalized(w))
    k = np.arange(k_max + 1)
    table = young_conjugate(phi, k * x)
    return WeightMatrix(float(x), table.values / x)


@dataclass
class MatrixGrowth:
    holds: bool
    H: float
    C: float
    profile: np.ndarray


def check_matrix_growth(w, a: float, x: float, k_max: int = 40,
                        H_max: float | None = None, H_values=None) -> MatrixGrowth:
    """Smallest ``H`` on a grid with ``a^k W^x_k <= C W^(Hx)_k`` for ``k <= k_max``.

    A candidate counts when the log ratio over the last third of ``k`` never
    exceeds its maximum over the first two thirds.  ``profile`` holds the log
    ratios of the returned candidate, or of the last one tried on failure.
    """
    if a < 1:
        raise ValueError("a must be at least 1")
    if H_values is None:
        H_max = H_max or 16.0 * a
        H_values = a * (H_max / a) ** np.linspace(0.0, 1.0, 25) if H_max > a else [a]
    base = weight_matrix(w, x, k_max).log_entries
    k = np.arange(k_max + 1)
    cut = (2 * (k_max + 1)) // 3
    prof = None
    for H in H_values:
        other = weight_matrix(w, H * x, k_max).log_entries
        prof = k * math.log(a) + base - other
        head = prof[:cut].max()
        if prof[cut:].max() <= head + 1e-9 * (1 + abs(head)):
            return MatrixGrowth(True, float(H), float(np.exp(prof.max())), prof)
    return MatrixGrowth(False, float(H_values[-1]), math.inf, prof)
