"""Verdicts, grids and the trend heuristics shared by all checks.

Every asymptotic statement (``O``, ``o``, ``limsup``) is checked on a finite
geometric grid.  The verdicts below only ever describe that grid.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

__all__ = [
    "Verdict", "GeometricGrid", "AsymptoticVerdict", "DEFAULT_GRID",
    "bounded_trend", "decay_trend", "log_values", "midpoint_test", "UltrajetError",
]


class UltrajetError(Exception):
    """Base class for library errors that carry a diagnostic message."""


class Verdict(str, enum.Enum):
    HOLDS = "holds-empirically"
    FAILS = "fails"
    INCONCLUSIVE = "inconclusive"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class GeometricGrid:
    t_lo: float
    t_hi: float
    count: int

    def __post_init__(self):
        if not (0 < self.t_lo < self.t_hi) or self.count < 2:
            raise ValueError(f"invalid grid {self.t_lo}:{self.t_hi}:{self.count}")

    def points(self) -> np.ndarray:
        return np.geomspace(self.t_lo, self.t_hi, self.count)

    @classmethod
    def parse(cls, text: str) -> "GeometricGrid":
        lo, hi, n = text.split(":")
        return cls(float(lo), float(hi), int(n))

    def __str__(self) -> str:
        return f"{self.t_lo:.12g}:{self.t_hi:.12g}:{self.count}"


DEFAULT_GRID = GeometricGrid(10.0, 1e12, 200)


@dataclass
class AsymptoticVerdict:
    verdict: Verdict
    witnesses: list = field(default_factory=list)
    grid: GeometricGrid | None = None
    constant: float | None = None

    @property
    def holds(self) -> bool:
        return self.verdict is Verdict.HOLDS


def log_values(w: Callable, t: np.ndarray) -> np.ndarray:
    """``log w(t)``, through the sign/log evaluator when ``w`` provides one."""
    t = np.asarray(t, dtype=float)
    if hasattr(w, "log_eval"):
        return w.log_eval(np.log(t))
    with np.errstate(all="ignore"):
        return np.log(np.asarray(w(t), dtype=float))


def _last_decade(t: np.ndarray) -> np.ndarray:
    mask = t >= t[-1] / 10.0
    if mask.sum() < 2:
        mask[-2:] = True
    return mask


def bounded_trend(t: np.ndarray, log_ratio: np.ndarray, factor: float = 2.0):
    """Grid test for ``ratio = O(1)``.

    Holds when the largest ratio over the last decade of the grid is at most
    ``factor`` times the median ratio over the whole grid.  Returns
    ``(verdict, witnesses, sup)`` with witnesses ``(t, ratio)`` in the last
    decade that break the bound.
    """
    lr = np.asarray(log_ratio, dtype=float)
    if np.isnan(lr).any():
        i = int(np.argmax(np.isnan(lr)))
        return Verdict.INCONCLUSIVE, [(float(t[i]), math.nan)], math.nan
    with np.errstate(over="ignore"):
        return _bounded(t, lr, factor)


def _bounded(t, lr, factor):
    med = float(np.median(lr))
    tail = _last_decade(t)
    bound = med + math.log(factor)
    sup = float(np.exp(lr.max())) if np.isfinite(lr.max()) else math.inf
    if np.isfinite(med) and lr[tail].max() <= bound:
        return Verdict.HOLDS, [], sup
    idx = np.nonzero(tail & (lr > bound))[0]
    wit = [(float(t[i]), float(np.exp(lr[i]))) for i in idx]
    if not wit:
        wit = [(float(t[-1]), float(np.exp(lr[-1])))]
    return Verdict.FAILS, wit, sup


def decay_trend(t: np.ndarray, log_ratio: np.ndarray, drop: float = 0.1):
    """Grid test for ``ratio = o(1)``.

    Holds when the last ratio is at most ``drop`` times the first and the
    per-decade maxima are nonincreasing over the second half of the decades.
    """
    lr = np.asarray(log_ratio, dtype=float)
    if np.isnan(lr).any():
        i = int(np.argmax(np.isnan(lr)))
        return Verdict.INCONCLUSIVE, [(float(t[i]), math.nan)]
    with np.errstate(over="ignore"):
        return _decay(t, lr, drop)


def _decay(t, lr, drop):
    decayed = lr[-1] <= lr[0] + math.log(drop)
    dec = np.floor(np.log10(t) + 1e-12)
    labels = np.unique(dec)
    maxima = np.array([lr[dec == d].max() for d in labels])
    starts = np.array([t[dec == d][0] for d in labels])
    k = len(maxima) // 2
    half = maxima[k:]
    slack = 1e-9 * (1 + np.abs(half[:-1]))
    monotone = bool(np.all(half[1:] <= half[:-1] + slack))
    if decayed and monotone:
        return Verdict.HOLDS, []
    if not decayed:
        tail = _last_decade(t)
        idx = np.nonzero(tail & (lr > lr[0] + math.log(drop)))[0]
        return Verdict.FAILS, [(float(t[i]), float(np.exp(lr[i]))) for i in idx]
    bad = np.nonzero(half[1:] > half[:-1] + slack)[0] + k + 1
    return Verdict.INCONCLUSIVE, [(float(starts[i]), float(np.exp(maxima[i]))) for i in bad]


def midpoint_test(mid_vals: np.ndarray, fa: np.ndarray, fb: np.ndarray,
                  convex: bool, where: np.ndarray, slack: float = 1e-9):
    """Midpoint convexity (or concavity) of sampled values.

    ``fa``, ``fb`` are values at the ends of each pair and ``mid_vals`` at the
    midpoint; ``where`` labels each pair in witnesses.  Non-finite samples
    make the verdict inconclusive.
    """
    avg = 0.5 * (fa + fb)
    vals = np.concatenate([mid_vals, avg])
    if not np.all(np.isfinite(vals)):
        return Verdict.INCONCLUSIVE, []
    tol = slack * (1 + np.abs(avg))
    defect = (mid_vals - avg) if convex else (avg - mid_vals)
    bad = np.nonzero(defect > tol)[0]
    if bad.size == 0:
        return Verdict.HOLDS, []
    return Verdict.FAILS, [(float(where[i]), float(defect[i])) for i in bad]
