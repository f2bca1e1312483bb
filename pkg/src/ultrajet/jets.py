"""Whitney jets on finite point sets.

Values and points are held as exact fractions, so Taylor remainders are
computed without rounding; only the final weighting by ``exp(-...)``
happens in floating point.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable

import numpy as np

from .core import UltrajetError
from .conjugate import phi_of, young_conjugate

__all__ = [
    "JetFormatError", "MissingValueError", "Jet", "JetGrowthProfile", "JetSups", "Membership",
    "multi_indices", "parse_jet", "format_jet", "jet_from_function", "polynomial_jet", "exp_jet",
    "remainder", "remainder_table", "jet_growth_profile", "jet_sups", "beurling_seminorms",
    "roumieu_membership",
]


class JetFormatError(UltrajetError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line else message)


class MissingValueError(UltrajetError):
    pass


def multi_indices(dim: int, order: int):
    """All multi-indices of length ``dim`` with ``|alpha| <= order``, graded then lexicographic."""
    out = []
    for k in range(order + 1):
        out.extend(a for a in itertools.product(range(k + 1), repeat=dim) if sum(a) == k)
    return out


def _frac(v) -> Fraction:
    if isinstance(v, Fraction):
        return v
    if isinstance(v, str):
        return Fraction(v)
    if isinstance(v, (int, np.integer)):
        return Fraction(int(v))
    return Fraction(float(v))


@dataclass
class Jet:
    dim: int
    points: list
    order_cap: int
    values: dict

    def __post_init__(self):
        self.points = [tuple(_frac(c) for c in p) for p in self.points]
        if any(len(p) != self.dim for p in self.points):
            raise JetFormatError(f"every point needs {self.dim} coordinates")
        if len(set(self.points)) != len(self.points):
            raise JetFormatError("points must be distinct")
        self.values = {(int(i), tuple(a)): _frac(v) for (i, a), v in self.values.items()}

    def value(self, i: int, alpha: tuple) -> Fraction:
        try:
            return self.values[(i, alpha)]
        except KeyError:
            raise MissingValueError(
                f"missing value at point {i} for multi-index {alpha}") from None

    def missing(self):
        return [(i, a) for i in range(len(self.points)) for a in multi_indices(self.dim, self.order_cap)
                if (i, a) not in self.values]

    def map_values(self, fn: Callable[[Fraction], Fraction]) -> "Jet":
        return Jet(self.dim, self.points, self.order_cap, {k: fn(v) for k, v in self.values.items()})

    def translated(self, shift: Iterable) -> "Jet":
        s = [_frac(c) for c in shift]
        pts = [tuple(c + d for c, d in zip(p, s)) for p in self.points]
        return Jet(self.dim, pts, self.order_cap, dict(self.values))


# ------------------------------------------------------------------ file io

def parse_jet(text: str) -> Jet:
    """Read the line format ``dim``/``pcap``/``point``/``val`` (``#`` starts a comment).

    Point indices in ``val`` lines are zero-based and refer to ``point`` lines
    in order of appearance.
    """
    dim = pcap = None
    points, values = [], {}
    for no, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, *rest = line.split()
        try:
            if key == "dim":
                dim = int(rest[0])
                if dim < 1 or len(rest) != 1:
                    raise ValueError
            elif key == "pcap":
                pcap = int(rest[0])
                if pcap < 0 or len(rest) != 1:
                    raise ValueError
            elif key == "point":
                if dim is None:
                    raise JetFormatError("point before dim", no)
                if len(rest) != dim:
                    raise JetFormatError(f"point needs {dim} coordinates", no)
                points.append(tuple(Fraction(c) for c in rest))
            elif key == "val":
                if dim is None:
                    raise JetFormatError("val before dim", no)
                if len(rest) != dim + 2:
                    raise JetFormatError(f"val needs index, {dim} orders and a value", no)
                i = int(rest[0])
                alpha = tuple(int(a) for a in rest[1:-1])
                if i < 0 or min(alpha) < 0:
                    raise ValueError
                if (i, alpha) in values:
                    raise JetFormatError(f"duplicate value for point {i}, multi-index {alpha}", no)
                values[(i, alpha)] = Fraction(rest[-1])
            else:
                raise JetFormatError(f"unknown keyword {key!r}", no)
        except (ValueError, IndexError, ZeroDivisionError):
            raise JetFormatError(f"malformed {key!r} line", no) from None
    if dim is None or pcap is None:
        raise JetFormatError("header needs both 'dim' and 'pcap'")
    if not points:
        raise JetFormatError("no points")
    for i, a in values:
        if i >= len(points) or sum(a) > pcap:
            raise JetFormatError(f"value for point {i}, multi-index {a} out of range")
    jet = Jet(dim, points, pcap, values)
    gaps = jet.missing()
    if gaps:
        i, a = gaps[0]
        raise JetFormatError(f"missing value for point {i}, multi-index {a} ({len(gaps)} missing)")
    return jet


def format_jet(jet: Jet) -> str:
    lines = [f"dim {jet.dim}", f"pcap {jet.order_cap}"]
    lines += ["point " + " ".join(str(c) for c in p) for p in jet.points]
    for i in range(len(jet.points)):
        for a in multi_indices(jet.dim, jet.order_cap):
            if (i, a) in jet.values:
                lines.append(f"val {i} {' '.join(map(str, a))} {jet.values[(i, a)]}")
    return "\n".join(lines) + "\n"


def jet_from_function(points, order_cap: int, deriv: Callable) -> Jet:
    """Jet with ``F^alpha(x) = deriv(alpha, x)``."""
    pts = [tuple(p) if np.ndim(p) else (p,) for p in points]
    dim = len(pts[0])
    vals = {(i, a): deriv(a, p) for i, p in enumerate(pts) for a in multi_indices(dim, order_cap)}
    return Jet(dim, pts, order_cap, vals)


def polynomial_jet(coeffs: dict, points, order_cap: int) -> Jet:
    """Exact jet of ``sum c_gamma x^gamma`` (``coeffs`` maps exponent tuples to coefficients)."""
    coeffs = {tuple(g): _frac(c) for g, c in coeffs.items()}

    def deriv(alpha, p):
        total = Fraction(0)
        for g, c in coeffs.items():
            if any(ai > gi for ai, gi in zip(alpha, g)):
                continue
            term = c
            for ai, gi, xi in zip(alpha, g, p):
                term *= Fraction(math.perm(gi, ai)) * _frac(xi) ** (gi - ai)
            total += term
        return total
    return jet_from_function(points, order_cap, deriv)


def exp_jet(points, order_cap: int, extra: int = 40) -> Jet:
    """Jet of ``e^x`` in one variable with exact rational values.

    Uses the Taylor polynomial of degree ``order_cap + extra`` at 0, whose
    derivatives agree with ``e^x`` to far below double precision on ``|x| <= 1``
    while keeping every remainder exact.
    """
    deg = order_cap + extra
    coef = [Fraction(1, math.factorial(i)) for i in range(deg + 1)]

    def deriv(alpha, p):
        x = _frac(p[0])
        k = alpha[0]
        return sum((coef[i] * math.perm(i, k) * x ** (i - k) for i in range(k, deg + 1)), Fraction(0))
    return jet_from_function(points, order_cap, deriv)


# ------------------------------------------------------------------ remainders

def _mono(d, beta):
    out = Fraction(1)
    for di, bi in zip(d, beta):
        out *= di ** bi
    return out


def _fact(beta):
    out = 1
    for b in beta:
        out *= math.factorial(b)
    return out


def _add(a, b):
    return tuple(x + y for x, y in zip(a, b))


def remainder(jet: Jet, x_idx: int, y_idx: int, alpha: tuple, p: int) -> Fraction:
    """``F^alpha(y) - sum_{|beta| <= p - |alpha|} (y-x)^beta / beta! F^(alpha+beta)(x)``, exactly."""
    alpha = tuple(alpha)
    if not sum(alpha) <= p <= jet.order_cap:
        raise ValueError(f"need |alpha| <= p <= {jet.order_cap}")
    x, y = jet.points[x_idx], jet.points[y_idx]
    d = tuple(b - a for a, b in zip(x, y))
    out = jet.value(y_idx, alpha)
    for beta in multi_indices(jet.dim, p - sum(alpha)):
        out -= _mono(d, beta) / _fact(beta) * jet.value(x_idx, _add(alpha, beta))
    return out


def remainder_table(jet: Jet, p_max: int) -> dict:
    """All remainders ``(p, alpha, x, y) -> value`` for ``x != y`` and ``p <= p_max``.

    Built incrementally in ``p``: each order subtracts only the Taylor terms of
    that exact degree.
    """
    if p_max > jet.order_cap:
        raise ValueError("p_max exceeds the jet's order cap")
    idx = multi_indices(jet.dim, p_max)
    by_degree = {k: [b for b in idx if sum(b) == k] for k in range(p_max + 1)}
    table = {}
    npts = len(jet.points)
    for xi in range(npts):
        for yi in range(npts):
            if xi == yi:
                continue
            d = tuple(b - a for a, b in zip(jet.points[xi], jet.points[yi]))
            for alpha in idx:
                k0 = sum(alpha)
                r = jet.value(yi, alpha)
                for p in range(k0, p_max + 1):
                    for beta in by_degree[p - k0]:
                        r -= _mono(d, beta) / _fact(beta) * jet.value(xi, _add(alpha, beta))
                    table[(p, alpha, xi, yi)] = r
    return table


def _distance(a, b):
    sq = sum((u - v) ** 2 for u, v in zip(a, b))
    if len(a) == 1:
        return abs(a[0] - b[0])
    return Fraction(math.sqrt(sq))


def _scaled_terms(jet: Jet, p_max: int):
    """``(p, alpha, x, y) -> |R| (p+1-|alpha|)! / |x-y|^(p+1-|alpha|)`` as exact fractions."""
    out = {}
    for (p, alpha, xi, yi), r in remainder_table(jet, p_max).items():
        e = p + 1 - sum(alpha)
        dist = _distance(jet.points[xi], jet.points[yi])
        out[(p, alpha, xi, yi)] = abs(r) * math.factorial(e) / dist ** e
    return out


# ------------------------------------------------------------------ growth

@dataclass
class JetGrowthProfile:
    a: list
    b: list

    @property
    def p_max(self) -> int:
        return len(self.a) - 1

    def g_steps(self) -> np.ndarray:
        """``log max(a_k, b_k, 1)`` for ``k = 0..p_max+1`` (``a`` is 0 past ``p_max``)."""
        a = list(self.a) + [0.0]
        return np.array([math.log(max(ak, bk, 1.0)) for ak, bk in zip(a, self.b)])

    def g(self, t):
        k = np.floor(np.asarray(t, dtype=float)).astype(int)
        steps = self.g_steps()
        if np.any(k < 0) or np.any(k >= steps.size):
            raise ValueError(f"g is sampled on [0, {steps.size})")
        return steps[k]


def jet_growth_profile(jet: Jet, p_max: int | None = None) -> JetGrowthProfile:
    """``a_k`` (sup of order-``k`` values) and ``b_(k+1)`` (scaled order-``k`` remainders), ``b_0 = 0``."""
    p_max = jet.order_cap if p_max is None else p_max
    a = [0.0] * (p_max + 1)
    for (i, alpha), v in jet.values.items():
        k = sum(alpha)
        if k <= p_max:
            a[k] = max(a[k], float(abs(v)))
    b = [Fraction(0)] * (p_max + 2)
    for (p, alpha, xi, yi), v in _scaled_terms(jet, p_max).items():
        b[p + 1] = max(b[p + 1], v)
    return JetGrowthProfile(a, [float(v) for v in b])


# ------------------------------------------------------------------ weighted sups

@dataclass
class JetSups:
    norm: float
    norm_at: tuple | None
    seminorm: float
    seminorm_at: tuple | None
    per_order: np.ndarray


def jet_sups(jet: Jet, log_weight: Callable[[int], float], p_max: int,
             terms: dict | None = None) -> JetSups:
    """Weighted sups ``|F^alpha(x)| / W_|alpha|`` and
    ``|R^p_x F^alpha(y)| (p+1-|alpha|)! / (|x-y|^(p+1-|alpha|) W_(p+1))``.

    ``log_weight(k)`` is ``log W_k``.  Maximizers are reported as ``(x, alpha)``
    and ``(p, alpha, x, y)``; ties go to the lexicographically smallest tuple.
    ``per_order[k]`` is the larger of the two sups restricted to order ``k``.
    ``terms`` may carry a precomputed scaled-remainder table for ``p_max``.
    """
    lw = [log_weight(k) for k in range(p_max + 2)]
    per = np.zeros(p_max + 1)
    norm, norm_at = 0.0, None
    for (i, alpha), v in sorted(jet.values.items(), key=lambda kv: (kv[0][0], kv[0][1])):
        k = sum(alpha)
        if k > p_max or v == 0:
            continue
        val = float(abs(v)) * math.exp(-lw[k])
        per[k] = max(per[k], val)
        if val > norm or norm_at is None:
            norm, norm_at = val, (i, alpha)
    semi, semi_at = 0.0, None
    terms = _scaled_terms(jet, p_max) if terms is None else terms
    for key in sorted(terms):
        p = key[0]
        s = terms[key]
        if s == 0:
            continue
        val = float(s) * math.exp(-lw[p + 1])
        per[p] = max(per[p], val)
        if val > semi or semi_at is None:
            semi, semi_at = val, key
    return JetSups(norm, norm_at, semi, semi_at, per)


def _conjugate_logs(w, ys):
    ys = np.asarray(ys, dtype=float)
    order = np.argsort(ys)
    vals = np.empty_like(ys)
    vals[order] = young_conjugate(phi_of(w.truncated(1.0) if getattr(w, "truncate_at", None) is None
                                         else w), ys[order]).values
    return vals


def beurling_seminorms(jet: Jet, w, m: int, p_max: int) -> JetSups:
    """Sups weighted by ``exp(m phi*(k/m))`` with ``phi = w o exp``."""
    if m < 1:
        raise ValueError("m must be at least 1")
    k = np.arange(p_max + 2)
    lw = m * _conjugate_logs(w, k / m)
    return jet_sups(jet, lambda i: float(lw[i]), p_max)


@dataclass
class Membership:
    x: float | None
    table: list
    message: str = ""


def _stable(per: np.ndarray) -> bool:
    n = per.size
    cut = max(1, (2 * n) // 3)
    if n < 3:
        return True
    k = int(np.argmax(per))
    tail = per[cut:]
    return k < cut and bool(np.all(np.diff(tail) <= 1e-12 * (1 + np.abs(tail[:-1]))))


def roumieu_membership(jet: Jet, w, x_grid, p_max: int) -> Membership:
    """Smallest ``x`` whose ``W^x``-weighted sups look settled.

    ``W^x_k = exp(phi*(k x)/x)``.  Finite data always give finite sups, so
    "settled" means the per-order maxima peak in the first two thirds of the
    orders and do not increase over the last third.
    """
    table = []
    chosen = None
    k = np.arange(p_max + 2)
    terms = _scaled_terms(jet, p_max)
    for x in sorted(x_grid):
        lw = _conjugate_logs(w, k * x) / x
        s = jet_sups(jet, lambda i: float(lw[i]), p_max, terms)
        ok = _stable(s.per_order)
        table.append((float(x), s.norm, s.seminorm, ok, int(np.argmax(s.per_order))))
        if ok and chosen is None:
            chosen = float(x)
    msg = "" if chosen is not None else f"no membership evidence <= {max(x_grid):g}"
    return Membership(chosen, table, msg)
