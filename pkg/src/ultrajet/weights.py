"""Weight functions and grid checks of the weight-function axioms."""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .core import (DEFAULT_GRID, AsymptoticVerdict, GeometricGrid, UltrajetError, Verdict,
                   bounded_trend, decay_trend, log_values, midpoint_test)
from .expr import Node, compile_float, evaluate, evaluate_log, parse_expression, to_text

__all__ = [
    "WeightFunction", "AxiomReport", "DerivativeError",
    "eval_weight", "weight_derivative", "check_weight_axioms", "asymptotic_verdict",
    "power_weight", "omega_alpha", "shifted_linear", "log_weight", "infer_t_min",
]


class DerivativeError(UltrajetError):
    pass


@dataclass(frozen=True)
class WeightFunction:
    """A weight ``omega`` given by an expression valid for ``t >= t_min``.

    Below ``t_min`` the weight continues as the line through the origin and
    ``(t_min, omega(t_min))``.  With ``truncate_at`` set, the weight is
    additionally forced to zero on ``[0, truncate_at]``.
    """

    expr: Node
    deriv: Node | None = None
    t_min: float = 1.0
    name: str = ""
    truncate_at: float | None = None
    _text: str = field(default="", repr=False, compare=False)

    @classmethod
    def parse(cls, text: str, deriv: str | None = None, t_min: float = 1.0,
              name: str | None = None, truncate_at: float | None = None) -> "WeightFunction":
        if not t_min > 0:
            raise ValueError("t_min must be positive")
        d = parse_expression(deriv) if deriv else None
        return cls(parse_expression(text), d, float(t_min), name or text, truncate_at, text)

    @property
    def text(self) -> str:
        return self._text or to_text(self.expr)

    def truncated(self, at: float = 1.0) -> "WeightFunction":
        """Copy normalised to vanish on ``[0, at]``."""
        return replace(self, truncate_at=at)

    def __call__(self, t):
        return eval_weight(self, t)

    def log_eval(self, log_t):
        lt = np.atleast_1d(np.asarray(log_t, dtype=float))
        out = np.empty_like(lt)
        lmin = math.log(self.t_min)
        low = lt < lmin
        if low.any():
            s0, l0 = evaluate_log(self.expr, np.array([lmin]), self.text)
            base = l0[0] if s0[0] > 0 else -np.inf
            out[low] = base + lt[low] - lmin
        if (~low).any():
            s, l = evaluate_log(self.expr, lt[~low], self.text)
            if (s < 0).any():
                bad = np.exp(lt[~low][np.argmax(s < 0)])
                raise UltrajetError(f"weight {self.text!r} negative at t={bad!r}")
            out[~low] = np.where(s == 0, -np.inf, l)
        if self.truncate_at is not None:
            out[lt <= math.log(self.truncate_at)] = -np.inf
        return out


def eval_weight(w: WeightFunction, t):
    """``omega(t)`` with the linear ramp below ``t_min`` and ``omega(0) = 0``."""
    arr = np.asarray(t, dtype=float)
    scalar = arr.ndim == 0
    arr = np.atleast_1d(arr)
    if np.any(~np.isfinite(arr)) or np.any(arr < 0):
        raise ValueError("weight arguments must be finite and nonnegative")
    out = np.zeros_like(arr)
    low = arr < w.t_min
    if low.any():
        out[low] = evaluate(w.expr, w.t_min, w.text) * (arr[low] / w.t_min)
    if (~low).any():
        out[~low] = evaluate(w.expr, arr[~low], w.text)
    if w.truncate_at is not None:
        out[arr <= w.truncate_at] = 0.0
    return float(out[0]) if scalar else out


def weight_derivative(w: WeightFunction, t):
    """``omega'(t)``: from ``deriv`` when given, else Richardson-refined central differences."""
    arr = np.atleast_1d(np.asarray(t, dtype=float))
    scalar = np.ndim(t) == 0
    if w.deriv is not None:
        out = np.empty_like(arr)
        low = arr < w.t_min
        out[low] = evaluate(w.expr, w.t_min, w.text) / w.t_min
        if (~low).any():
            out[~low] = evaluate(w.deriv, arr[~low], to_text(w.deriv))
    else:
        h = np.maximum(1e-6 * arr, 1e-9)

        def d(step):
            return (eval_weight(w, arr + step) - eval_weight(w, np.maximum(arr - step, 0.0))) / (2 * step)
        with np.errstate(all="ignore"):
            out = (4 * d(h / 2) - d(h)) / 3
    if w.truncate_at is not None:
        out = np.where(arr <= w.truncate_at, 0.0, out)
    if not np.all(np.isfinite(out)):
        i = int(np.argmax(~np.isfinite(out)))
        raise DerivativeError(
            f"non-finite derivative of {w.text!r} at t={arr[i]!r} "
            f"(step {max(1e-6 * arr[i], 1e-9):.3g})")
    return float(out[0]) if scalar else out


# ----------------------------------------------------------------- axioms

@dataclass
class AxiomReport:
    grid: GeometricGrid
    increasing: AsymptoticVerdict
    moderate_growth: AsymptoticVerdict
    log_small: AsymptoticVerdict
    phi_convex: AsymptoticVerdict
    concave: AsymptoticVerdict

    @property
    def c2(self) -> float:
        return self.moderate_growth.constant

    @property
    def is_weight(self) -> bool:
        return all(v.holds for v in (self.increasing, self.moderate_growth,
                                     self.log_small, self.phi_convex))

    def items(self):
        return [("increasing", self.increasing), ("moderate_growth", self.moderate_growth),
                ("log_small", self.log_small), ("phi_convex", self.phi_convex),
                ("concave", self.concave)]


_PAIR_STRIDES = (1, 2, 4, 8)


def _pairs(n: int):
    i = np.concatenate([np.arange(n - k) for k in _PAIR_STRIDES if k < n])
    j = np.concatenate([np.arange(k, n) for k in _PAIR_STRIDES if k < n])
    return i, j


def check_weight_axioms(w, grid: GeometricGrid = DEFAULT_GRID, slack: float = 1e-9) -> AxiomReport:
    if grid.count < 16:
        raise ValueError("axiom checks need at least 16 grid points")
    t = grid.points()
    with np.errstate(all="ignore"):
        vals = np.asarray(w(t), dtype=float)

    # monotonicity
    finite = np.isfinite(vals)
    with np.errstate(invalid="ignore"):
        down = vals[1:] < vals[:-1] - slack * (1 + np.abs(vals[:-1]))
    drops = np.nonzero(finite[1:] & finite[:-1] & down)[0]
    inc = AsymptoticVerdict(Verdict.HOLDS if drops.size == 0 else Verdict.FAILS,
                            [(float(t[i + 1]), float(vals[i + 1] - vals[i])) for i in drops], grid)

    # omega(2t) = O(omega(t))
    with np.errstate(invalid="ignore"):
        lr = log_values(w, 2 * t) - log_values(w, t)
    verdict, wit, sup = bounded_trend(t, lr)
    mod = AsymptoticVerdict(verdict, wit, grid, constant=sup)

    # log t = o(omega(t))
    with np.errstate(invalid="ignore", divide="ignore"):
        v, wit = decay_trend(t, np.log(np.log(t)) - log_values(w, t))
    logsmall = AsymptoticVerdict(v, wit, grid)

    i, j = _pairs(len(t))
    # phi(s) = omega(e^s) convex: midpoint in s is the geometric mean in t
    gm = np.sqrt(t[i] * t[j])
    with np.errstate(all="ignore"):
        v, wit = midpoint_test(np.asarray(w(gm), float), vals[i], vals[j], True, np.log(gm), slack)
    phic = AsymptoticVerdict(v, wit, grid)

    am = 0.5 * (t[i] + t[j])
    with np.errstate(all="ignore"):
        v, wit = midpoint_test(np.asarray(w(am), float), vals[i], vals[j], False, am, slack)
    conc = AsymptoticVerdict(v, wit, grid)
    return AxiomReport(grid, inc, mod, logsmall, phic, conc)


def asymptotic_verdict(f, g, relation: str, grid: GeometricGrid = DEFAULT_GRID) -> AsymptoticVerdict:
    """Grid verdict for ``f = O(g)``, ``f = o(g)`` or ``f ~ g`` (mutual ``O``)."""
    t = grid.points()
    lg = log_values(g, t)
    if not np.all(np.isfinite(lg)):
        return AsymptoticVerdict(Verdict.INCONCLUSIVE, [], grid)
    lf = log_values(f, t)
    if relation == "big_O":
        v, wit, sup = bounded_trend(t, lf - lg)
        return AsymptoticVerdict(v, wit, grid, constant=sup)
    if relation == "little_o":
        v, wit = decay_trend(t, lf - lg)
        return AsymptoticVerdict(v, wit, grid)
    if relation == "equivalent":
        a = asymptotic_verdict(f, g, "big_O", grid)
        b = asymptotic_verdict(g, f, "big_O", grid)
        if a.holds and b.holds:
            return AsymptoticVerdict(Verdict.HOLDS, [], grid, constant=max(a.constant, b.constant))
        worst = Verdict.FAILS if Verdict.FAILS in (a.verdict, b.verdict) else Verdict.INCONCLUSIVE
        return AsymptoticVerdict(worst, a.witnesses + b.witnesses, grid)
    raise ValueError(f"unknown relation {relation!r}")


def infer_t_min(text: str, t_hi: float = 1e12, count: int = 2401, slack: float = 1e-9) -> float | None:
    """Smallest grid point from which the expression looks like a weight.

    On ``geomspace(1, t_hi, count)`` the expression must be finite, positive,
    increasing and concave in ``t``, with ``s -> expr(e^s)`` convex, from that
    point up to ``t_hi``.  Returns ``None`` when no such tail exists.
    """
    t = np.geomspace(1.0, t_hi, count)
    with np.errstate(all="ignore"):
        v = compile_float(parse_expression(text))(t)
        dv = np.diff(v)
        slope_t = dv / np.diff(t)
        slope_s = dv / np.diff(np.log(t))
        tol = slack * (1 + np.abs(slope_t[:-1]))
        good = np.isfinite(v) & (v > 0)
        ok = good[:-2] & good[1:-1] & good[2:]
        ok &= (dv[:-1] >= 0) & (dv[1:] >= 0)
        ok &= slope_t[1:] <= slope_t[:-1] + tol
        ok &= slope_s[1:] >= slope_s[:-1] - slack * (1 + np.abs(slope_s[:-1]))
    if not ok[-1]:
        return None
    bad = np.flatnonzero(~ok)
    return float(t[0] if bad.size == 0 else t[bad[-1] + 2])


# ---------------------------------------------------------------- catalog

def power_weight(beta: float) -> WeightFunction:
    """``t^beta`` with analytic derivative."""
    b = f"{beta:.17g}"
    return WeightFunction.parse(f"t^{b}", deriv=f"{b}*t^({beta - 1:.17g})", name=f"t^{beta:g}")


def omega_alpha(alpha: float) -> WeightFunction:
    """``t/(log t)^alpha``, continued linearly below ``e^(alpha+1)`` where it turns concave."""
    if alpha == 0:
        return WeightFunction.parse("t", deriv="1", name="omega_0")
    a = f"{alpha:.17g}"
    return WeightFunction.parse(f"t/(log t)^{a}", deriv=f"(log t - {a})/(log t)^({alpha + 1:.17g})",
                                t_min=math.exp(alpha + 1), name=f"omega_{alpha:g}")


def shifted_linear() -> WeightFunction:
    """``max(0, t - 1)``; vanishes on ``[0, 1]`` already."""
    return WeightFunction.parse("max(0, t-1)", deriv="1", name="max(0,t-1)")


def log_weight() -> WeightFunction:
    return WeightFunction.parse("log(1+t)", deriv="1/(1+t)", t_min=1e-9, name="log(1+t)")
