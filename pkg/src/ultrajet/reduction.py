"""Finite-horizon construction of the upgraded pair ``(omega~, sigma~)``.

Given a concave weight ``omega``, a weight ``sigma = o(t)`` with a discrete
dilation certificate ``omega(K^j t) <= C H^j sigma(t)`` and a majorant ``f``
with ``sigma = o(f)``, three interlaced sequences ``x_n <= z_n <= y_n`` are
built for ``n <= n_max``.  Between them ``omega~`` alternates between tangent
segments of ``(n-1) omega`` and shifted copies of ``n omega``, while
``sigma~ = n sigma - const`` on ``[x_n, x_(n+1))``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import bisect

from .core import UltrajetError
from .quadrature import log_integral
from .weights import weight_derivative

__all__ = [
    "ReductionError", "ReductionInput", "ReductionResult", "ClaimCheck", "ReductionReport",
    "build_reduction", "eval_tilde", "validate_reduction", "nq_tail",
]

MARGIN = 1.05
T_CAP = 1e300


class ReductionError(UltrajetError):
    pass


@dataclass
class ReductionInput:
    w: object
    sigma: object
    f: object
    constants: dict
    n_max: int = 8
    enforce_nq: bool = False

    def __post_init__(self):
        if self.n_max < 3:
            raise ValueError("n_max must be at least 3")
        for key in ("C", "K", "H"):
            if key not in self.constants:
                raise ValueError(f"constants need {key!r}")
        if not self.constants["K"] > self.constants["H"] > 1:
            raise ValueError("need K > H > 1")


@dataclass
class ReductionResult:
    """Sequences indexed by ``n - 1`` (so ``x[0]`` is ``x_1 = 0``) and segment data."""

    inputs: ReductionInput
    x: np.ndarray
    y: np.ndarray
    z: np.ndarray
    slope: np.ndarray
    affine_offset: np.ndarray
    curved_offset: np.ndarray
    sigma_offset: np.ndarray
    degenerate: list = field(default_factory=list)
    bounds: list = field(default_factory=list)

    @property
    def n_max(self) -> int:
        return self.inputs.n_max

    @property
    def range(self) -> tuple:
        return float(self.x[1]), float(self.x[-1])

    def sequence_rows(self):
        return [(n, float(self.x[n - 1]), float(self.y[n - 1]), float(self.z[n - 1]))
                for n in range(1, self.n_max + 1)]


# -------------------------------------------------------------- thresholds

def _first_crossing(holds, start: float = 1.0, what: str = "") -> float:
    """Smallest ``T`` (up to bisection) such that ``holds`` is true on ``[T, 1e3 T]``."""
    t = start
    while t < T_CAP:
        if all(holds(s) for s in np.geomspace(t, 1e3 * t, 48)):
            break
        t *= 2
    else:
        raise ReductionError(what or "threshold not found below 1e300")
    if t == start:
        return t
    lo, hi = t / 2, t
    for _ in range(60):
        mid = math.sqrt(lo * hi)
        if holds(mid):
            hi = mid
        else:
            lo = mid
    return hi


def _inverse(g, target: float, start: float) -> float:
    """Smallest ``t >= start`` with increasing ``g(t) >= target``."""
    if g(start) >= target:
        return start
    hi = max(start, 1.0) * 2
    while g(hi) < target:
        hi *= 2
        if hi > T_CAP:
            raise ReductionError(f"value {target:.6g} not reached below 1e300")
    return bisect(lambda s: g(s) - target, hi / 2 if hi / 2 >= start else start, hi,
                  xtol=1e-300, rtol=1e-13)


def nq_tail(sigma, x: float, tol: float = 1e-9) -> float:
    """``int_x^inf sigma(t)/(1+t^2) dt`` via ``t = x e^v``."""
    lx = math.log(x)

    def log_f(v):
        lt = lx + np.asarray(v, dtype=float)
        return sigma.log_eval(lt) + lt - np.logaddexp(0.0, 2 * lt)
    res = log_integral(log_f, tol=tol, x_offset=lx)
    return math.inf if res.diverges else res.value


# -------------------------------------------------------------- construction

def build_reduction(inp: ReductionInput) -> ReductionResult:
    w, sig, f = inp.w, inp.sigma, inp.f
    K = inp.constants["K"]
    n_max = inp.n_max
    floor = max(getattr(w, "t_min", 1.0), getattr(sig, "t_min", 1.0))

    def dw(t):
        return float(weight_derivative(w, t))

    x = [0.0]
    y = [0.0]
    z = [0.0]
    degenerate = []
    bounds = [{}]
    for n in range(2, n_max + 1):
        b = {"spacing": max(2.0, K) * y[-1] + n, "floor": floor}

        def envelope(t, n=n):
            return min(t, float(f(t))) >= n * n * float(sig(t))
        b["majorant"] = _first_crossing(
            envelope, what="sigma = o(min(t, f)) fails empirically: "
                           f"no threshold for n={n} below 1e300")
        b["omega_doubling"] = max(_inverse(w, 2.0 ** (n - i) * float(w(z[i - 1])), 1e-12)
                                  for i in range(1, n))
        b["sigma_doubling"] = max(_inverse(sig, 2.0 ** (n - i) * float(sig(x[i - 1])), 1e-12)
                                  for i in range(1, n))
        if inp.enforce_nq:
            cap = n ** -3.0
            b["nq"] = _first_crossing(lambda s: nq_tail(sig, s) <= cap,
                                      what=f"tail integral never drops below 1/{n}^3")
        xn = MARGIN * max(b.values())
        x.append(xn)
        bounds.append(b)

        target = (n - 1) / n * dw(xn)
        hi = 2 * xn
        while dw(hi) > target:
            hi *= 2
            if hi > T_CAP:
                raise ReductionError(f"derivative of omega does not fall to {target:.6g}")
        probe = np.geomspace(xn, hi, 64)
        dprobe = weight_derivative(w, probe)
        if np.any(np.diff(dprobe) >= 0):
            i = int(np.argmax(np.diff(dprobe) >= 0))
            raise ReductionError(
                f"derivative of omega not strictly decreasing near t={probe[i]:.6g}; "
                "omega is not concave enough numerically")
        yn = bisect(lambda s: dw(s) - target, xn, hi, xtol=1e-300, rtol=1e-13)
        y.append(yn)

        goal = n * float(w(yn)) - (n - 1) * (float(w(xn)) + (yn - xn) * dw(xn))

        def gap(s):
            return float(w(s)) - goal
        if gap(yn) <= 1e-12 * abs(goal):
            z.append(yn)
            degenerate.append(n)
        elif gap(xn) >= 0:
            z.append(xn)
        else:
            z.append(bisect(gap, xn, yn, xtol=1e-300, rtol=1e-13))

    xa, ya, za = map(np.array, (x, y, z))
    slope = np.array([0.0] + [dw(t) for t in xa[1:]])
    wz = np.array([float(w(t)) for t in za])
    sx = np.array([float(sig(t)) for t in xa])
    # offsets: affine piece subtracts sum_{m=2}^{n-1} w(z_m), curved piece sum_{m=2}^{n} w(z_m)
    curved = np.concatenate([[0.0], np.cumsum(wz[1:])])
    affine = np.concatenate([[0.0], curved[:-1]])
    return ReductionResult(inp, xa, ya, za, slope, affine, curved, np.cumsum(sx),
                           degenerate, bounds)


def eval_tilde(res: ReductionResult, which: str, t, extend: bool = False):
    """``omega~`` or ``sigma~`` at ``t``.

    Only ``[x_2, x_(n_max)]`` is constructed.  With ``extend=True`` the
    base weights are used on ``[0, x_2)`` and the last segment continues
    past ``x_(n_max)``; otherwise points outside raise.
    """
    if which not in ("omega", "sigma"):
        raise ValueError("which must be 'omega' or 'sigma'")
    arr = np.asarray(t, dtype=float)
    scalar = arr.ndim == 0
    arr = np.atleast_1d(arr)
    lo, hi = res.range
    if not extend and (np.any(arr < lo) or np.any(arr > hi * (1 + 1e-15))):
        raise ValueError(f"t outside the constructed range [{lo:.12g}, {hi:.12g}]")
    idx = np.searchsorted(res.x, arr, side="right") - 1
    n = idx + 1
    if which == "sigma":
        out = n * np.asarray(res.inputs.sigma(arr), dtype=float) - res.sigma_offset[idx]
    else:
        w = res.inputs.w
        wt = np.asarray(w(arr), dtype=float)
        curved = n * wt - res.curved_offset[idx]
        xn = res.x[idx]
        wx = np.asarray(w(xn), dtype=float)
        affine = (n - 1) * (wx + (arr - xn) * res.slope[idx]) - res.affine_offset[idx]
        out = np.where(arr < res.y[idx], affine, curved)
    return float(out[0]) if scalar else out


# -------------------------------------------------------------- validation

@dataclass
class ClaimCheck:
    name: str
    ok: bool
    margin: float
    detail: str = ""


@dataclass
class ReductionReport:
    claims: list
    constants: dict

    @property
    def ok(self) -> bool:
        return all(c.ok for c in self.claims)

    def get(self, name: str) -> ClaimCheck:
        for c in self.claims:
            if c.name == name:
                return c
        raise KeyError(name)


def _segment_grid(res, points):
    ts, ns = [], []
    for n in range(2, res.n_max):
        a, b = res.x[n - 1], res.x[n]
        g = np.geomspace(a, b, points + 1)[:-1]
        ts.append(g)
        ns.append(np.full(points, n))
    return np.concatenate(ts), np.concatenate(ns)


def _claim(name, values, slack=1e-9, detail=""):
    """``values`` are relative margins that must be nonnegative up to ``slack``."""
    m = float(np.min(values)) if np.size(values) else math.inf
    return ClaimCheck(name, bool(m >= -slack), m, detail)


def _midpoint(vals_fn, pts, convex):
    i = np.arange(pts.size - 2)
    a, m, b = pts[i], pts[i + 1], pts[i + 2]
    # pts evenly spaced in the relevant variable, so the middle one is the midpoint
    fa, fm, fb = vals_fn(a), vals_fn(m), vals_fn(b)
    avg = 0.5 * (fa + fb)
    defect = (fm - avg) if convex else (avg - fm)
    return -defect / (1 + np.abs(avg))


def validate_reduction(res: ReductionResult, grid_per_segment: int = 64) -> ReductionReport:
    inp = res.inputs
    w, sig, f = inp.w, inp.sigma, inp.f
    C, K, H = (inp.constants[k] for k in ("C", "K", "H"))
    t0 = inp.constants.get("t0", 0.0)
    t, n = _segment_grid(res, grid_per_segment)
    wt, st = np.asarray(w(t), float), np.asarray(sig(t), float)
    wtil, stil = eval_tilde(res, "omega", t), eval_tilde(res, "sigma", t)
    claims = [
        _claim("omega_lower", (wtil - (n - 2) * wt) / np.abs(wtil)),
        _claim("omega_upper", (n * wt - wtil) / np.abs(wtil)),
        _claim("sigma_lower", (stil - (n - 2) * st) / np.abs(stil)),
        _claim("sigma_upper", (n * st - stil) / np.abs(stil)),
        _claim("sigma_below_f", (np.asarray(f(t), float) / n - stil) / np.abs(stil)),
        _claim("sigma_below_t", (t / n - stil) / np.abs(stil)),
    ]

    # continuity at y_n (both branches) and at every x_(n+1)
    jumps = []
    for k in range(2, res.n_max + 1):
        yk, xk = res.y[k - 1], res.x[k - 1]
        aff = (k - 1) * (float(w(xk)) + (yk - xk) * res.slope[k - 1]) - res.affine_offset[k - 1]
        cur = k * float(w(yk)) - res.curved_offset[k - 1]
        jumps.append(abs(aff - cur) / abs(cur))
    for k in range(2, res.n_max):
        xk = res.x[k]
        for which in ("omega", "sigma"):
            left = eval_tilde(res, which, np.nextafter(xk, 0))
            right = eval_tilde(res, which, xk)
            jumps.append(abs(left - right) / abs(right))
    cont = max(jumps)
    claims.append(ClaimCheck("continuity", bool(cont <= 1e-9), -float(cont), f"max relative jump {cont:.3g}"))

    # shape: concave omega~, convex omega~(e^s), sigma~(e^s) on [x_2, x_(n_max)]
    lo, hi = res.range
    lin = np.linspace(lo, hi, 8 * grid_per_segment * res.n_max + 1)
    geo = np.geomspace(lo, hi, 8 * grid_per_segment + 1)
    dense = np.union1d(lin, geo)
    claims.append(_claim("omega_concave",
                         np.concatenate([_midpoint(lambda s: eval_tilde(res, "omega", s), p, False)
                                         for p in (lin,)])))
    for which in ("omega", "sigma"):
        claims.append(_claim(f"{which}_exp_convex",
                             _midpoint(lambda s, which=which: eval_tilde(res, which, np.clip(np.exp(s), lo, hi)),
                                       np.log(geo), True)))
    inc = np.diff(eval_tilde(res, "omega", dense))
    claims.append(ClaimCheck("omega_increasing", bool(np.all(inc >= 0)), float(inc.min())))

    # ratios at x_n
    ratios = [(k, float(w(res.x[k - 1])) / eval_tilde(res, "omega", res.x[k - 1]))
              for k in range(4, res.n_max + 1)]
    bad = [k for k, r in ratios if r > 1 / (k - 2) * (1 + 1e-9)]
    dec = all(b[1] <= a[1] for a, b in zip(ratios, ratios[1:]))
    claims.append(ClaimCheck("omega_ratio_at_x", not bad and dec,
                             min((1 / (k - 2) - r for k, r in ratios), default=math.inf),
                             f"ratios {[round(r, 12) for _, r in ratios]}"))

    # dilation chain on the constructed range
    N = next((k for k in range(3, res.n_max + 1) if res.x[k - 1] >= t0), None)
    consts = {}
    if N is None or res.n_max - N < 1:
        claims.append(ClaimCheck("chain", False, -math.inf, "range too short for the chain bound"))
    else:
        ys = np.geomspace(res.x[N - 1], hi, 24 * (res.n_max - N + 1))
        ny = np.searchsorted(res.x, ys, side="right")
        worst = -math.inf
        ratio_h = []
        Ht = math.sqrt(H * K)
        # log(j)/j decreases from j = 3 on, so checking max(j, 3) covers every larger j
        Nt = next(j for j in range(1, 10**7)
                  if math.log(max(j, 3)) / max(j, 3) <= math.log(Ht) - math.log(H))
        for j in range(1, 200):
            ok = ys * K ** j <= hi
            if not ok.any():
                break
            yj, nj = ys[ok], ny[ok]
            lhs = eval_tilde(res, "omega", yj * K ** j)
            sy = eval_tilde(res, "sigma", yj)
            bound = C * (nj + j + 1) / (nj - 2) * H ** j * sy
            worst = max(worst, float(np.max(lhs / bound)))
            ratio_h.append(float(np.max(lhs / (Ht ** j * sy))))
        d_tilde = max(ratio_h) if ratio_h else math.nan
        d_bound = C * (N + 2) / (N - 2) * Nt
        claims.append(ClaimCheck("chain", worst <= 1 + 1e-9, 1 - worst,
                                 f"max ratio to C(n+j+1)/(n-2) H^j sigma~: {worst:.6g}"))
        claims.append(ClaimCheck("recertified", bool(H < Ht < K and d_tilde <= d_bound * (1 + 1e-9)),
                                 d_bound - d_tilde,
                                 f"H~={Ht:.12g} N~={Nt} D~={d_tilde:.12g} bound={d_bound:.12g}"))
        consts.update({"N": N, "H_tilde": Ht, "N_tilde": Nt, "D_tilde": d_tilde, "K": K})

        # moderate growth of sigma~
        tt = ys[2 * ys <= hi]
        if tt.size:
            cs = float(np.max(np.asarray(sig(2 * tt), float) / np.asarray(sig(tt), float)))
            nt = np.searchsorted(res.x, tt, side="right")
            lhs = eval_tilde(res, "sigma", 2 * tt) / eval_tilde(res, "sigma", tt)
            rhs = (nt + 2) / (nt - 2) * cs
            claims.append(_claim("sigma_doubling", (rhs - lhs) / rhs,
                                 detail=f"max sigma~(2t)/sigma~(t) = {float(lhs.max()):.6g}"))
            consts["C_prime"] = float(lhs.max())

    if inp.enforce_nq:
        tails = [nq_tail(sig, res.x[k - 1]) for k in range(2, res.n_max + 1)]
        caps = [k ** -3.0 for k in range(2, res.n_max + 1)]
        claims.append(_claim("nq_tails", [(c - v) / c for v, c in zip(tails, caps)]))
        consts["nq_tails"] = tails
    return ReductionReport(claims, consts)
