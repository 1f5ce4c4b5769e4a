"""Mass integrals over shrinking disks and strips, and growth-law fitting.

All singular integration runs in the chart coordinates of the resolution's
gap columns: {0 < x < a, 0 < u < cap(x)} with the integrand a product of
factor powers evaluated at the mapped global point.  The u = 0 edge carries a
known power-law singularity u^B (B from the factor vanishing orders at the
branch); the x -> 0 end is handled by geometric shells with tail
extrapolation.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .funcspec import Direction, ExponentPair, MultiplierSpec
from .newton import IntegrationColumn, Resolution, Sliver, resolve_spec

__all__ = [
    "FitResult", "g_eval", "disk_mass", "disk_mass_detailed", "strip_mass",
    "fit_exponents", "mass_exponent", "directional_exponent",
    "sliver_mass_law", "closed_form_mass_law", "MassEstimate",
]

_GAUSS_CACHE: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def _gauss(n: int):
    if n not in _GAUSS_CACHE:
        _GAUSS_CACHE[n] = np.polynomial.legendre.leggauss(n)
    return _GAUSS_CACHE[n]


# ---------------------------------------------------------------------------
# Pointwise evaluation


def g_eval(spec: MultiplierSpec, x, y):
    """chi_E(x,y) * prod |f_i(x,y)|^gamma_i.  Points of the singular set
    (some f_i = 0 with gamma_i < 0) return the +inf marker regardless of
    region membership.  Amplitude excluded."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    inside = spec.region.contains(x, y)
    out = np.where(inside, 1.0, 0.0)
    singular = np.zeros(np.broadcast(x, y).shape, dtype=bool)
    for f in spec.active_factors():
        vals = np.abs(f.poly(x, y))
        if f.gamma < 0:
            singular |= vals == 0
        with np.errstate(divide="ignore", invalid="ignore"):
            powed = np.where(vals > 0, vals ** f.gamma,
                             np.inf if f.gamma < 0 else 0.0)
            out = out * powed
    out = np.where(inside, out, 0.0)
    out = np.where(singular, np.inf, out)
    if out.shape == ():
        return float(out)
    return out


# ---------------------------------------------------------------------------
# Column integrand and u-intervals


@dataclass(frozen=True)
class _ColumnTask:
    col: IntegrationColumn
    weight_fn: Callable  # W(x, u) -> values (vectorized over same-shape arrays)
    edge_power: float    # W ~ C(x) u^edge_power as u -> 0+


def _column_task(spec: MultiplierSpec, col: IntegrationColumn,
                 with_amplitude: bool) -> _ColumnTask:
    factors = spec.active_factors()
    edge_power = float(sum(f.gamma * b for f, b in zip(factors, col.edge_betas)))

    def W(x, u):
        gx, gy = col.to_global(x, u)
        total = np.ones_like(np.asarray(gx, dtype=float))
        for f in factors:
            total = total * np.abs(f.poly(gx, gy)) ** f.gamma
        if with_amplitude:
            total = total * spec.amplitude.eval(gx, gy)
        return total

    return _ColumnTask(col, W, edge_power)


def _pullback(tri, av: float, bv: float) -> tuple[float, float]:
    """Coefficients (w1, w2) with av*px + bv*py = w1*x + w2*yloc."""
    if tri.swap:
        # (px, py) = (sx*yloc, sy*x)
        return bv * tri.sy, av * tri.sx
    return av * tri.sx, bv * tri.sy


_EMPTY = -1e300


def _bound_curves(col: IntegrationColumn, r_disk: Optional[float],
                  linear: Sequence[tuple[float, float, float]]):
    """Candidate lower/upper u-bound curves as vectorized callables."""

    def cap(x):
        return np.asarray(col.cap(x), dtype=float)

    def zero(x):
        return np.zeros_like(np.asarray(x, dtype=float))

    ups = [cap]
    los = [zero]
    if r_disk is not None:
        def disk_bound(x):
            x = np.asarray(x, dtype=float)
            s2 = r_disk * r_disk - x * x
            s = np.sqrt(np.where(s2 > 0, s2, 0.0))
            val = (s - col.shift(x)) if col.ysign > 0 else (col.shift(x) - s)
            return np.where(s2 > 0, val, _EMPTY if col.ysign > 0 else -_EMPTY)
        if col.ysign > 0:
            ups.append(disk_bound)
        else:
            los.append(disk_bound)
    for (av, bv, bound) in linear:
        w1, w2 = _pullback(col.triangle, av, bv)
        Q = w2 * col.ysign

        def mk(w1=w1, w2=w2, Q=Q, bound=bound, sign=1):
            def f(x):
                x = np.asarray(x, dtype=float)
                P = w1 * x + w2 * col.shift(x)
                if Q == 0.0:
                    ok = np.abs(P) < bound
                    if sign > 0:
                        return np.where(ok, -_EMPTY, _EMPTY)
                    return np.where(ok, _EMPTY, -_EMPTY)
                e1 = (-bound - P) / Q
                e2 = (bound - P) / Q
                return np.maximum(e1, e2) if sign > 0 else np.minimum(e1, e2)
            return f

        ups.append(mk(sign=1))
        los.append(mk(sign=-1))
    return los, ups


def _u_interval(col: IntegrationColumn, x: np.ndarray,
                r_disk: Optional[float] = None,
                linear: Sequence[tuple[float, float, float]] = ()):
    """Allowed u-interval per x; empty where hi <= lo."""
    los, ups = _bound_curves(col, r_disk, linear)
    x = np.asarray(x, dtype=float)
    lo = los[0](x)
    for f in los[1:]:
        lo = np.maximum(lo, f(x))
    hi = ups[0](x)
    for f in ups[1:]:
        hi = np.minimum(hi, f(x))
    return lo, hi


def _x_breakpoints(col: IntegrationColumn, bot: float, top: float,
                   r_disk: Optional[float], linear: Sequence,
                   n_scan: int = 33) -> list[float]:
    """x-values inside (bot, top) where the active u-bound switches or the
    interval opens/closes; located by scan plus bisection."""
    los, ups = _bound_curves(col, r_disk, linear)
    xs = np.linspace(bot, top, n_scan)
    lo_vals = np.stack([f(xs) for f in los])
    up_vals = np.stack([f(xs) for f in ups])
    lo_arg = np.argmax(lo_vals, axis=0)
    up_arg = np.argmin(up_vals, axis=0)
    gap = np.min(up_vals, axis=0) - np.max(lo_vals, axis=0)
    marks = set()

    def bisect(f, a, b):
        fa = f(a)
        for _ in range(60):
            m = 0.5 * (a + b)
            if (f(m) > 0) == (fa > 0):
                a = m
            else:
                b = m
        return 0.5 * (a + b)

    for i in range(n_scan - 1):
        a, b = float(xs[i]), float(xs[i + 1])
        if (gap[i] > 0) != (gap[i + 1] > 0):
            marks.add(bisect(lambda t: (min(f(np.array([t]))[0] for f in ups)
                                        - max(f(np.array([t]))[0] for f in los)),
                             a, b))
        if up_arg[i] != up_arg[i + 1]:
            f1, f2 = ups[up_arg[i]], ups[up_arg[i + 1]]
            marks.add(bisect(lambda t: f1(np.array([t]))[0] - f2(np.array([t]))[0],
                             a, b))
        if lo_arg[i] != lo_arg[i + 1]:
            f1, f2 = los[lo_arg[i]], los[lo_arg[i + 1]]
            marks.add(bisect(lambda t: f1(np.array([t]))[0] - f2(np.array([t]))[0],
                             a, b))
    return sorted(m for m in marks if bot < m < top)


# ---------------------------------------------------------------------------
# Column quadrature (real weight)


def _inner_u_integral(task: _ColumnTask, x: np.ndarray, lo: np.ndarray,
                      hi: np.ndarray, n: int, j_cells: int) -> np.ndarray:
    """integral of W(x, u) du over (lo(x), hi(x)) per x, vectorized.

    Where the interval touches u = 0 the cells are log-spaced down to well
    below the column's inner structural scale, with an analytic power-law
    tail under the last cell; detached intervals get log-spaced Gauss cells."""
    out = np.zeros_like(x)
    mask = hi > np.maximum(lo, 0.0)
    if not np.any(mask):
        return out
    xs = x[mask]
    los = np.maximum(lo[mask], 0.0)
    his = hi[mask]
    nodes, wts = _gauss(n)
    B = task.edge_power
    vals = np.zeros_like(xs)

    edge = los <= 0.0
    if np.any(edge):
        xe = xs[edge]
        he = his[edge]
        esc = np.minimum(np.asarray(task.col.edge_scale(xe), dtype=float), he)
        delta = np.minimum(he / 16.0, esc / 1024.0)
        ncells = int(min(200, max(j_cells,
                                  4 + math.ceil(np.max(np.log2(he / delta))))))
        fr = np.linspace(1.0, 0.0, ncells + 1)            # 1 -> delta, 0 -> he
        edges = he[:, None] * (delta / he)[:, None] ** fr[None, :]
        a_ = edges[:, :-1]
        b_ = edges[:, 1:]
        hw = 0.5 * (b_ - a_)
        um = (0.5 * (a_ + b_))[:, :, None] + hw[:, :, None] * nodes
        xg = np.broadcast_to(xe[:, None, None], um.shape)
        wv = task.weight_fn(xg.ravel(), um.ravel()).reshape(um.shape)
        acc = np.sum(hw * np.sum(wv * wts, axis=2), axis=1)
        wref = task.weight_fn(xe, delta)
        if B > -1.0:
            acc = acc + wref * delta / (B + 1.0)
        vals[edge] = acc

    if np.any(~edge):
        xm = xs[~edge]
        lm = los[~edge]
        hm = his[~edge]
        # log-spaced cells sized to the worst lo..hi ratio in the batch
        ratio = hm / np.maximum(lm, 1e-300)
        cells = int(np.clip(math.ceil(np.max(np.log2(np.maximum(ratio, 2.0)))) + 3,
                            4, 72))
        fr = np.linspace(0, 1, cells + 1)[None, :]
        bnds = lm[:, None] * ratio[:, None] ** fr
        a_ = bnds[:, :-1]
        b_ = bnds[:, 1:]
        hw = 0.5 * (b_ - a_)
        um = (0.5 * (a_ + b_))[:, :, None] + hw[:, :, None] * nodes
        xg = np.broadcast_to(xm[:, None, None], um.shape)
        wv = task.weight_fn(xg.ravel(), um.ravel()).reshape(um.shape)
        vals[~edge] = np.sum(hw * np.sum(wv * wts, axis=2), axis=1)

    out[mask] = vals
    return out


def _graded(a: float, b: float, toward_right: bool, k: int = 12) -> list[tuple[float, float]]:
    w = b - a
    out = []
    if toward_right:
        out.append((a, b - w * 0.5))
        for j in range(1, k):
            out.append((b - w * 2.0 ** -j, b - w * 2.0 ** -(j + 1)))
        out.append((b - w * 2.0 ** -k, b))
    else:
        out.append((a + w * 0.5, b))
        for j in range(1, k):
            out.append((a + w * 2.0 ** -(j + 1), a + w * 2.0 ** -j))
        out.append((a, a + w * 2.0 ** -k))
    return sorted(out)


def _shell_cells(task: _ColumnTask, bot: float, top: float, x_hi: float,
                 r_disk: Optional[float], linear: Sequence) -> list[tuple[float, float]]:
    """Sub-cells of one x-shell: split at bound switch points and grade into
    every interior breakpoint (the per-x inner integral picks up fractional
    power cusps there) and into ends where the interval pinches closed."""
    if r_disk is None and not linear:
        return [(bot, top)]
    marks = _x_breakpoints(task.col, bot, top, r_disk, linear)
    pts = [bot] + marks + [top]
    cells = []
    for a, b in zip(pts[:-1], pts[1:]):
        eps = 1e-9 * (b - a)
        xs = np.array([a + eps, 0.5 * (a + b), b - eps])
        lo, hi = _u_interval(task.col, xs, r_disk, linear)
        gap = np.maximum(hi - np.maximum(lo, 0.0), 0.0)
        if gap[1] <= 0:
            cells.append((a, b))
            continue
        toward_l = a in marks or gap[0] < 0.2 * gap[1]
        toward_r = b in marks or gap[2] < 0.2 * gap[1]
        if toward_l and toward_r:
            m = 0.5 * (a + b)
            cells.extend(_graded(a, m, False))
            cells.extend(_graded(m, b, True))
        elif toward_r:
            cells.extend(_graded(a, b, True))
        elif toward_l:
            cells.extend(_graded(a, b, False))
        else:
            cells.append((a, b))
    return cells


def _column_mass(task: _ColumnTask, x_hi: float,
                 r_disk: Optional[float], linear: Sequence,
                 n: int, j_cells: int, levels: int) -> tuple[float, float]:
    """(value, tail_error) of the column integral with geometric x-shells and
    tail extrapolation at x -> 0."""
    nodes, wts = _gauss(n)
    ratio = 4.0
    shell_vals = []
    top = x_hi
    for lvl in range(levels):
        bot = top / ratio
        acc = 0.0
        cells = _shell_cells(task, bot, top, x_hi, r_disk, linear)
        for ca, cb in cells:
            xm = 0.5 * (cb + ca) + 0.5 * (cb - ca) * nodes
            xw = 0.5 * (cb - ca) * wts
            lo, hi = _u_interval(task.col, xm, r_disk, linear)
            inner = _inner_u_integral(task, xm, lo, hi, n, j_cells)
            acc += float(np.sum(xw * inner))
        shell_vals.append(acc)
        top = bot
    total = float(np.sum(shell_vals))
    tail = 0.0
    tail_err = 0.0
    s_last, s_prev = shell_vals[-1], shell_vals[-2]
    if s_last > 0 and s_prev > 0:
        r_est = s_last / s_prev
        if r_est < 0.9:
            tail = s_last * r_est / (1.0 - r_est)
            tail_err = 0.5 * tail
        else:
            tail_err = 10.0 * s_last
    elif s_last > 0:
        tail_err = 10.0 * s_last
    return total + tail, tail_err


def _assemble_mass(spec: MultiplierSpec, r_disk: Optional[float],
                   linear: Sequence, tol: float, with_amplitude: bool,
                   x_hi_fn=None) -> tuple[float, float]:
    res = resolve_spec(spec)
    tasks = [_column_task(spec, c, with_amplitude)
             for c in res.columns if c.region_weight == 1]
    results = []
    for refine in range(4):
        n = 10 + 4 * refine
        j = 16 + 8 * refine
        levels = 22 + 12 * refine
        total, tail_err = 0.0, 0.0
        for task in tasks:
            x_hi = res.a_geom
            if r_disk is not None:
                x_hi = min(x_hi, r_disk)
            if x_hi_fn is not None:
                x_hi = min(x_hi, x_hi_fn(task.col))
            if x_hi <= 0:
                continue
            v, te = _column_mass(task, x_hi, r_disk, linear, n, j, levels)
            total += v
            tail_err += te
        results.append((total, tail_err))
        if len(results) >= 2:
            v0, v1 = results[-2][0], results[-1][0]
            est = abs(v1 - v0) + results[-1][1]
            if est <= tol * max(abs(v1), 1e-300):
                return v1, est
    v1 = results[-1][0]
    est = abs(results[-1][0] - results[-2][0]) + results[-1][1]
    achieved = est / max(abs(v1), 1e-300)
    warnings.warn(f"mass quadrature reached relative accuracy {achieved:.2e} "
                  f"(requested {tol:.2e})")
    return v1, est


@dataclass(frozen=True)
class MassEstimate:
    value: float
    error: float


def disk_mass(spec: MultiplierSpec, r: float, tol: float = 1e-6,
              with_amplitude: bool = False) -> float:
    """integral of g over the disk of radius r (relative tolerance tol,
    estimated by refinement disagreement)."""
    return disk_mass_detailed(spec, r, tol, with_amplitude).value


def disk_mass_detailed(spec: MultiplierSpec, r: float, tol: float = 1e-6,
                       with_amplitude: bool = False) -> MassEstimate:
    if not 0 < r <= spec.radius + 1e-12:
        raise ValueError(f"radius {r} outside (0, region radius]")
    res = resolve_spec(spec)
    r_eff = min(r, spec.radius)
    value, err = _assemble_mass(spec, r_eff, (), tol, with_amplitude)
    if r_eff > res.a_geom:
        outer, oerr = _outer_mass(spec, res, r_eff, with_amplitude)
        value += outer
        err += oerr
    return MassEstimate(value, err)


def _covered_mask(res: Resolution, X: np.ndarray, Y: np.ndarray, a: float):
    """Points covered by the eight chart triangles truncated at local x <= a."""
    ax = np.abs(X)
    ay = np.abs(Y)
    same_sign = (X >= 0) == (Y >= 0)
    s = np.where(same_sign, float(res.s_pos), float(res.s_neg))
    below = ay < s * ax
    return np.where(below, ax <= a, ay <= a)


def _outer_mass(spec: MultiplierSpec, res: Resolution, r: float,
                with_amplitude: bool) -> tuple[float, float]:
    """Fallback for the part of the disk outside the chart-covered region:
    polar midpoint rule at two refinements (integrand smooth unless factor
    curves extend past the charts; the disagreement reports that honestly)."""
    a = res.a_geom
    vals = []
    for nr, nth in ((200, 320), (400, 640)):
        redges = np.geomspace(a * 0.98, r, nr + 1)
        tedges = np.linspace(-math.pi, math.pi, nth + 1)
        rm = 0.5 * (redges[:-1] + redges[1:])
        tm = 0.5 * (tedges[:-1] + tedges[1:])
        R, T = np.meshgrid(rm, tm, indexing="ij")
        X = R * np.cos(T)
        Y = R * np.sin(T)
        G = g_eval(spec, X, Y)
        if with_amplitude:
            G = G * spec.amplitude.eval(X, Y)
        G = np.where(_covered_mask(res, X, Y, a) | ~np.isfinite(G), 0.0, G)
        area = np.outer(np.diff(redges) * rm, np.diff(tedges))
        vals.append(float(np.sum(G * area)))
    return vals[-1], abs(vals[-1] - vals[-2])


def strip_mass(spec: MultiplierSpec, v: Direction, r: float, c: float,
               tol: float = 1e-6) -> float:
    """integral of g over the strip {|p.v| < r, |p.v_perp| < c}."""
    if not 0 < r < c:
        raise ValueError("need 0 < r < c")
    res = resolve_spec(spec)
    c = min(c, res.a_geom)
    v1, v2 = v.v
    p1, p2 = v.v_perp
    linear = ((v1, v2, r), (p1, p2, c))

    def x_cap(col: IntegrationColumn) -> float:
        w1, w2 = _pullback(col.triangle, v1, v2)
        slope_bound = abs(w1) - abs(w2) * float(col.triangle.b)
        if slope_bound > 1e-12:
            return min(res.a_geom, 1.05 * r / slope_bound)
        return res.a_geom

    value, _ = _assemble_mass(spec, None, linear, tol, False, x_hi_fn=x_cap)
    return value


# ---------------------------------------------------------------------------
# Growth-law fitting


@dataclass(frozen=True)
class FitResult:
    """Fitted law c * r^power * |ln r|^logpower over a window of radii."""

    exponents: ExponentPair
    constant: float
    window: tuple[float, float]
    residual: float
    samples: tuple[tuple[float, float], ...]
    tied: bool = False

    @property
    def power(self) -> float:
        return self.exponents.power

    @property
    def logpower(self) -> int:
        return self.exponents.logpower


def fit_exponents(samples) -> FitResult:
    """Fit ln I = ln c + a ln r + b ln ln(1/r) with b in {0, 1, 2}.

    Radii strictly decreasing (all below 1), values positive.  A log power is
    accepted only when it cuts the max relative residual by at least 25%.
    """
    samples = [(float(r), float(v)) for r, v in samples]
    if len(samples) < 8:
        raise ValueError("need at least 8 samples")
    radii = np.array([r for r, _ in samples])
    vals = np.array([v for _, v in samples])
    if np.any(np.diff(radii) >= 0):
        raise ValueError("radii must be strictly decreasing")
    if np.any(vals <= 0):
        raise ValueError("values must be positive")
    if np.any(radii >= 1.0):
        raise ValueError("fit window must sit inside r < 1")
    ln_r = np.log(radii)
    ln_v = np.log(vals)
    ln_ln = np.log(np.log(1.0 / radii))
    fits = {}
    for b in (0, 1, 2):
        rhs = ln_v - b * ln_ln
        A = np.vstack([np.ones_like(ln_r), ln_r]).T
        coef, *_ = np.linalg.lstsq(A, rhs, rcond=None)
        model = A @ coef + b * ln_ln
        resid = float(np.max(np.abs(np.expm1(model - ln_v))))
        fits[b] = (coef, resid)
    b_sel = 0
    if fits[1][1] <= 0.75 * fits[0][1]:
        b_sel = 1
        if fits[2][1] <= 0.75 * fits[1][1]:
            b_sel = 2
    coef, resid = fits[b_sel]
    return FitResult(ExponentPair(float(coef[1]), b_sel), float(np.exp(coef[0])),
                     (float(radii[-1]), float(radii[0])), resid,
                     tuple((float(r), float(v)) for r, v in samples))


# ---------------------------------------------------------------------------
# Closed-form (monomial-model) mass laws


def sliver_mass_law(spec: MultiplierSpec, sliver: Sliver,
                    gamma_scale: float = 1.0
                    ) -> Optional[tuple[float, int, float]]:
    """(exponent, logpower, constant) of the model mass
    integral_{x<X} x^A (integral_g^G u^B du) dx ~ const * X^exp * ln(1/X)^log,
    or None when the iterated monomial integral diverges.

    gamma_scale replaces each gamma_i by gamma_scale*gamma_i (the L^p
    criterion applies it with p)."""
    factors = spec.active_factors()
    A = gamma_scale * sum(f.gamma * float(m.alpha)
                          for f, m in zip(factors, sliver.per_factor))
    B = gamma_scale * sum(f.gamma * m.beta
                          for f, m in zip(factors, sliver.per_factor))
    d_pref = 1.0
    for f, m in zip(factors, sliver.per_factor):
        d_pref *= abs(m.d) ** (gamma_scale * f.gamma)
    up = sliver.upper.leading()
    M, H = float(up[0]), abs(float(up[1]))
    lo = sliver.lower.leading()
    eps = 1e-12
    if B > -1.0 + eps:
        E = A + M * (B + 1.0)
        if E > -1.0 + eps:
            return (E + 1.0, 0, d_pref * H ** (B + 1.0) / ((B + 1.0) * (E + 1.0)))
        return None
    if abs(B + 1.0) <= eps:
        # the inner integral produces the logarithm; needs a lower boundary
        if lo is None:
            return None
        m_ = float(lo[0])
        if A > -1.0 + eps:
            return (A + 1.0, 1, d_pref * (m_ - M) / (A + 1.0))
        return None
    if lo is None:
        return None
    m_, h_ = float(lo[0]), abs(float(lo[1]))
    E = A + m_ * (B + 1.0)
    if E > -1.0 + eps:
        return (E + 1.0, 0, d_pref * h_ ** (B + 1.0) / (-(B + 1.0) * (E + 1.0)))
    return None


def closed_form_mass_law(spec: MultiplierSpec) -> tuple[ExponentPair, float, bool]:
    """Aggregate model mass law over the in-region slivers: minimal exponent
    wins, ties take the larger log power; the flag reports exponent ties
    between distinct slivers."""
    res = resolve_spec(spec)
    laws = []
    for sl in res.slivers:
        if sl.region_weight == 0:
            continue
        law = sliver_mass_law(spec, sl)
        if law is None:
            raise ValueError(f"model mass diverges on sliver {sl.ident}")
        laws.append(law)
    if not laws:
        raise ValueError("no in-region slivers")
    e_min = min(l[0] for l in laws)
    contenders = [l for l in laws if l[0] < e_min + 1e-9]
    b_max = max(l[1] for l in contenders)
    const = sum(l[2] for l in contenders if l[1] == b_max)
    tied = len(contenders) > 1
    return ExponentPair(e_min, b_max), const, tied


# ---------------------------------------------------------------------------
# Fitted exponents


_FIT_RMIN = 1e-5
_FIT_RMAX = 1e-2
_FIT_SAMPLES = 16


from functools import lru_cache


@lru_cache(maxsize=32)
def mass_exponent(spec: MultiplierSpec, tol: float = 1e-6,
                  rmin: float = _FIT_RMIN, rmax: float = _FIT_RMAX,
                  samples: int = _FIT_SAMPLES) -> FitResult:
    """Fitted disk-mass growth law (the mass exponent pair)."""
    radii = np.geomspace(rmax, rmin, samples)
    vals = [disk_mass(spec, float(r), tol) for r in radii]
    return fit_exponents(list(zip(radii, vals)))


@lru_cache(maxsize=64)
def directional_exponent(spec: MultiplierSpec, v: Direction,
                         tol: float = 1e-6,
                         rmin: float = _FIT_RMIN, rmax: float = _FIT_RMAX,
                         samples: int = _FIT_SAMPLES,
                         residual_threshold: float = 0.25) -> FitResult:
    """Fitted strip-mass growth law (delta_v, e_v) for direction v.

    Falls back to the per-sliver monomial model evaluated at tiny radii
    (where direct quadrature cannot reach) when the fit residual is poor.
    """
    res = resolve_spec(spec)
    c = res.a_geom / 2
    radii = np.geomspace(rmax, rmin, samples)
    vals = [strip_mass(spec, v, float(r), c, tol) for r in radii]
    fit = fit_exponents(list(zip(radii, vals)))
    tied = _strip_law_tied(spec, res, v)
    if fit.residual <= residual_threshold:
        return FitResult(fit.exponents, fit.constant, fit.window, fit.residual,
                         fit.samples, tied)
    model = _model_strip_fit(spec, res.slivers, v)
    return FitResult(model.exponents, model.constant, model.window,
                     model.residual, model.samples, tied)


def _strip_interval_mass(spec: MultiplierSpec, slivers: Sequence[Sliver],
                         v: Direction, r: float) -> float:
    """Strip mass of the monomial models (exact u-integrals, log-cell
    x-quadrature); valid at arbitrarily small r."""
    factors = spec.active_factors()
    v1, v2 = v.v
    total = 0.0
    nodes, wts = _gauss(12)
    for sl in slivers:
        if sl.region_weight == 0:
            continue
        A = sum(f.gamma * float(m.alpha) for f, m in zip(factors, sl.per_factor))
        B = sum(f.gamma * m.beta for f, m in zip(factors, sl.per_factor))
        d_pref = 1.0
        for f, m in zip(factors, sl.per_factor):
            d_pref *= abs(m.d) ** f.gamma
        w1, w2 = _pullback(sl.triangle, v1, v2)
        Q = w2 * sl.ysign
        a = sl.x_max
        edges = np.geomspace(a * 1e-14, a, 141)
        xm = (0.5 * (edges[:-1] + edges[1:]))[:, None] + \
            (0.5 * np.diff(edges))[:, None] * nodes[None, :]
        xw = (0.5 * np.diff(edges))[:, None] * wts[None, :]
        xm = xm.ravel()
        xw = xw.ravel()
        lo = sl.lower(xm)
        hi = sl.upper(xm)
        P = w1 * xm + w2 * sl.shift(xm)
        if Q == 0.0:
            sel = np.abs(P) < r
            lo2 = lo
            hi2 = np.where(sel, hi, lo)
        else:
            e1 = (-r - P) / Q
            e2 = (r - P) / Q
            lo2 = np.maximum(lo, np.minimum(e1, e2))
            hi2 = np.minimum(hi, np.maximum(e1, e2))
        lo2 = np.maximum(lo2, 0.0)
        hi2 = np.maximum(hi2, lo2)
        if abs(B + 1.0) > 1e-12:
            inner = (hi2 ** (B + 1.0) - lo2 ** (B + 1.0)) / (B + 1.0)
        else:
            safe_lo = np.where(lo2 > 0, lo2, 1.0)
            inner = np.where((hi2 > lo2) & (lo2 > 0), np.log(hi2 / safe_lo), 0.0)
        inner = np.where(np.isfinite(inner), inner, 0.0)
        total += d_pref * float(np.sum(xw * xm ** A * inner))
    return total


def _model_strip_fit(spec: MultiplierSpec, slivers: Sequence[Sliver],
                     v: Direction) -> FitResult:
    radii = np.geomspace(1e-8, 1e-12, 9)
    vals = [_strip_interval_mass(spec, slivers, v, float(r)) for r in radii]
    return fit_exponents(list(zip(radii, vals)))


def _strip_law_tied(spec: MultiplierSpec, res: Resolution, v: Direction) -> bool:
    """True when two or more slivers achieve the minimal strip rate."""
    r1, r2 = 1e-10, 1e-13
    rates = []
    for sl in res.slivers:
        if sl.region_weight == 0:
            continue
        m1 = _strip_interval_mass(spec, (sl,), v, r1)
        m2 = _strip_interval_mass(spec, (sl,), v, r2)
        if m1 > 0 and m2 > 0:
            rates.append(round(math.log(m1 / m2) / math.log(r1 / r2), 4))
    if len(rates) < 2:
        return False
    rmin = min(rates)
    return rates.count(rmin) > 1
