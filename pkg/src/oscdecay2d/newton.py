"""Newton polygons, Puiseux branches, and the chart (sliver) decomposition.

The decomposition splits a neighborhood of the origin into eight triangles by
the axes and two lines y = s*x, y = -s*x chosen off the zero set of the
combined leading form.  Each triangle, reflected to {0 < Y < b X}, is cut into
slivers {0 < x < a, g(x) < y < G(x)} along shifted coordinates
(x, y) -> (x, +/-y + k(x)) so that every factor polynomial is comparable to a
single monomial d x^alpha y^beta on each sliver, within a requested relative
accuracy eta, certified on a sample grid.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import gcd
from typing import Iterable, Optional, Sequence

import numpy as np

from .funcspec import Direction, MultiplierSpec, SpecError
from .poly import BivariatePoly, PolyError, as_fraction
from .series import FractionalSeries

__all__ = [
    "NewtonPolygon", "newton_polygon", "leading_form", "root_directions",
    "puiseux_branches", "FactorModel", "Sliver", "Triangle", "GridSpec",
    "MonomialCertificate", "monomialize_check", "sliver_decomposition",
    "Resolution", "resolve_spec", "ResolutionError",
]


class ResolutionError(RuntimeError):
    """Branch expansion or chart construction failed."""


# ---------------------------------------------------------------------------
# Newton polygon


@dataclass(frozen=True)
class NewtonPolygon:
    """Lower-left convex hull boundary of the exponent support.

    ``vertices`` are ordered by increasing x-exponent; each edge is
    (slope, (v_from, v_to)) with negative rational slope.
    """

    vertices: tuple[tuple[Fraction, Fraction], ...]
    edges: tuple[tuple[Fraction, tuple[tuple[Fraction, Fraction], tuple[Fraction, Fraction]]], ...]

    def edge_exponents(self) -> list[Fraction]:
        """The exponent sigma = -1/slope of each edge (increasing)."""
        return [-1 / s for s, _ in self.edges]


def newton_polygon(f: BivariatePoly) -> NewtonPolygon:
    """Newton polygon of a nonzero polynomial (deterministic vertex order)."""
    if f.is_zero():
        raise PolyError("newton_polygon of the zero polynomial")
    pts = sorted(set(f.support()))
    # Pareto-minimal points: nothing weakly below-left of a kept point.
    minimal = []
    for p in pts:
        if not any(q != p and q[0] <= p[0] and q[1] <= p[1] for q in pts):
            minimal.append(p)
    minimal.sort()
    hull: list[tuple[Fraction, Fraction]] = []
    for p in minimal:
        while len(hull) >= 2:
            o, a = hull[-2], hull[-1]
            cross = (a[0] - o[0]) * (p[1] - o[1]) - (a[1] - o[1]) * (p[0] - o[0])
            if cross <= 0:
                hull.pop()
            else:
                break
        hull.append(p)
    edges = []
    for v1, v2 in zip(hull, hull[1:]):
        slope = (v2[1] - v1[1]) / (v2[0] - v1[0])
        edges.append((slope, (v1, v2)))
    return NewtonPolygon(tuple(hull), tuple(edges))


def leading_form(f: BivariatePoly) -> BivariatePoly:
    """Homogeneous part of lowest total degree."""
    if f.is_zero():
        raise PolyError("leading_form of the zero polynomial")
    return f.leading_form()


def _real_line_slopes(form: BivariatePoly) -> tuple[list[float], bool]:
    """Real zero lines y = s x of a homogeneous form; flag for the line x=0."""
    if form.is_zero():
        return [], False
    d = form.max_total_degree()
    # coefficient of s^j in form(1, s)
    maxj = max(int(j) for _, j, _ in form.terms)
    coeffs = [0.0] * (maxj + 1)
    for i, j, c in form.terms:
        coeffs[int(j)] += float(c)
    has_x0_line = all(j < d for _, j, _ in form.terms)  # no pure y^d term
    poly1d = np.polynomial.Polynomial(coeffs)
    slopes = []
    if maxj >= 1:
        roots = poly1d.roots()
        for r in roots:
            if abs(r.imag) < 1e-9 * (1 + abs(r)):
                slopes.append(float(r.real))
    elif coeffs[0] == 0.0:
        slopes.append(0.0)
    return slopes, has_x0_line


def root_directions(spec: MultiplierSpec) -> list[Direction]:
    """Zero lines of all factor leading forms plus boundary tangents.

    Deduplicated and sorted by angle in [0, pi).
    """
    dirs: list[Direction] = []
    for f in spec.active_factors():
        form = f.poly.leading_form()
        if form.min_total_degree() == 0:
            continue  # nonzero at the origin: no lines
        slopes, x0 = _real_line_slopes(form)
        for s in slopes:
            dirs.append(Direction(math.atan(s)))
        if x0:
            dirs.append(Direction(math.pi / 2))
    for c in spec.boundary_curves():
        dirs.append(c.tangent_direction())
    out: list[Direction] = []
    for d in sorted(dirs, key=lambda d: d.angle):
        if not any(d.is_parallel(e) for e in out):
            out.append(d)
    return out


# ---------------------------------------------------------------------------
# Branch expansion (Newton-Puiseux)


def _edge_polynomial(Q: BivariatePoly, edge) -> tuple[list, int]:
    """Coefficients (by tau power, ascending) of the edge polynomial."""
    slope, (v1, v2) = edge
    jmin = min(v1[1], v2[1])
    jmax = max(v1[1], v2[1])
    level = v1[0] + (-1 / slope) * v1[1]
    coeffs = {}
    for i, j, c in Q.terms:
        if i + (-1 / slope) * j == level and jmin <= j <= jmax:
            coeffs[int(j - jmin)] = c
    deg = int(jmax - jmin)
    out = [coeffs.get(k, Fraction(0)) for k in range(deg + 1)]
    return out, int(jmin)


def _rational_roots(coeffs: list[Fraction]) -> tuple[list[Fraction], list[float]]:
    """Exact rational roots (with deflation) plus numeric roots of the rest."""
    den = 1
    for c in coeffs:
        den = den * c.denominator // gcd(den, c.denominator)
    ints = [int(c * den) for c in coeffs]
    while ints and ints[-1] == 0:
        ints.pop()
    rational: list[Fraction] = []
    # strip tau = 0 roots (cannot occur for edge polys, but be safe)
    while ints and ints[0] == 0:
        ints.pop(0)
    changed = True
    while changed and len(ints) > 1:
        changed = False
        a0, an = abs(ints[0]), abs(ints[-1])
        cand = set()
        for p in _divisors(a0):
            for q in _divisors(an):
                cand.add(Fraction(p, q))
                cand.add(Fraction(-p, q))
        for r in sorted(cand):
            quot, rem = _deflate(ints, r)
            while rem == 0:
                rational.append(r)
                ints = quot
                changed = True
                if len(ints) <= 1:
                    break
                quot, rem = _deflate(ints, r)
    numeric: list[float] = []
    if len(ints) > 1:
        roots = np.polynomial.Polynomial([float(c) for c in ints]).roots()
        for r in roots:
            if abs(r.imag) < 1e-9 * (1 + abs(r)) and r.real != 0:
                numeric.append(float(r.real))
    return rational, _cluster(numeric)


def _divisors(n: int) -> list[int]:
    n = abs(n)
    if n == 0:
        return [1]
    out = []
    d = 1
    while d * d <= n:
        if n % d == 0:
            out.append(d)
            out.append(n // d)
        d += 1
    return sorted(set(out))


def _deflate(ints: list[int], r: Fraction):
    """Synthetic division of sum(ints[k] tau^k) by (tau - r)."""
    out = [Fraction(0)] * (len(ints) - 1)
    acc = Fraction(0)
    for k in range(len(ints) - 1, 0, -1):
        acc = acc * r + ints[k]
        out[k - 1] = acc
    rem = acc * r + ints[0]
    if rem != 0:
        return ints, rem
    den = 1
    for c in out:
        den = den * c.denominator // gcd(den, c.denominator)
    return [int(c * den) for c in out], 0


def _cluster(vals: list[float], rtol: float = 1e-9) -> list[float]:
    vals = sorted(vals)
    out: list[float] = []
    for v in vals:
        if out and abs(v - out[-1]) <= rtol * (1 + abs(v)):
            continue
        out.append(v)
    return out


def _edge_real_roots(coeffs: list) -> list:
    """Distinct nonzero real roots of an edge polynomial, exact when rational."""
    if all(isinstance(c, Fraction) for c in coeffs):
        rat, num = _rational_roots(list(coeffs))
        roots: list = sorted(set(rat))
        for v in num:
            if not any(abs(v - float(r)) < 1e-9 * (1 + abs(v)) for r in roots):
                roots.append(v)
        return sorted(roots, key=float)
    fl = [float(c) for c in coeffs]
    while fl and fl[-1] == 0.0:
        fl.pop()
    if len(fl) <= 1:
        return []
    roots = np.polynomial.Polynomial(fl).roots()
    out = [float(r.real) for r in roots
           if abs(r.imag) < 1e-9 * (1 + abs(r)) and r.real != 0]
    return _cluster(out)


def _root_moduli(coeffs: list) -> list[float]:
    fl = [float(c) for c in coeffs]
    while fl and fl[-1] == 0.0:
        fl.pop()
    if len(fl) <= 1:
        return []
    return [abs(r) for r in np.polynomial.Polynomial(fl).roots()]


@dataclass(frozen=True)
class _Branch:
    series: FractionalSeries
    exact: bool


def _expand_branches(f: BivariatePoly, cap: Fraction,
                     depth_cap: int = 240,
                     notes: Optional[list[str]] = None) -> list[_Branch]:
    """All real branches y = k(x), x > 0 small, truncated at exponent ``cap``."""
    if f.is_zero():
        raise PolyError("cannot expand branches of the zero polynomial")
    results: list[_Branch] = []
    stack: list[tuple[BivariatePoly, FractionalSeries, Fraction, int]] = [
        (f, FractionalSeries.zero_series(), Fraction(0), 0)]
    while stack:
        Q, k, qmin, depth = stack.pop()
        if depth > depth_cap:
            raise ResolutionError(
                f"branch expansion stagnated after {depth} polygon iterations; "
                f"current state {Q.expr()[:120]}")
        if Q.x_order_at_y0() is None:
            # y = 0 is an exact root of Q: k itself is an exact branch
            results.append(_Branch(k, True))
        poly = newton_polygon(Q)
        emitted_truncation = False
        for edge in poly.edges:
            sigma = -1 / edge[0]
            if sigma <= qmin or sigma <= 0:
                continue
            coeffs, _ = _edge_polynomial(Q, edge)
            roots = _edge_real_roots(coeffs)
            if sigma > cap:
                if roots and not emitted_truncation:
                    results.append(_Branch(k.truncate(cap), False))
                    emitted_truncation = True
                continue
            if not roots and notes is not None:
                notes.append(
                    f"complex-only branches at exponent {sigma} omitted")
            for c in roots:
                shift = FractionalSeries.monomial(c, sigma)
                stack.append((Q.shift_y(shift, 1), k.add(shift), sigma, depth + 1))
    # deterministic order: by value near zero
    results.sort(key=functools.cmp_to_key(
        lambda a, b: a.series.compare_near_zero(b.series)))
    return results


def puiseux_branches(f: BivariatePoly, order=None) -> list[FractionalSeries]:
    """Real branches y = k(x) of f near the origin for x > 0.

    ``order`` caps the exponents kept (default 2*maxdeg + 4).  Exact branches
    (zero residual) carry truncation_order None.
    """
    if f.is_zero():
        raise PolyError("puiseux_branches of the zero polynomial")
    if f.coefficient(0, 0) != 0:
        raise PolyError("puiseux_branches requires f(0,0) = 0")
    if order is None:
        order = 2 * f.max_total_degree() + 4
    order = as_fraction(order)
    if order < 1:
        raise PolyError("order must be >= 1")
    notes: list[str] = []
    return [b.series for b in _expand_branches(f, order, notes=notes)]


# ---------------------------------------------------------------------------
# Eight-triangle splitting


@dataclass(frozen=True)
class Triangle:
    """One of the eight triangles, reflected onto {X > 0, 0 < Y < b X}.

    Global coordinates are recovered as (x, y) = (sx*Y, sy*X) when ``swap``
    else (sx*X, sy*Y).
    """

    code: str
    swap: bool
    sx: int
    sy: int
    b: Fraction

    def to_global(self, X, Y):
        if self.swap:
            return self.sx * np.asarray(Y, dtype=float), self.sy * np.asarray(X, dtype=float)
        return self.sx * np.asarray(X, dtype=float), self.sy * np.asarray(Y, dtype=float)

    def localize(self, f: BivariatePoly) -> BivariatePoly:
        return f.reflected(self.sx, self.sy, self.swap)

    def describe(self) -> str:
        if self.swap:
            return f"(x,y)=({'-' if self.sx<0 else ''}Y, {'-' if self.sy<0 else ''}X)"
        return f"(x,y)=({'-' if self.sx<0 else ''}X, {'-' if self.sy<0 else ''}Y)"


def _make_triangles(s_pos: Fraction, s_neg: Fraction) -> list[Triangle]:
    return [
        Triangle("T0:i++", False, 1, 1, s_pos),
        Triangle("T1:s++", True, 1, 1, 1 / s_pos),
        Triangle("T2:s-+", True, -1, 1, 1 / s_neg),
        Triangle("T3:i-+", False, -1, 1, s_neg),
        Triangle("T4:i--", False, -1, -1, s_pos),
        Triangle("T5:s--", True, -1, -1, 1 / s_pos),
        Triangle("T6:s+-", True, 1, -1, 1 / s_neg),
        Triangle("T7:i+-", False, 1, -1, s_neg),
    ]


def _pick_split_slopes(polys: Sequence[BivariatePoly]) -> tuple[Fraction, Fraction, list[str]]:
    """Slopes for the two extra splitting lines: default 1, moved to stay
    clear of the zero lines of the combined leading form (a line hugging a
    branch tangent forces tiny certified radii)."""
    form = BivariatePoly.constant(1)
    for p in polys:
        form = form * p.leading_form()
    notes = []
    slopes, _ = _real_line_slopes(form)

    candidates = [Fraction(1), Fraction(2), Fraction(1, 2), Fraction(3, 2),
                  Fraction(2, 3), Fraction(3, 4), Fraction(4, 3),
                  Fraction(5, 4), Fraction(4, 5)] + \
        [Fraction(16 + k, 16) for k in range(1, 16)] + \
        [Fraction(16 - k, 16) for k in range(1, 8)]

    def pick(sign: int) -> Fraction:
        relevant = [s * sign for s in slopes]

        def dist(c: Fraction) -> float:
            return min((abs(float(c) - s) / max(1.0, abs(s))
                        for s in relevant), default=math.inf)

        if dist(Fraction(1)) >= 0.3:
            return Fraction(1)
        best = max(candidates, key=dist)
        if dist(best) <= 1e-9:
            raise ResolutionError("could not find a nondegenerate splitting line")
        notes.append(f"splitting line slope {sign * best} "
                     "(default was too close to a leading-form zero line)")
        return best

    return pick(1), pick(-1), notes


# ---------------------------------------------------------------------------
# Slivers


@dataclass(frozen=True)
class FactorModel:
    """Monomial comparison data for one factor on one sliver: f ~ d x^alpha y^beta."""

    d: float
    alpha: Fraction
    beta: int

    def __post_init__(self):
        if self.d == 0:
            raise ValueError("model coefficient d must be nonzero")
        if self.alpha < 0 or self.beta < 0:
            raise ValueError("model exponents must be nonnegative")


@dataclass(frozen=True)
class Sliver:
    """One chart {0 < x < x_max, lower(x) < y < upper(x)} in coordinates
    (x, y) -> triangle-local (x, ysign*y + shift(x))."""

    ident: str
    triangle: Triangle
    ysign: int
    shift: FractionalSeries
    lower: FractionalSeries
    upper: FractionalSeries
    x_max: float
    per_factor: tuple[FactorModel, ...]
    region_weight: int

    @property
    def reflection(self) -> str:
        return self.triangle.code

    def __post_init__(self):
        if self.ysign not in (1, -1):
            raise ValueError("ysign must be +/-1")
        if not self.shift.is_zero() and self.shift.leading_exponent() < 1:
            raise ValueError("shift series must have exponents >= 1")
        up = self.upper.leading()
        if up is None or up[0] < 1 or float(up[1]) <= 0:
            raise ValueError("upper boundary must be H x^M with M >= 1, H > 0")
        lo = self.lower.leading()
        if lo is not None:
            if float(lo[1]) <= 0 or lo[0] <= up[0]:
                raise ValueError("lower boundary must be h x^m with m > M, h > 0")
        xs = np.geomspace(self.x_max / 64, self.x_max, 9)
        if np.any(self.lower(xs) >= self.upper(xs)):
            raise ValueError("lower(x) < upper(x) violated at sample points")

    # -- geometry helpers --------------------------------------------------

    def y_window(self, x):
        return self.lower(x), self.upper(x)

    def local_y(self, x, u):
        """Triangle-local Y for chart ordinate u in (lower(x), upper(x))."""
        return self.shift(x) + self.ysign * np.asarray(u, dtype=float)

    def to_global(self, x, u):
        return self.triangle.to_global(x, self.local_y(x, u))

    def area(self, n: int = 256) -> float:
        """Chart area by quadrature of (upper - lower); the shift preserves area."""
        xs, ws = np.polynomial.legendre.leggauss(n)
        xs = 0.5 * self.x_max * (xs + 1.0)
        ws = 0.5 * self.x_max * ws
        return float(np.sum(ws * (self.upper(xs) - self.lower(xs))))

    def contains_local(self, x, u) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        u = np.asarray(u, dtype=float)
        return (x > 0) & (x < self.x_max) & (u > self.lower(x)) & (u < self.upper(x))


@dataclass(frozen=True)
class GridSpec:
    """Sample grid description for monomial certificates."""

    nx: int = 7
    ny: int = 5
    x_span: float = 64.0
    points: Optional[tuple[tuple[float, float], ...]] = None

    def sample(self, sliver: Sliver) -> tuple[np.ndarray, np.ndarray]:
        if self.points is not None:
            pts = np.asarray(self.points, dtype=float)
            x, u = pts[:, 0], pts[:, 1]
            ok = sliver.contains_local(x, u)
            if not np.all(ok):
                bad = np.argwhere(~ok)[0][0]
                raise ValueError(
                    f"grid point ({x[bad]:g}, {u[bad]:g}) outside sliver {sliver.ident}")
            return x, u
        xs = np.geomspace(sliver.x_max / self.x_span, sliver.x_max * (1 - 1e-9), self.nx)
        lo, hi = sliver.y_window(xs)
        fr = np.geomspace(0.03, 0.97, self.ny)
        X = np.repeat(xs, self.ny)
        if sliver.lower.is_zero():
            U = np.concatenate([hi[i] * fr for i in range(len(xs))])
        else:
            U = np.concatenate([lo[i] * (hi[i] / lo[i]) ** fr for i in range(len(xs))])
        return X, U


@dataclass(frozen=True)
class MonomialCertificate:
    sliver_id: str
    factor_id: int
    eta_target: float
    max_observed_ratio_error: float
    orders_checked: tuple[tuple[int, int], ...]
    grid: str

    @property
    def passed(self) -> bool:
        return self.max_observed_ratio_error < self.eta_target


def _falling(a: Fraction, l: int) -> float:
    out = 1.0
    for t in range(l):
        out *= float(a) - t
    return out


def _certificate_error(sliver: Sliver, f: BivariatePoly, model: FactorModel,
                       x: np.ndarray, u: np.ndarray,
                       orders: Iterable[tuple[int, int]]) -> float:
    """Max relative deviation of derivatives of f in chart coordinates from
    the monomial model over the given points."""
    shifted = _chart_poly(sliver, f)
    worst = 0.0
    for l, m in orders:
        lhs = shifted.partial(l, m)(x, u)
        if not np.all(np.isfinite(lhs)):
            raise ResolutionError("derivative evaluation overflow in certificate")
        coef = model.d * _falling(model.alpha, l) * _falling(Fraction(model.beta), m)
        # orders are restricted to l <= alpha, m <= beta, so coef != 0
        rhs = coef * np.power(x, float(model.alpha) - l) * np.power(u, model.beta - m)
        err = np.max(np.abs(lhs - rhs) / np.abs(rhs))
        worst = max(worst, float(err))
    return worst


def _chart_poly(sliver: Sliver, f: BivariatePoly) -> BivariatePoly:
    """f in chart coordinates: f_local(x, ysign*u + shift(x))."""
    f_local = sliver.triangle.localize(f)
    return f_local.shift_y(sliver.shift, sliver.ysign)


def monomialize_check(sliver: Sliver, f: BivariatePoly, eta: float,
                      grid: GridSpec = GridSpec(),
                      deriv_cap: int = 4,
                      factor_id: int = 0,
                      model: Optional[FactorModel] = None) -> MonomialCertificate:
    """Certify that f is within eta of its monomial model on the sliver.

    Derivative orders run over 0 <= l <= min(ceil(alpha), cap) with l <= alpha,
    0 <= m <= min(beta, cap); derivatives are taken symbolically on the chart
    polynomial.
    """
    if not 0 < eta:
        raise ValueError("eta must be positive")
    if model is None:
        model = _factor_model(sliver, f)
    L = min(math.ceil(model.alpha), deriv_cap)
    M = min(model.beta, deriv_cap)
    orders = tuple((l, m) for l in range(L + 1) for m in range(M + 1)
                   if Fraction(l) <= model.alpha)
    x, u = grid.sample(sliver)
    err = _certificate_error(sliver, f, model, x, u, orders)
    gdesc = (f"explicit:{len(grid.points)}" if grid.points is not None
             else f"log x {grid.nx} pts over [a/{grid.x_span:g}, a], {grid.ny} y per x")
    return MonomialCertificate(sliver.ident, factor_id, eta, err, orders, gdesc)


def _factor_model(sliver: Sliver, f: BivariatePoly) -> FactorModel:
    """Read the active monomial of f on the sliver off the chart polygon."""
    Q = _chart_poly(sliver, f)
    M = sliver.upper.leading_exponent()
    m = sliver.lower.leading_exponent()  # None when lower == 0
    vtx, d = _active_vertex(Q, M, m)
    return FactorModel(float(d), vtx[0], int(vtx[1]))


class _ScaleCross(ResolutionError):
    """An interior polygon edge crosses the sliver's scale span."""

    def __init__(self, sigma: Fraction, moduli: list[float]):
        super().__init__(f"scale {sigma} crosses the sliver span; split needed")
        self.sigma = sigma
        self.moduli = moduli


def _active_vertex(Q: BivariatePoly, M: Fraction, m: Optional[Fraction]):
    """Vertex of Q's polygon minimizing i + s j over the scale span s in (M, m).

    m is None for slivers touching their shift curve (span unbounded above).
    Raises _ScaleCross if an edge exponent lies strictly inside the span."""
    poly = newton_polygon(Q)
    for edge in poly.edges:
        sigma = -1 / edge[0]
        if sigma > M and (m is None or sigma < m):
            raise _ScaleCross(sigma, _root_moduli(_edge_polynomial(Q, edge)[0]))
    if m is None:
        # s -> infinity: minimal j, then minimal i
        j0 = min(j for _, j in poly.vertices)
        vtx = min((i, j) for i, j in poly.vertices if j == j0)
    else:
        s_test = (M + m) / 2
        vtx = min(poly.vertices, key=lambda v: (v[0] + s_test * v[1], v[1]))
    return vtx, Q.coefficient(vtx[0], vtx[1])


# ---------------------------------------------------------------------------
# Decomposition of one triangle


@dataclass
class _Piece:
    """Column piece in column coordinates: y' in (lo(x), hi(x)) above/below a
    base branch; re-shifted pieces track the extra shift."""

    extra_shift: FractionalSeries  # added to the column base shift
    lo: FractionalSeries           # zero series when re-shifted
    hi: FractionalSeries


def _piece_bounds_ok(piece: _Piece) -> bool:
    lo_lead = piece.lo.leading()
    hi_lead = piece.hi.leading()
    if hi_lead is None or float(hi_lead[1]) <= 0:
        return False
    if lo_lead is not None and (float(lo_lead[1]) <= 0 or lo_lead[0] <= hi_lead[0]):
        return False
    return True


def _initial_pieces(shifted: list[BivariatePoly], cap: FractionalSeries) -> list[_Piece]:
    """Structural pieces of a column (0, cap): cuts at every polygon edge
    exponent strictly inside the scale span, bracketing the edge roots."""
    e = cap.leading_exponent()
    zero = FractionalSeries.zero_series()
    scales: dict[Fraction, tuple[float, float]] = {}
    for Q in shifted:
        if Q.is_zero():
            continue
        poly = newton_polygon(Q)
        for edge in poly.edges:
            sigma = -1 / edge[0]
            if sigma <= e:
                continue
            moduli = _root_moduli(_edge_polynomial(Q, edge)[0])
            if not moduli:
                continue
            lo, hi = min(moduli) / 2, max(moduli) * 2
            if sigma in scales:
                plo, phi = scales[sigma]
                scales[sigma] = (min(lo, plo), max(hi, phi))
            else:
                scales[sigma] = (lo, hi)
    cuts: list[FractionalSeries] = []
    for sigma in sorted(scales, reverse=True):  # innermost (largest exp) first
        lo, hi = scales[sigma]
        cuts.append(FractionalSeries.monomial(lo, sigma))
        if hi > lo:
            cuts.append(FractionalSeries.monomial(hi, sigma))
    bounds = [zero] + cuts + [cap]
    pieces = []
    for a, b in zip(bounds, bounds[1:]):
        pieces.append(_normalize_piece(_Piece(zero, a, b)))
    return pieces


def _normalize_piece(piece: _Piece) -> _Piece:
    """Re-shift pieces whose boundaries share the leading exponent so the
    lower boundary becomes 0 (valid chart shape)."""
    lo_lead = piece.lo.leading()
    hi_lead = piece.hi.leading()
    if lo_lead is None:
        return piece
    if hi_lead is not None and lo_lead[0] == hi_lead[0]:
        return _Piece(piece.extra_shift.add(piece.lo),
                      FractionalSeries.zero_series(),
                      piece.hi.sub(piece.lo))
    return piece


def _split_piece(piece: _Piece, near_top: bool) -> list[_Piece]:
    """Split a piece at the failing end; returns the normalized parts."""
    lo_lead = piece.lo.leading()
    hi_lead = piece.hi.leading()
    if near_top or lo_lead is None:
        cut = FractionalSeries.monomial(float(hi_lead[1]) / 2, hi_lead[0])
    else:
        cut = FractionalSeries.monomial(float(lo_lead[1]) * 2, lo_lead[0])
    parts = [_Piece(piece.extra_shift, piece.lo, cut),
             _Piece(piece.extra_shift, cut, piece.hi)]
    return [_normalize_piece(p) for p in parts if _piece_gap_positive(p)]


def _split_at_scale(piece: _Piece, sigma: Fraction, moduli: list[float]) -> list[_Piece]:
    """Cut a piece at an interior scale, bracketing the edge roots."""
    lo_c = min(moduli) / 2 if moduli else 1.0
    hi_c = max(moduli) * 2 if moduli else 1.0
    cuts = [FractionalSeries.monomial(lo_c, sigma)]
    if hi_c > lo_c:
        cuts.append(FractionalSeries.monomial(hi_c, sigma))
    bounds = [piece.lo] + cuts + [piece.hi]
    parts = [_Piece(piece.extra_shift, a, b) for a, b in zip(bounds, bounds[1:])]
    return [_normalize_piece(p) for p in parts if _piece_gap_positive(p)]


def _piece_gap_positive(piece: _Piece) -> bool:
    d = piece.hi.sub(piece.lo).leading()
    return d is not None and float(d[1]) > 0


@dataclass
class _Column:
    base: FractionalSeries
    ysign: int
    cap: FractionalSeries
    pieces: list[_Piece]
    edge_betas: tuple[int, ...] = ()  # per-factor vanishing order at y' = 0


@dataclass(frozen=True)
class IntegrationColumn:
    """One half-gap {0 < x < a_geom, 0 < y' < cap(x)} in chart coordinates
    (x, y) -> triangle-local (x, ysign*y' + shift(x)).

    The integration modules consume these: they are valid wherever the branch
    ordering holds (a_geom), independent of the smaller radius down to which
    the monomial certificates were pushed.  ``edge_betas`` gives each factor's
    vanishing order at the y' = 0 edge (the branch), which fixes the y-power
    of the integrable singularity there; below ``edge_scale(x)`` the integrand
    is a clean power u^(sum gamma*beta) times a slowly varying unit.
    """

    ident: str
    triangle: Triangle
    ysign: int
    shift: FractionalSeries
    cap: FractionalSeries
    edge_betas: tuple[int, ...]
    edge_scale: FractionalSeries
    region_weight: int

    def to_global(self, x, u):
        yloc = self.shift(x) + self.ysign * np.asarray(u, dtype=float)
        return self.triangle.to_global(x, yloc)


def _piece_error_profile(Q: BivariatePoly, piece: _Piece, xs: np.ndarray,
                         deriv_cap: int = 4):
    """Per-x relative error of Q against its active monomial on the piece
    (including the derivative orders the certificate will check), together
    with the y-end ('top'/'bot') where the worst error sits.

    Raises _ScaleCross when the piece spans an interior polygon scale."""
    Qp = Q if piece.extra_shift.is_zero() else Q.shift_y(piece.extra_shift, 1)
    vtx, d = _active_vertex(Qp, piece.hi.leading_exponent(),
                            piece.lo.leading_exponent())
    alpha, beta = vtx
    L = min(math.ceil(alpha), deriv_cap)
    M = min(int(beta), deriv_cap)
    orders = [(l, m) for l in range(L + 1) for m in range(M + 1)
              if Fraction(l) <= alpha]
    lo = piece.lo(xs)
    hi = piece.hi(xs)
    fr = np.geomspace(0.03, 0.97, 5)
    errs = np.zeros(len(xs))
    top_weight = 0.0
    for ix, x in enumerate(xs):
        if piece.lo.is_zero():
            us = hi[ix] * fr
        else:
            us = lo[ix] * (hi[ix] / lo[ix]) ** fr
        xcol = np.full_like(us, x)
        for l, m in orders:
            coef = float(d) * _falling(alpha, l) * _falling(Fraction(beta), m)
            model = coef * x ** (float(alpha) - l) * np.power(us, float(beta) - m)
            vals = Qp.partial(l, m)(xcol, us)
            rel = np.abs(vals - model) / np.abs(model)
            errs[ix] = max(errs[ix], float(np.max(rel)))
            top_weight += float(rel[-1] - rel[0])
    return errs, top_weight >= 0


def _repair_column(col: _Column, shifted: list[BivariatePoly], eta: float,
                   a_struct: float, max_splits: int = 200) -> None:
    """Split column pieces until value-level monomial errors pass in the
    asymptotic window (small x).  Pieces whose error decays as x -> 0 are
    left alone: the later x_max descent removes tail-type errors, while
    splitting them runs away (the error grows as the piece shrinks)."""
    xs = np.geomspace(a_struct * 2 ** -12, a_struct * 2 ** -5, 5)
    pending = list(col.pieces)
    done: list[_Piece] = []
    splits = 0
    while pending:
        piece = pending.pop(0)
        worst = 0.0
        near_top = True
        cross: Optional[_ScaleCross] = None
        for Q in shifted:
            if Q.is_zero():
                continue
            try:
                errs, at_top = _piece_error_profile(Q, piece, xs)
            except _ScaleCross as sc:
                cross = sc
                break
            e = float(np.max(errs))
            if e > worst:
                worst, near_top = e, at_top
        if cross is not None:
            parts = _split_at_scale(piece, cross.sigma, cross.moduli)
            if len(parts) <= 1:
                raise ResolutionError("degenerate scale split during chart repair")
            splits += len(parts) - 1
        elif worst <= 0.8 * eta or _is_tail_type(shifted, piece, a_struct):
            done.append(piece)
            continue
        else:
            parts = _split_piece(piece, near_top)
            if len(parts) <= 1:
                raise ResolutionError("degenerate split during chart repair")
            splits += 1
        if splits > max_splits:
            raise ResolutionError(
                f"eta={eta} unattainable at the current truncation "
                f"(residual monomial error ~{worst:.3g} after {splits} splits)")
        pending[0:0] = parts
    x_ref = a_struct * 1e-3
    done.sort(key=lambda p: (float(p.extra_shift.add(p.lo)(x_ref)),
                             float(p.extra_shift.add(p.hi)(x_ref))))
    col.pieces = done


def _is_tail_type(shifted: list[BivariatePoly], piece: _Piece, a: float) -> bool:
    """True if the monomial error decays as x -> 0 (x_max descent fixes it)."""
    xs = np.geomspace(a * 2 ** -14, a * 2 ** -2, 8)
    worst = np.zeros(len(xs))
    for Q in shifted:
        if Q.is_zero():
            continue
        try:
            errs, _ = _piece_error_profile(Q, piece, xs)
        except _ScaleCross:
            return False
        worst = np.maximum(worst, errs)
    if np.any(worst <= 1e-300):
        return True
    slope = np.polyfit(np.log(xs), np.log(worst), 1)[0]
    return slope > 0.3


# ---------------------------------------------------------------------------
# Full resolution


@dataclass(frozen=True)
class Resolution:
    spec: MultiplierSpec
    eta: float
    deriv_cap: int
    slivers: tuple[Sliver, ...]
    x_max: float
    columns: tuple[IntegrationColumn, ...]
    a_geom: float
    s_pos: Fraction
    s_neg: Fraction
    notes: tuple[str, ...]

    def covered_area(self) -> float:
        """Area of the union of the eight triangles truncated at x_max."""
        tris = _make_triangles(self.s_pos, self.s_neg)
        return sum(self.x_max ** 2 * float(t.b) / 2 for t in tris)

    def covered_reach(self) -> float:
        """Half-width of a square containing the covered region."""
        s = max(float(self.s_pos), 1 / float(self.s_pos),
                float(self.s_neg), 1 / float(self.s_neg))
        return self.x_max * s


def _triangle_branches(tri: Triangle, polys: list[BivariatePoly],
                       cap: Fraction, notes: list[str]) -> list[FractionalSeries]:
    """Sorted interior branches of the given polynomials inside the triangle."""
    found: list[tuple[FractionalSeries, bool]] = []
    for p in polys:
        loc = tri.localize(p)
        if loc(0.0, 0.0) != 0.0:
            continue
        for br in _expand_branches(loc, cap, notes=notes):
            lead = br.series.leading()
            if lead is None:
                continue  # the axis branch coincides with the triangle boundary
            q, c = lead
            if q < 1:
                continue
            if q == 1 and not (0 < float(c) < float(tri.b)):
                continue
            if q > 1 and float(c) <= 0:
                continue
            found.append((br.series, br.exact))
    # dedup branches equal to truncation
    merged: list[tuple[FractionalSeries, bool]] = []
    for s, exact in found:
        dup = False
        for i, (t, texact) in enumerate(merged):
            if s.contact(t) is None:
                if exact and not texact:
                    merged[i] = (s, exact)
                dup = True
                break
        if not dup:
            merged.append((s, exact))
    out = [s for s, _ in merged]
    out.sort(key=functools.cmp_to_key(lambda a, b: a.compare_near_zero(b)))
    # verify strict ordering pairwise
    for a, b in zip(out, out[1:]):
        if a.compare_near_zero(b) >= 0:
            raise ResolutionError("branch ordering collapsed; increase truncation")
    return out


def _decompose_triangle(tri: Triangle, factor_polys: list[BivariatePoly],
                        all_polys: list[BivariatePoly], cap: Fraction,
                        eta: float, a_struct: float,
                        notes: list[str]) -> list[_Column]:
    branches = _triangle_branches(tri, all_polys, cap, notes)
    zero = FractionalSeries.zero_series()
    top = FractionalSeries.monomial(tri.b, 1)
    boundaries = [zero] + branches + [top]
    columns: list[_Column] = []
    local_factors = [tri.localize(f) for f in factor_polys]
    locals_all = [tri.localize(p) for p in all_polys]
    axis_is_branch = any(p.x_order_at_y0() is None for p in locals_all)
    n_gaps = len(boundaries) - 1
    for i, (kl, ku) in enumerate(zip(boundaries, boundaries[1:])):
        diff = ku.sub(kl)
        lead = diff.leading()
        if lead is None or float(lead[1]) <= 0:
            raise ResolutionError("degenerate gap between adjacent branches")
        low_is_zero_curve = i > 0 or axis_is_branch
        up_is_zero_curve = i < n_gaps - 1
        # a single column can only be anchored at one edge; the far edge must
        # carry no structure of its own (no polygon scale finer than the gap
        # width when the factors are shifted onto it)
        gap_exp = lead[0]
        if not up_is_zero_curve and _far_end_plain(local_factors, ku, -1, gap_exp):
            single_from = (kl, 1)
        elif not low_is_zero_curve and _far_end_plain(local_factors, kl, 1, gap_exp):
            single_from = (ku, -1)
        else:
            single_from = None
        if single_from is None:
            # split at the exact mid-curve (kl+ku)/2 and shift each half
            # toward its own edge
            half = diff.scale(0.5)
            sides = ((kl, 1, half), (ku, -1, half))
        else:
            sides = ((single_from[0], single_from[1], diff),)
        for base, ysign, capser in sides:
            shifted = [f.shift_y(base, ysign) for f in local_factors]
            betas = tuple(_y_vanishing_order(Q) for Q in shifted)
            col = _Column(base, ysign, capser, _initial_pieces(shifted, capser),
                          betas)
            _repair_column(col, shifted, eta, a_struct)
            columns.append(col)
    return columns


def _y_vanishing_order(Q: BivariatePoly) -> int:
    """Vanishing order of Q on the edge y = 0 (0 if Q(x,0) != 0)."""
    if Q.is_zero():
        return 0
    return int(min(j for _, j, _ in Q.terms))


def _far_end_plain(local_factors: list[BivariatePoly], far: FractionalSeries,
                   ysign: int, gap_exp) -> bool:
    """True when shifting the factors onto the far gap edge exposes no
    polygon scale finer than the gap width (so the near-anchored single
    column needs no structure at its far end)."""
    for f in local_factors:
        Q = f.shift_y(far, ysign)
        if Q.is_zero():
            continue
        for sigma in newton_polygon(Q).edge_exponents():
            if sigma > gap_exp:
                return False
    return True


def _column_slivers(tri: Triangle, col: _Column, spec: MultiplierSpec,
                    ident_prefix: str, x_max: float, weight: int) -> list[Sliver]:
    out = []
    factors = spec.active_factors()
    for pidx, piece in enumerate(col.pieces):
        shift = col.base.add(piece.extra_shift.scale(col.ysign))
        sliver = Sliver(
            ident=f"{ident_prefix}.{pidx}",
            triangle=tri,
            ysign=col.ysign,
            shift=shift,
            lower=piece.lo,
            upper=piece.hi,
            x_max=x_max,
            per_factor=(),
            region_weight=weight,
        )
        models = tuple(_factor_model(sliver, f.poly) for f in factors)
        out.append(Sliver(sliver.ident, tri, col.ysign, shift, piece.lo,
                          piece.hi, x_max, models, weight))
    return out


def _column_region_weight(tri: Triangle, col: _Column, spec: MultiplierSpec,
                          a_geom: float) -> int:
    """chi_E on a half-gap column: constant because the boundary curves are
    among the gap boundaries."""
    from .funcspec import DiskRegion

    if isinstance(spec.region, DiskRegion):
        return 1
    xs = np.geomspace(a_geom * 1e-3, a_geom * 0.3, 7)
    capv = col.cap(xs)
    flats = []
    for frac in (0.2, 0.5, 0.8):
        yloc = col.base(xs) + col.ysign * frac * capv
        gx, gy = tri.to_global(xs, yloc)
        flats.append(spec.region.contains(gx, gy))
    flat = np.concatenate(flats)
    if np.all(flat):
        return 1
    if np.all(~flat):
        return 0
    raise ResolutionError("region membership is not constant on a gap column")


def sliver_decomposition(spec: MultiplierSpec, eta: float = 0.3,
                         deriv_cap: int = 4) -> list[Sliver]:
    """Decompose a neighborhood of the origin into certified monomial charts."""
    return list(resolve_spec(spec, eta, deriv_cap).slivers)


@lru_cache(maxsize=16)
def _resolve_cached(spec: MultiplierSpec, eta: float, deriv_cap: int) -> Resolution:
    if not 0 < eta < 1:
        raise ValueError("eta must be in (0, 1)")
    notes: list[str] = []
    factor_polys = [f.poly for f in spec.active_factors()]
    curve_polys = [c.defining_poly() for c in spec.boundary_curves()]
    all_polys = factor_polys + curve_polys
    for p in all_polys:
        if p.is_zero():
            raise SpecError("zero polynomial cannot be resolved")
    s_pos, s_neg, slope_notes = _pick_split_slopes(all_polys or [BivariatePoly.constant(1)])
    notes.extend(slope_notes)
    maxdeg = max([p.max_total_degree() for p in all_polys], default=Fraction(1))
    cap = 2 * maxdeg + 4
    a0 = spec.radius
    tris = _make_triangles(s_pos, s_neg)
    columns: list[tuple[Triangle, int, _Column]] = []
    for tri in tris:
        cols = _decompose_triangle(tri, factor_polys, all_polys, cap, eta, a0, notes)
        for ci, col in enumerate(cols):
            columns.append((tri, ci, col))

    # the geometric radius: how far the gap structure itself stays ordered
    a_geom = a0
    for _ in range(16):
        if _ordering_holds(columns, a_geom):
            break
        a_geom *= 0.5
    else:
        raise ResolutionError("branch ordering fails at every tested radius")

    weights = [_column_region_weight(tri, col, spec, a_geom)
               for tri, ci, col in columns]
    int_columns = tuple(
        IntegrationColumn(f"{tri.code}.c{ci}", tri, col.ysign, col.base,
                          col.cap, col.edge_betas, _innermost_scale(col), w)
        for (tri, ci, col), w in zip(columns, weights))

    # descend dyadically in a until the full certificates pass
    a = a_geom
    slivers: tuple[Sliver, ...] = ()
    for _ in range(20):
        try:
            cand = []
            for (tri, ci, col), w in zip(columns, weights):
                cand.extend(_column_slivers(tri, col, spec, f"{tri.code}.c{ci}", a, w))
            if _all_certificates_pass(cand, spec, eta, deriv_cap):
                slivers = tuple(cand)
                break
        except (ResolutionError, ValueError):
            pass
        a *= 0.5
    else:
        raise ResolutionError(
            f"certificates do not pass down to x_max = {a * 2:.3g}; "
            f"eta = {eta} unattainable at the current truncation")
    return Resolution(spec, eta, deriv_cap, slivers, a, int_columns, a_geom,
                      s_pos, s_neg, tuple(notes))


def _innermost_scale(col: _Column) -> FractionalSeries:
    """Upper boundary of the piece touching u = 0 (the scale below which the
    factors are clean powers of u times slowly varying units)."""
    first = col.pieces[0]
    if not first.extra_shift.is_zero() or not first.lo.is_zero():
        # should not happen: the repair keeps the innermost piece anchored
        return col.cap
    return first.hi


def _ordering_holds(columns: list[tuple[Triangle, int, "_Column"]], a: float) -> bool:
    xs = np.geomspace(a / 64, a * (1 - 1e-9), 24)
    for tri, ci, col in columns:
        capv = col.cap(xs)
        if np.any(capv <= 0):
            return False
        base = col.base(xs)
        yin = base + col.ysign * capv  # the mid-curve side
        for vals in (base, yin):
            if np.any(vals < -1e-15) or np.any(vals > float(tri.b) * xs * (1 + 1e-12)):
                return False
    return True


def _all_certificates_pass(slivers: list[Sliver], spec: MultiplierSpec,
                           eta: float, deriv_cap: int) -> bool:
    factors = spec.active_factors()
    for sl in slivers:
        for fid, (f, model) in enumerate(zip(factors, sl.per_factor)):
            try:
                cert = monomialize_check(sl, f.poly, eta, deriv_cap=deriv_cap,
                                         factor_id=fid, model=model)
            except ResolutionError:
                return False
            if not cert.passed:
                return False
    return True


def resolve_spec(spec: MultiplierSpec, eta: float = 0.3, deriv_cap: int = 4) -> Resolution:
    return _resolve_cached(spec, float(eta), int(deriv_cap))
