"""Multiplier specification language: domain types, parser, serializer.

A multiplier is  alpha(x,y) * chi_E(x,y) * prod_i |f_i(x,y)|^gamma_i  around a
base point, with polynomial factors f_i and a region E that is either a disk
or a union of sectors bounded by fractional-power curve graphs through the
origin.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Union

import numpy as np

from .poly import BivariatePoly, PolyError, parse_poly
from .series import FractionalSeries, SeriesError


class SpecError(ValueError):
    """Syntax or semantic error in a multiplier specification."""

    def __init__(self, msg: str, line: int | None = None, col: int | None = None):
        loc = f" (line {line}, column {col})" if line is not None else ""
        super().__init__(msg + loc)
        self.line = line
        self.col = col


# ---------------------------------------------------------------------------
# Small geometric value types


@dataclass(frozen=True)
class Direction:
    """A line direction through the origin, angle in [0, pi)."""

    angle: float

    def __post_init__(self):
        a = self.angle % math.pi
        if a < 0:
            a += math.pi
        # snap the wrap point so pi - eps does not round away from 0
        if math.pi - a < 1e-15:
            a = 0.0
        object.__setattr__(self, "angle", a)

    @property
    def v(self) -> tuple[float, float]:
        return (math.cos(self.angle), math.sin(self.angle))

    @property
    def v_perp(self) -> tuple[float, float]:
        return (math.sin(self.angle), -math.cos(self.angle))

    def perpendicular(self) -> "Direction":
        return Direction(self.angle + math.pi / 2)

    def is_parallel(self, other: "Direction", tol: float = 1e-9) -> bool:
        d = abs(self.angle - other.angle) % math.pi
        return min(d, math.pi - d) < tol


@dataclass(frozen=True)
class ExponentPair:
    """A growth/decay law r^power * |ln r|^logpower."""

    power: float
    logpower: int = 0

    def __post_init__(self):
        if self.logpower not in (0, 1, 2):
            raise ValueError(f"logpower must be 0, 1, or 2, got {self.logpower}")

    def __str__(self):
        return f"(a={self.power:g}, b={self.logpower})"


# Paths/scopes for kernel decay sampling and envelope statements.


@dataclass(frozen=True)
class Ray:
    direction: Direction


@dataclass(frozen=True)
class Strip:
    direction: Direction
    width: float = 1.0


@dataclass(frozen=True)
class Overall:
    pass


# ---------------------------------------------------------------------------
# Amplitudes


@dataclass(frozen=True)
class ConstantAmplitude:
    def eval(self, x, y):
        return np.ones(np.broadcast(np.asarray(x), np.asarray(y)).shape)

    def outer_radius(self) -> float:
        return math.inf


@dataclass(frozen=True)
class BumpAmplitude:
    """Radial bump exp(1 - 1/(1 - rho^2/r0^2)) on rho < r0, else 0."""

    radius: float

    def __post_init__(self):
        if not self.radius > 0:
            raise SpecError("bump radius must be positive")

    def eval(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        s = (x * x + y * y) / (self.radius * self.radius)
        inside = s < 1.0
        vals = np.exp(1.0 - 1.0 / (1.0 - np.where(inside, s, 0.0)))
        return np.where(inside, vals, 0.0)

    def outer_radius(self) -> float:
        return self.radius


@dataclass(frozen=True)
class ProductBumpAmplitude:
    """Separable bump b1(x)*b1(y) with b1(t) = exp(1 - 1/(1 - t^2/r0^2))."""

    radius: float

    def __post_init__(self):
        if not self.radius > 0:
            raise SpecError("bump radius must be positive")

    def _b1(self, t):
        t = np.asarray(t, dtype=float)
        s = t * t / (self.radius * self.radius)
        inside = s < 1.0
        vals = np.exp(1.0 - 1.0 / (1.0 - np.where(inside, s, 0.0)))
        return np.where(inside, vals, 0.0)

    def eval(self, x, y):
        return self._b1(x) * self._b1(y)

    def outer_radius(self) -> float:
        # support is the square |x|,|y| < r0
        return self.radius * math.sqrt(2.0)


Amplitude = Union[ConstantAmplitude, BumpAmplitude, ProductBumpAmplitude]


# ---------------------------------------------------------------------------
# Regions


@dataclass(frozen=True)
class CurveSpec:
    """One boundary curve: a graph y = h(x) (axis 'x') or x = h(y) (axis 'y')
    on the half where the graph variable has sign ``half``."""

    axis: str
    half: int
    series: FractionalSeries

    def __post_init__(self):
        if self.axis not in ("x", "y"):
            raise SpecError(f"curve axis must be 'x' or 'y', got {self.axis!r}")
        if self.half not in (1, -1):
            raise SpecError("curve half must be +1 or -1")
        if self.series.is_zero():
            return
        if self.series.leading_exponent() <= 0:
            raise SpecError("curve series must vanish at the origin")

    def point(self, t):
        """Point on the curve at graph parameter t >= 0."""
        t = np.asarray(t, dtype=float)
        h = self.series(t)
        if self.axis == "x":
            return self.half * t, h
        return h, self.half * t

    def angle_at_radius(self, rho):
        """Angle (atan2) where the curve crosses the circle of radius rho.

        The curve is parametrized by t -> point(t) with |point(t)| strictly
        increasing for small t; solved by bisection.
        """
        rho = np.asarray(rho, dtype=float)
        scalar = rho.shape == ()
        rho = np.atleast_1d(rho)
        lo = np.zeros_like(rho)
        # |point(t)|^2 = t^2 + h(t)^2 >= t^2, so t = rho brackets from above
        hi = rho.copy()
        target = rho * rho
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            px, py = self.point(mid)
            inside = px * px + py * py < target
            lo = np.where(inside, mid, lo)
            hi = np.where(inside, hi, mid)
        t = 0.5 * (lo + hi)
        px, py = self.point(t)
        ang = np.arctan2(py, px)
        return float(ang[0]) if scalar else ang

    def defining_poly(self) -> BivariatePoly:
        """Integer-exponent polynomial vanishing on the curve.

        For a graph y = h(t), t = |x|^(1) with h of ramification N, the
        product over the N conjugate series has integer exponents.  Exact when
        N == 1; complex float arithmetic with a reality check otherwise.
        """
        h = self.series
        if h.is_zero():
            base = BivariatePoly([(0, 1, Fraction(1))])  # y = 0
        else:
            N = h.ramification()
            if N == 1:
                terms = [(0, 1, Fraction(1))] + [(q, 0, -c) for q, c in h.terms]
                base = BivariatePoly.from_sum(terms)
            else:
                base = _conjugate_product(h, N)
        if self.half < 0:
            base = base.reflected(-1, 1, False)
        if self.axis == "y":
            base = base.reflected(1, 1, True)
        return base

    def tangent_direction(self) -> Direction:
        """Tangent line at the origin."""
        lead = self.series.leading()
        if self.axis == "x":
            if lead is None or lead[0] > 1:
                return Direction(0.0)
            if lead[0] < 1:
                return Direction(math.pi / 2)
            return Direction(math.atan2(float(lead[1]), float(self.half)))
        if lead is None or lead[0] > 1:
            return Direction(math.pi / 2)
        if lead[0] < 1:
            return Direction(0.0)
        return Direction(math.atan2(float(self.half), float(lead[1])))


def _conjugate_product(h: FractionalSeries, N: int) -> BivariatePoly:
    """prod_{j<N} (y - h(w^j x^{1/N})) as a real integer-exponent polynomial."""
    # work with terms as dict {(x_exp, y_exp): complex}
    prod: dict[tuple[Fraction, Fraction], complex] = {(Fraction(0), Fraction(1)): 1.0 + 0j}
    for j in range(N):
        w = np.exp(2j * np.pi * j / N)
        conj_terms = {(q, Fraction(0)): -complex(w ** (q * N)) * float(c) for q, c in h.terms}
        conj_terms[(Fraction(0), Fraction(1))] = 1.0 + 0j
        if j == 0 and N == 1:
            continue
        if j == 0:
            prod = dict(conj_terms)
            continue
        nxt: dict[tuple[Fraction, Fraction], complex] = {}
        for (i1, j1), c1 in prod.items():
            for (i2, j2), c2 in conj_terms.items():
                key = (i1 + i2, j1 + j2)
                nxt[key] = nxt.get(key, 0j) + c1 * c2
        prod = nxt
    out = []
    scale = max(abs(c) for c in prod.values())
    for (i, j), c in prod.items():
        if abs(c) < 1e-12 * scale:
            continue
        if abs(c.imag) > 1e-9 * scale:
            raise SpecError("conjugate product of boundary curve is not real")
        if i.denominator != 1:
            raise SpecError("conjugate product of boundary curve has fractional exponents")
        out.append((i, j, c.real))
    return BivariatePoly.from_sum(out)


@dataclass(frozen=True)
class SectorRegion:
    """Region swept counterclockwise from ``lower`` to ``upper`` (side 'in'),
    or its complement within the disk (side 'out')."""

    lower: CurveSpec
    upper: CurveSpec
    side: str = "in"

    def __post_init__(self):
        if self.side not in ("in", "out"):
            raise SpecError(f"sector side must be 'in' or 'out', got {self.side!r}")


@dataclass(frozen=True)
class DiskRegion:
    radius: float

    def __post_init__(self):
        if not self.radius > 0:
            raise SpecError("disk radius must be positive")

    def contains(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        return x * x + y * y < self.radius * self.radius

    def boundary_curves(self) -> tuple[CurveSpec, ...]:
        return ()


@dataclass(frozen=True)
class SectorsRegion:
    sectors: tuple[SectorRegion, ...]
    radius: float

    def __post_init__(self):
        if not self.radius > 0:
            raise SpecError("region radius must be positive")
        if not self.sectors:
            raise SpecError("sectors region needs at least one sector")

    def boundary_curves(self) -> tuple[CurveSpec, ...]:
        out = []
        for s in self.sectors:
            out.append(s.lower)
            out.append(s.upper)
        return tuple(out)

    def contains(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        rho = np.hypot(x, y)
        theta = np.arctan2(y, x)
        inside = np.zeros(np.broadcast(x, y).shape, dtype=bool)
        ok = (rho > 0) & (rho < self.radius)
        if not np.any(ok):
            return inside
        for s in self.sectors:
            t1 = s.lower.angle_at_radius(np.where(ok, rho, self.radius / 2))
            t2 = s.upper.angle_at_radius(np.where(ok, rho, self.radius / 2))
            width = np.mod(t2 - t1, 2 * math.pi)
            offset = np.mod(theta - t1, 2 * math.pi)
            if s.side == "in":
                sel = (offset > 0) & (offset < width)
            else:
                # the other region bounded by the two curves and the circle
                sel = offset > width
            inside |= ok & sel
        return inside


RegionE = Union[DiskRegion, SectorsRegion]


# ---------------------------------------------------------------------------
# The multiplier spec itself


@dataclass(frozen=True)
class Factor:
    poly: BivariatePoly
    gamma: float

    def __post_init__(self):
        if self.poly.is_zero():
            raise SpecError("factor polynomial must be nonzero")
        if not self.poly.has_integer_exponents():
            # fractional exponents are expressible through the common
            # ramification; the resolution needs integer y-exponents, and
            # reflections need integer x-exponents.
            fr = [j for _, j, _ in self.poly.terms if j.denominator != 1]
            if fr:
                raise SpecError("factor polynomials need integer y-exponents")


@dataclass(frozen=True)
class MultiplierSpec:
    factors: tuple[Factor, ...]
    region: RegionE
    amplitude: Amplitude = field(default_factory=ConstantAmplitude)
    base_point: tuple[float, float] = (0.0, 0.0)

    @property
    def radius(self) -> float:
        return self.region.radius

    def active_factors(self) -> tuple[Factor, ...]:
        """Factors with nonzero exponent (|f|^0 == 1 a.e.)."""
        return tuple(f for f in self.factors if f.gamma != 0.0)

    def boundary_curves(self) -> tuple[CurveSpec, ...]:
        return self.region.boundary_curves()


# ---------------------------------------------------------------------------
# Tokenizer / parser for the spec language


_SPEC_TOKEN = re.compile(
    r"""(?P<ws>\s+)
      | (?P<comment>\#[^\n]*)
      | (?P<string>"(?:[^"\\]|\\.)*")
      | (?P<num>-?\d+(?:\.\d+)?(?:[eE][-+]?\d+)?|-?\.\d+|inf\b)
      | (?P<name>[A-Za-z_][A-Za-z_0-9]*)
      | (?P<punct>[{}=(),])
      | (?P<bad>.)
    """,
    re.VERBOSE,
)


def _tokenize_spec(text: str):
    tokens = []
    line, col = 1, 1
    pos = 0
    for m in _SPEC_TOKEN.finditer(text):
        frag = m.group(0)
        if m.group("bad"):
            raise SpecError(f"unexpected character {frag!r}", line, col)
        if not (m.group("ws") or m.group("comment")):
            kind = next(k for k in ("string", "num", "name", "punct") if m.group(k))
            tokens.append((kind, frag, line, col))
        nl = frag.count("\n")
        if nl:
            line += nl
            col = len(frag) - frag.rfind("\n")
        else:
            col += len(frag)
        pos = m.end()
    tokens.append(("end", "", line, col))
    return tokens


class _SpecParser:
    def __init__(self, text: str):
        self.tokens = _tokenize_spec(text)
        self.k = 0

    def peek(self):
        return self.tokens[self.k]

    def take(self):
        t = self.tokens[self.k]
        self.k += 1
        return t

    def error(self, msg, tok=None):
        tok = tok or self.peek()
        raise SpecError(msg, tok[2], tok[3])

    def expect(self, kind, value=None):
        tok = self.take()
        if tok[0] != kind or (value is not None and tok[1] != value):
            want = value if value is not None else kind
            self.error(f"expected {want!r}, found {tok[1]!r}", tok)
        return tok

    def number(self) -> float:
        tok = self.expect("num")
        if tok[1] == "inf":
            return math.inf
        return float(tok[1])

    def string(self) -> str:
        tok = self.expect("string")
        return tok[1][1:-1].replace('\\"', '"').replace("\\\\", "\\")

    def maybe_comma(self):
        if self.peek()[:2] == ("punct", ","):
            self.take()

    def parse(self) -> MultiplierSpec:
        factors: list[Factor] = []
        region: RegionE | None = None
        amplitude: Amplitude = ConstantAmplitude()
        base = (0.0, 0.0)
        seen_amp = seen_base = False
        while True:
            kind, val, line, col = self.peek()
            if kind == "end":
                break
            if kind != "name":
                self.error(f"expected a block name, found {val!r}")
            if val == "factor":
                self.take()
                factors.append(self.factor_block())
            elif val == "region":
                if region is not None:
                    self.error("duplicate region block")
                self.take()
                region = self.region_block()
            elif val == "amplitude":
                if seen_amp:
                    self.error("duplicate amplitude block")
                seen_amp = True
                self.take()
                amplitude = self.amplitude_block()
            elif val == "base":
                if seen_base:
                    self.error("duplicate base statement")
                seen_base = True
                self.take()
                self.expect("punct", "=")
                self.expect("punct", "(")
                bx = self.number()
                self.expect("punct", ",")
                by = self.number()
                self.expect("punct", ")")
                base = (bx, by)
            else:
                self.error(f"unknown block {val!r}")
        if region is None:
            self.error("missing region block")
        return MultiplierSpec(tuple(factors), region, amplitude, base)

    def factor_block(self) -> Factor:
        self.expect("punct", "{")
        self.expect("name", "poly")
        self.expect("punct", "=")
        tok = self.peek()
        text = self.string()
        if not text.strip():
            self.error("empty polynomial expression", tok)
        try:
            poly = parse_poly(text)
        except PolyError as e:
            self.error(f"invalid polynomial {text!r}: {e}", tok)
        self.maybe_comma()
        self.expect("name", "gamma")
        self.expect("punct", "=")
        gamma = self.number()
        self.expect("punct", "}")
        return Factor(poly, gamma)

    def amplitude_block(self) -> Amplitude:
        self.expect("punct", "{")
        tok = self.expect("name")
        kind = tok[1]
        self.expect("punct", "=")
        r = self.number()
        self.expect("punct", "}")
        if kind == "bump":
            return BumpAmplitude(r)
        if kind == "product_bump":
            return ProductBumpAmplitude(r)
        self.error(f"unknown amplitude kind {kind!r}", tok)

    def region_block(self) -> RegionE:
        self.expect("punct", "{")
        kind, val, _, _ = self.peek()
        if kind == "name" and val == "disk":
            self.take()
            self.expect("punct", "=")
            r = self.number()
            self.expect("punct", "}")
            return DiskRegion(r)
        sectors = []
        radius = None
        while True:
            kind, val, _, _ = self.peek()
            if kind == "name" and val == "sector":
                self.take()
                sectors.append(self.sector_block())
            elif kind == "name" and val == "radius":
                self.take()
                self.expect("punct", "=")
                radius = self.number()
                break
            else:
                self.error("expected 'sector' or 'radius' in region block")
        self.expect("punct", "}")
        if radius is None:
            self.error("sector region needs a radius")
        region = SectorsRegion(tuple(sectors), radius)
        _check_curves_disjoint(region)
        return region

    def sector_block(self) -> SectorRegion:
        self.expect("punct", "{")
        self.expect("name", "lower")
        self.expect("punct", "=")
        tok = self.peek()
        lower = _parse_curve(self.string(), tok)
        self.maybe_comma()
        self.expect("name", "upper")
        self.expect("punct", "=")
        tok = self.peek()
        upper = _parse_curve(self.string(), tok)
        self.maybe_comma()
        self.expect("name", "side")
        self.expect("punct", "=")
        side_tok = self.expect("name")
        if side_tok[1] not in ("in", "out"):
            self.error("side must be 'in' or 'out'", side_tok)
        self.expect("punct", "}")
        return SectorRegion(lower, upper, side_tok[1])


_CURVE_RE = re.compile(
    r"^\s*(?P<lhs>[xy])\s*=\s*(?P<rhs>[^,]+?)\s*(?:,\s*(?P<var>[xy])\s*(?P<sign>[<>])\s*0\s*)?$"
)


def _parse_curve(text: str, tok=None) -> CurveSpec:
    """Parse 'y = <series in x>' or 'x = <series in y>' with an optional
    half marker like ', x<0' (default: positive half)."""
    m = _CURVE_RE.match(text)
    if not m:
        raise SpecError(f"invalid curve {text!r}", tok[2] if tok else None,
                        tok[3] if tok else None)
    lhs = m.group("lhs")
    var = "y" if lhs == "x" else "x"
    if m.group("var") is not None and m.group("var") != var:
        raise SpecError(f"half marker must constrain {var!r} in curve {text!r}")
    half = -1 if m.group("sign") == "<" else 1
    try:
        p = parse_poly(m.group("rhs"))
    except PolyError as e:
        raise SpecError(f"invalid curve series {text!r}: {e}")
    terms = []
    for i, j, c in p.terms:
        if lhs == "x":
            if i != 0:
                raise SpecError(f"curve {text!r}: right side must use only {var!r}")
            terms.append((j, c))
        else:
            if j != 0:
                raise SpecError(f"curve {text!r}: right side must use only {var!r}")
            terms.append((i, c))
    try:
        series = FractionalSeries(terms)
    except SeriesError as e:
        raise SpecError(f"invalid curve series {text!r}: {e}")
    return CurveSpec("x" if lhs == "y" else "y", half, series)


def _check_curves_disjoint(region: SectorsRegion, n_samples: int = 48):
    """Boundary curves must be pairwise disjoint inside the closed disk
    (except at the origin): the signed angular gap may shrink toward the
    origin (tangent curves) but must never change sign or vanish at an
    interior radius."""
    curves = region.boundary_curves()
    radii = np.geomspace(region.radius * 1e-6, region.radius, n_samples)
    floor = 1e-13
    for a in range(len(curves)):
        for b in range(a + 1, len(curves)):
            ga = curves[a].angle_at_radius(radii)
            gb = curves[b].angle_at_radius(radii)
            gap = np.mod(gb - ga + math.pi, 2 * math.pi) - math.pi
            signif = np.abs(gap) > floor
            signs = np.sign(gap[signif])
            crosses = len(signs) > 1 and np.any(signs != signs[0])
            touches_outer = abs(gap[-1]) <= floor
            if crosses or touches_outer:
                raise SpecError(
                    f"boundary curves {a} and {b} touch or cross inside "
                    f"the disk of radius {region.radius:g}")


def parse_spec(text: str) -> MultiplierSpec:
    """Parse a multiplier specification document."""
    if not isinstance(text, str):
        text = bytes(text).decode("utf-8", errors="strict")
    try:
        return _SpecParser(text).parse()
    except SpecError:
        raise
    except (PolyError, SeriesError, ValueError) as e:
        raise SpecError(str(e))


def serialize_spec(spec: MultiplierSpec) -> str:
    """Canonical text form; parse_spec(serialize_spec(s)) == s."""
    lines = []
    for f in spec.factors:
        lines.append(f'factor {{ poly = "{f.poly.expr()}", gamma = {f.gamma!r} }}')
    r = spec.region
    if isinstance(r, DiskRegion):
        lines.append(f"region {{ disk = {r.radius!r} }}")
    else:
        parts = []
        for s in r.sectors:
            parts.append(
                "sector { lower = \"%s\", upper = \"%s\", side = %s }"
                % (_curve_text(s.lower), _curve_text(s.upper), s.side))
        parts.append(f"radius = {r.radius!r}")
        lines.append("region { " + " ".join(parts) + " }")
    a = spec.amplitude
    if isinstance(a, BumpAmplitude):
        lines.append(f"amplitude {{ bump = {a.radius!r} }}")
    elif isinstance(a, ProductBumpAmplitude):
        lines.append(f"amplitude {{ product_bump = {a.radius!r} }}")
    if spec.base_point != (0.0, 0.0):
        lines.append(f"base = ({spec.base_point[0]!r}, {spec.base_point[1]!r})")
    return "\n".join(lines) + "\n"


def _curve_text(c: CurveSpec) -> str:
    var = "x" if c.axis == "x" else "y"
    lhs = "y" if c.axis == "x" else "x"
    body = c.series.expr(var)
    if c.half < 0:
        return f"{lhs} = {body}, {var}<0"
    return f"{lhs} = {body}"


#  integrability_check lives logically here but needs the resolution; the
#  import is deferred to avoid a module cycle.


@dataclass(frozen=True)
class IntegrabilityResult:
    ok: bool
    detail: str
    offending_sliver: Optional[str] = None

    def __bool__(self):
        return self.ok


def integrability_check(spec: MultiplierSpec) -> IntegrabilityResult:
    """True iff every chart of the resolution gives a convergent iterated
    monomial integral (intermediate exponents > -1, or exactly -1 only in the
    log-producing inner position)."""
    from .newton import resolve_spec
    from .measure import sliver_mass_law

    res = resolve_spec(spec)
    for sl in res.slivers:
        if sl.region_weight == 0:
            continue
        law = sliver_mass_law(spec, sl)
        if law is None:
            return IntegrabilityResult(
                False, f"divergent monomial integral on sliver {sl.ident}", sl.ident)
    return IntegrabilityResult(True, "all slivers give convergent monomial integrals")
