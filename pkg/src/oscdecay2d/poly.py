"""Bivariate polynomials with rational exponents and exact coefficient arithmetic.

Coefficients are ``fractions.Fraction`` while the input data is rational and
degrade gracefully to ``float`` once irrational branch coefficients enter the
computation (Fraction*float -> float, so mixed arithmetic needs no special
casing).  Exponents are always exact ``Fraction`` values; the common
denominator of all exponents is the ramification index of the polynomial.
"""

from __future__ import annotations

import re
from fractions import Fraction
from math import comb, gcd
from typing import Iterable, Sequence, Union

import numpy as np

Coeff = Union[Fraction, float]

_FLOAT_CHOP = 1e-14


class PolyError(ValueError):
    """Invalid polynomial construction or operation."""


def as_fraction(v) -> Fraction:
    if isinstance(v, Fraction):
        return v
    if isinstance(v, int):
        return Fraction(v)
    if isinstance(v, str):
        return Fraction(v)
    if isinstance(v, float):
        if not v.is_integer():
            raise PolyError(f"exponent {v!r} is not exact; pass a Fraction")
        return Fraction(int(v))
    raise PolyError(f"cannot interpret {v!r} as a rational number")


def _chop(terms):
    """Drop coefficients that are exactly zero or float round-off residue."""
    mags = [abs(float(c)) for _, _, c in terms if c != 0]
    floor = _FLOAT_CHOP * max(mags, default=0.0)
    out = []
    for i, j, c in terms:
        if isinstance(c, Fraction):
            if c != 0:
                out.append((i, j, c))
        elif c != 0.0 and abs(c) > floor:
            out.append((i, j, c))
    return out


class BivariatePoly:
    """Finite sum of terms c * x^i * y^j with rational i, j >= 0.

    Immutable; terms are kept sorted by (i, j).  Duplicate (i, j) pairs are an
    error in the public constructor (use :meth:`from_sum` to combine).
    """

    __slots__ = ("terms",)

    def __init__(self, terms: Iterable[Sequence], *, _internal: bool = False):
        canon = []
        for t in terms:
            i, j, c = t
            i = as_fraction(i)
            j = as_fraction(j)
            if not isinstance(c, (Fraction, float)):
                c = Fraction(c) if isinstance(c, int) else float(c)
            if not _internal and (i < 0 or j < 0):
                raise PolyError(f"negative exponent in term ({i}, {j})")
            canon.append((i, j, c))
        canon.sort(key=lambda t: (t[0], t[1]))
        for a, b in zip(canon, canon[1:]):
            if a[0] == b[0] and a[1] == b[1]:
                raise PolyError(f"duplicate monomial x^{a[0]} y^{a[1]}")
        if any(c == 0 for _, _, c in canon):
            raise PolyError("zero coefficient in term list")
        object.__setattr__(self, "terms", tuple(canon))

    def __setattr__(self, *a):
        raise AttributeError("BivariatePoly is immutable")

    @classmethod
    def from_sum(cls, terms: Iterable[Sequence], *, _internal: bool = False) -> "BivariatePoly":
        """Build a polynomial combining duplicate monomials and dropping zeros."""
        acc: dict[tuple[Fraction, Fraction], Coeff] = {}
        for i, j, c in terms:
            i = as_fraction(i)
            j = as_fraction(j)
            key = (i, j)
            acc[key] = acc.get(key, Fraction(0)) + c
        kept = _chop([(i, j, c) for (i, j), c in acc.items()])
        return cls(kept, _internal=_internal)

    @classmethod
    def zero(cls) -> "BivariatePoly":
        return cls(())

    @classmethod
    def constant(cls, c) -> "BivariatePoly":
        return cls.from_sum([(0, 0, c)])

    # -- queries ---------------------------------------------------------

    def is_zero(self) -> bool:
        return not self.terms

    def support(self) -> list[tuple[Fraction, Fraction]]:
        return [(i, j) for i, j, _ in self.terms]

    def coefficient(self, i, j) -> Coeff:
        i, j = as_fraction(i), as_fraction(j)
        for a, b, c in self.terms:
            if a == i and b == j:
                return c
        return Fraction(0)

    def max_total_degree(self) -> Fraction:
        if self.is_zero():
            return Fraction(0)
        return max(i + j for i, j, _ in self.terms)

    def min_total_degree(self) -> Fraction:
        if self.is_zero():
            return Fraction(0)
        return min(i + j for i, j, _ in self.terms)

    def ramification(self) -> int:
        n = 1
        for i, j, _ in self.terms:
            n = n * i.denominator // gcd(n, i.denominator)
            n = n * j.denominator // gcd(n, j.denominator)
        return n

    def y_degree(self) -> int:
        if self.is_zero():
            return 0
        d = max(j for _, j, _ in self.terms)
        if d.denominator != 1:
            raise PolyError("y-exponents are fractional")
        return int(d)

    def has_integer_exponents(self) -> bool:
        return all(i.denominator == 1 and j.denominator == 1 for i, j, _ in self.terms)

    def x_order_at_y0(self) -> Fraction | None:
        """Order of vanishing of f(x, 0) at x = 0, or None if f(x,0) == 0."""
        exps = [i for i, j, _ in self.terms if j == 0]
        return min(exps) if exps else None

    # -- arithmetic ------------------------------------------------------

    def __add__(self, other: "BivariatePoly") -> "BivariatePoly":
        return BivariatePoly.from_sum(list(self.terms) + list(other.terms), _internal=True)

    def __neg__(self) -> "BivariatePoly":
        return BivariatePoly([(i, j, -c) for i, j, c in self.terms], _internal=True)

    def __sub__(self, other: "BivariatePoly") -> "BivariatePoly":
        return self + (-other)

    def __mul__(self, other: "BivariatePoly") -> "BivariatePoly":
        out = []
        for i1, j1, c1 in self.terms:
            for i2, j2, c2 in other.terms:
                out.append((i1 + i2, j1 + j2, c1 * c2))
        return BivariatePoly.from_sum(out, _internal=True)

    def scale(self, c) -> "BivariatePoly":
        if c == 0:
            return BivariatePoly.zero()
        return BivariatePoly([(i, j, c * v) for i, j, v in self.terms], _internal=True)

    def partial(self, lx: int = 0, my: int = 0) -> "BivariatePoly":
        """Symbolic partial derivative d^lx/dx^lx d^my/dy^my.

        Exponents may become negative (fractional powers); the result is only
        meant for evaluation at x > 0, y > 0.
        """
        out = []
        for i, j, c in self.terms:
            coef = c
            ii, jj = i, j
            ok = True
            for _ in range(lx):
                if ii == 0:
                    ok = False
                    break
                coef = coef * ii
                ii -= 1
            if not ok:
                continue
            for _ in range(my):
                if jj == 0:
                    ok = False
                    break
                coef = coef * jj
                jj -= 1
            if ok:
                out.append((ii, jj, coef))
        return BivariatePoly.from_sum(out, _internal=True)

    # -- evaluation ------------------------------------------------------

    def __call__(self, x, y):
        """Evaluate at scalar or numpy array arguments.

        Fractional powers use real principal roots and return NaN for
        negative bases with even-denominator exponents.
        """
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        total = np.zeros(np.broadcast(x, y).shape, dtype=float)
        for i, j, c in self.terms:
            total = total + float(c) * _real_power(x, i) * _real_power(y, j)
        if total.shape == ():
            return float(total)
        return total

    # -- structure -------------------------------------------------------

    def leading_form(self) -> "BivariatePoly":
        """Terms of minimal total degree (the lowest-order homogeneous part)."""
        if self.is_zero():
            return self
        d = self.min_total_degree()
        return BivariatePoly([t for t in self.terms if t[0] + t[1] == d], _internal=True)

    def reflected(self, sx: int, sy: int, swap: bool) -> "BivariatePoly":
        """f(sx*X, sy*Y), optionally with X and Y swapped afterward.

        Requires integer exponents whenever a sign is flipped.
        """
        out = []
        for i, j, c in self.terms:
            coef = c
            if sx < 0:
                if i.denominator != 1:
                    raise PolyError("cannot reflect fractional x-exponent")
                coef = coef if i % 2 == 0 else -coef
            if sy < 0:
                if j.denominator != 1:
                    raise PolyError("cannot reflect fractional y-exponent")
                coef = coef if j % 2 == 0 else -coef
            if swap:
                out.append((j, i, coef))
            else:
                out.append((i, j, coef))
        return BivariatePoly(out, _internal=True)

    def shift_y(self, series, ysign: int = 1) -> "BivariatePoly":
        """f(x, ysign*y + k(x)) for a fractional series k.

        Exact: the series is finite, so no truncation is applied.  y-exponents
        must be integers.
        """
        from .series import FractionalSeries

        assert isinstance(series, FractionalSeries)
        if ysign not in (1, -1):
            raise PolyError("ysign must be +/-1")
        # Precompute powers k^p for p up to the y-degree.
        ydeg = self.y_degree()
        kpow = [FractionalSeries.zero_series()] * (ydeg + 1)
        kpow[0] = FractionalSeries(((Fraction(0), Fraction(1)),), validate=False)
        for p in range(1, ydeg + 1):
            kpow[p] = kpow[p - 1].multiply(series)
        out = []
        for i, j, c in self.terms:
            jj = int(j)
            for m in range(jj + 1):
                base = c * comb(jj, m) * (1 if ysign > 0 else (-1) ** m)
                for q, kc in kpow[jj - m].terms:
                    out.append((i + q, Fraction(m), base * kc))
        return BivariatePoly.from_sum(out, _internal=True)

    # -- formatting ------------------------------------------------------

    def expr(self) -> str:
        """Canonical expression string, parseable by :func:`parse_poly`."""
        if self.is_zero():
            return "0"
        parts = []
        for i, j, c in self.terms:
            factors = []
            if isinstance(c, Fraction):
                cstr = str(c)
            else:
                cstr = repr(c)
            neg = cstr.startswith("-")
            if neg:
                cstr = cstr[1:]
            if cstr != "1" or (i == 0 and j == 0):
                factors.append(cstr)
            for name, e in (("x", i), ("y", j)):
                if e == 0:
                    continue
                if e == 1:
                    factors.append(name)
                elif e.denominator == 1:
                    factors.append(f"{name}^{e}")
                else:
                    factors.append(f"{name}^({e})")
            parts.append(("-" if neg else "+", "*".join(factors)))
        sign0, body0 = parts[0]
        s = ("-" if sign0 == "-" else "") + body0
        for sign, body in parts[1:]:
            s += f" {sign} {body}"
        return s

    def __repr__(self):
        return f"BivariatePoly({self.expr()})"

    def __eq__(self, other):
        return isinstance(other, BivariatePoly) and self.terms == other.terms

    def __hash__(self):
        return hash(self.terms)


def _real_power(base: np.ndarray, e: Fraction):
    """base**e with real odd roots for negative bases; NaN if no real root."""
    if e == 0:
        return np.ones_like(base)
    fe = float(e)
    if e.denominator == 1:
        return np.power(base, int(e)) if e > 0 else _safe_neg_int_power(base, int(e))
    if e.denominator % 2 == 1:
        # odd root exists for negative base
        return np.sign(base) ** e.numerator * np.power(np.abs(base), fe)
    with np.errstate(invalid="ignore"):
        return np.power(base, fe)


def _safe_neg_int_power(base, e: int):
    with np.errstate(divide="ignore"):
        return np.power(base, e)


# ---------------------------------------------------------------------------
# Expression parsing


class PolyParseError(PolyError):
    def __init__(self, msg: str, pos: int):
        super().__init__(f"{msg} (at column {pos + 1})")
        self.pos = pos


def parse_poly(text: str) -> BivariatePoly:
    """Parse a polynomial expression in x and y.

    Grammar: sums/differences of products of factors ``<number>``, ``x``,
    ``y``, with ``^`` exponents that are integers or parenthesised rationals
    like ``x^(3/2)``.  Like terms are combined; an expression that combines to
    zero raises.
    """
    # The '/' character is not a token of the main grammar, so rational
    # exponents x^(3/2) are pre-substituted before tokenizing.
    subs: dict[str, Fraction] = {}

    def _sub(m):
        key = f"q{len(subs)}q"
        if int(m.group(2)) == 0:
            raise PolyError("zero denominator in rational exponent")
        subs[key] = Fraction(int(m.group(1)), int(m.group(2)))
        return f"^[{key}]"

    prepared = re.sub(r"\^\s*\(\s*(\d+)\s*/\s*(\d+)\s*\)", _sub, text)
    if "/" in prepared:
        raise PolyError("'/' only allowed in exponents of the form ^(p/q)")
    if "(" in prepared or ")" in prepared:
        raise PolyError("parentheses only allowed around rational exponents ^(p/q)")

    # Re-expand placeholders into plain integer-exponent handling by direct
    # token stream manipulation: replace [key] markers after tokenizing.
    terms = _parse_prepared(prepared, subs)
    p = BivariatePoly.from_sum(terms)
    if p.is_zero():
        raise PolyError("polynomial expression combines to zero")
    return p


def _parse_prepared(text: str, subs: dict[str, Fraction]):
    token_re = re.compile(
        r"\s*(?:(?P<num>\d+(?:\.\d+)?)|(?P<name>[xy])|(?P<ref>\[q\d+q\])|(?P<op>[-+*^])|(?P<bad>\S))"
    )
    tokens = []
    for m in token_re.finditer(text):
        if m.group("bad"):
            raise PolyParseError(f"unexpected character {m.group('bad')!r}", m.start("bad"))
        for kind in ("num", "name", "ref", "op"):
            if m.group(kind):
                tokens.append((kind, m.group(kind), m.start(kind)))
    tokens.append(("end", "", len(text)))

    k = 0

    def peek():
        return tokens[k]

    def take():
        nonlocal k
        t = tokens[k]
        k += 1
        return t

    def parse_exponent() -> Fraction:
        kind, val, pos = take()
        if kind == "num":
            if "." in val:
                raise PolyParseError("decimal exponents are not allowed; use ^(p/q)", pos)
            return Fraction(int(val))
        if kind == "ref":
            return subs[val[1:-1]]
        raise PolyParseError("expected an exponent", pos)

    def parse_factor():
        kind, val, pos = take()
        if kind == "num":
            if "." in val:
                c = Fraction(val)
            else:
                c = Fraction(int(val))
            kind2, val2, pos2 = peek()
            if kind2 == "op" and val2 == "^":
                raise PolyParseError("exponent on a numeric literal is not supported", pos2)
            return Fraction(0), Fraction(0), c
        if kind == "name":
            e = Fraction(1)
            kind2, val2, _ = peek()
            if kind2 == "op" and val2 == "^":
                take()
                e = parse_exponent()
            if val == "x":
                return e, Fraction(0), Fraction(1)
            return Fraction(0), e, Fraction(1)
        raise PolyParseError("expected a number, x, or y", pos)

    def parse_term(sign):
        i, j, c = parse_factor()
        while True:
            kind, val, _ = peek()
            if kind == "op" and val == "*":
                take()
                i2, j2, c2 = parse_factor()
                i, j, c = i + i2, j + j2, c * c2
            else:
                return (i, j, sign * c)

    out = []
    kind, val, _ = peek()
    sign = 1
    if kind == "op" and val in "+-":
        take()
        sign = -1 if val == "-" else 1
    out.append(parse_term(sign))
    while True:
        kind, val, pos = peek()
        if kind == "end":
            return out
        if kind == "op" and val in "+-":
            take()
            out.append(parse_term(-1 if val == "-" else 1))
        else:
            raise PolyParseError("expected '+' or '-' between terms", pos)
