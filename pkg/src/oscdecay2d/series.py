"""Fractional power series k(x) = sum c * x^q with rational exponents.

These represent branch curves y = k(x) near x = 0+: Puiseux branches, sliver
shifts, and sliver boundaries.  Exponents are exact Fractions; coefficients
are Fractions when the data is rational and floats otherwise.
"""

from __future__ import annotations

from fractions import Fraction
from math import gcd
from typing import Iterable, Optional

import numpy as np

from .poly import Coeff, as_fraction

_CHOP = 1e-14


class SeriesError(ValueError):
    """Invalid series construction or operation."""


class FractionalSeries:
    """Finite series with strictly increasing positive rational exponents.

    ``truncation_order`` is the exponent up to which the series is known to
    agree with the exact branch; ``None`` means the series is exact (zero
    residual).  Branch exponents below 1 are allowed here (steep branches of
    e.g. y^2 - x); chart data that requires exponents >= 1 validates that at
    the chart level.
    """

    __slots__ = ("terms", "truncation_order")

    def __init__(self, terms: Iterable, truncation_order: Optional[Fraction] = None,
                 *, validate: bool = True):
        canon = []
        for q, c in terms:
            q = as_fraction(q)
            if not isinstance(c, (Fraction, float)):
                c = Fraction(c) if isinstance(c, int) else float(c)
            if c == 0:
                continue
            if isinstance(c, float) and abs(c) < _CHOP:
                continue
            canon.append((q, c))
        canon.sort(key=lambda t: t[0])
        for a, b in zip(canon, canon[1:]):
            if a[0] == b[0]:
                raise SeriesError(f"duplicate exponent {a[0]}")
        if validate and canon and canon[0][0] <= 0:
            raise SeriesError(f"lowest exponent {canon[0][0]} must be positive")
        object.__setattr__(self, "terms", tuple(canon))
        object.__setattr__(
            self, "truncation_order",
            None if truncation_order is None else as_fraction(truncation_order))

    def __setattr__(self, *a):
        raise AttributeError("FractionalSeries is immutable")

    @classmethod
    def zero_series(cls, truncation_order=None) -> "FractionalSeries":
        return cls((), truncation_order)

    @classmethod
    def monomial(cls, coeff, exponent) -> "FractionalSeries":
        return cls(((as_fraction(exponent), coeff),))

    # -- queries ---------------------------------------------------------

    def is_zero(self) -> bool:
        return not self.terms

    def leading(self) -> Optional[tuple[Fraction, Coeff]]:
        return (self.terms[0][0], self.terms[0][1]) if self.terms else None

    def leading_exponent(self) -> Optional[Fraction]:
        return self.terms[0][0] if self.terms else None

    def leading_coeff(self) -> Coeff:
        return self.terms[0][1] if self.terms else Fraction(0)

    def ramification(self) -> int:
        n = 1
        for q, _ in self.terms:
            n = n * q.denominator // gcd(n, q.denominator)
        return n

    def exponents(self) -> list[Fraction]:
        return [q for q, _ in self.terms]

    # -- arithmetic ------------------------------------------------------

    def _merge_trunc(self, other: "FractionalSeries") -> Optional[Fraction]:
        if self.truncation_order is None:
            return other.truncation_order
        if other.truncation_order is None:
            return self.truncation_order
        return min(self.truncation_order, other.truncation_order)

    def add(self, other: "FractionalSeries") -> "FractionalSeries":
        acc: dict[Fraction, Coeff] = {}
        for q, c in list(self.terms) + list(other.terms):
            acc[q] = acc.get(q, Fraction(0)) + c
        # chop float cancellation residue relative to the input scale
        scale = max((abs(float(c)) for _, c in list(self.terms) + list(other.terms)),
                    default=0.0)
        kept = [(q, c) for q, c in acc.items()
                if isinstance(c, Fraction) or abs(c) > 1e-13 * scale]
        return FractionalSeries(kept, self._merge_trunc(other), validate=False)

    def neg(self) -> "FractionalSeries":
        return FractionalSeries(((q, -c) for q, c in self.terms),
                                self.truncation_order, validate=False)

    def sub(self, other: "FractionalSeries") -> "FractionalSeries":
        return self.add(other.neg())

    def scale(self, c) -> "FractionalSeries":
        if c == 0:
            return FractionalSeries.zero_series(self.truncation_order)
        return FractionalSeries(((q, c * v) for q, v in self.terms),
                                self.truncation_order, validate=False)

    def multiply(self, other: "FractionalSeries") -> "FractionalSeries":
        acc: dict[Fraction, Coeff] = {}
        for q1, c1 in self.terms:
            for q2, c2 in other.terms:
                q = q1 + q2
                acc[q] = acc.get(q, Fraction(0)) + c1 * c2
        return FractionalSeries(acc.items(), self._merge_trunc(other), validate=False)

    def truncate(self, order) -> "FractionalSeries":
        order = as_fraction(order)
        kept = [(q, c) for q, c in self.terms if q <= order]
        return FractionalSeries(kept, order, validate=False)

    # -- comparison near zero ---------------------------------------------

    def compare_near_zero(self, other: "FractionalSeries") -> int:
        """Sign of (self - other) for small x > 0: -1, 0, or +1.

        0 means equal up to the available truncation.
        """
        diff = self.sub(other)
        lead = diff.leading()
        if lead is None:
            return 0
        return 1 if lead[1] > 0 else -1

    def contact(self, other: "FractionalSeries") -> Optional[Fraction]:
        """Leading exponent of (self - other); None if equal to truncation."""
        diff = self.sub(other)
        return diff.leading_exponent()

    # -- evaluation --------------------------------------------------------

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        total = np.zeros(x.shape, dtype=float)
        for q, c in self.terms:
            total = total + float(c) * np.power(x, float(q))
        if total.shape == ():
            return float(total)
        return total

    def derivative(self) -> "FractionalSeries":
        return FractionalSeries(((q - 1, c * q) for q, c in self.terms),
                                None, validate=False)

    # -- formatting --------------------------------------------------------

    def expr(self, var: str = "x") -> str:
        if not self.terms:
            return "0"
        parts = []
        for q, c in self.terms:
            cs = str(c) if isinstance(c, Fraction) else repr(float(c))
            neg = cs.startswith("-")
            if neg:
                cs = cs[1:]
            if q == 0:
                body = cs
            else:
                pw = var if q == 1 else (f"{var}^{q}" if q.denominator == 1 else f"{var}^({q})")
                body = pw if cs == "1" else f"{cs}*{pw}"
            parts.append(("-" if neg else "+", body))
        s = ("-" if parts[0][0] == "-" else "") + parts[0][1]
        for sign, body in parts[1:]:
            s += f" {sign} {body}"
        return s

    def __repr__(self):
        t = "" if self.truncation_order is None else f" + O(x^{self.truncation_order})"
        return f"FractionalSeries({self.expr()}{t})"

    def __eq__(self, other):
        return (isinstance(other, FractionalSeries) and self.terms == other.terms
                and self.truncation_order == other.truncation_order)

    def __hash__(self):
        return hash((self.terms, self.truncation_order))
