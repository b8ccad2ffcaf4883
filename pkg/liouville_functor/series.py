"""Truncated multivariate power series over QQ and 2x2 matrices of them up to scalars.

Series are stored as sympy sparse polynomials; every operation drops the
monomials whose total degree exceeds the cutoff.
"""

import itertools
import logging
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Mapping, Union

from sympy.polys.domains import QQ
from sympy.polys.rings import PolyElement, ring

from .errors import SeriesError

logger = logging.getLogger(__name__)

Scalar = Union[int, Fraction]


@lru_cache(maxsize=None)
def _ring(variables: tuple[str, ...]):
    if not variables:
        raise SeriesError("a series ring needs at least one variable")
    R, *_ = ring(",".join(variables), QQ)
    return R


def to_qq(value: Scalar):
    value = Fraction(value)
    return QQ(value.numerator, value.denominator)


def from_qq(value) -> Fraction:
    return Fraction(int(value.numerator), int(value.denominator))


class TruncatedSeries:
    __slots__ = ("variables", "cutoff", "poly")

    def __init__(self, variables: tuple[str, ...], cutoff: int, poly: PolyElement | None = None):
        if cutoff < 0:
            raise SeriesError(f"cutoff must be >= 0, got {cutoff}")
        self.variables = tuple(variables)
        self.cutoff = cutoff
        R = _ring(self.variables)
        if poly is None:
            poly = R.zero
        self.poly = R.from_dict({m: c for m, c in poly.items() if sum(m) <= cutoff})

    # -- constructors ----------------------------------------------------------

    @classmethod
    def constant(cls, variables, cutoff: int, value: Scalar) -> "TruncatedSeries":
        R = _ring(tuple(variables))
        return cls(variables, cutoff, R.from_dict({R.zero_monom: to_qq(value)}) if value else R.zero)

    @classmethod
    def variable(cls, variables, cutoff: int, name: str) -> "TruncatedSeries":
        variables = tuple(variables)
        if name not in variables:
            raise SeriesError(f"unknown variable {name!r}", variables=list(variables))
        R = _ring(variables)
        return cls(variables, cutoff, R.gens[variables.index(name)])

    @classmethod
    def from_terms(cls, variables, cutoff: int, terms: Mapping[tuple[int, ...], Scalar]) -> "TruncatedSeries":
        R = _ring(tuple(variables))
        for monom in terms:
            if len(monom) != len(R.gens) or min(monom, default=0) < 0:
                raise SeriesError(f"bad exponent vector {monom}")
        return cls(variables, cutoff, R.from_dict({m: to_qq(c) for m, c in terms.items() if c}))

    # -- inspection ------------------------------------------------------------

    def terms(self) -> dict[tuple[int, ...], Fraction]:
        return {m: from_qq(c) for m, c in self.poly.items()}

    def coefficient(self, monom: tuple[int, ...]) -> Fraction:
        return from_qq(self.poly.get(tuple(monom), QQ.zero))

    def constant_term(self) -> Fraction:
        return self.coefficient((0,) * len(self.variables))

    def is_zero(self) -> bool:
        return not self.poly

    def total_degree(self) -> int:
        return max((sum(m) for m in self.poly), default=-1)

    # -- arithmetic ------------------------------------------------------------

    def _coerce(self, other) -> "TruncatedSeries":
        if isinstance(other, TruncatedSeries):
            if other.variables != self.variables:
                raise SeriesError("series live in different rings", left=list(self.variables), right=list(other.variables))
            return other
        if isinstance(other, (int, Fraction)):
            return TruncatedSeries.constant(self.variables, self.cutoff, other)
        return NotImplemented

    def _cut(self, other: "TruncatedSeries") -> int:
        return min(self.cutoff, other.cutoff)

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return TruncatedSeries(self.variables, self._cut(other), self.poly + other.poly)

    __radd__ = __add__

    def __neg__(self):
        return TruncatedSeries(self.variables, self.cutoff, -self.poly)

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return TruncatedSeries(self.variables, self._cut(other), self.poly - other.poly)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            return TruncatedSeries(self.variables, self.cutoff, self.poly * to_qq(other))
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        N = self._cut(other)
        # Multiply term by term, skipping products that leave the cutoff.
        product: dict = {}
        for m1, c1 in self.poly.items():
            d1 = sum(m1)
            for m2, c2 in other.poly.items():
                if d1 + sum(m2) > N:
                    continue
                m = tuple(a + b for a, b in zip(m1, m2))
                product[m] = product.get(m, QQ.zero) + c1 * c2
        return TruncatedSeries(self.variables, N, _ring(self.variables).from_dict(product))

    __rmul__ = __mul__

    def __pow__(self, exponent: int):
        if exponent < 0:
            raise SeriesError("negative powers are not formed in the truncated ring")
        result = TruncatedSeries.constant(self.variables, self.cutoff, 1)
        for _ in range(exponent):
            result = result * self
        return result

    def __eq__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self.poly == other.poly

    def __hash__(self):
        return hash((self.variables, self.cutoff, frozenset(self.poly.items())))

    def substitute(self, values: Mapping[str, Union[Scalar, "TruncatedSeries"]]) -> "TruncatedSeries":
        """Replace variables by rationals or by series of the same ring."""
        images = []
        for i, name in enumerate(self.variables):
            value = values.get(name)
            if value is None:
                images.append(TruncatedSeries.variable(self.variables, self.cutoff, name))
            elif isinstance(value, TruncatedSeries):
                images.append(self._coerce(value))
            else:
                images.append(TruncatedSeries.constant(self.variables, self.cutoff, value))
        result = TruncatedSeries.constant(self.variables, self.cutoff, 0)
        for monom, c in self.poly.items():
            term = TruncatedSeries.constant(self.variables, self.cutoff, from_qq(c))
            for image, k in zip(images, monom):
                if k:
                    term = term * image**k
            result = result + term
        return result

    def __repr__(self):
        return f"TruncatedSeries({self.poly.as_expr()} + O(deg > {self.cutoff}))"

    def to_dict(self) -> dict:
        return {
            "variables": list(self.variables),
            "cutoff": self.cutoff,
            "terms": [
                {"exponents": list(m), "coefficient": str(c)}
                for m, c in sorted(self.terms().items())
            ],
        }


@dataclass(frozen=True)
class ProjectiveMatrix:
    """[[a, b], [c, d]] modulo units; equality is tested through cross-products."""

    a: TruncatedSeries
    b: TruncatedSeries
    c: TruncatedSeries
    d: TruncatedSeries

    @classmethod
    def identity(cls, variables, cutoff: int) -> "ProjectiveMatrix":
        one = TruncatedSeries.constant(variables, cutoff, 1)
        zero = TruncatedSeries.constant(variables, cutoff, 0)
        return cls(one, zero, zero, one)

    def entries(self) -> tuple[TruncatedSeries, ...]:
        return (self.a, self.b, self.c, self.d)

    def is_zero(self) -> bool:
        return all(x.is_zero() for x in self.entries())

    def __matmul__(self, other: "ProjectiveMatrix") -> "ProjectiveMatrix":
        return ProjectiveMatrix(
            self.a * other.a + self.b * other.c,
            self.a * other.b + self.b * other.d,
            self.c * other.a + self.d * other.c,
            self.c * other.b + self.d * other.d,
        )

    def determinant(self) -> TruncatedSeries:
        return self.a * self.d - self.b * self.c

    def apply(self, x: Scalar, y: Scalar = 1) -> tuple[TruncatedSeries, TruncatedSeries]:
        """Image of the column vector (x, y)."""
        return (self.a * x + self.b * y, self.c * x + self.d * y)

    def projectively_equal(self, other: "ProjectiveMatrix") -> bool:
        if self.is_zero() or other.is_zero():
            return False
        mine, theirs = self.entries(), other.entries()
        return all(
            mine[i] * theirs[j] == mine[j] * theirs[i]
            for i, j in itertools.combinations(range(4), 2)
        )

    def to_dict(self) -> dict:
        return {name: getattr(self, name).to_dict() for name in "abcd"}
