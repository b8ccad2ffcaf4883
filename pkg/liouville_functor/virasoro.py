"""Virasoro Verma modules over exact rationals.

Basis vectors are partitions ``lam = (l1 >= l2 >= ... >= lk)`` standing for
``L_{-l1} ... L_{-lk} e``. The action of ``L_n`` is computed by commuting it
to the right and re-sorting with ``[L_n, L_m] = (n - m) L_{n+m} + c/12 n(n^2 - 1) delta_{n+m,0}``.
"""

import logging
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Mapping, Union

import mpmath
from sympy.functions.combinatorial.numbers import partition as partition_count
from sympy.utilities.iterables import partitions as _sympy_partitions

from .errors import InputError, SingularGramError, SingularMatrixError
from .linalg import determinant, inverse_and_determinant
from .models import BlockSeries

logger = logging.getLogger(__name__)

Partition = tuple[int, ...]


@dataclass(frozen=True)
class LiouvilleParams:
    b: Fraction

    def __post_init__(self):
        object.__setattr__(self, "b", Fraction(self.b))
        if self.b <= 0:
            raise InputError(f"b must be positive, got {self.b}", b=self.b)

    @property
    def Q(self) -> Fraction:
        return self.b + 1 / self.b

    @property
    def c(self) -> Fraction:
        return 1 + 6 * self.Q**2


@dataclass(frozen=True)
class Weight:
    delta: Fraction
    momentum: Fraction | None = None

    def __post_init__(self):
        object.__setattr__(self, "delta", Fraction(self.delta))

    def to_dict(self) -> dict:
        out = {"delta": str(self.delta)}
        if self.momentum is not None:
            out["momentum"] = str(self.momentum)
        return out


@dataclass(frozen=True)
class NumericWeight:
    delta: mpmath.mpf
    momentum: mpmath.mpf
    precision: int

    def to_dict(self) -> dict:
        return {
            "delta": mpmath.nstr(self.delta, self.precision),
            "momentum": mpmath.nstr(self.momentum, self.precision),
        }


WeightLike = Union[Weight, Fraction, int]


def as_weight(weight: WeightLike) -> Weight:
    return weight if isinstance(weight, Weight) else Weight(Fraction(weight))


def weight_from_momentum(params: LiouvilleParams, r: Fraction) -> Weight:
    """Delta = Q^2/4 + r^2 for alpha = Q/2 + i r on the physical slice."""
    r = Fraction(r)
    return Weight(params.Q**2 / 4 + r * r, momentum=r)


def weight_from_alpha(params: LiouvilleParams, alpha: Fraction) -> Weight:
    alpha = Fraction(alpha)
    return Weight(alpha * (params.Q - alpha))


def weight_from_length(params: LiouvilleParams, length, precision: int) -> NumericWeight:
    """Numeric weight for a geodesic length: r = l / (4 pi b)."""
    with mpmath.workdps(precision + 5):
        l = mpmath.mpf(length)
        if l < 0:
            raise InputError(f"length must be non-negative, got {length}", length=str(length))
        b = mpmath.mpf(params.b.numerator) / params.b.denominator
        Q = b + 1 / b
        r = l / (4 * mpmath.pi * b)
        delta = Q**2 / 4 + r**2
    return NumericWeight(+delta, +r, precision)


def partitions(level: int) -> list[Partition]:
    """Partitions of ``level`` in reverse-lexicographic order: (n), (n-1, 1), ..., (1, ..., 1)."""
    if level < 0:
        raise InputError(f"level must be >= 0, got {level}")
    if level == 0:
        return [()]
    found = [
        tuple(part for part, mult in sorted(p.items(), reverse=True) for _ in range(mult))
        for p in _sympy_partitions(level)
    ]
    return sorted(found, reverse=True)


def level_dimension(level: int) -> int:
    return int(partition_count(level))


@dataclass(frozen=True)
class VermaVector:
    terms: Mapping[Partition, Fraction]
    module: "VermaModule" = field(compare=False, repr=False)

    def __add__(self, other: "VermaVector") -> "VermaVector":
        return self.module.vector(_accumulate(dict(self.terms), other.terms, 1))

    def __sub__(self, other: "VermaVector") -> "VermaVector":
        return self.module.vector(_accumulate(dict(self.terms), other.terms, -1))

    def __mul__(self, scalar) -> "VermaVector":
        return self.module.vector({lam: c * scalar for lam, c in self.terms.items()})

    __rmul__ = __mul__

    def is_zero(self) -> bool:
        return not self.terms

    def levels(self) -> set[int]:
        return {sum(lam) for lam in self.terms}

    def component(self, level: int) -> "VermaVector":
        return self.module.vector({lam: c for lam, c in self.terms.items() if sum(lam) == level})


def _accumulate(target: dict, terms: Mapping, scale) -> dict:
    for lam, c in terms.items():
        value = target.get(lam, 0) + scale * c
        if value:
            target[lam] = value
        else:
            target.pop(lam, None)
    return target


class VermaModule:
    """The Verma module of central charge ``c`` and highest weight ``delta``."""

    def __init__(self, c: Fraction, delta: Fraction):
        self.c = Fraction(c)
        self.delta = Fraction(delta)
        self._cache: dict[tuple[int, Partition], dict] = {}
        self._grams: dict[int, list[list[Fraction]]] = {}
        self._inverses: dict[int, list[list[Fraction]]] = {}

    def vector(self, terms: Mapping[Partition, Fraction]) -> VermaVector:
        clean = {}
        for lam, c in terms.items():
            lam = tuple(lam)
            if any(a < b for a, b in zip(lam, lam[1:])) or any(p < 1 for p in lam):
                raise InputError(f"{lam} is not a partition")
            c = Fraction(c)
            if c:
                clean[lam] = clean.get(lam, Fraction(0)) + c
        return VermaVector({lam: c for lam, c in clean.items() if c}, self)

    def basis_vector(self, lam: Partition) -> VermaVector:
        return self.vector({tuple(lam): Fraction(1)})

    def highest_weight(self) -> VermaVector:
        return self.basis_vector(())

    def apply_basis(self, n: int, lam: Partition) -> dict:
        key = (n, lam)
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        out: dict = {}
        if n == 0:
            out = {lam: self.delta + sum(lam)}
        elif not lam:
            out = {(-n,): Fraction(1)} if n < 0 else {}
        elif n < 0:
            m, l1, rest = -n, lam[0], lam[1:]
            if m >= l1:
                out = {(m,) + lam: Fraction(1)}
            else:
                # L_{-m} L_{-l1} = L_{-l1} L_{-m} + (l1 - m) L_{-m-l1}
                out = self._apply_terms(-l1, self.apply_basis(n, rest))
                _accumulate(out, self.apply_basis(-(m + l1), rest), l1 - m)
        elif n <= sum(lam):
            l1, rest = lam[0], lam[1:]
            # L_n L_{-l1} = L_{-l1} L_n + (n + l1) L_{n-l1} + c/12 n(n^2-1) delta_{n,l1}
            out = self._apply_terms(-l1, self.apply_basis(n, rest))
            _accumulate(out, self.apply_basis(n - l1, rest), n + l1)
            if n == l1:
                _accumulate(out, {rest: Fraction(1)}, self.c / 12 * n * (n * n - 1))
        self._cache[key] = out
        return out

    def _apply_terms(self, n: int, terms: Mapping[Partition, Fraction]) -> dict:
        out: dict = {}
        for lam, c in terms.items():
            _accumulate(out, self.apply_basis(n, lam), c)
        return out

    def l_action(self, n: int, v: VermaVector) -> VermaVector:
        return VermaVector(self._apply_terms(n, v.terms), self)

    def _pair_basis(self, lam: Partition, terms: Mapping[Partition, Fraction]) -> Fraction:
        for part in lam:
            terms = self._apply_terms(part, terms)
            if not terms:
                return Fraction(0)
        return Fraction(terms.get((), 0))

    def shapovalov(self, v: VermaVector, w: VermaVector) -> Fraction:
        total = Fraction(0)
        for lam, c in v.terms.items():
            level = sum(lam)
            same = {mu: d for mu, d in w.terms.items() if sum(mu) == level}
            if same:
                total += c * self._pair_basis(lam, same)
        return total

    def gram_matrix(self, level: int) -> list[list[Fraction]]:
        if level not in self._grams:
            basis = partitions(level)
            gram = [[Fraction(0)] * len(basis) for _ in basis]
            for i, lam in enumerate(basis):
                for j in range(i, len(basis)):
                    gram[i][j] = gram[j][i] = self._pair_basis(lam, {basis[j]: Fraction(1)})
            self._grams[level] = gram
            logger.debug("gram level %d (dim %d) at c=%s delta=%s", level, len(basis), self.c, self.delta)
        return [row[:] for row in self._grams[level]]

    def gram_inverse(self, level: int) -> list[list[Fraction]]:
        if level not in self._inverses:
            try:
                inv, _ = inverse_and_determinant(self.gram_matrix(level))
            except SingularMatrixError:
                raise SingularGramError(level, Fraction(0)) from None
            self._inverses[level] = inv
        return [row[:] for row in self._inverses[level]]

    def gram_determinant(self, level: int) -> Fraction:
        return determinant(self.gram_matrix(level))


@lru_cache(maxsize=256)
def verma_module(c: Fraction, delta: Fraction) -> VermaModule:
    return VermaModule(c, delta)


def module_for(params: LiouvilleParams, weight: WeightLike) -> VermaModule:
    return verma_module(params.c, as_weight(weight).delta)


def l_action(params: LiouvilleParams, weight: WeightLike, n: int, v: VermaVector) -> VermaVector:
    return module_for(params, weight).l_action(n, v)


def shapovalov(params: LiouvilleParams, weight: WeightLike, v: VermaVector, w: VermaVector) -> Fraction:
    return module_for(params, weight).shapovalov(v, w)


def gram_matrix(params: LiouvilleParams, weight: WeightLike, level: int) -> list[list[Fraction]]:
    """Entry (lam, mu) is <L_{-lam} e, L_{-mu} e>, rows in ``partitions(level)`` order."""
    return module_for(params, weight).gram_matrix(level)


def gram_inverse(params: LiouvilleParams, weight: WeightLike, level: int) -> list[list[Fraction]]:
    return module_for(params, weight).gram_inverse(level)


def gram_determinant(params: LiouvilleParams, weight: WeightLike, level: int) -> Fraction:
    return module_for(params, weight).gram_determinant(level)


def character(weight: WeightLike, order: int) -> BlockSeries:
    """q^delta * sum_{n <= order} p(n) q^n."""
    if order < 0:
        raise InputError(f"order must be >= 0, got {order}")
    return BlockSeries(
        delta_beta=as_weight(weight).delta,
        coefficients=tuple(Fraction(level_dimension(n)) for n in range(order + 1)),
    )
