"""Exact rational elimination: dense inverses/determinants and an incremental sparse solver."""

import logging
from fractions import Fraction
from typing import Hashable, Iterable, Sequence

from .errors import SingularMatrixError

logger = logging.getLogger(__name__)

Matrix = list[list[Fraction]]


def _size(x: Fraction) -> int:
    return x.numerator.bit_length() + x.denominator.bit_length()


def identity(n: int) -> Matrix:
    return [[Fraction(int(i == j)) for j in range(n)] for i in range(n)]


def matmul(a: Sequence[Sequence[Fraction]], b: Sequence[Sequence[Fraction]]) -> Matrix:
    return [[sum((a[i][k] * b[k][j] for k in range(len(b))), Fraction(0)) for j in range(len(b[0]))] for i in range(len(a))]


def inverse_and_determinant(matrix: Sequence[Sequence[Fraction]]) -> tuple[Matrix, Fraction]:
    """Gauss-Jordan on [M | I], pivoting on the entry with the smallest coefficient size."""
    n = len(matrix)
    m = [[Fraction(x) for x in row] + identity_row for row, identity_row in zip(matrix, identity(n))]
    det = Fraction(1)
    for col in range(n):
        candidates = [r for r in range(col, n) if m[r][col] != 0]
        if not candidates:
            raise SingularMatrixError(f"matrix is singular (no pivot in column {col})", determinant=Fraction(0))
        piv = min(candidates, key=lambda r: (_size(m[r][col]), r))
        if piv != col:
            m[col], m[piv] = m[piv], m[col]
            det = -det
        p = m[col][col]
        det *= p
        m[col] = [x / p for x in m[col]]
        for r in range(n):
            if r == col or m[r][col] == 0:
                continue
            f = m[r][col]
            m[r] = [x - f * y for x, y in zip(m[r], m[col])]
    return [row[n:] for row in m], det


def inverse(matrix: Sequence[Sequence[Fraction]]) -> Matrix:
    return inverse_and_determinant(matrix)[0]


def determinant(matrix: Sequence[Sequence[Fraction]]) -> Fraction:
    """Zero for a singular matrix; never raises."""
    n = len(matrix)
    m = [[Fraction(x) for x in row] for row in matrix]
    det = Fraction(1)
    for col in range(n):
        candidates = [r for r in range(col, n) if m[r][col] != 0]
        if not candidates:
            return Fraction(0)
        piv = min(candidates, key=lambda r: (_size(m[r][col]), r))
        if piv != col:
            m[col], m[piv] = m[piv], m[col]
            det = -det
        p = m[col][col]
        det *= p
        for r in range(col + 1, n):
            if m[r][col] == 0:
                continue
            f = m[r][col] / p
            m[r] = [x - f * y for x, y in zip(m[r], m[col])]
    return det


class InconsistentSystem(Exception):
    def __init__(self, residual: Fraction):
        super().__init__(f"relation reduces to 0 = {residual}")
        self.residual = residual


class IncrementalSolver:
    """Sparse Gauss-Jordan over exact rationals for ``sum coeff[u] * u = rhs`` rows.

    Rows are reduced on arrival, so the pivot set is always in reduced form
    and redundant rows are detected (and checked for consistency) immediately.
    """

    def __init__(self, unknowns: Iterable[Hashable] = ()):
        self.order: dict[Hashable, int] = {}
        self.pivots: dict[Hashable, tuple[dict, Fraction]] = {}
        self.rows_seen = 0
        self.redundant = 0
        for u in unknowns:
            self.register(u)

    def register(self, unknown: Hashable) -> None:
        self.order.setdefault(unknown, len(self.order))

    @property
    def rank(self) -> int:
        return len(self.pivots)

    def add(self, row: dict, rhs: Fraction = Fraction(0)) -> bool:
        """Add a row; returns False when it was already implied by earlier rows."""
        self.rows_seen += 1
        row = {u: Fraction(c) for u, c in row.items() if c}
        rhs = Fraction(rhs)
        for u in list(row):
            self.register(u)
        for u in [u for u in row if u in self.pivots]:
            c = row.pop(u, Fraction(0))
            if not c:
                continue
            prow, prhs = self.pivots[u]
            for v, pc in prow.items():
                nv = row.get(v, Fraction(0)) - c * pc
                if nv:
                    row[v] = nv
                else:
                    row.pop(v, None)
            rhs -= c * prhs
        if not row:
            if rhs:
                raise InconsistentSystem(rhs)
            self.redundant += 1
            return False
        piv = min(row, key=lambda u: (_size(row[u]), self.order[u]))
        p = row.pop(piv)
        row = {v: c / p for v, c in row.items()}
        rhs = rhs / p
        for u, (prow, prhs) in self.pivots.items():
            c = prow.pop(piv, None)
            if not c:
                continue
            for v, rc in row.items():
                nv = prow.get(v, Fraction(0)) - c * rc
                if nv:
                    prow[v] = nv
                else:
                    prow.pop(v, None)
            self.pivots[u] = (prow, prhs - c * rhs)
        self.pivots[piv] = (row, rhs)
        return True

    def undetermined(self) -> list[Hashable]:
        """Unknowns not pinned to a value by the rows so far."""
        free = [u for u in self.order if u not in self.pivots]
        stuck = [u for u, (prow, _) in self.pivots.items() if prow]
        return sorted(free + stuck, key=self.order.get)

    def solution(self) -> dict[Hashable, Fraction]:
        open_ = self.undetermined()
        if open_:
            raise SingularMatrixError(
                f"system leaves {len(open_)} unknowns undetermined",
                undetermined=[str(u) for u in open_[:10]],
            )
        return {u: self.pivots[u][1] for u in sorted(self.pivots, key=self.order.get)}
