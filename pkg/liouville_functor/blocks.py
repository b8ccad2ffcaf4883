"""Three-point conformal blocks, their gluing into q-series, and monodromy phases.

Punctures sit at 0, 1 and infinity with local coordinates z, z - 1 and 1/z.
A three-point block is fixed by the invariance relations

    sum_i F(..., rho_i(f) v_i, ...) = 0,   f = z^a (z - 1)^m d/dz,

where rho_i(f) is the Laurent expansion of f in the i-th coordinate with
u^{k+1} d/du acting as L_k. Values are stored as ratios to F(e, e, e).
A pants decomposition is glued by sewing one such block per vertex.
"""

import asyncio
import itertools
import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator, Mapping, Sequence

import mpmath

from .errors import BlockError, SingularGramError, ThreePointSolveError
from .graphs import Branch, OrientedEdge, StableGraph, Tail
from .groupoid import PantsDecomposition
from .linalg import IncrementalSolver, InconsistentSystem
from .models import BlockSeries, PantsBlock
from .series import TruncatedSeries
from .virasoro import (
    LiouvilleParams,
    Partition,
    VermaVector,
    module_for,
    partitions,
)

logger = logging.getLogger(__name__)

Triple = tuple[Partition, Partition, Partition]
FAMILIES = ("window", "triangular")
EMPTY: Triple = ((), (), ())


def _binom(x: int, j: int) -> Fraction:
    """Generalized binomial coefficient; x may be negative."""
    out = Fraction(1)
    for i in range(j):
        out = out * (x - i) / (i + 1)
    return out


def _raises(a: int, m: int) -> tuple[int, int, int]:
    """How far f = z^a (z-1)^m d/dz can raise the level at each puncture."""
    return (max(0, 1 - a), max(0, 1 - m), max(0, a + m - 1))


def _leg_terms(leg: int, a: int, m: int, top: int) -> Iterator[tuple[int, Fraction]]:
    """(k, coefficient of L_k) in the expansion at ``leg``, for k <= top."""
    if leg == 0:
        first, coeff = a - 1, lambda j: (-1 if (m + j) % 2 else 1) * _binom(m, j)
    elif leg == 1:
        first, coeff = m - 1, lambda j: _binom(a, j)
    else:
        first, coeff = 1 - a - m, lambda j: (1 if j % 2 else -1) * _binom(m, j)
    j = 0
    while first + j <= top:
        c = coeff(j)
        if c:
            yield first + j, c
        j += 1


def relation_fields(level: int, family: str = "window") -> list[tuple[int, int]]:
    """Exponents (a, m) of the vector fields used at total level ``level``."""
    if family == "window":
        return [
            (a, m)
            for a in range(1 - level, 2 * level + 2)
            for m in range(1 - level, level + 2)
            if a + m <= level + 1
        ]
    if family == "triangular":
        fields = []
        for n in range(1, level + 1):
            fields.extend([(1 - n, 1), (1, 1 - n), (n, 1)])
        return fields
    raise BlockError(f"unknown relation family {family!r}", families=list(FAMILIES))


def _triples(level: int, support: Sequence[int]) -> list[Triple]:
    """Descendant triples of exactly ``level``, descendants only on ``support`` legs."""
    found = []
    legs = sorted(support)
    for split in itertools.product(range(level + 1), repeat=len(legs)):
        if sum(split) != level:
            continue
        levels = [0, 0, 0]
        for leg, n in zip(legs, split):
            levels[leg] = n
        for combo in itertools.product(*(partitions(n) for n in levels)):
            found.append(tuple(combo))
    return found


@dataclass
class ThreePointBlock:
    params: LiouvilleParams
    weights: tuple[Fraction, Fraction, Fraction]
    level: int
    normalization: Fraction = Fraction(1)
    support: tuple[int, ...] = (0, 1, 2)
    family: str = "window"
    ratios: dict[Triple, Fraction] = field(default_factory=dict, repr=False)

    def value(self, triple: Triple) -> Fraction:
        triple = tuple(tuple(p) for p in triple)
        if triple not in self.ratios:
            raise BlockError(
                f"value on {triple} is outside the solved range (level {self.level}, legs {self.support})",
                triple=[list(p) for p in triple],
            )
        return self.normalization * self.ratios[triple]

    def pairing(self, v0: VermaVector, v1: VermaVector, v2: VermaVector) -> Fraction:
        """Multilinear extension of ``value`` to arbitrary vectors."""
        total = Fraction(0)
        for (l0, c0), (l1, c1), (l2, c2) in itertools.product(v0.terms.items(), v1.terms.items(), v2.terms.items()):
            total += c0 * c1 * c2 * self.value((l0, l1, l2))
        return total

    def with_normalization(self, normalization: Fraction) -> "ThreePointBlock":
        return ThreePointBlock(
            self.params, self.weights, self.level, Fraction(normalization), self.support, self.family, self.ratios
        )

    def residuals(self) -> list[dict]:
        """Every window relation re-substituted; nonzero entries are reported."""
        bad = []
        for (a, m), v, row in _relations(self.params, self.weights, self.level, self.support, "window"):
            residual = sum((c * self.ratios[t] for t, c in row.items()), Fraction(0))
            if residual:
                bad.append({"field": [a, m], "triple": [list(p) for p in v], "residual": str(residual)})
        return bad


def _relations(
    params: LiouvilleParams,
    weights: Sequence[Fraction],
    level: int,
    support: Sequence[int],
    family: str,
    exact_top: int | None = None,
) -> Iterator[tuple[tuple[int, int], Triple, dict[Triple, Fraction]]]:
    """Yield (field, triple, {output triple: coefficient}) for relations within ``level``.

    With ``exact_top`` only relations whose highest output level equals it are produced.
    """
    modules = [module_for(params, w) for w in weights]
    for a, m in relation_fields(level, family):
        raise_ = _raises(a, m)
        if any(raise_[leg] for leg in range(3) if leg not in support):
            continue
        top_raise = max(raise_)
        for base in range(0, level - top_raise + 1):
            if exact_top is not None and base + top_raise != exact_top:
                continue
            for v in _triples(base, support):
                row: dict[Triple, Fraction] = {}
                for leg in range(3):
                    for k, coeff in _leg_terms(leg, a, m, sum(v[leg])):
                        for mu, c in modules[leg].apply_basis(k, v[leg]).items():
                            out = v[:leg] + (mu,) + v[leg + 1:]
                            row[out] = row.get(out, Fraction(0)) + coeff * c
                row = {t: c for t, c in row.items() if c}
                if row:
                    yield (a, m), v, row


def solve_three_point(
    params: LiouvilleParams,
    weights: Sequence[Fraction],
    level: int,
    normalization: Fraction = Fraction(1),
    support: Sequence[int] = (0, 1, 2),
    family: str = "window",
) -> ThreePointBlock:
    """Solve the invariance relations level by level up to total ``level``."""
    if level < 0:
        raise BlockError(f"level must be >= 0, got {level}")
    support = tuple(sorted(set(support)))
    if not support or any(leg not in (0, 1, 2) for leg in support):
        raise BlockError(f"support must be a non-empty subset of (0, 1, 2), got {support}")
    weights = tuple(Fraction(w) for w in weights)
    if len(weights) != 3:
        raise BlockError(f"three weights are required, got {len(weights)}")
    ratios: dict[Triple, Fraction] = {EMPTY: Fraction(1)}
    for top in range(1, level + 1):
        unknowns = _triples(top, support)
        solver = IncrementalSolver(unknowns)
        for (a, m), v, row in _relations(params, weights, level, support, family, exact_top=top):
            coefficients: dict[Triple, Fraction] = {}
            rhs = Fraction(0)
            for t, c in row.items():
                if sum(map(sum, t)) == top:
                    coefficients[t] = c
                else:
                    rhs -= c * ratios[t]
            try:
                solver.add(coefficients, rhs)
            except InconsistentSystem as exc:
                raise ThreePointSolveError(
                    f"relations at level {top} are inconsistent (field {(a, m)}, triple {v})",
                    level=top,
                    residual=exc.residual,
                ) from None
        open_ = solver.undetermined()
        if open_:
            raise ThreePointSolveError(
                f"{len(open_)} values at level {top} are not fixed by the relations",
                level=top,
                undetermined=[str(t) for t in open_[:10]],
            )
        ratios.update(solver.solution())
        logger.debug(
            "three-point level %d: %d unknowns, %d rows (%d redundant)",
            top, len(unknowns), solver.rows_seen, solver.redundant,
        )
    logger.info("solved three-point block %s to level %d on legs %s", weights, level, support)
    return ThreePointBlock(params, weights, level, Fraction(normalization), support, family, ratios)


# -- gluing ------------------------------------------------------------------------

def _gram_inverse(params: LiouvilleParams, delta: Fraction, n: int) -> list[list[Fraction]]:
    module = module_for(params, delta)
    try:
        return module.gram_inverse(n)
    except SingularGramError:
        raise SingularGramError(n, module.gram_determinant(n)) from None


def glue_four_point(
    params: LiouvilleParams,
    left: ThreePointBlock,
    right: ThreePointBlock,
    delta_beta: Fraction,
    order: int,
) -> BlockSeries:
    """Contract ``left`` (glued at its puncture at infinity) with ``right`` (glued at 0).

    c_n = sum_{lam, mu |- n} F1(e, e, L_{-lam}) G_n^{-1}[lam, mu] F2(L_{-mu}, e, e)
    """
    delta_beta = Fraction(delta_beta)
    if left.weights[2] != delta_beta or right.weights[0] != delta_beta:
        raise BlockError(
            "glued legs must carry delta_beta",
            delta_beta=delta_beta,
            left=left.weights[2],
            right=right.weights[0],
        )
    if order < 0:
        raise BlockError(f"order must be >= 0, got {order}")
    coefficients = []
    for n in range(order + 1):
        basis = partitions(n)
        inv = _gram_inverse(params, delta_beta, n)
        out = [left.value(((), (), lam)) for lam in basis]
        into = [right.value((mu, (), ())) for mu in basis]
        coefficients.append(
            sum((out[i] * inv[i][j] * into[j] for i in range(len(basis)) for j in range(len(basis))), Fraction(0))
        )
    return BlockSeries(delta_beta, tuple(coefficients))


def four_point_block(
    params: LiouvilleParams,
    externals: Sequence[Fraction],
    delta_beta: Fraction,
    order: int,
    normalizations: tuple[Fraction, Fraction] = (Fraction(1), Fraction(1)),
    family: str = "window",
) -> BlockSeries:
    """
    Four-point sphere block in the channel {12|34}.

    Args:
        params: Liouville parameters
        externals: Weights (d1, d2, d3, d4) at the four punctures
        delta_beta: Weight carried by the internal edge
        order: Highest power of q kept
        normalizations: F(e, e, e) of the left and right three-point blocks
        family: Relation family used by both three-point solves

    Returns:
        BlockSeries with constant term normalizations[0] * normalizations[1]
    """
    d1, d2, d3, d4 = (Fraction(d) for d in externals)
    delta_beta = Fraction(delta_beta)
    left = solve_three_point(params, (d1, d2, delta_beta), order, normalizations[0], support=(2,), family=family)
    right = solve_three_point(params, (delta_beta, d3, d4), order, normalizations[1], support=(0,), family=family)
    return glue_four_point(params, left, right, delta_beta, order)


async def glue_four_point_grid_async(
    params: LiouvilleParams,
    externals: Sequence[Fraction],
    betas: Sequence[Fraction],
    order: int,
    threads: int = 1,
    family: str = "window",
) -> list[BlockSeries]:
    limit = asyncio.Semaphore(max(1, threads))

    async def one(delta_beta: Fraction) -> BlockSeries:
        async with limit:
            return await asyncio.to_thread(four_point_block, params, externals, delta_beta, order, family=family)

    return list(await asyncio.gather(*(one(Fraction(b)) for b in betas)))


def glue_four_point_grid(
    params: LiouvilleParams,
    externals: Sequence[Fraction],
    betas: Sequence[Fraction],
    order: int,
    threads: int = 1,
    family: str = "window",
) -> list[BlockSeries]:
    """Unweighted grid of internal weights; results in input order."""
    return asyncio.run(glue_four_point_grid_async(params, externals, betas, order, threads, family))


def glue_torus_one_point(
    params: LiouvilleParams,
    block: ThreePointBlock | None,
    delta_beta: Fraction,
    order: int,
) -> BlockSeries:
    """Self-glue legs 0 and 2 of ``block``; ``None`` pairs with the Shapovalov form instead.

    c_n = sum_{lam, mu |- n} G_n^{-1}[lam, mu] F(L_{-mu}, e_ext, L_{-lam})
    """
    delta_beta = Fraction(delta_beta)
    if order < 0:
        raise BlockError(f"order must be >= 0, got {order}")
    if block is not None and (block.weights[0] != delta_beta or block.weights[2] != delta_beta):
        raise BlockError("both glued legs must carry delta_beta", delta_beta=delta_beta)
    module = module_for(params, delta_beta)
    coefficients = []
    for n in range(order + 1):
        basis = partitions(n)
        inv = _gram_inverse(params, delta_beta, n)
        if block is None:
            F = module.gram_matrix(n)
        else:
            F = [[block.value((mu, (), lam)) for lam in basis] for mu in basis]
        coefficients.append(
            sum((inv[i][j] * F[j][i] for i in range(len(basis)) for j in range(len(basis))), Fraction(0))
        )
    return BlockSeries(delta_beta, tuple(coefficients))


def torus_one_point_block(
    params: LiouvilleParams,
    delta_ext: Fraction,
    delta_beta: Fraction,
    order: int,
    normalization: Fraction = Fraction(1),
    diagnostic: bool = False,
    family: str = "window",
) -> BlockSeries:
    """
    One-point torus block from self-gluing the legs 0 and infinity.

    Args:
        params: Liouville parameters
        delta_ext: Weight of the external puncture
        delta_beta: Weight carried around the loop
        order: Highest power of q kept
        normalization: F(e, e_ext, e) of the three-point block
        diagnostic: Pair with the Shapovalov form instead, giving the character
        family: Relation family of the three-point solve

    Returns:
        BlockSeries q^delta_beta * sum c_n q^n
    """
    delta_beta = Fraction(delta_beta)
    if diagnostic:
        return glue_torus_one_point(params, None, delta_beta, order)
    block = solve_three_point(
        params, (delta_beta, Fraction(delta_ext), delta_beta), 2 * order, normalization, support=(0, 2), family=family
    )
    return glue_torus_one_point(params, block, delta_beta, order)


# -- pants decompositions --------------------------------------------------------------

def pants_legs(graph: StableGraph, vertex: str) -> tuple[Branch, Branch, Branch]:
    """Branches at ``vertex`` in leg order (0, 1, infinity).

    Incoming edge ends fill legs from 0 upward and outgoing ends from infinity
    downward; tails take the legs left over, by number.
    """
    branches = graph.branches(vertex)
    legs: list[Branch | None] = [None, None, None]
    incoming = [b for b in branches if isinstance(b, OrientedEdge) and b.sign > 0]
    outgoing = [b for b in branches if isinstance(b, OrientedEdge) and b.sign < 0]
    for leg, b in zip((0, 1, 2), incoming):
        legs[leg] = b
    for leg, b in zip((2, 1, 0), outgoing):
        legs[leg] = b
    free = [leg for leg in range(3) if legs[leg] is None]
    for leg, t in zip(free, [b for b in branches if isinstance(b, Tail)]):
        legs[leg] = t
    return tuple(legs)


def _level_vectors(n_edges: int, cutoff: int) -> list[tuple[int, ...]]:
    return [n for n in itertools.product(range(cutoff + 1), repeat=n_edges) if sum(n) <= cutoff]


def glue_pants(
    params: LiouvilleParams,
    decomp: PantsDecomposition,
    beta: Mapping[int, Fraction],
    externals: Mapping[int, Fraction],
    cutoff: int,
    normalizations: Mapping[str, Fraction] | None = None,
    family: str = "window",
) -> PantsBlock:
    """Sew one three-point block per vertex along every edge of ``decomp``.

    The coefficient of prod_e q_e^{n_e} is

        sum prod_v F_v(...) prod_e G_{n_e}^{-1}[lam_e, mu_e]

    with lam_e on the outgoing end of e and mu_e on the incoming end.

    Args:
        params: Liouville parameters shared by every Verma module.
        decomp: Trivalent graph; edge e carries the variable ``q<e>``.
        beta: Internal weight per edge index.
        externals: External weight per tail number.
        cutoff: Total degree kept in the q_e.
        normalizations: F_v(e, e, e) per vertex name, 1 where omitted.
        family: Relation family passed to ``solve_three_point``.

    Returns:
        PantsBlock whose constant term is the product of the normalizations.
    """
    graph = decomp.graph
    n_edges = len(graph.edges)
    if not n_edges:
        raise BlockError("a decomposition without edges has nothing to glue")
    if cutoff < 0:
        raise BlockError(f"cutoff must be >= 0, got {cutoff}")
    missing = [e for e in range(n_edges) if e not in beta]
    if missing:
        raise BlockError(f"no internal weight for edges {missing}", edges=missing)
    numbers = sorted(t.number for t in graph.tails)
    if sorted(externals) != numbers:
        raise BlockError("external weights must name exactly the tails", tails=numbers, given=sorted(externals))
    betas = tuple(Fraction(beta[e]) for e in range(n_edges))
    normalizations = normalizations or {}

    solved: dict[str, ThreePointBlock] = {}
    ends: dict[OrientedEdge, tuple[str, int]] = {}
    for v in graph.vertices:
        legs = pants_legs(graph, v)
        weights = tuple(Fraction(externals[b.number]) if isinstance(b, Tail) else betas[b.edge] for b in legs)
        support = tuple(leg for leg, b in enumerate(legs) if isinstance(b, OrientedEdge))
        loops = any(graph.is_loop(b.edge) for b in legs if isinstance(b, OrientedEdge))
        level = cutoff * (2 if loops else 1)
        solved[v] = solve_three_point(params, weights, level, normalizations.get(v, Fraction(1)), support, family)
        ends.update({b: (v, leg) for leg, b in enumerate(legs) if isinstance(b, OrientedEdge)})

    inverses: dict[tuple[int, int], list[tuple[int, int, Fraction]]] = {}
    for e in range(n_edges):
        for n in range(cutoff + 1):
            inv = _gram_inverse(params, betas[e], n)
            inverses[e, n] = [(i, j, x) for i, row in enumerate(inv) for j, x in enumerate(row) if x]

    terms: dict[tuple[int, ...], Fraction] = {}
    for levels in _level_vectors(n_edges, cutoff):
        bases = [partitions(n) for n in levels]
        total = Fraction(0)
        for choice in itertools.product(*(inverses[e, n] for e, n in enumerate(levels))):
            weight = Fraction(1)
            states = {v: [(), (), ()] for v in graph.vertices}
            for e, (i, j, x) in enumerate(choice):
                weight *= x
                v, leg = ends[OrientedEdge(e, -1)]
                states[v][leg] = bases[e][i]
                v, leg = ends[OrientedEdge(e, 1)]
                states[v][leg] = bases[e][j]
            for v, block in solved.items():
                if not weight:
                    break
                weight *= block.value(tuple(states[v]))
            total += weight
        if total:
            terms[levels] = total
    logger.info("glued %d vertices along %d edges to total degree %d", len(solved), n_edges, cutoff)
    series = TruncatedSeries.from_terms(tuple(f"q{e}" for e in range(n_edges)), cutoff, terms)
    return PantsBlock(betas, series)


# -- monodromy -------------------------------------------------------------------------

def _mpf(x: Fraction) -> mpmath.mpf:
    x = Fraction(x)
    return mpmath.mpf(x.numerator) / x.denominator


def twist_factor(delta: Fraction, z, winding: int = 0, precision: int = 50) -> mpmath.mpc:
    """exp(delta (log|z| + i (arg z + 2 pi k))) |z|^(-delta)."""
    with mpmath.workdps(precision + 5):
        z = mpmath.mpc(z)
        if z == 0:
            raise BlockError("twist factor is undefined at z = 0")
        d = _mpf(delta)
        log_z = mpmath.log(abs(z)) + 1j * (mpmath.arg(z) + 2 * mpmath.pi * winding)
        return +(mpmath.exp(d * log_z) * abs(z) ** (-d))


def dehn_twist_phase(delta: Fraction, precision: int = 50) -> mpmath.mpc:
    with mpmath.workdps(precision + 5):
        return +mpmath.expjpi(2 * _mpf(delta))


def half_dehn_twist(series: BlockSeries) -> BlockSeries:
    """q -> -q on the series part; the phase exp(pi i delta) is tracked by ``half_twists``."""
    return BlockSeries(
        series.delta_beta,
        tuple(c if n % 2 == 0 else -c for n, c in enumerate(series.coefficients)),
        series.half_twists + 1,
    )


def phase(series: BlockSeries, precision: int = 50) -> mpmath.mpc:
    with mpmath.workdps(precision + 5):
        return +mpmath.expjpi(_mpf(series.delta_beta) * series.half_twists)


def wave_function_eval(series: BlockSeries, q, winding: int = 0, precision: int = 50) -> mpmath.mpc:
    """phase * twist_factor(delta_beta, q, k) * sum_n c_n q^n."""
    with mpmath.workdps(precision + 5):
        q = mpmath.mpc(q)
        if q == 0:
            raise BlockError("wave function is evaluated at q != 0 only")
        value = (
            phase(series, precision)
            * twist_factor(series.delta_beta, q, winding, precision)
            * series.evaluate(q, precision)
        )
        return +value


def pants_half_dehn_twist(block: PantsBlock, edge: int) -> PantsBlock:
    """q_edge -> -q_edge on the series part; the phase is tracked by ``half_twists``."""
    if not 0 <= edge < len(block.betas):
        raise BlockError(f"no edge {edge} in this block", edge=edge)
    terms = {m: (-c if m[edge] % 2 else c) for m, c in block.series.terms().items()}
    twists = list(block.half_twists)
    twists[edge] += 1
    series = TruncatedSeries.from_terms(block.series.variables, block.series.cutoff, terms)
    return PantsBlock(block.betas, series, tuple(twists))


def pants_phase(block: PantsBlock, precision: int = 50) -> mpmath.mpc:
    turns = sum((b * t for b, t in zip(block.betas, block.half_twists)), Fraction(0))
    with mpmath.workdps(precision + 5):
        return +mpmath.expjpi(_mpf(turns))


def pants_wave_function_eval(
    block: PantsBlock,
    qs: Sequence,
    windings: Sequence[int] | None = None,
    precision: int = 50,
) -> mpmath.mpc:
    """phase * prod_e twist_factor(beta_e, q_e, k_e) * series(q_0, ..., q_{E-1})."""
    windings = list(windings) if windings is not None else [0] * len(block.betas)
    if len(qs) != len(block.betas) or len(windings) != len(block.betas):
        raise BlockError(
            f"expected {len(block.betas)} values of q and windings",
            q=len(qs),
            windings=len(windings),
        )
    with mpmath.workdps(precision + 5):
        qs = [mpmath.mpc(q) for q in qs]
        if any(q == 0 for q in qs):
            raise BlockError("wave function is evaluated at q_e != 0 only")
        value = pants_phase(block, precision) * block.evaluate(qs, precision)
        for b, q, k in zip(block.betas, qs, windings):
            value *= twist_factor(b, q, k, precision)
        return +value
