"""Universal Schottky generators over the ring of truncated series in the q_e."""

import logging
import random
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Sequence

import networkx as nx

from .errors import SchottkyError
from .graphs import OrientedEdge, Rigidification, StableGraph, validate
from .series import ProjectiveMatrix, TruncatedSeries

logger = logging.getLogger(__name__)

INFINITY = None  # alpha value of a branch in E_inf


@dataclass(frozen=True)
class SchottkyData:
    """A tail-free oriented graph with an alpha table; ``None`` marks E_inf."""

    graph: StableGraph
    alpha: dict[OrientedEdge, Fraction | None] = field(hash=False)
    cutoff: int = 4

    def __post_init__(self):
        graph = self.graph
        report = validate(graph)
        if not report.ok and report.invariant != "stability":
            raise SchottkyError(report.message, invariant=report.invariant)
        if graph.tails:
            raise SchottkyError("Schottky data needs a graph without tails; apply extend_without_tails first")
        if self.cutoff < 1:
            raise SchottkyError(f"cutoff must be >= 1, got {self.cutoff}")
        expected = set(graph.oriented_edges())
        if set(self.alpha) != expected:
            missing = sorted(h.label for h in expected - set(self.alpha))
            raise SchottkyError("alpha table must cover every oriented edge", missing=missing)
        alpha = {h: (None if a is None else Fraction(a)) for h, a in self.alpha.items()}
        object.__setattr__(self, "alpha", alpha)

        infinite = [h for h, a in alpha.items() if a is None]
        for h in infinite:
            if -h in infinite:
                raise SchottkyError(f"both {h.label} and {(-h).label} carry infinity", branch=h.label)
        seen: dict[str, OrientedEdge] = {}
        for h in sorted(infinite):
            v = graph.terminal(h)
            if v in seen:
                raise SchottkyError(
                    f"branches {seen[v].label} and {h.label} both carry infinity at vertex {v!r}", vertex=v
                )
            seen[v] = h
        for e in range(len(graph.edges)):
            a, b = alpha[OrientedEdge(e, 1)], alpha[OrientedEdge(e, -1)]
            if a is not None and a == b:
                raise SchottkyError(f"alpha[{e}+] == alpha[{e}-] == {a}", edge=e)
        for v in graph.vertices:
            values = [alpha[h] for h in graph.branches(v) if alpha[h] is not None]
            if len(values) != len(set(values)):
                raise SchottkyError(f"repeated alpha value among the branches at {v!r}", vertex=v)

    @property
    def variables(self) -> tuple[str, ...]:
        return tuple(f"q{e}" for e in range(len(self.graph.edges)))

    def q(self, h: OrientedEdge) -> TruncatedSeries:
        return TruncatedSeries.variable(self.variables, self.cutoff, f"q{h.edge}")

    def const(self, value) -> TruncatedSeries:
        return TruncatedSeries.constant(self.variables, self.cutoff, value)


def _check_branch(data: SchottkyData, h: OrientedEdge) -> None:
    if h.edge < 0 or h.edge >= len(data.graph.edges):
        raise SchottkyError(f"no oriented edge {h.label}", branch=h.label)


def phi(data: SchottkyData, h: OrientedEdge) -> ProjectiveMatrix:
    """Representative of phi_h with the scalar 1/(alpha_h - alpha_-h) dropped."""
    _check_branch(data, h)
    q, one = data.q(h), data.const(1)
    ah, amh = data.alpha[h], data.alpha[-h]
    if ah is None and amh is None:
        raise SchottkyError(f"{h.label} and its negation both carry infinity", branch=h.label)
    if ah is None:
        return ProjectiveMatrix(one, -(one - q) * amh, data.const(0), q)
    if amh is None:
        return ProjectiveMatrix(q, (one - q) * ah, data.const(0), one)
    return ProjectiveMatrix(
        one * ah - q * amh,
        -(one - q) * (ah * amh),
        one - q,
        q * ah - amh,
    )


def verify_cross_ratio(data: SchottkyData, h: OrientedEdge, z: Fraction) -> bool:
    """Denominator-cleared form of (phi(z) - a_h)/(z - a_h) = q (phi(z) - a_-h)/(z - a_-h)."""
    z = Fraction(z)
    ah, amh = data.alpha[h], data.alpha[-h]
    if z in (ah, amh):
        raise SchottkyError(f"z = {z} is a fixed point of phi[{h.label}]", z=z)
    m = phi(data, h)
    q = data.q(h)
    num = m.a * z + m.b
    den = m.c * z + m.d
    if ah is None:
        return den * (z - amh) == q * (num - den * amh)
    if amh is None:
        return num - den * ah == q * den * (z - ah)
    return (num - den * ah) * (z - amh) == q * (num - den * amh) * (z - ah)


def path_matrix(data: SchottkyData, path: Sequence[OrientedEdge]) -> ProjectiveMatrix:
    """phi_{h(l)} ... phi_{h(1)} for a reduced composable path h(1), ..., h(l)."""
    graph = data.graph
    for prev, nxt in zip(path, path[1:]):
        if nxt == -prev:
            raise SchottkyError(f"path is not reduced at {prev.label} -> {nxt.label}")
        if graph.terminal(prev) != graph.terminal(-nxt):
            raise SchottkyError(f"path is not composable at {prev.label} -> {nxt.label}")
    result = ProjectiveMatrix.identity(data.variables, data.cutoff)
    for h in path:
        result = phi(data, h) @ result
    return result


def inverse_via_negation(data: SchottkyData, h: OrientedEdge) -> ProjectiveMatrix:
    return phi(data, -h)


@dataclass(frozen=True)
class FixedPoints:
    attracting: Fraction
    repelling: Fraction
    multiplier: TruncatedSeries


def fixed_point_multiplier(data: SchottkyData, h: OrientedEdge) -> FixedPoints:
    """Confirm (alpha_h, 1) and (alpha_-h, 1) are eigenvectors with eigenvalue ratio q_h."""
    ah, amh = data.alpha[h], data.alpha[-h]
    if ah is None or amh is None or ah == amh:
        raise SchottkyError(f"fixed points of {h.label} need two distinct finite alphas", branch=h.label)
    m = phi(data, h)
    eigen = {}
    for point in (ah, amh):
        x, y = m.apply(point)
        if x != y * point:
            raise SchottkyError(f"({point}, 1) is not an eigenvector of phi[{h.label}]")
        eigen[point] = y
    q = data.q(h)
    if eigen[amh] != q * eigen[ah]:
        raise SchottkyError(f"eigenvalue ratio of phi[{h.label}] is not q{h.edge}")
    return FixedPoints(ah, amh, q)


def spanning_tree(graph: StableGraph, base: str) -> list[int]:
    """Edge ids of the breadth-first tree from ``base`` (lowest edge id first)."""
    reached = {base}
    tree = []
    queue = deque([base])
    while queue:
        x = queue.popleft()
        for e, (u, v) in enumerate(graph.edges):
            if x not in (u, v):
                continue
            other = v if u == x else u
            if other not in reached:
                reached.add(other)
                tree.append(e)
                queue.append(other)
    return tree


def _tree_paths(graph: StableGraph, base: str, tree: Sequence[int]) -> dict[str, list[OrientedEdge]]:
    paths = {base: []}
    queue = deque([base])
    while queue:
        x = queue.popleft()
        for e in tree:
            u, v = graph.edges[e]
            if u == x and v not in paths:
                paths[v] = paths[x] + [OrientedEdge(e, 1)]
                queue.append(v)
            elif v == x and u not in paths:
                paths[u] = paths[x] + [OrientedEdge(e, -1)]
                queue.append(u)
    return paths


def generator_loops(graph: StableGraph, base: str | None = None, tree: Sequence[int] | None = None) -> list[list[OrientedEdge]]:
    base = graph.vertices[0] if base is None else base
    if base not in graph.vertices:
        raise SchottkyError(f"unknown base vertex {base!r}")
    tree = spanning_tree(graph, base) if tree is None else list(tree)
    T = nx.MultiGraph()
    T.add_nodes_from(graph.vertices)
    T.add_edges_from(graph.edges[e] for e in tree)
    if not nx.is_tree(T):
        raise SchottkyError("supplied edges do not form a spanning tree", tree=list(tree))
    paths = _tree_paths(graph, base, tree)
    loops = []
    for e in range(len(graph.edges)):
        if e in tree:
            continue
        u, v = graph.edges[e]
        back = [-h for h in reversed(paths[v])]
        loops.append(paths[u] + [OrientedEdge(e, 1)] + back)
    return loops


def schottky_generators(
    data: SchottkyData, base: str | None = None, tree: Sequence[int] | None = None
) -> list[ProjectiveMatrix]:
    """One generator per non-tree edge: tree path out, the edge, tree path home."""
    loops = generator_loops(data.graph, base, tree)
    logger.debug("schottky_generators: %d loops", len(loops))
    return [path_matrix(data, loop) for loop in loops]


def schottky_data_from_rigidification(
    graph: StableGraph,
    rigid: Rigidification,
    free_alpha: Mapping[OrientedEdge, Fraction] | None = None,
    cutoff: int = 4,
) -> SchottkyData:
    """alpha = 0, 1, inf on tau_v(0), tau_v(1), tau_v(inf); other branches from ``free_alpha``
    or fresh integers 2, 3, ... in branch order."""
    free_alpha = dict(free_alpha or {})
    alpha: dict[OrientedEdge, Fraction | None] = {}
    for v, (zero, one, inf) in rigid.tau.items():
        for branch, value in ((zero, Fraction(0)), (one, Fraction(1)), (inf, None)):
            if isinstance(branch, OrientedEdge):
                alpha[branch] = value
    fresh = 2
    for h in graph.oriented_edges():
        if h in alpha:
            continue
        if h in free_alpha:
            alpha[h] = Fraction(free_alpha[h])
        else:
            alpha[h] = Fraction(fresh)
            fresh += 1
    return SchottkyData(graph, alpha, cutoff)


def random_alpha(graph: StableGraph, rng: random.Random, span: int = 5, infinity_rate: float = 0.25) -> dict:
    """An admissible alpha table with integer values in [-span, span]."""
    for _ in range(200):
        alpha: dict[OrientedEdge, Fraction | None] = {}
        for v in graph.vertices:
            branches = [h for h in graph.branches(v) if isinstance(h, OrientedEdge)]
            values = rng.sample(range(-span, span + 1), len(branches))
            alpha.update((h, Fraction(x)) for h, x in zip(branches, values))
        if any(alpha[OrientedEdge(e, 1)] == alpha[OrientedEdge(e, -1)] for e in range(len(graph.edges))):
            continue
        for v in graph.vertices:
            if rng.random() < infinity_rate:
                branches = [h for h in graph.branches(v) if isinstance(h, OrientedEdge)]
                h = rng.choice(branches)
                if alpha[-h] is not None:
                    alpha[h] = None
        return alpha
    raise SchottkyError("could not draw an admissible alpha table", span=span)


@dataclass
class SchottkyReport:
    cutoff: int
    samples: int = 0
    failures: list[dict] = field(default_factory=list)
    checks: dict[str, int] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return not self.failures

    def record(self, check: str, ok: bool, **detail) -> None:
        self.checks[check] = self.checks.get(check, 0) + 1
        if not ok:
            self.failures.append({"check": check, **{k: str(v) for k, v in detail.items()}})

    def to_dict(self) -> dict:
        return {
            "relation": "pass" if self.passed else "fail",
            "samples": self.samples,
            "cutoff": self.cutoff,
            "checks": dict(sorted(self.checks.items())),
            "failures": self.failures,
        }


def verify(data: SchottkyData, samples: int, rng: random.Random, report: SchottkyReport | None = None) -> SchottkyReport:
    """Run every defining identity of the phi_h for one alpha table."""
    report = report or SchottkyReport(cutoff=data.cutoff)
    for h in data.graph.oriented_edges():
        ah, amh = data.alpha[h], data.alpha[-h]
        m = phi(data, h)
        if ah is not None and amh is not None:
            expected = data.q(h) * ((ah - amh) ** 2)
            report.record("determinant", m.determinant() == expected, branch=h.label)
            try:
                fixed_point_multiplier(data, h)
                report.record("fixed_points", True)
            except SchottkyError as exc:
                report.record("fixed_points", False, branch=h.label, error=exc.message)
        product = inverse_via_negation(data, h) @ m
        identity = ProjectiveMatrix.identity(data.variables, data.cutoff)
        report.record("inverse", product.projectively_equal(identity), branch=h.label)
        for _ in range(samples):
            z = Fraction(rng.choice([2, 3, 7, -4, 11]), rng.choice([1, 2, 3]))
            if z in (ah, amh):
                continue
            report.record("cross_ratio", verify_cross_ratio(data, h, z), branch=h.label, z=z)
    report.samples += samples
    return report
