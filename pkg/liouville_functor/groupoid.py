"""Pants decompositions and the moves between them, at the level of graph classes."""

import logging
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Sequence, Union

import mpmath
import networkx as nx

from .errors import MoveError
from .graphs import (
    Branch,
    OrientedEdge,
    StableGraph,
    Tail,
    canonical_form,
    check_moduli_range,
    enumerate_trivalent,
    is_trivalent,
    validate,
)

logger = logging.getLogger(__name__)

SELECTORS = ("left", "right")


@dataclass(frozen=True)
class PantsDecomposition:
    graph: StableGraph

    def __post_init__(self):
        report = validate(self.graph)
        if not report.ok:
            raise MoveError(f"not a pants decomposition: {report.message}", invariant=report.invariant)
        if not is_trivalent(self.graph):
            raise MoveError("not a pants decomposition: graph is not trivalent")

    @property
    def edges(self) -> range:
        return range(len(self.graph.edges))


@dataclass(frozen=True)
class Fusing:
    edge: int
    selector: str = "left"

    def __post_init__(self):
        if self.selector not in SELECTORS:
            raise MoveError(f"fusing selector must be one of {SELECTORS}, got {self.selector!r}")


@dataclass(frozen=True)
class Simple:
    edge: int


@dataclass(frozen=True)
class HalfTwist:
    edge: int


Move = Union[Fusing, Simple, HalfTwist]
MoveWord = Sequence[Move]
BetaAssignment = Mapping[int, Fraction]


def _check_edge(decomp: PantsDecomposition, e: int) -> tuple[str, str]:
    if not 0 <= e < len(decomp.graph.edges):
        raise MoveError(f"no edge {e} in this decomposition", edge=e)
    return decomp.graph.edges[e]


def _reattach(graph: StableGraph, moves: Mapping[Branch, str]) -> StableGraph:
    """Move each branch's terminal end to a new vertex."""
    edges = [list(pair) for pair in graph.edges]
    tails = list(graph.tails)
    for branch, target in moves.items():
        if isinstance(branch, Tail):
            tails[tails.index(branch)] = Tail(target, branch.number)
        elif branch.sign > 0:
            edges[branch.edge][1] = target
        else:
            edges[branch.edge][0] = target
    return StableGraph(graph.vertices, [tuple(pair) for pair in edges], tails)


def apply_fusing(decomp: PantsDecomposition, e: int, selector: str = "left") -> PantsDecomposition:
    """Re-pair the outer branches {a, b} | {c, d} around ``e``.

    ``left`` gives {a, c} | {b, d} and ``right`` gives {a, d} | {b, c}, with
    a, b ordered at the first endpoint and c, d at the second.
    """
    if selector not in SELECTORS:
        raise MoveError(f"fusing selector must be one of {SELECTORS}, got {selector!r}")
    u, v = _check_edge(decomp, e)
    if u == v:
        raise MoveError(f"edge {e} is a loop; fusing needs two distinct endpoints", edge=e)
    graph = decomp.graph
    a, b = [h for h in graph.branches(u) if h != OrientedEdge(e, -1)]
    c, d = [h for h in graph.branches(v) if h != OrientedEdge(e, 1)]
    moves = {b: v, c: u} if selector == "left" else {b: v, d: u}
    fused = _reattach(graph, moves)
    report = validate(fused)
    if not report.ok:
        raise MoveError(f"fusing edge {e} breaks the graph: {report.message}", edge=e)
    return PantsDecomposition(fused)


def apply_simple(decomp: PantsDecomposition, e: int) -> PantsDecomposition:
    """S-move on a loop; the graph class of a one-holed torus is unchanged."""
    u, v = _check_edge(decomp, e)
    if u != v:
        raise MoveError(f"edge {e} is not a loop; the simple move acts on loops only", edge=e)
    return decomp


def apply_half_twist(decomp: PantsDecomposition, e: int) -> PantsDecomposition:
    _check_edge(decomp, e)
    return decomp


def apply_move(decomp: PantsDecomposition, move: Move) -> PantsDecomposition:
    if isinstance(move, Fusing):
        return apply_fusing(decomp, move.edge, move.selector)
    if isinstance(move, Simple):
        return apply_simple(decomp, move.edge)
    if isinstance(move, HalfTwist):
        return apply_half_twist(decomp, move.edge)
    raise MoveError(f"unknown move {move!r}")


def apply_word(decomp: PantsDecomposition, word: MoveWord) -> list[PantsDecomposition]:
    """Every stage of the word, starting with ``decomp`` itself."""
    stages = [decomp]
    for i, move in enumerate(word):
        try:
            stages.append(apply_move(stages[-1], move))
        except MoveError as exc:
            raise MoveError(f"letter {i} ({move}) does not apply: {exc.message}", letter=i) from None
    return stages


@dataclass(frozen=True)
class MoveGraph:
    nodes: tuple[StableGraph, ...]
    edges: tuple[tuple[int, int], ...]
    connected: bool

    def to_dict(self) -> dict:
        return {
            "nodes": [g.to_dict() for g in self.nodes],
            "edges": [list(pair) for pair in self.edges],
            "connected": self.connected,
        }


def move_graph(g: int, n: int) -> MoveGraph:
    """Classes of trivalent (g, n) graphs joined by single fusing moves."""
    check_moduli_range(g, n)
    nodes = enumerate_trivalent(g, n)
    index = {canonical_form(graph): i for i, graph in enumerate(nodes)}
    G = nx.Graph()
    G.add_nodes_from(range(len(nodes)))
    for i, graph in enumerate(nodes):
        decomp = PantsDecomposition(graph)
        for e, (u, v) in enumerate(graph.edges):
            if u == v:
                continue
            for selector in SELECTORS:
                j = index[canonical_form(apply_fusing(decomp, e, selector).graph)]
                if i != j:
                    G.add_edge(min(i, j), max(i, j))
    connected = nx.is_connected(G)
    logger.info("move graph (%d, %d): %d classes, %d transitions", g, n, G.number_of_nodes(), G.number_of_edges())
    return MoveGraph(tuple(nodes), tuple(sorted(G.edges())), connected)


def word_turns(word: MoveWord, beta: BetaAssignment) -> Fraction:
    """Exact winding of the phase: sum of delta_beta(e) / 2 over half twists."""
    turns = Fraction(0)
    for i, move in enumerate(word):
        if not isinstance(move, HalfTwist):
            continue
        if move.edge not in beta:
            raise MoveError(f"no weight assigned to edge {move.edge} (letter {i})", edge=move.edge)
        turns += Fraction(beta[move.edge]) / 2
    return turns


def word_phase(word: MoveWord, beta: BetaAssignment, precision: int = 50) -> mpmath.mpc:
    with mpmath.workdps(precision + 5):
        turns = word_turns(word, beta)
        return +mpmath.expjpi(2 * mpmath.mpf(turns.numerator) / turns.denominator)
