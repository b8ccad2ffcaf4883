"""Stable graphs: validation, invariants, enumeration, rigidification and the
dual degenerate curve.

A graph is ``(V, E, T)``: named vertices, edges stored once with a positive
direction (loops repeat the vertex) and numbered tails. Oriented edges are
``(edge index, sign)``; the terminal vertex of ``(e, +1)`` is the second
endpoint of ``e``.
"""

import itertools
import logging
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Sequence, Union

import networkx as nx

from .config import MAX_MODULI_DIMENSION
from .errors import GraphError

logger = logging.getLogger(__name__)

MARKS = ("0", "1", "inf")


@dataclass(frozen=True, order=True)
class Tail:
    vertex: str
    number: int

    @property
    def label(self) -> str:
        return f"t{self.number}"


@dataclass(frozen=True, order=True)
class OrientedEdge:
    edge: int
    sign: int = 1

    def __post_init__(self):
        if self.sign not in (1, -1):
            raise GraphError(f"oriented edge sign must be +1 or -1, got {self.sign}")

    def __neg__(self) -> "OrientedEdge":
        return OrientedEdge(self.edge, -self.sign)

    @property
    def label(self) -> str:
        return f"{self.edge}{'+' if self.sign > 0 else '-'}"

    @classmethod
    def parse(cls, label: str) -> "OrientedEdge":
        label = label.strip()
        if len(label) < 2 or label[-1] not in "+-" or not label[:-1].isdigit():
            raise GraphError(f"bad oriented edge label {label!r}; expected e.g. '0+' or '3-'")
        return cls(int(label[:-1]), 1 if label[-1] == "+" else -1)


Branch = Union[OrientedEdge, Tail]


def branch_key(branch: Branch) -> tuple:
    """Fixed branch ordering: oriented edges by (edge, + before -), then tails by number."""
    if isinstance(branch, OrientedEdge):
        return (0, branch.edge, 0 if branch.sign > 0 else 1)
    return (1, branch.number, 0)


@dataclass(frozen=True)
class StableGraph:
    vertices: tuple[str, ...]
    edges: tuple[tuple[str, str], ...] = ()
    tails: tuple[Tail, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "vertices", tuple(self.vertices))
        object.__setattr__(self, "edges", tuple((u, v) for u, v in self.edges))
        object.__setattr__(
            self,
            "tails",
            tuple(t if isinstance(t, Tail) else Tail(*t) for t in self.tails),
        )

    @property
    def n_tails(self) -> int:
        return len(self.tails)

    def oriented_edges(self) -> list[OrientedEdge]:
        return [OrientedEdge(e, s) for e in range(len(self.edges)) for s in (1, -1)]

    def terminal(self, h: OrientedEdge) -> str:
        """The vertex ``v_h``."""
        u, v = self.edges[h.edge]
        return v if h.sign > 0 else u

    def is_loop(self, edge: int) -> bool:
        u, v = self.edges[edge]
        return u == v

    def degree(self, vertex: str) -> int:
        d = sum((u == vertex) + (v == vertex) for u, v in self.edges)
        return d + sum(1 for t in self.tails if t.vertex == vertex)

    def branches(self, vertex: str) -> list[Branch]:
        found: list[Branch] = [h for h in self.oriented_edges() if self.terminal(h) == vertex]
        found.extend(t for t in self.tails if t.vertex == vertex)
        return sorted(found, key=branch_key)

    def tail(self, number: int) -> Tail:
        for t in self.tails:
            if t.number == number:
                return t
        raise GraphError(f"no tail numbered {number}", tail=number)

    def to_dict(self) -> dict:
        return {
            "vertices": list(self.vertices),
            "edges": [[u, v] for u, v in self.edges],
            "tails": [{"vertex": t.vertex, "number": t.number} for t in sorted(self.tails, key=lambda t: t.number)],
        }


@dataclass(frozen=True)
class ValidationReport:
    ok: bool
    invariant: str | None = None
    subject: str | None = None
    message: str | None = None

    def to_dict(self) -> dict:
        return {"ok": self.ok, "invariant": self.invariant, "subject": self.subject, "message": self.message}


def validate(graph: StableGraph) -> ValidationReport:
    """Check structure, connectivity, stability and numbering, in that order."""
    if not graph.vertices:
        return ValidationReport(False, "structure", None, "graph has no vertices")
    known = set(graph.vertices)
    if len(known) != len(graph.vertices):
        dup = next(v for v in graph.vertices if graph.vertices.count(v) > 1)
        return ValidationReport(False, "structure", dup, f"vertex {dup!r} listed twice")
    for i, (u, v) in enumerate(graph.edges):
        for end in (u, v):
            if end not in known:
                return ValidationReport(False, "structure", f"edge {i}", f"edge {i} uses unknown vertex {end!r}")
    for t in graph.tails:
        if t.vertex not in known:
            return ValidationReport(False, "structure", t.label, f"tail {t.number} sits on unknown vertex {t.vertex!r}")

    G = nx.MultiGraph()
    G.add_nodes_from(graph.vertices)
    G.add_edges_from(graph.edges)
    if not nx.is_connected(G):
        reached = nx.node_connected_component(G, graph.vertices[0])
        stray = next(v for v in graph.vertices if v not in reached)
        return ValidationReport(False, "connectivity", stray, f"vertex {stray!r} is not connected to {graph.vertices[0]!r}")

    for v in graph.vertices:
        d = graph.degree(v)
        if d < 3:
            return ValidationReport(False, "stability", v, f"vertex {v!r}: degree {d} < 3")

    numbers = sorted(t.number for t in graph.tails)
    expected = list(range(1, len(numbers) + 1))
    if numbers != expected:
        bad = next((n for n, e in zip(numbers, expected) if n != e), numbers[-1] if numbers else None)
        return ValidationReport(
            False, "numbering", f"t{bad}", f"tail numbers {numbers} are not a bijection onto 1..{len(numbers)}"
        )
    return ValidationReport(True)


def require_valid(graph: StableGraph) -> None:
    report = validate(graph)
    if not report.ok:
        raise GraphError(report.message, invariant=report.invariant, subject=report.subject)


def genus(graph: StableGraph) -> int:
    require_valid(graph)
    return len(graph.edges) - len(graph.vertices) + 1


def is_trivalent(graph: StableGraph) -> bool:
    require_valid(graph)
    return all(graph.degree(v) == 3 for v in graph.vertices)


def reoriented(graph: StableGraph, flips: Sequence[bool]) -> StableGraph:
    if len(flips) != len(graph.edges):
        raise GraphError(f"orientation needs {len(graph.edges)} flags, got {len(flips)}")
    edges = [(v, u) if flip else (u, v) for (u, v), flip in zip(graph.edges, flips)]
    return StableGraph(graph.vertices, edges, graph.tails)


# -- isomorphism classes -------------------------------------------------------

def canonical_form(graph: StableGraph) -> tuple:
    """Minimal relabelled encoding; isomorphisms must fix every tail number.

    Vertices carrying tails get fixed labels (ordered by their smallest tail
    number); only tail-free vertices are permuted, and only among vertices
    sharing (degree, loop count).
    """
    tail_home: dict[str, int] = {}
    for t in sorted(graph.tails, key=lambda t: t.number):
        tail_home.setdefault(t.vertex, t.number)
    fixed = sorted(tail_home, key=tail_home.get)
    free = [v for v in graph.vertices if v not in tail_home]

    def signature(v: str) -> tuple:
        return (graph.degree(v), sum(1 for a, b in graph.edges if a == b == v))

    groups: dict[tuple, list[str]] = {}
    for v in free:
        groups.setdefault(signature(v), []).append(v)
    ordered_groups = [groups[k] for k in sorted(groups)]

    tails = sorted(graph.tails, key=lambda t: t.number)
    best = None
    for perms in itertools.product(*(itertools.permutations(g) for g in ordered_groups)):
        order = fixed + [v for p in perms for v in p]
        label = {v: i for i, v in enumerate(order)}
        edges = tuple(sorted(tuple(sorted((label[u], label[v]))) for u, v in graph.edges))
        key = (len(order), edges, tuple(label[t.vertex] for t in tails))
        if best is None or key < best:
            best = key
    return best


def from_canonical(key: tuple) -> StableGraph:
    n_vertices, edges, tail_vertices = key
    names = [f"v{i}" for i in range(n_vertices)]
    return StableGraph(
        names,
        [(names[a], names[b]) for a, b in edges],
        [Tail(names[v], i + 1) for i, v in enumerate(tail_vertices)],
    )


def is_isomorphic(first: StableGraph, second: StableGraph) -> bool:
    return canonical_form(first) == canonical_form(second)


def _grow_tail(graph: StableGraph) -> Iterable[StableGraph]:
    """Attach a new last tail on a fresh vertex subdividing each edge or tail."""
    new_number = graph.n_tails + 1
    w = f"v{len(graph.vertices)}"
    vertices = graph.vertices + (w,)
    for i, (u, v) in enumerate(graph.edges):
        edges = graph.edges[:i] + graph.edges[i + 1:] + ((u, w), (w, v))
        yield StableGraph(vertices, edges, graph.tails + (Tail(w, new_number),))
    for t in graph.tails:
        tails = tuple(Tail(w, t.number) if s == t else s for s in graph.tails) + (Tail(w, new_number),)
        yield StableGraph(vertices, graph.edges + ((t.vertex, w),), tails)


def _join_last_tails(graph: StableGraph) -> StableGraph:
    """Glue the two highest-numbered tails into one edge."""
    n = graph.n_tails
    a, b = graph.tail(n - 1), graph.tail(n)
    tails = tuple(t for t in graph.tails if t.number < n - 1)
    return StableGraph(graph.vertices, graph.edges + ((a.vertex, b.vertex),), tails)


@lru_cache(maxsize=None)
def _trivalent_keys(g: int, n: int) -> tuple:
    if (g, n) == (0, 3):
        return (canonical_form(StableGraph(["v0"], [], [Tail("v0", i) for i in (1, 2, 3)])),)
    if n == 1:
        candidates = (_join_last_tails(from_canonical(k)) for k in _trivalent_keys(g - 1, 3))
    else:
        candidates = (grown for k in _trivalent_keys(g, n - 1) for grown in _grow_tail(from_canonical(k)))
    return tuple(sorted({canonical_form(c) for c in candidates}))


def check_moduli_range(g: int, n: int) -> None:
    if g < 0 or n < 1 or 2 * g - 2 + n <= 0:
        raise GraphError(f"need n >= 1 and 2g - 2 + n > 0, got (g, n) = ({g}, {n})", genus=g, tails=n)
    if 3 * g - 3 + n > MAX_MODULI_DIMENSION:
        raise GraphError(
            f"3g - 3 + n = {3 * g - 3 + n} exceeds the supported bound {MAX_MODULI_DIMENSION}",
            genus=g,
            tails=n,
        )


def enumerate_trivalent(g: int, n: int) -> list[StableGraph]:
    """One trivalent stable graph per isomorphism class of type (g, n).

    Classes of type (g, n >= 2) come from (g, n - 1) by subdividing an edge or
    tail with a vertex carrying tail n; type (g >= 1, 1) comes from (g - 1, 3)
    by gluing tails 2 and 3.
    """
    check_moduli_range(g, n)
    graphs = [from_canonical(k) for k in _trivalent_keys(g, n)]
    logger.info("enumerate_trivalent(%d, %d): %d classes", g, n, len(graphs))
    return graphs


def extend_without_tails(graph: StableGraph) -> StableGraph:
    """Replace every tail by an edge to a new vertex carrying a loop."""
    require_valid(graph)
    vertices = list(graph.vertices)
    edges = list(graph.edges)
    taken = set(vertices)
    for t in sorted(graph.tails, key=lambda t: t.number):
        w = f"t{t.number}"
        while w in taken:
            w += "'"
        taken.add(w)
        vertices.append(w)
        edges.append((t.vertex, w))
        edges.append((w, w))
    return StableGraph(vertices, edges, ())


# -- rigidification --------------------------------------------------------------

@dataclass(frozen=True)
class Rigidification:
    """``tau[v] = (tau_v(0), tau_v(1), tau_v(inf))``."""

    tau: dict[str, tuple[Branch, Branch, Branch]] = field(hash=False)

    def image(self) -> set:
        return {b for values in self.tau.values() for b in values}

    def mark_of(self, vertex: str, branch: Branch) -> str | None:
        values = self.tau.get(vertex, ())
        return MARKS[values.index(branch)] if branch in values else None

    def to_dict(self) -> dict:
        return {
            v: {mark: b.label for mark, b in zip(MARKS, values)}
            for v, values in self.tau.items()
        }


def _conflicts(graph: StableGraph, vertex: str, values: Sequence[Branch], assigned: dict) -> bool:
    for other, other_values in assigned.items():
        if other == vertex:
            continue
        for mine, theirs in zip(values, other_values):
            if isinstance(mine, OrientedEdge) and isinstance(theirs, OrientedEdge) and mine == -theirs:
                return True
    return False


def check_rigidification(graph: StableGraph, rigid: Rigidification) -> bool:
    if set(rigid.tau) != set(graph.vertices):
        return False
    for v, values in rigid.tau.items():
        if len(values) != 3 or len(set(values)) != 3:
            return False
        allowed = graph.branches(v)
        if any(b not in allowed for b in values):
            return False
        if _conflicts(graph, v, values, rigid.tau):
            return False
    return True


def find_rigidification(graph: StableGraph, orientation: Sequence[bool] | None = None) -> Rigidification:
    """First rigidification found by backtracking over the fixed branch order."""
    require_valid(graph)
    if orientation is not None:
        graph = reoriented(graph, orientation)
    order = list(graph.vertices)
    assigned: dict[str, tuple] = {}

    def search(i: int) -> bool:
        if i == len(order):
            return True
        v = order[i]
        for values in itertools.permutations(graph.branches(v), 3):
            if _conflicts(graph, v, values, assigned):
                continue
            assigned[v] = values
            if search(i + 1):
                return True
            del assigned[v]
        return False

    if not search(0):
        raise GraphError("no rigidification found", vertices=list(graph.vertices))
    return Rigidification({v: assigned[v] for v in order})


# -- the dual degenerate curve --------------------------------------------------

@dataclass(frozen=True)
class CurveComponent:
    vertex: str
    marks: tuple[tuple[str, str], ...]  # (branch label, coordinate)


@dataclass(frozen=True)
class DegenerateCurve:
    components: tuple[CurveComponent, ...]
    identifications: tuple[tuple[str, str, str, str], ...]  # (v_e, coord, v_-e, coord)
    marked_points: tuple[tuple[int, str, str], ...]  # (tail number, vertex, coord)
    free_coordinates: tuple[str, ...]

    def to_dict(self) -> dict:
        return {
            "components": [{"vertex": c.vertex, "marks": [list(m) for m in c.marks]} for c in self.components],
            "identifications": [list(i) for i in self.identifications],
            "marked_points": [list(m) for m in self.marked_points],
            "free_coordinates": list(self.free_coordinates),
        }

    def describe(self) -> str:
        lines = []
        for c in self.components:
            marks = ", ".join(f"{coord} [{label}]" for label, coord in c.marks)
            lines.append(f"P_{c.vertex}: {marks}")
        for va, ca, vb, cb in self.identifications:
            lines.append(f"{ca} on P_{va} ~ {cb} on P_{vb}")
        for number, v, coord in self.marked_points:
            lines.append(f"marked point {number}: {coord} on P_{v}")
        return "\n".join(lines)


def _coordinate(rigid: Rigidification, vertex: str, branch: Branch) -> str:
    return rigid.mark_of(vertex, branch) or f"alpha[{branch.label}]"


def free_branches(graph: StableGraph, rigid: Rigidification) -> list[Branch]:
    """The set E_tau = (+-E u T) minus the images of tau."""
    image = rigid.image()
    everything: list[Branch] = graph.oriented_edges() + list(graph.tails)
    return sorted((b for b in everything if b not in image), key=branch_key)


def degenerate_curve_description(graph: StableGraph, rigid: Rigidification) -> DegenerateCurve:
    require_valid(graph)
    if not check_rigidification(graph, rigid):
        raise GraphError("rigidification does not satisfy its invariant")
    components = tuple(
        CurveComponent(v, tuple((b.label, _coordinate(rigid, v, b)) for b in graph.branches(v)))
        for v in graph.vertices
    )
    identifications = []
    for e in range(len(graph.edges)):
        h = OrientedEdge(e, 1)
        va, vb = graph.terminal(h), graph.terminal(-h)
        identifications.append((va, _coordinate(rigid, va, h), vb, _coordinate(rigid, vb, -h)))
    marked = tuple(
        (t.number, t.vertex, _coordinate(rigid, t.vertex, t))
        for t in sorted(graph.tails, key=lambda t: t.number)
    )
    return DegenerateCurve(
        components,
        tuple(identifications),
        marked,
        tuple(b.label for b in free_branches(graph, rigid)),
    )


def coordinate_system(graph: StableGraph, rigid: Rigidification) -> list[str]:
    """Local coordinates near the degenerate curve: free alphas, then one q per edge."""
    require_valid(graph)
    alphas = [f"alpha[{b.label}]" for b in free_branches(graph, rigid)]
    return alphas + [f"q{e}" for e in range(len(graph.edges))]
