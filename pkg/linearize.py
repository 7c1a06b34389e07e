"""
Linearization of closed digraphs.

Roots with several in-edges are lifted first. Then every branching, deepest
first, is multiplied to m = max(in, out) copies, receives a fresh label pair
on its ascending and descending edges, and is lifted. Finally tops with
several out-edges are lifted. The result is a set of disjoint columns.
"""

import logging
import string
from dataclasses import dataclass, field
from typing import Callable, Dict, FrozenSet, Hashable, List, Optional, Set, Tuple

import networkx as nx

from cylinder import (
    LABEL,
    ClosedDigraph,
    label_of,
    show_vertex,
    sorted_edges,
    sorted_vertices,
    vertex_key,
)
from formula import ContractViolation
from instrument import WorkCounter, scaled_budget
from pivot import Entry

logger = logging.getLogger(__name__)

ROOT = "root"
TOP = "top"
BRANCHING = "branching"
INTERNAL = "internal"

Edge = Tuple[Hashable, Hashable]
TraceHook = Callable[[str, nx.DiGraph], None]


@dataclass(frozen=True)
class Lifted:
    """Indexed copy of a vertex created by lifting or branch multiplication."""

    origin: Hashable
    index: int

    def sort_key(self) -> tuple:
        return (3, vertex_key(self.origin), self.index)

    def __str__(self):
        return f"{self.origin}^{self.index}"


def fresh_name(serial: int) -> str:
    letter = string.ascii_lowercase[serial % 26]
    return letter if serial < 26 else f"{letter}{serial // 26}"


@dataclass(frozen=True)
class Fresh:
    """One member of an added conjugated label pair."""

    serial: int
    positive: bool

    @property
    def conjugate(self) -> "Fresh":
        return Fresh(self.serial, not self.positive)

    def __str__(self):
        name = fresh_name(self.serial)
        return name if self.positive else f"¬{name}"


def label_element_key(element) -> tuple:
    if isinstance(element, Entry):
        return (0, element.pivot_index, element.polarity)
    if isinstance(element, Fresh):
        return (1, element.serial, not element.positive)
    return (2, str(element))


def show_label(label: FrozenSet) -> str:
    return " ".join(str(e) for e in sorted(label, key=label_element_key))


def proj(v: Hashable) -> Hashable:
    while isinstance(v, Lifted):
        v = v.origin
    return v


@dataclass(frozen=True)
class Projection:
    vertex_map: Dict[Hashable, Hashable]
    edge_map: Dict[Edge, Edge]

    def is_well_posed(self, cd: ClosedDigraph) -> bool:
        return all(cd.graph.has_edge(*target) for target in self.edge_map.values())


@dataclass
class LinearizedDigraph:
    graph: nx.DiGraph
    source: ClosedDigraph
    columns: List[List[Edge]] = field(default_factory=list)
    registry: List[Tuple[int, Hashable]] = field(default_factory=list)
    counters: Dict[str, int] = field(default_factory=dict)

    def column_labels(self) -> List[List[FrozenSet]]:
        return [[label_of(self.graph, u, v) for u, v in column] for column in self.columns]

    def distinct_labels(self) -> Set[FrozenSet]:
        return {label for column in self.column_labels() for label in column}


def classify(g: nx.DiGraph) -> Dict[Hashable, FrozenSet[str]]:
    """Vertex kinds: root (no out-edge), top (no in-edge), branching (≥2 in or out)."""
    kinds: Dict[Hashable, FrozenSet[str]] = {}
    for v in g:
        found = set()
        if g.out_degree(v) == 0:
            found.add(ROOT)
        if g.in_degree(v) == 0:
            found.add(TOP)
        if g.in_degree(v) >= 2 or g.out_degree(v) >= 2:
            found.add(BRANCHING)
        kinds[v] = frozenset(found or {INTERNAL})
    return kinds


def _is_branching(g: nx.DiGraph, v: Hashable) -> bool:
    return g.in_degree(v) >= 2 or g.out_degree(v) >= 2


def _new_copy(g: nx.DiGraph, v: Hashable) -> Lifted:
    base = proj(v)
    registry = g.graph.setdefault("copies", {})
    index = registry.get(base, 0) + 1
    registry[base] = index
    return Lifted(base, index)


def up_down(g: nx.DiGraph, a: Hashable) -> Tuple[FrozenSet[Edge], FrozenSet[Edge]]:
    """Up_a: edges on some path into a. Down_a: edges on some path out of a."""
    if a not in g:
        raise ContractViolation(f"vertex {show_vertex(a)} not in digraph")
    above = nx.ancestors(g, a)
    below = nx.descendants(g, a)
    up = frozenset((u, v) for u, v in g.edges if v == a or v in above)
    down = frozenset((u, v) for u, v in g.edges if u == a or u in below)
    return up, down


def add_label(g: nx.DiGraph, a: Hashable, serial: int) -> nx.DiGraph:
    """Add Fresh(serial, +) to Down_a and Fresh(serial, -) to Up_a."""
    positive, negative = Fresh(serial, True), Fresh(serial, False)
    for _, _, label in g.edges(data=LABEL):
        if label and (positive in label or negative in label):
            raise ContractViolation(f"label pair {fresh_name(serial)} is not fresh")
    up, down = up_down(g, a)
    out = g.copy()
    for u, v in down:
        out.edges[u, v][LABEL] = label_of(out, u, v) | {positive}
    for u, v in up:
        out.edges[u, v][LABEL] = label_of(out, u, v) | {negative}
    return out


def lift(g: nx.DiGraph, site: Hashable) -> nx.DiGraph:
    """
    Split site into one copy per edge pairing: a root gets one copy per
    in-edge, a top one per out-edge, and a vertex with equal in- and
    out-degree one per (i-th in-edge, i-th out-edge) pair.
    """
    if site not in g:
        raise ContractViolation(f"vertex {show_vertex(site)} not in digraph")
    ins = sorted_vertices(g.predecessors(site))
    outs = sorted_vertices(g.successors(site))
    t, n = len(ins), len(outs)
    if t <= 1 and n <= 1:
        return g.copy()
    if n == 0:
        plan = [(x, None) for x in ins]
    elif t == 0:
        plan = [(None, y) for y in outs]
    elif t == n:
        plan = list(zip(ins, outs))
    else:
        raise ContractViolation(
            f"cannot lift {show_vertex(site)} with {t} in-edges and {n} out-edges"
        )
    out = g.copy()
    for x, y in plan:
        copy = _new_copy(out, site)
        if x is not None:
            out.add_edge(x, copy, **{LABEL: label_of(g, x, site)})
        if y is not None:
            out.add_edge(copy, y, **{LABEL: label_of(g, site, y)})
    out.remove_node(site)
    return out


def _check_linear_interior(g: nx.DiGraph, vertices) -> None:
    for v in vertices:
        if g.in_degree(v) != 1 or g.out_degree(v) != 1:
            raise ContractViolation(f"{show_vertex(v)} is not interior to a linear branch")


def _duplicate_path(
    g: nx.DiGraph, path: List[Hashable], keep_first: bool, keep_last: bool
) -> List[Hashable]:
    """Copy the vertices of path not kept; return the spliced copy path."""
    copies = []
    for index, v in enumerate(path):
        shared = (index == 0 and keep_first) or (index == len(path) - 1 and keep_last)
        copies.append(v if shared else _new_copy(g, v))
    for (u, v), (cu, cv) in zip(zip(path, path[1:]), zip(copies, copies[1:])):
        g.add_edge(cu, cv, **{LABEL: label_of(g, u, v)})
    return copies


def multiply_branch(g: nx.DiGraph, branch: List[Hashable], m: int) -> nx.DiGraph:
    """
    Add m-1 tagged copies of a maximal linear branch.

    The first vertex is shared by all copies. The last one is shared too
    unless it is a root, in which case it is copied along with the interior.
    """
    if m < 1 or len(branch) < 2:
        raise ContractViolation("multiply_branch needs m >= 1 and a branch of two vertices")
    for u, v in zip(branch, branch[1:]):
        if not g.has_edge(u, v):
            raise ContractViolation(f"branch edge {show_vertex(u)} -> {show_vertex(v)} missing")
    ends_in_root = g.out_degree(branch[-1]) == 0
    interior = branch[1:] if ends_in_root else branch[1:-1]
    if ends_in_root:
        _check_linear_interior(g, branch[1:-1])
        if g.in_degree(branch[-1]) != 1:
            raise ContractViolation("branch root is shared with another branch")
    else:
        _check_linear_interior(g, interior)
        if m > 1 and not interior:
            raise ContractViolation("a single-edge branch between shared ends cannot be multiplied")
    out = g.copy()
    for _ in range(m - 1):
        _duplicate_path(out, branch, keep_first=True, keep_last=not ends_in_root)
    return out


def _in_branch(g: nx.DiGraph, u: Hashable, x: Hashable) -> List[Hashable]:
    """Path source ... x, u climbing from u through predecessor x."""
    path = [u]
    while g.in_degree(x) == 1 and g.out_degree(x) == 1:
        path.append(x)
        x = next(iter(g.predecessors(x)))
    path.append(x)
    path.reverse()
    return path


def _out_branch(g: nx.DiGraph, u: Hashable, y: Hashable) -> List[Hashable]:
    """Path u, y, ... root descending from u through successor y."""
    path = [u, y]
    while g.out_degree(y) == 1:
        y = next(iter(g.successors(y)))
        path.append(y)
    return path


def _lowest_branching(g: nx.DiGraph) -> Optional[Hashable]:
    candidates = [
        v
        for v in g
        if g.in_degree(v) > 0
        and _is_branching(g, v)
        and not any(_is_branching(g, d) for d in nx.descendants(g, v))
    ]
    return sorted_vertices(candidates)[0] if candidates else None


def _linearize_branching(
    g: nx.DiGraph, u: Hashable, serial: int, counter: WorkCounter
) -> nx.DiGraph:
    g = add_label(g, u, serial)
    in_paths = [_in_branch(g, u, x) for x in sorted_vertices(g.predecessors(u))]
    out_paths = [_out_branch(g, u, y) for y in sorted_vertices(g.successors(u))]
    t, n = len(in_paths), len(out_paths)
    m = max(t, n)

    out = g.copy()
    for i in range(m):
        in_path = in_paths[i % t]
        out_path = out_paths[i % n]
        if i >= t:
            in_path = _duplicate_path(out, in_path[:-1], keep_first=True, keep_last=False) + [u]
            counter.tick(len(in_path))
        if i >= n:
            out_path = [u] + _duplicate_path(out, out_path[1:], keep_first=False, keep_last=False)
            counter.tick(len(out_path))
        copy = _new_copy(out, u)
        out.add_edge(in_path[-2], copy, **{LABEL: label_of(g, in_paths[i % t][-2], u)})
        out.add_edge(copy, out_path[1], **{LABEL: label_of(g, u, out_paths[i % n][1])})
        counter.tick(3)
    out.remove_node(u)
    return out


def linearize(
    cd: ClosedDigraph,
    budget_scale: float = 1.0,
    trace: Optional[TraceHook] = None,
) -> LinearizedDigraph:
    """
    Rewrite a closed digraph until no branching remains.

    Every added vertex or edge counts as one rewrite against the budget
    10·(|V|+|E|)²; crossing it raises BudgetExceeded.
    """
    if cd.graph.number_of_nodes() == 0:
        raise ContractViolation("linearize requires a non-empty closed digraph")
    bound = scaled_budget(10 * cd.size() ** 2, budget_scale)
    counter = WorkCounter(
        "linearize", "lifting and multiplication stay polynomially bounded", bound
    )
    g = cd.graph.copy()
    g.graph["copies"] = {}

    def emit(step: str) -> None:
        if trace is not None:
            trace(step, g)

    emit("closed")
    for root in sorted_vertices(v for v in g if g.out_degree(v) == 0 and g.in_degree(v) > 1):
        counter.tick(2 * g.in_degree(root))
        g = lift(g, root)
        emit(f"lift-root-{show_vertex(root)}")

    registry: List[Tuple[int, Hashable]] = []
    while True:
        u = _lowest_branching(g)
        if u is None:
            break
        serial = len(registry)
        registry.append((serial, proj(u)))
        logger.debug(f"Linearizing branching {u} with fresh pair {fresh_name(serial)}")
        g = _linearize_branching(g, u, serial, counter)
        emit(f"branching-{fresh_name(serial)}")

    for top in sorted_vertices(v for v in g if g.in_degree(v) == 0 and g.out_degree(v) > 1):
        counter.tick(2 * g.out_degree(top))
        g = lift(g, top)
        emit(f"lift-top-{show_vertex(top)}")

    columns = []
    for top in sorted_vertices(v for v in g if g.in_degree(v) == 0):
        column = []
        v = top
        while g.out_degree(v) == 1:
            w = next(iter(g.successors(v)))
            column.append((v, w))
            v = w
        columns.append(column)

    counters = {
        "linearize_rewrites": counter.count,
        "linearize_budget": bound,
        "linearized_vertices": g.number_of_nodes(),
        "linearized_edges": g.number_of_edges(),
        "columns": len(columns),
        "fresh_pairs": len(registry),
    }
    return LinearizedDigraph(g, cd, columns, registry, counters)


def project(lin: LinearizedDigraph) -> Projection:
    vertex_map = {v: proj(v) for v in lin.graph}
    edge_map = {(u, v): (proj(u), proj(v)) for u, v in lin.graph.edges}
    return Projection(vertex_map, edge_map)


def labels_preserved(lin: LinearizedDigraph) -> bool:
    """label(e) ⊇ label(Proj(e)) and the surplus is made of fresh elements only."""
    for (u, v), (pu, pv) in project(lin).edge_map.items():
        if not lin.source.graph.has_edge(pu, pv):
            return False
        inherited = label_of(lin.source.graph, pu, pv)
        label = label_of(lin.graph, u, v)
        if not inherited <= label:
            return False
        if any(not isinstance(extra, Fresh) for extra in label - inherited):
            return False
    return True


def is_linear(g: nx.DiGraph) -> bool:
    return not any(_is_branching(g, v) for v in g)


def column_edges(lin: LinearizedDigraph) -> List[Edge]:
    return sorted_edges(e for column in lin.columns for e in column)
