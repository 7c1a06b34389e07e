"""
Cylindrical digraph of a complete pivoted formula, loop-free intervals,
NEC literals and closed digraphs.

Digraphs are networkx DiGraphs whose edges carry a `label` attribute: a
frozenset of label elements (block entries, later also fresh pairs).
"""

import logging
from dataclasses import dataclass
from typing import Dict, FrozenSet, Hashable, Iterable, List, Optional, Set, Tuple

import networkx as nx

from formula import ContractViolation
from instrument import BudgetExceeded, WorkCounter
from pivot import PivotedFormula

logger = logging.getLogger(__name__)

LABEL = "label"


def vertex_key(v: Hashable) -> tuple:
    """Total order over the vertex kinds used by the pipeline."""
    if isinstance(v, bool):
        raise TypeError("booleans are not vertices")
    if isinstance(v, int):
        return (0, abs(v), v < 0)
    if isinstance(v, str):
        return (1, v)
    return v.sort_key()


def edge_key(edge: Tuple[Hashable, Hashable]) -> tuple:
    return (vertex_key(edge[0]), vertex_key(edge[1]))


def sorted_vertices(vertices: Iterable[Hashable]) -> List[Hashable]:
    return sorted(vertices, key=vertex_key)


def sorted_edges(edges: Iterable[Tuple[Hashable, Hashable]]) -> List[Tuple[Hashable, Hashable]]:
    return sorted(edges, key=edge_key)


def label_of(g: nx.DiGraph, u: Hashable, v: Hashable) -> FrozenSet:
    return g.edges[u, v].get(LABEL, frozenset())


def show_vertex(v: Hashable) -> str:
    if isinstance(v, int):
        return f"-{abs(v)}" if v < 0 else str(v)
    return str(v)


@dataclass(frozen=True)
class Tagged:
    """Product copy (literal, copy) of an interval vertex inside a closed digraph."""

    literal: Hashable
    copy: int

    def sort_key(self) -> tuple:
        return (2, vertex_key(self.literal), self.copy)

    def __str__(self):
        return f"({show_vertex(self.literal)},{self.copy})"


@dataclass(frozen=True)
class Interval:
    source: Hashable
    target: Hashable
    graph: nx.DiGraph

    def is_empty(self) -> bool:
        return self.graph.number_of_edges() == 0


@dataclass(frozen=True)
class ClosedDigraph:
    """
    One closed digraph per NEC atom x: [¬x, x] as copy 1 and [x, ¬x] as
    copy 2, glued at (x,1) ~ (x,2). Generic closed digraphs (nec_atom None)
    may have several tops and roots.
    """

    graph: nx.DiGraph
    nec_atom: Optional[int] = None

    def tops(self) -> List[Hashable]:
        return sorted_vertices(v for v in self.graph if self.graph.in_degree(v) == 0)

    def roots(self) -> List[Hashable]:
        return sorted_vertices(v for v in self.graph if self.graph.out_degree(v) == 0)

    @property
    def glue(self) -> Optional[Tagged]:
        return None if self.nec_atom is None else Tagged(self.nec_atom, 1)

    def size(self) -> int:
        return self.graph.number_of_nodes() + self.graph.number_of_edges()


def build_cylinder(pf: PivotedFormula) -> nx.DiGraph:
    """
    Each pair (a ∨ b) in the block of entry E yields ¬a ⇒ b and ¬b ⇒ a,
    both labelled with every entry whose block contains that pair.
    """
    if not pf.is_complete():
        raise ContractViolation("build_cylinder requires a complete pivoted formula")
    g = nx.DiGraph()
    for entry, block in pf.entries():
        for a, b in block.pairs:
            for lit in (a, -a, b, -b):
                g.add_node(lit)
            for u, v in ((-a, b), (-b, a)):
                if g.has_edge(u, v):
                    g.edges[u, v][LABEL] = g.edges[u, v][LABEL] | {entry}
                else:
                    g.add_edge(u, v, **{LABEL: frozenset({entry})})
    logger.debug(
        f"Cylinder: {g.number_of_nodes()} vertices, {g.number_of_edges()} edges"
    )
    return g


def is_skew_symmetric(g: nx.DiGraph) -> bool:
    for u, v, label in g.edges(data=LABEL):
        if not g.has_edge(-v, -u) or label_of(g, -v, -u) != label:
            return False
    return True


def reachable_from(
    g: nx.DiGraph, a: Hashable, counter: Optional[WorkCounter] = None
) -> nx.DiGraph:
    """Worklist closure of everything reachable from a, with its edges."""
    if a not in g:
        raise ContractViolation(f"vertex {show_vertex(a)} not in digraph")
    counter = counter or WorkCounter("reachable_from")
    sub = nx.DiGraph()
    sub.add_node(a)
    frontier = [a]
    while frontier:
        u = frontier.pop()
        for _, v, data in g.out_edges(u, data=True):
            counter.tick()
            if v not in sub:
                frontier.append(v)
            sub.add_edge(u, v, **data)
    sub.graph["work"] = counter.count
    return sub


def _cycle_vertices(g: nx.DiGraph) -> Set[Hashable]:
    cyclic: Set[Hashable] = set()
    for component in nx.strongly_connected_components(g):
        if len(component) > 1:
            cyclic.update(component)
    cyclic.update(v for v in g if g.has_edge(v, v))
    return cyclic


def interval(g: nx.DiGraph, p: Hashable, q: Hashable) -> Interval:
    """
    Loop-free interval [p, q].

    Paths are read in g with p's in-edges and q's out-edges cut, so p and q
    themselves never sit on a cycle. Restrict to vertices reachable from p
    and co-reachable to q, drop every vertex on a cycle, and repeat until
    nothing changes. p == q yields the empty interval.
    """
    if p not in g or q not in g:
        raise ContractViolation("interval endpoints must be vertices of the digraph")
    empty = Interval(p, q, nx.DiGraph())
    if p == q:
        return empty

    cut = nx.DiGraph(g)
    cut.remove_edges_from(list(cut.in_edges(p)))
    cut.remove_edges_from(list(cut.out_edges(q)))

    alive = set(cut.nodes)
    while True:
        sub = cut.subgraph(alive)
        if p not in sub or q not in sub:
            return empty
        keep = ({p} | nx.descendants(sub, p)) & ({q} | nx.ancestors(sub, q))
        if q not in keep:
            return empty
        sub = cut.subgraph(keep)
        cyclic = _cycle_vertices(sub)
        if not cyclic:
            return Interval(p, q, nx.DiGraph(sub))
        alive = keep - cyclic


def nec_literals(g: nx.DiGraph) -> List[int]:
    """Atoms x with both [x, ¬x] and [¬x, x] non-empty, ascending."""
    atoms = sorted({abs(v) for v in g if isinstance(v, int) and -v in g})
    return [
        x
        for x in atoms
        if not interval(g, x, -x).is_empty() and not interval(g, -x, x).is_empty()
    ]


def closed_digraph(g: nx.DiGraph, x: int) -> ClosedDigraph:
    forward = interval(g, -x, x)
    backward = interval(g, x, -x)
    glue = Tagged(x, 1)

    def tag(v: Hashable, copy: int) -> Tagged:
        return glue if v == x else Tagged(v, copy)

    cd = nx.DiGraph()
    for copy, part in ((1, forward), (2, backward)):
        for u, v, data in part.graph.edges(data=True):
            cd.add_edge(tag(u, copy), tag(v, copy), **{LABEL: data.get(LABEL, frozenset())})
    return ClosedDigraph(cd, x)


def build_closed_digraphs(g: nx.DiGraph) -> List[ClosedDigraph]:
    """One glued closed digraph per NEC atom, in atom order."""
    closed = [closed_digraph(g, x) for x in nec_literals(g)]
    logger.debug(f"Built {len(closed)} closed digraphs")
    return closed


def generic_closed_digraph(
    edges: Iterable[Tuple[Hashable, Hashable]],
    labels: Optional[Dict[Tuple[Hashable, Hashable], Iterable]] = None,
) -> ClosedDigraph:
    labels = labels or {}
    g = nx.DiGraph()
    for u, v in edges:
        g.add_edge(u, v, **{LABEL: frozenset(labels.get((u, v), ()))})
    if not nx.is_directed_acyclic_graph(g):
        raise ContractViolation("closed digraphs are acyclic")
    return ClosedDigraph(g)


def chains_bruteforce(cd: ClosedDigraph, cap: int) -> List[Tuple[Hashable, ...]]:
    """Every top-to-root path; more than `cap` chains raises BudgetExceeded."""
    chains: List[Tuple[Hashable, ...]] = []
    roots = cd.roots()
    for top in cd.tops():
        for path in nx.all_simple_paths(cd.graph, top, roots):
            chains.append(tuple(path))
            if len(chains) > cap:
                raise BudgetExceeded(
                    "chains", "chain enumeration stays within cap", len(chains), cap
                )
    chains.sort(key=lambda chain: [vertex_key(v) for v in chain])
    return chains


def chain_edges(chain: Tuple[Hashable, ...]) -> List[Tuple[Hashable, Hashable]]:
    return list(zip(chain, chain[1:]))
