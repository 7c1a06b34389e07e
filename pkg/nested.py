"""
Nested antichain search over linearized digraphs and the pipeline verdict.

Columns of a linearized digraph become levels; a cell is one edge of one
column. Nested digraphs rooted at a cell collect, level by level, the
pairwise compatible choices of one cell per earlier column.
"""

import logging
from dataclasses import dataclass, field
from itertools import product
from typing import (
    Dict,
    FrozenSet,
    Hashable,
    Iterable,
    List,
    Optional,
    Sequence,
    Set,
    Tuple,
)

from cylinder import (
    ClosedDigraph,
    build_closed_digraphs,
    build_cylinder,
    chain_edges,
    chains_bruteforce,
    label_of,
    nec_literals,
    show_vertex,
    sorted_vertices,
)
from config import DEFAULT_CHAIN_CAP, DEFAULT_ENTAILS_CAP
from formula import (
    CnfFormula,
    ContractViolation,
    Status,
    Verdict,
    evaluate,
    solve_2sat,
)
from instrument import BudgetExceeded, Counters, WorkCounter, scaled_budget
from linearize import Edge, Fresh, LinearizedDigraph, TraceHook, fresh_name, linearize
from pivot import Entry, PivotedFormula, pivoted_to_cnf

logger = logging.getLogger(__name__)

WITNESS_ATTEMPTS = 8
PATH_CAP = 10000


def _slot(element) -> Tuple[tuple, object]:
    if isinstance(element, Entry):
        return ("entry", element.pivot_index), element.polarity
    if isinstance(element, Fresh):
        return ("fresh", element.serial), element.positive
    return ("other", element), None


def compatible(entries: Iterable) -> bool:
    """False iff some pivot (or fresh pair) occurs with both polarities."""
    seen: Dict[tuple, object] = {}
    for element in entries:
        slot, side = _slot(element)
        if slot in seen and seen[slot] != side:
            return False
        seen[slot] = side
    return True


@dataclass(frozen=True)
class Cell:
    """Edge `position` (0-based) of column `column` (1-based)."""

    column: int
    position: int

    def sort_key(self) -> tuple:
        return (4, self.column, self.position)

    def __str__(self):
        return f"e{self.column}.{self.position}"


@dataclass
class EdgeLabeledDigraph:
    """
    Rooted digraph with levels depth (root) down to 1; each edge goes one
    level down and carries a set of vertices as its label.
    """

    root: Hashable
    depth: int
    edges: Dict[Tuple[Hashable, Hashable], FrozenSet] = field(default_factory=dict)
    levels: Dict[Hashable, int] = field(default_factory=dict)

    def __post_init__(self):
        self.levels.setdefault(self.root, self.depth)
        if self.levels[self.root] != self.depth:
            raise ContractViolation("the root sits on the top level")
        for u, v in self.edges:
            if self.levels.get(u, 0) != self.levels.get(v, 0) + 1:
                raise ContractViolation(f"edge {u} -> {v} does not descend one level")

    def vertices(self) -> Set[Hashable]:
        found = {self.root}
        for u, v in self.edges:
            found.update((u, v))
        return found

    def successors(self, u: Hashable) -> List[Hashable]:
        return sorted_vertices(v for (x, v) in self.edges if x == u)

    def is_empty(self) -> bool:
        return self.depth > 1 and not self.edges

    def copy(self) -> "EdgeLabeledDigraph":
        return EdgeLabeledDigraph(self.root, self.depth, dict(self.edges), dict(self.levels))


def _same_root(g1: EdgeLabeledDigraph, g2: EdgeLabeledDigraph) -> None:
    if g1.root != g2.root or g1.depth != g2.depth:
        raise ContractViolation("labeled digraphs must share root and depth")


def union_labeled(g1: EdgeLabeledDigraph, g2: EdgeLabeledDigraph) -> EdgeLabeledDigraph:
    _same_root(g1, g2)
    edges = dict(g1.edges)
    for edge, label in g2.edges.items():
        edges[edge] = edges.get(edge, frozenset()) | label
    levels = {**g1.levels, **g2.levels}
    return EdgeLabeledDigraph(g1.root, g1.depth, edges, levels)


def intersect_labeled(g1: EdgeLabeledDigraph, g2: EdgeLabeledDigraph) -> EdgeLabeledDigraph:
    _same_root(g1, g2)
    edges = {
        edge: label & g2.edges[edge] for edge, label in g1.edges.items() if edge in g2.edges
    }
    levels = {v: g1.levels[v] for v in g1.levels if v in g2.levels}
    return EdgeLabeledDigraph(g1.root, g1.depth, edges, levels)


def rename_root(g: EdgeLabeledDigraph, new_root: Hashable) -> EdgeLabeledDigraph:
    def swap(v):
        return new_root if v == g.root else v

    edges = {(swap(u), v): label for (u, v), label in g.edges.items()}
    levels = {swap(v): level for v, level in g.levels.items()}
    return EdgeLabeledDigraph(new_root, g.depth, edges, levels)


def nested_paths(
    g: EdgeLabeledDigraph, counter: Optional[WorkCounter] = None
) -> List[Tuple[Hashable, ...]]:
    """
    Root-to-level-1 paths whose every edge label contains the path's
    vertices from that edge's head down to level 1.
    """
    counter = counter or WorkCounter("nested_paths")
    if g.depth == 1:
        return [(g.root,)]
    below: Dict[Hashable, List[Tuple[Hashable, ...]]] = {}
    by_level: Dict[int, List[Hashable]] = {}
    for v in g.vertices() - {g.root}:
        by_level.setdefault(g.levels[v], []).append(v)
    for level in range(1, g.depth):
        for y in sorted_vertices(by_level.get(level, [])):
            if level == 1:
                below[y] = [(y,)]
                continue
            below[y] = []
            for z in g.successors(y):
                label = g.edges[y, z]
                for suffix in below.get(z, []):
                    counter.tick()
                    if label.issuperset(suffix):
                        below[y].append((y,) + suffix)
    paths = []
    for z in g.successors(g.root):
        label = g.edges[g.root, z]
        for suffix in below.get(z, []):
            counter.tick()
            if label.issuperset(suffix):
                paths.append((g.root,) + suffix)
    return paths


def _from_paths(
    root: Hashable, depth: int, paths: Sequence[Tuple[Hashable, ...]], levels: Dict
) -> EdgeLabeledDigraph:
    edges: Dict[Tuple[Hashable, Hashable], FrozenSet] = {}
    for path in paths:
        for i in range(len(path) - 1):
            edge = (path[i], path[i + 1])
            edges[edge] = edges.get(edge, frozenset()) | frozenset(path[i + 1 :])
    used = {v for path in paths for v in path} | {root}
    return EdgeLabeledDigraph(root, depth, edges, {v: levels[v] for v in used})


def max_nested(g: EdgeLabeledDigraph, counter: Optional[WorkCounter] = None) -> EdgeLabeledDigraph:
    """
    Largest nested sub-digraph of g: the union of its label-respecting
    root paths with labels rebuilt from those paths. Filtering repeats
    until the digraph stops changing.
    """
    counter = counter or WorkCounter("max_nested")
    current = g
    while True:
        counter.tick()
        paths = nested_paths(current, counter)
        result = _from_paths(current.root, current.depth, paths, current.levels)
        if result.edges == current.edges:
            return result
        current = result


def is_nested(g: EdgeLabeledDigraph) -> bool:
    return max_nested(g).edges == g.edges


def _cell_label(lin: LinearizedDigraph, cell: Cell) -> FrozenSet:
    u, v = lin.columns[cell.column - 1][cell.position]
    return label_of(lin.graph, u, v)


def cells_of(lin: LinearizedDigraph, column: int) -> List[Cell]:
    return [Cell(column, p) for p in range(len(lin.columns[column - 1]))]


def build_nested_antichains(
    lin: LinearizedDigraph,
    budget_scale: float = 1.0,
    stats: Optional[Dict[str, int]] = None,
) -> List[EdgeLabeledDigraph]:
    """
    Seed, for every cell w beyond column 1, the cells of column 1
    compatible with w. At step r, for each later w and each compatible v in
    column r, intersect G(v) (re-rooted at w) with G(w), keep its maximal
    nested part, hang it below w through v and merge. The surviving
    digraphs rooted in the last column form the set of nested antichains.
    """
    stats = {} if stats is None else stats
    k = len(lin.columns)
    if k == 0:
        return []
    size = sum(len(column) for column in lin.columns)
    bound = scaled_budget(max(size, 2) ** 6, budget_scale)
    counter = WorkCounter("nested", "nested filter stays within |V|^6", bound)
    stats["nested_budget"] = bound
    stats["nested_work"] = 0
    labels = {cell: _cell_label(lin, cell) for c in range(1, k + 1) for cell in cells_of(lin, c)}

    def compat(*cells: Cell) -> bool:
        return compatible(element for cell in cells for element in labels[cell])

    if k == 1:
        return [
            EdgeLabeledDigraph(cell, 1)
            for cell in cells_of(lin, 1)
            if compat(cell)
        ]

    graphs: Dict[Cell, EdgeLabeledDigraph] = {}
    for column in range(2, k + 1):
        for w in cells_of(lin, column):
            edges = {}
            levels = {w: 2}
            for c in cells_of(lin, 1):
                counter.tick()
                if compat(w, c):
                    edges[w, c] = frozenset({c})
                    levels[c] = 1
            graphs[w] = EdgeLabeledDigraph(w, 2, edges, levels)

    for r in range(2, k):
        updated: Dict[Cell, EdgeLabeledDigraph] = {}
        for column in range(r + 1, k + 1):
            for w in cells_of(lin, column):
                merged = EdgeLabeledDigraph(w, r + 1)
                for v in cells_of(lin, r):
                    counter.tick()
                    if not compat(v, w) or graphs[v].is_empty():
                        continue
                    meet = intersect_labeled(rename_root(graphs[v], w), graphs[w])
                    best = max_nested(meet, counter)
                    if best.is_empty():
                        continue
                    merged = union_labeled(merged, _hang_below(best, w, v, r + 1))
                updated[w] = merged
        graphs = updated
        logger.debug(f"Nested step {r}: {sum(not g.is_empty() for g in graphs.values())} live roots")

    stats["nested_work"] = counter.count
    return [graphs[w] for w in cells_of(lin, k) if not graphs[w].is_empty()]


def _hang_below(
    best: EdgeLabeledDigraph, w: Hashable, v: Hashable, depth: int
) -> EdgeLabeledDigraph:
    """Turn max-nested digraph rooted at w into w -> v -> (best's levels)."""
    edges: Dict[Tuple[Hashable, Hashable], FrozenSet] = {}
    head_label = {v}
    for (u, x), label in best.edges.items():
        if u == best.root:
            edges[v, x] = label
            head_label |= label
        else:
            edges[u, x] = label
    edges[w, v] = frozenset(head_label)
    levels = {x: level for x, level in best.levels.items() if x != best.root}
    levels[v] = depth - 1
    levels[w] = depth
    return EdgeLabeledDigraph(w, depth, edges, levels)


@dataclass(frozen=True)
class Antichain:
    edges: Tuple[Edge, ...]
    label: FrozenSet
    compatible: bool


def maximal_nested_paths(
    nd: EdgeLabeledDigraph, lin: LinearizedDigraph, cap: int = PATH_CAP
) -> List[Antichain]:
    """Every label-respecting root path of nd, read back as linearized edges."""
    counter = WorkCounter("maximal_nested_paths", "witness enumeration stays within cap", cap)
    antichains = []
    for path in nested_paths(nd, counter):
        cells = sorted(path, key=lambda cell: cell.column)
        edges = tuple(lin.columns[c.column - 1][c.position] for c in cells)
        label = frozenset().union(*(_cell_label(lin, c) for c in cells))
        antichains.append(Antichain(edges, label, compatible(label)))
    return antichains


def compatible_choice_exists(options: Sequence[Sequence[FrozenSet]]) -> bool:
    """Is there one label per group whose union is compatible? Exhaustive."""
    ordered = sorted(options, key=len)

    def search(index: int, chosen: FrozenSet) -> bool:
        if index == len(ordered):
            return True
        for label in ordered[index]:
            union = chosen | label
            if compatible(union) and search(index + 1, union):
                return True
        return False

    return search(0, frozenset())


def column_antichain_exists(lin: LinearizedDigraph) -> bool:
    return compatible_choice_exists(lin.column_labels())


def chain_label_lists(cd: ClosedDigraph, cap: int) -> List[List[FrozenSet]]:
    return [
        [label_of(cd.graph, u, v) for u, v in chain_edges(chain)]
        for chain in chains_bruteforce(cd, cap)
    ]


def _total_maps(m: int, cap: int) -> Iterable[FrozenSet[Entry]]:
    if 2**m > cap:
        raise BudgetExceeded("entails", "2^m total maps stay within cap", 2**m, cap)
    for polarities in product((1, 2), repeat=m):
        yield frozenset(Entry(i + 1, j) for i, j in enumerate(polarities))


def entails_bruteforce(
    partial_maps: Iterable[Iterable[Entry]], m: int, cap: int = DEFAULT_ENTAILS_CAP
) -> bool:
    """True iff every total map of m pivots extends some member of partial_maps."""
    members = [frozenset(eta) for eta in partial_maps]
    return all(
        any(eta <= gamma for eta in members) for gamma in _total_maps(m, cap)
    )


@dataclass(frozen=True)
class SearchAllReport:
    chains: int
    tau: int
    complement_has_compatible: bool
    entails: bool
    compatible_antichain: bool

    @property
    def agree(self) -> bool:
        no_complement = not self.complement_has_compatible
        return no_complement == self.entails == (not self.compatible_antichain)


def searchall_check(
    cd: ClosedDigraph,
    m: int,
    chain_cap: int = DEFAULT_CHAIN_CAP,
    entails_cap: int = DEFAULT_ENTAILS_CAP,
) -> SearchAllReport:
    """
    Three independent readings of "every combination is blocked": the
    complement of the forced set has no compatible member, the forced set
    entails every total map, and no compatible antichain meets all chains.
    """
    chains = chain_label_lists(cd, chain_cap)
    tau, complement = [], []
    for gamma in _total_maps(m, entails_cap):
        forced = any(all(label & gamma for label in chain) for chain in chains)
        (tau if forced else complement).append(gamma)
    return SearchAllReport(
        chains=len(chains),
        tau=len(tau),
        complement_has_compatible=any(compatible(gamma) for gamma in complement),
        entails=entails_bruteforce(tau, m, entails_cap),
        compatible_antichain=compatible_choice_exists(chains),
    )


def _polarity_avoiding(pf: PivotedFormula, blocked: FrozenSet) -> Dict[int, int]:
    return {i: 2 if Entry(i, 1) in blocked else 1 for i in range(1, pf.m + 1)}


def _selection_witness(
    pf: PivotedFormula, polarity: Dict[int, int]
) -> Optional[Dict[int, bool]]:
    """
    Keep the block of entry (i, polarity[i]) for every pivot i, pin each
    pivot atom so that block is the active one, and solve the kept pairs
    as 2-SAT.
    """
    clauses: List[Tuple[int, ...]] = []
    for entry, block in pf.entries():
        if polarity[entry.pivot_index] == entry.polarity:
            clauses.extend(block.pairs)
    pins = {atom: polarity[i] == 2 for i, atom in enumerate(pf.pivot_atoms(), start=1)}
    clauses.extend((atom,) if value else (-atom,) for atom, value in pins.items())
    verdict = solve_2sat(CnfFormula.from_lists(pf.num_atoms, clauses))
    if verdict.status is not Status.SAT:
        return None
    witness = dict(verdict.witness)
    if not evaluate(pivoted_to_cnf(pf), witness):
        return None
    return witness


def extract_witness(
    pf: PivotedFormula,
    blocked_sets: Sequence[FrozenSet],
    cap: int = DEFAULT_ENTAILS_CAP,
    counters: Optional[Counters] = None,
) -> Optional[Dict[int, bool]]:
    """
    Try the block selections that avoid the blocked entry sets first, then
    every one of the 2^m selections. The search is exact: a valuation
    exists iff some selection's 2-SAT instance is satisfiable. None when
    the formula is unsatisfiable or 2^m exceeds cap.
    """
    counters = Counters() if counters is None else counters
    candidates: List[FrozenSet] = []
    merged = frozenset().union(*blocked_sets) if blocked_sets else frozenset()
    if compatible(merged):
        candidates.append(merged)
    candidates.extend(blocked_sets)
    candidates.append(frozenset())
    tried = set()
    for blocked in candidates[:WITNESS_ATTEMPTS]:
        polarity = _polarity_avoiding(pf, frozenset(e for e in blocked if isinstance(e, Entry)))
        key = tuple(sorted(polarity.items()))
        if key in tried:
            continue
        tried.add(key)
        counters["witness_selections"] += 1
        witness = _selection_witness(pf, polarity)
        if witness is not None:
            return witness
    if 2**pf.m > cap:
        logger.info(f"Witness search skipped: 2^{pf.m} selections exceed cap {cap}")
        return None
    for choice in product((1, 2), repeat=pf.m):
        polarity = dict(enumerate(choice, start=1))
        if tuple(sorted(polarity.items())) in tried:
            continue
        counters["witness_selections"] += 1
        witness = _selection_witness(pf, polarity)
        if witness is not None:
            return witness
    return None


def _claim(claim: str, holds: Optional[bool], detail: str = "") -> Dict[str, object]:
    return {"claim": claim, "holds": holds, "detail": detail}


def decide(
    pf: PivotedFormula,
    budget_scale: float = 1.0,
    check_claims: bool = False,
    chain_cap: int = DEFAULT_CHAIN_CAP,
    entails_cap: int = DEFAULT_ENTAILS_CAP,
    trace: Optional[TraceHook] = None,
) -> Verdict:
    """
    Full pipeline verdict. UNSAT only when every closed digraph yields an
    empty set of nested antichains; no NEC literal means SAT.
    """
    if not pf.is_complete():
        raise ContractViolation("decide requires a complete pivoted formula")
    counters = Counters()
    g = build_cylinder(pf)
    counters.record("cylinder_vertices", g.number_of_nodes())
    counters.record("cylinder_edges", g.number_of_edges())
    if trace is not None:
        trace("cylinder", g)

    nec = nec_literals(g)
    counters.record("nec_atoms", len(nec))
    per_closed: List[Dict[str, object]] = []
    claims: List[Dict[str, object]] = []
    blocked_sets: List[FrozenSet] = []

    for cd in build_closed_digraphs(g):
        row: Dict[str, object] = {
            "nec_atom": cd.nec_atom,
            "closed_vertices": cd.graph.number_of_nodes(),
            "closed_edges": cd.graph.number_of_edges(),
        }
        per_closed.append(row)
        counters["closed_size"] += cd.size()
        try:
            lin = linearize(cd, budget_scale, trace)
            row["columns"] = lin.counters["columns"]
            row["fresh_pairs"] = lin.counters["fresh_pairs"]
            row["counters"] = dict(lin.counters)
            counters["linearize_rewrites"] += lin.counters["linearize_rewrites"]
            counters["linearize_budget"] += lin.counters["linearize_budget"]
            stats: Dict[str, int] = {}
            nested = build_nested_antichains(lin, budget_scale, stats)
            row["counters"].update(stats)
            counters["nested_work"] += stats.get("nested_work", 0)
            counters["nested_budget"] += stats.get("nested_budget", 0)
        except BudgetExceeded as e:
            row["abort"] = str(e)
            counters.record(f"{e.stage}_measured", e.measured)
            counters.record(f"{e.stage}_bound", e.bound)
            logger.warning(f"Pipeline abort on closed digraph {cd.nec_atom}: {e}")
            return Verdict.abort(
                f"{e.stage}: {e.claim}",
                counters.as_dict(),
                stage=e.stage,
                per_closed_digraph=per_closed,
                claim_checks=claims,
            )
        row["antichain_set_empty"] = not nested
        row["fresh_labels"] = [
            {"pair": fresh_name(serial), "branching": show_vertex(v)}
            for serial, v in lin.registry
        ]
        if nested:
            try:
                found = maximal_nested_paths(nested[0], lin)
            except BudgetExceeded:
                found = []
            if found:
                blocked_sets.append(found[0].label)
        if check_claims:
            claims.extend(_claims_for(cd, lin, bool(nested), pf.m, chain_cap, entails_cap))

    if nec and all(row["antichain_set_empty"] for row in per_closed):
        return Verdict(
            Status.UNSAT,
            counters=counters.as_dict(),
            details={"per_closed_digraph": per_closed, "claim_checks": claims, "nec": nec},
        )

    witness = extract_witness(pf, blocked_sets, entails_cap, counters)
    if witness is None:
        counters["witness_missing"] += 1
    claims.append(
        _claim(
            "witness-extraction",
            witness is not None,
            "" if witness is not None else "no block selection is 2-satisfiable",
        )
    )
    details: Dict[str, object] = {
        "per_closed_digraph": per_closed,
        "claim_checks": claims,
        "nec": nec,
    }
    if not nec:
        details["note"] = "no NEC literal"
    return Verdict(Status.SAT, witness=witness, counters=counters.as_dict(), details=details)


def _claims_for(
    cd: ClosedDigraph,
    lin: LinearizedDigraph,
    nested_nonempty: bool,
    m: int,
    chain_cap: int,
    entails_cap: int,
) -> List[Dict[str, object]]:
    tag = f"closed digraph {cd.nec_atom}"
    try:
        report = searchall_check(cd, m, chain_cap, entails_cap)
    except BudgetExceeded as e:
        return [_claim("three-way-criterion", None, f"{tag}: untested, {e}")]
    in_columns = column_antichain_exists(lin)
    checks = [
        _claim(
            "three-way-criterion",
            report.agree,
            f"{tag}: tau={report.tau} entails={report.entails} "
            f"antichain={report.compatible_antichain}",
        ),
        _claim(
            "antichain-preservation",
            report.compatible_antichain == in_columns,
            f"{tag}: chains={report.compatible_antichain} columns={in_columns}",
        ),
        _claim(
            "nested-search-exact",
            in_columns == nested_nonempty,
            f"{tag}: columns={in_columns} nested={nested_nonempty}",
        ),
    ]
    for check in checks:
        if check["holds"] is False:
            logger.warning(f"Falsification finding: {check['claim']} on {tag}")
    return checks
