"""
CNF data model, valuation semantics, DIMACS ingestion and the two exact
deciders used as ground truth: the brute-force oracle and the 2-SAT
implication-graph solver.
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

import networkx as nx

from config import DEFAULT_ORACLE_CAP
from instrument import BudgetExceeded, WorkCounter

logger = logging.getLogger(__name__)

Valuation = Dict[int, bool]


class ParseError(ValueError):
    """Raised when DIMACS or PCNF text cannot be read."""

    def __init__(self, line: int, message: str):
        self.line = line
        self.message = message
        super().__init__(f"line {line}: {message}")


class ContractViolation(ValueError):
    """Raised when an operation is called outside its precondition."""


class Status(str, Enum):
    SAT = "SAT"
    UNSAT = "UNSAT"
    ABORT = "ABORT"


@dataclass(frozen=True)
class Clause:
    """Disjunction of one to three signed-integer literals."""

    literals: Tuple[int, ...]

    def __post_init__(self):
        if not 1 <= len(self.literals) <= 3:
            raise ContractViolation(
                f"clause must hold 1 to 3 literals, got {len(self.literals)}"
            )
        if 0 in self.literals:
            raise ContractViolation("atom 0 is not a literal")
        if len(set(self.literals)) != len(self.literals):
            raise ContractViolation(f"duplicate literal in {self.literals}")

    def __len__(self):
        return len(self.literals)

    def __iter__(self):
        return iter(self.literals)

    @property
    def is_tautology(self) -> bool:
        return any(-lit in self.literals for lit in self.literals)


def make_clause(literals: Iterable[int]) -> Optional[Clause]:
    """
    Build a clause, collapsing duplicate literals.
    Returns None for a tautology ({l, ¬l} inside one clause).
    """
    seen: List[int] = []
    for lit in literals:
        if lit not in seen:
            seen.append(lit)
    if any(-lit in seen for lit in seen):
        logger.info(f"Dropping tautological clause {tuple(seen)}")
        return None
    return Clause(tuple(seen))


@dataclass(frozen=True)
class CnfFormula:
    num_atoms: int
    clauses: Tuple[Clause, ...] = ()

    def __post_init__(self):
        if self.num_atoms < 0:
            raise ContractViolation("num_atoms must be non-negative")
        for clause in self.clauses:
            for lit in clause:
                if abs(lit) > self.num_atoms:
                    raise ContractViolation(
                        f"literal {lit} exceeds num_atoms={self.num_atoms}"
                    )

    @classmethod
    def from_lists(
        cls, num_atoms: int, clause_lists: Iterable[Sequence[int]]
    ) -> "CnfFormula":
        clauses = []
        for lits in clause_lists:
            clause = make_clause(lits)
            if clause is not None:
                clauses.append(clause)
        return cls(num_atoms, tuple(clauses))

    def as_lists(self) -> List[List[int]]:
        return [list(c.literals) for c in self.clauses]

    def atoms(self) -> List[int]:
        """Atoms that actually occur in some clause, ascending."""
        return sorted({abs(lit) for c in self.clauses for lit in c})

    def max_width(self) -> int:
        return max((len(c) for c in self.clauses), default=0)


@dataclass(frozen=True)
class Verdict:
    status: Status
    witness: Optional[Valuation] = None
    abort_reason: Optional[str] = None
    counters: Dict[str, int] = field(default_factory=dict)
    details: Dict[str, object] = field(default_factory=dict)

    @classmethod
    def abort(cls, reason: str, counters: Optional[Dict[str, int]] = None, **details):
        return cls(
            Status.ABORT,
            abort_reason=reason,
            counters=dict(counters or {}),
            details=details,
        )


def literal_value(lit: int, v: Valuation) -> bool:
    value = v[abs(lit)]
    return value if lit > 0 else not value


def evaluate(f: CnfFormula, v: Valuation) -> bool:
    """Truth value of f under a valuation total over its atoms."""
    missing = [a for a in range(1, f.num_atoms + 1) if a not in v]
    if missing:
        raise ContractViolation(f"valuation is partial, missing atoms {missing[:5]}")
    return all(any(literal_value(lit, v) for lit in clause) for clause in f.clauses)


def brute_force_sat(
    f: CnfFormula, cap: Optional[int] = None, counter: Optional[WorkCounter] = None
) -> Verdict:
    """
    Exact verdict by backtracking over atoms 1..n in order, True first.

    A clause is checked as soon as its highest atom is assigned, which
    prunes every subtree below a falsified clause. SAT verdicts carry a
    total witness. A bounded counter, possibly shared with other runs,
    is ticked once per search node; crossing its bound aborts.
    """
    cap = DEFAULT_ORACLE_CAP if cap is None else cap
    n = f.num_atoms
    if n > cap:
        return Verdict.abort(
            f"oracle cap: {n} atoms exceeds cap {cap}", {"oracle_atoms": n}
        )

    closing: Dict[int, List[Clause]] = {}
    for clause in f.clauses:
        closing.setdefault(max(abs(lit) for lit in clause), []).append(clause)

    assignment: Valuation = {}
    nodes = 0

    def falsified(atom: int) -> bool:
        return any(
            not any(literal_value(lit, assignment) for lit in clause)
            for clause in closing.get(atom, ())
        )

    def search(atom: int) -> bool:
        nonlocal nodes
        if atom > n:
            return True
        for value in (True, False):
            nodes += 1
            if counter is not None:
                counter.tick()
            assignment[atom] = value
            if not falsified(atom) and search(atom + 1):
                return True
        del assignment[atom]
        return False

    # Clauses over no atoms cannot exist, so n == 0 is trivially SAT.
    try:
        found = search(1)
    except BudgetExceeded as e:
        return Verdict.abort(
            f"oracle budget: {e.measured} nodes exceed {e.bound}", {"oracle_nodes": nodes}
        )
    if found:
        return Verdict(Status.SAT, witness=dict(assignment), counters={"oracle_nodes": nodes})
    return Verdict(Status.UNSAT, counters={"oracle_nodes": nodes})


def implication_graph(f: CnfFormula) -> nx.DiGraph:
    """
    Implication digraph of a 2-CNF: (a ∨ b) yields ¬a → b and ¬b → a,
    a unit clause (a) yields ¬a → a. Every literal of every atom is a node.
    """
    g = nx.DiGraph()
    for atom in range(1, f.num_atoms + 1):
        g.add_node(atom)
        g.add_node(-atom)
    for index, clause in enumerate(f.clauses):
        if len(clause) == 1:
            (a,) = clause.literals
            g.add_edge(-a, a, clause=index)
        else:
            a, b = clause.literals
            g.add_edge(-a, b, clause=index)
            g.add_edge(-b, a, clause=index)
    return g


def implication_supported(f: CnfFormula, u: int, v: int) -> bool:
    """True iff the implication u → v is produced by some clause of f."""
    for clause in f.clauses:
        lits = set(clause.literals)
        if len(lits) == 1 and u == -v and v in lits:
            return True
        if len(lits) == 2 and lits == {-u, v}:
            return True
    return False


def solve_2sat(f: CnfFormula) -> Verdict:
    """
    Decide a 2-CNF through its implication digraph.

    UNSAT iff some atom a has both chains ¬a ⇒ … ⇒ a and a ⇒ … ⇒ ¬a; the
    verdict details carry that atom and both chains as literal lists.
    """
    if f.max_width() > 2:
        raise ContractViolation("solve_2sat accepts clauses of at most 2 literals")

    g = implication_graph(f)
    component = {}
    for index, scc in enumerate(nx.strongly_connected_components(g)):
        for lit in scc:
            component[lit] = index
    counters = {"implication_edges": g.number_of_edges()}

    for atom in range(1, f.num_atoms + 1):
        if component[atom] == component[-atom]:
            forcing_true = nx.shortest_path(g, -atom, atom)
            forcing_false = nx.shortest_path(g, atom, -atom)
            logger.debug(f"2-SAT contradiction on atom {atom}")
            return Verdict(
                Status.UNSAT,
                counters=counters,
                details={
                    "conjugated_atom": atom,
                    "chains": [forcing_true, forcing_false],
                },
            )

    condensed = nx.condensation(g, scc=None)
    order = {
        node: position
        for position, node in enumerate(nx.topological_sort(condensed))
    }
    mapping = condensed.graph["mapping"]
    witness = {
        atom: order[mapping[atom]] > order[mapping[-atom]]
        for atom in range(1, f.num_atoms + 1)
    }
    return Verdict(Status.SAT, witness=witness, counters=counters)


def parse_dimacs(text: Union[str, bytes]) -> CnfFormula:
    """Read DIMACS CNF restricted to clauses of at most three literals."""
    if isinstance(text, bytes):
        text = text.decode("utf-8")

    num_atoms: Optional[int] = None
    declared_clauses = 0
    clause_lists: List[List[int]] = []
    current: List[int] = []
    current_line = 0

    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("c"):
            continue
        if line.startswith("%"):
            break
        if line.startswith("p"):
            parts = line.split()
            if num_atoms is not None:
                raise ParseError(line_no, "duplicate header")
            if len(parts) != 4 or parts[1] != "cnf":
                raise ParseError(line_no, f"malformed header {line!r}")
            try:
                num_atoms, declared_clauses = int(parts[2]), int(parts[3])
            except ValueError:
                raise ParseError(line_no, f"malformed header {line!r}")
            if num_atoms < 0 or declared_clauses < 0:
                raise ParseError(line_no, "header counts must be non-negative")
            continue
        if num_atoms is None:
            raise ParseError(line_no, "clause before 'p cnf' header")
        for token in line.split():
            try:
                lit = int(token)
            except ValueError:
                raise ParseError(line_no, f"not an integer literal: {token!r}")
            if lit == 0:
                if not current:
                    raise ParseError(line_no, "empty clause")
                if len(set(current)) > 3:
                    raise ParseError(
                        line_no, f"clause length {len(set(current))} exceeds 3"
                    )
                clause_lists.append(current)
                current = []
                continue
            if abs(lit) > num_atoms:
                raise ParseError(
                    line_no, f"atom {abs(lit)} out of range 1..{num_atoms}"
                )
            if not current:
                current_line = line_no
            current.append(lit)

    if num_atoms is None:
        raise ParseError(1, "missing 'p cnf' header")
    if current:
        raise ParseError(current_line, "unterminated clause")
    if len(clause_lists) != declared_clauses:
        logger.warning(
            f"Header declares {declared_clauses} clauses, found {len(clause_lists)}"
        )
    return CnfFormula.from_lists(num_atoms, clause_lists)


def emit_dimacs(f: CnfFormula) -> str:
    lines = [f"p cnf {f.num_atoms} {len(f.clauses)}"]
    lines.extend(" ".join(str(lit) for lit in c.literals) + " 0" for c in f.clauses)
    return "\n".join(lines) + "\n"
