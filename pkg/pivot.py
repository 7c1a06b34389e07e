"""
Pivoted 3-SAT: translation from plain 3-CNF, completion of one-literal
pairs, lowering back to CNF, the PCNF text format and the oracle-backed
equisatisfiability certificate.
"""

import logging
import random
from collections import Counter
from dataclasses import dataclass
from enum import Enum
from typing import Dict, Iterable, List, Optional, Sequence, Set, Tuple, Union

from config import DEFAULT_ORACLE_CAP
from formula import (
    CnfFormula,
    ContractViolation,
    ParseError,
    Status,
    Verdict,
    brute_force_sat,
)
from instrument import WorkCounter

logger = logging.getLogger(__name__)

Pair = Tuple[int, ...]


class Provenance(str, Enum):
    ORIGINAL = "original"
    FRESH_R = "fresh-r"
    FRESH_T = "fresh-t"
    FRESH_COMPLETION = "fresh-completion"


@dataclass(frozen=True, order=True)
class Entry:
    """Block selector: pivot index i with polarity 1 (aᵢ) or 2 (¬aᵢ)."""

    pivot_index: int
    polarity: int

    def __post_init__(self):
        if self.pivot_index < 1 or self.polarity not in (1, 2):
            raise ContractViolation(f"invalid entry ({self.pivot_index},{self.polarity})")

    @property
    def conjugate(self) -> "Entry":
        return Entry(self.pivot_index, 3 - self.polarity)

    def __str__(self):
        return f"{self.pivot_index}{self.polarity}"


@dataclass(frozen=True)
class PivotBlock:
    pivot: int
    pairs: Tuple[Pair, ...] = ()

    def entry_literals(self) -> Set[int]:
        return {lit for pair in self.pairs for lit in pair}


@dataclass(frozen=True)
class PivotedFormula:
    """
    Blocks ordered a₁, ¬a₁, a₂, ¬a₂, ...; block 2i-1 always carries the
    positive pivot literal. Provenance is a sorted tuple of (atom, tag).
    """

    blocks: Tuple[PivotBlock, ...]
    provenance: Tuple[Tuple[int, str], ...]

    def __post_init__(self):
        if not self.blocks or len(self.blocks) % 2:
            raise ContractViolation("a pivoted formula needs two blocks per pivot")
        for positive, negative in zip(self.blocks[::2], self.blocks[1::2]):
            if positive.pivot <= 0 or negative.pivot != -positive.pivot:
                raise ContractViolation(
                    f"blocks {positive.pivot}/{negative.pivot} are not a conjugated pivot pair"
                )
        pivots = self.pivot_atoms()
        if len(set(pivots)) != len(pivots):
            raise ContractViolation("pivot atoms must be distinct")
        for block in self.blocks:
            for pair in block.pairs:
                if not 1 <= len(pair) <= 2 or 0 in pair:
                    raise ContractViolation(f"malformed pair {pair} in block {block.pivot}")
                if len(pair) == 2 and abs(pair[0]) == abs(pair[1]):
                    raise ContractViolation(f"pair {pair} repeats an atom")
            clash = {abs(lit) for lit in block.entry_literals()} & set(pivots)
            if clash:
                raise ContractViolation(
                    f"pivot atoms {sorted(clash)} occur as entry literals"
                )
        known = {atom for atom, _ in self.provenance}
        used = set(pivots) | {abs(lit) for b in self.blocks for lit in b.entry_literals()}
        if not used <= known:
            raise ContractViolation(f"atoms {sorted(used - known)} lack provenance")

    @property
    def m(self) -> int:
        return len(self.blocks) // 2

    @property
    def num_atoms(self) -> int:
        return max((atom for atom, _ in self.provenance), default=0)

    def pivot_atoms(self) -> List[int]:
        return [block.pivot for block in self.blocks[::2]]

    def provenance_map(self) -> Dict[int, str]:
        return dict(self.provenance)

    def entry_of(self, block_index: int) -> Entry:
        block = self.blocks[block_index]
        return Entry(block_index // 2 + 1, 1 if block.pivot > 0 else 2)

    def entries(self) -> Iterable[Tuple[Entry, PivotBlock]]:
        for index, block in enumerate(self.blocks):
            yield self.entry_of(index), block

    def is_complete(self) -> bool:
        return all(len(pair) == 2 for block in self.blocks for pair in block.pairs)

    def pair_count(self) -> int:
        return sum(len(block.pairs) for block in self.blocks)


@dataclass(frozen=True)
class TransformCertificate:
    original: CnfFormula
    pivoted: PivotedFormula
    original_verdict: Verdict
    pivoted_verdict: Verdict
    agree: bool

    @property
    def aborted(self) -> bool:
        return Status.ABORT in (self.original_verdict.status, self.pivoted_verdict.status)

    @property
    def abort_reason(self) -> Optional[str]:
        for verdict in (self.original_verdict, self.pivoted_verdict):
            if verdict.status is Status.ABORT:
                return verdict.abort_reason
        return None

    @property
    def original_atoms(self) -> int:
        return self.original.num_atoms

    @property
    def pivoted_atoms(self) -> int:
        return self.pivoted.num_atoms


class _AtomPool:
    def __init__(self, num_atoms: int):
        self.tags: Dict[int, str] = {
            atom: Provenance.ORIGINAL.value for atom in range(1, num_atoms + 1)
        }
        self.next_atom = num_atoms + 1

    def fresh(self, tag: Provenance) -> int:
        atom = self.next_atom
        self.next_atom += 1
        self.tags[atom] = tag.value
        return atom

    def provenance(self) -> Tuple[Tuple[int, str], ...]:
        return tuple(sorted(self.tags.items()))


def _independent_pivots(clauses: Sequence[Tuple[int, ...]], candidates: Set[int]) -> List[int]:
    """
    Greedy independent set: most occurrences first, ties to the lowest atom;
    an atom sharing a clause with a chosen pivot is skipped.
    """
    occurrences = Counter(abs(lit) for clause in clauses for lit in clause)
    neighbours: Dict[int, Set[int]] = {}
    for clause in clauses:
        atoms = {abs(lit) for lit in clause}
        for atom in atoms:
            neighbours.setdefault(atom, set()).update(atoms - {atom})

    chosen: List[int] = []
    blocked: Set[int] = set()
    for atom in sorted(candidates, key=lambda a: (-occurrences[a], a)):
        if atom in blocked:
            continue
        chosen.append(atom)
        blocked.update(neighbours.get(atom, ()))
    return chosen


def _split_on(clauses: Sequence[Tuple[int, ...]], atom: int):
    positive, negative = [], []
    for clause in clauses:
        if atom in clause:
            positive.append(tuple(lit for lit in clause if lit != atom))
        elif -atom in clause:
            negative.append(tuple(lit for lit in clause if lit != -atom))
    return positive, negative


def to_pivoted(f: CnfFormula) -> PivotedFormula:
    """
    Translate a 3-CNF into a pivoted formula.

    Unit clauses are padded with a fresh atom first. Stratum 1 pivots an
    independent set of original atoms. While the residual still holds a
    3-literal clause, each deeper stratum pivots an independent set of its
    atoms p through a fresh r constrained to r ≡ p. The remaining 2-CNF goes
    under a fresh pair {t, ¬t}.
    """
    if f.max_width() > 3:
        raise ContractViolation("to_pivoted expects clauses of at most 3 literals")

    pool = _AtomPool(f.num_atoms)
    residual: List[Tuple[int, ...]] = []
    for clause in f.clauses:
        if len(clause) == 1:
            (lit,) = clause.literals
            pad = pool.fresh(Provenance.FRESH_COMPLETION)
            residual.extend([(lit, pad), (lit, -pad)])
        else:
            residual.append(clause.literals)

    blocks: List[PivotBlock] = []
    strata = 0

    def take(pivots: Sequence[int]) -> List[Tuple[int, ...]]:
        pivot_set = set(pivots)
        return [c for c in residual if not pivot_set & {abs(lit) for lit in c}]

    first = _independent_pivots(residual, {abs(lit) for c in residual for lit in c})
    if first:
        strata = 1
        for atom in first:
            positive, negative = _split_on(residual, atom)
            blocks.append(PivotBlock(atom, tuple(positive)))
            blocks.append(PivotBlock(-atom, tuple(negative)))
        logger.debug(f"Stratum 1 pivots: {first}")
        residual = take(first)

    while any(len(c) == 3 for c in residual):
        strata += 1
        wide = [c for c in residual if len(c) == 3]
        chosen = _independent_pivots(residual, {abs(lit) for c in wide for lit in c})
        for atom in chosen:
            positive, negative = _split_on(residual, atom)
            r = pool.fresh(Provenance.FRESH_R)
            blocks.append(PivotBlock(r, tuple(positive) + ((-atom,),)))
            blocks.append(PivotBlock(-r, tuple(negative) + ((atom,),)))
        logger.debug(f"Stratum {strata} re-pivots atoms {chosen} through fresh r")
        residual = take(chosen)

    if residual or not blocks:
        t = pool.fresh(Provenance.FRESH_T)
        tail = tuple(residual)
        blocks.append(PivotBlock(t, tail))
        blocks.append(PivotBlock(-t, tail))

    pf = PivotedFormula(tuple(blocks), pool.provenance())
    distinct = len(f.atoms())
    fresh_pivots = sum(1 for a in pf.pivot_atoms() if a > f.num_atoms)
    if len(pf.blocks) > 2 * (distinct + fresh_pivots + 1):
        raise ContractViolation(
            f"pivot block count {len(pf.blocks)} exceeds the polynomial size bound"
        )
    return pf


def complete(pf: PivotedFormula) -> PivotedFormula:
    """Replace every one-literal pair (q) by (q ∨ r), (q ∨ ¬r) with a fresh r."""
    if pf.is_complete():
        return pf
    tags = pf.provenance_map()
    next_atom = pf.num_atoms + 1
    blocks = []
    for block in pf.blocks:
        pairs: List[Pair] = []
        for pair in block.pairs:
            if len(pair) == 2:
                pairs.append(pair)
                continue
            (q,) = pair
            r = next_atom
            next_atom += 1
            tags[r] = Provenance.FRESH_COMPLETION.value
            pairs.extend([(q, r), (q, -r)])
        blocks.append(PivotBlock(block.pivot, tuple(pairs)))
    return PivotedFormula(tuple(blocks), tuple(sorted(tags.items())))


def lower(pf: PivotedFormula) -> CnfFormula:
    """CNF reading of any pivoted formula: one clause (pivot ∨ pair) per pair."""
    clause_lists = [
        (block.pivot,) + pair for block in pf.blocks for pair in block.pairs
    ]
    return CnfFormula.from_lists(pf.num_atoms, clause_lists)


def pivoted_to_cnf(pf: PivotedFormula) -> CnfFormula:
    if not pf.is_complete():
        raise ContractViolation("pivoted_to_cnf requires a complete pivoted formula")
    return lower(pf)


def certify_equisat(
    f: CnfFormula,
    pf: PivotedFormula,
    cap: Optional[int] = None,
    node_budget: Optional[int] = None,
) -> TransformCertificate:
    """
    Run the oracle on f and on the CNF reading of pf. Each side must fit
    the atom cap, and both searches draw on one node budget, 2^(cap+1) by
    default. An exceeded cap or budget yields an ABORT verdict on that
    side and agree=False.
    """
    cap = DEFAULT_ORACLE_CAP if cap is None else cap
    if node_budget is None:
        node_budget = 2 ** (cap + 1)
    counter = WorkCounter("oracle", "combined oracle enumeration stays within budget", node_budget)
    original_verdict = brute_force_sat(f, cap, counter)
    pivoted_verdict = brute_force_sat(lower(pf), cap, counter)
    agree = (
        Status.ABORT not in (original_verdict.status, pivoted_verdict.status)
        and original_verdict.status == pivoted_verdict.status
    )
    if not agree:
        logger.warning(
            f"Transform certificate disagrees: {original_verdict.status.value} vs "
            f"{pivoted_verdict.status.value}"
        )
    return TransformCertificate(f, pf, original_verdict, pivoted_verdict, agree)


def mutate_entry(pf: PivotedFormula, rng: random.Random) -> PivotedFormula:
    """Flip the sign of one entry literal chosen by rng."""
    sites = [
        (b, p, k)
        for b, block in enumerate(pf.blocks)
        for p, pair in enumerate(block.pairs)
        for k in range(len(pair))
    ]
    if not sites:
        return pf
    b, p, k = rng.choice(sites)
    block = pf.blocks[b]
    pair = list(block.pairs[p])
    pair[k] = -pair[k]
    pairs = block.pairs[:p] + (tuple(pair),) + block.pairs[p + 1 :]
    blocks = pf.blocks[:b] + (PivotBlock(block.pivot, pairs),) + pf.blocks[b + 1 :]
    return PivotedFormula(blocks, pf.provenance)


def emit_pcnf(pf: PivotedFormula) -> str:
    lines = [f"c prov {atom} {tag}" for atom, tag in pf.provenance]
    lines.append(f"p pcnf {pf.m}")
    for block in pf.blocks:
        body = " ; ".join(" ".join(str(lit) for lit in pair) for pair in block.pairs)
        lines.append(f"b {block.pivot} : {body}".rstrip())
    return "\n".join(lines) + "\n"


def parse_pcnf(text: Union[str, bytes]) -> PivotedFormula:
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    valid_tags = {tag.value for tag in Provenance}
    tags: Dict[int, str] = {}
    m: Optional[int] = None
    blocks: List[PivotBlock] = []

    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("c"):
            parts = line.split()
            if len(parts) >= 2 and parts[1] == "prov":
                if len(parts) != 4 or parts[3] not in valid_tags:
                    raise ParseError(line_no, f"malformed provenance line {line!r}")
                try:
                    tags[int(parts[2])] = parts[3]
                except ValueError:
                    raise ParseError(line_no, f"malformed provenance atom {parts[2]!r}")
            continue
        if line.startswith("p"):
            parts = line.split()
            if m is not None:
                raise ParseError(line_no, "duplicate header")
            if len(parts) != 3 or parts[1] != "pcnf" or not parts[2].isdigit():
                raise ParseError(line_no, f"malformed header {line!r}")
            m = int(parts[2])
            continue
        if not line.startswith("b"):
            raise ParseError(line_no, f"unexpected line {line!r}")
        if m is None:
            raise ParseError(line_no, "block before 'p pcnf' header")
        head, sep, body = line[1:].partition(":")
        if not sep:
            raise ParseError(line_no, "block line lacks ':'")
        try:
            pivot = int(head)
            pairs = tuple(
                tuple(int(tok) for tok in chunk.split())
                for chunk in body.split(";")
                if chunk.strip()
            )
        except ValueError:
            raise ParseError(line_no, f"non-integer literal in {line!r}")
        if any(not 1 <= len(pair) <= 2 for pair in pairs):
            raise ParseError(line_no, "pairs must hold one or two literals")
        blocks.append(PivotBlock(pivot, pairs))

    if m is None:
        raise ParseError(1, "missing 'p pcnf' header")
    if len(blocks) != 2 * m:
        raise ParseError(len(text.splitlines()), f"expected {2 * m} blocks, found {len(blocks)}")
    if not tags:
        used = {abs(b.pivot) for b in blocks} | {
            abs(lit) for b in blocks for lit in b.entry_literals()
        }
        tags = {atom: Provenance.ORIGINAL.value for atom in used}
    try:
        return PivotedFormula(tuple(blocks), tuple(sorted(tags.items())))
    except ContractViolation as e:
        raise ParseError(len(text.splitlines()), str(e))


def pivoted_from_lists(
    blocks: Sequence[Tuple[int, Sequence[Sequence[int]]]],
    provenance: Optional[Dict[int, str]] = None,
) -> PivotedFormula:
    """Convenience constructor: [(pivot, [[p, q], ...]), ...]."""
    built = tuple(
        PivotBlock(pivot, tuple(tuple(pair) for pair in pairs)) for pivot, pairs in blocks
    )
    if provenance is None:
        used = {abs(b.pivot) for b in built} | {
            abs(lit) for b in built for lit in b.entry_literals()
        }
        provenance = {atom: Provenance.ORIGINAL.value for atom in used}
    return PivotedFormula(built, tuple(sorted(provenance.items())))
