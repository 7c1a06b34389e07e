"""
Worked instances with known outcomes.

PSI1 and PSI2 are the two pivoted formulas of the running example, over
p1=1, q1=2, q2=3 with pivots a1=4 and a2=5. The printed text calls PSI1
unsatisfiable, but the exact oracle finds p1=T, a2=T satisfying it, so a
fixture passes when the pipeline agrees with the oracle and the printed
claim is reported beside it.

LATTICE_EDGES is the eight-vertex closed digraph p1..p8 with sixteen
chains used to illustrate linearization.

FULL_SQUARE holds all four pairs over two atoms in both blocks of one
pivot: the smallest instance the pipeline has to reject.
"""

import logging
from dataclasses import dataclass
from typing import List, Optional

from cylinder import chains_bruteforce, generic_closed_digraph
from formula import Status, brute_force_sat
from linearize import is_linear, labels_preserved, linearize
from nested import decide
from pivot import PivotedFormula, lower, pivoted_from_lists

logger = logging.getLogger(__name__)

PSI1 = pivoted_from_lists(
    [
        (4, [[1, 2], [1, -2]]),
        (-4, [[1, 2], [1, -2]]),
        (5, [[-1, 3], [-1, -3]]),
        (-5, [[1, 3], [1, -3]]),
    ]
)

PSI2 = pivoted_from_lists(
    [
        (4, [[1, 2], [-1, 3]]),
        (-4, [[1, 2], [-1, 3]]),
        (5, [[1, -2], [-1, -3]]),
        (-5, [[1, -2], [-1, 3]]),
    ]
)

SQUARE = [[1, 2], [1, -2], [-1, 2], [-1, -2]]
FULL_SQUARE = pivoted_from_lists([(3, SQUARE), (-3, SQUARE)])

LATTICE_EDGES = [
    ("p1", "p3"),
    ("p1", "p4"),
    ("p2", "p3"),
    ("p2", "p4"),
    ("p3", "p5"),
    ("p3", "p6"),
    ("p4", "p5"),
    ("p4", "p6"),
    ("p5", "p7"),
    ("p5", "p8"),
    ("p6", "p7"),
    ("p6", "p8"),
]
LATTICE_CHAINS = 16
LATTICE_COLUMNS = 4

# Ten distinct labels, not the eight of the printed display. add_label in
# linearize.py puts a fresh pair's positive side on Down and its negative
# side on Up of the lifted vertex, so the four columns carry the labels
#   ¬a ¬b ¬c | ¬a c | a c      ¬a ¬b ¬c | ¬b c | b c
#   ¬a ¬b ¬d | ¬a d | a d      ¬a ¬b ¬d | ¬b d | b d
# and the middle edges keep only the pairs of their own up/down sets.
# test_linearize.py::TestLinearize::test_lattice_column_labels pins this.
LATTICE_DISTINCT_LABELS = 10


@dataclass(frozen=True)
class FixtureResult:
    name: str
    printed: str
    expected: str
    actual: str
    passed: bool
    detail: str = ""

    @property
    def claim_holds(self) -> bool:
        return self.printed == self.actual


def lattice():
    return generic_closed_digraph(LATTICE_EDGES)


def _formula_row(name: str, pf: PivotedFormula, printed: Status, budget_scale: float) -> FixtureResult:
    oracle = brute_force_sat(lower(pf))
    verdict = decide(pf, budget_scale=budget_scale)
    passed = verdict.status == oracle.status
    if not passed:
        logger.warning(f"Fixture {name}: pipeline {verdict.status.value} vs oracle {oracle.status.value}")
    return FixtureResult(
        name,
        printed.value,
        oracle.status.value,
        verdict.status.value,
        passed,
        verdict.abort_reason or "",
    )


def _lattice_row(budget_scale: float) -> FixtureResult:
    cd = lattice()
    chains = len(chains_bruteforce(cd, cap=LATTICE_CHAINS * 4))
    lin = linearize(cd, budget_scale)
    labels = len(lin.distinct_labels())
    passed = (
        chains == LATTICE_CHAINS
        and len(lin.columns) == LATTICE_COLUMNS
        and labels == LATTICE_DISTINCT_LABELS
        and is_linear(lin.graph)
        and labels_preserved(lin)
    )
    expected = f"{LATTICE_CHAINS} chains, {LATTICE_COLUMNS} columns, {LATTICE_DISTINCT_LABELS} labels"
    actual = f"{chains} chains, {len(lin.columns)} columns, {labels} labels"
    printed = f"{LATTICE_CHAINS} chains, {LATTICE_COLUMNS} columns, 8 labels"
    return FixtureResult("lattice", printed, expected, actual, passed)


def run_fixtures(budget_scale: float = 1.0, names: Optional[List[str]] = None) -> List[FixtureResult]:
    rows = [
        _formula_row("psi1", PSI1, Status.UNSAT, budget_scale),
        _formula_row("psi2", PSI2, Status.SAT, budget_scale),
        _formula_row("full-square", FULL_SQUARE, Status.UNSAT, budget_scale),
        _lattice_row(budget_scale),
    ]
    if names:
        rows = [row for row in rows if row.name in names]
    return rows
