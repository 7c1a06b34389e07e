"""
Tests for the worked fixtures and the DOT export.
"""

import pytest

from cylinder import build_cylinder, closed_digraph
from dot_export import TraceWriter, closed_to_dot, linearized_to_dot, to_dot
from fixtures import FULL_SQUARE, PSI1, PSI2, FixtureResult, lattice, run_fixtures
from formula import Status, brute_force_sat, evaluate
from linearize import linearize
from nested import decide
from pivot import lower
from schemas import FixtureResultSchema


class TestFixtures:
    """Test cases for fixture reproduction."""

    def test_worked_formulas_are_satisfiable(self):
        """Test the oracle on both worked formulas."""
        assert brute_force_sat(lower(PSI1)).status is Status.SAT
        assert brute_force_sat(lower(PSI2)).status is Status.SAT

    def test_name_filter(self):
        """Test that only the named fixtures run."""
        assert [row.name for row in run_fixtures(names=["lattice"])] == ["lattice"]

    def test_lattice_row(self):
        """Test that the lattice counts reproduce apart from the printed label count."""
        (row,) = run_fixtures(names=["lattice"])
        assert row.passed
        assert row.actual == "16 chains, 4 columns, 10 labels"
        assert row.printed == "16 chains, 4 columns, 8 labels"
        assert not row.claim_holds

    def test_full_square_row(self):
        """Test that the full square is rejected as printed."""
        (row,) = run_fixtures(names=["full-square"])
        assert row.passed
        assert (row.expected, row.actual, row.printed) == ("UNSAT", "UNSAT", "UNSAT")
        assert row.claim_holds

    def test_worked_rows_compare_against_the_oracle(self):
        """Test that the expected column is the oracle verdict, not the printed one."""
        rows = {row.name: row for row in run_fixtures(names=["psi1", "psi2"])}
        assert rows["psi1"].expected == "SAT"
        assert rows["psi1"].printed == "UNSAT"
        assert rows["psi2"].expected == "SAT"
        assert rows["psi2"].printed == "SAT"
        assert (rows["psi1"].actual, rows["psi2"].actual) == ("SAT", "SAT")
        assert rows["psi1"].passed and rows["psi2"].passed
        assert not rows["psi1"].claim_holds
        assert rows["psi2"].claim_holds

    @pytest.mark.parametrize("psi", [PSI1, PSI2], ids=["psi1", "psi2"])
    def test_worked_formulas_are_decided_with_a_witness(self, psi):
        """Test that decide returns SAT and a valuation satisfying the worked formula."""
        verdict = decide(psi)
        assert verdict.status is Status.SAT
        assert verdict.status is brute_force_sat(lower(psi)).status
        assert verdict.witness is not None
        assert evaluate(lower(psi), verdict.witness)

    def test_schema(self):
        """Test that the fixture document carries claim_holds."""
        row = FixtureResult("x", "SAT", "SAT", "SAT", True)
        data = FixtureResultSchema().dump(row)
        assert data["claim_holds"] is True
        assert data["detail"] == ""


class TestDot:
    """Test cases for Graphviz output."""

    def test_cylinder(self):
        """Test vertex and labeled edge lines."""
        text = to_dot(build_cylinder(PSI1))
        assert text.startswith('digraph "G" {\n  rankdir=TB;\n')
        assert '  "-1" -> "2" [label="11 12"];' in text
        assert text.endswith("}\n")

    def test_deterministic(self):
        """Test that two exports of one digraph are identical."""
        assert to_dot(build_cylinder(PSI2)) == to_dot(build_cylinder(PSI2))

    def test_name_is_quoted(self):
        """Test that quotes in names are escaped."""
        assert to_dot(lattice().graph, 'a"b').startswith('digraph "a\\"b" {')

    def test_closed_digraph_glue(self):
        """Test that the glued vertex is a double circle."""
        text = closed_to_dot(closed_digraph(build_cylinder(FULL_SQUARE), 1))
        assert text.startswith('digraph "closed-1" {')
        assert '  "(1,1)" [shape=doublecircle];' in text
        assert text.count("doublecircle") == 1

    def test_linearized_columns(self):
        """Test one cluster per column."""
        text = linearized_to_dot(linearize(lattice()))
        assert "subgraph cluster_4 {" in text
        assert "cluster_5" not in text
        assert 'label="column 1";' in text


class TestTraceWriter:
    """Test cases for the trace hook."""

    def test_numbered_files(self, tmp_path):
        """Test numbering and file-name sanitizing."""
        writer = TraceWriter(tmp_path / "t")
        g = lattice().graph
        writer("closed", g)
        writer("lift-root-(1,2)", g)
        names = [path.name for path in writer.written]
        assert names == ["000-closed.dot", "001-lift-root-_1_2_.dot"]
        assert writer.written[1].read_text().startswith('digraph "lift-root-(1,2)" {')
