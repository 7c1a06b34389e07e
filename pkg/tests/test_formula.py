"""
Tests for the CNF model, the brute-force oracle, the 2-SAT solver and
DIMACS ingestion.
"""

from itertools import combinations, combinations_with_replacement

import pytest
from hypothesis import given, settings as hyp_settings

from formula import (
    Clause,
    CnfFormula,
    ContractViolation,
    ParseError,
    Status,
    brute_force_sat,
    emit_dimacs,
    evaluate,
    implication_graph,
    implication_supported,
    make_clause,
    parse_dimacs,
    solve_2sat,
)
from instrument import WorkCounter
from tests.conftest import cnf_formulas


class TestClause:
    """Test cases for clause construction."""

    def test_make_clause_collapses_duplicates(self):
        """Test that repeated literals collapse into one."""
        assert make_clause([1, 1, 2]).literals == (1, 2)

    def test_make_clause_drops_tautology(self):
        """Test that a clause holding x and ¬x is dropped."""
        assert make_clause([1, -1, 2]) is None

    def test_clause_rejects_four_literals(self):
        """Test that clauses are capped at three literals."""
        with pytest.raises(ContractViolation):
            Clause((1, 2, 3, 4))

    def test_clause_rejects_atom_zero(self):
        """Test that 0 is not a literal."""
        with pytest.raises(ContractViolation):
            Clause((0, 1))

    def test_clause_rejects_raw_duplicates(self):
        """Test that the dataclass itself refuses duplicates."""
        with pytest.raises(ContractViolation):
            Clause((2, 2))

    def test_is_tautology(self):
        """Test the tautology flag on a hand-built clause."""
        assert Clause((1, -1)).is_tautology
        assert not Clause((1, 2)).is_tautology


class TestCnfFormula:
    """Test cases for the formula container."""

    def test_from_lists_drops_tautologies(self):
        """Test that tautological clauses never reach the formula."""
        f = CnfFormula.from_lists(3, [[1, -1, 2], [2, 3]])
        assert f.as_lists() == [[2, 3]]

    def test_literal_out_of_range(self):
        """Test that literals above num_atoms are refused."""
        with pytest.raises(ContractViolation):
            CnfFormula.from_lists(2, [[3]])

    def test_atoms_and_width(self):
        """Test that atoms() lists only occurring atoms."""
        f = CnfFormula.from_lists(5, [[1, -3], [3, 4, -1]])
        assert f.atoms() == [1, 3, 4]
        assert f.max_width() == 3
        assert CnfFormula(4).max_width() == 0


class TestEvaluate:
    """Test cases for valuation semantics."""

    def test_evaluate(self, single_clause):
        """Test a satisfying and a falsifying valuation."""
        assert evaluate(single_clause, {1: False, 2: False, 3: True})
        assert not evaluate(single_clause, {1: False, 2: False, 3: False})

    def test_partial_valuation_rejected(self, single_clause):
        """Test that evaluate needs every atom."""
        with pytest.raises(ContractViolation):
            evaluate(single_clause, {1: True})

    def test_empty_formula_is_true(self):
        """Test that the empty conjunction holds."""
        assert evaluate(CnfFormula(2), {1: False, 2: False})


class TestBruteForce:
    """Test cases for the exact oracle."""

    def test_sat_with_witness(self, single_clause):
        """Test that SAT verdicts carry a satisfying total witness."""
        verdict = brute_force_sat(single_clause)
        assert verdict.status is Status.SAT
        assert set(verdict.witness) == {1, 2, 3}
        assert evaluate(single_clause, verdict.witness)
        assert verdict.counters["oracle_nodes"] >= 3

    def test_unsat(self, contradiction, square_2cnf):
        """Test two unsatisfiable formulas."""
        assert brute_force_sat(contradiction).status is Status.UNSAT
        assert brute_force_sat(square_2cnf).status is Status.UNSAT

    def test_cap_aborts(self):
        """Test that too many atoms turn into an ABORT, not a guess."""
        verdict = brute_force_sat(CnfFormula(5), cap=3)
        assert verdict.status is Status.ABORT
        assert "oracle cap" in verdict.abort_reason
        assert verdict.counters == {"oracle_atoms": 5}

    def test_shared_counter_aborts(self, square_2cnf):
        """Test that a bounded counter spans several runs and aborts the one that crosses it."""
        counter = WorkCounter("oracle", "shared", 6)
        first = brute_force_sat(CnfFormula.from_lists(3, [[1, 2, 3]]), counter=counter)
        assert first.status is Status.SAT
        assert counter.count == 3
        second = brute_force_sat(square_2cnf, counter=counter)
        assert second.status is Status.ABORT
        assert "oracle budget" in second.abort_reason

    def test_zero_atoms(self):
        """Test that the formula over no atoms is SAT with an empty witness."""
        verdict = brute_force_sat(CnfFormula(0))
        assert verdict.status is Status.SAT
        assert verdict.witness == {}

    @hyp_settings(max_examples=60, deadline=None)
    @given(cnf_formulas(max_atoms=5, max_clauses=8))
    def test_witness_always_satisfies(self, f):
        """Test that every SAT witness evaluates to true."""
        verdict = brute_force_sat(f)
        if verdict.status is Status.SAT:
            assert evaluate(f, verdict.witness)


class TestTwoSat:
    """Test cases for the implication-graph 2-SAT solver."""

    def test_implication_graph(self):
        """Test that each 2-clause yields its two implications."""
        g = implication_graph(CnfFormula.from_lists(3, [[1, 2]]))
        assert g.number_of_nodes() == 6
        assert set(g.edges) == {(-1, 2), (-2, 1)}

    def test_unit_clause_implication(self):
        """Test that a unit clause (a) becomes ¬a → a."""
        g = implication_graph(CnfFormula.from_lists(1, [[-1]]))
        assert set(g.edges) == {(1, -1)}

    def test_implication_supported(self):
        """Test the clause-support lookup for single implications."""
        f = CnfFormula.from_lists(2, [[1, 2], [-1]])
        assert implication_supported(f, -1, 2)
        assert implication_supported(f, -2, 1)
        assert implication_supported(f, 1, -1)
        assert not implication_supported(f, 1, 2)

    def test_unsat_reports_conjugated_chains(self, square_2cnf):
        """Test that UNSAT carries chains ¬a ⇒ a and a ⇒ ¬a."""
        verdict = solve_2sat(square_2cnf)
        assert verdict.status is Status.UNSAT
        atom = verdict.details["conjugated_atom"]
        forcing_true, forcing_false = verdict.details["chains"]
        assert forcing_true[0] == -atom and forcing_true[-1] == atom
        assert forcing_false[0] == atom and forcing_false[-1] == -atom
        g = implication_graph(square_2cnf)
        for chain in (forcing_true, forcing_false):
            assert all(g.has_edge(u, v) for u, v in zip(chain, chain[1:]))

    def test_rejects_wide_clauses(self, single_clause):
        """Test that 3-clauses are outside the solver's contract."""
        with pytest.raises(ContractViolation):
            solve_2sat(single_clause)

    def test_witness_covers_unused_atoms(self):
        """Test that the witness is total over 1..n."""
        verdict = solve_2sat(CnfFormula.from_lists(4, [[1, -2]]))
        assert verdict.status is Status.SAT
        assert set(verdict.witness) == {1, 2, 3, 4}

    @hyp_settings(max_examples=100, deadline=None)
    @given(cnf_formulas(max_atoms=5, max_clauses=10, max_width=2))
    def test_agrees_with_oracle(self, f):
        """Test 2-SAT against brute force on random 2-CNFs."""
        expected = brute_force_sat(f)
        verdict = solve_2sat(f)
        assert verdict.status == expected.status
        if verdict.status is Status.SAT:
            assert evaluate(f, verdict.witness)

    def test_exhaustive_three_atom_family(self):
        """Test 2-SAT against brute force on every 1..6 two-literal clauses over 3 atoms."""
        pool = [
            (sa * a, sb * b)
            for a, b in combinations((1, 2, 3), 2)
            for sa in (1, -1)
            for sb in (1, -1)
        ]
        assert len(pool) == 12
        checked = 0
        for size in range(1, 7):
            for clause_lists in combinations_with_replacement(pool, size):
                f = CnfFormula.from_lists(3, clause_lists)
                verdict = solve_2sat(f)
                assert verdict.status == brute_force_sat(f).status, clause_lists
                if verdict.status is Status.SAT:
                    assert evaluate(f, verdict.witness), clause_lists
                checked += 1
        assert checked == 18563

    def test_exhaustive_three_atom_family_with_units(self):
        """Test 2-SAT against brute force on up to 3 unit or 2-clauses over 3 atoms."""
        pool = [(lit,) for lit in (1, -1, 2, -2, 3, -3)] + [
            (sa * a, sb * b)
            for a, b in combinations((1, 2, 3), 2)
            for sa in (1, -1)
            for sb in (1, -1)
        ]
        for size in range(1, 4):
            for clause_lists in combinations_with_replacement(pool, size):
                f = CnfFormula.from_lists(3, clause_lists)
                verdict = solve_2sat(f)
                assert verdict.status == brute_force_sat(f).status, clause_lists
                if verdict.status is Status.SAT:
                    assert evaluate(f, verdict.witness), clause_lists


class TestDimacs:
    """Test cases for DIMACS reading and writing."""

    def test_parse_basic(self):
        """Test a header, a comment and two clauses."""
        f = parse_dimacs("c example\np cnf 3 2\n1 -2 0\n2 3 0\n")
        assert f.num_atoms == 3
        assert f.as_lists() == [[1, -2], [2, 3]]

    def test_clause_across_lines(self):
        """Test that a clause may span several lines."""
        f = parse_dimacs("p cnf 3 1\n1 2\n3 0\n")
        assert f.as_lists() == [[1, 2, 3]]

    def test_percent_terminator(self):
        """Test that '%' ends the clause section."""
        f = parse_dimacs("p cnf 2 1\n1 2 0\n%\n0\n")
        assert f.as_lists() == [[1, 2]]

    def test_bytes_input(self):
        """Test that bytes are decoded as UTF-8."""
        assert parse_dimacs(b"p cnf 1 1\n-1 0\n").as_lists() == [[-1]]

    def test_emit_then_parse(self, deep_formula):
        """Test that emitted text reads back to the same clauses."""
        text = emit_dimacs(deep_formula)
        assert text.startswith("p cnf 5 3\n")
        assert parse_dimacs(text) == deep_formula

    @pytest.mark.parametrize(
        "text, line, fragment",
        [
            ("1 2 0\n", 1, "header"),
            ("p cnf 2 1\np cnf 2 1\n", 2, "duplicate header"),
            ("p dnf 2 1\n", 1, "malformed header"),
            ("p cnf 2 1\n1 3 0\n", 2, "out of range"),
            ("p cnf 4 1\n1 2 3 4 0\n", 2, "exceeds 3"),
            ("p cnf 2 1\n1 x 0\n", 2, "not an integer"),
            ("p cnf 2 1\n0\n", 2, "empty clause"),
            ("p cnf 2 1\n1 2\n", 2, "unterminated"),
            ("c nothing here\n", 1, "missing"),
        ],
    )
    def test_parse_errors(self, text, line, fragment):
        """Test that malformed input names the offending line."""
        with pytest.raises(ParseError) as excinfo:
            parse_dimacs(text)
        assert excinfo.value.line == line
        assert fragment in str(excinfo.value)
        assert str(excinfo.value).startswith(f"line {line}:")

    def test_count_mismatch_only_warns(self, caplog):
        """Test that a wrong clause count in the header is tolerated."""
        f = parse_dimacs("p cnf 2 5\n1 2 0\n")
        assert len(f.clauses) == 1
        assert "declares 5 clauses" in caplog.text
