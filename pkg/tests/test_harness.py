"""
Tests for the differential harness: generators, verdict classification,
sound suites, shrinking, bound probing, the mutation guard and campaigns.
"""

import io
import random

import pytest

import harness
from config import CampaignConfig, ConfigError, Settings
from formula import CnfFormula, ContractViolation, Status, Verdict
from harness import (
    ABORT,
    BOUND_BREACH,
    PROPERTY_VIOLATION,
    VERDICT_MISMATCH,
    Outcome,
    classify,
    generate_random_2cnf,
    generate_random_3cnf,
    generate_random_cnf,
    guard_failed,
    instance_seed,
    make_finding,
    mutation_guard,
    probe_bounds,
    run_campaign,
    run_completion_check,
    run_differential,
    run_transform_check,
    run_two_sat_check,
    shrink,
    write_scoreboard_csv,
)
from schemas import CampaignReportSchema, FindingSchema

SAT = Verdict(Status.SAT, witness={1: True})
UNSAT = Verdict(Status.UNSAT)


def _with_claims(*checks):
    return Verdict(
        Status.SAT,
        details={"claim_checks": [{"claim": c, "holds": h, "detail": ""} for c, h in checks]},
    )


class TestGenerators:
    """Test cases for random instance generation."""

    def test_3cnf_is_deterministic(self):
        """Test that one seed always draws the same formula."""
        cfg = CampaignConfig(min_atoms=3, max_atoms=5, min_clauses=1, max_clauses=10)
        assert generate_random_3cnf(cfg, 11) == generate_random_3cnf(cfg, 11)

    def test_3cnf_shape(self):
        """Test exact width, distinct clauses and size ranges."""
        cfg = CampaignConfig(min_atoms=3, max_atoms=5, min_clauses=2, max_clauses=10)
        for seed in range(20):
            f = generate_random_3cnf(cfg, seed)
            assert 3 <= f.num_atoms <= 5
            assert 2 <= len(f.clauses) <= 10
            assert all(len(c) == 3 for c in f.clauses)
            assert len(set(f.clauses)) == len(f.clauses)

    def test_2cnf_shape(self):
        """Test that the 2-SAT generator draws 2-clauses."""
        cfg = CampaignConfig(min_atoms=3, max_atoms=4, min_clauses=1, max_clauses=6)
        f = generate_random_2cnf(cfg, 3)
        assert f.max_width() == 2
        assert all(len(c) == 2 for c in f.clauses)

    def test_zero_clauses(self):
        """Test that max_clauses = 0 draws empty formulas."""
        cfg = CampaignConfig(min_clauses=0, max_clauses=0)
        assert generate_random_3cnf(cfg, 1).clauses == ()

    def test_too_many_clauses(self):
        """Test that more distinct clauses than exist is a config error."""
        with pytest.raises(ConfigError):
            generate_random_cnf(random.Random(0), 3, 9)

    def test_instance_seed(self):
        """Test that instance seeds depend on campaign seed and index."""
        cfg = CampaignConfig(seed=2)
        assert instance_seed(cfg, 5) == 2 * 1_000_003 + 5
        assert instance_seed(cfg, 5) != instance_seed(CampaignConfig(seed=3), 5)


class TestClassify:
    """Test cases for verdict classification."""

    def test_agreement(self):
        """Test that equal verdicts give no finding."""
        assert classify(SAT, SAT) == (None, None)

    def test_oracle_abort(self):
        """Test that an oracle ABORT is its own kind."""
        assert classify(Verdict.abort("cap"), SAT) == (ABORT, "oracle")

    def test_budget_breach(self):
        """Test that a budgeted stage ABORT is a bound breach."""
        pipeline = Verdict.abort("nested: x", stage="nested")
        assert classify(SAT, pipeline) == (BOUND_BREACH, "nested")

    def test_other_pipeline_abort(self):
        """Test that an ABORT without a budgeted stage stays an abort."""
        assert classify(SAT, Verdict.abort("?")) == (ABORT, "pipeline")

    def test_mismatch(self):
        """Test that differing statuses are a verdict mismatch."""
        assert classify(SAT, UNSAT) == (VERDICT_MISMATCH, "decide")

    def test_failing_claim(self):
        """Test that a failing claim check is a property violation."""
        pipeline = _with_claims(("three-way-criterion", True), ("nested-search-exact", False))
        assert classify(SAT, pipeline) == (PROPERTY_VIOLATION, "nested-search-exact")

    def test_informational_claim_is_ignored(self):
        """Test that a failed witness extraction is not a finding."""
        pipeline = _with_claims(("witness-extraction", False), ("antichain-preservation", None))
        assert classify(SAT, pipeline) == (None, None)


class TestDifferential:
    """Test cases for the oracle-versus-pipeline suite."""

    def test_agreement_on_a_single_clause(self, single_clause):
        """Test that both sides answer SAT on one clause."""
        outcome = run_differential(single_clause)
        assert outcome.agree
        assert outcome.oracle.status is Status.SAT
        assert outcome.pipeline.status is Status.SAT

    def test_starved_budget_is_a_bound_breach(self):
        """Test that a budget ABORT is classified with its stage."""
        square = CnfFormula.from_lists(2, [[1, 2], [1, -2], [-1, 2], [-1, -2]])
        outcome = run_differential(square, Settings(budget_scale=1e-9))
        assert outcome.kind == BOUND_BREACH
        assert outcome.stage == "linearize"


class TestSoundSuites:
    """Test cases for the suites whose claims are known to hold."""

    def test_transform(self, deep_formula):
        """Test the transform suite on a formula needing a fresh r."""
        assert run_transform_check(deep_formula).agree

    def test_completion(self):
        """Test the completion suite on a unit formula."""
        outcome = run_completion_check(CnfFormula.from_lists(2, [[1], [-2], [1, 2]]))
        assert outcome.agree
        assert outcome.oracle.status is Status.SAT

    def test_two_sat(self, square_2cnf):
        """Test the 2-SAT suite on an unsatisfiable 2-CNF."""
        outcome = run_two_sat_check(square_2cnf)
        assert outcome.agree
        assert outcome.pipeline.status is Status.UNSAT

    def test_oracle_cap_is_an_abort(self, deep_formula):
        """Test that a formula beyond the cap aborts the suite."""
        outcome = run_transform_check(deep_formula, Settings(oracle_cap=3))
        assert outcome.kind == ABORT


class TestShrink:
    """Test cases for greedy finding minimization."""

    def test_shrinks_to_the_culprit(self, monkeypatch):
        """Test that only the clause triggering the finding survives."""
        culprit = (1, 2, 3)

        def fake_runner(f, settings):
            hit = any(c.literals == culprit for c in f.clauses)
            return Outcome(SAT, UNSAT if hit else SAT, VERDICT_MISMATCH if hit else None)

        monkeypatch.setitem(harness.SUITE_RUNNERS, "differential", fake_runner)
        f = CnfFormula.from_lists(5, [[1, -4, 5], [1, 2, 3], [-2, 4, 5], [3, 4, -5]])
        finding = make_finding(7, "differential", f, fake_runner(f, None))
        shrunk = shrink(finding)
        assert shrunk.instance.as_lists() == [[1, 2, 3]]
        assert shrunk.instance.num_atoms == 3
        assert shrunk.original_clauses == 4
        assert shrunk.index == 7
        assert shrunk.kind == VERDICT_MISMATCH

    def test_compaction_renumbers_atoms(self, monkeypatch):
        """Test that surviving atoms are renumbered to 1..k."""

        def fake_runner(f, settings):
            hit = any(len(c) == 2 for c in f.clauses)
            return Outcome(SAT, UNSAT if hit else SAT, VERDICT_MISMATCH if hit else None)

        monkeypatch.setitem(harness.SUITE_RUNNERS, "differential", fake_runner)
        f = CnfFormula.from_lists(6, [[1, 2, 3], [-4, 6]])
        finding = make_finding(0, "differential", f, fake_runner(f, None))
        shrunk = shrink(finding)
        assert shrunk.instance.as_lists() == [[-1, 2]]
        assert shrunk.instance.num_atoms == 2

    def test_abort_finding_keeps_its_atoms(self, deep_formula):
        """Test that an oracle-cap finding sheds clauses but not atoms."""
        settings = Settings(oracle_cap=3)
        finding = make_finding(
            0, "transform", deep_formula, run_transform_check(deep_formula, settings)
        )
        shrunk = shrink(finding, settings)
        assert shrunk.instance.clauses == ()
        assert shrunk.instance.num_atoms == 5

    def test_non_reproducing_finding(self, single_clause):
        """Test that a finding which no longer reproduces is refused."""
        finding = make_finding(
            0, "transform", single_clause, Outcome(SAT, UNSAT, VERDICT_MISMATCH)
        )
        with pytest.raises(ContractViolation):
            shrink(finding)

    def test_finding_serializes_as_dimacs(self, single_clause):
        """Test that the finding document carries the DIMACS instance."""
        outcome = Outcome(SAT, UNSAT, VERDICT_MISMATCH, "decide")
        finding = make_finding(3, "differential", single_clause, outcome)
        data = FindingSchema().dump(finding)
        assert data["instance"] == "p cnf 3 1\n1 2 3 0\n"
        assert data["oracle_status"] == "SAT"
        assert data["pipeline_status"] == "UNSAT"
        assert data["stage"] == "decide"


class TestBoundsAndGuard:
    """Test cases for bound probing and the mutation guard."""

    def test_probe_bounds(self, single_clause):
        """Test the three scoreboard rows of one instance."""
        rows = probe_bounds(single_clause, index=4)
        assert [row.claim for row in rows] == ["cylinder-size", "linear-lifting", "nested-filter"]
        assert all(row.instance == 4 for row in rows)
        assert rows[0].status == "pass"
        # no NEC literal, so nothing was linearized
        assert rows[1].status == "untested"

    def test_probe_bounds_on_abort(self):
        """Test that a budget ABORT becomes a failing row."""
        verdict = Verdict.abort(
            "linearize: x", {"linearize_measured": 9, "linearize_bound": 4}, stage="linearize"
        )
        rows = probe_bounds(CnfFormula(1), verdict=verdict)
        assert (rows[1].measured, rows[1].bound, rows[1].status) == (9, 4, "fail")

    def test_mutation_guard_detects_every_corruption(self, single_clause, contradiction):
        """Test that every flipped pipeline verdict is caught and no clean row is flagged."""
        guard = mutation_guard([single_clause, contradiction], mutations=20, seed=3)
        assert guard["mutations"] == 20
        assert guard["detected"] == 20
        assert guard["clean"] >= 1
        assert guard["false_positives"] == 0
        assert not guard_failed(guard)

    def test_mutation_guard_catches_an_eager_classifier(self, single_clause):
        """Test that a classifier flagging every row fails on the clean rows."""

        def eager(oracle, pipeline):
            return VERDICT_MISMATCH, "decide"

        guard = mutation_guard([single_clause], mutations=5, classifier=eager)
        assert guard["detected"] == 5
        assert guard["false_positives"] == guard["clean"] == 1
        assert guard_failed(guard)

    def test_mutation_guard_catches_a_blind_classifier(self, single_clause):
        """Test that a classifier flagging nothing misses every corruption."""
        guard = mutation_guard([single_clause], mutations=5, classifier=lambda o, p: (None, None))
        assert guard["detected"] == 0
        assert guard_failed(guard)

    def test_mutation_guard_disabled(self, single_clause):
        """Test that zero mutations report zeros."""
        assert mutation_guard([single_clause], mutations=0) == {
            "mutations": 0,
            "detected": 0,
            "clean": 0,
            "false_positives": 0,
        }
        assert not guard_failed(None)

    def test_scoreboard_csv(self, single_clause):
        """Test the CSV header and one row per claim."""
        stream = io.StringIO()
        write_scoreboard_csv(probe_bounds(single_clause), stream)
        lines = stream.getvalue().splitlines()
        assert lines[0] == "instance,claim,measured,bound,status"
        assert len(lines) == 4


class TestCampaign:
    """Test cases for whole campaigns."""

    def test_small_campaign(self, small_campaign):
        """Test totals, the guard and the sound suites of a small campaign."""
        report = run_campaign(small_campaign)
        assert report.totals["instances"] == 4
        for suite in small_campaign.suites:
            assert report.totals[f"{suite}_runs"] == 4
        guard = report.mutation_guard
        assert guard["clean"] == report.totals["agreements"]
        assert guard["mutations"] == (10 if guard["clean"] else 0)
        assert guard["detected"] == guard["mutations"]
        assert guard["false_positives"] == 0
        assert not [f for f in report.findings if f.suite != "differential"]
        assert 0.0 <= report.agreement_rate <= 1.0
        assert len(report.rows) == 12
        assert sum(report.scoreboard["pipeline-verdict"].values()) == 4
        assert report.scoreboard["transform-equisat"]["pass"] == 4

    def test_campaign_is_reproducible(self, small_campaign):
        """Test that equal configs give equal reports."""
        schema = CampaignReportSchema()
        first = schema.dump(run_campaign(small_campaign))
        second = schema.dump(run_campaign(small_campaign))
        assert first == second
        assert first["config"]["suites"] == list(small_campaign.suites)

    def test_campaign_without_differential(self):
        """Test that the guard is skipped without the differential suite."""
        cfg = CampaignConfig(instances=3, max_atoms=4, max_clauses=4, suites=("two_sat",))
        report = run_campaign(cfg)
        assert report.mutation_guard is None
        assert report.agreement_rate == 0.0
        assert report.findings == []
