"""
Differential campaigns: random instances, oracle-versus-pipeline
comparison, greedy shrinking of findings, bound probing and the
mutation guard that proves the comparison can fail.
"""

import csv
import logging
import random
from dataclasses import dataclass, field, replace
from typing import Callable, Dict, List, Optional, Sequence, TextIO, Tuple

from config import CampaignConfig, ConfigError, Settings
from formula import (
    CnfFormula,
    ContractViolation,
    Status,
    Verdict,
    brute_force_sat,
    emit_dimacs,
    evaluate,
    solve_2sat,
)
from nested import decide
from pivot import certify_equisat, complete, lower, to_pivoted
from schemas import BoundRowSchema, distinct_3clauses

logger = logging.getLogger(__name__)

VERDICT_MISMATCH = "verdict-mismatch"
PROPERTY_VIOLATION = "property-violation"
BOUND_BREACH = "bound-breach"
ABORT = "abort"

BUDGETED_STAGES = {"linearize", "nested"}

# Claim checks that are reported but never turn an instance into a finding.
INFORMATIONAL_CLAIMS = {"witness-extraction"}

SCOREBOARD_FIELDS = ["instance", "claim", "measured", "bound", "status"]


@dataclass(frozen=True)
class Finding:
    index: int
    suite: str
    kind: str
    instance: CnfFormula
    oracle_status: Status
    pipeline_status: Status
    stage: Optional[str] = None
    counters: Dict[str, int] = field(default_factory=dict)
    original_clauses: int = 0

    @property
    def dimacs(self) -> str:
        return emit_dimacs(self.instance)


@dataclass(frozen=True)
class Outcome:
    """One instance run: the two verdicts and the finding kind, if any."""

    oracle: Verdict
    pipeline: Verdict
    kind: Optional[str] = None
    stage: Optional[str] = None

    @property
    def agree(self) -> bool:
        return self.kind is None


@dataclass(frozen=True)
class BoundRow:
    instance: int
    claim: str
    measured: int
    bound: int
    status: str


@dataclass
class CampaignReport:
    config: Dict[str, object]
    totals: Dict[str, int]
    agreement_rate: float
    findings: List[Finding] = field(default_factory=list)
    scoreboard: Dict[str, Dict[str, int]] = field(default_factory=dict)
    mutation_guard: Optional[Dict[str, int]] = None
    rows: List[BoundRow] = field(default_factory=list)


def _random_clause(rng: random.Random, atoms: int, width: int) -> Tuple[int, ...]:
    chosen = sorted(rng.sample(range(1, atoms + 1), width))
    return tuple(a if rng.random() < 0.5 else -a for a in chosen)


def _distinct_clauses(atoms: int, width: int) -> int:
    if width == 3:
        return distinct_3clauses(atoms)
    if atoms < width:
        return 0
    return 4 * atoms * (atoms - 1) // 2


def generate_random_cnf(
    rng: random.Random, atoms: int, clauses: int, width: int = 3
) -> CnfFormula:
    """Uniform clauses of exactly `width` distinct atoms, no clause twice."""
    if clauses > _distinct_clauses(atoms, width):
        raise ConfigError(
            f"{clauses} distinct {width}-clauses do not exist over {atoms} atoms"
        )
    seen = set()
    picked: List[Tuple[int, ...]] = []
    while len(picked) < clauses:
        clause = _random_clause(rng, atoms, width)
        if clause not in seen:
            seen.add(clause)
            picked.append(clause)
    return CnfFormula.from_lists(atoms, picked)


def _draw_sizes(cfg: CampaignConfig, rng: random.Random, width: int) -> Tuple[int, int]:
    feasible = [
        a
        for a in range(max(cfg.min_atoms, width), cfg.max_atoms + 1)
        if _distinct_clauses(a, width) >= cfg.min_clauses
    ]
    if not feasible:
        raise ConfigError(
            f"no atom count in {cfg.min_atoms}..{cfg.max_atoms} admits "
            f"{cfg.min_clauses} distinct {width}-clauses"
        )
    atoms = rng.choice(feasible)
    ceiling = min(cfg.max_clauses, _distinct_clauses(atoms, width))
    clauses = rng.randint(cfg.min_clauses, ceiling)
    return atoms, clauses


def generate_random_3cnf(cfg: CampaignConfig, seed: int) -> CnfFormula:
    rng = random.Random(seed)
    if cfg.max_clauses == 0:
        return CnfFormula(rng.randint(cfg.min_atoms, cfg.max_atoms))
    atoms, clauses = _draw_sizes(cfg, rng, 3)
    return generate_random_cnf(rng, atoms, clauses)


def generate_random_2cnf(cfg: CampaignConfig, seed: int) -> CnfFormula:
    rng = random.Random(seed)
    if cfg.max_clauses == 0:
        return CnfFormula(rng.randint(cfg.min_atoms, cfg.max_atoms))
    atoms, clauses = _draw_sizes(cfg, rng, 2)
    return generate_random_cnf(rng, atoms, clauses, width=2)


def _failing_claim(verdict: Verdict) -> Optional[str]:
    for check in verdict.details.get("claim_checks", []):
        if check["holds"] is False and check["claim"] not in INFORMATIONAL_CLAIMS:
            return check["claim"]
    return None


def classify(oracle: Verdict, pipeline: Verdict) -> Tuple[Optional[str], Optional[str]]:
    """(finding kind, stage) for a pair of verdicts; (None, None) on agreement."""
    if oracle.status is Status.ABORT:
        return ABORT, "oracle"
    if pipeline.status is Status.ABORT:
        stage = str(pipeline.details.get("stage", "pipeline"))
        return (BOUND_BREACH if stage in BUDGETED_STAGES else ABORT), stage
    if oracle.status != pipeline.status:
        return VERDICT_MISMATCH, "decide"
    claim = _failing_claim(pipeline)
    if claim is not None:
        return PROPERTY_VIOLATION, claim
    return None, None


def run_differential(
    f: CnfFormula, settings: Optional[Settings] = None, check_claims: bool = True
) -> Outcome:
    """Oracle on f against decide on the completed pivoted translation of f."""
    settings = settings or Settings()
    oracle = brute_force_sat(f, settings.oracle_cap)
    pipeline = decide(
        complete(to_pivoted(f)),
        budget_scale=settings.budget_scale,
        check_claims=check_claims,
        chain_cap=settings.chain_cap,
        entails_cap=settings.entails_cap,
    )
    kind, stage = classify(oracle, pipeline)
    if kind is not None:
        logger.info(f"Differential finding {kind} at {stage}")
    return Outcome(oracle, pipeline, kind, stage)


def run_transform_check(f: CnfFormula, settings: Optional[Settings] = None) -> Outcome:
    settings = settings or Settings()
    cert = certify_equisat(f, to_pivoted(f), settings.oracle_cap)
    if cert.aborted:
        kind, stage = ABORT, "oracle"
    elif not cert.agree:
        kind, stage = PROPERTY_VIOLATION, "transform-equisat"
    else:
        kind, stage = None, None
    return Outcome(cert.original_verdict, cert.pivoted_verdict, kind, stage)


def run_completion_check(f: CnfFormula, settings: Optional[Settings] = None) -> Outcome:
    settings = settings or Settings()
    pf = to_pivoted(f)
    before = brute_force_sat(lower(pf), settings.oracle_cap)
    after = brute_force_sat(lower(complete(pf)), settings.oracle_cap)
    if Status.ABORT in (before.status, after.status):
        kind, stage = ABORT, "oracle"
    elif before.status != after.status:
        kind, stage = PROPERTY_VIOLATION, "completion-equivalence"
    else:
        kind, stage = None, None
    return Outcome(before, after, kind, stage)


def run_two_sat_check(f: CnfFormula, settings: Optional[Settings] = None) -> Outcome:
    settings = settings or Settings()
    oracle = brute_force_sat(f, settings.oracle_cap)
    solver = solve_2sat(f)
    if oracle.status is Status.ABORT:
        kind, stage = ABORT, "oracle"
    elif oracle.status != solver.status:
        kind, stage = VERDICT_MISMATCH, "two-sat"
    elif solver.status is Status.SAT and not evaluate(f, solver.witness):
        kind, stage = PROPERTY_VIOLATION, "two-sat-witness"
    else:
        kind, stage = None, None
    return Outcome(oracle, solver, kind, stage)


SUITE_RUNNERS: Dict[str, Callable[[CnfFormula, Settings], Outcome]] = {
    "differential": run_differential,
    "transform": run_transform_check,
    "completion": run_completion_check,
    "two_sat": run_two_sat_check,
}

SUITE_CLAIMS = {
    "differential": "pipeline-verdict",
    "transform": "transform-equisat",
    "completion": "completion-equivalence",
    "two_sat": "two-sat-sound",
}


def make_finding(index: int, suite: str, f: CnfFormula, outcome: Outcome) -> Finding:
    return Finding(
        index=index,
        suite=suite,
        kind=outcome.kind,
        instance=f,
        oracle_status=outcome.oracle.status,
        pipeline_status=outcome.pipeline.status,
        stage=outcome.stage,
        counters=dict(outcome.pipeline.counters),
        original_clauses=len(f.clauses),
    )


def _compact(f: CnfFormula) -> CnfFormula:
    """Renumber the atoms that occur to 1..k, keeping their order."""
    renumber = {atom: new for new, atom in enumerate(f.atoms(), start=1)}
    clause_lists = [
        [renumber[abs(lit)] * (1 if lit > 0 else -1) for lit in clause]
        for clause in f.clauses
    ]
    return CnfFormula.from_lists(len(renumber), clause_lists)


def shrink(finding: Finding, settings: Optional[Settings] = None) -> Finding:
    """
    Greedy one-at-a-time clause removal until no single clause can go,
    then atom compaction. The result is 1-minimal and still reproduces
    the same finding kind.
    """
    settings = settings or Settings()
    runner = SUITE_RUNNERS[finding.suite]

    def outcome_of(f: CnfFormula) -> Outcome:
        return runner(f, settings)

    def reproduces(f: CnfFormula) -> bool:
        return outcome_of(f).kind == finding.kind

    current = finding.instance
    if not reproduces(current):
        raise ContractViolation(
            f"finding {finding.index} ({finding.kind}) does not reproduce"
        )

    clauses = list(current.clauses)
    position = 0
    while position < len(clauses):
        candidate = clauses[:position] + clauses[position + 1 :]
        f = CnfFormula(current.num_atoms, tuple(candidate))
        if reproduces(f):
            clauses = candidate
        else:
            position += 1
    current = CnfFormula(current.num_atoms, tuple(clauses))

    compacted = _compact(current)
    if compacted.num_atoms < current.num_atoms and reproduces(compacted):
        current = compacted

    logger.info(
        f"Shrunk finding {finding.index}: {len(finding.instance.clauses)} -> {len(current.clauses)} clauses"
    )
    shrunk = make_finding(finding.index, finding.suite, current, outcome_of(current))
    return replace(shrunk, original_clauses=finding.original_clauses)


def _bound_row(
    index: int, claim: str, counters: Dict[str, int], stage: str, work: str, budget: str
) -> BoundRow:
    if f"{stage}_measured" in counters:
        measured, bound = counters[f"{stage}_measured"], counters[f"{stage}_bound"]
        return BoundRow(index, claim, measured, bound, "fail")
    if counters.get(budget, 0) > 0:
        measured, bound = counters.get(work, 0), counters[budget]
        return BoundRow(index, claim, measured, bound, "pass" if measured <= bound else "fail")
    return BoundRow(index, claim, 0, 0, "untested")


def probe_bounds(
    f: CnfFormula,
    settings: Optional[Settings] = None,
    index: int = 0,
    verdict: Optional[Verdict] = None,
) -> List[BoundRow]:
    """
    Measured counters against the stated polynomials: cylinder edges
    against |Lit|², linearization rewrites against their budget and the
    nested filter's work against |V|^6. Budgets equal the abort bounds, so
    a failing row always comes with an ABORT verdict.
    """
    settings = settings or Settings()
    if verdict is None:
        verdict = decide(complete(to_pivoted(f)), budget_scale=settings.budget_scale)
    counters = verdict.counters
    literals = counters.get("cylinder_vertices", 0)
    edges = counters.get("cylinder_edges", 0)
    cylinder_status = "pass" if edges <= literals**2 else "fail"
    return [
        BoundRow(index, "cylinder-size", edges, literals**2, cylinder_status),
        _bound_row(
            index, "linear-lifting", counters, "linearize", "linearize_rewrites", "linearize_budget"
        ),
        _bound_row(index, "nested-filter", counters, "nested", "nested_work", "nested_budget"),
    ]


def _flip(pipeline: Verdict) -> Verdict:
    """The pipeline's own verdict turned around, SAT <-> UNSAT, witness dropped."""
    flipped = Status.UNSAT if pipeline.status is Status.SAT else Status.SAT
    return Verdict(flipped, counters=dict(pipeline.counters), details=dict(pipeline.details))


Classifier = Callable[[Verdict, Verdict], Tuple[Optional[str], Optional[str]]]


def guard_failed(guard: Optional[Dict[str, int]]) -> bool:
    """A guard fails when it misses a corruption or flags a clean row."""
    if not guard:
        return False
    return guard["detected"] < guard["mutations"] or guard.get("false_positives", 0) > 0


def mutation_guard(
    instances: Sequence[CnfFormula],
    settings: Optional[Settings] = None,
    mutations: int = 100,
    seed: int = 0,
    outcomes: Optional[Sequence[Outcome]] = None,
    classifier: Classifier = classify,
) -> Dict[str, int]:
    """
    Check the verdict comparison from both sides on rows where oracle and
    pipeline agree. Each clean row must pass the classifier unflagged, and
    each of `mutations` seeded picks, with the pipeline's own verdict
    flipped, must be flagged. Precomputed outcomes, aligned with
    instances, spare re-running the pipeline.
    """
    settings = settings or Settings()
    empty = {"mutations": 0, "detected": 0, "clean": 0, "false_positives": 0}
    if mutations == 0:
        return empty
    cache: Dict[int, Outcome] = dict(enumerate(outcomes or ()))
    clean: List[int] = []
    for index, f in enumerate(instances):
        if f.num_atoms > settings.oracle_cap:
            continue
        if index not in cache:
            cache[index] = run_differential(f, settings, check_claims=False)
        if cache[index].agree:
            clean.append(index)
    if not clean:
        logger.warning("Mutation guard found no agreeing rows to corrupt")
        return empty

    false_positives = sum(
        1 for index in clean if classifier(cache[index].oracle, cache[index].pipeline)[0]
    )
    rng = random.Random(seed)
    detected = 0
    for _ in range(mutations):
        outcome = cache[rng.choice(clean)]
        kind, _ = classifier(outcome.oracle, _flip(outcome.pipeline))
        if kind is not None:
            detected += 1
    guard = {
        "mutations": mutations,
        "detected": detected,
        "clean": len(clean),
        "false_positives": false_positives,
    }
    if guard_failed(guard):
        logger.warning(
            f"Mutation guard: {detected}/{mutations} corruptions detected, "
            f"{false_positives}/{len(clean)} clean rows flagged"
        )
    return guard


def _tally(scoreboard: Dict[str, Dict[str, int]], claim: str, status: str) -> None:
    counts = scoreboard.setdefault(claim, {"pass": 0, "fail": 0, "untested": 0})
    counts[status] += 1


def instance_seed(cfg: CampaignConfig, index: int) -> int:
    return cfg.seed * 1_000_003 + index


def run_campaign(cfg: CampaignConfig, settings: Optional[Settings] = None) -> CampaignReport:
    """
    Run every configured suite on cfg.instances seeded instances. Results
    are ordered by instance index, so equal configs give equal reports.
    """
    settings = (settings or Settings()).with_overrides(
        oracle_cap=cfg.oracle_cap, budget_scale=cfg.budget_scale
    )
    totals: Dict[str, int] = {"instances": cfg.instances, "agreements": 0, "findings": 0}
    findings: List[Finding] = []
    scoreboard: Dict[str, Dict[str, int]] = {}
    rows: List[BoundRow] = []
    differential_instances: List[CnfFormula] = []
    differential_outcomes: List[Outcome] = []

    for suite in cfg.suites:
        runner = SUITE_RUNNERS[suite]
        totals[f"{suite}_runs"] = 0
        for index in range(cfg.instances):
            seed = instance_seed(cfg, index)
            if suite == "two_sat":
                f = generate_random_2cnf(cfg, seed)
            else:
                f = generate_random_3cnf(cfg, seed)
            outcome = runner(f, settings)
            totals[f"{suite}_runs"] += 1
            _tally(scoreboard, SUITE_CLAIMS[suite], "pass" if outcome.agree else "fail")

            if suite == "differential":
                differential_instances.append(f)
                differential_outcomes.append(outcome)
                if outcome.agree:
                    totals["agreements"] += 1
                for check in outcome.pipeline.details.get("claim_checks", []):
                    holds = check["holds"]
                    status = "untested" if holds is None else ("pass" if holds else "fail")
                    _tally(scoreboard, check["claim"], status)
                for row in probe_bounds(f, settings, index, outcome.pipeline):
                    rows.append(row)
                    _tally(scoreboard, row.claim, row.status)

            if outcome.agree:
                continue
            finding = make_finding(index, suite, f, outcome)
            if cfg.shrink and finding.kind != ABORT:
                finding = shrink(finding, settings)
            findings.append(finding)
            totals["findings"] += 1
            totals[finding.kind] = totals.get(finding.kind, 0) + 1

    runs = totals.get("differential_runs", 0)
    agreement_rate = totals["agreements"] / runs if runs else 0.0
    guard = None
    if "differential" in cfg.suites and cfg.mutations:
        guard = mutation_guard(
            differential_instances, settings, cfg.mutations, cfg.seed, differential_outcomes
        )
    logger.info(f"Campaign finished: {totals['findings']} findings over {cfg.instances} instances")
    return CampaignReport(
        config=_config_dict(cfg),
        totals=totals,
        agreement_rate=round(agreement_rate, 6),
        findings=findings,
        scoreboard=scoreboard,
        mutation_guard=guard,
        rows=rows,
    )


def run_bench(cfg: CampaignConfig, settings: Optional[Settings] = None) -> List[BoundRow]:
    settings = (settings or Settings()).with_overrides(budget_scale=cfg.budget_scale)
    rows: List[BoundRow] = []
    for index in range(cfg.instances):
        f = generate_random_3cnf(cfg, instance_seed(cfg, index))
        rows.extend(probe_bounds(f, settings, index))
    return rows


def _config_dict(cfg: CampaignConfig) -> Dict[str, object]:
    data = {name: getattr(cfg, name) for name in CampaignConfig.__dataclass_fields__}
    data["suites"] = list(cfg.suites)
    return data


def write_scoreboard_csv(rows: Sequence[BoundRow], stream: TextIO) -> None:
    writer = csv.DictWriter(stream, fieldnames=SCOREBOARD_FIELDS, lineterminator="\n")
    writer.writeheader()
    for row in BoundRowSchema(many=True).dump(rows):
        writer.writerow(row)
