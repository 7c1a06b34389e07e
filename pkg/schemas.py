"""
Marshmallow schemas for settings, campaign configuration and every JSON
document the tool emits (verdicts, certificates, findings, reports).
"""

from marshmallow import (
    Schema,
    ValidationError,
    fields,
    post_dump,
    validate,
    validates,
    validates_schema,
)


class CommaList(fields.Field):
    """List field that also accepts a comma-separated string."""

    def _deserialize(self, value, attr, data, **kwargs):
        if isinstance(value, str):
            items = [item.strip() for item in value.split(",")]
        elif isinstance(value, (list, tuple)):
            items = [str(item).strip() for item in value]
        else:
            raise ValidationError("Expected a comma-separated list")
        return [item for item in items if item]

    def _serialize(self, value, attr, obj, **kwargs):
        return None if value is None else list(value)


class SettingsSchema(Schema):
    """Schema for runtime settings validation."""

    oracle_cap = fields.Int(
        load_default=24,
        validate=validate.Range(min=1, max=30, error="Oracle cap must be 1 to 30 atoms"),
    )
    budget_scale = fields.Float(
        load_default=1.0,
        validate=validate.Range(
            min=0.0, min_inclusive=False, error="Budget scale must be positive"
        ),
    )
    chain_cap = fields.Int(
        load_default=4096,
        validate=validate.Range(min=1, error="Chain cap must be positive"),
    )
    entails_cap = fields.Int(
        load_default=4096,
        validate=validate.Range(min=1, error="Entails cap must be positive"),
    )
    strict = fields.Bool(load_default=False)
    log_level = fields.Str(
        load_default="WARNING",
        validate=validate.OneOf(
            ["DEBUG", "INFO", "WARNING", "ERROR"], error="Invalid log level"
        ),
    )


class CampaignConfigSchema(Schema):
    """Schema for differential campaign configuration."""

    SUITES = ("differential", "transform", "two_sat", "completion")

    seed = fields.Int(load_default=0)
    instances = fields.Int(
        load_default=100,
        validate=validate.Range(min=0, error="Instance count must be non-negative"),
    )
    min_atoms = fields.Int(
        load_default=3, validate=validate.Range(min=1, error="min_atoms must be >= 1")
    )
    max_atoms = fields.Int(
        load_default=8, validate=validate.Range(min=1, error="max_atoms must be >= 1")
    )
    min_clauses = fields.Int(
        load_default=1,
        validate=validate.Range(min=0, error="min_clauses must be >= 0"),
    )
    max_clauses = fields.Int(
        load_default=20,
        validate=validate.Range(min=0, error="max_clauses must be >= 0"),
    )
    oracle_cap = fields.Int(
        load_default=24,
        validate=validate.Range(min=1, max=30, error="Oracle cap must be 1 to 30 atoms"),
    )
    budget_scale = fields.Float(
        load_default=1.0,
        validate=validate.Range(
            min=0.0, min_inclusive=False, error="Budget scale must be positive"
        ),
    )
    suites = CommaList(load_default=lambda: ["differential"])
    mutations = fields.Int(
        load_default=100,
        validate=validate.Range(min=0, error="Mutation count must be non-negative"),
    )
    shrink = fields.Bool(load_default=True)

    @validates("suites")
    def validate_suites(self, value, **kwargs):
        unknown = [name for name in value if name not in self.SUITES]
        if unknown:
            raise ValidationError(f"Unknown suites: {', '.join(unknown)}")
        if not value:
            raise ValidationError("At least one suite is required")

    @validates_schema
    def validate_ranges(self, data, **kwargs):
        if data["min_atoms"] > data["max_atoms"]:
            raise ValidationError("min_atoms exceeds max_atoms", "min_atoms")
        if data["min_clauses"] > data["max_clauses"]:
            raise ValidationError("min_clauses exceeds max_clauses", "min_clauses")
        if data["max_atoms"] > data["oracle_cap"]:
            raise ValidationError(
                "max_atoms exceeds oracle_cap; differential suites need exact oracles",
                "max_atoms",
            )
        if data["min_clauses"] > distinct_3clauses(data["max_atoms"]):
            raise ValidationError(
                "min_clauses cannot be met without duplicate clauses", "min_clauses"
            )


def distinct_3clauses(atoms: int) -> int:
    """Number of distinct 3-literal clauses over `atoms` atoms (no repeated atom)."""
    if atoms < 3:
        return 0
    return 8 * atoms * (atoms - 1) * (atoms - 2) // 6


class ClaimCheckSchema(Schema):
    """Schema for one runtime claim check."""

    claim = fields.Str(required=True)
    holds = fields.Bool(allow_none=True)
    detail = fields.Str(load_default="")


class VerdictSchema(Schema):
    """Schema for verdict reports."""

    status = fields.Function(lambda v: v.status.value)
    witness = fields.Function(
        lambda v: None
        if v.witness is None
        else {str(atom): value for atom, value in sorted(v.witness.items())}
    )
    abort_reason = fields.Str(allow_none=True)
    counters = fields.Dict(keys=fields.Str(), values=fields.Int())
    per_closed_digraph = fields.Function(
        lambda v: v.details.get("per_closed_digraph", [])
    )
    claim_checks = fields.Function(
        lambda v: ClaimCheckSchema(many=True).dump(v.details.get("claim_checks", []))
    )
    details = fields.Function(
        lambda v: {
            key: value
            for key, value in v.details.items()
            if key not in ("per_closed_digraph", "claim_checks")
        }
    )

    @post_dump
    def drop_empty(self, data, **kwargs):
        for key in ("witness", "abort_reason"):
            if data.get(key) is None:
                data.pop(key, None)
        if not data.get("details"):
            data.pop("details", None)
        return data


class CertificateSchema(Schema):
    """Schema for transform equisatisfiability certificates."""

    original_status = fields.Function(lambda c: c.original_verdict.status.value)
    pivoted_status = fields.Function(lambda c: c.pivoted_verdict.status.value)
    agree = fields.Bool()
    original_atoms = fields.Int()
    pivoted_atoms = fields.Int()
    abort_reason = fields.Str(allow_none=True)


class FindingSchema(Schema):
    """Schema for differential campaign findings."""

    index = fields.Int()
    suite = fields.Str()
    kind = fields.Str(
        validate=validate.OneOf(
            ["verdict-mismatch", "property-violation", "bound-breach", "abort"]
        )
    )
    instance = fields.Function(lambda f: f.dimacs)
    original_clauses = fields.Int()
    oracle_status = fields.Function(lambda f: f.oracle_status.value)
    pipeline_status = fields.Function(lambda f: f.pipeline_status.value)
    stage = fields.Str(allow_none=True)
    counters = fields.Dict(keys=fields.Str(), values=fields.Int())


class BoundRowSchema(Schema):
    """Schema for complexity scoreboard rows."""

    instance = fields.Int()
    claim = fields.Str()
    measured = fields.Int()
    bound = fields.Int()
    status = fields.Str(validate=validate.OneOf(["pass", "fail", "untested"]))


class FixtureResultSchema(Schema):
    """Schema for fixture reproduction rows."""

    name = fields.Str()
    printed = fields.Str()
    expected = fields.Str()
    actual = fields.Str()
    passed = fields.Bool()
    claim_holds = fields.Bool()
    detail = fields.Str()


class CampaignReportSchema(Schema):
    """Schema for campaign reports."""

    config = fields.Dict()
    totals = fields.Dict(keys=fields.Str(), values=fields.Int())
    agreement_rate = fields.Float()
    findings = fields.List(fields.Nested(FindingSchema))
    scoreboard = fields.Dict(
        keys=fields.Str(), values=fields.Dict(keys=fields.Str(), values=fields.Int())
    )
    mutation_guard = fields.Dict(keys=fields.Str(), values=fields.Int(), allow_none=True)


# Validation utility functions
def validate_data(schema_class, data):
    """
    Validate a mapping against a schema.
    Returns (validated_data, errors) tuple.
    """
    schema = schema_class()
    try:
        return schema.load(data), None
    except ValidationError as err:
        return {}, err.messages


def errors_to_string(errors):
    """Flatten a marshmallow error dict into one message."""
    if not errors:
        return ""

    error_messages = []
    for name, messages in sorted(errors.items()):
        if isinstance(messages, list):
            error_messages.extend(f"{name}: {message}" for message in messages)
        else:
            error_messages.append(f"{name}: {messages}")

    return "; ".join(error_messages)
