"""
Runtime settings and campaign configuration.

Settings come from PIVOTSAT_* environment variables, then CLI flags.
Campaign configs are line-oriented `key = value` text. Both pass through
marshmallow schemas before use.
"""

import logging
import os
import sys
from dataclasses import dataclass, replace
from typing import Dict, List, Mapping, Optional, Tuple

from schemas import (
    CampaignConfigSchema,
    SettingsSchema,
    errors_to_string,
    validate_data,
)

logger = logging.getLogger(__name__)

DEFAULT_ORACLE_CAP = 24
DEFAULT_CHAIN_CAP = 4096
DEFAULT_ENTAILS_CAP = 4096
LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"

ENV_PREFIX = "PIVOTSAT_"


class ConfigError(ValueError):
    """Invalid settings or campaign configuration."""


@dataclass(frozen=True)
class Settings:
    oracle_cap: int = DEFAULT_ORACLE_CAP
    budget_scale: float = 1.0
    chain_cap: int = DEFAULT_CHAIN_CAP
    entails_cap: int = DEFAULT_ENTAILS_CAP
    strict: bool = False
    log_level: str = "WARNING"

    def with_overrides(self, **overrides) -> "Settings":
        present = {k: v for k, v in overrides.items() if v is not None}
        if not present:
            return self
        return _validated(replace(self, **present).__dict__)


def _validated(raw: Mapping[str, object]) -> Settings:
    data, errors = validate_data(SettingsSchema, dict(raw))
    if errors:
        raise ConfigError(errors_to_string(errors))
    return Settings(**data)


def load_settings(env: Optional[Mapping[str, str]] = None) -> Settings:
    """Read PIVOTSAT_ORACLE_CAP, PIVOTSAT_BUDGET_SCALE, ... from the environment."""
    env = os.environ if env is None else env
    raw: Dict[str, str] = {}
    for name in Settings.__dataclass_fields__:
        key = ENV_PREFIX + name.upper()
        if key in env:
            raw[name] = env[key]
    return _validated(raw)


@dataclass(frozen=True)
class CampaignConfig:
    seed: int = 0
    instances: int = 100
    min_atoms: int = 3
    max_atoms: int = 8
    min_clauses: int = 1
    max_clauses: int = 20
    oracle_cap: int = DEFAULT_ORACLE_CAP
    budget_scale: float = 1.0
    suites: Tuple[str, ...] = ("differential",)
    mutations: int = 100
    shrink: bool = True

    def __post_init__(self):
        unknown = [name for name in self.suites if name not in suite_names()]
        if unknown:
            raise ConfigError(f"Unknown suites: {', '.join(unknown)}")

    def to_text(self) -> str:
        lines = []
        for name in CampaignConfig.__dataclass_fields__:
            value = getattr(self, name)
            if isinstance(value, tuple):
                value = ",".join(value)
            elif isinstance(value, bool):
                value = "true" if value else "false"
            lines.append(f"{name} = {value}")
        return "\n".join(lines) + "\n"


def parse_key_values(text: str) -> Dict[str, str]:
    pairs: Dict[str, str] = {}
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {line_no}: expected 'key = value', got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise ConfigError(f"line {line_no}: empty key")
        pairs[key] = value
    return pairs


def load_campaign_config(text: str, **overrides) -> CampaignConfig:
    """Parse and validate campaign text; overrides (e.g. CLI --seed) win."""
    raw: Dict[str, object] = dict(parse_key_values(text))
    raw.update({k: v for k, v in overrides.items() if v is not None})
    data, errors = validate_data(CampaignConfigSchema, raw)
    if errors:
        raise ConfigError(errors_to_string(errors))
    data["suites"] = tuple(data["suites"])
    logger.info(f"Campaign config loaded: seed={data['seed']} instances={data['instances']}")
    return CampaignConfig(**data)


def configure_logging(level: str) -> None:
    logging.basicConfig(
        level=getattr(logging, level.upper(), logging.WARNING),
        format=LOG_FORMAT,
        stream=sys.stderr,
        force=True,
    )


def suite_names() -> List[str]:
    return list(CampaignConfigSchema.SUITES)
