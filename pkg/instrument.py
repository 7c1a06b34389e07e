"""
Work counters for the pipeline's complexity claims.

Each stage owns a WorkCounter bound to the polynomial it is supposed to
respect; crossing the bound raises BudgetExceeded, which callers turn into
an ABORT verdict naming the stage and the claim.
"""

import logging
from collections import Counter
from typing import Dict, Optional

logger = logging.getLogger(__name__)


class BudgetExceeded(RuntimeError):
    def __init__(self, stage: str, claim: str, measured: int, bound: int):
        self.stage = stage
        self.claim = claim
        self.measured = measured
        self.bound = bound
        super().__init__(f"{stage}: {claim} (measured {measured} > bound {bound})")


class WorkCounter:
    """Counts elementary steps of one stage against an optional bound."""

    def __init__(self, stage: str, claim: str = "", bound: Optional[int] = None):
        self.stage = stage
        self.claim = claim
        self.bound = bound
        self.count = 0

    def tick(self, n: int = 1) -> None:
        self.count += n
        if self.bound is not None and self.count > self.bound:
            logger.warning(
                f"Budget breach in {self.stage}: {self.count} > {self.bound}"
            )
            raise BudgetExceeded(self.stage, self.claim, self.count, self.bound)

    def __repr__(self):
        return f"WorkCounter({self.stage!r}, count={self.count}, bound={self.bound})"


class Counters(Counter):
    """Named integer counters merged into verdict reports."""

    def record(self, name: str, value: int) -> None:
        self[name] = max(self[name], value)

    def as_dict(self) -> Dict[str, int]:
        return {name: int(value) for name, value in sorted(self.items())}


def scaled_budget(base: int, scale: float) -> int:
    return max(1, int(base * scale))
