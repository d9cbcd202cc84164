# src/verify/record.py

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Dict, Tuple, Union

import numpy as np
from pydantic import BaseModel, Field

from src.utils.config import VERIFY_SLACK
from src.utils.logger import logger

ParamValue = Union[int, float, str]
TrialFn = Callable[[np.random.Generator, int], Tuple[float, float]]


class VerificationRecord(BaseModel):
    """Outcome of one randomized inequality check (margin = rhs - lhs)."""

    check_name: str = Field(description="Identifier of the inequality")
    trials: int = Field(ge=1, description="Number of random instances")
    violations: int = Field(ge=0, description="Trials with margin below -slack")
    worst_margin: float = Field(description="Minimum of rhs - lhs over trials")
    seed: int = Field(description="Base seed; trial t uses seed + t")
    slack: float = Field(default=VERIFY_SLACK, ge=0.0, description="Additive tolerance")
    parameters: Dict[str, ParamValue] = Field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.violations == 0


def run_trials(
    check_name: str,
    trials: int,
    seed: int,
    trial_fn: TrialFn,
    slack: float = VERIFY_SLACK,
    workers: int = 1,
    parameters: Dict[str, ParamValue] | None = None,
) -> VerificationRecord:
    """
    Evaluate trial_fn(rng, t) -> (lhs, rhs) for t = 0..trials-1.
    Trial t draws from default_rng(seed + t), so results do not depend on `workers`.
    """
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}.")

    def one(t: int) -> Tuple[float, float]:
        return trial_fn(np.random.default_rng(seed + t), t)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(one, range(trials)))
    else:
        outcomes = [one(t) for t in range(trials)]

    margins = np.array([rhs - lhs for lhs, rhs in outcomes])
    violations = int(np.sum(margins < -slack))
    record = VerificationRecord(
        check_name=check_name,
        trials=trials,
        violations=violations,
        worst_margin=float(margins.min()),
        seed=seed,
        slack=slack,
        parameters=parameters or {},
    )

    if violations:
        logger.warning(
            f"[Verify] {check_name}: {violations}/{trials} violations "
            f"(worst margin {record.worst_margin:.3e}, slack {slack:.0e})"
        )
    else:
        logger.info(
            f"[Verify] {check_name}: {trials} trials passed "
            f"(worst margin {record.worst_margin:.3e}, slack {slack:.0e})"
        )
    return record
