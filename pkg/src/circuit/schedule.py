# src/circuit/schedule.py

from __future__ import annotations

import math
import os
from enum import Enum
from typing import Dict, List, Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator

from src.circuit.generators import GeneratorTerm
from src.utils.config import DURATION_TOL
from src.utils.logger import logger


class CostMode(str, Enum):
    UNWEIGHTED = "unweighted"
    DISTANCE_PENALTY = "distance_penalty"


class ScheduleSlice(BaseModel):
    """Constant control amplitudes Y_I over one time interval."""

    model_config = ConfigDict(frozen=True)

    duration: float = Field(gt=0.0, description="Slice length (fraction of unit time)")
    coefficients: Dict[str, float] = Field(
        default_factory=dict, description="Term label -> amplitude Y_I"
    )


class Schedule(BaseModel):
    """Piecewise-constant control Hamiltonian H(t) = sum_I Y_I(t) T_I over t in [0, 1]."""

    model_config = ConfigDict(frozen=True)

    terms: List[GeneratorTerm] = Field(default_factory=list)
    slices: List[ScheduleSlice] = Field(default_factory=list)

    @model_validator(mode="after")
    def _check_schedule(self) -> Schedule:
        labels = [t.label for t in self.terms]
        if len(labels) != len(set(labels)):
            raise ValueError("Generator labels must be unique within a schedule.")

        known = set(labels)
        for idx, sl in enumerate(self.slices):
            unknown = set(sl.coefficients) - known
            if unknown:
                raise ValueError(f"Slice {idx} references undeclared terms {sorted(unknown)}.")
            if any(not math.isfinite(y) for y in sl.coefficients.values()):
                raise ValueError(f"Slice {idx} has non-finite coefficients.")

        if self.slices:
            total = sum(sl.duration for sl in self.slices)
            if abs(total - 1.0) > DURATION_TOL:
                raise ValueError(f"Slice durations sum to {total:.12f}, expected 1.")
        return self

    def term_map(self) -> Dict[str, GeneratorTerm]:
        return {t.label: t for t in self.terms}


def _weight(term: GeneratorTerm, mode: CostMode) -> float:
    return term.penalty if CostMode(mode) is CostMode.DISTANCE_PENALTY else 1.0


def schedule_cost(schedule: Schedule, mode: CostMode = CostMode.UNWEIGHTED) -> float:
    """sum over slices of duration * sum_I w_I |Y_I|."""
    terms = schedule.term_map()
    return float(
        sum(
            sl.duration * sum(_weight(terms[label], mode) * abs(y) for label, y in sl.coefficients.items())
            for sl in schedule.slices
        )
    )


def cut_cost(schedule: Schedule, cut: int, mode: CostMode = CostMode.UNWEIGHTED) -> float:
    """Cost restricted to terms whose support crosses the given cut."""
    terms = schedule.term_map()
    return float(
        sum(
            sl.duration
            * sum(
                _weight(terms[label], mode) * abs(y)
                for label, y in sl.coefficients.items()
                if terms[label].crosses(cut)
            )
            for sl in schedule.slices
        )
    )


def subdivide_schedule(schedule: Schedule, parts: int) -> Schedule:
    if parts < 1:
        raise ValueError(f"parts must be >= 1, got {parts}.")
    slices = [
        ScheduleSlice(duration=sl.duration / parts, coefficients=dict(sl.coefficients))
        for sl in schedule.slices
        for _ in range(parts)
    ]
    return Schedule(terms=schedule.terms, slices=slices)


def single_slice_schedule(
    terms: List[GeneratorTerm], coefficients: Optional[Dict[str, float]] = None
) -> Schedule:
    """Unit-duration schedule; no coefficients gives the empty schedule."""
    if not coefficients:
        return Schedule(terms=terms)
    return Schedule(terms=terms, slices=[ScheduleSlice(duration=1.0, coefficients=coefficients)])


# --------------------------- SERIALIZATION --------------------------- #
def save_schedule(schedule: Schedule, path: str) -> str:
    folder = os.path.dirname(path)
    if folder:
        os.makedirs(folder, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        f.write(schedule.model_dump_json(indent=2))
    logger.info(f"[Circuit] Schedule with {len(schedule.slices)} slices saved to {path}")
    return path


def load_schedule(path: str) -> Schedule:
    if not os.path.exists(path):
        logger.error(f"[Circuit] Schedule file not found: {path}")
        raise FileNotFoundError(path)
    with open(path, "r", encoding="utf-8") as f:
        schedule = Schedule.model_validate_json(f.read())
    logger.info(f"[Circuit] Loaded schedule from {path} ({len(schedule.slices)} slices)")
    return schedule
