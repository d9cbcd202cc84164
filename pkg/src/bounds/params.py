# src/bounds/params.py

from __future__ import annotations

import math
from enum import Enum
from typing import List, Optional

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field, model_validator

from src.utils.config import SIE_CONSTANT


class KLocalRemedy(str, Enum):
    OVERALL_FACTOR = "overall_factor"
    STRIDED_SUM = "strided_sum"


class BoundParams(BaseModel):
    """Inputs shared by the entropy-based lower bounds."""

    model_config = ConfigDict(frozen=True)

    delta_S: float = Field(ge=0.0, description="Embezzled entanglement entropy")
    epsilon: float = Field(gt=0.0, description="One-sided trace-norm precision")
    d: int = Field(ge=2, description="Catalyst site dimension")
    d_e: int = Field(default=0, description="Embezzler dimension (defaults to d)")
    c: float = Field(default=SIE_CONSTANT, gt=0.0, description="Incremental-entangling constant")
    k: int = Field(default=2, ge=2, description="Generator locality")
    m: int = Field(default=1, ge=1, description="Coarse-graining cutoff")
    log_base: float = Field(default=math.e, gt=0.0, description="Logarithm base")

    @model_validator(mode="before")
    @classmethod
    def _default_embezzler_dim(cls, data):
        if isinstance(data, dict) and not data.get("d_e"):
            data = {**data, "d_e": data.get("d")}
        return data

    @model_validator(mode="after")
    def _check(self) -> BoundParams:
        if self.d_e < self.d:
            raise ValueError(f"d_e={self.d_e} must be >= d={self.d}.")
        if self.log_base == 1.0:
            raise ValueError("log_base must differ from 1.")
        return self

    @classmethod
    def from_M(cls, delta_S: float, M: float, d: int, **kwargs) -> BoundParams:
        """Parameterize epsilon = delta_S / (log(d) * M)."""
        if M <= 0:
            raise ValueError(f"M must be positive, got {M}.")
        log_base = kwargs.get("log_base", math.e)
        epsilon = delta_S / ((math.log(d) / math.log(log_base)) * M)
        return cls(delta_S=delta_S, epsilon=epsilon, d=d, **kwargs)

    def log(self, x: float) -> float:
        return math.log(x) / math.log(self.log_base)

    @property
    def log_d(self) -> float:
        return self.log(self.d)

    @property
    def M_real(self) -> float:
        return self.delta_S / (self.log_d * self.epsilon)


class BoundReport(BaseModel):
    """Per-cut terms of a lower bound and their normalized total."""

    formula: str = Field(description="Formula identifier")
    per_cut_terms: List[float] = Field(description="Clipped per-cut contributions")
    cut_indices: List[int] = Field(description="Cut index of each term")
    normalization: float = Field(gt=0.0, description="Divisor applied to the term sum")
    total: float = Field(ge=0.0, description="Sum of terms divided by the normalization")
    params: BoundParams
    n: Optional[int] = Field(default=None, description="Chain length the bound refers to")

    def to_frame(self) -> pd.DataFrame:
        """One row per cut: formula, params..., cut_index, term, total."""
        base = {"formula": self.formula, **self.params.model_dump(), "n": self.n}
        rows = [
            {**base, "cut_index": i, "term": t, "total": self.total}
            for i, t in zip(self.cut_indices, self.per_cut_terms)
        ]
        if not rows:
            rows = [{**base, "cut_index": np.nan, "term": np.nan, "total": self.total}]
        return pd.DataFrame(rows)


class AsymptoticBound(BaseModel):
    exact_M_sum: float = Field(description="Closed-form sum at integer M")
    leading_term: float = Field(description="delta_S^2 / (2 c log^2 d epsilon)")
    clipped_sum: float = Field(description="Direct clipped per-cut sum at the same epsilon")
    M: int = Field(ge=1, description="floor(delta_S / (log d epsilon))")
    M_real: float = Field(description="Unrounded delta_S / (log d epsilon)")
    params: BoundParams

    @property
    def relative_gap(self) -> float:
        return abs(self.exact_M_sum - self.leading_term) / self.leading_term


class ItpAsymptoticBound(BaseModel):
    direct_sum: float = Field(description="1/2 (1 + tail_sum)")
    tail_sum: float = Field(description="Clipped sum over pair index i >= 1")
    asymptote: float = Field(description="A log(A / epsilon)")
    A: float = Field(description="1/i coefficient of the norm deltas")
    contributing_terms: int = Field(ge=0, description="Terms above epsilon")
    epsilon: float = Field(gt=0.0)
    lambda1: float
    lambda2: float

    @property
    def ratio(self) -> float:
        return self.tail_sum / self.asymptote if self.asymptote > 0 else float("nan")
