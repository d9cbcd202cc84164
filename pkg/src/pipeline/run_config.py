# src/pipeline/run_config.py

from __future__ import annotations

import math
from enum import Enum
from typing import Any, Dict, List, Optional

from pydantic import BaseModel, Field, model_validator

from src.utils.config import DEFAULT_SUBSTEPS


class Command(str, Enum):
    SIMULATE = "simulate"
    BOUNDS = "bounds"
    SWEEP = "sweep"
    VERIFY = "verify"
    COMPILE = "compile"


class ReportFormat(str, Enum):
    CSV = "csv"
    STRUCTURED_TEXT = "structured_text"


BOUND_FORMULAS = (
    "fannes",
    "entropy_sum",
    "finite_n",
    "asymptotic",
    "klocal",
    "coarse_grained",
    "schatten",
    "itp_norm",
    "itp_A",
    "itp_asymptotic",
)
SWEEP_FORMULAS = ("finite_n", "asymptotic", "klocal", "coarse_grained", "itp_asymptotic", "vdh")
FAMILIES = ("vdh", "itp")

# flag defaults applied before validation; everything else must be given explicitly
DEFAULTS: Dict[str, Any] = {
    "d": 2,
    "c": 22.0,
    "k": 2,
    "m": 1,
    "lambda1": 0.5,
    "lambda2": 0.25,
    "log_base": math.e,
    "workers": 1,
    "remedy": "overall_factor",
    "suite": "all",
    "substeps": DEFAULT_SUBSTEPS,
}

REQUIRED: Dict[Command, tuple] = {
    Command.SIMULATE: ("family",),
    Command.BOUNDS: ("formula",),
    Command.SWEEP: ("formula",),
    Command.VERIFY: ("trials", "seed"),
    Command.COMPILE: ("N",),
}

FORMULA_REQUIRED: Dict[str, tuple] = {
    "fannes": ("epsilon",),
    "entropy_sum": ("delta_S_grid",),
    "finite_n": ("delta_S", "epsilon", "n"),
    "asymptotic": ("delta_S",),
    "klocal": ("delta_S", "epsilon", "n"),
    "coarse_grained": ("delta_S", "epsilon"),
    "schatten": ("epsilon", "n"),
    "itp_norm": ("n",),
    "itp_A": (),
    "itp_asymptotic": ("epsilon",),
}

POSITIVE_INT = ("N", "d", "d_e", "k", "m", "n", "M", "trials", "workers", "substeps")
POSITIVE_FLOAT = ("epsilon", "c", "log_base")


class RunConfig(BaseModel):
    """One CLI invocation: command, parsed parameters, report destination."""

    command: Command = Field(description="Lab command to dispatch")
    parameters: Dict[str, Any] = Field(default_factory=dict, description="Flag values")
    output_path: Optional[str] = Field(default=None, description="Report file path")
    format: ReportFormat = Field(default=ReportFormat.CSV, description="Report format")

    @model_validator(mode="before")
    @classmethod
    def _apply_defaults(cls, data):
        if isinstance(data, dict):
            params = {k: v for k, v in dict(data.get("parameters") or {}).items() if v is not None}
            data = {**data, "parameters": {**DEFAULTS, **params}}
        return data

    @model_validator(mode="after")
    def _validate_parameters(self) -> RunConfig:
        p = self.parameters

        missing = [key for key in REQUIRED[self.command] if key not in p]
        if missing:
            raise ValueError(f"'{self.command.value}' requires {missing}.")

        for key in POSITIVE_INT:
            if key in p and (int(p[key]) != p[key] or p[key] < 1):
                raise ValueError(f"{key} must be a positive integer, got {p[key]}.")
        for key in POSITIVE_FLOAT:
            if key in p and not p[key] > 0:
                raise ValueError(f"{key} must be positive, got {p[key]}.")
        if p["d"] < 2:
            raise ValueError(f"d must be >= 2, got {p['d']}.")
        if p.get("N") is not None and p["N"] < 2:
            raise ValueError(f"N must be >= 2, got {p['N']}.")
        if p["log_base"] == 1:
            raise ValueError("log_base must differ from 1.")
        if p.get("delta_S") is not None and p["delta_S"] < 0:
            raise ValueError("delta_S must be nonnegative.")

        if self.command is Command.SIMULATE and p["family"] not in FAMILIES:
            raise ValueError(f"Unknown family '{p['family']}'; expected one of {FAMILIES}.")
        if self.command is Command.SIMULATE and p["family"] == "vdh" and "N" not in p:
            raise ValueError("simulate --family vdh requires N.")

        if self.command is Command.BOUNDS:
            self._validate_bounds(p)
        if self.command is Command.SWEEP:
            self._validate_sweep(p)
        return self

    @staticmethod
    def _validate_bounds(p: Dict[str, Any]) -> None:
        formula = p["formula"]
        if formula not in BOUND_FORMULAS:
            raise ValueError(f"Unknown formula '{formula}'; expected one of {BOUND_FORMULAS}.")
        missing = [key for key in FORMULA_REQUIRED[formula] if key not in p]
        if missing:
            raise ValueError(f"formula '{formula}' requires {missing}.")
        if formula == "asymptotic" and "epsilon" not in p and "M" not in p:
            raise ValueError("formula 'asymptotic' requires epsilon or M.")
        if formula in ("fannes", "finite_n", "klocal", "coarse_grained") and p["epsilon"] > 1 / math.e:
            raise ValueError(f"epsilon={p['epsilon']} exceeds 1/e.")

    @staticmethod
    def _validate_sweep(p: Dict[str, Any]) -> None:
        formulas = formula_list(p["formula"])
        unknown = [f for f in formulas if f not in SWEEP_FORMULAS]
        if unknown:
            raise ValueError(f"Unknown sweep formulas {unknown}; expected {SWEEP_FORMULAS}.")

        grids = {key: p.get(key) for key in ("epsilon_grid", "delta_S_grid", "N_grid")}
        if not any(grids.values()):
            raise ValueError("sweep needs a non-empty epsilon, delta-S or N grid.")
        if "vdh" in formulas and not grids["N_grid"] and "N" not in p:
            raise ValueError("vdh sweep rows need --N-grid or --N.")

        entropy_formulas = {"finite_n", "asymptotic", "klocal", "coarse_grained"} & set(formulas)
        if entropy_formulas:
            if not grids["delta_S_grid"] and "delta_S" not in p:
                raise ValueError(f"{sorted(entropy_formulas)} need --delta-S or --delta-S-grid.")
            if not grids["epsilon_grid"] and "epsilon" not in p:
                raise ValueError(f"{sorted(entropy_formulas)} need --epsilon or --epsilon-grid.")
        if {"finite_n", "klocal", "coarse_grained"} & set(formulas):
            eps_values = grids["epsilon_grid"] or [p.get("epsilon")]
            if any(e > 1 / math.e for e in eps_values):
                raise ValueError("Fannes-based sweep columns need every epsilon <= 1/e.")
        if "itp_asymptotic" in formulas and not grids["epsilon_grid"] and "epsilon" not in p:
            raise ValueError("itp_asymptotic needs --epsilon or --epsilon-grid.")


def formula_list(value: Any) -> List[str]:
    if isinstance(value, (list, tuple)):
        return [str(v) for v in value]
    return [part.strip() for part in str(value).split(",") if part.strip()]
