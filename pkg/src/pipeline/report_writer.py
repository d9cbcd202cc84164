# src/pipeline/report_writer.py

import json
import math
import os
from typing import Any, Dict, Optional

import pandas as pd

from src.pipeline.run_config import ReportFormat, RunConfig
from src.utils.config import REPORT_DIR
from src.utils.logger import logger

EXTENSIONS = {ReportFormat.CSV: "csv", ReportFormat.STRUCTURED_TEXT: "json"}


def _flat(value: Any) -> Any:
    if isinstance(value, (list, tuple)):
        return ";".join(str(v) for v in value)
    return value


def report_path(config: RunConfig) -> str:
    if config.output_path:
        return config.output_path
    return os.path.join(REPORT_DIR, f"{config.command.value}.{EXTENSIONS[config.format]}")


def with_parameters(frame: pd.DataFrame, config: RunConfig) -> pd.DataFrame:
    """Append log_base and every parameter as trailing columns (sorted by name)."""
    out = frame.copy()
    out["log_base"] = config.parameters.get("log_base", math.e)
    for key in sorted(config.parameters):
        if key == "log_base":
            continue
        out[f"param_{key}"] = _flat(config.parameters[key])
    return out


def write_report(
    frame: pd.DataFrame, config: RunConfig, extra: Optional[Dict[str, Any]] = None
) -> str:
    """Write the command's rows as CSV or as a JSON document; returns the path."""
    path = report_path(config)
    folder = os.path.dirname(path)
    if folder:
        os.makedirs(folder, exist_ok=True)

    if config.format is ReportFormat.CSV:
        with_parameters(frame, config).to_csv(path, index=False)
    else:
        document = {
            "command": config.command.value,
            "parameters": {k: config.parameters[k] for k in sorted(config.parameters)},
            "log_base": config.parameters.get("log_base", math.e),
            "rows": json.loads(frame.to_json(orient="records", double_precision=15)),
        }
        if extra:
            document.update(extra)
        with open(path, "w", encoding="utf-8") as f:
            json.dump(document, f, indent=2, sort_keys=False)

    logger.info(f"[Report] {len(frame)} rows written to {path}")
    return path
