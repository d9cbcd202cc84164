# src/cli/app.py
#
# Usage: python -m src.cli.app <command> [flags]
# Exit status: 0 success, 1 invalid input, 2 a check reported violations.

import argparse
import math
import sys
from typing import Any, Dict, List, Optional

from pydantic import ValidationError

from src.pipeline.lab_processor import EXIT_INVALID, LabProcessor
from src.pipeline.run_config import (
    BOUND_FORMULAS,
    FAMILIES,
    SWEEP_FORMULAS,
    Command,
    ReportFormat,
    RunConfig,
)
from src.utils.logger import logger


class LabArgumentParser(argparse.ArgumentParser):
    """argparse exits with status 2 on bad flags; route those through the invalid-input path."""

    def error(self, message: str):
        raise ValueError(message)


def _float_list(text: str) -> List[float]:
    return [float(part) for part in text.split(",") if part.strip()]


def _int_list(text: str) -> List[int]:
    return [int(part) for part in text.split(",") if part.strip()]


def _log_base(text: str) -> float:
    return math.e if text.lower() in ("e", "nat", "nats") else float(text)


def _add_common(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--N", type=int, help="Catalyst dimension")
    sub.add_argument("--d", type=int, help="Local site dimension")
    sub.add_argument("--d-e", dest="d_e", type=int, help="Embezzled system dimension")
    sub.add_argument("--epsilon", type=float)
    sub.add_argument("--delta-S", dest="delta_S", type=float)
    sub.add_argument("--c", type=float, help="Small-incremental-entangling constant")
    sub.add_argument("--k", type=int, help="Generator locality")
    sub.add_argument("--m", type=int, help="Coarse-graining block size")
    sub.add_argument("--M", type=int, help="Saturating cut count (asymptotic formula)")
    sub.add_argument("--n", type=int, help="Number of sites, cuts or ITP pairs")
    sub.add_argument("--lambda1", type=float)
    sub.add_argument("--lambda2", type=float)
    sub.add_argument("--log-base", dest="log_base", type=_log_base, help="'e' or a number")
    sub.add_argument("--workers", type=int)
    sub.add_argument("--substeps", type=int)
    sub.add_argument("--basis", choices=["pauli_like", "gellmann_like"])
    sub.add_argument("--remedy", choices=["overall_factor", "strided_sum"])
    sub.add_argument("--out", help="Report path")
    sub.add_argument(
        "--format",
        choices=[f.value for f in ReportFormat],
        default=ReportFormat.CSV.value,
    )


def build_parser() -> argparse.ArgumentParser:
    parser = LabArgumentParser(
        prog="embezzle-lab",
        description="Embezzlement and circuit-complexity lower bound lab.",
    )
    subparsers = parser.add_subparsers(dest="command", required=True, parser_class=LabArgumentParser)

    simulate = subparsers.add_parser(Command.SIMULATE.value, help="Simulate an embezzling family")
    simulate.add_argument("--family", choices=FAMILIES)

    bounds = subparsers.add_parser(Command.BOUNDS.value, help="Evaluate one lower-bound formula")
    bounds.add_argument("--formula", choices=BOUND_FORMULAS)
    bounds.add_argument("--delta-S-grid", dest="delta_S_grid", type=_float_list)

    sweep = subparsers.add_parser(Command.SWEEP.value, help="Sweep bounds over a parameter grid")
    sweep.add_argument("--formula", help=f"Comma-separated subset of {SWEEP_FORMULAS}")
    sweep.add_argument("--epsilon-grid", dest="epsilon_grid", type=_float_list)
    sweep.add_argument("--delta-S-grid", dest="delta_S_grid", type=_float_list)
    sweep.add_argument("--N-grid", dest="N_grid", type=_int_list)

    verify = subparsers.add_parser(Command.VERIFY.value, help="Randomized inequality checks")
    verify.add_argument("--suite", help="'all' or one check name")
    verify.add_argument("--trials", type=int)
    verify.add_argument("--seed", type=int)

    compile_ = subparsers.add_parser(Command.COMPILE.value, help="Compile the vdH embezzler")

    for sub in (simulate, bounds, sweep, verify, compile_):
        _add_common(sub)
    return parser


def parse_config(argv: Optional[List[str]] = None) -> RunConfig:
    args = build_parser().parse_args(argv)
    values: Dict[str, Any] = vars(args)
    command = values.pop("command")
    out = values.pop("out")
    fmt = values.pop("format")
    return RunConfig(command=command, parameters=values, output_path=out, format=fmt)


def main(argv: Optional[List[str]] = None) -> int:
    try:
        config = parse_config(argv)
        result = LabProcessor(config).run()
    except (ValueError, ValidationError) as exc:
        logger.error(f"[CLI] Invalid input: {exc}")
        return EXIT_INVALID

    logger.info(f"[CLI] Report: {result.report_path}")
    return result.exit_status


if __name__ == "__main__":
    sys.exit(main())
