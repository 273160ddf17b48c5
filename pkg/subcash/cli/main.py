from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import config

from ..errors import SubcashError
from ..evaluation.reports import write_json
from ..utils.helpers import setup_logging
from .commands import CHECK_SUITES, run_command
from .document import ingest

logger = logging.getLogger(__name__)


def _common_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--scenario", type=Path, default=None, help="Scenario document (TOML).")
    common.add_argument("--out", type=Path, default=None, help="Per-node CSV path for lattice runs.")
    common.add_argument("--report-json", type=Path, default=None, help="Also write the report as JSON to this path.")
    common.add_argument("--log-level", default=config.LOG_LEVEL, choices=("DEBUG", "INFO", "WARNING", "ERROR"), help="Log level on stderr.")

    scenario = common.add_argument_group("scenario references")
    scenario.add_argument("--measure", default=None, help="Named base measure.")
    scenario.add_argument("--position", default=None, help="Named position.")
    scenario.add_argument("--envelope", default=None, help="Named discount envelope.")
    scenario.add_argument("--convex", default=None, help="Named convex discount function V.")
    scenario.add_argument("--discount", default=None, help="Named discount factor D.")
    scenario.add_argument("--bond", default=None, help="Named zero-coupon bond quote B.")
    scenario.add_argument("--put-rate", type=float, default=None, help="Gross rate r >= 1 for the put premium reserve.")
    scenario.add_argument("--strike", type=float, default=None, help="Put strike K (default 0).")
    scenario.add_argument("--resolution", type=int, default=None, help="Grid resolution for grid oracles and penalty tables.")
    scenario.add_argument("--m-grid", default=None, help="Cash shifts a:b:k (default -5:5:11).")

    transfer = common.add_argument_group("transfer")
    for agent in ("a", "b"):
        transfer.add_argument(f"--measure-{agent}", default=None, help=f"Base measure of agent {agent.upper()}.")
        transfer.add_argument(f"--envelope-{agent}", default=None, help=f"Optional envelope of agent {agent.upper()}.")
        transfer.add_argument(f"--exposure-{agent}", default=None, help=f"Named exposure of agent {agent.upper()}.")

    lattice = common.add_argument_group("lattice")
    lattice.add_argument("--steps", type=int, default=None, help="Lattice steps N (default 100).")
    lattice.add_argument("--horizon", type=float, default=None, help="Horizon T in years (default 1).")
    lattice.add_argument("--rate-low", type=float, default=None, help="Lower ambiguous rate r.")
    lattice.add_argument("--rate-high", type=float, default=None, help="Upper ambiguous rate R.")
    lattice.add_argument("--terminal-const", type=float, default=None, help="Constant part of X = c + s W_T.")
    lattice.add_argument("--terminal-slope", type=float, default=None, help="Slope s of X = c + s W_T.")
    lattice.add_argument("--dual", action="store_true", help="Recover the dual control and re-discount.")
    lattice.add_argument("--t1", type=int, default=None, help="Earlier layer for time consistency.")
    lattice.add_argument("--t2", type=int, default=None, help="Later layer for time consistency (default N/2).")
    lattice.add_argument("--beta", type=float, default=None, help="Linear rate compared against in the comparison suite.")
    return common


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="subcash", description="Cash sub-additive reserves: evaluate, dualize, transfer and check.")
    common = _common_parser()
    commands = parser.add_subparsers(dest="command", required=True)
    commands.add_parser("reserve", parents=[common], help="Evaluate an envelope, put-premium, composed or cash additive reserve.")
    commands.add_parser("dual", parents=[common], help="Sub-probability dual with reported gap and optimal mass.")
    commands.add_parser("bridge", parents=[common], help="Spot to forward measure with calibration report.")
    commands.add_parser("transfer", parents=[common], help="Optimal risk transfer by inf-convolution.")
    commands.add_parser("dynamic", parents=[common], help="Lattice BSDE with an ambiguous discount rate.")
    check = commands.add_parser("check", parents=[common], help="Run a property suite.")
    check.add_argument("suite", choices=CHECK_SUITES)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    setup_logging(args.log_level)
    flags = {key: (str(value) if isinstance(value, Path) else value) for key, value in vars(args).items()}

    try:
        document = ingest(args.scenario) if args.scenario is not None else None
        report = run_command(document, args.command, flags)
        if args.report_json is not None:
            write_json(report.to_dict(), args.report_json)
    except SubcashError as exc:
        logger.debug("engine error", exc_info=True)
        sys.stderr.write(f"subcash: error: {exc}\n")
        return exc.exit_code
    except OSError as exc:
        logger.debug("output error", exc_info=True)
        sys.stderr.write(f"subcash: error: cannot write output: {exc}\n")
        return config.EXIT_CODES["io"]

    sys.stdout.write(report.render())
    return config.EXIT_CODES["ok"] if report.all_passed else config.EXIT_CODES["check_failed"]


if __name__ == "__main__":
    raise SystemExit(main())
