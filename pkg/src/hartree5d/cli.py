"""``hartree5d`` command line.

Exit status: 0 success, 1 invalid configuration, 2 solver non-convergence,
3 I/O or file-format error, 4 ``verify`` ran but at least one check failed.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import experiments
from .config import ConfigError, load_config
from .grid import GridMismatch
from .ground_state import CacheFormatError, NonConvergence, SignFlip
from .io import CheckpointError

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_IO, EXIT_CHECKS = 0, 1, 2, 3, 4

COMMANDS = {
    "groundstate": experiments.cmd_groundstate,
    "classify": experiments.cmd_classify,
    "evolve": experiments.cmd_evolve,
    "tb": experiments.cmd_tb,
    "verify": experiments.cmd_verify,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="hartree5d",
                                description="Radial focusing Hartree equation in five dimensions.")
    sub = p.add_subparsers(dest="command", required=True)
    helps = {
        "groundstate": "solve (or load) the ground state and report its constants",
        "classify": "place the initial data relative to the ground-state threshold",
        "evolve": "integrate in time, writing trajectory.csv and outcome.json",
        "tb": "blow-up time estimates from the virial bounds",
        "verify": "run the invariant suite; exit 4 if any check fails",
    }
    for name, text in helps.items():
        sp = sub.add_parser(name, help=text)
        sp.add_argument("--config", type=Path, default=None, help="scenario file (key = value lines)")
        sp.add_argument("--out", type=Path, default=None, help="output directory (overrides outputs.directory)")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"cannot read config: {exc}", file=sys.stderr)
        return EXIT_IO
    out_dir = args.out or Path(cfg.outputs.directory)
    try:
        report = COMMANDS[args.command](cfg, out_dir)
    except (ConfigError, GridMismatch) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NonConvergence, SignFlip) as exc:
        print(f"solver failed: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (OSError, CacheFormatError, CheckpointError) as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    if args.command == "verify":
        for chk in report["checks"]:
            tag = "PASS" if chk["passed"] else "FAIL"
            print(f"[{tag}] {chk['number']:2d} {chk['name']}: {chk['detail']}")
        return EXIT_OK if report["passed"] else EXIT_CHECKS
    print(json.dumps(report, indent=2, sort_keys=True))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
