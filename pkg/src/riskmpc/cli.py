"""Command line entry point: ``riskmpc run`` for one scenario, ``riskmpc matrix`` for all 36."""

from __future__ import annotations

import argparse
import json
import logging
import sys

from .harness import CONTROLLERS, LEVELS, ScenarioConfig, cell_name, run_matrix, run_scenario, write_matrix, write_result

# CLI flag -> ScenarioConfig field
_OVERRIDES = {
    "controller": "controller",
    "epsilon": "epsilon",
    "uncertainty": "uncertainty",
    "seed": "seed",
    "duration_steps": "duration_steps",
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="YAML file with ScenarioConfig fields")
    common.add_argument("--controller", choices=sorted(CONTROLLERS))
    common.add_argument("--epsilon", type=float, help="risk tolerance in joules")
    common.add_argument("--uncertainty", choices=LEVELS)
    common.add_argument("--seed", type=int)
    common.add_argument("--duration-steps", type=int, dest="duration_steps")
    common.add_argument("--out", metavar="DIR", default="out")
    common.add_argument("--format", choices=("csv", "json"), default="csv", help="trace file format")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="riskmpc", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("run", parents=[common], help="run one closed-loop scenario")
    m = sub.add_parser("matrix", parents=[common], help="run the controller x uncertainty x epsilon matrix")
    m.add_argument("--workers", type=int, default=1, help="parallel processes")
    return parser


def load_config(args: argparse.Namespace) -> ScenarioConfig:
    cfg = ScenarioConfig.from_file(args.config) if args.config else ScenarioConfig()
    changes = {field: getattr(args, flag) for flag, field in _OVERRIDES.items() if getattr(args, flag) is not None}
    return cfg.replace(**changes)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = load_config(args)
    except (OSError, ValueError, TypeError) as exc:
        print(f"riskmpc: bad configuration: {exc}", file=sys.stderr)
        return 2

    if args.command == "run":
        result = run_scenario(cfg)
        paths = write_result(result, args.out, stem=cell_name(cfg), fmt=args.format)
        print(json.dumps({k: result.summary()[k] for k in ("e_acc", "d_min", "collided", "infeasible_steps")}))
        print(f"trace: {paths['trace']}")
        return 0

    def progress(cell):
        if cell.result is None:
            print(f"{cell_name(cell.config)}: FAILED {cell.error}", flush=True)
        else:
            print(f"{cell_name(cell.config)}: e_acc={cell.result.e_acc:.2f} d_min={cell.result.d_min:.2f}", flush=True)

    cells = run_matrix(cfg, workers=args.workers, progress=progress)
    table = write_matrix(cells, args.out, fmt=args.format)
    print(table.read_text(), end="")
    print(f"table: {table}")
    return 0 if all(c.result is not None for c in cells) else 1


if __name__ == "__main__":
    sys.exit(main())
