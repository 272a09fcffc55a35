"""Command-line entry point: ``lorenza run|report-memory|basin-stats|selftest``."""
from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import asdict, replace

from .checkpoint import CheckpointError
from .harness import (ConfigError, RunConfig, audit_counters, basin_statistics_from_files, format_basin_table,
                      memory_report_for_config, run)


def _cmd_run(args) -> int:
    cfg = RunConfig.from_json(args.config)
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)
    results = run(cfg, resume=args.resume)
    for res in results:
        s = res.summary
        line = f"{res.metrics_path}  termination={s['termination']}  steps={s['steps']}"
        if "final_loss" in s:
            line += f"  final_loss={s['final_loss']:.6g}"
            bad = audit_counters(res.metrics_path, cfg.optimizer)
            if bad:
                line += f"  COUNTER AUDIT FAILED: {bad[0]}"
        if res.checkpoint_path is not None:
            line += f"  checkpoint={res.checkpoint_path}"
        print(line)
    return 0


def _cmd_memory(args) -> int:
    rep = memory_report_for_config(RunConfig.from_json(args.config))
    print(json.dumps(asdict(rep), indent=2))
    return 0


def _cmd_basins(args) -> int:
    print(format_basin_table(basin_statistics_from_files(args.glob)))
    return 0


def _cmd_selftest(args) -> int:
    from .selftest import run_selftest

    return 0 if run_selftest() else 1


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="lorenza", description=__doc__)
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run one experiment or a grid")
    p.add_argument("--config", required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--resume", help="checkpoint file to continue from")
    p.set_defaults(fn=_cmd_run)

    p = sub.add_parser("report-memory", help="optimizer-state element counts")
    p.add_argument("--config", required=True)
    p.set_defaults(fn=_cmd_memory)

    p = sub.add_parser("basin-stats", help="double-well terminal basin counts")
    p.add_argument("--glob", required=True, help="metrics files, e.g. 'runs/*.jsonl'")
    p.set_defaults(fn=_cmd_basins)

    p = sub.add_parser("selftest", help="run the built-in invariant checks")
    p.set_defaults(fn=_cmd_selftest)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.fn(args)
    except (ConfigError, CheckpointError, FileNotFoundError, json.JSONDecodeError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
