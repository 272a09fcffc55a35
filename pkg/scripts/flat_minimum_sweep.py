"""Double-well basin counts for Adam vs LORENZA across radius and run length.

Uses the committed 100-start grid from configs/double_well_lorenza.json and
prints one row per (steps, rho_max, sign convention). Example:

    python3 scripts/flat_minimum_sweep.py --steps 300 1000 --rho-max 0.1 0.5
"""
import argparse
import json
import tempfile
from dataclasses import replace
from pathlib import Path

from lorenza.harness import RunConfig, basin_statistics_from_files, run_grid

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def counts(cfg: RunConfig, out: str) -> dict:
    cfg = replace(cfg, output_dir=out)
    run_grid(cfg)
    return basin_statistics_from_files(f"{out}/{cfg.run_name}_trial*.jsonl")[cfg.optimizer["name"]]


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--steps", type=int, nargs="+", default=[300, 1000, 3000])
    ap.add_argument("--rho-max", type=float, nargs="+", default=[0.1, 0.2, 0.5, 1.0, 2.0])
    ap.add_argument("--signs", nargs="+", default=["ascent", "paper_verbatim"])
    args = ap.parse_args(argv)

    adam = RunConfig.from_dict(json.loads((CONFIGS / "double_well_adam.json").read_text()))
    lor = RunConfig.from_dict(json.loads((CONFIGS / "double_well_lorenza.json").read_text()))
    print(f"{'optimizer':<10}{'steps':>7}{'rho_max':>9}{'sign':>16}{'sharp':>7}{'flat':>6}{'neither':>9}")
    with tempfile.TemporaryDirectory() as tmp:
        for steps in args.steps:
            c = counts(replace(adam, total_steps=steps, run_name=f"adam{steps}"), tmp)
            print(f"{'adam':<10}{steps:>7}{'-':>9}{'-':>16}{c['sharp']:>7}{c['flat']:>6}{c['neither']:>9}")
            for rho_max in args.rho_max:
                for sign in args.signs:
                    opt = {**lor.optimizer, "rho": {"rho_min": rho_max * 1e-4, "rho_max": rho_max},
                           "perturbation_sign": sign}
                    name = f"lor{steps}_{rho_max}_{sign}"
                    c = counts(replace(lor, optimizer=opt, total_steps=steps, run_name=name), tmp)
                    print(f"{'lorenza':<10}{steps:>7}{rho_max:>9g}{sign:>16}{c['sharp']:>7}{c['flat']:>6}"
                          f"{c['neither']:>9}", flush=True)


if __name__ == "__main__":
    main()
