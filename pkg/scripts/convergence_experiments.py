"""Convergence tables: AdaZo-SAM running mean of the estimated squared
gradient norm against the fitted rate bound, and LORENZA steps-to-epsilon on
matrix factorization.

    python3 scripts/convergence_experiments.py [--seeds 5] [--mf-seeds 100]
"""
import argparse
import json
import math
import tempfile
from dataclasses import replace
from pathlib import Path

import numpy as np

from lorenza.adazo import AdazoConfig, adazo_init, adazo_step
from lorenza.core import RngStream
from lorenza.harness import RunConfig, run_experiment
from lorenza.objectives import ParamSet, quadratic_objective

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def adazo_running_mean(T: int, seed: int, beta: float, rho: float) -> float:
    rng = RngStream(seed, 0xC0)
    tgt = ParamSet.from_natural({"W": rng.normal((4, 6))})
    f = quadratic_objective(tgt, beta)
    p = tgt.axpy(1.0, ParamSet.from_natural({"W": rng.normal((4, 6))}))
    cfg = AdazoConfig(lr=1.0 / (beta * math.sqrt(T)), rho=rho, mu=1e-6)
    st, acc = adazo_init(p), 0.0
    for _ in range(T):
        p, st = adazo_step(st, p, f, (), cfg, rng)
        acc += st.last_estimate_norm_sq
    return acc / T


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seeds", type=int, default=5)
    ap.add_argument("--mf-seeds", type=int, default=100)
    args = ap.parse_args(argv)

    print("AdaZo-SAM on the quadratic, lr = 1/(beta sqrt(T))")
    print(f"{'beta':>5}{'rho':>6}{'T':>7}{'mean':>10}{'bound':>10}")
    for beta, rho in [(1.0, 0.05), (2.0, 0.05), (1.0, 0.1)]:
        floor = beta ** 2 * rho ** 2
        fit = np.mean([adazo_running_mean(100, s, beta, rho) for s in range(args.seeds)])
        c = (fit - floor) * 10.0
        for T in (100, 1_000, 10_000):
            mean = np.mean([adazo_running_mean(T, s, beta, rho) for s in range(args.seeds)])
            print(f"{beta:>5g}{rho:>6g}{T:>7}{mean:>10.3f}{2 * (c / math.sqrt(T) + floor):>10.3f}", flush=True)

    print("\nLORENZA on 8x8 rank-2 matrix factorization, r=2, T=50")
    cfg = RunConfig.from_dict(json.loads((CONFIGS / "matrix_factorization_lorenza.json").read_text()))
    steps = []
    with tempfile.TemporaryDirectory() as tmp:
        for seed in range(args.mf_seeds):
            s = run_experiment(replace(cfg, seed=seed, output_dir=tmp, log_every=cfg.total_steps)).summary
            steps.append(s["steps"] if s["termination"] == "grad_tol" else None)
    hit = [v for v in steps if v is not None]
    print(f"reached eps=1e-4: {len(hit)}/{len(steps)}; steps median {np.median(hit):.0f}, "
          f"max {max(hit)}")


if __name__ == "__main__":
    main()
