"""Regenerate the example configs in configs/, including the committed
double-well grid (100 starts drawn once from uniform(-4, 4), seed 2024)."""
import json
from pathlib import Path

import numpy as np

OUT = Path(__file__).resolve().parent.parent / "configs"

DW_INITS = np.random.default_rng(2024).uniform(-4.0, 4.0, 100)
DW_GRID = [{"seed": i, "init": float(x)} for i, x in enumerate(DW_INITS)]
COSINE = {"kind": "cosine", "lr_min": 0.0}
# rho_max = 0.01, rho_min = 1e-6 scaled x10 for the toy landscape
DW_RHO = {"rho_min": 1e-5, "rho_max": 0.1}

CONFIGS = {
    "quadratic_lorenza.json": {
        "objective": {"name": "quadratic", "shapes": [[8, 32], [16, 16]], "curvature": 1.0},
        "optimizer": {"name": "lorenza", "lr": 1e-2, "rank": 4, "update_freq": 200, "q": 1, "mu": 1e-3,
                      "rho": {"rho_min": 1e-6, "rho_max": 1e-2}, "lr_schedule": COSINE},
        "total_steps": 1000, "seed": 0, "run_name": "quadratic_lorenza", "log_every": 10,
    },
    "mlp_adamw.json": {
        "objective": {"name": "mlp", "layer_dims": [8, 32, 4], "n_samples": 256, "data_seed": 0},
        "optimizer": {"name": "adamw", "lr": 3e-3, "weight_decay": 1e-2, "lr_schedule": COSINE},
        "total_steps": 500, "batch_size": 32, "seed": 0, "run_name": "mlp_adamw", "log_every": 10,
    },
    "mlp_lorenza.json": {
        "objective": {"name": "mlp", "layer_dims": [8, 32, 4], "n_samples": 256, "data_seed": 0},
        "optimizer": {"name": "lorenza", "lr": 3e-3, "rank": 4, "update_freq": 100,
                      "rho": {"rho_min": 1e-6, "rho_max": 1e-2}, "lr_schedule": COSINE},
        "total_steps": 500, "batch_size": 32, "seed": 0, "run_name": "mlp_lorenza", "log_every": 10,
        "checkpoint_every": 100,
    },
    "matrix_factorization_lorenza.json": {
        "objective": {"name": "matrix_factorization", "m": 8, "n": 8, "rank_true": 2, "init_scale": 0.5},
        "optimizer": {"name": "lorenza", "lr": 1e-2, "rank": 2, "update_freq": 50,
                      "rho": {"rho_min": 1e-6, "rho_max": 1e-2}, "lr_schedule": COSINE},
        "total_steps": 5000, "seed": 0, "grad_tol": 1e-4, "run_name": "mf_lorenza", "log_every": 50,
    },
    "double_well_adam.json": {
        "objective": {"name": "double_well"},
        "optimizer": {"name": "adam", "lr": 1e-2, "lr_schedule": COSINE},
        "total_steps": 1000, "grid": DW_GRID, "run_name": "dw_adam", "log_every": 100,
    },
    "double_well_lorenza.json": {
        "objective": {"name": "double_well"},
        "optimizer": {"name": "lorenza", "lr": 1e-2, "rank": 1, "update_freq": 200, "rho": DW_RHO,
                      "lr_schedule": COSINE},
        "total_steps": 1000, "grid": DW_GRID, "run_name": "dw_lorenza", "log_every": 100,
    },
}

if __name__ == "__main__":
    OUT.mkdir(exist_ok=True)
    for name, cfg in CONFIGS.items():
        (OUT / name).write_text(json.dumps(cfg, indent=1) + "\n")
        print(OUT / name)
