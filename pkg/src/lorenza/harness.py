"""Experiment runner: config ingestion, seeded single and grid runs, JSONL
metrics, oracle-call audit, optimizer-state accounting and checkpoints.

Config files are JSON; see ``configs/`` and the README for the schema.
Environment overrides: ``LORENZA_OUTPUT_DIR`` replaces ``output_dir`` and
``LORENZA_THREADS`` caps the number of concurrent grid trials.
"""
from __future__ import annotations

import csv
import glob as _glob
import hashlib
import json
import logging
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Any

import numpy as np

from .adazo import AdazoConfig, adazo_init, adazo_step, resolve_rho
from .baselines import AdamConfig, SamConfig, adam_init, adam_step, lowrank_adam_step, sam_init, sam_step
from .checkpoint import checkpoint_load, checkpoint_save
from .core import NumericalError, RngStream
from .lowrank import LorenzaConfig, lorenza_init, lorenza_step
from .objectives import (ObjectiveOracle, ParamSet, double_well_objective, load_regression_csv,
                         matrix_factorization_objective, mlp_objective, quadratic_objective)
from .schedules import RhoSchedule, cosine_lr

log = logging.getLogger(__name__)

OPTIMIZERS = ("adam", "adamw", "sam", "adasam", "adazo", "lorenza", "lowrank_adam")
OBJECTIVES = ("quadratic", "double_well", "mlp", "matrix_factorization")

# stream ids derived from the run seed
_INIT_STREAM, _BATCH_STREAM, _OPT_STREAM, _DATA_STREAM = 1, 2, 3, 4


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    """One run, or a grid of trials when ``grid`` is non-empty.

    ``objective`` and ``optimizer`` are ``{"name": ..., **params}`` dicts.
    Each grid entry may set ``seed`` and ``init`` (double-well start point).
    """

    objective: dict[str, Any]
    optimizer: dict[str, Any]
    total_steps: int
    seed: int = 0
    batch_size: int = 0  # 0 means full batch
    grid: list[dict[str, Any]] = field(default_factory=list)
    output_dir: str = "runs"
    run_name: str = "run"
    log_every: int = 1
    grad_tol: float | None = None
    checkpoint_every: int | None = None
    stop_after: int | None = None
    record_wall_time: bool = False

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if not isinstance(self.total_steps, int) or self.total_steps < 1:
            raise ConfigError("total_steps must be an integer >= 1")
        if self.log_every < 1:
            raise ConfigError("log_every must be >= 1")
        if self.batch_size < 0:
            raise ConfigError("batch_size must be >= 0")
        if self.objective.get("name") not in OBJECTIVES:
            raise ConfigError(f"objective name must be one of {OBJECTIVES}")
        if self.optimizer.get("name") not in OPTIMIZERS:
            raise ConfigError(f"optimizer name must be one of {OPTIMIZERS}")
        seeds = [g.get("seed", self.seed) for g in self.grid]
        if self.grid and len(set(zip(seeds, [json.dumps(g.get("init")) for g in self.grid]))) != len(self.grid):
            raise ConfigError("grid trials must be distinct")
        for key in ("checkpoint_every", "stop_after"):
            v = getattr(self, key)
            if v is not None and v < 1:
                raise ConfigError(f"{key} must be >= 1")

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "RunConfig":
        known = set(cls.__dataclass_fields__)
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        missing = {"objective", "optimizer", "total_steps"} - set(d)
        if missing:
            raise ConfigError(f"missing config keys: {sorted(missing)}")
        return cls(**d)

    @classmethod
    def from_json(cls, path) -> "RunConfig":
        cfg = cls.from_dict(json.loads(Path(path).read_text()))
        return apply_env_overrides(cfg)

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)

    def trajectory_hash(self) -> str:
        """sha256 over everything that influences the emitted metrics."""
        d = self.to_dict()
        for k in ("output_dir", "run_name", "checkpoint_every", "stop_after"):
            d.pop(k)
        return hashlib.sha256(json.dumps(d, sort_keys=True).encode()).hexdigest()


def apply_env_overrides(cfg: RunConfig) -> RunConfig:
    out = os.environ.get("LORENZA_OUTPUT_DIR")
    return replace(cfg, output_dir=out) if out else cfg


def thread_count() -> int:
    raw = os.environ.get("LORENZA_THREADS")
    if raw is None:
        return min(8, os.cpu_count() or 1)
    n = int(raw)
    if n < 1:
        raise ConfigError("LORENZA_THREADS must be >= 1")
    return n


# -- objectives ---------------------------------------------------------------

def build_objective(spec: dict[str, Any], seed: int) -> tuple[ObjectiveOracle, ParamSet]:
    """Oracle and initial parameters. Randomness comes from ``seed`` unless the
    spec pins its own ``data_seed`` / ``init_seed``."""
    name = spec["name"]
    p = {k: v for k, v in spec.items() if k != "name"}
    init_rng = RngStream(p.pop("init_seed", seed), _INIT_STREAM)
    data_seed = p.pop("data_seed", seed)
    init_scale = float(p.pop("init_scale", 1.0))

    if name == "quadratic":
        shapes = [tuple(s) for s in p.pop("shapes", [[2, 3]])]
        curvature = float(p.pop("curvature", 1.0))
        drng = RngStream(data_seed, _DATA_STREAM)
        target = ParamSet.from_natural({f"W{i}": drng.normal(s) for i, s in enumerate(shapes)})
        oracle = quadratic_objective(target, curvature)
        params = ParamSet.from_natural({f"W{i}": init_scale * init_rng.normal(s) for i, s in enumerate(shapes)})
    elif name == "double_well":
        lo, hi = float(p.pop("init_low", -4.0)), float(p.pop("init_high", 4.0))
        x0 = p.pop("init", None)
        oracle = double_well_objective(**p)
        p.clear()
        if x0 is None:
            x0 = init_rng.uniform(lo, hi)
        params = ParamSet.from_natural({"x": np.array([[float(x0)]])})
    elif name == "mlp":
        dims = list(p.pop("layer_dims", [4, 8, 2]))
        csv_path = p.pop("csv", None)
        data = load_regression_csv(csv_path) if csv_path else None
        oracle = mlp_objective(dims, dataset_seed=data_seed, n_samples=int(p.pop("n_samples", 64)), data=data)
        params = ParamSet.from_natural({
            f"W{i}": init_scale * init_rng.normal((dims[i + 1], dims[i])) / math.sqrt(dims[i])
            for i in range(len(dims) - 1)})
    elif name == "matrix_factorization":
        m, n = int(p.pop("m", 8)), int(p.pop("n", 8))
        rank_true = int(p.pop("rank_true", 2))
        factor_rank = int(p.pop("factor_rank", rank_true))
        drng = RngStream(data_seed, _DATA_STREAM)
        observed = drng.normal((m, rank_true)) @ drng.normal((rank_true, n)) / math.sqrt(rank_true)
        oracle = matrix_factorization_objective(observed, factor_rank)
        params = ParamSet.from_natural({"A": init_scale * init_rng.normal((m, factor_rank)),
                                        "B": init_scale * init_rng.normal((factor_rank, n))})
    else:
        raise ConfigError(f"unknown objective {name!r}")
    if p:
        raise ConfigError(f"unknown {name} parameters: {sorted(p)}")
    return oracle, params


# -- optimizers ---------------------------------------------------------------

@dataclass
class LrSchedule:
    lr_max: float
    lr_min: float = 0.0
    kind: str = "constant"
    total: int = 1

    def __call__(self, step: int) -> float:
        if self.kind == "constant":
            return self.lr_max
        return cosine_lr(min(step, self.total), self.total, self.lr_max, self.lr_min)


def _rho_from_spec(rho, sched: LrSchedule):
    if isinstance(rho, dict):
        lr_min = sched.lr_min if sched.kind == "cosine" else 0.0
        return RhoSchedule(float(rho["rho_min"]), float(rho["rho_max"]), lr_min, sched.lr_max)
    return float(rho)


class OptimizerDriver:
    """Uniform start/step interface over the functional optimizers."""

    def __init__(self, spec: dict[str, Any], total_steps: int, seed: int):
        p = {k: v for k, v in spec.items() if k != "name"}
        self.name = spec["name"]
        sched_spec = dict(p.pop("lr_schedule", {"kind": "constant"}))
        lr = float(p.pop("lr", 1e-3))
        self.schedule = LrSchedule(lr, float(sched_spec.get("lr_min", 0.0)), sched_spec.get("kind", "constant"),
                                   int(sched_spec.get("total", total_steps)))
        if self.schedule.kind not in ("constant", "cosine"):
            raise ConfigError("lr_schedule.kind must be 'constant' or 'cosine'")
        if "rho" in p:
            p["rho"] = _rho_from_spec(p["rho"], self.schedule)
        try:
            if self.name in ("adam", "adamw"):
                if self.name == "adamw":
                    p.setdefault("weight_decay", 1e-2)
                self.cfg = AdamConfig(lr=lr, **p)
            elif self.name in ("sam", "adasam"):
                # the schedule stays on the driver; sam_step takes rho per call
                self._sam_rho = p.pop("rho", 0.05)
                fixed = self._sam_rho.rho_max if isinstance(self._sam_rho, RhoSchedule) else self._sam_rho
                self.cfg = SamConfig(lr=lr, rho=fixed, adaptive=self.name == "adasam", **p)
            elif self.name == "adazo":
                self.cfg = AdazoConfig(lr=lr, **p)
            else:
                self.cfg = LorenzaConfig(lr=lr, **p)
        except TypeError as err:
            raise ConfigError(f"bad {self.name} parameters: {err}") from err
        self.rng = RngStream(seed, _OPT_STREAM)
        self.state = None

    def start(self, params: ParamSet, oracle: ObjectiveOracle, batch) -> None:
        if self.name in ("adam", "adamw"):
            self.state = adam_init(params)
        elif self.name in ("sam", "adasam"):
            self.state = sam_init(params)
        elif self.name == "adazo":
            self.state = adazo_init(params)
        else:
            self.state = lorenza_init(params, self.cfg, oracle, batch, self.rng)

    def rho(self, lr: float) -> float:
        if self.name in ("adam", "adamw", "lowrank_adam"):
            return 0.0
        if self.name in ("sam", "adasam"):
            return resolve_rho(self._sam_rho, lr)
        return resolve_rho(self.cfg.rho, lr)

    def step(self, params: ParamSet, oracle: ObjectiveOracle, batch, lr: float) -> ParamSet:
        if self.name in ("adam", "adamw"):
            params, self.state = adam_step(self.state, params, oracle, batch, self.cfg, lr=lr)
        elif self.name in ("sam", "adasam"):
            params, self.state = sam_step(self.state, params, oracle, batch, self.cfg, lr=lr, rho=self.rho(lr))
        elif self.name == "adazo":
            params, self.state = adazo_step(self.state, params, oracle, batch, self.cfg, self.rng, lr=lr)
        elif self.name == "lorenza":
            params, self.state = lorenza_step(self.state, params, oracle, batch, self.cfg, self.rng, current_lr=lr)
        else:
            params, self.state = lowrank_adam_step(self.state, params, oracle, batch, self.cfg, self.rng,
                                                   current_lr=lr)
        return params

    @property
    def lowrank(self) -> bool:
        return self.name in ("lorenza", "lowrank_adam")

    def refresh_count(self) -> int:
        return self.state.refreshes if self.lowrank else 0

    def lowrank_grad_norm(self) -> float | None:
        if not self.lowrank:
            return None
        norms = [ls.last_lowrank_grad_norm for ls in self.state.layers.values()]
        if not all(math.isfinite(v) for v in norms):
            return None
        return math.sqrt(sum(v * v for v in norms))


# -- run loop -------------------------------------------------------------------

def sample_batch(oracle: ObjectiveOracle, batch_size: int, rng: RngStream):
    """Uniform with replacement; full batch when ``batch_size`` is 0 or the
    objective has no dataset."""
    if oracle.dataset_size is None or batch_size == 0:
        return oracle.full_batch()
    return tuple(int(i) for i in rng.integers(oracle.dataset_size, batch_size))


def _fmt(x):
    if isinstance(x, float) and not math.isfinite(x):
        return None
    return x


def _record_line(rec: dict[str, Any]) -> str:
    return json.dumps({k: _fmt(v) for k, v in rec.items()}, separators=(",", ":")) + "\n"


def _metrics(step, oracle, params, driver, lr, refresh_flag, t0, record_wall):
    full = oracle.full_batch()
    g = oracle.peek_gradient(params, full)
    return {
        "step": step,
        "loss": oracle.peek_value(params, full),
        "grad_norm_sq": g.vdot(g),
        "lowrank_grad_norm": driver.lowrank_grad_norm(),
        "lr": lr,
        "rho": driver.rho(lr),
        "gradient_calls_cum": oracle.gradient_calls,
        "value_calls_cum": oracle.value_calls,
        "refresh_flag": refresh_flag,
        "refresh_count_cum": driver.refresh_count(),
        "wall_ms": round((time.perf_counter() - t0) * 1e3, 3) if record_wall else 0.0,
    }


@dataclass
class RunResult:
    metrics_path: Path
    summary: dict[str, Any]
    checkpoint_path: Path | None = None


def _trial_config(cfg: RunConfig, index: int | None) -> tuple[RunConfig, str]:
    if index is None:
        return cfg, cfg.run_name
    trial = cfg.grid[index]
    obj = dict(cfg.objective)
    if "init" in trial:
        obj["init"] = trial["init"]
    sub = replace(cfg, objective=obj, seed=int(trial.get("seed", cfg.seed)), grid=[])
    return sub, f"{cfg.run_name}_trial{index:03d}"


def run_experiment(cfg: RunConfig, resume: str | os.PathLike | None = None,
                   trial_index: int | None = None) -> RunResult:
    """Run one trajectory and write ``<output_dir>/<run_name>.jsonl``.

    Every line but the last is a metrics record; the last is a summary with
    ``"summary": true``. With ``stop_after`` set, the loop halts after that
    many steps and leaves a checkpoint to resume from.
    """
    cfg, name = _trial_config(cfg, trial_index)
    out_dir = Path(cfg.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    metrics_path = out_dir / f"{name}.jsonl"
    ckpt_path = out_dir / f"{name}.ckpt"
    chash = cfg.trajectory_hash()

    oracle, params = build_objective(cfg.objective, cfg.seed)
    driver = OptimizerDriver(cfg.optimizer, cfg.total_steps, cfg.seed)
    batch_rng = RngStream(cfg.seed, _BATCH_STREAM)
    t0 = time.perf_counter()

    if resume is not None:
        ck = checkpoint_load(resume, expected_hash=chash)
        params, driver.state = ck["params"], ck["opt_state"]
        driver.rng = ck["opt_rng"]
        batch_rng = ck["batch_rng"]
        oracle.gradient_calls, oracle.value_calls = ck["gradient_calls"], ck["value_calls"]
        start, lines = ck["step"], ck["metrics_prefix"]
    else:
        start = 0
        batch = sample_batch(oracle, cfg.batch_size, batch_rng)
        driver.start(params, oracle, batch)
        pending_batch = batch
        lines = [_record_line(_metrics(0, oracle, params, driver, driver.schedule(0),
                                       driver.lowrank, t0, cfg.record_wall_time))]

    reason, stopped_at, saved = "steps_exhausted", None, None
    last = json.loads(lines[-1])
    if cfg.grad_tol is not None and last["grad_norm_sq"] <= cfg.grad_tol:
        reason = "grad_tol"
    step = start
    while reason == "steps_exhausted" and step < cfg.total_steps:
        if step == 0 and resume is None:
            batch = pending_batch
        else:
            batch = sample_batch(oracle, cfg.batch_size, batch_rng)
        lr = driver.schedule(step)
        refreshes_before = driver.refresh_count()
        try:
            params = driver.step(params, oracle, batch, lr)
        except NumericalError as err:
            log.warning("numerical abort at step %d: %s", step, err)
            reason = "numerical_abort"
            break
        step += 1
        refreshed = driver.refresh_count() > refreshes_before
        due = step % cfg.log_every == 0 or step == cfg.total_steps
        rec = None
        if due or cfg.grad_tol is not None:
            rec = _metrics(step, oracle, params, driver, lr, refreshed, t0, cfg.record_wall_time)
            if cfg.grad_tol is not None and rec["grad_norm_sq"] <= cfg.grad_tol:
                reason, due = "grad_tol", True
        if due:
            lines.append(_record_line(rec))
        if step < cfg.total_steps and reason == "steps_exhausted":
            if cfg.checkpoint_every and step % cfg.checkpoint_every == 0:
                saved = _save(ckpt_path, chash, step, params, driver, batch_rng, oracle, lines)
            if cfg.stop_after is not None and step == cfg.stop_after:
                saved = _save(ckpt_path, chash, step, params, driver, batch_rng, oracle, lines)
                stopped_at = step
                break

    if stopped_at is not None:
        metrics_path.write_text("".join(lines))
        return RunResult(metrics_path, {"summary": True, "termination": "stopped", "steps": step}, saved)

    full = oracle.full_batch()
    g = oracle.peek_gradient(params, full)
    summary = {
        "summary": True,
        "objective": cfg.objective,
        "optimizer": cfg.optimizer["name"],
        "seed": cfg.seed,
        "termination": reason,
        "steps": step,
        "final_loss": oracle.peek_value(params, full),
        "final_grad_norm_sq": g.vdot(g),
        "gradient_calls": oracle.gradient_calls,
        "value_calls": oracle.value_calls,
        "refreshes": driver.refresh_count(),
        "final_params": {k: v.tolist() for k, v in params.natural().items()},
    }
    metrics_path.write_text("".join(lines) + _record_line(summary))
    return RunResult(metrics_path, summary, saved)


def _save(path, chash, step, params, driver, batch_rng, oracle, lines) -> Path:
    return checkpoint_save(path, {
        "step": step,
        "params": params,
        "opt_state": driver.state,
        "opt_rng": driver.rng,
        "batch_rng": batch_rng,
        "gradient_calls": oracle.gradient_calls,
        "value_calls": oracle.value_calls,
        "metrics_prefix": list(lines),
    }, chash)


def read_metrics(path) -> tuple[list[dict[str, Any]], dict[str, Any] | None]:
    records, summary = [], None
    for line in Path(path).read_text().splitlines():
        obj = json.loads(line)
        if obj.get("summary"):
            summary = obj
        else:
            records.append(obj)
    return records, summary


# -- grids ----------------------------------------------------------------------

def run_grid(cfg: RunConfig, threads: int | None = None) -> tuple[list[RunResult], Path]:
    """Run every grid trial concurrently; results and the summary CSV are in
    trial order regardless of completion order."""
    if not cfg.grid:
        raise ConfigError("run_grid needs a non-empty grid")
    threads = thread_count() if threads is None else threads
    with ThreadPoolExecutor(max_workers=threads) as pool:
        results = list(pool.map(lambda i: run_experiment(cfg, trial_index=i), range(len(cfg.grid))))
    csv_path = Path(cfg.output_dir) / f"{cfg.run_name}_summary.csv"
    well = _well_for(cfg.objective) if cfg.objective["name"] == "double_well" else None
    with open(csv_path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["optimizer", "seed", "final_loss", "final_grad_norm_sq", "basin", "gradient_calls",
                    "value_calls"])
        for res in results:
            s = res.summary
            basin = well.basin(s["final_params"]["x"][0][0]) if well else ""
            w.writerow([s["optimizer"], s["seed"], repr(s["final_loss"]), repr(s["final_grad_norm_sq"]),
                        basin, s["gradient_calls"], s["value_calls"]])
    return results, csv_path


def run(cfg: RunConfig, resume=None) -> list[RunResult]:
    if cfg.grid:
        if resume is not None:
            raise ConfigError("resume applies to single runs, not grids")
        return run_grid(cfg)[0]
    return [run_experiment(cfg, resume=resume)]


# -- accounting -------------------------------------------------------------------

@dataclass
class MemoryReport:
    optimizer: str
    rank: int | None
    layers: dict[str, dict[str, int]]
    weights: int
    state_actual: int
    state_paper: int
    formula_actual: str
    formula_paper: str


def memory_report(shapes: dict[str, tuple[int, int]], optimizer: str, rank: int | None = None) -> MemoryReport:
    """Optimizer-state element counts per layer.

    ``m`` is the smaller and ``n`` the larger layer dimension. Low-rank
    optimizers store ``Q`` (m x r), ``R`` and both moments (r x n each), while
    the published model counts only ``n r + 2 m r``.
    """
    if optimizer not in OPTIMIZERS:
        raise ConfigError(f"unknown optimizer {optimizer!r}")
    lowrank = optimizer in ("lorenza", "lowrank_adam")
    if lowrank and rank is None:
        raise ConfigError("low-rank optimizers need a rank")
    formulas = {
        "adam": ("2mn", "2mn"), "adamw": ("2mn", "2mn"), "adazo": ("2mn", "2mn"),
        "sam": ("2mn", "nm"), "adasam": ("2mn", "4nm"),
        "lorenza": ("mr + 3rn", "nr + 2mr"), "lowrank_adam": ("mr + 3rn", "nr + 2mr"),
    }
    layers, tot_w, tot_a, tot_p = {}, 0, 0, 0
    for name, shape in shapes.items():
        m, n = sorted(int(s) for s in shape)
        if lowrank:
            if not 1 <= rank <= m:
                raise ConfigError(f"rank {rank} must lie in [1, {m}] for layer {name!r}")
            actual, paper = m * rank + 3 * rank * n, n * rank + 2 * m * rank
        elif optimizer == "sam":
            # SamState keeps (unused) moment buffers for the plain variant too
            actual, paper = 2 * m * n, n * m
        elif optimizer == "adasam":
            actual, paper = 2 * m * n, 4 * n * m
        else:
            actual = paper = 2 * m * n
        layers[name] = {"m": m, "n": n, "weights": m * n, "state_actual": actual, "state_paper": paper}
        tot_w, tot_a, tot_p = tot_w + m * n, tot_a + actual, tot_p + paper
    fa, fp = formulas[optimizer]
    return MemoryReport(optimizer, rank if lowrank else None, layers, tot_w, tot_a, tot_p,
                        f"sum_l [{fa}]", f"sum_l [{fp}]")


def memory_report_for_config(cfg: RunConfig) -> MemoryReport:
    _, params = build_objective(cfg.objective, cfg.seed)
    return memory_report(params.shapes(), cfg.optimizer["name"], cfg.optimizer.get("rank", 4))


def _contract(optimizer: str, steps: int, refreshes: int, q: int) -> tuple[int, int]:
    if optimizer in ("adam", "adamw"):
        return steps, 0
    if optimizer in ("sam", "adasam"):
        return 2 * steps, 0
    if optimizer == "adazo":
        return steps, 2 * q * steps
    if optimizer == "lorenza":
        return steps + refreshes, 2 * q * steps
    return steps + refreshes, 0


def audit_counters(path, optimizer: dict[str, Any] | None = None) -> list[str]:
    """Check every logged record against the contractual call counts.

    Returns a list of violations (empty when the file is consistent). GSAM
    runs are skipped since they add a second gradient per step.
    """
    records, summary = read_metrics(path)
    spec = optimizer if optimizer is not None else {"name": summary["optimizer"]}
    if spec.get("gsam_alpha") is not None:
        return []
    q = int(spec.get("q", 1))
    bad, prev = [], None
    for rec in records:
        want = _contract(spec["name"], rec["step"], rec["refresh_count_cum"], q)
        got = (rec["gradient_calls_cum"], rec["value_calls_cum"])
        if got != want:
            bad.append(f"step {rec['step']}: calls {got} != contract {want}")
        if prev is not None and (got[0] < prev[0] or got[1] < prev[1]):
            bad.append(f"step {rec['step']}: counters decreased")
        prev = got
    return bad


# -- basin statistics ------------------------------------------------------------

def _well_for(spec: dict[str, Any]):
    if spec.get("name") != "double_well":
        raise ConfigError("basin statistics need a double_well objective")
    keys = ("center_sharp", "width_sharp", "center_flat", "width_flat")
    return double_well_objective(**{k: spec[k] for k in keys if k in spec}).well


def basin_statistics(summaries: list[dict[str, Any]]) -> dict[str, dict[str, int]]:
    """Per-optimizer counts of terminal points in the sharp well, the flat
    well, or neither."""
    table: dict[str, dict[str, int]] = {}
    for s in summaries:
        well = _well_for(s["objective"])
        row = table.setdefault(s["optimizer"], {"sharp": 0, "flat": 0, "neither": 0, "runs": 0})
        row[well.basin(s["final_params"]["x"][0][0])] += 1
        row["runs"] += 1
    return table


def basin_statistics_from_files(pattern: str) -> dict[str, dict[str, int]]:
    paths = sorted(_glob.glob(pattern))
    if not paths:
        raise FileNotFoundError(f"no metrics files match {pattern!r}")
    summaries = []
    for p in paths:
        _, s = read_metrics(p)
        if s is not None and "final_params" in s:
            summaries.append(s)
    return basin_statistics(summaries)


def format_basin_table(table: dict[str, dict[str, int]]) -> str:
    lines = [f"{'optimizer':<14}{'sharp':>7}{'flat':>7}{'neither':>9}{'runs':>7}"]
    for opt in sorted(table):
        r = table[opt]
        lines.append(f"{opt:<14}{r['sharp']:>7}{r['flat']:>7}{r['neither']:>9}{r['runs']:>7}")
    return "\n".join(lines)
