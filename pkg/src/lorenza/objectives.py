"""Objective oracles and analytic testbed losses.

Optimizers only ever see a :class:`ParamSet` in *stored* orientation, where
every layer has ``rows <= cols``. Layers that arrive tall are transposed on
ingestion and flagged; objectives evaluate on the natural orientation and
the oracle wrapper translates in both directions.
"""
from __future__ import annotations

import csv
import threading
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

from .core import DimensionError, NumericalError, RngStream, as_matrix

Batch = tuple


@dataclass(frozen=True)
class ParamSet:
    """Ordered named matrices in stored (rows <= cols) orientation."""

    layers: dict[str, np.ndarray]
    transposed: dict[str, bool] = field(default_factory=dict)

    @classmethod
    def from_natural(cls, layers: Mapping[str, np.ndarray]) -> "ParamSet":
        stored, flags = {}, {}
        for name, w in layers.items():
            w = as_matrix(w)
            flip = w.shape[0] > w.shape[1]
            stored[name] = w.T.copy() if flip else w
            flags[name] = flip
        return cls(stored, flags)

    def natural(self) -> dict[str, np.ndarray]:
        return {k: (w.T if self.transposed.get(k, False) else w) for k, w in self.layers.items()}

    def like(self, layers: Mapping[str, np.ndarray]) -> "ParamSet":
        """A ParamSet with this one's names and flags but new stored values."""
        out = {}
        for k, w in self.layers.items():
            v = layers[k]
            if v.shape != w.shape:
                raise DimensionError(f"layer {k!r}: shape {v.shape} != {w.shape}")
            out[k] = v
        return ParamSet(out, dict(self.transposed))

    def like_natural(self, layers: Mapping[str, np.ndarray]) -> "ParamSet":
        return self.like({k: (layers[k].T if self.transposed.get(k, False) else layers[k])
                          for k in self.layers})

    def zeros_like(self) -> "ParamSet":
        return self.like({k: np.zeros_like(w) for k, w in self.layers.items()})

    def map(self, fn: Callable[[np.ndarray], np.ndarray]) -> "ParamSet":
        return self.like({k: fn(w) for k, w in self.layers.items()})

    def axpy(self, scale: float, other: "ParamSet") -> "ParamSet":
        """``self + scale * other``."""
        self._check_congruent(other)
        return self.like({k: w + scale * other.layers[k] for k, w in self.layers.items()})

    def vdot(self, other: "ParamSet") -> float:
        self._check_congruent(other)
        return float(sum(np.sum(w * other.layers[k]) for k, w in self.layers.items()))

    def norm(self) -> float:
        return float(np.sqrt(sum(np.sum(np.square(w)) for w in self.layers.values())))

    def is_finite(self) -> bool:
        return all(np.all(np.isfinite(w)) for w in self.layers.values())

    @property
    def names(self) -> list[str]:
        return list(self.layers)

    @property
    def size(self) -> int:
        return sum(w.size for w in self.layers.values())

    def shapes(self) -> dict[str, tuple[int, int]]:
        return {k: w.shape for k, w in self.layers.items()}

    def _check_congruent(self, other: "ParamSet") -> None:
        if list(other.layers) != list(self.layers):
            raise DimensionError(f"layer names differ: {list(self.layers)} vs {list(other.layers)}")
        for k, w in self.layers.items():
            if other.layers[k].shape != w.shape:
                raise DimensionError(f"layer {k!r}: shape {other.layers[k].shape} != {w.shape}")

    def __getitem__(self, name: str) -> np.ndarray:
        return self.layers[name]


# Gradients share the container; the alias documents intent at call sites.
GradSet = ParamSet


class ObjectiveOracle:
    """Counted value/gradient access to a loss ``f(params; batch)``.

    ``value_fn`` and ``grad_fn`` receive natural-orientation dicts. ``peek_*``
    evaluate without touching the counters and are meant for logging only.
    """

    def __init__(
        self,
        value_fn: Callable[[dict[str, np.ndarray], Batch], float],
        grad_fn: Callable[[dict[str, np.ndarray], Batch], dict[str, np.ndarray]],
        name: str = "objective",
        dataset_size: int | None = None,
        smoothness: float | None = None,
    ):
        self._value_fn = value_fn
        self._grad_fn = grad_fn
        self.name = name
        self.dataset_size = dataset_size
        self.smoothness = smoothness
        self.value_calls = 0
        self.gradient_calls = 0
        self._lock = threading.Lock()

    def value(self, params: ParamSet, batch: Batch = ()) -> float:
        with self._lock:
            self.value_calls += 1
        return self.peek_value(params, batch)

    def gradient(self, params: ParamSet, batch: Batch = ()) -> GradSet:
        with self._lock:
            self.gradient_calls += 1
        return self.peek_gradient(params, batch)

    def peek_value(self, params: ParamSet, batch: Batch = ()) -> float:
        return float(self._value_fn(params.natural(), self._check_batch(batch)))

    def peek_gradient(self, params: ParamSet, batch: Batch = ()) -> GradSet:
        g = self._grad_fn(params.natural(), self._check_batch(batch))
        return params.like_natural(g)

    def reset_counters(self) -> None:
        with self._lock:
            self.value_calls = 0
            self.gradient_calls = 0

    def full_batch(self) -> Batch:
        return () if self.dataset_size is None else tuple(range(self.dataset_size))

    def _check_batch(self, batch: Batch) -> Batch:
        batch = tuple(int(i) for i in batch)
        if self.dataset_size is not None:
            if not batch:
                raise ValueError(f"{self.name}: empty batch")
            if min(batch) < 0 or max(batch) >= self.dataset_size:
                raise IndexError(f"{self.name}: batch index out of range [0, {self.dataset_size})")
        return batch


def quadratic_objective(target: ParamSet, curvature: float = 1.0) -> ObjectiveOracle:
    """``(curvature/2) * sum_l ||W_l - target_l||_F^2``."""
    if curvature <= 0:
        raise ValueError("curvature must be positive")
    tgt = target.natural()

    def _diff(w):
        if list(w) != list(tgt):
            raise DimensionError("parameter names do not match the target")
        out = {}
        for k, t in tgt.items():
            if w[k].shape != t.shape:
                raise DimensionError(f"layer {k!r}: shape {w[k].shape} != target {t.shape}")
            out[k] = w[k] - t
        return out

    def value(w, batch):
        return 0.5 * curvature * sum(float(np.sum(d * d)) for d in _diff(w).values())

    def grad(w, batch):
        return {k: curvature * d for k, d in _diff(w).items()}

    return ObjectiveOracle(value, grad, name="quadratic", smoothness=curvature)


@dataclass(frozen=True)
class DoubleWell:
    center_sharp: float = -2.0
    width_sharp: float = 0.2
    center_flat: float = 2.0
    width_flat: float = 2.0

    def value(self, x):
        zs = (x - self.center_sharp) / self.width_sharp
        zf = (x - self.center_flat) / self.width_flat
        return 2.0 - np.exp(-zs * zs) - np.exp(-zf * zf)

    def derivative(self, x):
        zs = (x - self.center_sharp) / self.width_sharp
        zf = (x - self.center_flat) / self.width_flat
        return (2.0 * zs / self.width_sharp) * np.exp(-zs * zs) + (2.0 * zf / self.width_flat) * np.exp(-zf * zf)

    def basin(self, x: float) -> str:
        if abs(x - self.center_sharp) < self.width_sharp:
            return "sharp"
        if abs(x - self.center_flat) < self.width_flat:
            return "flat"
        return "neither"


def double_well_objective(center_sharp: float = -2.0, width_sharp: float = 0.2,
                          center_flat: float = 2.0, width_flat: float = 2.0) -> ObjectiveOracle:
    """1-D landscape with a narrow well and a wide well, both bottoming near 1.

    The parameter is a single 1x1 layer named ``"x"``.
    """
    if width_sharp <= 0 or width_flat <= 0:
        raise ValueError("well widths must be positive")
    if center_sharp == center_flat:
        raise ValueError("well centers must differ")
    well = DoubleWell(center_sharp, width_sharp, center_flat, width_flat)

    def value(w, batch):
        return float(well.value(w["x"][0, 0]))

    def grad(w, batch):
        return {"x": np.array([[well.derivative(w["x"][0, 0])]])}

    oracle = ObjectiveOracle(value, grad, name="double_well",
                             smoothness=2.0 / min(width_sharp, width_flat) ** 2)
    oracle.well = well
    return oracle


def make_regression_data(d_in: int, d_out: int, n_samples: int, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Synthetic regression set: Gaussian inputs, random linear teacher plus noise."""
    rng = RngStream(seed, 0x5EED)
    X = rng.normal((n_samples, d_in))
    teacher = rng.normal((d_in, d_out)) / np.sqrt(d_in)
    y = X @ teacher + 0.1 * rng.normal((n_samples, d_out))
    return X, y


def load_regression_csv(path) -> tuple[np.ndarray, np.ndarray]:
    """Read a ``x_0,...,x_d,y`` CSV into inputs and a single-column target."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if not header or header[-1].strip() != "y" or not all(h.strip().startswith("x_") for h in header[:-1]):
            raise ValueError(f"{path}: header must be x_0,...,x_d,y, got {header}")
        rows = [[float(v) for v in row] for row in reader if row]
    data = np.array(rows, dtype=np.float64)
    if data.ndim != 2 or data.shape[0] == 0:
        raise ValueError(f"{path}: no data rows")
    return data[:, :-1], data[:, -1:]


def mlp_objective(layer_dims: Sequence[int], dataset_seed: int = 0, n_samples: int = 64,
                  data: tuple[np.ndarray, np.ndarray] | None = None) -> ObjectiveOracle:
    """Bias-free ReLU network with mean-squared-error loss.

    Layer ``W{i}`` maps ``layer_dims[i]`` to ``layer_dims[i+1]``; ReLU sits
    between consecutive linear maps. Per-sample loss is ``0.5*||pred - y||^2``
    and a batch loss is the mean over (possibly repeated) indices.
    """
    dims = [int(d) for d in layer_dims]
    if len(dims) < 2:
        raise ValueError("mlp needs at least an input and output dimension")
    if data is None:
        if n_samples < 1:
            raise ValueError("n_samples must be >= 1")
        X, Y = make_regression_data(dims[0], dims[-1], n_samples, dataset_seed)
    else:
        X, Y = (np.asarray(a, dtype=np.float64) for a in data)
        if X.shape[1] != dims[0] or Y.shape[1] != dims[-1]:
            raise DimensionError(f"data shapes {X.shape}, {Y.shape} do not fit dims {dims}")
    names = [f"W{i}" for i in range(len(dims) - 1)]

    def forward(w, idx):
        acts = [X[list(idx)]]
        pre = []
        h = acts[0]
        for i, name in enumerate(names):
            z = h @ w[name].T
            pre.append(z)
            h = np.maximum(z, 0.0) if i < len(names) - 1 else z
            acts.append(h)
        return acts, pre

    def value(w, batch):
        acts, _ = forward(w, batch)
        r = acts[-1] - Y[list(batch)]
        return 0.5 * float(np.sum(r * r)) / len(batch)

    def grad(w, batch):
        acts, pre = forward(w, batch)
        delta = (acts[-1] - Y[list(batch)]) / len(batch)
        out = {}
        for i in reversed(range(len(names))):
            out[names[i]] = delta.T @ acts[i]
            if i > 0:
                delta = (delta @ w[names[i]]) * (pre[i - 1] > 0)
        return out

    oracle = ObjectiveOracle(value, grad, name="mlp", dataset_size=X.shape[0])
    oracle.layer_names = names
    oracle.layer_dims = dims
    return oracle


def matrix_factorization_objective(observed: np.ndarray, rank_true: int) -> ObjectiveOracle:
    """``0.5 * ||observed - A @ B||_F^2`` over layers ``A`` (m x k) and ``B`` (k x n)."""
    O = as_matrix(observed)
    k = int(rank_true)
    if k < 1:
        raise ValueError("rank_true must be >= 1")

    def residual(w):
        A, B = w["A"], w["B"]
        if A.shape[1] != B.shape[0] or (A.shape[0], B.shape[1]) != O.shape:
            raise DimensionError(f"A{A.shape} @ B{B.shape} does not match observed {O.shape}")
        return O - A @ B

    def value(w, batch):
        r = residual(w)
        return 0.5 * float(np.sum(r * r))

    def grad(w, batch):
        r = residual(w)
        return {"A": -r @ w["B"].T, "B": -w["A"].T @ r}

    oracle = ObjectiveOracle(value, grad, name="matrix_factorization")
    oracle.observed = O
    oracle.rank_true = k
    return oracle


def finite_diff_gradient(oracle: ObjectiveOracle, params: ParamSet, batch: Batch = (),
                         h: float = 1e-6) -> GradSet:
    """Entrywise central differences using only counted value calls."""
    if h <= 0:
        raise ValueError("h must be positive")
    out = {}
    for name, w in params.layers.items():
        g = np.zeros_like(w)
        for idx in np.ndindex(w.shape):
            vals = []
            for s in (h, -h):
                bumped = w.copy()
                bumped[idx] += s
                v = oracle.value(params.like({**params.layers, name: bumped}), batch)
                if not np.isfinite(v):
                    raise NumericalError(f"non-finite value at layer {name!r} entry {idx}")
                vals.append(v)
            g[idx] = (vals[0] - vals[1]) / (2.0 * h)
        out[name] = g
    return params.like(out)


def max_relative_error(a: ParamSet, b: ParamSet, floor: float = 1e-8) -> float:
    """Largest ``|a-b|/|a|`` over entries where ``|a| > floor``."""
    worst = 0.0
    for k, x in a.layers.items():
        mask = np.abs(x) > floor
        if np.any(mask):
            worst = max(worst, float(np.max(np.abs(x[mask] - b.layers[k][mask]) / np.abs(x[mask]))))
    return worst

