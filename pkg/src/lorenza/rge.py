"""Zeroth-order gradient estimation by central differences along random directions."""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .core import NumericalError, RngStream, sample_gaussian
from .objectives import Batch, GradSet, ObjectiveOracle, ParamSet


class DirectionMode(enum.Enum):
    FULL_GAUSSIAN = "full_gaussian"
    SUBSPACE_LOW_RANK = "subspace_low_rank"


@dataclass(frozen=True)
class DirectionSpec:
    """How to draw the joint direction ``D`` over all layers.

    For ``SUBSPACE_LOW_RANK`` each layer supplies ``(Q, R)`` and its block of
    ``D`` is ``Q @ diag(u) @ R`` with ``u`` standard Gaussian of length r.
    """

    mode: DirectionMode = DirectionMode.FULL_GAUSSIAN
    factors: dict[str, tuple[np.ndarray, np.ndarray]] = field(default_factory=dict)

    @classmethod
    def full(cls) -> "DirectionSpec":
        return cls(DirectionMode.FULL_GAUSSIAN)

    @classmethod
    def subspace(cls, factors: dict[str, tuple[np.ndarray, np.ndarray]]) -> "DirectionSpec":
        return cls(DirectionMode.SUBSPACE_LOW_RANK, dict(factors))

    def sample(self, params: ParamSet, rng: RngStream) -> ParamSet:
        if self.mode is DirectionMode.FULL_GAUSSIAN:
            return params.like({k: sample_gaussian(rng, *w.shape) for k, w in params.layers.items()})
        out = {}
        for k, w in params.layers.items():
            Q, R = self.factors[k]
            if Q.shape[0] != w.shape[0] or R.shape[1] != w.shape[1] or Q.shape[1] != R.shape[0]:
                raise ValueError(f"layer {k!r}: factors Q{Q.shape}, R{R.shape} do not fit {w.shape}")
            u = rng.normal(Q.shape[1])
            out[k] = (Q * u) @ R
        return params.like(out)


@dataclass(frozen=True)
class ZoEstimate:
    grads: GradSet
    directions_used: int
    smoothing: float
    coefficients: tuple[float, ...] = ()


class DegeneratePerturbationError(ArithmeticError):
    pass


def central_coefficient(oracle: ObjectiveOracle, params: ParamSet, direction: ParamSet,
                        batch: Batch, mu: float, j: int = 0) -> float:
    """``(f(W + mu D) - f(W - mu D)) / (2 mu)``; two counted value calls."""
    vals = []
    for sign in (1.0, -1.0):
        v = oracle.value(params.axpy(sign * mu, direction), batch)
        if not np.isfinite(v):
            raise NumericalError(f"non-finite value at direction {j}, sign {'+' if sign > 0 else '-'}")
        vals.append(v)
    return (vals[0] - vals[1]) / (2.0 * mu)


def estimate_gradient(oracle: ObjectiveOracle, params: ParamSet, batch: Batch, mu: float, q: int,
                      spec: DirectionSpec, rng: RngStream) -> ZoEstimate:
    """Average of ``q`` central-difference directional estimates.

    One coefficient is shared across all layers, so the cost is exactly
    ``2q`` value calls regardless of the layer count.
    """
    if mu <= 0:
        raise ValueError("mu must be positive")
    if q < 1:
        raise ValueError("q must be >= 1")
    acc = {k: np.zeros_like(w) for k, w in params.layers.items()}
    coefs = []
    for j in range(q):
        d = spec.sample(params, rng)
        c = central_coefficient(oracle, params, d, batch, mu, j)
        coefs.append(c)
        for k in acc:
            acc[k] += c * d.layers[k]
    return ZoEstimate(params.like({k: a / q for k, a in acc.items()}), q, mu, tuple(coefs))


def ascent_perturb(params: ParamSet, pert: GradSet, rho: float, tol: float = 1e-12) -> ParamSet:
    """``W + rho * pert / ||pert||_F`` with the norm taken jointly over layers."""
    if rho < 0:
        raise ValueError("rho must be nonnegative")
    if rho == 0:
        return params
    nrm = pert.norm()
    if nrm < tol:
        raise DegeneratePerturbationError(f"perturbation norm {nrm:.3e} below {tol:g}")
    return params.axpy(rho / nrm, pert)
