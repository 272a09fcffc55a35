"""Full-space adaptive SAM with a zeroth-order ascent direction (AdaZo-SAM).

Each step costs one gradient call and ``2q`` value calls: the ascent
direction comes from :func:`~lorenza.rge.estimate_gradient` instead of a
second backward pass.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, replace

import numpy as np

from .core import NumericalError, RngStream
from .moments import adam_moments
from .objectives import Batch, GradSet, ObjectiveOracle, ParamSet
from .rge import DegeneratePerturbationError, DirectionSpec, ascent_perturb, estimate_gradient
from .schedules import RhoSchedule

log = logging.getLogger(__name__)

PERTURBATION_SIGNS = ("ascent", "paper_verbatim")


@dataclass(frozen=True)
class AdazoConfig:
    lr: float = 1e-3
    rho: float | RhoSchedule = 0.05
    mu: float = 1e-3
    q: int = 1
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    perturbation_sign: str = "ascent"

    def __post_init__(self):
        if self.lr <= 0:
            raise ValueError("lr must be positive")
        if isinstance(self.rho, (int, float)) and self.rho < 0:
            raise ValueError("rho must be nonnegative")
        if self.mu <= 0 or self.q < 1 or self.eps <= 0:
            raise ValueError("need mu > 0, q >= 1, eps > 0")
        if not (0 <= self.beta1 < 1 and 0 <= self.beta2 < 1):
            raise ValueError("betas must lie in [0, 1)")
        if self.perturbation_sign not in PERTURBATION_SIGNS:
            raise ValueError(f"perturbation_sign must be one of {PERTURBATION_SIGNS}")


@dataclass(frozen=True)
class AdazoState:
    M: GradSet
    V: GradSet
    t: int = 0
    degenerate_steps: int = 0
    last_estimate_norm_sq: float = 0.0


def adazo_init(params: ParamSet) -> AdazoState:
    return AdazoState(params.zeros_like(), params.zeros_like(), 0)


def resolve_rho(rho: float | RhoSchedule, lr: float) -> float:
    return rho(lr) if isinstance(rho, RhoSchedule) else float(rho)


def signed(pert: GradSet, convention: str) -> GradSet:
    # the printed algorithms negate the estimate; "ascent" keeps +grad
    return pert if convention == "ascent" else pert.map(np.negative)


def perturbed_point(params: ParamSet, pert: GradSet, rho: float) -> tuple[ParamSet, bool]:
    """Ascent point, or ``params`` itself with a flag when the direction vanishes."""
    try:
        return ascent_perturb(params, pert, rho), False
    except DegeneratePerturbationError:
        log.info("degenerate perturbation; taking an unperturbed step")
        return params, True


def adazo_step(state: AdazoState, params: ParamSet, oracle: ObjectiveOracle, batch: Batch,
               cfg: AdazoConfig, rng: RngStream, lr: float | None = None) -> tuple[ParamSet, AdazoState]:
    lr = cfg.lr if lr is None else lr
    rho = resolve_rho(cfg.rho, lr)
    est = estimate_gradient(oracle, params, batch, cfg.mu, cfg.q, DirectionSpec.full(), rng)
    point, degenerate = perturbed_point(params, signed(est.grads, cfg.perturbation_sign), rho)
    g = oracle.gradient(point, batch)
    if not g.is_finite():
        raise NumericalError("non-finite SAM gradient")

    M, V, new = {}, {}, {}
    for k, w in params.layers.items():
        M[k], V[k], d = adam_moments(state.M[k], state.V[k], g[k], state.t, cfg.beta1, cfg.beta2, cfg.eps)
        new[k] = w - lr * d
    out = params.like(new)
    if not out.is_finite():
        raise NumericalError("non-finite parameters after AdaZo-SAM update")
    return out, replace(state, M=params.like(M), V=params.like(V), t=state.t + 1,
                        degenerate_steps=state.degenerate_steps + degenerate,
                        last_estimate_norm_sq=est.grads.vdot(est.grads))
