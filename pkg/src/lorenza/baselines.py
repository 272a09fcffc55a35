"""Reference optimizers: Adam/AdamW, two-gradient SAM/AdaSAM, low-rank Adam."""
from __future__ import annotations

import logging
from dataclasses import dataclass, replace

from .core import NumericalError, RngStream
from .moments import adam_moments
from .objectives import Batch, GradSet, ObjectiveOracle, ParamSet
from .rge import DegeneratePerturbationError, ascent_perturb

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class AdamConfig:
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    weight_decay: float = 0.0

    def __post_init__(self):
        if self.lr <= 0 or self.eps <= 0 or self.weight_decay < 0:
            raise ValueError("need lr > 0, eps > 0, weight_decay >= 0")
        if not (0 <= self.beta1 < 1 and 0 <= self.beta2 < 1):
            raise ValueError("betas must lie in [0, 1)")


@dataclass(frozen=True)
class AdamState:
    M: GradSet
    V: GradSet
    t: int = 0


def adam_init(params: ParamSet) -> AdamState:
    return AdamState(params.zeros_like(), params.zeros_like(), 0)


def _adam_apply(state: AdamState, params: ParamSet, g: GradSet, lr: float, beta1: float,
                beta2: float, eps: float, weight_decay: float) -> tuple[ParamSet, AdamState]:
    M, V, new = {}, {}, {}
    for k, w in params.layers.items():
        M[k], V[k], d = adam_moments(state.M[k], state.V[k], g[k], state.t, beta1, beta2, eps)
        new[k] = w - lr * d
        if weight_decay > 0:
            new[k] = new[k] - lr * weight_decay * w
    out = params.like(new)
    if not out.is_finite():
        raise NumericalError("non-finite parameters after Adam update")
    return out, AdamState(params.like(M), params.like(V), state.t + 1)


def adam_step(state: AdamState, params: ParamSet, oracle: ObjectiveOracle, batch: Batch,
              cfg: AdamConfig, lr: float | None = None) -> tuple[ParamSet, AdamState]:
    """One Adam step; AdamW-style decoupled decay when ``weight_decay > 0``."""
    g = oracle.gradient(params, batch)
    if not g.is_finite():
        raise NumericalError("non-finite gradient")
    lr = cfg.lr if lr is None else lr
    return _adam_apply(state, params, g, lr, cfg.beta1, cfg.beta2, cfg.eps, cfg.weight_decay)


@dataclass(frozen=True)
class SamConfig:
    """Plain SAM (SGD outer step) or, with ``adaptive=True``, AdaSAM."""

    lr: float = 1e-2
    rho: float = 0.05
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    adaptive: bool = False

    def __post_init__(self):
        if self.lr <= 0 or self.rho < 0 or self.eps <= 0:
            raise ValueError("need lr > 0, rho >= 0, eps > 0")
        if not (0 <= self.beta1 < 1 and 0 <= self.beta2 < 1):
            raise ValueError("betas must lie in [0, 1)")


@dataclass(frozen=True)
class SamState:
    M: GradSet
    V: GradSet
    t: int = 0
    degenerate_steps: int = 0


def sam_init(params: ParamSet) -> SamState:
    return SamState(params.zeros_like(), params.zeros_like(), 0)


def sam_step(state: SamState, params: ParamSet, oracle: ObjectiveOracle, batch: Batch,
             cfg: SamConfig, lr: float | None = None, rho: float | None = None) -> tuple[ParamSet, SamState]:
    """Two gradient calls: one at ``W`` for the ascent direction, one at the ascent point."""
    lr = cfg.lr if lr is None else lr
    rho = cfg.rho if rho is None else rho
    g0 = oracle.gradient(params, batch)
    degenerate = False
    try:
        point = ascent_perturb(params, g0, rho)
    except DegeneratePerturbationError:
        log.info("zero gradient; SAM step taken without perturbation")
        point, degenerate = params, True
    g = oracle.gradient(point, batch)
    if not g.is_finite():
        raise NumericalError("non-finite SAM gradient")
    if cfg.adaptive:
        out, inner = _adam_apply(AdamState(state.M, state.V, state.t), params, g, lr,
                                 cfg.beta1, cfg.beta2, cfg.eps, 0.0)
        M, V = inner.M, inner.V
    else:
        out = params.axpy(-lr, g)
        M, V = state.M, state.V
    if not out.is_finite():
        raise NumericalError("non-finite parameters after SAM update")
    return out, SamState(M, V, state.t + 1, state.degenerate_steps + degenerate)


def lowrank_adam_step(state, params: ParamSet, oracle: ObjectiveOracle, batch: Batch, cfg,
                      rng: RngStream, current_lr: float | None = None):
    """GaLore-style ablation: the LORENZA step with the perturbation removed.

    Shares :class:`~lorenza.lowrank.LorenzaState`. No value calls are made;
    subspace sampling draws from the state's own stream, so the trajectory is
    bitwise that of :func:`~lorenza.lowrank.lorenza_step` at ``rho = 0``.
    """
    from .lowrank import lorenza_step

    return lorenza_step(state, params, oracle, batch, replace(cfg, rho=0.0, gsam_alpha=None), rng,
                        current_lr, perturb=False)
