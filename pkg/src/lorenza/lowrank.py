"""LORENZA: low-rank adaptive SAM with a zeroth-order ascent step.

Per layer the optimizer keeps an orthonormal basis ``Q`` (m x r) selected by
SSRF from a full gradient, the coefficient factor ``R`` (r x n), and Adam
moments ``M``, ``V`` of shape r x n. A step

1. refreshes the subspace when due (one extra gradient call),
2. estimates an ascent direction from ``2q`` loss values along random
   directions ``Q diag(u) R``,
3. takes the single gradient at the ascent point and projects it, ``Q^T G``,
4. runs Adam in the projected space and maps the update back with ``Q``.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .adazo import PERTURBATION_SIGNS, perturbed_point, resolve_rho, signed
from .core import DimensionError, NumericalError, RngStream, frobenius_norm, random_orthonormal
from .moments import adam_moments
from .objectives import Batch, GradSet, ObjectiveOracle, ParamSet
from .rge import DegeneratePerturbationError, DirectionSpec, estimate_gradient
from .schedules import RhoSchedule
from .ssrf import DegenerateInputError, Subspace, ssrf

log = logging.getLogger(__name__)

REFRESH_MODES = ("periodic", "grad_norm")
_SUBSPACE_STREAM = 0x5B5


@dataclass(frozen=True)
class LorenzaConfig:
    """Hyperparameters.

    ``lr`` is the scale factor that multiplies the back-projected update;
    ``eta`` is accepted for parity with the published inputs and defaults to
    ``lr``. ``refresh_threshold`` is only read in ``grad_norm`` mode.
    """

    lr: float = 1e-3
    eta: float | None = None
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    weight_decay: float = 0.0
    rank: int = 4
    update_freq: int = 200
    refresh_mode: str = "periodic"
    refresh_threshold: float = 0.0
    q: int = 1
    mu: float = 1e-3
    rho: float | RhoSchedule = 0.05
    gsam_alpha: float | None = None
    perturbation_sign: str = "ascent"
    reset_moments_on_refresh: bool = False
    power_iters: int = 0

    def __post_init__(self):
        if self.lr <= 0 or self.eps <= 0 or self.mu <= 0:
            raise ValueError("need lr > 0, eps > 0, mu > 0")
        if self.rank < 1 or self.update_freq < 1 or self.q < 1:
            raise ValueError("need rank >= 1, update_freq >= 1, q >= 1")
        if self.weight_decay < 0:
            raise ValueError("weight_decay must be nonnegative")
        if not (0 <= self.beta1 < 1 and 0 <= self.beta2 < 1):
            raise ValueError("betas must lie in [0, 1)")
        if isinstance(self.rho, (int, float)) and self.rho < 0:
            raise ValueError("rho must be nonnegative")
        if self.refresh_mode not in REFRESH_MODES:
            raise ValueError(f"refresh_mode must be one of {REFRESH_MODES}")
        if self.perturbation_sign not in PERTURBATION_SIGNS:
            raise ValueError(f"perturbation_sign must be one of {PERTURBATION_SIGNS}")

    @property
    def step_size(self) -> float:
        return self.lr if self.eta is None else self.eta


@dataclass(frozen=True)
class LorenzaLayerState:
    sub: Subspace
    M: np.ndarray
    V: np.ndarray
    t: int = 0  # steps since the moments were last zeroed
    last_refresh_step: int = 0
    last_lowrank_grad_norm: float = math.inf


@dataclass(frozen=True)
class LorenzaState:
    layers: dict[str, LorenzaLayerState]
    t: int
    rng: RngStream = field(compare=False)
    refreshes: int = 0
    degenerate_steps: int = 0

    def refreshed_at(self, step: int) -> bool:
        return any(ls.last_refresh_step == step for ls in self.layers.values())


def _select(G: np.ndarray, r: int, rng: RngStream, step: int, power_iters: int,
            previous: Subspace | None) -> Subspace:
    try:
        return ssrf(G, r, rng, step=step, power_iters=power_iters, complete=True)
    except DegenerateInputError:
        if previous is not None:
            log.warning("zero gradient at refresh step %d; keeping previous subspace", step)
            return previous
        log.warning("zero gradient at initialization; using a random orthonormal basis")
        Q = random_orthonormal(rng, G.shape[0], r)
        return Subspace(Q, Q.T @ G, 0.0, step)


def lorenza_init(params: ParamSet, cfg: LorenzaConfig, oracle: ObjectiveOracle, batch: Batch,
                 rng: RngStream) -> LorenzaState:
    """Select the first subspace of every layer from one full gradient."""
    for name, w in params.layers.items():
        m, n = w.shape
        if m > n:
            raise DimensionError(f"layer {name!r} is {m}x{n}; store layers with rows <= cols")
        if cfg.rank > m:
            raise ValueError(f"rank {cfg.rank} exceeds min dimension {m} of layer {name!r}")
    sub_rng = rng.split(_SUBSPACE_STREAM)
    G = oracle.gradient(params, batch)
    layers = {}
    for name, w in params.layers.items():
        sub = _select(G[name], cfg.rank, sub_rng, 0, cfg.power_iters, None)
        r = sub.rank
        layers[name] = LorenzaLayerState(sub, np.zeros((r, w.shape[1])), np.zeros((r, w.shape[1])))
    return LorenzaState(layers, 0, sub_rng, refreshes=1)


def _refresh_due(ls: LorenzaLayerState, t: int, cfg: LorenzaConfig) -> bool:
    if ls.last_refresh_step == t:
        return False
    if cfg.refresh_mode == "periodic":
        return t % cfg.update_freq == 0
    return ls.last_lowrank_grad_norm <= cfg.refresh_threshold


def maybe_refresh_subspace(state: LorenzaState, params: ParamSet, oracle: ObjectiveOracle,
                           batch: Batch, cfg: LorenzaConfig) -> LorenzaState:
    """Recompute ``(Q, R)`` for layers whose refresh criterion fires.

    At most one gradient call is made, shared by all refreshing layers.
    Moments are carried over unless ``reset_moments_on_refresh`` is set.
    """
    due = [k for k, ls in state.layers.items() if _refresh_due(ls, state.t, cfg)]
    if not due:
        return state
    G = oracle.gradient(params, batch)
    if not G.is_finite():
        raise NumericalError("non-finite gradient at subspace refresh")
    layers = dict(state.layers)
    for k in due:
        ls = layers[k]
        sub = _select(G[k], cfg.rank, state.rng, state.t, cfg.power_iters, ls.sub)
        if cfg.reset_moments_on_refresh:
            ls = replace(ls, M=np.zeros_like(ls.M), V=np.zeros_like(ls.V), t=0)
        layers[k] = replace(ls, sub=sub, last_refresh_step=state.t)
    return replace(state, layers=layers, refreshes=state.refreshes + 1)


def lowrank_perturbation(state: LorenzaState, params: ParamSet, oracle: ObjectiveOracle,
                         batch: Batch, cfg: LorenzaConfig, rng: RngStream) -> GradSet:
    """Joint zeroth-order estimate along ``Q diag(u) R`` directions; ``2q`` value calls."""
    spec = DirectionSpec.subspace({k: (ls.sub.Q, ls.sub.R) for k, ls in state.layers.items()})
    est = estimate_gradient(oracle, params, batch, cfg.mu, cfg.q, spec, rng)
    return signed(est.grads, cfg.perturbation_sign)


def gsam_decompose(grad_unperturbed: GradSet, grad_sam: GradSet, alpha_gsam: float) -> GradSet:
    """``grad_sam - alpha * g_perp`` with ``g_perp`` the part of the plain
    gradient orthogonal to ``grad_sam`` (inner products over all layers)."""
    nsq = grad_sam.vdot(grad_sam)
    if nsq == 0.0:
        raise DegeneratePerturbationError("zero SAM gradient in surrogate-gap decomposition")
    g_perp = grad_unperturbed.axpy(-grad_unperturbed.vdot(grad_sam) / nsq, grad_sam)
    return grad_sam.axpy(-alpha_gsam, g_perp)


def lorenza_step(state: LorenzaState, params: ParamSet, oracle: ObjectiveOracle, batch: Batch,
                 cfg: LorenzaConfig, rng: RngStream, current_lr: float | None = None,
                 perturb: bool = True) -> tuple[ParamSet, LorenzaState]:
    """One LORENZA update. On any error both streams are rewound and the
    caller's ``state`` stays valid."""
    snapshot = (rng.get_state(), state.rng.get_state())
    try:
        return _step(state, params, oracle, batch, cfg, rng, current_lr, perturb)
    except Exception:
        rng.set_state(snapshot[0])
        state.rng.set_state(snapshot[1])
        raise


def _step(state, params, oracle, batch, cfg, rng, current_lr, perturb):
    lr = cfg.lr if current_lr is None else current_lr
    state = maybe_refresh_subspace(state, params, oracle, batch, cfg)

    point, degenerate = params, False
    if perturb:
        pert = lowrank_perturbation(state, params, oracle, batch, cfg, rng)
        point, degenerate = perturbed_point(params, pert, resolve_rho(cfg.rho, lr))
    g = oracle.gradient(point, batch)
    if cfg.gsam_alpha is not None:
        g = gsam_decompose(oracle.gradient(params, batch), g, cfg.gsam_alpha)
    if not g.is_finite():
        raise NumericalError("non-finite SAM gradient")

    layers, new = {}, {}
    for k, w in params.layers.items():
        ls = state.layers[k]
        Q = ls.sub.Q
        g_low = Q.T @ g[k]
        M, V, d = adam_moments(ls.M, ls.V, g_low, ls.t, cfg.beta1, cfg.beta2, cfg.eps)
        upd = w - lr * (Q @ d)
        if cfg.weight_decay > 0:
            upd = upd - lr * cfg.weight_decay * w
        new[k] = upd
        layers[k] = replace(ls, M=M, V=V, t=ls.t + 1, last_lowrank_grad_norm=frobenius_norm(g_low))
    out = params.like(new)
    if not out.is_finite():
        raise NumericalError("non-finite parameters after LORENZA update")
    return out, replace(state, layers=layers, t=state.t + 1,
                        degenerate_steps=state.degenerate_steps + degenerate)
