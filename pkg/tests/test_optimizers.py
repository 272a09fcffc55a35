import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lorenza.adazo import AdazoConfig, adazo_init, adazo_step
from lorenza.baselines import (AdamConfig, SamConfig, adam_init, adam_step, lowrank_adam_step, sam_init,
                               sam_step)
from lorenza.core import DimensionError, NumericalError, RngStream
from lorenza.lowrank import (LorenzaConfig, gsam_decompose, lorenza_init, lorenza_step, lowrank_perturbation,
                             maybe_refresh_subspace)
from lorenza.moments import adam_moments
from lorenza.objectives import ObjectiveOracle, ParamSet, quadratic_objective
from lorenza.rge import DegeneratePerturbationError
from lorenza.schedules import RhoSchedule
from lorenza.ssrf import approximation_error
from oracles import random_params


def quad(seed=0, shapes=((4, 6), (3, 5)), curvature=1.0):
    tgt = random_params(seed, list(shapes))
    return quadratic_objective(tgt, curvature), random_params(seed + 100, list(shapes)), tgt


def same(a: ParamSet, b: ParamSet) -> bool:
    return all(np.array_equal(a[k], b[k]) for k in a.names)


class ConstantGradient(ObjectiveOracle):
    def __init__(self, G):
        super().__init__(lambda w, b: 0.0, lambda w, b: {k: v.copy() for k, v in G.items()})


# -- moments and Adam ---------------------------------------------------------

def test_bias_correction_constant_gradient():
    G = np.array([[0.3, -2.0, 1e-3]])
    M, V = np.zeros_like(G), np.zeros_like(G)
    for t in range(50):
        M, V, _ = adam_moments(M, V, G, t, 0.9, 0.999, 1e-8)
        m_hat = M / (1 - 0.9 ** (t + 1))
        v_hat = V / (1 - 0.999 ** (t + 1))
        assert np.allclose(m_hat, G, rtol=1e-12)
        assert np.allclose(v_hat, G * G, rtol=1e-12)


def test_adam_first_step_is_signed_lr():
    f = quadratic_objective(ParamSet.from_natural({"w": np.array([[1.0, -1.0, 3.0]])}))
    p = ParamSet.from_natural({"w": np.zeros((1, 3))})
    new, st = adam_step(adam_init(p), p, f, (), AdamConfig(lr=0.1))
    g = -np.array([[1.0, -1.0, 3.0]])
    assert np.allclose(new["w"], -0.1 * g / (np.abs(g) + 1e-8), rtol=0, atol=1e-15)
    assert st.t == 1


def test_adamw_decay_term_exact():
    f, p, _ = quad(1)
    cfg = AdamConfig(lr=0.05)
    plain, _ = adam_step(adam_init(p), p, f, (), cfg)
    decayed, _ = adam_step(adam_init(p), p, f, (), replace(cfg, weight_decay=0.01))
    for k in p.names:
        assert np.allclose(decayed[k] - plain[k], -0.05 * 0.01 * p[k], rtol=0, atol=1e-15)


def test_adam_rejects_non_finite_gradient():
    f = ObjectiveOracle(lambda w, b: 0.0, lambda w, b: {"w": np.array([[np.nan]])})
    p = ParamSet.from_natural({"w": np.zeros((1, 1))})
    with pytest.raises(NumericalError):
        adam_step(adam_init(p), p, f, (), AdamConfig())


# -- AdaZo-SAM -------------------------------------------------------------------

def test_adazo_init_zero_and_congruent():
    _, p, _ = quad()
    a, b = adazo_init(p), adazo_init(p)
    assert a.t == 0 and a.M.shapes() == p.shapes() and a.V.shapes() == p.shapes()
    assert all(not a.M[k].any() and not a.V[k].any() for k in p.names)
    assert all(np.array_equal(a.M[k], b.M[k]) for k in p.names)


def test_adazo_rho_zero_matches_adam_bitwise():
    f, p, _ = quad(2)
    a = b = p
    sa, sb = adam_init(p), adazo_init(p)
    rng = RngStream(9)
    for _ in range(500):
        a, sa = adam_step(sa, a, f, (), AdamConfig(lr=1e-2))
        b, sb = adazo_step(sb, b, f, (), AdazoConfig(lr=1e-2, rho=0.0), rng)
    assert same(a, b)


def test_adazo_first_step_algebra():
    f, p, _ = quad(3)
    cfg = AdazoConfig(lr=1e-2, rho=0.05, beta1=0.9, beta2=0.9)
    rng = RngStream(4)
    probe = RngStream(4)
    new, _ = adazo_step(adazo_init(p), p, f, (), cfg, rng)
    # recompute the ascent point with an identical stream
    from lorenza.rge import DirectionSpec, ascent_perturb, estimate_gradient

    est = estimate_gradient(f, p, (), cfg.mu, cfg.q, DirectionSpec.full(), probe)
    g = f.peek_gradient(ascent_perturb(p, est.grads, 0.05))
    for k in p.names:
        expected = -1e-2 * g[k] / (np.abs(g[k]) + 1e-8)
        assert np.allclose(new[k] - p[k], expected, rtol=1e-12, atol=1e-15)


@pytest.mark.parametrize("q", [1, 3])
def test_adazo_call_accounting(q):
    f, p, _ = quad()
    st = adazo_init(p)
    rng = RngStream(0)
    for step in range(1, 6):
        p, st = adazo_step(st, p, f, (), AdazoConfig(q=q), rng)
        assert (f.gradient_calls, f.value_calls) == (step, 2 * q * step)
    assert st.t == 5


def test_adazo_paper_sign_differs_from_ascent():
    f, p, _ = quad(5)
    a, _ = adazo_step(adazo_init(p), p, f, (), AdazoConfig(rho=0.5), RngStream(1))
    b, _ = adazo_step(adazo_init(p), p, f, (), AdazoConfig(rho=0.5, perturbation_sign="paper_verbatim"),
                      RngStream(1))
    assert not same(a, b)


def test_adazo_decreases_gradient_norm():
    # the quantitative rate check lives in the acceptance suite
    f, p, _ = quad(6, curvature=1.0)
    g0 = f.peek_gradient(p)
    st, rng = adazo_init(p), RngStream(6)
    for _ in range(500):
        p, st = adazo_step(st, p, f, (), AdazoConfig(lr=1e-2, rho=0.05), rng)
    g = f.peek_gradient(p)
    assert g.vdot(g) < 0.1 * g0.vdot(g0)


def test_adazo_non_finite_gradient_leaves_state():
    calls = {"n": 0}

    def grad(w, b):
        calls["n"] += 1
        return {"w": np.array([[np.inf]])}

    f = ObjectiveOracle(lambda w, b: float(w["w"][0, 0]), grad)
    p = ParamSet.from_natural({"w": np.ones((1, 1))})
    st = adazo_init(p)
    with pytest.raises(NumericalError):
        adazo_step(st, p, f, (), AdazoConfig(), RngStream(0))
    assert st.t == 0 and not st.M["w"].any()


def test_adazo_config_validation():
    with pytest.raises(ValueError):
        AdazoConfig(lr=0.0)
    with pytest.raises(ValueError):
        AdazoConfig(beta1=1.0)
    with pytest.raises(ValueError):
        AdazoConfig(perturbation_sign="descent")


# -- SAM ------------------------------------------------------------------------

def test_sam_two_gradient_calls():
    f, p, _ = quad()
    st = sam_init(p)
    for step in range(1, 4):
        p, st = sam_step(st, p, f, (), SamConfig())
        assert (f.gradient_calls, f.value_calls) == (2 * step, 0)


def test_sam_rho_zero_is_sgd():
    f, p, _ = quad(7)
    new, _ = sam_step(sam_init(p), p, f, (), SamConfig(lr=0.1, rho=0.0))
    assert same(new, p.axpy(-0.1, f.peek_gradient(p)))


def test_sam_perturbed_gradient_closed_form():
    f, p, tgt = quad(8, curvature=3.0)
    g = f.peek_gradient(p)
    rho = 0.2
    new, _ = sam_step(sam_init(p), p, f, (), SamConfig(lr=1.0, rho=rho))
    g_hat = g.map(lambda a: a / g.norm())
    for k in p.names:
        expected = 3.0 * (p[k] + rho * g_hat[k] - tgt[k])
        assert np.allclose(p[k] - new[k], expected, rtol=1e-10, atol=1e-12)


def test_sam_zero_gradient_unperturbed():
    f, _, tgt = quad(9)
    new, st = sam_step(sam_init(tgt), tgt, f, (), SamConfig())
    assert same(new, tgt) and st.degenerate_steps == 1


def test_adasam_uses_adam_outer_step():
    f, p, _ = quad(10)
    a, _ = sam_step(sam_init(p), p, f, (), SamConfig(lr=1e-2, rho=0.0, adaptive=True))
    b, _ = adam_step(adam_init(p), p, f, (), AdamConfig(lr=1e-2))
    assert same(a, b)


# -- LORENZA --------------------------------------------------------------------

def lorenza_setup(seed=0, rank=2, **kw):
    f, p, tgt = quad(seed)
    cfg = LorenzaConfig(lr=1e-2, rank=rank, **kw)
    rng = RngStream(seed, 3)
    return f, p, tgt, cfg, rng


def test_init_zero_moments_and_orthonormal():
    f, p, _, cfg, rng = lorenza_setup()
    st = lorenza_init(p, cfg, f, (), rng)
    assert st.t == 0 and f.gradient_calls == 1 and f.value_calls == 0
    for k, ls in st.layers.items():
        m, n = p[k].shape
        assert ls.sub.Q.shape == (m, 2) and ls.M.shape == (2, n) and ls.V.shape == (2, n)
        assert not ls.M.any() and not ls.V.any()
        assert np.allclose(ls.sub.Q.T @ ls.sub.Q, np.eye(2), atol=1e-12)


def test_init_rank_one_gradient_captured():
    u, v = np.arange(1.0, 4.0)[:, None], np.linspace(-1, 1, 5)[None, :]
    f = ConstantGradient({"w": u @ v})
    p = ParamSet.from_natural({"w": np.zeros((3, 5))})
    st = lorenza_init(p, LorenzaConfig(rank=1), f, (), RngStream(0))
    assert approximation_error(u @ v, st.layers["w"].sub) <= 1e-12 * np.linalg.norm(u @ v)


def test_init_zero_gradient_falls_back_to_random_basis():
    f, _, tgt, cfg, rng = lorenza_setup()
    st = lorenza_init(tgt, cfg, f, (), rng)
    for ls in st.layers.values():
        Q = ls.sub.Q
        assert np.allclose(Q.T @ Q, np.eye(Q.shape[1]), atol=1e-12)


def test_init_rank_too_large_names_layer():
    f, p, _, _, rng = lorenza_setup()
    with pytest.raises(ValueError, match="L1"):
        lorenza_init(p, LorenzaConfig(rank=4), f, (), rng)


def test_init_rejects_wrong_orientation():
    p = ParamSet({"w": np.zeros((5, 3))}, {"w": False})
    f = ConstantGradient({"w": np.ones((5, 3))})
    with pytest.raises(DimensionError):
        lorenza_init(p, LorenzaConfig(rank=1), f, (), RngStream(0))


def test_periodic_refresh_boundary():
    f, p, _, cfg, rng = lorenza_setup(update_freq=200)
    st = lorenza_init(p, cfg, f, (), rng)
    st199 = maybe_refresh_subspace(replace(st, t=199), p, f, (), cfg)
    assert st199.refreshes == st.refreshes
    st200 = maybe_refresh_subspace(replace(st, t=200), p, f, (), cfg)
    assert st200.refreshes == st.refreshes + 1 and st200.refreshed_at(200)


def test_grad_norm_mode_infinite_threshold_refreshes_every_step():
    f, p, _, cfg, rng = lorenza_setup(refresh_mode="grad_norm", refresh_threshold=math.inf)
    st = lorenza_init(p, cfg, f, (), rng)
    for step in range(1, 6):
        p, st = lorenza_step(st, p, f, (), cfg, rng)
        assert st.refreshes == step  # init refresh plus one per later step
    assert f.gradient_calls == 1 + 5 + 4


def test_grad_norm_trigger_iff_below_threshold():
    f, p, _, cfg, rng = lorenza_setup(refresh_mode="grad_norm", refresh_threshold=1.0)
    st = lorenza_init(p, cfg, f, (), rng)
    p, st = lorenza_step(st, p, f, (), cfg, rng)
    for _ in range(30):
        norms = [ls.last_lowrank_grad_norm for ls in st.layers.values()]
        before = st.refreshes
        st2 = maybe_refresh_subspace(st, p, f, (), cfg)
        assert (st2.refreshes > before) == any(v <= 1.0 for v in norms)
        p, st = lorenza_step(st, p, f, (), cfg, rng)


def test_reset_moments_on_refresh():
    f, p, _, cfg, rng = lorenza_setup(update_freq=3, reset_moments_on_refresh=True)
    st = lorenza_init(p, cfg, f, (), rng)
    for _ in range(3):
        p, st = lorenza_step(st, p, f, (), cfg, rng)
    assert any(ls.M.any() for ls in st.layers.values())
    st = maybe_refresh_subspace(st, p, f, (), cfg)
    assert all(not ls.M.any() and not ls.V.any() and ls.t == 0 for ls in st.layers.values())


def test_moments_carried_by_default():
    f, p, _, cfg, rng = lorenza_setup(update_freq=3)
    st = lorenza_init(p, cfg, f, (), rng)
    for _ in range(3):
        p, st = lorenza_step(st, p, f, (), cfg, rng)
    after = maybe_refresh_subspace(st, p, f, (), cfg)
    assert all(np.array_equal(after.layers[k].M, st.layers[k].M) for k in p.names)


@pytest.mark.parametrize("q", [1, 3])
def test_lorenza_call_accounting(q):
    f, p, _, cfg, rng = lorenza_setup(update_freq=4, q=q)
    st = lorenza_init(p, cfg, f, (), rng)
    for step in range(1, 13):
        g0, v0 = f.gradient_calls, f.value_calls
        refreshes = st.refreshes
        p, st = lorenza_step(st, p, f, (), cfg, rng)
        fired = st.refreshes - refreshes
        assert f.gradient_calls - g0 == 1 + fired
        assert f.value_calls - v0 == 2 * q
    assert f.gradient_calls == 12 + math.ceil(12 / 4)


def test_lowrank_perturbation_in_span_and_rank_one_structure():
    f, p, _, cfg, rng = lorenza_setup(rank=1)
    st = lorenza_init(p, cfg, f, (), rng)
    pert = lowrank_perturbation(st, p, f, (), cfg, rng)
    for k, ls in st.layers.items():
        Q, R = ls.sub.Q, ls.sub.R
        m = Q.shape[0]
        assert np.abs((np.eye(m) - Q @ Q.T) @ pert[k]).max() <= 1e-10 * max(1.0, np.abs(pert[k]).max())
        base = Q @ R
        scale = np.sum(pert[k] * base) / np.sum(base * base)
        assert np.allclose(pert[k], scale * base, atol=1e-12)


def test_lowrank_perturbation_value_calls():
    f, p, _, cfg, rng = lorenza_setup(q=3)
    st = lorenza_init(p, cfg, f, (), rng)
    v0 = f.value_calls
    lowrank_perturbation(st, p, f, (), cfg, rng)
    assert f.value_calls - v0 == 6


def test_update_contained_in_span_q():
    f, p, _, cfg, rng = lorenza_setup(update_freq=5)
    st = lorenza_init(p, cfg, f, (), rng)
    for _ in range(12):
        st = maybe_refresh_subspace(st, p, f, (), cfg)
        Qs = {k: ls.sub.Q for k, ls in st.layers.items()}
        new, st = lorenza_step(st, p, f, (), cfg, rng)
        for k, Q in Qs.items():
            dW = new[k] - p[k]
            resid = (np.eye(Q.shape[0]) - Q @ Q.T) @ dW
            assert np.abs(resid).max() <= 1e-10
        p = new


def test_rho_zero_matches_lowrank_adam_bitwise():
    f, p, _, cfg, _ = lorenza_setup(update_freq=7)
    cfg = replace(cfg, rho=0.0)
    ra, rb = RngStream(5, 1), RngStream(5, 1)
    sa, sb = lorenza_init(p, cfg, f, (), ra), lorenza_init(p, cfg, f, (), rb)
    a = b = p
    for _ in range(100):
        a, sa = lorenza_step(sa, a, f, (), cfg, ra)
        b, sb = lowrank_adam_step(sb, b, f, (), cfg, rb)
    assert same(a, b)


def test_lowrank_adam_no_value_calls():
    f, p, _, cfg, rng = lorenza_setup(update_freq=5)
    st = lorenza_init(p, cfg, f, (), rng)
    for _ in range(10):
        p, st = lowrank_adam_step(st, p, f, (), cfg, rng)
    assert f.value_calls == 0 and f.gradient_calls == 10 + 2


@pytest.mark.xfail(strict=True, reason="each refresh draws a new random basis of R^m, so carried moments "
                   "are expressed in stale coordinates; the gap to Adam exceeds 5% on every seed tried")
def test_full_rank_tracks_adam_loss():
    shapes = [(4, 6)]
    tgt, p0 = random_params(11, shapes), random_params(12, shapes)
    f = quadratic_objective(tgt)
    cfg = LorenzaConfig(lr=1e-2, rank=4, update_freq=1, rho=0.0)
    rng = RngStream(11)
    st = lorenza_init(p0, cfg, f, (), rng)
    a, sa, b = p0, adam_init(p0), p0
    for _ in range(100):
        b, st = lorenza_step(st, b, f, (), cfg, rng)
        a, sa = adam_step(sa, a, f, (), AdamConfig(lr=1e-2))
        la, lb = f.peek_value(a), f.peek_value(b)
        assert abs(la - lb) <= 0.05 * la


def test_weight_decay_is_decoupled():
    f, p, _, cfg, _ = lorenza_setup()
    a, _ = lorenza_step(lorenza_init(p, cfg, f, (), RngStream(1)), p, f, (), cfg, RngStream(2))
    cfg_wd = replace(cfg, weight_decay=0.01)
    b, _ = lorenza_step(lorenza_init(p, cfg_wd, f, (), RngStream(1)), p, f, (), cfg_wd, RngStream(2))
    for k in p.names:
        assert np.allclose(b[k] - a[k], -cfg.lr * 0.01 * p[k], rtol=0, atol=1e-15)


def test_eta_defaults_to_lr():
    assert LorenzaConfig(lr=0.3).step_size == 0.3
    assert LorenzaConfig(lr=0.3, eta=0.1).step_size == 0.1


def test_step_failure_rewinds_streams():
    f, p, _, cfg, rng = lorenza_setup()
    st = lorenza_init(p, cfg, f, (), rng)
    before = (rng.get_state(), st.rng.get_state())
    bad = ObjectiveOracle(lambda w, b: 0.0, lambda w, b: {k: np.full(v.shape, np.nan) for k, v in w.items()})
    with pytest.raises(NumericalError):
        lorenza_step(st, p, bad, (), cfg, rng)
    assert (rng.get_state(), st.rng.get_state()) == before


def test_scheduled_rho_is_used():
    f, p, _, _, _ = lorenza_setup()
    sched = RhoSchedule(1e-6, 1e-2, 0.0, 1e-2)
    cfg = LorenzaConfig(lr=1e-2, rank=2, rho=sched)
    a, _ = lorenza_step(lorenza_init(p, cfg, f, (), RngStream(1)), p, f, (), cfg, RngStream(2), current_lr=1e-2)
    fixed = replace(cfg, rho=1e-2)
    b, _ = lorenza_step(lorenza_init(p, fixed, f, (), RngStream(1)), p, f, (), fixed, RngStream(2),
                        current_lr=1e-2)
    assert same(a, b)


# -- GSAM -----------------------------------------------------------------------

def test_gsam_parallel_case():
    g = ParamSet.from_natural({"w": np.array([[1.0, 2.0, -1.0]])})
    out = gsam_decompose(g.map(lambda a: 3.0 * a), g, 0.7)
    assert np.allclose(out["w"], g["w"], atol=1e-15)


def test_gsam_orthogonal_case():
    gs = ParamSet.from_natural({"w": np.array([[1.0, 0.0]])})
    gu = ParamSet.from_natural({"w": np.array([[0.0, 2.0]])})
    out = gsam_decompose(gu, gs, 1.0)
    assert np.allclose(out["w"], gs["w"] - gu["w"])


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000), st.floats(0.0, 2.0))
def test_gsam_correction_orthogonal_to_sam_gradient(seed, alpha):
    a = random_params(seed, [(2, 3), (3, 3)])
    b = random_params(seed + 1, [(2, 3), (3, 3)])
    out = gsam_decompose(a, b, alpha)
    corr = out.axpy(-1.0, b)
    assert abs(corr.vdot(b)) <= 1e-10 * max(1.0, corr.norm() * b.norm())


def test_gsam_zero_sam_gradient_raises():
    z = ParamSet.from_natural({"w": np.zeros((1, 2))})
    with pytest.raises(DegeneratePerturbationError):
        gsam_decompose(z.map(lambda a: a + 1.0), z, 0.5)


def test_gsam_adds_one_gradient_call():
    f, p, _, cfg, rng = lorenza_setup(gsam_alpha=0.5)
    st = lorenza_init(p, cfg, f, (), rng)
    g0 = f.gradient_calls
    lorenza_step(st, p, f, (), cfg, rng)
    assert f.gradient_calls - g0 == 2
