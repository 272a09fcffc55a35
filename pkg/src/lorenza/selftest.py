"""Fast invariant checks that need nothing beyond the package itself."""
from __future__ import annotations

import tempfile
from typing import Callable

import numpy as np

from .adazo import AdazoConfig, adazo_init, adazo_step
from .baselines import AdamConfig, SamConfig, adam_init, adam_step, lowrank_adam_step, sam_init, sam_step
from .core import RngStream, qr_thin
from .lowrank import LorenzaConfig, lorenza_init, lorenza_step
from .objectives import ParamSet, finite_diff_gradient, max_relative_error, mlp_objective, quadratic_objective
from .rge import central_coefficient
from .schedules import RhoSchedule, cosine_lr
from .ssrf import approximation_error, ssrf


def _quad(seed=0, shapes=((4, 6), (3, 5))):
    rng = RngStream(seed, 11)
    tgt = ParamSet.from_natural({f"W{i}": rng.normal(s) for i, s in enumerate(shapes)})
    init = ParamSet.from_natural({f"W{i}": rng.normal(s) for i, s in enumerate(shapes)})
    return quadratic_objective(tgt, 2.0), init


def check_qr() -> bool:
    Y = RngStream(1).normal((20, 6))
    Q, R = qr_thin(Y)
    return np.allclose(Q.T @ Q, np.eye(6), atol=1e-12) and np.allclose(Q @ R, Y, atol=1e-12)


def check_rge_coefficient() -> bool:
    f, p = _quad()
    rng = RngStream(2)
    D = p.like({k: rng.normal(w.shape) for k, w in p.layers.items()})
    c = central_coefficient(f, p, D, (), 1e-3, 0)
    exact = f.peek_gradient(p).vdot(D)
    return abs(c - exact) <= 1e-10 * abs(exact)


def check_ssrf_exact_rank() -> bool:
    rng = RngStream(3)
    A = rng.normal((16, 3)) @ rng.normal((3, 24))
    return approximation_error(A, ssrf(A, 3, RngStream(4))) <= 1e-9 * np.linalg.norm(A)


def check_adazo_reduces_to_adam() -> bool:
    f, p = _quad()
    a, b = p, p
    sa, sb = adam_init(p), adazo_init(p)
    rng = RngStream(5)
    for _ in range(50):
        a, sa = adam_step(sa, a, f, (), AdamConfig(lr=1e-2))
        b, sb = adazo_step(sb, b, f, (), AdazoConfig(lr=1e-2, rho=0.0), rng)
    return all(np.array_equal(a[k], b[k]) for k in a.names)


def check_lorenza_reduces_to_lowrank_adam() -> bool:
    f, p = _quad()
    cfg = LorenzaConfig(lr=1e-2, rank=2, update_freq=7, rho=0.0)
    ra, rb = RngStream(6), RngStream(6)
    sa, sb = lorenza_init(p, cfg, f, (), ra), lorenza_init(p, cfg, f, (), rb)
    a = b = p
    for _ in range(30):
        a, sa = lorenza_step(sa, a, f, (), cfg, ra)
        b, sb = lowrank_adam_step(sb, b, f, (), cfg, rb)
    return all(np.array_equal(a[k], b[k]) for k in a.names)


def check_call_accounting() -> bool:
    f, p = _quad()
    ok = True
    st = adazo_init(p)
    f.reset_counters()
    adazo_step(st, p, f, (), AdazoConfig(q=3), RngStream(7))
    ok &= (f.gradient_calls, f.value_calls) == (1, 6)
    f.reset_counters()
    sam_step(sam_init(p), p, f, (), SamConfig())
    ok &= (f.gradient_calls, f.value_calls) == (2, 0)
    cfg = LorenzaConfig(rank=2, update_freq=5)
    rng = RngStream(8)
    f.reset_counters()
    st = lorenza_init(p, cfg, f, (), rng)
    for _ in range(10):
        p, st = lorenza_step(st, p, f, (), cfg, rng)
    ok &= (f.gradient_calls, f.value_calls) == (10 + 2, 20)
    return bool(ok)


def check_schedules() -> bool:
    s = RhoSchedule(1e-6, 1e-2, 0.0, 1e-2)
    return (s(1e-2) == 1e-2 and s(0.0) == 1e-6 and abs(s(5e-3) - 0.0050005) <= 1e-15
            and cosine_lr(0, 100, 1e-2) == 1e-2 and cosine_lr(100, 100, 1e-2) == 0.0)


def check_mlp_gradient() -> bool:
    f = mlp_objective([3, 5, 2], n_samples=8)
    rng = RngStream(9)
    p = ParamSet.from_natural({"W0": rng.normal((5, 3)), "W1": rng.normal((2, 5))})
    return max_relative_error(f.peek_gradient(p, f.full_batch()),
                              finite_diff_gradient(f, p, f.full_batch(), 1e-6)) <= 1e-5


def check_resume() -> bool:
    from .harness import RunConfig, run_experiment

    with tempfile.TemporaryDirectory() as tmp:
        base = dict(objective={"name": "quadratic", "shapes": [[4, 6]]},
                    optimizer={"name": "lorenza", "lr": 1e-2, "rank": 2, "update_freq": 10},
                    total_steps=40, output_dir=tmp)
        a = run_experiment(RunConfig(**base, run_name="a"))
        b = run_experiment(RunConfig(**base, run_name="b", stop_after=17))
        c = run_experiment(RunConfig(**base, run_name="b"), resume=b.checkpoint_path)
        return a.metrics_path.read_bytes() == c.metrics_path.read_bytes()


CHECKS: dict[str, Callable[[], bool]] = {
    "householder qr": check_qr,
    "rge directional derivative": check_rge_coefficient,
    "ssrf exact-rank recovery": check_ssrf_exact_rank,
    "adazo(rho=0) == adam": check_adazo_reduces_to_adam,
    "lorenza(rho=0) == lowrank adam": check_lorenza_reduces_to_lowrank_adam,
    "oracle call accounting": check_call_accounting,
    "rho and lr schedules": check_schedules,
    "mlp gradient vs finite differences": check_mlp_gradient,
    "checkpoint resume determinism": check_resume,
}


def run_selftest(echo: Callable[[str], None] = print) -> bool:
    all_ok = True
    for name, fn in CHECKS.items():
        try:
            ok, detail = fn(), ""
        except Exception as err:  # report and keep going
            ok, detail = False, f" ({type(err).__name__}: {err})"
        all_ok &= ok
        echo(f"{'PASS' if ok else 'FAIL'}  {name}{detail}")
    return all_ok
