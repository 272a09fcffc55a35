"""Learning-rate and perturbation-radius schedules."""
from __future__ import annotations

import math
from dataclasses import dataclass


@dataclass(frozen=True)
class RhoSchedule:
    """Radius that tracks the learning rate linearly between two endpoints."""

    rho_min: float
    rho_max: float
    lr_min: float
    lr_max: float

    def __post_init__(self):
        if self.rho_min > self.rho_max:
            raise ValueError("rho_min must not exceed rho_max")
        if self.lr_min >= self.lr_max:
            raise ValueError("lr_min must be strictly below lr_max")

    def __call__(self, lr: float) -> float:
        return rho_schedule(self, lr)


def rho_schedule(sched: RhoSchedule, lr: float) -> float:
    span = sched.lr_max - sched.lr_min
    if span == 0:
        raise ValueError("lr_max == lr_min leaves the schedule undefined")
    if lr <= sched.lr_min:
        return sched.rho_min
    if lr >= sched.lr_max:
        return sched.rho_max
    return sched.rho_min + (sched.rho_max - sched.rho_min) * (lr - sched.lr_min) / span


def cosine_lr(step: int, total: int, lr_max: float, lr_min: float = 0.0) -> float:
    if total < 1:
        raise ValueError("total must be >= 1")
    if not 0 <= step <= total:
        raise ValueError(f"step {step} outside [0, {total}]")
    if step == 0:
        return lr_max
    if step == total:
        return lr_min
    return lr_min + 0.5 * (lr_max - lr_min) * (1.0 + math.cos(math.pi * step / total))
