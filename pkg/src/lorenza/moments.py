"""Adam first/second moment update shared by every adaptive optimizer here.

Keeping one implementation is what makes the reduction identities
(AdaZo-SAM at rho=0 vs Adam, LORENZA at rho=0 vs low-rank Adam) bitwise.
"""
from __future__ import annotations

import numpy as np


def adam_moments(M: np.ndarray, V: np.ndarray, G: np.ndarray, t: int, beta1: float, beta2: float,
                 eps: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Return ``(M', V', M_hat / (sqrt(V_hat) + eps))`` for zero-based step ``t``.

    Bias correction uses ``t + 1`` so the first step is well defined.
    """
    M = beta1 * M + (1.0 - beta1) * G
    V = beta2 * V + (1.0 - beta2) * (G * G)
    m_hat = M / (1.0 - beta1 ** (t + 1))
    v_hat = V / (1.0 - beta2 ** (t + 1))
    return M, V, m_hat / (np.sqrt(v_hat) + eps)
