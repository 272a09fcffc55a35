"""Subspace selection via a Gaussian randomized range finder."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import DimensionError, RankDeficiencyError, RngStream, frobenius_norm, qr_thin, sample_gaussian


class DegenerateInputError(ValueError):
    pass


@dataclass(frozen=True)
class Subspace:
    Q: np.ndarray  # m x r, orthonormal columns
    R: np.ndarray  # r x n, equals Q.T @ A
    source_norm: float
    created_at_step: int = 0

    @property
    def rank(self) -> int:
        return self.Q.shape[1]


def ssrf(A: np.ndarray, r: int, rng: RngStream, step: int = 0, power_iters: int = 0,
         complete: bool = False) -> Subspace:
    """Orthonormal basis for the dominant column space of ``A`` at rank ``r``.

    Sketch ``Y = A @ Omega`` with ``Omega ~ N(0, 1/r)`` of shape n x r, take
    the thin QR of ``Y`` and set ``R = Q.T @ A`` so that ``A ~ Q @ R``. Cost is
    O(mnr + mr^2); no SVD is computed. One retry with a fresh sketch is made
    if ``Y`` comes out rank-deficient; a second failure raises, unless
    ``complete`` is set, in which case the basis found so far is padded with
    random orthonormal directions.
    """
    A = np.asarray(A, dtype=np.float64)
    m, n = A.shape
    if not 1 <= r <= min(m, n):
        raise DimensionError(f"rank {r} outside [1, {min(m, n)}] for a {m}x{n} matrix")
    nrm = frobenius_norm(A)
    if not np.isfinite(nrm):
        raise DegenerateInputError("input matrix is not finite")
    if nrm == 0.0:
        raise DegenerateInputError("cannot select a subspace for a zero matrix")
    # the QR tolerance is absolute, so sketch the unit-norm matrix
    An = A / nrm
    for attempt in range(2):
        Y = An @ sample_gaussian(rng, n, r, 1.0 / r)
        try:
            Q, _ = qr_thin(Y)
            for _ in range(power_iters):
                Q, _ = qr_thin(An @ qr_thin(An.T @ Q)[0])
            break
        except RankDeficiencyError as err:
            if attempt == 0:
                continue
            if not complete:
                raise
            Q = _complete_basis(Y[:, :err.column], r, rng)
    return Subspace(Q, Q.T @ A, nrm, step)


def _complete_basis(Y: np.ndarray, r: int, rng: RngStream) -> np.ndarray:
    m = Y.shape[0]
    k = Y.shape[1]
    basis = qr_thin(Y)[0] if k else np.zeros((m, 0))
    while True:
        try:
            return qr_thin(np.hstack([basis, sample_gaussian(rng, m, r - k)]))[0]
        except RankDeficiencyError:  # pragma: no cover - probability zero
            continue


def approximation_error(A: np.ndarray, sub: Subspace) -> float:
    """``||A - Q Q^T A||_F``."""
    A = np.asarray(A, dtype=np.float64)
    if sub.Q.shape[0] != A.shape[0]:
        raise DimensionError(f"Q has {sub.Q.shape[0]} rows, A has {A.shape[0]}")
    return frobenius_norm(A - sub.Q @ (sub.Q.T @ A))
