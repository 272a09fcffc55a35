"""Dense-matrix substrate: seeded Gaussian sampling, Householder QR, norms.

Matrices are plain ``numpy.ndarray`` objects of dtype float64 with ndim 2.
Functions here never mutate their inputs.
"""
from __future__ import annotations

from typing import Any

import numpy as np

_MASK64 = (1 << 64) - 1


class DimensionError(ValueError):
    pass


class RankDeficiencyError(ArithmeticError):
    def __init__(self, column: int, norm: float):
        super().__init__(f"rank-deficient input: column {column} has residual norm {norm:.3e}")
        self.column = column
        self.norm = norm


class NumericalError(ArithmeticError):
    pass


def _splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return x ^ (x >> 31)


class RngStream:
    """Counter-based random stream keyed by ``(seed, stream_id)``.

    Backed by Philox, whose 128-bit key holds the pair directly, so two
    streams with different ids never share a sequence. Use :meth:`split` to
    hand independent children to sub-components instead of sharing a stream.
    """

    def __init__(self, seed: int, stream_id: int = 0):
        self.seed = int(seed) & _MASK64
        self.stream_id = int(stream_id) & _MASK64
        self._gen = np.random.Generator(np.random.Philox(key=[self.seed, self.stream_id]))

    def split(self, label: int) -> "RngStream":
        child = _splitmix64(self.stream_id ^ _splitmix64(int(label) & _MASK64))
        return RngStream(self.seed, child)

    def normal(self, size) -> np.ndarray:
        return self._gen.standard_normal(size)

    def uniform(self, low: float = 0.0, high: float = 1.0, size=None):
        return self._gen.uniform(low, high, size)

    def integers(self, high: int, size) -> np.ndarray:
        return self._gen.integers(0, high, size=size)

    def get_state(self) -> dict[str, Any]:
        st = self._gen.bit_generator.state
        return {
            "seed": self.seed,
            "stream_id": self.stream_id,
            "counter": [int(v) for v in st["state"]["counter"]],
            "buffer": [int(v) for v in st["buffer"]],
            "buffer_pos": int(st["buffer_pos"]),
            "has_uint32": int(st["has_uint32"]),
            "uinteger": int(st["uinteger"]),
        }

    @classmethod
    def from_state(cls, state: dict[str, Any]) -> "RngStream":
        rng = cls(state["seed"], state["stream_id"])
        rng.set_state(state)
        return rng

    def set_state(self, state: dict[str, Any]) -> None:
        if (state["seed"], state["stream_id"]) != (self.seed, self.stream_id):
            raise ValueError("state belongs to a different stream")
        self._gen.bit_generator.state = {
            "bit_generator": "Philox",
            "state": {
                "counter": np.array(state["counter"], dtype=np.uint64),
                "key": np.array([self.seed, self.stream_id], dtype=np.uint64),
            },
            "buffer": np.array(state["buffer"], dtype=np.uint64),
            "buffer_pos": state["buffer_pos"],
            "has_uint32": state["has_uint32"],
            "uinteger": state["uinteger"],
        }

    def __repr__(self) -> str:
        return f"RngStream(seed={self.seed}, stream_id={self.stream_id})"


def as_matrix(data) -> np.ndarray:
    """Validate and copy ``data`` into a finite 2-D float64 array."""
    a = np.array(data, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] < 1 or a.shape[1] < 1:
        raise DimensionError(f"expected a non-empty 2-D matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise NumericalError("matrix contains non-finite entries")
    return a


def sample_gaussian(rng: RngStream, rows: int, cols: int, variance: float = 1.0) -> np.ndarray:
    if rows < 1 or cols < 1:
        raise DimensionError(f"cannot sample a {rows}x{cols} matrix")
    if variance < 0:
        raise ValueError("variance must be nonnegative")
    z = rng.normal((rows, cols))
    if variance == 0:
        return np.zeros((rows, cols))
    return z * np.sqrt(variance)


def qr_thin(Y: np.ndarray, tol: float = 1e-12) -> tuple[np.ndarray, np.ndarray]:
    """Thin QR of a tall matrix via Householder reflections.

    Returns ``Q`` (m x r, orthonormal columns) and upper-triangular ``R``
    (r x r) with a nonnegative diagonal. Raises :class:`RankDeficiencyError`
    when the trailing part of some column has norm below ``tol``.
    """
    A = np.array(Y, dtype=np.float64)
    if A.ndim != 2:
        raise DimensionError("qr_thin expects a 2-D matrix")
    m, r = A.shape
    if m < r:
        raise DimensionError(f"qr_thin needs rows >= cols, got {m}x{r}")
    if not np.all(np.isfinite(A)):
        raise NumericalError("qr_thin input contains non-finite entries")

    vs = []
    for k in range(r):
        x = A[k:, k]
        alpha = np.linalg.norm(x)
        if alpha < tol:
            raise RankDeficiencyError(k, float(alpha))
        v = x.copy()
        # reflect onto -sign(x0)*alpha*e1 to avoid cancellation
        v[0] += np.copysign(alpha, x[0])
        v /= np.linalg.norm(v)
        A[k:, k:] -= 2.0 * np.outer(v, v @ A[k:, k:])
        vs.append(v)

    R = np.triu(A[:r, :])
    Q = np.eye(m, r)
    for k in reversed(range(r)):
        v = vs[k]
        Q[k:, :] -= 2.0 * np.outer(v, v @ Q[k:, :])

    signs = np.where(np.diag(R) < 0, -1.0, 1.0)
    return Q * signs, R * signs[:, None]


def frobenius_norm(A: np.ndarray) -> float:
    return float(np.sqrt(np.sum(np.square(A))))


def random_orthonormal(rng: RngStream, m: int, r: int) -> np.ndarray:
    """Random m x r matrix with orthonormal columns."""
    while True:
        try:
            return qr_thin(sample_gaussian(rng, m, r))[0]
        except RankDeficiencyError:  # pragma: no cover - probability zero
            continue
