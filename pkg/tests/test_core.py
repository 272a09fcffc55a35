import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lorenza.core import (DimensionError, RankDeficiencyError, RngStream, frobenius_norm, qr_thin,
                          random_orthonormal, sample_gaussian)


def test_zero_variance_gives_zeros(rng):
    assert np.array_equal(sample_gaussian(rng, 3, 5, 0.0), np.zeros((3, 5)))


def test_same_stream_reproduces():
    a = sample_gaussian(RngStream(7), 2, 2)
    b = sample_gaussian(RngStream(7), 2, 2)
    assert np.array_equal(a, b)


def test_distinct_streams_differ():
    a = RngStream(7, 0).normal(1000)
    b = RngStream(7, 1).normal(1000)
    assert not np.array_equal(a, b)
    assert abs(np.corrcoef(a, b)[0, 1]) < 0.1


def test_split_is_deterministic_and_does_not_consume():
    r = RngStream(3, 9)
    c1 = r.split(5)
    c2 = r.split(5)
    assert c1.stream_id == c2.stream_id != r.split(6).stream_id
    assert np.array_equal(r.normal(4), RngStream(3, 9).normal(4))


def test_gaussian_moments():
    z = sample_gaussian(RngStream(42), 1000, 1000, 1.0)
    assert abs(z.mean()) < 0.01
    assert abs(z.var() - 1.0) < 0.05


def test_gaussian_variance_scaling():
    z = sample_gaussian(RngStream(5), 500, 400, 0.25)
    assert abs(z.var() - 0.25) < 0.01


def test_sample_rejects_empty_shape(rng):
    with pytest.raises(DimensionError):
        sample_gaussian(rng, 0, 3)


def test_rng_state_roundtrip():
    r = RngStream(11, 2)
    r.normal(7)
    snap = r.get_state()
    expected = r.normal(5)
    assert np.array_equal(RngStream.from_state(snap).normal(5), expected)


def test_qr_identity():
    Q, R = qr_thin(np.eye(3))
    assert np.allclose(Q, np.eye(3), atol=1e-15)
    assert np.allclose(R, np.eye(3), atol=1e-15)


def test_qr_single_column():
    Q, R = qr_thin(np.array([[3.0], [4.0]]))
    assert np.allclose(Q, [[0.6], [0.8]], atol=1e-15)
    assert np.allclose(R, [[5.0]], atol=1e-15)


def test_qr_random_reconstruction():
    Y = sample_gaussian(RngStream(11), 6, 3)
    Q, R = qr_thin(Y)
    assert np.max(np.abs(Q.T @ Q - np.eye(3))) <= 1e-10
    assert np.linalg.norm(Q @ R - Y) <= 1e-10 * np.linalg.norm(Y)
    assert np.all(np.diag(R) >= 0)
    assert np.allclose(np.tril(R, -1), 0.0)


def test_qr_rank_deficient_reports_column():
    Y = np.array([[1.0, 2.0], [2.0, 4.0], [3.0, 6.0]])
    with pytest.raises(RankDeficiencyError) as err:
        qr_thin(Y)
    assert err.value.column == 1


def test_qr_rejects_wide():
    with pytest.raises(DimensionError):
        qr_thin(np.ones((2, 3)))


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 16), st.data())
def test_qr_roundtrip_property(m, data):
    r = data.draw(st.integers(1, m))
    seed = data.draw(st.integers(0, 2**32 - 1))
    Y = sample_gaussian(RngStream(seed), m, r) * data.draw(st.floats(1e-3, 1e3))
    Q, R = qr_thin(Y)
    assert np.linalg.norm(Q @ R - Y) <= 1e-10 * max(1.0, np.linalg.norm(Y))
    assert np.max(np.abs(Q.T @ Q - np.eye(r))) <= 1e-10
    assert np.all(np.diag(R) >= 0)


def test_qr_matches_lapack_up_to_sign():
    Y = sample_gaussian(RngStream(3), 9, 4)
    Q, R = qr_thin(Y)
    Q2, R2 = np.linalg.qr(Y)
    s = np.sign(np.diag(R2))
    assert np.allclose(Q, Q2 * s, atol=1e-12)


@pytest.mark.parametrize("A, expected", [
    (np.zeros((2, 3)), 0.0),
    (np.array([[3.0, 4.0]]), 5.0),
    (np.eye(4), 2.0),
])
def test_frobenius(A, expected):
    assert frobenius_norm(A) == expected


def test_random_orthonormal(rng):
    Q = random_orthonormal(rng, 7, 3)
    assert np.max(np.abs(Q.T @ Q - np.eye(3))) < 1e-12
