import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from liftlearn.data import SnapshotSet, VariableLayout
from liftlearn.errors import DimensionError, FormatError
from liftlearn.pod import (ScalingRecord, center_scale, encode, energy_retained, pod_basis,
                           project, projection_error, randomized_svd, read_basis, reconstruct,
                           write_basis)


def low_rank(n, K, rank, seed=0, decay=0.5):
    rng = np.random.default_rng(seed)
    U, _ = np.linalg.qr(rng.standard_normal((n, rank)))
    W, _ = np.linalg.qr(rng.standard_normal((K, rank)))
    return U @ np.diag(decay ** np.arange(rank)) @ W.T


def snapset(X, names=("s",)):
    n, K = X.shape
    return SnapshotSet(X, np.arange(K, dtype=float), VariableLayout(names, n // len(names)))


def test_center_scale_range_and_inverse():
    rng = np.random.default_rng(0)
    X = rng.standard_normal((6, 10)) * np.array([1, 1, 1, 100, 100, 100])[:, None] + 5
    snaps = SnapshotSet(X, np.arange(10.0), VariableLayout(("u", "v"), 3), np.ones((6, 10)))
    scaled, rec = center_scale(snaps)
    for name in ("u", "v"):
        block = scaled.states[scaled.layout.rows(name)]
        assert np.max(np.abs(block)) == pytest.approx(1.0)
    np.testing.assert_allclose(scaled.states.mean(axis=1), 0, atol=1e-14)
    np.testing.assert_allclose(rec.invert(scaled.states), X, rtol=1e-14)
    # derivatives are scaled, never shifted
    np.testing.assert_allclose(scaled.derivs[:3], 1 / rec.scales[0])
    np.testing.assert_allclose(scaled.derivs[3:], 1 / rec.scales[1])


def test_center_scale_constant_variable():
    X = np.vstack([np.ones((2, 4)), np.arange(8.0).reshape(2, 4)])
    with pytest.raises(ValueError, match="constant"):
        center_scale(snapset(X, ("a", "b")))


def test_scaling_record_validation():
    lay = VariableLayout(("s",), 3)
    with pytest.raises(DimensionError):
        ScalingRecord(np.zeros(2), np.ones(1), lay)
    with pytest.raises(ValueError):
        ScalingRecord(np.zeros(3), np.zeros(1), lay)


def test_basis_orthonormal_and_sign_convention():
    X = low_rank(40, 15, 8)
    b = pod_basis(X, 5)
    np.testing.assert_allclose(b.V.T @ b.V, np.eye(5), atol=1e-13)
    idx = np.argmax(np.abs(b.V), axis=0)
    assert np.all(b.V[idx, np.arange(5)] > 0)


def test_thin_svd_matches_numpy_oracle():
    X = low_rank(30, 12, 10, seed=4)
    b = pod_basis(X, 4)
    U, s, _ = np.linalg.svd(X, full_matrices=False)
    np.testing.assert_allclose(b.singular_values, s, rtol=1e-12)
    # same subspace
    np.testing.assert_allclose(np.abs(b.V.T @ U[:, :4]), np.eye(4), atol=1e-10)


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2**31), n=st.integers(5, 40), K=st.integers(2, 30), data=st.data())
def test_training_residual_equals_tail(seed, n, K, data):
    X = np.random.default_rng(seed).standard_normal((n, K))
    r = data.draw(st.integers(1, min(n, K)))
    b = pod_basis(X, r)
    resid = np.linalg.norm(X - b.V @ (b.V.T @ X)) ** 2
    tail = np.sum(b.singular_values[r:] ** 2)
    assert abs(resid - tail) <= 1e-10 * np.sum(X**2)


def test_randomized_recovers_low_rank():
    X = low_rank(200, 80, 6, seed=2)
    U, s, Vt = randomized_svd(X, 6, seed=0)
    np.testing.assert_allclose(s, 0.5 ** np.arange(6), rtol=1e-10)
    np.testing.assert_allclose((U * s) @ Vt, X, atol=1e-12)


def test_randomized_seed_determinism():
    X = low_rank(100, 50, 20, seed=3, decay=0.8)
    a = pod_basis(X, 5, "randomized", n_singular=8, seed=11)
    b = pod_basis(X, 5, "randomized", n_singular=8, seed=11)
    assert np.array_equal(a.V, b.V)
    assert a.singular_values.size == 8


def test_energy_exact_and_bound():
    sv = np.array([3.0, 2.0, 1.0])
    eta, lb = energy_retained(sv, 1, 3)
    assert eta == pytest.approx(9 / 14) and lb == pytest.approx(eta)
    # only 2 of 4 computed, total energy 9+4+1+0.25
    eta, lb = energy_retained(sv[:2], 1, 4, total_energy=14.25)
    assert eta == pytest.approx(9 / 14.25)
    assert lb == pytest.approx(1 - (4 + 2 * 4) / 14.25)
    assert lb <= eta
    with pytest.raises(ValueError):
        energy_retained(sv[:2], 1, 4)


def test_energy_monotone_in_r():
    sv = np.sort(np.random.default_rng(0).random(10))[::-1]
    etas = [energy_retained(sv, r, 10)[0] for r in range(11)]
    assert np.all(np.diff(etas) >= 0) and etas[-1] == pytest.approx(1.0)


def test_weighted_basis_orthonormal():
    rng = np.random.default_rng(5)
    X = rng.standard_normal((20, 8))
    w = rng.uniform(0.5, 2.0, 20)
    b = pod_basis(X, 4, weights=w)
    np.testing.assert_allclose(b.V.T @ (w[:, None] * b.V), np.eye(4), atol=1e-12)


def test_encode_reconstruct_round_trip():
    X = low_rank(30, 20, 3, seed=6) + 4.0
    snaps = snapset(X)
    scaled, rec = center_scale(snaps)
    b = pod_basis(scaled, 4, scaling=rec)
    S, _ = encode(b, snaps)
    back = reconstruct(b, S, snaps.times)
    np.testing.assert_allclose(back.states, X, atol=1e-12)
    assert projection_error(b, snaps) < 1e-12
    with pytest.raises(DimensionError):
        project(b, np.zeros((29, 2)))


def test_rank_range():
    with pytest.raises(ValueError):
        pod_basis(np.ones((4, 3)), 4)
    with pytest.raises(ValueError):
        pod_basis(np.ones((4, 3)), 2, "qr")


def test_basis_file_round_trip(tmp_path):
    X = low_rank(12, 9, 5) + 1.0
    scaled, rec = center_scale(snapset(X, ("a", "b")))
    b = pod_basis(scaled, 3, weights=np.linspace(1, 2, 12), scaling=rec)
    write_basis(b, tmp_path / "b.bin")
    back = read_basis(tmp_path / "b.bin", names=("a", "b"))
    assert np.array_equal(back.V, b.V)
    assert np.array_equal(back.weights, b.weights)
    assert back.scaling.layout == rec.layout
    assert back.fingerprint() == b.fingerprint()
    raw = (tmp_path / "b.bin").read_bytes()
    (tmp_path / "c.bin").write_bytes(raw[:-8])
    with pytest.raises(FormatError, match="file carries"):
        read_basis(tmp_path / "c.bin")
