"""Centering/scaling of snapshot data and POD bases.

Each variable is centered about its mean field over the snapshots and then
divided by the largest absolute centered value of that variable, so scaled
states lie in [-1, 1]. Derivatives are divided by the same scale but not
centered.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.linalg as la

from .data import SnapshotSet, VariableLayout
from .errors import DimensionError, FormatError

BASIS_MAGIC = b"OPINFB1\x00"
_BASIS_HEADER = struct.Struct("<8sQQQQQQdB")


@dataclass(frozen=True)
class ScalingRecord:
    """Per-dof mean field and per-variable scale factor."""

    means: np.ndarray
    scales: np.ndarray
    layout: VariableLayout

    def __post_init__(self):
        means = np.asarray(self.means, dtype=float)
        scales = np.asarray(self.scales, dtype=float)
        if means.shape != (self.layout.n,):
            raise DimensionError(f"means have shape {means.shape}, expected ({self.layout.n},)")
        if scales.shape != (self.layout.var_count,):
            raise DimensionError("need one scale per variable")
        if np.any(scales <= 0):
            raise ValueError("scales must be positive")
        object.__setattr__(self, "means", means)
        object.__setattr__(self, "scales", scales)

    @classmethod
    def identity(cls, layout: VariableLayout) -> "ScalingRecord":
        return cls(np.zeros(layout.n), np.ones(layout.var_count), layout)

    @property
    def dof_scales(self) -> np.ndarray:
        return np.repeat(self.scales, self.layout.dofs_per_var)

    @staticmethod
    def _col(v, like):
        return v if like.ndim == 1 else v[:, None]

    def apply(self, X):
        X = np.asarray(X, dtype=float)
        return (X - self._col(self.means, X)) / self._col(self.dof_scales, X)

    def apply_derivs(self, Xdot):
        Xdot = np.asarray(Xdot, dtype=float)
        return Xdot / self._col(self.dof_scales, Xdot)

    def invert(self, Z):
        Z = np.asarray(Z, dtype=float)
        return Z * self._col(self.dof_scales, Z) + self._col(self.means, Z)

    def scale_set(self, snaps: SnapshotSet) -> SnapshotSet:
        derivs = self.apply_derivs(snaps.derivs) if snaps.has_derivs else None
        return SnapshotSet(self.apply(snaps.states), snaps.times, snaps.layout, derivs)


def center_scale(snaps: SnapshotSet) -> tuple[SnapshotSet, ScalingRecord]:
    """Center each variable on its mean field and scale it into [-1, 1]."""
    layout = snaps.layout
    means = snaps.states.mean(axis=1)
    centered = snaps.states - means[:, None]
    scales = np.empty(layout.var_count)
    for i, name in enumerate(layout.names):
        scales[i] = np.max(np.abs(centered[layout.rows(name)]))
        if scales[i] == 0:
            raise ValueError(f"variable {name!r} is constant in time; cannot scale it")
    record = ScalingRecord(means, scales, layout)
    return record.scale_set(snaps), record


@dataclass(frozen=True)
class PodBasis:
    """Leading left singular vectors of a (scaled) snapshot matrix.

    Attributes
    ----------
    V : (n, r) ndarray
        Basis vectors, orthonormal in the (optionally weighted) inner product.
    singular_values : (m,) ndarray
        Computed singular values in non-increasing order.
    scaling : ScalingRecord
        Map between physical and scaled states.
    total_energy : float
        Squared Frobenius norm of the (weighted) scaled snapshot matrix.
    K_total : int
        Number of singular values the full matrix has, min(n, K).
    weights : (n,) ndarray or None
        Diagonal quadrature weights of the inner product; None means Euclidean.
    """

    V: np.ndarray
    singular_values: np.ndarray
    scaling: ScalingRecord
    total_energy: float
    K_total: int
    weights: np.ndarray | None = None

    @property
    def r(self) -> int:
        return self.V.shape[1]

    @property
    def n(self) -> int:
        return self.V.shape[0]

    def truncate(self, r) -> "PodBasis":
        if not 1 <= r <= self.r:
            raise ValueError(f"cannot truncate rank-{self.r} basis to r={r}")
        return PodBasis(self.V[:, :r], self.singular_values, self.scaling,
                        self.total_energy, self.K_total, self.weights)

    def fingerprint(self) -> str:
        """Short content hash used to tie a reduced model to its basis."""
        import hashlib
        h = hashlib.sha256(np.ascontiguousarray(self.V).tobytes())
        h.update(self.scaling.means.tobytes())
        h.update(self.scaling.scales.tobytes())
        return h.hexdigest()[:16]


def _fix_signs(U):
    idx = np.argmax(np.abs(U), axis=0)
    signs = np.sign(U[idx, np.arange(U.shape[1])])
    signs[signs == 0] = 1.0
    return U * signs


def randomized_svd(X, k, oversample=10, power_iters=2, seed=None):
    """Leading ``k`` singular triplets by a Gaussian range finder.

    Power iterations are re-orthonormalized with QR at every pass.
    """
    rng = np.random.default_rng(seed)
    n, K = X.shape
    ell = min(k + oversample, n, K)
    Q, _ = np.linalg.qr(X @ rng.standard_normal((K, ell)))
    for _ in range(power_iters):
        W, _ = np.linalg.qr(X.T @ Q)
        Q, _ = np.linalg.qr(X @ W)
    Ub, s, Vt = la.svd(Q.T @ X, full_matrices=False)
    return (Q @ Ub)[:, :k], s[:k], Vt[:k]


def pod_basis(snaps, r, method="thin_svd", *, n_singular=None, oversample=10,
              power_iters=2, seed=None, weights=None, scaling=None) -> PodBasis:
    """Rank-``r`` POD basis of scaled snapshot data.

    Parameters
    ----------
    snaps : SnapshotSet or (n, K) ndarray
        Scaled snapshots (see :func:`center_scale`).
    r : int
        Basis rank, 1 <= r <= min(n, K).
    method : {"thin_svd", "randomized"}
    n_singular : int, optional
        Number of singular values to estimate with the randomized method
        (default ``r``). Ignored by ``thin_svd``, which returns all of them.
    weights : (n,) ndarray, optional
        Diagonal inner-product weights for non-uniform grids.
    scaling : ScalingRecord, optional
        Recorded on the basis; defaults to the identity record.
    """
    if isinstance(snaps, SnapshotSet):
        X = snaps.states
        layout = snaps.layout
    else:
        X = np.asarray(snaps, dtype=float)
        layout = VariableLayout(("x",), X.shape[0])
    n, K = X.shape
    K_total = min(n, K)
    if not 1 <= r <= K_total:
        raise ValueError(f"rank r={r} out of range [1, {K_total}]")
    if scaling is None:
        scaling = ScalingRecord.identity(layout)
    sqrt_w = None
    if weights is not None:
        weights = np.asarray(weights, dtype=float)
        if weights.shape != (n,) or np.any(weights <= 0):
            raise ValueError("weights must be a positive n-vector")
        sqrt_w = np.sqrt(weights)
        X = X * sqrt_w[:, None]

    if method == "thin_svd":
        U, s, _ = la.svd(X, full_matrices=False)
    elif method == "randomized":
        m = r if n_singular is None else int(n_singular)
        if not r <= m <= K_total:
            raise ValueError(f"n_singular={m} must lie in [r, {K_total}]")
        U, s, _ = randomized_svd(X, m, oversample, power_iters, seed)
    else:
        raise ValueError(f"unknown POD method {method!r}")
    U = _fix_signs(U[:, :r])
    if sqrt_w is not None:
        U = U / sqrt_w[:, None]
    return PodBasis(U, s, scaling, float(np.sum(X * X)), K_total, weights)


def energy_retained(singular_values, r, K_total, total_energy=None):
    """Retained energy fraction and its lower bound for a rank-r basis.

    With ``m`` computed singular values out of ``K_total``, the unknown tail
    is bounded by ``(K_total - m) * sigma_m**2``. ``total_energy`` is the
    squared Frobenius norm of the data; it defaults to the sum of squared
    singular values, which is exact only when ``m == K_total``.

    Returns
    -------
    eta, eta_lower_bound : float
    """
    sig2 = np.asarray(singular_values, dtype=float) ** 2
    m = sig2.size
    if not 0 <= r <= m:
        raise ValueError(f"r={r} exceeds the {m} computed singular values")
    if m > K_total:
        raise ValueError("more singular values than K_total")
    if total_energy is None:
        if m != K_total:
            raise ValueError("total_energy is required when only some singular values are known")
        total_energy = sig2.sum()
    eta = 1.0 - (total_energy - sig2[:r].sum()) / total_energy
    tail_bound = sig2[r:].sum() + (K_total - m) * sig2[-1]
    eta_lb = 1.0 - tail_bound / total_energy
    return float(min(eta, 1.0)), float(min(eta_lb, eta))


def _project_matrix(basis, X):
    X = np.asarray(X, dtype=float)
    if X.shape[0] != basis.n:
        raise DimensionError(f"data have {X.shape[0]} rows, basis has {basis.n}")
    if basis.weights is not None:
        X = X * (basis.weights if X.ndim == 1 else basis.weights[:, None])
    return basis.V.T @ X


def project(basis: PodBasis, snaps) -> tuple[np.ndarray, np.ndarray | None]:
    """Reduced coordinates of scaled snapshots (and derivatives, if present)."""
    if isinstance(snaps, SnapshotSet):
        Sdot = _project_matrix(basis, snaps.derivs) if snaps.has_derivs else None
        return _project_matrix(basis, snaps.states), Sdot
    return _project_matrix(basis, snaps), None


def encode(basis: PodBasis, snaps: SnapshotSet) -> tuple[np.ndarray, np.ndarray | None]:
    """Scale physical snapshots with the basis' record, then project."""
    return project(basis, basis.scaling.scale_set(snaps))


def reconstruct(basis: PodBasis, S_hat, times=None) -> SnapshotSet:
    """Physical states ``means + scales * (V @ S_hat)`` as a SnapshotSet."""
    S_hat = np.asarray(S_hat, dtype=float)
    if S_hat.ndim == 1:
        S_hat = S_hat[:, None]
    if S_hat.shape[0] != basis.r:
        raise DimensionError(f"reduced states have {S_hat.shape[0]} rows, basis rank is {basis.r}")
    X = basis.scaling.invert(basis.V @ S_hat)
    if times is None:
        times = np.arange(S_hat.shape[1], dtype=float)
    return SnapshotSet(X, times, basis.scaling.layout)


def projection_error(basis: PodBasis, snaps: SnapshotSet) -> float:
    """Relative Frobenius error of representing physical ``snaps`` in the basis."""
    S_hat, _ = encode(basis, snaps)
    X = reconstruct(basis, S_hat, snaps.times).states
    return float(np.linalg.norm(X - snaps.states) / np.linalg.norm(snaps.states))


# Basis file ------------------------------------------------------------------

def write_basis(basis: PodBasis, path) -> None:
    """Binary basis file: header, sigma, V (column-major), means, scales, weights."""
    lay = basis.scaling.layout
    has_w = basis.weights is not None
    header = _BASIS_HEADER.pack(BASIS_MAGIC, basis.n, basis.r, basis.singular_values.size,
                                lay.var_count, lay.dofs_per_var, basis.K_total,
                                basis.total_energy, int(has_w))
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(basis.singular_values.astype("<f8").tobytes())
        fh.write(np.asarray(basis.V, dtype="<f8").tobytes(order="F"))
        fh.write(basis.scaling.means.astype("<f8").tobytes())
        fh.write(basis.scaling.scales.astype("<f8").tobytes())
        if has_w:
            fh.write(basis.weights.astype("<f8").tobytes())


def read_basis(path, names=None) -> PodBasis:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"basis file not found: {path}")
    raw = path.read_bytes()
    if len(raw) < _BASIS_HEADER.size:
        raise FormatError(f"{path}: truncated basis header")
    magic, n, r, m, var_count, dofs, K_total, energy, has_w = _BASIS_HEADER.unpack_from(raw)
    if magic != BASIS_MAGIC:
        raise FormatError(f"{path}: bad magic bytes {magic!r} at byte 0")
    if var_count * dofs != n:
        raise FormatError(f"{path}: header declares n={n} but var_count*dofs_per_var="
                          f"{var_count * dofs}")
    expected = m + n * r + n + var_count + (n if has_w else 0)
    body = (len(raw) - _BASIS_HEADER.size) // 8
    if body != expected or (len(raw) - _BASIS_HEADER.size) % 8:
        raise FormatError(f"{path}: header implies {expected} values, file carries {body}")
    vals = np.frombuffer(raw, dtype="<f8", offset=_BASIS_HEADER.size).astype(float)
    sig, vals = vals[:m], vals[m:]
    V, vals = vals[:n * r].reshape((n, r), order="F"), vals[n * r:]
    means, vals = vals[:n], vals[n:]
    scales, vals = vals[:var_count], vals[var_count:]
    weights = vals.copy() if has_w else None
    layout = (VariableLayout(tuple(names), dofs) if names
              else VariableLayout.default(var_count, dofs))
    return PodBasis(V, sig, ScalingRecord(means, scales, layout), float(energy),
                    int(K_total), weights)
