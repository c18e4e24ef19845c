"""Operator Inference: regularized least-squares fitting of reduced operators.

The learned model has the form

    ds/dt = A s + H (s kron s) + G + B u(t)

with H stored in compact form: one column per pair (i, j), i <= j, so the
least-squares width equals the true number of degrees of freedom. The full
Kronecker operator recovered by :func:`expand_H` is symmetric,
h_{l,ij} = h_{l,ji}.

Regularization and the minimum-norm choice at zero regularization are both
taken with respect to the Frobenius norm of the *full* symmetric H. A cross
coefficient c_ij (i < j) appears twice in full H as c_ij / 2, so it carries
half the penalty weight of a diagonal coefficient.
"""

from __future__ import annotations

import logging
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.linalg as la

from .errors import DimensionError, FormatError, NonFiniteError

log = logging.getLogger(__name__)

MODEL_MAGIC = b"OPINFM1\x00"
_MODEL_HEADER = struct.Struct("<8sQQBBBddQ")


def quadratic_width(r: int) -> int:
    return r * (r + 1) // 2


def compact_quadratic(s) -> np.ndarray:
    """Non-redundant products s_i s_j, i <= j, in lexicographic (i, j) order.

    Accepts an (r,) vector or an (r, K) matrix of column states.
    """
    s = np.asarray(s, dtype=float)
    i, j = np.triu_indices(s.shape[0])
    return s[i] * s[j]


def _r_from_width(q):
    r = int((np.sqrt(8 * q + 1) - 1) // 2)
    if quadratic_width(r) != q:
        raise DimensionError(f"width {q} is not r(r+1)/2 for any integer r")
    return r


def expand_H(H_compact) -> np.ndarray:
    """Full r x r**2 symmetric quadratic operator from its compact form."""
    Hc = np.atleast_2d(np.asarray(H_compact, dtype=float))
    q = Hc.shape[1]
    r = _r_from_width(q)
    H = np.zeros((Hc.shape[0], r, r))
    i, j = np.triu_indices(r)
    off = i != j
    H[:, i, j] = np.where(off, Hc / 2.0, Hc)
    H[:, j, i] = np.where(off, Hc / 2.0, Hc)
    return H.reshape(Hc.shape[0], r * r)


def compress_H(H_full) -> np.ndarray:
    """Compact form of a (not necessarily symmetric) r x r**2 operator."""
    H = np.atleast_2d(np.asarray(H_full, dtype=float))
    r = int(round(np.sqrt(H.shape[1])))
    if r * r != H.shape[1]:
        raise DimensionError(f"width {H.shape[1]} is not a perfect square")
    H = H.reshape(H.shape[0], r, r)
    i, j = np.triu_indices(r)
    return np.where(i == j, H[:, i, j], H[:, i, j] + H[:, j, i])


@dataclass(frozen=True)
class ModelForm:
    """Which operator blocks a reduced model carries."""

    linear: bool = True
    quadratic: bool = True
    constant: bool = False
    inputs: int = 0

    def __post_init__(self):
        if self.inputs < 0:
            raise ValueError("input dimension must be non-negative")
        if not (self.linear or self.quadratic or self.constant or self.inputs):
            raise ValueError("model form has no active terms")

    def dof(self, r: int) -> int:
        """Unknowns per row of the least-squares problem."""
        return (r * self.linear + quadratic_width(r) * self.quadratic
                + int(self.constant) + self.inputs)

    def blocks(self, r):
        """(name, start, stop) of each active column block of the data matrix."""
        out, start = [], 0
        for name, width in (("A", r * self.linear),
                            ("H", quadratic_width(r) * self.quadratic),
                            ("G", int(self.constant)), ("B", self.inputs)):
            if width:
                out.append((name, start, start + width))
                start += width
        return out


@dataclass(frozen=True)
class RegWeights:
    gamma1: float = 0.0
    gamma2: float = 0.0

    def __post_init__(self):
        if self.gamma1 < 0 or self.gamma2 < 0:
            raise ValueError("regularization weights must be non-negative")


@dataclass(frozen=True)
class ReducedModel:
    """Inferred (or intrusive) reduced operators.

    Inactive blocks are ``None``. ``H`` is the compact quadratic operator.
    """

    r: int
    form: ModelForm
    A: np.ndarray | None = None
    H: np.ndarray | None = None
    G: np.ndarray | None = None
    B: np.ndarray | None = None
    basis_ref: str = ""
    weights: RegWeights = field(default_factory=RegWeights)
    rank: int | None = None
    cond: float | None = None

    def __post_init__(self):
        r, form = self.r, self.form
        shapes = {"A": (r, r), "H": (r, quadratic_width(r)), "G": (r,), "B": (r, form.inputs)}
        active = {"A": form.linear, "H": form.quadratic, "G": form.constant,
                  "B": form.inputs > 0}
        for name, shape in shapes.items():
            val = getattr(self, name)
            if active[name]:
                if val is None:
                    raise DimensionError(f"model form requires operator {name}")
                if np.size(val) != np.prod(shape):
                    raise DimensionError(f"operator {name} must have shape {shape}, "
                                         f"got {np.shape(val)}")
                val = np.array(val, dtype=float).reshape(shape)
                if not np.all(np.isfinite(val)):
                    raise NonFiniteError(f"operator {name} has non-finite entries")
                object.__setattr__(self, name, val)
            elif val is not None:
                raise DimensionError(f"operator {name} given but inactive in the model form")

    @property
    def H_full(self) -> np.ndarray | None:
        return None if self.H is None else expand_H(self.H)

    def operator_norms(self) -> dict[str, float]:
        out = {}
        for name in ("A", "H", "G", "B"):
            val = self.H_full if name == "H" else getattr(self, name)
            if val is not None:
                out[name] = float(np.linalg.norm(val))
        return out


def build_data_matrix(S_hat, inputs=None, form: ModelForm = ModelForm()) -> np.ndarray:
    """Least-squares data matrix, one row per snapshot.

    Row k is ``[s_k, compact_quadratic(s_k), 1, u_k]`` with inactive blocks
    left out.
    """
    S = np.atleast_2d(np.asarray(S_hat, dtype=float))
    r, K = S.shape
    cols = []
    if form.linear:
        cols.append(S.T)
    if form.quadratic:
        cols.append(compact_quadratic(S).T)
    if form.constant:
        cols.append(np.ones((K, 1)))
    if form.inputs:
        if inputs is None:
            raise DimensionError(f"model form expects {form.inputs} inputs, none given")
        U = np.atleast_2d(np.asarray(inputs, dtype=float))
        if U.shape != (form.inputs, K):
            raise DimensionError(f"inputs have shape {U.shape}, expected ({form.inputs}, {K})")
        cols.append(U.T)
    return np.hstack(cols)


def _column_norm_weights(form, r):
    """Per-column weight of each coefficient in the Frobenius norm (1 or 1/2)."""
    w = []
    for name, start, stop in form.blocks(r):
        if name == "H":
            i, j = np.triu_indices(r)
            w.append(np.where(i == j, 1.0, 0.5))
        else:
            w.append(np.ones(stop - start))
    return np.concatenate(w)


def _column_gammas(form, r, weights):
    return np.concatenate([np.full(stop - start, weights.gamma2 if name == "H" else weights.gamma1)
                           for name, start, stop in form.blocks(r)])


def solve_regularized(D, rhs, weights: RegWeights = RegWeights(), form: ModelForm = ModelForm(),
                      r=None, basis_ref="") -> ReducedModel:
    """Fit reduced operators by Tikhonov-regularized least squares.

    Each of the ``r`` rows minimizes

        (1/K) || D o - rhs[:, l] ||^2 + gamma1 ||o_lin||^2 + gamma2 ||H_l||_F^2

    where the linear block also covers constant and input coefficients. With
    zero regularization the minimum-norm solution is returned.

    Parameters
    ----------
    D : (K, p) ndarray
        Data matrix from :func:`build_data_matrix`.
    rhs : (K, r) ndarray
        Reduced time derivatives, one row per snapshot.
    r : int, optional
        Reduced dimension; defaults to ``rhs.shape[1]``.
    """
    D = np.asarray(D, dtype=float)
    R = np.asarray(rhs, dtype=float)
    if R.ndim == 1:
        R = R[:, None]
    K, p = D.shape
    if r is None:
        r = R.shape[1]
    if R.shape[0] != K:
        raise DimensionError(f"data matrix has {K} rows but rhs has {R.shape[0]}")
    if p != form.dof(r):
        raise DimensionError(f"data matrix has {p} columns; form needs {form.dof(r)} for r={r}")
    if not (np.all(np.isfinite(D)) and np.all(np.isfinite(R))):
        raise NonFiniteError("data matrix or rhs has non-finite entries")

    col_scale = 1.0 / np.sqrt(_column_norm_weights(form, r))
    Ds = D * col_scale
    reg = np.sqrt(K * _column_gammas(form, r, weights))
    keep = reg > 0
    if keep.any():
        P = np.diag(reg)[keep]
        Ds = np.vstack([Ds, P])
        R = np.vstack([R, np.zeros((P.shape[0], R.shape[1]))])
    O, _, rank, sv = la.lstsq(Ds, R, lapack_driver="gelsd")
    cond = float(sv[0] / sv[-1]) if sv[-1] > 0 else float("inf")
    O = O * col_scale[:, None]
    if not np.all(np.isfinite(O)):
        raise NonFiniteError(f"least-squares solve produced non-finite operators "
                             f"(condition estimate {cond:.3e})")
    if rank < p:
        log.info("operator inference problem is rank deficient (rank %d < %d)", rank, p)
    log.debug("stacked least-squares condition estimate %.3e", cond)

    ops = {}
    for name, start, stop in form.blocks(r):
        block = O[start:stop].T
        ops[name] = block[:, 0] if name == "G" else block
    return ReducedModel(r, form, basis_ref=basis_ref, weights=weights, rank=int(rank),
                        cond=cond, **ops)


def infer(S_hat, S_dot, inputs=None, form: ModelForm = ModelForm(),
          weights: RegWeights = RegWeights(), basis_ref="") -> ReducedModel:
    """Build the data matrix from reduced data and solve for the operators."""
    S = np.atleast_2d(S_hat)
    D = build_data_matrix(S, inputs, form)
    return solve_regularized(D, np.atleast_2d(S_dot).T, weights, form, S.shape[0], basis_ref)


def intrusive_operators(basis, structure, constant=None) -> ReducedModel:
    """POD-Galerkin operators of f(s) = a(s) + h(s, s) in scaled coordinates.

    With the basis' scaling s = mean + S V s_hat (S the per-dof scales), the
    projected dynamics are linear + quadratic + constant in s_hat. The
    constant block is included when the mean field is nonzero, unless
    ``constant`` forces the choice.
    """
    if not (callable(getattr(structure, "linear", None))
            and callable(getattr(structure, "bilinear", None))):
        raise TypeError("right-hand side does not expose linear/bilinear structure")
    V = basis.V
    n, r = V.shape
    if getattr(structure, "n", n) != n:
        raise DimensionError(f"structure acts on n={structure.n}, basis has n={n}")
    scaling = basis.scaling
    sc = scaling.dof_scales
    mean = scaling.means
    Phi = V * sc[:, None]
    left = V * (1.0 / sc)[:, None]
    if basis.weights is not None:
        left = left * basis.weights[:, None]
    P = left.T
    a, h = structure.linear, structure.bilinear

    Am = a(Phi) + h(mean[:, None], Phi) + h(Phi, mean[:, None])
    A = P @ Am
    i, j = np.triu_indices(r)
    Hij = h(Phi[:, i], Phi[:, j])
    cross = i != j
    Hji = np.zeros_like(Hij)
    Hji[:, cross] = h(Phi[:, j[cross]], Phi[:, i[cross]])
    H = P @ (Hij + Hji)
    if constant is None:
        constant = bool(np.any(mean != 0))
    G = P @ (a(mean) + h(mean, mean)) if constant else None
    form = ModelForm(linear=True, quadratic=True, constant=constant)
    return ReducedModel(r, form, A=A, H=H, G=G, basis_ref=basis.fingerprint())


# Model file ------------------------------------------------------------------

def write_model(model: ReducedModel, path) -> None:
    """Binary model file: header, basis reference, then active blocks row-major."""
    ref = model.basis_ref.encode()
    f = model.form
    header = _MODEL_HEADER.pack(MODEL_MAGIC, model.r, f.inputs, int(f.linear),
                                int(f.quadratic), int(f.constant), model.weights.gamma1,
                                model.weights.gamma2, len(ref))
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(ref)
        for name in ("A", "H", "G", "B"):
            val = getattr(model, name)
            if val is not None:
                fh.write(np.ascontiguousarray(val, dtype="<f8").tobytes())


def read_model(path) -> ReducedModel:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"model file not found: {path}")
    raw = path.read_bytes()
    if len(raw) < _MODEL_HEADER.size:
        raise FormatError(f"{path}: truncated model header")
    magic, r, m, lin, quad, const, g1, g2, nref = _MODEL_HEADER.unpack_from(raw)
    if magic != MODEL_MAGIC:
        raise FormatError(f"{path}: bad magic bytes {magic!r} at byte 0")
    off = _MODEL_HEADER.size
    ref = raw[off:off + nref].decode()
    off += nref
    form = ModelForm(bool(lin), bool(quad), bool(const), int(m))
    sizes = {"A": r * r * lin, "H": r * quadratic_width(r) * quad, "G": r * const, "B": r * m}
    body = len(raw) - off
    if body != 8 * sum(sizes.values()):
        raise FormatError(f"{path}: header implies {sum(sizes.values())} operator values, "
                          f"file carries {body / 8:g}")
    vals = np.frombuffer(raw, dtype="<f8", offset=off).astype(float)
    ops, pos = {}, 0
    for name in ("A", "H", "G", "B"):
        if sizes[name]:
            ops[name] = vals[pos:pos + sizes[name]]
            pos += sizes[name]
    return ReducedModel(int(r), form, basis_ref=ref, weights=RegWeights(g1, g2), **ops)
