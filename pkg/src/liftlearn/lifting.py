"""Pointwise quadratic lifting maps.

A lifting replaces the state s by w = T(s) so that the lifted dynamics
dw/dt = J(s) f(s) are linear plus quadratic in w. The executable instance
here is the cubic reaction-diffusion lifting T(s) = (s, s**2), for which

    a(w)     = (D d2w1/dx2, 0)
    h(w, w') = (-w1 w2', 2 D w1 d2w1'/dx2 - 2 w2 w2')

Snapshot data are lifted column by column: w_k = T(s_k) and
dw_k/dt = J(s_k) ds_k/dt.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import SnapshotSet, VariableLayout
from .errors import DimensionError
from .fom import QuadraticStructure, laplacian_interior

KINDS = ("identity", "cubic_rd")


@dataclass(frozen=True)
class LiftingMap:
    kind: str
    in_layout: VariableLayout

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"lifting kind must be one of {KINDS}, got {self.kind!r}")
        if self.kind == "cubic_rd" and self.in_layout.var_count != 1:
            raise ValueError("cubic_rd lifting acts on a single-variable state")

    @property
    def out_layout(self) -> VariableLayout:
        if self.kind == "identity":
            return self.in_layout
        name = self.in_layout.names[0]
        return VariableLayout((name, f"{name}2"), self.in_layout.dofs_per_var)


def _check(vec, layout, what):
    v = np.asarray(vec, dtype=float)
    if v.shape[0] != layout.n:
        raise DimensionError(f"{what} has {v.shape[0]} rows, layout expects {layout.n}")
    return v


def lift_state(lmap: LiftingMap, s) -> np.ndarray:
    """Apply T to a state vector (or to each column of a state matrix)."""
    s = _check(s, lmap.in_layout, "state")
    if lmap.kind == "identity":
        return s.copy()
    return np.concatenate([s, s * s], axis=0)


def lift_deriv(lmap: LiftingMap, s, s_dot) -> np.ndarray:
    """Apply the Jacobian J(s) to a time derivative ``s_dot``."""
    s = _check(s, lmap.in_layout, "state")
    s_dot = _check(s_dot, lmap.in_layout, "derivative")
    if s.shape != s_dot.shape:
        raise DimensionError(f"state shape {s.shape} and derivative shape {s_dot.shape} differ")
    if lmap.kind == "identity":
        return s_dot.copy()
    return np.concatenate([s_dot, 2.0 * s * s_dot], axis=0)


def unlift_state(lmap: LiftingMap, w) -> np.ndarray:
    """Left inverse of T: recover s from the first lifted variable."""
    w = _check(w, lmap.out_layout, "lifted state")
    return w[: lmap.in_layout.n].copy()


def lift_snapshots(lmap: LiftingMap, snaps: SnapshotSet) -> SnapshotSet:
    if not snaps.has_derivs:
        raise ValueError("lifting snapshot data requires time derivatives")
    if snaps.layout.n != lmap.in_layout.n:
        raise DimensionError(f"snapshots have {snaps.n} rows, lifting expects {lmap.in_layout.n}")
    W = lift_state(lmap, snaps.states)
    Wdot = lift_deriv(lmap, snaps.states, snaps.derivs)
    return SnapshotSet(W, snaps.times, lmap.out_layout, Wdot)


def lifted_rhs_cubic_rd(w, dx, diffusivity=1.0) -> np.ndarray:
    """a(w) + h(w, w) for the lifted cubic reaction-diffusion system.

    ``w`` stacks (w1, w2) on the grid. Boundary rows are zero (held values).
    """
    w = np.asarray(w, dtype=float)
    if w.ndim != 1 or w.shape[0] % 2 or w.shape[0] < 6:
        raise DimensionError(f"lifted state must stack two grid variables, got shape {w.shape}")
    struct = cubic_rd_structure(w.shape[0] // 2, dx, diffusivity)
    return struct.linear(w) + struct.bilinear(w, w)


def cubic_rd_structure(n_x, dx, diffusivity=1.0) -> QuadraticStructure:
    """Linear and bilinear parts of the lifted cubic reaction-diffusion rhs."""
    D = float(diffusivity)

    def split(w):
        return w[:n_x], w[n_x:]

    def linear(w):
        w1, _ = split(w)
        out = np.zeros(np.shape(w))
        out[1:n_x - 1] = D * laplacian_interior(w1, dx)
        return out

    def bilinear(w, v):
        w1, w2 = split(w)
        v1, v2 = split(v)
        out = np.zeros(np.broadcast_shapes(np.shape(w), np.shape(v)))
        inner = slice(1, n_x - 1)
        out[inner] = -w1[inner] * v2[inner]
        out[n_x + 1:2 * n_x - 1] = (2.0 * D * w1[inner] * laplacian_interior(v1, dx)
                                    - 2.0 * w2[inner] * v2[inner])
        return out

    return QuadraticStructure(linear, bilinear, 2 * n_x)
