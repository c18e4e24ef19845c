"""Desk-scale 1D full-order solvers used to generate training data.

Two problems are supported on a uniform grid with Dirichlet ends:

* ``cubic_reaction_diffusion``:  ds/dt = D d2s/dx2 - s**3
* ``viscous_burgers``:           ds/dt = nu d2s/dx2 - s ds/dx

Second-order central differences are used in space and classical RK4 in
time. Boundary dofs stay in the state vector; their rows of the right-hand
side carry the rate of change of the prescribed boundary value (zero unless
a boundary forcing signal is attached).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .data import SnapshotSet, VariableLayout
from .errors import DimensionError, DivergenceError, NonFiniteError

KINDS = ("cubic_reaction_diffusion", "viscous_burgers")
DIVERGENCE_THRESHOLD = 1e6
# Extent of the RK4 stability region along the negative real / imaginary axes.
_RK4_REAL = 2.785
_RK4_IMAG = 2.828


@dataclass(frozen=True)
class BoundarySignal:
    """Time-varying boundary perturbation with its exact rate of change."""

    value: Callable[[float], float]
    rate: Callable[[float], float]

    def __call__(self, t):
        return self.value(t)


@dataclass(frozen=True)
class FomProblem:
    """A 1D initial/boundary value problem on a uniform grid.

    ``forcing`` is any callable ``u(t)`` exposing ``rate(t)``; its value is
    added to the Dirichlet value(s) on ``forcing_side``.
    """

    kind: str
    n_x: int
    diffusivity: float
    domain: tuple[float, float] = (0.0, 1.0)
    bc: tuple[float, float] = (0.0, 0.0)
    init: np.ndarray | None = None
    forcing: object | None = None
    forcing_side: str = "right"
    grid: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}, got {self.kind!r}")
        if self.n_x < 3:
            raise ValueError("n_x must be at least 3")
        lo, hi = map(float, self.domain)
        if not hi > lo:
            raise ValueError(f"degenerate domain {self.domain}")
        if not self.diffusivity > 0:
            raise ValueError("diffusivity must be positive")
        if self.forcing_side not in ("left", "right", "both"):
            raise ValueError("forcing_side must be 'left', 'right' or 'both'")
        object.__setattr__(self, "domain", (lo, hi))
        object.__setattr__(self, "bc", tuple(map(float, self.bc)))
        object.__setattr__(self, "grid", np.linspace(lo, hi, self.n_x))
        if self.init is not None:
            init = np.array(self.init, dtype=float)
            if init.shape != (self.n_x,):
                raise DimensionError(f"init has shape {init.shape}, expected ({self.n_x},)")
            init.setflags(write=False)
            object.__setattr__(self, "init", init)

    @property
    def dx(self) -> float:
        return (self.domain[1] - self.domain[0]) / (self.n_x - 1)

    @property
    def layout(self) -> VariableLayout:
        return VariableLayout(("s",), self.n_x)

    def boundary_values(self, t) -> tuple[float, float]:
        left, right = self.bc
        if self.forcing is not None:
            u = float(self.forcing(t))
            if self.forcing_side in ("left", "both"):
                left += u
            if self.forcing_side in ("right", "both"):
                right += u
        return left, right

    def boundary_rates(self, t) -> tuple[float, float]:
        if self.forcing is None:
            return 0.0, 0.0
        du = float(self.forcing.rate(t))
        return ((du if self.forcing_side in ("left", "both") else 0.0),
                (du if self.forcing_side in ("right", "both") else 0.0))

    def initial_state(self) -> np.ndarray:
        s = np.zeros(self.n_x) if self.init is None else np.array(self.init)
        s[0], s[-1] = self.boundary_values(0.0)
        return s


def laplacian_interior(s, dx):
    return (s[2:] - 2.0 * s[1:-1] + s[:-2]) / dx**2


def rhs_eval(problem: FomProblem, state, t=0.0) -> np.ndarray:
    """Semi-discrete right-hand side f(s) at time ``t``."""
    s = np.asarray(state, dtype=float)
    if s.shape != (problem.n_x,):
        raise DimensionError(f"state has shape {s.shape}, expected ({problem.n_x},)")
    if not np.all(np.isfinite(s)):
        raise NonFiniteError("non-finite entry in state")
    out = np.empty_like(s)
    diff = problem.diffusivity * laplacian_interior(s, problem.dx)
    if problem.kind == "cubic_reaction_diffusion":
        out[1:-1] = diff - s[1:-1] ** 3
    else:
        out[1:-1] = diff - s[1:-1] * (s[2:] - s[:-2]) / (2 * problem.dx)
    out[0], out[-1] = problem.boundary_rates(t)
    return out


def stable_dt(problem: FomProblem, amplitude=None) -> float:
    """Largest RK4 step expected to be stable for the problem.

    Uses the diffusion eigenvalue bound 4 D / dx**2 plus the reaction
    (3 s**2) or advection (|s| / dx) contribution at ``amplitude``, which
    defaults to the max-abs of the initial and boundary data.
    """
    if amplitude is None:
        amplitude = max(np.max(np.abs(problem.initial_state())), *map(abs, problem.bc))
    dx = problem.dx
    lam_diff = 4.0 * problem.diffusivity / dx**2
    if problem.kind == "cubic_reaction_diffusion":
        return _RK4_REAL / (lam_diff + 3.0 * amplitude**2)
    lam_adv = amplitude / dx
    if lam_adv == 0:
        return _RK4_REAL / lam_diff
    return min(_RK4_REAL / lam_diff, _RK4_IMAG / lam_adv)


def solve(problem: FomProblem, t_final, dt, save_every=1) -> SnapshotSet:
    """Integrate from t=0 to ``t_final`` with fixed-step RK4.

    Returns the saved states (every ``save_every`` steps, including t=0) with
    derivatives evaluated exactly by :func:`rhs_eval`.
    """
    if not dt > 0:
        raise ValueError("dt must be positive")
    bound = stable_dt(problem)
    if dt > bound:
        raise ValueError(f"dt={dt:g} exceeds the RK4 stability estimate {bound:.3g}")
    if int(save_every) < 1:
        raise ValueError("save_every must be a positive integer")
    nsteps = int(round(t_final / dt))
    if nsteps < 1:
        raise ValueError("t_final must be at least one step")

    s = problem.initial_state()
    saved, times = [s.copy()], [0.0]
    f = lambda y, tt: rhs_eval(problem, y, tt)  # noqa: E731
    for step in range(1, nsteps + 1):
        t = (step - 1) * dt
        k1 = f(s, t)
        k2 = f(s + 0.5 * dt * k1, t + 0.5 * dt)
        k3 = f(s + 0.5 * dt * k2, t + 0.5 * dt)
        k4 = f(s + dt * k3, t + dt)
        s = s + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        s[0], s[-1] = problem.boundary_values(step * dt)
        if not np.all(np.isfinite(s)) or np.max(np.abs(s)) > DIVERGENCE_THRESHOLD:
            raise DivergenceError(f"full-order solve diverged at step {step} "
                                  f"(t={step * dt:g})", step=step)
        if step % save_every == 0:
            saved.append(s.copy())
            times.append(step * dt)
    states = np.column_stack(saved)
    times = np.array(times)
    derivs = np.column_stack([rhs_eval(problem, states[:, k], times[k])
                              for k in range(states.shape[1])])
    return SnapshotSet(states, times, problem.layout, derivs)


# Polynomial structure for intrusive projection -------------------------------

@dataclass(frozen=True)
class QuadraticStructure:
    """Linear and bilinear parts of a right-hand side f(s) = a(s) + h(s, s).

    Both callables act column-wise on (n,) or (n, k) arrays.
    """

    linear: Callable[[np.ndarray], np.ndarray]
    bilinear: Callable[[np.ndarray, np.ndarray], np.ndarray]
    n: int


def burgers_structure(problem: FomProblem) -> QuadraticStructure:
    """Exact a(s), h(s, s') for the unforced discretized Burgers equation."""
    if problem.kind != "viscous_burgers":
        raise ValueError("burgers_structure requires a viscous_burgers problem")
    if problem.forcing is not None:
        raise ValueError("a forced boundary is not a polynomial of the state")
    nu, dx = problem.diffusivity, problem.dx

    def linear(s):
        out = np.zeros_like(s, dtype=float)
        out[1:-1] = nu * (s[2:] - 2.0 * s[1:-1] + s[:-2]) / dx**2
        return out

    def bilinear(u, v):
        out = np.zeros(np.broadcast_shapes(np.shape(u), np.shape(v)))
        out[1:-1] = -u[1:-1] * (v[2:] - v[:-2]) / (2 * dx)
        return out

    return QuadraticStructure(linear, bilinear, problem.n_x)


# Initial conditions ----------------------------------------------------------

def initial_field(grid, kind="sine", amplitude=1.0, center=0.5, width=0.1, modes=1,
                  offset=0.0):
    """A few smooth initial fields used by configs and experiments."""
    x = np.asarray(grid, dtype=float)
    lo, hi = x[0], x[-1]
    xi = (x - lo) / (hi - lo)
    if kind == "sine":
        return offset + amplitude * np.sin(modes * np.pi * xi)
    if kind == "gaussian":
        return offset + amplitude * np.exp(-((xi - center) / width) ** 2)
    if kind == "constant":
        return np.full_like(x, offset + amplitude)
    raise ValueError(f"unknown initial condition {kind!r}")
