"""Evaluation and fixed-step explicit integration of learned reduced models."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .opinf import ReducedModel

DIVERGENCE_THRESHOLD = 1e6
SCHEMES = ("rk2_heun", "rk2_midpoint", "rk4")


@dataclass(frozen=True)
class ForcingSignal:
    """Scalar input signal u(t).

    For ``sinusoid`` the input is ``amplitude * sin(2 pi frequency t)``, the
    fluctuation about the baseline ``offset`` (so the full signal is
    ``offset + u(t)``).
    """

    kind: str = "none"
    amplitude: float = 0.0
    frequency: float = 1.0
    offset: float = 0.0

    def __post_init__(self):
        if self.kind not in ("none", "sinusoid"):
            raise ValueError(f"forcing kind must be 'none' or 'sinusoid', got {self.kind!r}")
        if self.kind == "sinusoid" and not self.frequency > 0:
            raise ValueError("sinusoid frequency must be positive")

    def __call__(self, t):
        if self.kind == "none":
            return 0.0 * np.asarray(t, dtype=float)
        return sinusoid_eval(self, t)

    def rate(self, t):
        if self.kind == "none":
            return 0.0 * np.asarray(t, dtype=float)
        w = 2.0 * np.pi * self.frequency
        return self.amplitude * w * np.cos(w * np.asarray(t, dtype=float))

    def total(self, t):
        return self.offset + self(t)


def sinusoid_eval(forcing: ForcingSignal, t):
    """Input value ``amplitude * sin(2 pi nu t)`` of a sinusoidal signal."""
    if forcing.kind != "sinusoid":
        raise ValueError("sinusoid_eval requires a sinusoid signal")
    return forcing.amplitude * np.sin(2.0 * np.pi * forcing.frequency * np.asarray(t, dtype=float))


@dataclass(frozen=True)
class ReducedTrajectory:
    times: np.ndarray
    coefficients: np.ndarray
    diverged: bool = False
    diverged_step: int | None = None

    @property
    def r(self) -> int:
        return self.coefficients.shape[0]


def _input_fn(model, forcing):
    m = model.form.inputs
    if m == 0:
        return None
    if forcing is None:
        raise ValueError(f"model expects {m} input(s) but no forcing was given")
    if m != 1 and isinstance(forcing, ForcingSignal):
        raise ValueError("a scalar ForcingSignal can only drive a single-input model")
    return lambda t: np.atleast_1d(np.asarray(forcing(t), dtype=float))


def make_rhs(model: ReducedModel, forcing=None):
    """Return ``f(s_hat, t)`` for the model; blocks are bound once for speed."""
    A, H, G, B = model.A, model.H, model.G, model.B
    iu = np.triu_indices(model.r)
    u_of = _input_fn(model, forcing)

    def f(s, t):
        out = np.zeros(model.r)
        if A is not None:
            out += A @ s
        if H is not None:
            out += H @ (s[iu[0]] * s[iu[1]])
        if G is not None:
            out += G
        if B is not None:
            out += B @ u_of(t)
        return out

    return f


def rom_rhs(model: ReducedModel, s_hat, t=0.0, forcing=None) -> np.ndarray:
    """A s + H (s kron s) + G + B u(t), omitting inactive blocks."""
    s = np.asarray(s_hat, dtype=float)
    if s.shape != (model.r,):
        raise ValueError(f"state has shape {s.shape}, model has r={model.r}")
    return make_rhs(model, forcing)(s, t)


def integrate(model: ReducedModel, s_hat0, t0, t1, dt, scheme="rk2_heun", forcing=None,
              save_every=1) -> ReducedTrajectory:
    """Fixed-step explicit integration from ``t0`` to ``t1``.

    ``rk2_heun`` is the explicit trapezoidal rule, ``rk2_midpoint`` the
    explicit midpoint rule, ``rk4`` the classical fourth-order method.
    Integration stops and the trajectory is flagged as diverged once any
    coefficient exceeds 1e6 in magnitude or becomes non-finite; the returned
    arrays end at the last finite saved state.
    """
    if not dt > 0:
        raise ValueError("dt must be positive")
    if not t1 > t0:
        raise ValueError("t1 must exceed t0")
    if scheme not in SCHEMES:
        raise ValueError(f"scheme must be one of {SCHEMES}, got {scheme!r}")
    f = make_rhs(model, forcing)
    s = np.array(s_hat0, dtype=float)
    if s.shape != (model.r,):
        raise ValueError(f"initial state has shape {s.shape}, model has r={model.r}")
    nsteps = int(round((t1 - t0) / dt))
    nsave = nsteps // save_every + 1
    out = np.empty((model.r, nsave))
    times = t0 + dt * save_every * np.arange(nsave)
    out[:, 0] = s
    saved = 1
    for step in range(1, nsteps + 1):
        t = t0 + (step - 1) * dt
        if scheme == "rk2_heun":
            k1 = f(s, t)
            k2 = f(s + dt * k1, t + dt)
            s = s + 0.5 * dt * (k1 + k2)
        elif scheme == "rk2_midpoint":
            k1 = f(s, t)
            s = s + dt * f(s + 0.5 * dt * k1, t + 0.5 * dt)
        else:
            k1 = f(s, t)
            k2 = f(s + 0.5 * dt * k1, t + 0.5 * dt)
            k3 = f(s + 0.5 * dt * k2, t + 0.5 * dt)
            k4 = f(s + dt * k3, t + dt)
            s = s + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        if not np.all(np.isfinite(s)) or np.max(np.abs(s)) > DIVERGENCE_THRESHOLD:
            return ReducedTrajectory(times[:saved], out[:, :saved], True, step)
        if step % save_every == 0:
            out[:, saved] = s
            saved += 1
    return ReducedTrajectory(times, out)
