"""Shared synthetic reduced models for the test suite."""

import numpy as np

from liftlearn.opinf import ModelForm, ReducedModel
from liftlearn.rom import ForcingSignal, integrate, rom_rhs


def random_stable_model(r, seed=0, inputs=1, constant=True):
    rng = np.random.default_rng(seed)
    Q, _ = np.linalg.qr(rng.standard_normal((r, r)))
    A = Q @ np.diag(-rng.uniform(1, 3, r)) @ Q.T + 0.3 * rng.standard_normal((r, r))
    H = 0.1 * rng.standard_normal((r, r * (r + 1) // 2))
    G = 0.1 * rng.standard_normal(r) if constant else None
    B = rng.standard_normal((r, inputs)) if inputs else None
    form = ModelForm(True, True, constant, inputs)
    return ReducedModel(r, form, A=A, H=H, G=G, B=B)


def sample_trajectories(model, K, n_traj=8, seed=1, forcing=None, dt=0.01, save_every=5):
    """K reduced states, exact derivatives and inputs from several rk4 runs."""
    rng = np.random.default_rng(seed)
    if forcing is None and model.form.inputs:
        forcing = ForcingSignal("sinusoid", 1.0, 0.7)
    per = K // n_traj + 1
    S, Sd, U = [], [], []
    for _ in range(n_traj):
        tr = integrate(model, rng.standard_normal(model.r), 0.0, per * dt * save_every, dt,
                       "rk4", forcing, save_every)
        X, tt = tr.coefficients[:, :per], tr.times[:per]
        S.append(X)
        Sd.append(np.column_stack([rom_rhs(model, X[:, k], tt[k], forcing)
                                   for k in range(per)]))
        U.append(np.atleast_2d(forcing(tt)) if forcing is not None else np.zeros((1, per)))
    return np.hstack(S)[:, :K], np.hstack(Sd)[:, :K], np.hstack(U)[:, :K]
