"""Grid search for the regularization weights (gamma1, gamma2).

Every candidate pair is used to infer a model, which is integrated over a
trial horizon longer than the training horizon. Candidates whose reduced
coefficients stray from their training means by more than ``growth_factor``
times the largest deviation seen in the training data are rejected; among
the rest, the pair with the smallest training error wins.
"""

from __future__ import annotations

import csv
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import NoFeasibleRegularization
from .opinf import ModelForm, ReducedModel, RegWeights, build_data_matrix, solve_regularized
from .rom import ReducedTrajectory, integrate


@dataclass(frozen=True)
class RegularizationPlan:
    """Log-uniform (gamma1, gamma2) grid plus the horizons of the search.

    Horizons are durations measured from the first training time.
    """

    training_horizon: float
    trial_horizon: float
    gamma1_bounds: tuple[float, float] = (1.0, 1e7)
    gamma1_count: int = 15
    gamma2_bounds: tuple[float, float] = (1e10, 1e18)
    gamma2_count: int = 9
    growth_factor: float = 1.2

    def __post_init__(self):
        for lo, hi in (self.gamma1_bounds, self.gamma2_bounds):
            if not 0 < lo <= hi:
                raise ValueError("grid bounds must be positive with lo <= hi")
        if self.gamma1_count < 1 or self.gamma2_count < 1:
            raise ValueError("grids must be non-empty")
        if not self.growth_factor > 1:
            raise ValueError("growth_factor must exceed 1")
        if not self.trial_horizon >= self.training_horizon > 0:
            raise ValueError("need 0 < training_horizon <= trial_horizon")

    @property
    def gamma1_grid(self) -> np.ndarray:
        return np.geomspace(*self.gamma1_bounds, self.gamma1_count)

    @property
    def gamma2_grid(self) -> np.ndarray:
        return np.geomspace(*self.gamma2_bounds, self.gamma2_count)

    def candidates(self):
        return [RegWeights(float(g1), float(g2))
                for g1 in self.gamma1_grid for g2 in self.gamma2_grid]


@dataclass(frozen=True)
class CandidateRecord:
    gamma1: float
    gamma2: float
    training_error: float
    constraint_pass: bool
    diverged: bool


@dataclass(frozen=True)
class TuningResult:
    chosen: RegWeights
    model: ReducedModel
    records: list[CandidateRecord] = field(default_factory=list)

    @property
    def chosen_record(self) -> CandidateRecord:
        return next(c for c in self.records
                    if (c.gamma1, c.gamma2) == (self.chosen.gamma1, self.chosen.gamma2))

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["gamma1", "gamma2", "training_error", "constraint_pass", "diverged",
                        "chosen"])
            for c in self.records:
                chosen = (c.gamma1, c.gamma2) == (self.chosen.gamma1, self.chosen.gamma2)
                w.writerow([repr(c.gamma1), repr(c.gamma2), repr(c.training_error),
                            int(c.constraint_pass), int(c.diverged), int(chosen)])


def growth_constraint(trial: ReducedTrajectory, training_coeffs, means=None,
                      factor=1.2) -> bool:
    """Bounded-growth test on a trial trajectory.

    True iff the largest deviation of any trial coefficient from its training
    mean is at most ``factor`` times the largest such deviation in the
    training data. Diverged trials fail.
    """
    if trial.diverged:
        return False
    W = np.atleast_2d(np.asarray(training_coeffs, dtype=float))
    if W.size == 0:
        raise ValueError("training coefficients are empty")
    if means is None:
        means = W.mean(axis=1)
    means = np.asarray(means, dtype=float)[:, None]
    train_dev = np.max(np.abs(W - means))
    trial_dev = np.max(np.abs(trial.coefficients - means))
    return bool(trial_dev <= factor * train_dev)


def _threads():
    env = os.environ.get("OPINF_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def tune(plan: RegularizationPlan, S_hat, S_dot, times, form: ModelForm = ModelForm(),
         forcing=None, scheme="rk2_heun", substeps=1, basis_ref="",
         max_workers=None) -> TuningResult:
    """Select (gamma1, gamma2) by constrained minimization of training error.

    Parameters
    ----------
    S_hat, S_dot : (r, K) ndarray
        Reduced training states and time derivatives at uniformly spaced
        ``times``.
    forcing : callable, optional
        Input signal u(t), required when ``form.inputs > 0``; training inputs
        are ``forcing(times)``.
    substeps : int
        Integrator steps per training sampling interval.

    Raises
    ------
    NoFeasibleRegularization
        If no candidate satisfies the growth constraint.
    """
    S_hat = np.atleast_2d(np.asarray(S_hat, dtype=float))
    times = np.asarray(times, dtype=float)
    r, K = S_hat.shape
    if K < 2:
        raise ValueError("tuning needs at least two training snapshots")
    step = times[1] - times[0]
    if np.max(np.abs(np.diff(times) - step)) > 1e-9 * abs(step):
        raise ValueError("training times must be uniformly spaced")
    inputs = None
    if form.inputs:
        if forcing is None:
            raise ValueError("model form has inputs but no forcing was given")
        inputs = np.atleast_2d(np.asarray(forcing(times), dtype=float))
    D = build_data_matrix(S_hat, inputs, form)
    rhs = np.atleast_2d(S_dot).T
    dt = step / substeps
    t0 = times[0]
    n_train = int(round(plan.training_horizon / step)) + 1
    n_train = min(n_train, K)
    W_train = S_hat[:, :n_train]
    means = W_train.mean(axis=1)
    ref_norm = np.linalg.norm(W_train)

    def evaluate(weights):
        model = solve_regularized(D, rhs, weights, form, r, basis_ref)
        traj = integrate(model, S_hat[:, 0], t0, t0 + plan.trial_horizon, dt, scheme,
                         forcing, save_every=substeps)
        if traj.coefficients.shape[1] < n_train:
            err = np.inf
        else:
            pred = traj.coefficients[:, :n_train]
            err = float(np.linalg.norm(pred - W_train) / ref_norm)
        ok = growth_constraint(traj, W_train, means, plan.growth_factor)
        rec = CandidateRecord(weights.gamma1, weights.gamma2, err, ok, traj.diverged)
        return rec, model

    cands = plan.candidates()
    workers = max_workers or min(_threads(), len(cands))
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            results = list(pool.map(evaluate, cands))
    else:
        results = [evaluate(c) for c in cands]

    records = [rec for rec, _ in results]
    feasible = [i for i, rec in enumerate(records) if rec.constraint_pass]
    if not feasible:
        finite = [rec for rec in records if np.isfinite(rec.training_error)]
        best = min(finite, key=lambda c: c.training_error) if finite else None
        detail = (f"best infeasible candidate gamma1={best.gamma1:.3g}, gamma2={best.gamma2:.3g}, "
                  f"training error {best.training_error:.3e}" if best
                  else "every candidate diverged")
        raise NoFeasibleRegularization(f"no feasible regularization in the grid; {detail}")
    # smallest error; ties go to the largest (gamma1, gamma2)
    best = min(feasible, key=lambda i: (records[i].training_error,
                                        -records[i].gamma1, -records[i].gamma2))
    rec = records[best]
    return TuningResult(RegWeights(rec.gamma1, rec.gamma2), results[best][1], records)
