"""The simulate -> lift -> basis -> train/tune -> predict -> evaluate chain."""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import fom, lifting, metrics, opinf, pod, rom, tuning
from .config import PipelineConfig
from .data import SnapshotSet, VariableLayout, write_snapshots

log = logging.getLogger(__name__)


def forcing_signal(cfg: PipelineConfig) -> rom.ForcingSignal | None:
    f = cfg.fom.forcing
    if f.kind == "none":
        return None
    return rom.ForcingSignal(f.kind, f.amplitude, f.frequency, f.offset)


def build_problem(cfg: PipelineConfig) -> fom.FomProblem:
    c = cfg.fom
    grid = np.linspace(*c.domain, c.n_x)
    i = c.init
    init = fom.initial_field(grid, i.kind, i.amplitude, i.center, i.width, i.modes, i.offset)
    if i.ramp:
        xi = (grid - grid[0]) / (grid[-1] - grid[0])
        init = init + c.bc[0] + (c.bc[1] - c.bc[0]) * xi
    return fom.FomProblem(c.kind, c.n_x, c.diffusivity, tuple(c.domain), tuple(c.bc), init,
                          forcing_signal(cfg), c.forcing.side)


def simulate(cfg: PipelineConfig) -> SnapshotSet:
    """Run the full-order model with a step that lands exactly on save times."""
    c = cfg.fom
    problem = build_problem(cfg)
    interval = c.t_final / c.n_saves
    target = c.dt if c.dt is not None else 0.5 * fom.stable_dt(problem)
    save_every = max(1, int(np.ceil(interval / target - 1e-9)))
    dt = interval / save_every
    return fom.solve(problem, c.t_final, dt, save_every)


def lifting_map(cfg: PipelineConfig, layout: VariableLayout) -> lifting.LiftingMap:
    return lifting.LiftingMap(cfg.lifting.kind, layout)


def split_training(snaps: SnapshotSet, fraction: float) -> tuple[SnapshotSet, SnapshotSet]:
    """Leading ``fraction`` of the time window for training, the rest for testing."""
    k_train = int(fraction * (snaps.K - 1)) + 1
    return snaps.select(slice(0, k_train)), snaps.select(slice(k_train, None))


def choose_rank(basis: pod.PodBasis, energy: float) -> int:
    for r in range(1, basis.singular_values.size + 1):
        eta, _ = pod.energy_retained(basis.singular_values, r, basis.K_total, basis.total_energy)
        if eta >= energy:
            return r
    return basis.singular_values.size


def compute_basis(train: SnapshotSet, cfg: PipelineConfig, seed=None) -> tuple[pod.PodBasis, SnapshotSet]:
    """Scale the training data and compute a POD basis of configured rank."""
    p = cfg.pod
    if p.center_scale:
        scaled, record = pod.center_scale(train)
    else:
        scaled, record = train, pod.ScalingRecord.identity(train.layout)
    seed = cfg.seed if seed is None else seed
    kmax = min(scaled.n, scaled.K)
    if p.r is None:
        probe = pod.pod_basis(scaled, kmax, "thin_svd", scaling=record) \
            if p.method == "thin_svd" else None
        if probe is None:
            m = p.n_singular or kmax
            probe = pod.pod_basis(scaled, m, "randomized", n_singular=m, seed=seed,
                                  oversample=p.oversample, power_iters=p.power_iters,
                                  scaling=record)
        r = choose_rank(probe, p.energy)
        return probe.truncate(r), scaled
    basis = pod.pod_basis(scaled, p.r, p.method, n_singular=p.n_singular,
                          oversample=p.oversample, power_iters=p.power_iters, seed=seed,
                          scaling=record)
    return basis, scaled


def model_form(cfg: PipelineConfig) -> opinf.ModelForm:
    o = cfg.opinf
    return opinf.ModelForm(o.linear, o.quadratic, o.constant, int(o.input))


def train(basis, scaled_train: SnapshotSet, cfg: PipelineConfig, tune_grid=True):
    """Infer a reduced model, tuning the regularization if configured.

    Returns ``(model, tuning_result_or_None)``.
    """
    S, Sdot = pod.project(basis, scaled_train)
    form = model_form(cfg)
    forcing = forcing_signal(cfg) if form.inputs else None
    inputs = forcing(scaled_train.times)[None] if forcing is not None else None
    t = cfg.tuning
    if t.enabled and tune_grid:
        times = scaled_train.times
        t_end = cfg.rom.t_end if cfg.rom.t_end is not None else cfg.fom.t_final
        plan = tuning.RegularizationPlan(
            training_horizon=times[-1] - times[0],
            trial_horizon=t_end - times[0] + t.trial_extension,
            gamma1_bounds=tuple(t.gamma1_bounds), gamma1_count=t.gamma1_count,
            gamma2_bounds=tuple(t.gamma2_bounds), gamma2_count=t.gamma2_count,
            growth_factor=t.growth_factor)
        result = tuning.tune(plan, S, Sdot, times, form, forcing, cfg.rom.scheme,
                             cfg.rom.substeps, basis.fingerprint())
        return result.model, result
    weights = opinf.RegWeights(cfg.opinf.gamma1, cfg.opinf.gamma2)
    model = opinf.infer(S, Sdot, inputs, form, weights, basis.fingerprint())
    return model, None


def predict(model, basis, s_hat0, t0, t1, sample_dt, cfg: PipelineConfig):
    """Integrate the reduced model, saving at the snapshot sampling interval."""
    sub = cfg.rom.substeps
    forcing = forcing_signal(cfg) if model.form.inputs else None
    return rom.integrate(model, s_hat0, t0, t1, sample_dt / sub, cfg.rom.scheme, forcing,
                         save_every=sub)


def reduced_snapshots(traj: rom.ReducedTrajectory) -> SnapshotSet:
    return SnapshotSet(traj.coefficients, traj.times, VariableLayout(("coef",), traj.r))


def common_columns(ref_times, pred_times, tol=1e-9):
    """Indices (i_ref, i_pred) of time stamps shared by two series."""
    scale = max(1.0, float(np.max(np.abs(ref_times))))
    j = np.searchsorted(pred_times, ref_times)
    i_ref, i_pred = [], []
    for i, jj in enumerate(j):
        for cand in (jj - 1, jj):
            if 0 <= cand < len(pred_times) and abs(pred_times[cand] - ref_times[i]) <= tol * scale:
                i_ref.append(i)
                i_pred.append(cand)
                break
    return np.array(i_ref, dtype=int), np.array(i_pred, dtype=int)


@dataclass
class Evaluation:
    times: np.ndarray
    correlation: np.ndarray
    step_error: np.ndarray
    probes: dict
    frobenius_error: float


def evaluate(reference: SnapshotSet, prediction: SnapshotSet, variable=None,
             probes=(0,)) -> Evaluation:
    """Compare a prediction with reference snapshots on their shared times."""
    i_ref, i_pred = common_columns(reference.times, prediction.times)
    if i_ref.size == 0:
        raise ValueError("reference and prediction share no time stamps")
    if variable is None:
        variable = reference.layout.names[0]
    if isinstance(variable, int) or str(variable).isdigit():
        variable = reference.layout.names[int(variable)]
    rows = reference.layout.rows(variable)
    if prediction.layout.n != reference.layout.n:
        raise ValueError(f"prediction has {prediction.layout.n} rows, reference has "
                         f"{reference.layout.n}")
    ref = metrics.FieldSeries(reference.states[rows][:, i_ref], reference.times[i_ref])
    pred = metrics.FieldSeries(prediction.states[rows][:, i_pred], reference.times[i_ref])
    R = np.array([_safe_corr(ref.values[:, k], pred.values[:, k]) for k in range(ref.times.size)])
    step = metrics.relative_error(ref, pred, "per_step_l2") \
        if np.all(np.linalg.norm(ref.values, axis=0) > 0) else np.full(ref.times.size, np.nan)
    traces = {int(p): (metrics.probe_trace(ref, int(p)), metrics.probe_trace(pred, int(p)))
              for p in probes}
    return Evaluation(ref.times, R, step, traces, metrics.relative_error(ref, pred))


def _safe_corr(a, b):
    try:
        return metrics.pearson_correlation(a, b)
    except metrics.UndefinedCorrelation:
        return float("nan")


def write_evaluation(ev: Evaluation, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        head = ["t", "correlation", "relative_error"]
        for p in ev.probes:
            head += [f"probe{p}_ref", f"probe{p}_pred"]
        w.writerow(head)
        for k, t in enumerate(ev.times):
            row = [t, ev.correlation[k], ev.step_error[k]]
            for ref, pred in ev.probes.values():
                row += [ref[k], pred[k]]
            w.writerow([repr(float(v)) for v in row])


def write_singular_values(basis: pod.PodBasis, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["index", "sigma", "eta", "eta_lower_bound"])
        for i, s in enumerate(basis.singular_values, start=1):
            eta, lb = pod.energy_retained(basis.singular_values, i, basis.K_total,
                                          basis.total_energy)
            w.writerow([i, repr(float(s)), repr(eta), repr(lb)])


def run(cfg: PipelineConfig, out_dir=None) -> dict:
    """Execute the full chain and write every artifact under ``out_dir``.

    Returns a dict of summary numbers and artifact paths.
    """
    out = Path(out_dir or cfg.io.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    ext = ".csv" if cfg.io.format == "csv" else ".bin"
    paths = {}

    def save(snaps, name):
        paths[name] = out / f"{name}{ext}"
        write_snapshots(snaps, paths[name], cfg.io.format)

    full = simulate(cfg)
    save(full, "fom")
    lmap = lifting_map(cfg, full.layout)
    data = lifting.lift_snapshots(lmap, full)
    if lmap.kind != "identity":
        save(data, "lifted")
    train_set, test_set = split_training(data, cfg.opinf.train_fraction)

    basis, scaled = compute_basis(train_set, cfg)
    paths["basis"] = out / "basis.bin"
    pod.write_basis(basis, paths["basis"])
    paths["singular_values"] = out / "singular_values.csv"
    write_singular_values(basis, paths["singular_values"])

    model, result = train(basis, scaled, cfg)
    paths["model"] = out / "model.bin"
    opinf.write_model(model, paths["model"])
    if result is not None:
        paths["tuning"] = out / "tuning.csv"
        result.write_csv(paths["tuning"])

    S0, _ = pod.project(basis, scaled.select(slice(0, 1)))
    t_end = cfg.rom.t_end if cfg.rom.t_end is not None else cfg.fom.t_final
    sample_dt = data.times[1] - data.times[0]
    traj = predict(model, basis, S0[:, 0], data.times[0], t_end, sample_dt, cfg)
    save(reduced_snapshots(traj), "reduced")
    recon = pod.reconstruct(basis, traj.coefficients, traj.times)
    save(recon, "reconstructed")

    ev = evaluate(data, recon, cfg.evaluate.variable, cfg.evaluate.probes)
    paths["metrics"] = out / "metrics.csv"
    write_evaluation(ev, paths["metrics"])

    summary = {
        "r": basis.r,
        "eta": pod.energy_retained(basis.singular_values, basis.r, basis.K_total,
                                   basis.total_energy)[0],
        "gamma1": model.weights.gamma1,
        "gamma2": model.weights.gamma2,
        "diverged": traj.diverged,
        "error_all": ev.frobenius_error,
    }
    i_ref, i_pred = common_columns(data.times, recon.times)
    train_cols = i_ref < train_set.K
    rel = lambda a, b: float(np.linalg.norm(a - b) / np.linalg.norm(b))  # noqa: E731
    if train_cols.any():
        summary["error_train"] = rel(recon.states[:, i_pred[train_cols]],
                                     data.states[:, i_ref[train_cols]])
    if (~train_cols).any() and test_set.K:
        summary["error_test"] = rel(recon.states[:, i_pred[~train_cols]],
                                    data.states[:, i_ref[~train_cols]])
        summary["projection_error_test"] = pod.projection_error(basis, test_set)
    paths["summary"] = out / "summary.csv"
    with open(paths["summary"], "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["quantity", "value"])
        for k, v in summary.items():
            w.writerow([k, repr(v) if isinstance(v, float) else v])
    summary["paths"] = paths
    return summary
