"""Accuracy measures for reduced-model predictions."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError


@dataclass(frozen=True)
class FieldSeries:
    """A scalar field over ``n_pts`` points at ``N`` times, shape (n_pts, N)."""

    values: np.ndarray
    times: np.ndarray

    def __post_init__(self):
        values = np.atleast_2d(np.asarray(self.values, dtype=float))
        times = np.atleast_1d(np.asarray(self.times, dtype=float))
        if values.shape[1] != times.size:
            raise DimensionError(f"{values.shape[1]} columns but {times.size} times")
        if not (np.all(np.isfinite(values)) and np.all(np.isfinite(times))):
            raise ValueError("field series must be finite")
        if np.any(np.diff(times) <= 0):
            raise ValueError("times must be increasing")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "times", times)

    @classmethod
    def from_snapshots(cls, snaps, variable=None) -> "FieldSeries":
        rows = snaps.layout.rows(variable) if variable is not None else slice(None)
        return cls(snaps.states[rows], snaps.times)


class UndefinedCorrelation(ValueError):
    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


def pearson_correlation(ref, pred) -> float:
    """Pearson correlation of two fields at one time.

    Population standard deviations are used; the normalization cancels
    between numerator and denominator.
    """
    a = np.asarray(ref, dtype=float).ravel()
    b = np.asarray(pred, dtype=float).ravel()
    if a.size != b.size:
        raise DimensionError(f"fields have {a.size} and {b.size} points")
    if a.size < 2:
        raise DimensionError("correlation needs at least two points")
    da, db = a - a.mean(), b - b.mean()
    sa, sb = np.sqrt(np.mean(da * da)), np.sqrt(np.mean(db * db))
    if sa == 0 or sb == 0:
        raise UndefinedCorrelation("correlation is undefined for a constant field")
    R = np.mean(da * db) / (sa * sb)
    return float(np.clip(R, -1.0, 1.0))


def _check_pair(ref, pred):
    if ref.values.shape != pred.values.shape:
        raise DimensionError(f"series shapes differ: {ref.values.shape} vs {pred.values.shape}")
    if not np.allclose(ref.times, pred.times, rtol=1e-12, atol=1e-12):
        raise DimensionError("series are sampled at different times")


def correlation_series(ref: FieldSeries, pred: FieldSeries) -> np.ndarray:
    """Pearson correlation R(t) at every time step."""
    _check_pair(ref, pred)
    out = np.empty(ref.times.size)
    for k in range(out.size):
        try:
            out[k] = pearson_correlation(ref.values[:, k], pred.values[:, k])
        except UndefinedCorrelation as exc:
            raise UndefinedCorrelation(f"time index {k} (t={ref.times[k]:g}): {exc}",
                                       index=k) from None
    return out


def probe_trace(series: FieldSeries, index: int) -> np.ndarray:
    """Time history of the field at one point."""
    n = series.values.shape[0]
    if not -n <= index < n:
        raise IndexError(f"probe index {index} out of range for {n} points")
    return series.values[index].copy()


def relative_error(ref: FieldSeries, pred: FieldSeries, norm="frobenius"):
    """||pred - ref|| / ||ref|| over the whole series or per time step."""
    _check_pair(ref, pred)
    diff = pred.values - ref.values
    if norm == "frobenius":
        denom = np.linalg.norm(ref.values)
        if denom == 0:
            raise ValueError("reference field is identically zero")
        return float(np.linalg.norm(diff) / denom)
    if norm == "per_step_l2":
        denom = np.linalg.norm(ref.values, axis=0)
        if np.any(denom == 0):
            k = int(np.argmax(denom == 0))
            raise ValueError(f"reference field is zero at time index {k}")
        return np.linalg.norm(diff, axis=0) / denom
    raise ValueError(f"unknown norm {norm!r}")
