import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st
from hypothesis.extra import numpy as hnp

from liftlearn.data import SnapshotSet, VariableLayout
from liftlearn.errors import DimensionError
from liftlearn.metrics import (FieldSeries, UndefinedCorrelation, correlation_series,
                               pearson_correlation, probe_trace, relative_error)

fields = hnp.arrays(np.float64, st.integers(3, 40), elements=st.floats(-100, 100))


def test_identical_and_negated():
    x = np.random.default_rng(0).standard_normal(50)
    assert pearson_correlation(x, x) == pytest.approx(1.0, abs=1e-12)
    assert pearson_correlation(x, -x) == pytest.approx(-1.0, abs=1e-12)


def test_matches_numpy_corrcoef():
    rng = np.random.default_rng(1)
    a, b = rng.standard_normal(30), rng.standard_normal(30)
    assert pearson_correlation(a, b) == pytest.approx(np.corrcoef(a, b)[0, 1], abs=1e-14)


@settings(max_examples=100, deadline=None)
@given(x=fields, y_seed=st.integers(0, 2**31), a=st.floats(0.1, 10), b=st.floats(-10, 10),
       c=st.floats(0.1, 10), d=st.floats(-10, 10))
def test_affine_invariance(x, y_seed, a, b, c, d):
    y = np.random.default_rng(y_seed).standard_normal(x.size)
    assume(np.std(x) > 1e-6 * (1 + np.max(np.abs(x))))
    R = pearson_correlation(x, y)
    assert pearson_correlation(a * x + b, c * y + d) == pytest.approx(R, abs=1e-9)
    assert pearson_correlation(-a * x + b, c * y + d) == pytest.approx(-R, abs=1e-9)
    assert -1.0 <= R <= 1.0


def test_constant_field_undefined():
    with pytest.raises(UndefinedCorrelation):
        pearson_correlation(np.ones(5), np.arange(5.0))
    ref = FieldSeries(np.array([[1.0, 1.0], [2.0, 1.0]]), [0.0, 1.0])
    with pytest.raises(UndefinedCorrelation) as info:
        correlation_series(ref, ref)
    assert info.value.index == 1


def test_series_and_errors():
    vals = np.array([[1.0, 2.0, 3.0], [2.0, 4.0, 1.0], [0.0, 1.0, 5.0]])
    ref = FieldSeries(vals, [0.0, 0.1, 0.2])
    np.testing.assert_allclose(correlation_series(ref, ref), 1.0)
    pred = FieldSeries(vals * 1.1, [0.0, 0.1, 0.2])
    assert relative_error(ref, pred) == pytest.approx(0.1)
    np.testing.assert_allclose(relative_error(ref, pred, "per_step_l2"), 0.1)
    np.testing.assert_array_equal(probe_trace(ref, 1), [2.0, 4.0, 1.0])
    with pytest.raises(IndexError):
        probe_trace(ref, 3)
    with pytest.raises(DimensionError):
        relative_error(ref, FieldSeries(vals[:, :2], [0.0, 0.1]))
    with pytest.raises(ValueError):
        relative_error(ref, pred, "max")


def test_from_snapshots_selects_variable():
    snaps = SnapshotSet(np.arange(8.0).reshape(4, 2), [0.0, 1.0], VariableLayout(("u", "v"), 2))
    fs = FieldSeries.from_snapshots(snaps, "v")
    np.testing.assert_array_equal(fs.values, [[4.0, 5.0], [6.0, 7.0]])
