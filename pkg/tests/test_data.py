import struct

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra import numpy as hnp

from liftlearn.data import (MAGIC, SnapshotSet, VariableLayout, finite_difference_derivs,
                            read_snapshots, write_snapshots)
from liftlearn.errors import DimensionError, FormatError, NonFiniteError


def make_set(n=4, K=3, derivs=True, seed=0):
    rng = np.random.default_rng(seed)
    layout = VariableLayout(("a", "b"), n // 2) if n % 2 == 0 else VariableLayout(("a",), n)
    return SnapshotSet(rng.standard_normal((n, K)), np.arange(K) * 0.1 + 1.0, layout,
                       rng.standard_normal((n, K)) if derivs else None)


def test_layout_invariants():
    lay = VariableLayout(("u", "v", "w"), 5)
    assert lay.n == 15 and lay.var_count == 3
    assert lay.rows("v") == slice(5, 10)
    with pytest.raises(ValueError):
        VariableLayout(("u", "u"), 2)
    with pytest.raises(ValueError):
        VariableLayout(("",), 2)
    with pytest.raises(ValueError):
        VariableLayout(("u",), 0)


def test_snapshot_invariants():
    lay = VariableLayout(("s",), 2)
    with pytest.raises(ValueError, match="strictly increasing"):
        SnapshotSet(np.zeros((2, 2)), [0.0, 0.0], lay)
    with pytest.raises(DimensionError):
        SnapshotSet(np.zeros((2, 2)), [0.0, 1.0], lay, np.zeros((2, 3)))
    with pytest.raises(NonFiniteError):
        SnapshotSet(np.array([[0.0], [np.inf]]), [0.0], lay)
    with pytest.raises(DimensionError):
        SnapshotSet(np.zeros((2, 0)), [], lay)
    snaps = SnapshotSet(np.zeros((2, 1)), [0.0], lay)
    with pytest.raises(ValueError):
        snaps.states[0, 0] = 1.0


def test_binary_round_trip(tmp_path):
    snaps = make_set()
    path = tmp_path / "s.bin"
    write_snapshots(snaps, path, "binary")
    back = read_snapshots(path, "binary")
    assert back.states.shape == (4, 3)
    assert back.equals(snaps)
    write_snapshots(back, tmp_path / "t.bin", "binary")
    assert path.read_bytes() == (tmp_path / "t.bin").read_bytes()


def test_binary_layout_on_disk(tmp_path):
    snaps = SnapshotSet(np.array([[1.0, 2.0], [3.0, 4.0]]), [0.0, 0.5],
                        VariableLayout(("s",), 2))
    path = tmp_path / "s.bin"
    write_snapshots(snaps, path)
    raw = path.read_bytes()
    assert raw[:8] == MAGIC
    assert struct.unpack_from("<QQQQB", raw, 8) == (2, 2, 1, 2, 0)
    vals = np.frombuffer(raw, "<f8", offset=41)
    # times then column-major states
    assert vals.tolist() == [0.0, 0.5, 1.0, 3.0, 2.0, 4.0]


def test_zero_one_by_one(tmp_path):
    snaps = SnapshotSet(np.zeros((1, 1)), [0.0], VariableLayout(("s",), 1))
    write_snapshots(snaps, tmp_path / "z.bin")
    assert read_snapshots(tmp_path / "z.bin").states[0, 0] == 0.0


def test_binary_dimension_mismatch(tmp_path):
    header = struct.pack("<8sQQQQB", MAGIC, 4, 3, 1, 4, 0)
    path = tmp_path / "bad.bin"
    path.write_bytes(header + np.arange(11, dtype="<f8").tobytes())
    with pytest.raises(FormatError, match="carries 11 values"):
        read_snapshots(path)


def test_binary_bad_magic_and_nan(tmp_path):
    path = tmp_path / "bad.bin"
    path.write_bytes(b"NOTOPINF" + bytes(33))
    with pytest.raises(FormatError, match="magic"):
        read_snapshots(path)
    snaps = make_set(n=1, K=2, derivs=False)
    write_snapshots(snaps, path)
    raw = bytearray(path.read_bytes())
    raw[-8:] = struct.pack("<d", float("nan"))
    path.write_bytes(bytes(raw))
    with pytest.raises(NonFiniteError, match="byte 65"):
        read_snapshots(path)


def test_binary_nonincreasing_times(tmp_path):
    path = tmp_path / "t.bin"
    body = struct.pack("<8sQQQQB", MAGIC, 1, 2, 1, 1, 0) + np.array([1.0, 1.0, 0, 0]).astype("<f8").tobytes()
    path.write_bytes(body)
    with pytest.raises(FormatError, match="record 1"):
        read_snapshots(path)


def test_csv_round_trip(tmp_path):
    snaps = make_set()
    path = tmp_path / "s.csv"
    write_snapshots(snaps, path)
    head = path.read_text().splitlines()[0]
    assert head.startswith("t,a_0,a_1,b_0,b_1,ddt_a_0")
    back = read_snapshots(path)
    assert back.layout.names == ("a", "b")
    np.testing.assert_allclose(back.states, snaps.states, rtol=1e-15)
    np.testing.assert_allclose(back.derivs, snaps.derivs, rtol=1e-15)
    np.testing.assert_allclose(back.times, snaps.times, rtol=1e-15)


def test_csv_nan_names_row_and_column(tmp_path):
    path = tmp_path / "n.csv"
    path.write_text("t,s_0,s_1\n0.0,1.0,2.0\n0.1,nan,3.0\n")
    with pytest.raises(NonFiniteError, match=r"record 2, column 1 \('s_0'\)"):
        read_snapshots(path)


def test_missing_file(tmp_path):
    with pytest.raises(FileNotFoundError):
        read_snapshots(tmp_path / "nope.bin")


@settings(max_examples=40, deadline=None)
@given(n=st.integers(1, 6), K=st.integers(1, 6), derivs=st.booleans(), data=st.data())
def test_binary_round_trip_property(tmp_path_factory, n, K, derivs, data):
    elems = st.floats(-1e300, 1e300, allow_nan=False, allow_infinity=False)
    states = data.draw(hnp.arrays(np.float64, (n, K), elements=elems))
    d = data.draw(hnp.arrays(np.float64, (n, K), elements=elems)) if derivs else None
    steps = data.draw(hnp.arrays(np.float64, K, elements=st.floats(1e-3, 10.0)))
    snaps = SnapshotSet(states, np.cumsum(steps), VariableLayout(("s",), n), d)
    path = tmp_path_factory.mktemp("rt") / "s.bin"
    write_snapshots(snaps, path)
    assert read_snapshots(path).equals(snaps)


# finite differences -----------------------------------------------------------

def _series(f, times):
    times = np.asarray(times, dtype=float)
    return SnapshotSet(np.vstack([f(times), 2 * f(times)]), times, VariableLayout(("s",), 2))


@pytest.mark.parametrize("scheme", ["central", "forward"])
def test_fd_linear_exact(scheme):
    out = finite_difference_derivs(_series(lambda t: t, [0.0, 0.1, 0.2]), scheme)
    np.testing.assert_allclose(out.derivs[0], 1.0, rtol=1e-13)


def test_fd_quadratic_central():
    out = finite_difference_derivs(_series(lambda t: t**2, [0.0, 0.1, 0.2]), "central")
    assert out.derivs[0, 1] == pytest.approx(0.2, rel=1e-13)
    # one-sided second-order ends are exact for quadratics too
    np.testing.assert_allclose(out.derivs[0], [0.0, 0.2, 0.4], atol=1e-13)


def test_fd_constant_zero():
    out = finite_difference_derivs(_series(lambda t: 0 * t + 3.0, np.linspace(0, 1, 5)))
    assert np.all(out.derivs == 0)


def test_fd_errors():
    with pytest.raises(ValueError, match="uniformly"):
        finite_difference_derivs(_series(lambda t: t, [0.0, 0.1, 0.3]))
    with pytest.raises(ValueError, match="K >= 3"):
        finite_difference_derivs(_series(lambda t: t, [0.0, 0.1]))


@settings(max_examples=30, deadline=None)
@given(coef=hnp.arrays(np.float64, 3, elements=st.floats(-10, 10)),
       t0=st.floats(-5, 5), dt=st.floats(1e-2, 1.0), K=st.integers(3, 12))
def test_fd_quadratic_property(coef, t0, dt, K):
    times = t0 + dt * np.arange(K)
    c0, c1, c2 = coef
    out = finite_difference_derivs(_series(lambda t: c0 + c1 * t + c2 * t**2, times))
    exact = c1 + 2 * c2 * times
    scale = 1 + np.max(np.abs(coef)) * (1 + np.max(np.abs(times))) ** 2 / dt
    np.testing.assert_allclose(out.derivs[0], exact, atol=1e-12 * scale)
