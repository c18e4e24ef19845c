"""Snapshot storage, variable layout and snapshot file I/O.

Snapshots are stored column-major: ``states[:, k]`` is the full state at
``times[k]``. Multi-variable states stack variables in blocks of
``dofs_per_var`` rows, in the order of ``layout.names``.
"""

from __future__ import annotations

import csv
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DimensionError, FormatError, NonFiniteError

MAGIC = b"OPINF1\x00\x00"
_HEADER = struct.Struct("<8sQQQQB")


@dataclass(frozen=True)
class VariableLayout:
    """Names and sizes of the physical variables that make up a state."""

    names: tuple[str, ...]
    dofs_per_var: int

    def __post_init__(self):
        object.__setattr__(self, "names", tuple(self.names))
        if not self.names:
            raise ValueError("layout needs at least one variable")
        if any(not name for name in self.names):
            raise ValueError("variable names must be nonempty")
        if len(set(self.names)) != len(self.names):
            raise ValueError(f"variable names must be unique, got {self.names}")
        if int(self.dofs_per_var) < 1:
            raise ValueError("dofs_per_var must be positive")
        object.__setattr__(self, "dofs_per_var", int(self.dofs_per_var))

    @property
    def var_count(self) -> int:
        return len(self.names)

    @property
    def n(self) -> int:
        return self.var_count * self.dofs_per_var

    @classmethod
    def default(cls, var_count: int, dofs_per_var: int) -> "VariableLayout":
        """Layout with generated names ``var0, var1, ...``."""
        return cls(tuple(f"var{i}" for i in range(var_count)), dofs_per_var)

    def index(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise KeyError(f"no variable {name!r} in layout {self.names}") from None

    def rows(self, name: str) -> slice:
        """Row slice of the state vector holding variable ``name``."""
        i = self.index(name)
        return slice(i * self.dofs_per_var, (i + 1) * self.dofs_per_var)


def _frozen(a):
    a = np.array(a, dtype=np.float64, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class SnapshotSet:
    """State snapshots, optional time derivatives, and their time stamps.

    Parameters
    ----------
    states : (n, K) ndarray
        Column ``k`` is the state at ``times[k]``.
    times : (K,) ndarray
        Strictly increasing time stamps.
    layout : VariableLayout
        Variable layout of the rows; ``layout.n`` must equal ``n``.
    derivs : (n, K) ndarray or None
        Time derivatives matching ``states`` column by column.
    """

    states: np.ndarray
    times: np.ndarray
    layout: VariableLayout
    derivs: np.ndarray | None = field(default=None)

    def __post_init__(self):
        states = _frozen(self.states)
        if states.ndim == 1:
            states = _frozen(states[:, None])
        times = _frozen(np.atleast_1d(self.times))
        if states.ndim != 2:
            raise DimensionError(f"states must be 2-D, got shape {states.shape}")
        n, K = states.shape
        if K < 1 or n < 1:
            raise DimensionError(f"need n >= 1 and K >= 1 snapshots, got shape {states.shape}")
        if times.shape != (K,):
            raise DimensionError(f"expected {K} time stamps, got {times.shape[0]}")
        if self.layout.n != n:
            raise DimensionError(f"layout describes {self.layout.n} rows but states have {n}")
        _check_finite(states, "states")
        _check_finite(times, "times")
        if K > 1 and np.any(np.diff(times) <= 0):
            k = int(np.argmax(np.diff(times) <= 0)) + 1
            raise ValueError(f"times must be strictly increasing (violated at index {k})")
        object.__setattr__(self, "states", states)
        object.__setattr__(self, "times", times)
        if self.derivs is not None:
            derivs = _frozen(self.derivs)
            if derivs.ndim == 1:
                derivs = _frozen(derivs[:, None])
            if derivs.shape != states.shape:
                raise DimensionError(
                    f"derivs shape {derivs.shape} differs from states shape {states.shape}")
            _check_finite(derivs, "derivs")
            object.__setattr__(self, "derivs", derivs)

    @property
    def n(self) -> int:
        return self.states.shape[0]

    @property
    def K(self) -> int:
        return self.states.shape[1]

    @property
    def has_derivs(self) -> bool:
        return self.derivs is not None

    def variable(self, name: str) -> np.ndarray:
        """Rows of ``states`` belonging to one variable, shape (dofs_per_var, K)."""
        return self.states[self.layout.rows(name)]

    def select(self, columns) -> "SnapshotSet":
        """Subset of snapshots, e.g. ``select(slice(0, 100))``."""
        derivs = None if self.derivs is None else self.derivs[:, columns]
        return SnapshotSet(self.states[:, columns], self.times[columns], self.layout, derivs)

    def with_derivs(self, derivs) -> "SnapshotSet":
        return SnapshotSet(self.states, self.times, self.layout, derivs)

    def equals(self, other: "SnapshotSet") -> bool:
        """Bitwise equality of all numeric content and layout sizes."""
        if (self.layout.var_count, self.layout.dofs_per_var) != (
                other.layout.var_count, other.layout.dofs_per_var):
            return False
        if self.has_derivs != other.has_derivs:
            return False
        same = (np.array_equal(self.states, other.states)
                and np.array_equal(self.times, other.times))
        if self.has_derivs:
            same = same and np.array_equal(self.derivs, other.derivs)
        return bool(same)


def _check_finite(a, what):
    bad = ~np.isfinite(a)
    if bad.any():
        loc = tuple(int(i) for i in np.argwhere(bad)[0])
        raise NonFiniteError(f"non-finite value in {what} at index {loc}")


# Binary format ---------------------------------------------------------------

def _write_binary(snaps: SnapshotSet, path: Path):
    header = _HEADER.pack(MAGIC, snaps.n, snaps.K, snaps.layout.var_count,
                          snaps.layout.dofs_per_var, int(snaps.has_derivs))
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(snaps.times.astype("<f8").tobytes())
        fh.write(snaps.states.astype("<f8").tobytes(order="F"))
        if snaps.has_derivs:
            fh.write(snaps.derivs.astype("<f8").tobytes(order="F"))


def _read_binary(path: Path, names=None) -> SnapshotSet:
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise FormatError(f"{path}: file is {len(raw)} bytes, shorter than the "
                          f"{_HEADER.size}-byte header")
    magic, n, K, var_count, dofs, has_derivs = _HEADER.unpack_from(raw, 0)
    if magic != MAGIC:
        raise FormatError(f"{path}: bad magic bytes {magic!r} at byte 0")
    if has_derivs not in (0, 1):
        raise FormatError(f"{path}: has_derivs flag must be 0 or 1, got {has_derivs} "
                          f"at byte {_HEADER.size - 1}")
    if K < 1 or n < 1:
        raise FormatError(f"{path}: header declares n={n}, K={K}; both must be >= 1")
    if var_count * dofs != n:
        raise FormatError(f"{path}: header declares n={n} but var_count*dofs_per_var="
                          f"{var_count * dofs} (bytes 8-40)")
    expected = K + n * K * (1 + has_derivs)
    body = len(raw) - _HEADER.size
    if body % 8:
        raise FormatError(f"{path}: payload of {body} bytes after byte {_HEADER.size} "
                          "is not a whole number of f64 values")
    if body // 8 != expected:
        raise FormatError(f"{path}: header declares n={n}, K={K}, has_derivs={has_derivs} "
                          f"({expected} values) but file carries {body // 8} values "
                          f"starting at byte {_HEADER.size}")
    values = np.frombuffer(raw, dtype="<f8", offset=_HEADER.size).astype(np.float64)
    bad = np.flatnonzero(~np.isfinite(values))
    if bad.size:
        i = int(bad[0])
        raise NonFiniteError(f"{path}: non-finite value at byte {_HEADER.size + 8 * i}")
    times = values[:K]
    states = values[K:K + n * K].reshape((n, K), order="F")
    derivs = values[K + n * K:].reshape((n, K), order="F") if has_derivs else None
    if K > 1 and np.any(np.diff(times) <= 0):
        k = int(np.argmax(np.diff(times) <= 0)) + 1
        raise FormatError(f"{path}: times not strictly increasing at record {k} "
                          f"(byte {_HEADER.size + 8 * k})")
    layout = VariableLayout(tuple(names), dofs) if names else VariableLayout.default(var_count, dofs)
    return SnapshotSet(states, times, layout, derivs)


# CSV format ------------------------------------------------------------------

def _csv_header(layout: VariableLayout, derivs: bool):
    cols = [f"{v}_{j}" for v in layout.names for j in range(layout.dofs_per_var)]
    head = ["t"] + cols
    if derivs:
        head += ["ddt_" + c for c in cols]
    return head


def _write_csv(snaps: SnapshotSet, path: Path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(_csv_header(snaps.layout, snaps.has_derivs))
        for k in range(snaps.K):
            row = [snaps.times[k], *snaps.states[:, k]]
            if snaps.has_derivs:
                row += list(snaps.derivs[:, k])
            w.writerow([repr(float(x)) for x in row])


def _parse_layout(cols, path):
    names, counts = [], {}
    for c in cols:
        var, sep, dof = c.rpartition("_")
        if not sep or not var or not dof.isdigit():
            raise FormatError(f"{path}: malformed column name {c!r} in header (record 0)")
        if var not in counts:
            names.append(var)
            counts[var] = 0
        if int(dof) != counts[var]:
            raise FormatError(f"{path}: column {c!r} out of order in header (record 0)")
        counts[var] += 1
    sizes = set(counts.values())
    if len(sizes) != 1:
        raise FormatError(f"{path}: variables have unequal dof counts {counts}")
    expect = [f"{v}_{j}" for v in names for j in range(counts[names[0]])]
    if cols != expect:
        raise FormatError(f"{path}: header columns are not grouped by variable")
    return VariableLayout(tuple(names), sizes.pop())


def _read_csv(path: Path) -> SnapshotSet:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or not rows[0] or rows[0][0] != "t":
        raise FormatError(f"{path}: header must start with 't' (record 0)")
    head = rows[0][1:]
    dcols = [c for c in head if c.startswith("ddt_")]
    scols = head[:len(head) - len(dcols)]
    if dcols and dcols != ["ddt_" + c for c in scols]:
        raise FormatError(f"{path}: derivative columns do not mirror state columns")
    layout = _parse_layout(scols, path)
    ncol = len(rows[0])
    data = []
    for i, row in enumerate(rows[1:], start=1):
        if len(row) != ncol:
            raise FormatError(f"{path}: record {i} has {len(row)} fields, header has {ncol}")
        try:
            vals = [float(x) for x in row]
        except ValueError as exc:
            raise FormatError(f"{path}: record {i}: {exc}") from None
        for j, v in enumerate(vals):
            if not np.isfinite(v):
                raise NonFiniteError(f"{path}: non-finite value at record {i}, "
                                     f"column {j} ({rows[0][j]!r})")
        data.append(vals)
    if not data:
        raise FormatError(f"{path}: no snapshot records")
    arr = np.array(data)
    times = arr[:, 0]
    if np.any(np.diff(times) <= 0):
        k = int(np.argmax(np.diff(times) <= 0)) + 2
        raise FormatError(f"{path}: times not strictly increasing at record {k}")
    n = layout.n
    states = arr[:, 1:1 + n].T
    derivs = arr[:, 1 + n:].T if dcols else None
    return SnapshotSet(states, times, layout, derivs)


def _fmt(path, fmt):
    if fmt is None:
        fmt = "csv" if str(path).lower().endswith(".csv") else "binary"
    if fmt not in ("binary", "csv"):
        raise ValueError(f"format must be 'binary' or 'csv', got {fmt!r}")
    return fmt


def read_snapshots(path, format=None, names=None) -> SnapshotSet:
    """Load a snapshot file.

    ``format`` is ``"binary"`` or ``"csv"``; inferred from the suffix when
    omitted. Binary files carry no variable names, so ``names`` may be given
    to label the variables (default ``var0, var1, ...``).
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"snapshot file not found: {path}")
    if _fmt(path, format) == "binary":
        return _read_binary(path, names)
    return _read_csv(path)


def write_snapshots(snaps: SnapshotSet, path, format=None) -> None:
    """Write a snapshot file in binary or CSV form."""
    path = Path(path)
    if _fmt(path, format) == "binary":
        _write_binary(snaps, path)
    else:
        _write_csv(snaps, path)


def finite_difference_derivs(snaps: SnapshotSet, scheme="central") -> SnapshotSet:
    """Estimate time derivatives from uniformly spaced snapshots.

    ``central`` uses second-order central differences in the interior and
    second-order one-sided stencils at both ends. ``forward`` is first order
    (backward at the last snapshot).
    """
    K = snaps.K
    if scheme not in ("central", "forward"):
        raise ValueError(f"unknown scheme {scheme!r}")
    need = 3 if scheme == "central" else 2
    if K < need:
        raise ValueError(f"{scheme} differences need K >= {need}, got {K}")
    steps = np.diff(snaps.times)
    dt = steps.mean()
    if np.max(np.abs(steps - dt)) > 1e-12 * max(abs(dt), np.max(np.abs(snaps.times))):
        raise ValueError("finite differences require uniformly spaced times")
    X = snaps.states
    D = np.empty_like(X)
    if scheme == "central":
        D[:, 1:-1] = (X[:, 2:] - X[:, :-2]) / (2 * dt)
        D[:, 0] = (-3 * X[:, 0] + 4 * X[:, 1] - X[:, 2]) / (2 * dt)
        D[:, -1] = (3 * X[:, -1] - 4 * X[:, -2] + X[:, -3]) / (2 * dt)
    else:
        D[:, :-1] = (X[:, 1:] - X[:, :-1]) / dt
        D[:, -1] = D[:, -2]
    return snaps.with_derivs(D)
