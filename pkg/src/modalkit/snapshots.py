"""Time-series containers and snapshot-matrix construction.

A :class:`TimeSeries` holds uniformly sampled channels, each tagged as a
state or an input.  :func:`hankel_stack` builds delay-embedded matrices and
:func:`build_pairs` splits them into the one-step-shifted pair ``(X1, X2)``
plus the time-aligned input matrix ``U1``.
"""
from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import (EmptyRole, InvalidStacking, IrregularSampling, MalformedData,
                     SchemaMismatch, TooFewSnapshots)

#: Maximum relative deviation of any time step from the median step.
SAMPLING_TOLERANCE = 1e-3


class Role(str, enum.Enum):
    STATE = "state"
    INPUT = "input"

    @classmethod
    def parse(cls, value) -> "Role":
        if isinstance(value, Role):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise SchemaMismatch(f"unknown channel role {value!r}") from None


@dataclass(frozen=True)
class Channel:
    name: str
    role: Role
    values: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=np.float64, copy=True)
        if values.ndim != 1:
            raise MalformedData(f"channel {self.name!r} must be one-dimensional")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "role", Role.parse(self.role))


@dataclass(frozen=True)
class TimeSeries:
    """Uniformly sampled multichannel record.

    Attributes:
        channels: Channels in column order; all share one length ``n >= 2``.
        dt: Sampling interval in seconds.
        t0: Time of the first sample in seconds.
    """

    channels: tuple
    dt: float
    t0: float = 0.0

    def __post_init__(self):
        channels = tuple(self.channels)
        object.__setattr__(self, "channels", channels)
        if not channels:
            raise MalformedData("a time series needs at least one channel")
        names = [c.name for c in channels]
        if len(set(names)) != len(names):
            raise MalformedData(f"duplicate channel names in {names}")
        lengths = {len(c.values) for c in channels}
        if len(lengths) != 1:
            raise MalformedData(f"channels have unequal lengths {sorted(lengths)}")
        if lengths.pop() < 2:
            raise MalformedData("a time series needs at least 2 samples")
        if not (math.isfinite(self.dt) and self.dt > 0):
            raise MalformedData(f"dt must be positive and finite, got {self.dt}")

    @classmethod
    def from_arrays(cls, data: Mapping[str, Sequence[float]], roles: Mapping[str, Role],
                    dt: float, t0: float = 0.0) -> "TimeSeries":
        return cls(tuple(Channel(name, roles[name], vals) for name, vals in data.items()),
                   dt=dt, t0=t0)

    @property
    def n(self) -> int:
        return len(self.channels[0].values)

    @property
    def names(self) -> list[str]:
        return [c.name for c in self.channels]

    def names_with_role(self, role) -> list[str]:
        role = Role.parse(role)
        return [c.name for c in self.channels if c.role is role]

    def times(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(self.n)

    def channel(self, name: str) -> Channel:
        for c in self.channels:
            if c.name == name:
                return c
        raise SchemaMismatch(f"no channel named {name!r}")

    def matrix(self, role=None) -> np.ndarray:
        """Channel values as a ``channels x n`` array, optionally filtered by role."""
        if role is None:
            chans = self.channels
        else:
            role = Role.parse(role)
            chans = [c for c in self.channels if c.role is role]
        if not chans:
            return np.empty((0, self.n))
        return np.vstack([c.values for c in chans])

    def with_roles(self, roles: Mapping[str, Role]) -> "TimeSeries":
        """Reassign roles; channels missing from ``roles`` are dropped."""
        for name in roles:
            self.channel(name)
        chans = tuple(Channel(c.name, roles[c.name], c.values)
                      for c in self.channels if c.name in roles)
        return TimeSeries(chans, self.dt, self.t0)

    def replace_values(self, values: Mapping[str, np.ndarray]) -> "TimeSeries":
        chans = tuple(Channel(c.name, c.role, values.get(c.name, c.values))
                      for c in self.channels)
        return TimeSeries(chans, self.dt, self.t0)


@dataclass(frozen=True)
class SnapshotMatrices:
    """One-step snapshot pair with optional inputs.

    ``X2[:, j]`` is one sample ahead of ``X1[:, j]``; ``U1[:, j]`` is aligned
    with ``X1[:, j]``.  Rows are delay-major blocks of ``m`` (or ``e``)
    channels repeated ``s`` times.
    """

    X1: np.ndarray
    X2: np.ndarray
    U1: Optional[np.ndarray]
    m: int
    e: int
    s: int
    dt: float
    state_names: tuple = ()
    input_names: tuple = ()
    t0: float = 0.0

    def __post_init__(self):
        for name in ("X1", "X2", "U1"):
            arr = getattr(self, name)
            if arr is not None:
                arr = np.array(arr, dtype=np.float64, copy=True)
                arr.setflags(write=False)
                object.__setattr__(self, name, arr)
        if self.X1.shape != self.X2.shape:
            raise MalformedData(f"X1 {self.X1.shape} and X2 {self.X2.shape} differ in shape")
        if self.U1 is not None and self.U1.shape[1] != self.X1.shape[1]:
            raise MalformedData("U1 must have as many columns as X1")

    @property
    def cols(self) -> int:
        return self.X1.shape[1]


def ingest_csv(path, role_map: Mapping[str, Role]) -> TimeSeries:
    """Read a CSV whose first column is time and whose other columns are channels.

    Columns not named in ``role_map`` are ignored.

    Raises:
        SchemaMismatch: a channel in ``role_map`` is absent from the header.
        MalformedData: empty, non-numeric or non-finite cell, or too few rows.
        IrregularSampling: a time step deviates from the median step by more
            than 0.1%.
    """
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise MalformedData(f"{path}: empty file") from None
        if len(header) < 2:
            raise MalformedData(f"{path}: need a time column and at least one channel")
        columns = header[1:]
        missing = [name for name in role_map if name not in columns]
        if missing:
            raise SchemaMismatch(f"{path}: channel(s) {missing} not in header {columns}")
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise MalformedData(f"{path}:{lineno}: expected {len(header)} cells, got {len(row)}")
            try:
                vals = [float(cell) for cell in row]
            except ValueError:
                raise MalformedData(f"{path}:{lineno}: missing or non-numeric cell") from None
            if not all(math.isfinite(v) for v in vals):
                raise MalformedData(f"{path}:{lineno}: NaN or infinite cell")
            rows.append(vals)
    if len(rows) < 2:
        raise MalformedData(f"{path}: need at least 2 data rows, got {len(rows)}")
    data = np.array(rows)
    dt = check_uniform(data[:, 0], source=str(path))
    channels = tuple(Channel(name, Role.parse(role_map[name]), data[:, 1 + columns.index(name)])
                     for name in columns if name in role_map)
    return TimeSeries(channels, dt=dt, t0=float(data[0, 0]))


def read_header(path) -> list[str]:
    """Channel names of a CSV (the header minus the time column)."""
    with Path(path).open(newline="") as fh:
        try:
            header = next(csv.reader(fh))
        except StopIteration:
            raise MalformedData(f"{path}: empty file") from None
    return [h.strip() for h in header[1:]]


def check_uniform(t: np.ndarray, source: str = "time column") -> float:
    steps = np.diff(t)
    dt = float(np.median(steps))
    if not dt > 0:
        raise IrregularSampling(f"{source}: time must be strictly increasing")
    worst = np.max(np.abs(steps - dt))
    if worst > SAMPLING_TOLERANCE * dt:
        j = int(np.argmax(np.abs(steps - dt)))
        raise IrregularSampling(
            f"{source}: step {j} is {steps[j]:.6g} s, median is {dt:.6g} s "
            f"(tolerance {SAMPLING_TOLERANCE:.1%})")
    return dt


def write_csv(series: TimeSeries, path, columns: Optional[Iterable[str]] = None) -> None:
    names = list(columns) if columns is not None else series.names
    values = np.vstack([series.channel(n).values for n in names])
    t = series.times()
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["t", *names])
        for j in range(series.n):
            writer.writerow([repr(float(t[j])), *(repr(float(v)) for v in values[:, j])])


def hankel_stack(series: TimeSeries, s: int, role) -> np.ndarray:
    """Delay-embed all channels with ``role`` into a ``(c*s) x (n-s+1)`` matrix.

    Row block ``d`` holds every channel delayed by ``d`` samples, channel
    order preserved within the block.

    >>> ts = TimeSeries((Channel("x", Role.STATE, [1, 2, 3, 4]),), dt=1.0)
    >>> hankel_stack(ts, 2, Role.STATE)
    array([[1., 2., 3.],
           [2., 3., 4.]])
    """
    role = Role.parse(role)
    n = series.n
    if isinstance(s, bool) or not isinstance(s, (int, np.integer)) or not 1 <= s <= n - 1:
        raise InvalidStacking(f"stacking count s={s!r} must be an integer in [1, {n - 1}]")
    M = series.matrix(role)
    if M.shape[0] == 0:
        raise EmptyRole(f"no channel has role {role.value!r}")
    return _stack(M, int(s))


def _stack(M: np.ndarray, s: int) -> np.ndarray:
    c, n = M.shape
    # windows[i, d, j] = M[i, j + d]
    windows = sliding_window_view(M, n - s + 1, axis=1)
    return np.ascontiguousarray(windows.transpose(1, 0, 2).reshape(c * s, n - s + 1))


def build_pairs(series: TimeSeries, s: int) -> SnapshotMatrices:
    """Build ``(X1, X2, U1)`` from stacked state and input matrices."""
    H = hankel_stack(series, s, Role.STATE)
    cols = series.n - s
    if cols < 2:
        raise TooFewSnapshots(f"n - s = {cols}; at least 2 snapshot columns are required")
    inputs = series.names_with_role(Role.INPUT)
    U1 = hankel_stack(series, s, Role.INPUT)[:, :cols] if inputs else None
    states = series.names_with_role(Role.STATE)
    return SnapshotMatrices(X1=H[:, :cols], X2=H[:, 1:], U1=U1,
                            m=len(states), e=len(inputs), s=int(s), dt=series.dt,
                            state_names=tuple(states), input_names=tuple(inputs),
                            t0=series.t0)
