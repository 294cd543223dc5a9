"""End-to-end pipeline: time series -> snapshots -> fit -> stability report."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import numerics
from .dmd import ModalDecomposition, fit_dmd, reconstruct, relative_error
from .dmdc import fit_dmdc, reconstruct_forced
from .errors import ConfigError
from .numerics import RankPolicy
from .snapshots import Role, SnapshotMatrices, TimeSeries, build_pairs, hankel_stack
from .stability import DEFAULT_BAND, StabilityReport, analyze_stability


@dataclass(frozen=True)
class AnalysisConfig:
    """What to fit and how.

    ``state_channels`` empty means every channel not listed as an input.
    """

    method: str = "dmdc"
    state_channels: tuple = ()
    input_channels: tuple = ()
    stack_s: int = 1
    rank_policy_p: RankPolicy = numerics.DEFAULT_POLICY
    rank_policy_r: Optional[RankPolicy] = None
    critical_band: float = DEFAULT_BAND
    normalize: str = "none"

    def __post_init__(self):
        object.__setattr__(self, "state_channels", tuple(self.state_channels))
        object.__setattr__(self, "input_channels", tuple(self.input_channels))
        if self.method not in ("dmd", "dmdc"):
            raise ConfigError(f"--method must be 'dmd' or 'dmdc', got {self.method!r}")
        if self.method == "dmdc" and not self.input_channels:
            raise ConfigError("--method dmdc requires --inputs naming at least one input channel")
        if self.method == "dmd" and self.input_channels:
            raise ConfigError("--method dmd takes no --inputs; list every channel under --states")
        overlap = set(self.state_channels) & set(self.input_channels)
        if overlap:
            raise ConfigError(f"channels {sorted(overlap)} given as both --states and --inputs")
        if self.normalize not in ("none", "zscore"):
            raise ConfigError(f"--normalize must be 'none' or 'zscore', got {self.normalize!r}")
        if isinstance(self.stack_s, bool) or not isinstance(self.stack_s, int) or self.stack_s < 1:
            raise ConfigError(f"--stack must be a positive integer, got {self.stack_s!r}")
        if not self.critical_band >= 0:
            raise ConfigError(f"--band must be non-negative, got {self.critical_band}")

    def role_map(self, available) -> dict:
        inputs = set(self.input_channels)
        states = self.state_channels or tuple(c for c in available if c not in inputs)
        roles = {name: Role.STATE for name in states}
        roles.update({name: Role.INPUT for name in self.input_channels})
        return roles


@dataclass(frozen=True)
class AnalysisResult:
    report: StabilityReport
    decomposition: ModalDecomposition
    snapshots: SnapshotMatrices
    series: TimeSeries
    reconstruction: np.ndarray
    reconstruction_error: float
    warnings: tuple = field(default=())


def zscore(series: TimeSeries):
    """Per-channel mean removal and unit variance; zero-variance channels are skipped.

    Returns ``(normalized_series, skipped_channel_names)``.
    """
    values, skipped = {}, []
    for c in series.channels:
        std = float(np.std(c.values))
        if std == 0.0:
            skipped.append(c.name)
            continue
        values[c.name] = (c.values - c.values.mean()) / std
    return series.replace_values(values), skipped


def fit(snap: SnapshotMatrices, config: AnalysisConfig) -> ModalDecomposition:
    if config.method == "dmd":
        return fit_dmd(snap, config.rank_policy_p)
    return fit_dmdc(snap, config.rank_policy_p, config.rank_policy_r)


def unstack(stacked: np.ndarray, m: int, n: int) -> np.ndarray:
    """Recover an ``m x n`` channel record from delay-major stacked columns.

    Column ``j`` of the stacked matrix covers samples ``j .. j+s-1``; the
    first block row gives samples ``0 .. cols-1`` and the last column fills in
    the remaining ``s-1`` samples.
    """
    s = stacked.shape[0] // m
    cols = stacked.shape[1]
    out = np.empty((m, n))
    out[:, :cols] = stacked[:m]
    for d in range(1, s):
        j = cols - 1 + d
        if j < n:
            out[:, j] = stacked[d * m:(d + 1) * m, cols - 1]
    return out


def reconstruct_channels(dec: ModalDecomposition, snap: SnapshotMatrices,
                         series: TimeSeries) -> np.ndarray:
    """Reconstructed state channels aligned with every sample of ``series``."""
    steps = series.n - snap.s + 1
    x1 = snap.X1[:, 0]
    if dec.kind == "dmd":
        stacked = reconstruct(dec, x1, steps)
    else:
        stacked = reconstruct_forced(dec, x1, hankel_stack(series, snap.s, Role.INPUT))
    return unstack(stacked, snap.m, series.n)


def run_analysis(series: TimeSeries, config: AnalysisConfig) -> AnalysisResult:
    notes = []
    series = series.with_roles(config.role_map(series.names))
    if config.normalize == "zscore":
        series, skipped = zscore(series)
        notes += [f"channel {name!r} has zero variance; normalization skipped" for name in skipped]
    snap = build_pairs(series, config.stack_s)
    dec = fit(snap, config)
    recon = reconstruct_channels(dec, snap, series)
    error = relative_error(series.matrix(Role.STATE), recon)
    report = analyze_stability(dec, band=config.critical_band, metadata={
        "state_channels": snap.state_names, "input_channels": snap.input_names,
        "stack": snap.s, "reconstruction_error": error,
    })
    if notes:
        report = StabilityReport(report.modes, report.dominant, report.verdict,
                                 report.metadata, tuple(notes) + report.warnings)
    return AnalysisResult(report=report, decomposition=dec, snapshots=snap, series=series,
                          reconstruction=recon, reconstruction_error=error,
                          warnings=tuple(notes))
