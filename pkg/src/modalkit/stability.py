"""Oscillation modes, integral contribution ranking and stability verdicts."""
from __future__ import annotations

import cmath
import enum
import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .dmd import ModalDecomposition
from .errors import DegenerateEigenvalue

DEFAULT_BAND = 1e-3
#: Modes whose IC is below this fraction of the largest do not vote on the verdict.
VERDICT_IC_FRACTION = 0.01
PAIR_RTOL = 1e-6
REAL_RTOL = 1e-12
SCHEMA_VERSION = 1


class Classification(str, enum.Enum):
    STABLE = "Stable"
    CRITICAL = "Critical"
    UNSTABLE = "Unstable"

    @property
    def severity(self) -> int:
        return {"Stable": 0, "Critical": 1, "Unstable": 2}[self.value]

    @property
    def exit_code(self) -> int:
        return 10 * self.severity


def classify(magnitude: float, band: float = DEFAULT_BAND) -> Classification:
    if magnitude > 1.0 + band:
        return Classification.UNSTABLE
    if magnitude >= 1.0 - band:
        return Classification.CRITICAL
    return Classification.STABLE


@dataclass(frozen=True)
class Mode:
    index: int
    eigenvalues: tuple
    continuous_sigma: float
    frequency_hz: float
    damping_ratio: float
    magnitude: float
    integral_contribution: float
    classification: Classification
    warnings: tuple = ()

    def to_dict(self) -> dict:
        return {
            "index": self.index,
            "eigenvalues": [{"re": float(z.real), "im": float(z.imag)} for z in self.eigenvalues],
            "sigma": self.continuous_sigma if math.isfinite(self.continuous_sigma) else None,
            "frequency_hz": self.frequency_hz,
            "damping_ratio": self.damping_ratio,
            "magnitude": self.magnitude,
            "integral_contribution": self.integral_contribution,
            "classification": self.classification.value,
        }


@dataclass(frozen=True)
class StabilityReport:
    modes: tuple
    dominant: int
    verdict: Classification
    metadata: dict = field(default_factory=dict)
    warnings: tuple = ()

    @property
    def dominant_mode(self) -> Mode:
        return self.modes[0]

    def to_dict(self) -> dict:
        meta = self.metadata
        return {
            "schema": SCHEMA_VERSION,
            "method": meta.get("method"),
            "dt": meta.get("dt"),
            "ranks": {"p": meta.get("p"), "r": meta.get("r")},
            "singular_values": [[float(v) for v in s] for s in meta.get("singular_values", ())],
            "modes": [m.to_dict() for m in self.modes],
            "dominant": self.dominant,
            "verdict": self.verdict.value,
            "warnings": list(self.warnings),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"


def integral_contribution(dec: ModalDecomposition, n: int = None) -> np.ndarray:
    """``dt * ||Phi_i||^2 * sum_{j=1..n} |lambda_i^j b_i|`` for each mode.

    ``n`` defaults to the number of snapshot columns used in the fit.
    """
    if n is None:
        n = dec.n_snapshots
    if n < 1:
        raise ValueError(f"snapshot count must be >= 1, got {n}")
    norms = np.sum(np.abs(dec.exact_modes) ** 2, axis=0)
    sums = _kernels.power_abs_sums(np.abs(dec.eigenvalues), n)
    return dec.dt * norms * np.abs(dec.amplitudes) * sums


def to_continuous(lam: complex, dt: float) -> tuple[float, float]:
    """Map a discrete eigenvalue to ``(sigma [1/s], frequency [Hz])`` via the principal log."""
    if lam == 0:
        raise DegenerateEigenvalue("the zero eigenvalue has no continuous-time counterpart")
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    s = cmath.log(complex(lam)) / dt
    return s.real, abs(s.imag) / (2.0 * math.pi)


def damping_ratio(sigma: float, omega: float) -> float:
    denom = math.hypot(sigma, omega)
    return 0.0 if denom == 0 else -sigma / denom


def _pair(eigenvalues):
    """Greedy conjugate pairing; returns index groups and unpaired complex indices."""
    used = set()
    groups, unpaired = [], []
    for i, lam in enumerate(eigenvalues):
        if i in used:
            continue
        used.add(i)
        if abs(lam.imag) <= REAL_RTOL * abs(lam):
            groups.append((i,))
            continue
        target = lam.conjugate()
        tol = PAIR_RTOL * (1.0 + abs(lam))
        best, best_gap = None, None
        for j, other in enumerate(eigenvalues):
            if j in used:
                continue
            gap = abs(other - target)
            if gap <= tol and (best_gap is None or gap < best_gap):
                best, best_gap = j, gap
        if best is None:
            groups.append((i,))
            unpaired.append(i)
        else:
            used.add(best)
            groups.append((i, best))
    return groups, unpaired


def pair_and_classify(dec: ModalDecomposition, ic=None, band: float = DEFAULT_BAND,
                      metadata: dict = None) -> StabilityReport:
    """Group eigenvalues into modes, rank by IC and issue a verdict.

    The verdict is the worst classification among modes whose IC is at least
    1% of the largest.  Zero eigenvalues become modes at 0 Hz with
    ``sigma = -inf`` and a warning.
    """
    lam = np.asarray(dec.eigenvalues, dtype=complex)
    if ic is None:
        ic = integral_contribution(dec)
    ic = np.asarray(ic, dtype=float)
    if ic.shape != lam.shape:
        raise ValueError(f"ic has shape {ic.shape}, eigenvalues have {lam.shape}")
    if band < 0:
        raise ValueError(f"band must be non-negative, got {band}")

    groups, unpaired = _pair(lam)
    report_warnings = []
    modes = []
    for group in groups:
        lead = lam[group[0]]
        if lead.imag < 0 and len(group) == 2:
            group = (group[1], group[0])
            lead = lam[group[0]]
        flags = []
        if group[0] in unpaired:
            flags.append("unpaired")
            report_warnings.append(f"eigenvalue {group[0]} has no conjugate partner")
        if lead == 0:
            sigma, freq, zeta = -math.inf, 0.0, 1.0
            flags.append("zero-eigenvalue")
        else:
            sigma, freq = to_continuous(lead, dec.dt)
            log_imag = abs(cmath.log(complex(lead)).imag)
            if abs(log_imag - math.pi) <= 1e-9:
                flags.append("nyquist-fold")
                report_warnings.append(f"eigenvalue {group[0]} sits at the Nyquist frequency")
            zeta = damping_ratio(sigma, 2.0 * math.pi * freq)
        magnitude = float(max(abs(lam[k]) for k in group))
        modes.append(Mode(
            index=int(group[0]),
            eigenvalues=tuple(complex(lam[k]) for k in group),
            continuous_sigma=float(sigma), frequency_hz=float(freq),
            damping_ratio=float(zeta), magnitude=magnitude,
            integral_contribution=float(sum(ic[k] for k in group)),
            classification=classify(magnitude, band), warnings=tuple(flags)))

    modes.sort(key=lambda m: (-m.integral_contribution, m.frequency_hz, m.index))
    top = modes[0].integral_contribution
    voting = [m for m in modes if m.integral_contribution >= VERDICT_IC_FRACTION * top]
    verdict = max((m.classification for m in voting), key=lambda c: c.severity)

    meta = {
        "method": dec.kind, "dt": dec.dt, "r": dec.ranks[0], "p": dec.ranks[1],
        "singular_values": dec.singular_values, "band": band,
    }
    meta.update(metadata or {})
    return StabilityReport(modes=tuple(modes), dominant=modes[0].index, verdict=verdict,
                           metadata=meta, warnings=tuple(report_warnings))


def analyze_stability(dec: ModalDecomposition, band: float = DEFAULT_BAND,
                      metadata: dict = None) -> StabilityReport:
    return pair_and_classify(dec, integral_contribution(dec), band=band, metadata=metadata)
