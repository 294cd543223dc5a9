"""Ground-truth data generators.

The averaged single-phase converter model::

    d/dt [i_n ]   [-R_n/L   -d/L      ] [i_n ]   [1/L]
         [u_dc] = [ d/C_d   -1/(R_d C_d)] [u_dc] + [ 0 ] u_n,     L = L_n + L_g

plus generic LTI systems, planted damped sinusoids and measurement noise.
PWM switching is not simulated; the duty cycle enters as its average.
"""
from __future__ import annotations

import math
import os
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np
import scipy.linalg

from . import _kernels
from .numerics import sort_eigenvalues
from .errors import AliasedMode, DegenerateData, SimulationDiverged
from .errors import ConfigError as _ConfigError
from .snapshots import Channel, Role, TimeSeries

DIVERGENCE_LIMIT = 1e12
DEFAULT_SEED = 0

#: Controller gains of the reference experiment.  Documentation only: the
#: analysis treats the controller as unknown.
CONTROLLER_GAINS = {
    "K_BPF": 0.5, "K_pPLL": 0.1, "K_iPLL": 5.0,
    "K_pVC": 0.09, "K_iVC": 13.0, "K_pCC": 0.01,
}
#: Remaining nameplate values of the reference experiment, for reference.
NAMEPLATE = {"u_g_rms": 110.0, "C_n": 10e-6, "u_dc": 170.0, "f_s": 10e3}


def ConfigError(msg):
    return _ConfigError(msg, module="simulator")


def default_seed() -> int:
    """Seed from ``MODALKIT_SEED`` if set, else :data:`DEFAULT_SEED`."""
    value = os.environ.get("MODALKIT_SEED")
    if value is None or value == "":
        return DEFAULT_SEED
    try:
        return int(value)
    except ValueError:
        raise ConfigError(f"MODALKIT_SEED must be an integer, got {value!r}") from None


@dataclass(frozen=True)
class Constant:
    d: float

    def __post_init__(self):
        if not -1.0 <= self.d <= 1.0:
            raise ConfigError(f"constant duty {self.d} outside [-1, 1]")

    def at(self, t):
        return np.full_like(np.asarray(t, dtype=float), self.d)


@dataclass(frozen=True)
class SineModulated:
    mean: float
    amplitude: float
    frequency: float

    def __post_init__(self):
        if abs(self.mean) + abs(self.amplitude) > 1.0:
            raise ConfigError(f"|mean| + |amplitude| = {abs(self.mean) + abs(self.amplitude)} exceeds 1")

    def at(self, t):
        return self.mean + self.amplitude * np.sin(2 * np.pi * self.frequency * np.asarray(t, dtype=float))


DutyPolicy = Union[Constant, SineModulated]


@dataclass(frozen=True)
class Sinusoid:
    amplitude: float = 110.0 * math.sqrt(2.0)
    frequency: float = 50.0
    phase: float = 0.0

    def at(self, t):
        return self.amplitude * np.sin(2 * np.pi * self.frequency * np.asarray(t, dtype=float) + self.phase)


@dataclass(frozen=True)
class ConverterParams:
    """Circuit constants; defaults are the reference experiment's values.

    ``R_n`` is not given by the reference and defaults to 0.1 ohm.
    """

    R_n: float = 0.1
    L_n: float = 4e-3
    C_d: float = 800e-6
    R_d: float = 460.0
    L_g: float = 8e-3
    duty: DutyPolicy = Constant(0.8)
    u_n: Sinusoid = Sinusoid()

    def __post_init__(self):
        for name in ("L_n", "C_d", "R_d"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be positive, got {getattr(self, name)}")
        for name in ("R_n", "L_g"):
            if not getattr(self, name) >= 0:
                raise ConfigError(f"{name} must be non-negative, got {getattr(self, name)}")

    @property
    def L(self) -> float:
        return self.L_n + self.L_g


@dataclass(frozen=True)
class LtiSystem:
    A: np.ndarray
    B: np.ndarray
    x0: np.ndarray
    dt: float
    state_names: tuple = ()
    input_names: tuple = ()

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A, dtype=float))
        k = A.shape[0]
        B = np.asarray(self.B, dtype=float).reshape(k, -1) if np.size(self.B) else np.zeros((k, 0))
        x0 = np.asarray(self.x0, dtype=float).reshape(k)
        if A.shape != (k, k):
            raise ConfigError(f"A must be square, got {A.shape}")
        if not (np.all(np.isfinite(A)) and np.all(np.isfinite(B)) and np.all(np.isfinite(x0))):
            raise ConfigError("system matrices must be finite")
        if not self.dt > 0:
            raise ConfigError(f"dt must be positive, got {self.dt}")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "x0", x0)
        if not self.state_names:
            object.__setattr__(self, "state_names", tuple(f"x{i}" for i in range(k)))
        if not self.input_names:
            object.__setattr__(self, "input_names", tuple(f"u{i}" for i in range(B.shape[1])))

    @property
    def k(self) -> int:
        return self.A.shape[0]

    @property
    def e(self) -> int:
        return self.B.shape[1]


def converter_matrices(params: ConverterParams, d: float):
    """Continuous-time ``(A, B)`` of the averaged converter at duty ``d``."""
    L = params.L
    A = np.array([[-params.R_n / L, -d / L],
                  [d / params.C_d, -1.0 / (params.R_d * params.C_d)]])
    B = np.array([[1.0 / L], [0.0]])
    return A, B


def zoh(A: np.ndarray, B: np.ndarray, dt: float):
    """Exact zero-order-hold discretization via one augmented matrix exponential."""
    k, e = B.shape
    M = np.zeros((k + e, k + e))
    M[:k, :k] = A
    M[:k, k:] = B
    E = scipy.linalg.expm(M * dt)
    return E[:k, :k], E[:k, k:]


def _finish(system: LtiSystem, X: np.ndarray, inputs: np.ndarray) -> TimeSeries:
    bad = ~np.isfinite(X) | (np.abs(X) > DIVERGENCE_LIMIT)
    if np.any(bad):
        j = int(np.argmax(bad.any(axis=0)))
        raise SimulationDiverged(f"state exceeded {DIVERGENCE_LIMIT:g} at sample {j}")
    chans = [Channel(name, Role.STATE, X[i]) for i, name in enumerate(system.state_names)]
    chans += [Channel(name, Role.INPUT, inputs[i]) for i, name in enumerate(system.input_names)]
    return TimeSeries(tuple(chans), dt=system.dt)


def simulate(system: LtiSystem, inputs, method: str = "zoh", substeps: int = 16) -> TimeSeries:
    """Simulate ``system`` for ``inputs.shape[1]`` samples.

    Args:
        system: Continuous-time system sampled every ``system.dt``.
        inputs: ``e x n`` input samples, held constant over each interval.
        method: ``"zoh"`` (exact discretization) or ``"rk4"``.
        substeps: RK4 steps per sample interval.

    Returns:
        TimeSeries with state channels followed by input channels.
    """
    U = np.asarray(inputs, dtype=float)
    if U.ndim == 1:
        U = U.reshape(system.e, -1)
    if U.ndim != 2 or U.shape[0] != system.e:
        raise ConfigError(f"inputs must be {system.e} x n, got shape {U.shape}")
    if U.shape[1] < 2:
        raise ConfigError(f"need at least 2 samples, got {U.shape[1]}")
    method = method.lower()
    if method not in ("zoh", "rk4"):
        raise ConfigError(f"unknown simulation method {method!r}")
    # overflow is reported by _finish as SimulationDiverged
    with np.errstate(over="ignore", invalid="ignore"):
        if method == "zoh":
            F, G = zoh(system.A, system.B, system.dt)
            X = _kernels.propagate(F, G, system.x0, U)
        else:
            X = _kernels.rk4(system.A, np.zeros_like(system.A), system.B, system.x0, U,
                             system.dt, substeps)
    return _finish(system, X, U)


def analytic_discrete_eigs(system: LtiSystem) -> np.ndarray:
    """``exp(eig(A) * dt)``: exact discrete eigenvalues under ZOH sampling."""
    return sort_eigenvalues(np.exp(np.linalg.eigvals(system.A) * system.dt))


def converter_system(params: ConverterParams, dt: float, x0=(0.0, 0.0),
                     d: Optional[float] = None) -> LtiSystem:
    """LTI converter at a fixed duty (the duty policy's mean when ``d`` is None)."""
    if d is None:
        d = params.duty.d if isinstance(params.duty, Constant) else params.duty.mean
    A, B = converter_matrices(params, d)
    return LtiSystem(A, B, np.asarray(x0, dtype=float), dt,
                     state_names=("i_n", "u_dc"), input_names=("u_n",))


def simulate_converter(params: ConverterParams, dt: float, n: int, x0=(0.0, 0.0),
                       method: str = "zoh", input_node: str = "source",
                       substeps: int = 16) -> TimeSeries:
    """Simulate the averaged converter driven by its sinusoidal source.

    ``input_node`` selects what the ``u_n`` channel records: ``"source"`` is
    the driving voltage itself; ``"pcc"`` is the voltage behind the grid
    inductance, ``u_src - L_g di/dt``.  A sine-modulated duty makes the
    model time-varying and requires ``method="rk4"``.
    """
    t = dt * np.arange(n)
    u_src = params.u_n.at(t)[None, :]
    system = converter_system(params, dt, x0)
    if isinstance(params.duty, SineModulated):
        if method != "rk4":
            raise ConfigError("a sine-modulated duty needs method='rk4'")
        A0, _ = converter_matrices(params, 0.0)
        A1 = converter_matrices(params, 1.0)[0] - A0
        X = _kernels.rk4(A0, A1, system.B, system.x0, u_src, dt, substeps,
                         params.duty.mean, params.duty.amplitude, params.duty.frequency, 0.0)
        series = _finish(system, X, u_src)
    else:
        series = simulate(system, u_src, method=method, substeps=substeps)
    if input_node == "source":
        return series
    if input_node != "pcc":
        raise ConfigError(f"unknown input node {input_node!r}; expected 'source' or 'pcc'")
    i_n = series.channel("i_n").values
    u_dc = series.channel("u_dc").values
    duty = params.duty.at(t)
    di = (u_src[0] - params.R_n * i_n - duty * u_dc) / params.L
    return series.replace_values({"u_n": u_src[0] - params.L_g * di})


@dataclass(frozen=True)
class PlantedMode:
    frequency: float
    sigma: float = 0.0
    amplitude: float = 1.0
    phase: float = 0.0


def _as_modes(spec) -> list[PlantedMode]:
    return [m if isinstance(m, PlantedMode) else PlantedMode(*m) for m in spec]


def _check_nyquist(modes, dt):
    nyquist = 0.5 / dt
    for m in modes:
        if not 0 <= m.frequency < nyquist:
            raise AliasedMode(f"mode at {m.frequency} Hz is not below Nyquist ({nyquist} Hz)")


def mixing_weights(n_modes: int, channels: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    return rng.uniform(0.5, 1.5, size=(channels, n_modes))


def plant_modes(spec: Sequence, dt: float, n: int, channels: int = 1,
                seed: Optional[int] = None) -> TimeSeries:
    """Channels that are fixed random mixtures of ``amp e^{sigma t} cos(2 pi f t + phi)``.

    Mixture weights are drawn uniformly from [0.5, 1.5] with ``seed``.
    """
    modes = _as_modes(spec)
    _check_nyquist(modes, dt)
    if n < 2 or channels < 1:
        raise ConfigError(f"need n >= 2 and channels >= 1, got n={n}, channels={channels}")
    seed = default_seed() if seed is None else seed
    t = dt * np.arange(n)
    signals = np.array([m.amplitude * np.exp(m.sigma * t)
                        * np.cos(2 * np.pi * m.frequency * t + m.phase) for m in modes])
    if modes:
        values = mixing_weights(len(modes), channels, seed) @ signals
    else:
        values = np.zeros((channels, n))
    return TimeSeries(tuple(Channel(f"y{i}", Role.STATE, values[i]) for i in range(channels)), dt=dt)


def planted_system(spec: Sequence, dt: float, n_inputs: int = 1,
                   seed: Optional[int] = None) -> LtiSystem:
    """Forced LTI system whose continuous eigenvalues are the planted modes.

    Each mode contributes a 2x2 block ``[[sigma, -w], [w, sigma]]`` (a 1x1
    block ``sigma`` at 0 Hz) with initial state ``amp * (cos phi, sin phi)``.
    The state is rotated by a random orthogonal matrix so every channel mixes
    all modes, and ``B`` is a random normal matrix.
    """
    modes = _as_modes(spec)
    _check_nyquist(modes, dt)
    if not modes:
        raise ConfigError("planted_system needs at least one mode")
    seed = default_seed() if seed is None else seed
    rng = np.random.default_rng(seed)
    blocks, x0 = [], []
    for m in modes:
        if m.frequency == 0:
            blocks.append(np.array([[m.sigma]]))
            x0.append(m.amplitude * math.cos(m.phase))
        else:
            w = 2 * math.pi * m.frequency
            blocks.append(np.array([[m.sigma, -w], [w, m.sigma]]))
            x0 += [m.amplitude * math.cos(m.phase), m.amplitude * math.sin(m.phase)]
    A = scipy.linalg.block_diag(*blocks)
    k = A.shape[0]
    Q, R = np.linalg.qr(rng.standard_normal((k, k)))
    Q = Q * np.sign(np.diag(R))
    B = rng.standard_normal((k, n_inputs))
    return LtiSystem(Q @ A @ Q.T, B, Q @ np.array(x0), dt,
                     state_names=tuple(f"x{i}" for i in range(k)),
                     input_names=tuple(f"u{i}" for i in range(n_inputs)))


def add_noise(series: TimeSeries, snr_db: Optional[float], seed: Optional[int] = None) -> TimeSeries:
    """Add white Gaussian noise to every channel at ``snr_db`` decibels.

    ``snr_db`` of None or +inf returns ``series`` unchanged.  Channels with
    zero power are left untouched.
    """
    if snr_db is None or snr_db == math.inf:
        return series
    if not math.isfinite(snr_db):
        raise ConfigError(f"snr_db must be finite or +inf, got {snr_db}")
    M = series.matrix()
    if not np.any(M):
        raise DegenerateData("cannot set a signal-to-noise ratio on an all-zero series")
    seed = default_seed() if seed is None else seed
    rng = np.random.default_rng(seed)
    noisy = {}
    for c in series.channels:
        power = float(np.mean(c.values ** 2))
        noise = rng.standard_normal(series.n)
        if power == 0:
            continue
        # scale the realized noise so the empirical SNR hits the target exactly
        noise *= math.sqrt(power / 10 ** (snr_db / 10) / np.mean(noise ** 2))
        noisy[c.name] = c.values + noise
    return series.replace_values(noisy)
