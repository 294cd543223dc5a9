"""Exact dynamic mode decomposition of unforced snapshot data."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import numerics
from .errors import ModalkitError, RankTooLarge, ShapeError, TooFewSnapshots
from .numerics import RankPolicy
from .snapshots import SnapshotMatrices


@dataclass(frozen=True)
class DmdcInternals:
    """Factors of the two DMDc SVDs; ``Up1``/``Up2`` split ``Up`` by state/input rows."""

    Up1: np.ndarray
    Up2: np.ndarray
    Sp: np.ndarray
    Vp: np.ndarray
    Ur: np.ndarray


@dataclass(frozen=True)
class ModalDecomposition:
    """Result of a DMD or DMDc fit.

    Attributes:
        kind: ``"dmd"`` or ``"dmdc"``.
        eigenvalues: Discrete-time eigenvalues of ``reduced_A``, length ``r``.
        exact_modes: ``rows(X1) x r`` complex mode matrix.
        amplitudes: Mode amplitudes fit to the first snapshot.
        reduced_A: ``r x r`` reduced dynamics.
        reduced_B: ``r x rows(U1)`` reduced input operator (DMDc only).
        basis_U: Projection basis, ``rows(X1) x r``.
        singular_values: Retained singular values, one array per SVD.
        ranks: ``(r, p)``; ``p`` is None for plain DMD.
        dt: Sampling interval in seconds.
        n_snapshots: Number of snapshot columns used in the fit.
    """

    kind: str
    eigenvalues: np.ndarray
    exact_modes: np.ndarray
    amplitudes: np.ndarray
    reduced_A: np.ndarray
    basis_U: np.ndarray
    singular_values: tuple
    ranks: tuple
    dt: float
    reduced_B: Optional[np.ndarray] = None
    n_snapshots: int = 0
    discarded_energy: tuple = ()
    spectra: tuple = field(default=(), repr=False)
    internals: Optional[DmdcInternals] = field(default=None, repr=False)

    @property
    def r(self) -> int:
        return len(self.eigenvalues)


def _check_snapshots(snap: SnapshotMatrices):
    if snap.cols < 2:
        raise TooFewSnapshots(f"need at least 2 snapshot columns, got {snap.cols}")


def fit_dmd(snap: SnapshotMatrices, policy: RankPolicy = numerics.DEFAULT_POLICY) -> ModalDecomposition:
    """Fit exact DMD to ``X2 ~= A X1``, ignoring any inputs.

    The reduced operator is ``U.T @ X2 @ V @ inv(S)``, the exact modes are
    ``X2 @ V @ inv(S) @ W`` and the amplitudes are the least-squares fit of
    the modes to the first column of ``X1``.
    """
    _check_snapshots(snap)
    if isinstance(policy, numerics.Fixed) and policy.r > snap.cols:
        raise RankTooLarge(f"rank {policy.r} exceeds snapshot count {snap.cols}")
    svd = numerics.truncated_svd(snap.X1, policy)
    X2VSinv = (snap.X2 @ svd.V) * svd.inverse_singular_values()
    A_tilde = svd.U.T @ X2VSinv
    pairs = numerics.eig(A_tilde)
    modes = X2VSinv @ pairs.eigenvectors
    b = _lstsq(modes, snap.X1[:, 0])[0]
    return ModalDecomposition(
        kind="dmd", eigenvalues=pairs.eigenvalues, exact_modes=modes, amplitudes=b,
        reduced_A=A_tilde, basis_U=svd.U, singular_values=(svd.S,),
        ranks=(svd.rank, None), dt=snap.dt, n_snapshots=snap.cols,
        discarded_energy=(svd.discarded_energy,), spectra=(svd.full_spectrum,))


def _lstsq(Phi, x):
    b, *_ = np.linalg.lstsq(Phi, np.asarray(x, dtype=complex), rcond=None)
    residual = float(np.linalg.norm(Phi @ b - x))
    return b, residual


def mode_amplitudes(dec: ModalDecomposition, x1, full_output: bool = False):
    """Minimum-norm least-squares amplitudes ``b`` with ``exact_modes @ b ~= x1``.

    With ``full_output=True`` returns ``(b, residual_norm)``.
    """
    x1 = np.asarray(x1, dtype=float).ravel()
    if x1.shape[0] != dec.exact_modes.shape[0]:
        raise ShapeError(f"x1 has length {x1.shape[0]}, modes have {dec.exact_modes.shape[0]} rows")
    b, residual = _lstsq(dec.exact_modes, x1)
    return (b, residual) if full_output else b


def _modal_series(dec, x1, steps):
    if dec.kind != "dmd":
        raise ModalkitError(f"reconstruct expects a DMD decomposition, got {dec.kind!r}")
    if steps < 0:
        raise ShapeError(f"steps must be non-negative, got {steps}")
    b = mode_amplitudes(dec, x1)
    powers = dec.eigenvalues[:, None] ** np.arange(steps)[None, :]
    return dec.exact_modes @ (b[:, None] * powers)


def reconstruct(dec: ModalDecomposition, x1, steps: int) -> np.ndarray:
    """Columns ``Re(Phi @ Lambda**j @ b)`` for ``j = 0 .. steps-1``."""
    return _modal_series(dec, x1, steps).real


def imaginary_residue(dec: ModalDecomposition, x1, steps: int) -> float:
    """Norm of the discarded imaginary part relative to the real reconstruction."""
    Z = _modal_series(dec, x1, steps)
    scale = np.linalg.norm(Z.real)
    return float(np.linalg.norm(Z.imag) / scale) if scale > 0 else 0.0


def relative_error(reference: np.ndarray, approx: np.ndarray) -> float:
    ref = np.linalg.norm(reference)
    diff = np.linalg.norm(np.asarray(reference) - np.asarray(approx))
    return float(diff / ref) if ref > 0 else float(diff)
