"""Dynamic mode decomposition with control.

Fits ``X2 ~= A X1 + B U1`` by a first SVD of the stacked matrix
``[X1; U1]`` (rank ``p``) and a second SVD of ``X2`` (rank ``r <= p``) whose
left singular vectors span the reduced state space.
"""
from __future__ import annotations

import numpy as np

from . import _kernels, numerics
from .dmd import DmdcInternals, ModalDecomposition, _check_snapshots, _lstsq
from .errors import MissingInputs, ModalkitError, RankOrderViolation, ShapeError
from .numerics import RankPolicy
from .snapshots import SnapshotMatrices


def fit_dmdc(snap: SnapshotMatrices, policy_p: RankPolicy = numerics.DEFAULT_POLICY,
             policy_r: RankPolicy = None) -> ModalDecomposition:
    """Fit reduced state and input operators from ``(X1, X2, U1)``.

    ``policy_r`` defaults to ``policy_p``.  Two fixed ranks with ``r > p``
    raise :class:`RankOrderViolation`; otherwise ``r`` is clamped to ``p``.
    """
    if snap.U1 is None or snap.U1.shape[0] == 0:
        raise MissingInputs("DMDc needs input channels (U1 is absent)")
    _check_snapshots(snap)
    if policy_r is None:
        policy_r = policy_p
    if (isinstance(policy_p, numerics.Fixed) and isinstance(policy_r, numerics.Fixed)
            and policy_r.r > policy_p.r):
        raise RankOrderViolation(f"r = {policy_r.r} exceeds p = {policy_p.r}")

    nx = snap.X1.shape[0]
    omega = np.vstack([snap.X1, snap.U1])
    svd_p = numerics.truncated_svd(omega, policy_p)
    svd_r = numerics.truncated_svd(snap.X2, policy_r)
    r = min(svd_r.rank, svd_p.rank)
    Ur = svd_r.U[:, :r]
    Up1, Up2 = svd_p.U[:nx], svd_p.U[nx:]

    K = (snap.X2 @ svd_p.V) * svd_p.inverse_singular_values()
    UrK = Ur.T @ K
    A_bar = UrK @ (Up1.T @ Ur)
    B_bar = UrK @ Up2.T
    pairs = numerics.eig(A_bar)
    modes = K @ (Up1.T @ Ur) @ pairs.eigenvectors
    x1 = snap.X1[:, 0]
    b = _lstsq(modes, Ur @ (Ur.T @ x1))[0]
    return ModalDecomposition(
        kind="dmdc", eigenvalues=pairs.eigenvalues, exact_modes=modes, amplitudes=b,
        reduced_A=A_bar, reduced_B=B_bar, basis_U=Ur,
        singular_values=(svd_p.S, svd_r.S[:r]), ranks=(r, svd_p.rank), dt=snap.dt,
        n_snapshots=snap.cols,
        discarded_energy=(svd_p.discarded_energy, svd_r.discarded_energy),
        spectra=(svd_p.full_spectrum, svd_r.full_spectrum),
        internals=DmdcInternals(Up1=Up1, Up2=Up2, Sp=svd_p.S, Vp=svd_p.V, Ur=Ur))


def lifted_operators(dec: ModalDecomposition):
    """Full-space ``(Ur Abar Ur^T, Ur Bbar)``."""
    U = dec.basis_U
    return U @ dec.reduced_A @ U.T, U @ dec.reduced_B


def reconstruct_forced(dec: ModalDecomposition, x1, inputs) -> np.ndarray:
    """Propagate ``z[j+1] = Abar z[j] + Bbar u[j]`` from ``z[0] = Ur^T x1``.

    Returns the lifted states ``Ur z[j]``, one column per input column.
    """
    if dec.kind != "dmdc":
        raise ModalkitError(f"reconstruct_forced expects a DMDc decomposition, got {dec.kind!r}")
    x1 = np.asarray(x1, dtype=float).ravel()
    U = np.asarray(inputs, dtype=float)
    if U.ndim == 1:
        U = U[None, :]
    if x1.shape[0] != dec.basis_U.shape[0]:
        raise ShapeError(f"x1 has length {x1.shape[0]}, basis has {dec.basis_U.shape[0]} rows")
    if U.shape[0] != dec.reduced_B.shape[1]:
        raise ShapeError(f"inputs have {U.shape[0]} rows, expected {dec.reduced_B.shape[1]}")
    z1 = dec.basis_U.T @ x1
    Z = _kernels.propagate(dec.reduced_A, dec.reduced_B, z1, U)
    return dec.basis_U @ Z
