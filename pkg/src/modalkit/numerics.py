"""Dense linear-algebra kernels shared by the DMD and DMDc fits."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np
import scipy.linalg
from scipy.optimize import linear_sum_assignment

from .errors import DegenerateMatrix, MalformedData, NumericalFailure, RankTooLarge

#: Singular values below this fraction of the largest are treated as zero
#: when inverting.
SINGULAR_FLOOR = 1e-12


@dataclass(frozen=True)
class Fixed:
    r: int

    def __post_init__(self):
        if isinstance(self.r, bool) or not isinstance(self.r, (int, np.integer)) or self.r < 1:
            raise ValueError(f"fixed rank must be a positive integer, got {self.r!r}")

    def __str__(self):
        return f"fixed:{self.r}"


@dataclass(frozen=True)
class Energy:
    threshold: float

    def __post_init__(self):
        if not 0.0 < self.threshold <= 1.0:
            raise ValueError(f"energy threshold must lie in (0, 1], got {self.threshold!r}")

    def __str__(self):
        return f"energy:{self.threshold!r}"


RankPolicy = Union[Fixed, Energy]

DEFAULT_POLICY = Energy(1.0 - 1e-8)


def parse_rank_policy(text: str) -> RankPolicy:
    """Parse ``fixed:<r>`` or ``energy:<threshold>``."""
    kind, _, arg = text.strip().partition(":")
    try:
        if kind == "fixed":
            return Fixed(int(arg))
        if kind == "energy":
            return Energy(float(arg))
    except ValueError as exc:
        raise ValueError(f"bad rank policy {text!r}: {exc}") from None
    raise ValueError(f"bad rank policy {text!r}; expected fixed:<r> or energy:<threshold>")


@dataclass(frozen=True)
class TruncatedSvd:
    """Leading singular triplets ``M ~= U @ diag(S) @ V.T``.

    ``V`` is stored column-wise (``cols x r``), not transposed.
    """

    U: np.ndarray
    S: np.ndarray
    V: np.ndarray
    discarded_energy: float
    full_spectrum: np.ndarray

    @property
    def rank(self) -> int:
        return len(self.S)

    def inverse_singular_values(self) -> np.ndarray:
        return _safe_reciprocal(self.S)


@dataclass(frozen=True)
class EigenPairs:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


def _check_finite(M, what="matrix"):
    if not np.all(np.isfinite(M)):
        raise MalformedData(f"{what} contains NaN or infinite entries")


def select_rank(S: np.ndarray, policy: RankPolicy) -> int:
    if isinstance(policy, Fixed):
        if policy.r > len(S):
            raise RankTooLarge(f"rank {policy.r} exceeds min(rows, cols) = {len(S)}")
        return int(policy.r)
    # scale by the largest value so tiny matrices do not underflow
    energy = (S.astype(float) / S[0]) ** 2
    cumulative = np.cumsum(energy) / energy.sum()
    r = int(np.searchsorted(cumulative, policy.threshold * (1.0 - 1e-15))) + 1
    return min(r, len(S))


def truncated_svd(M: np.ndarray, policy: RankPolicy) -> TruncatedSvd:
    """Thin SVD of ``M`` truncated according to ``policy``.

    Raises:
        DegenerateMatrix: ``M`` is empty or identically zero.
        RankTooLarge: a fixed rank exceeds ``min(M.shape)``.
    """
    M = np.asarray(M, dtype=np.float64)
    if M.ndim != 2 or M.size == 0:
        raise DegenerateMatrix(f"expected a non-empty 2-d matrix, got shape {M.shape}")
    _check_finite(M)
    if not np.any(M):
        raise DegenerateMatrix("cannot decompose an all-zero matrix")
    if isinstance(policy, Fixed) and policy.r > min(M.shape):
        raise RankTooLarge(f"rank {policy.r} exceeds min{M.shape} = {min(M.shape)}")
    try:
        U, S, Vt = scipy.linalg.svd(M, full_matrices=False, lapack_driver="gesdd")
    except np.linalg.LinAlgError:
        try:
            U, S, Vt = scipy.linalg.svd(M, full_matrices=False, lapack_driver="gesvd")
        except np.linalg.LinAlgError as exc:
            raise NumericalFailure(f"SVD did not converge: {exc}") from None
    r = select_rank(S, policy)
    scaled = S / S[0]
    discarded = float(np.sum(scaled[r:] ** 2) / np.sum(scaled ** 2))
    return TruncatedSvd(U=U[:, :r].copy(), S=S[:r].copy(), V=Vt[:r].T.copy(),
                        discarded_energy=discarded, full_spectrum=S)


def _safe_reciprocal(S: np.ndarray) -> np.ndarray:
    S = np.asarray(S, dtype=np.float64)
    out = np.zeros_like(S)
    if S.size == 0:
        return out
    keep = S > SINGULAR_FLOOR * S.max()
    out[keep] = 1.0 / S[keep]
    return out


def pinv_from_svd(svd: TruncatedSvd) -> np.ndarray:
    """``V @ diag(1/S) @ U.T`` with tiny singular values dropped."""
    return (svd.V * svd.inverse_singular_values()) @ svd.U.T


def _ordering(values: np.ndarray, rtol: float = 1e-12) -> np.ndarray:
    """Indices sorting by descending magnitude, ties by descending imaginary part."""
    mags = np.abs(values)
    order = list(np.argsort(-mags, kind="stable"))
    out = []
    i = 0
    while i < len(order):
        j = i + 1
        scale = max(1.0, mags[order[i]])
        while j < len(order) and mags[order[i]] - mags[order[j]] <= rtol * scale:
            j += 1
        group = sorted(order[i:j], key=lambda k: (-values[k].imag, -values[k].real, k))
        out.extend(group)
        i = j
    return np.array(out, dtype=int)


def _normalize_columns(W: np.ndarray) -> np.ndarray:
    W = np.array(W, dtype=complex)
    for k in range(W.shape[1]):
        col = W[:, k]
        norm = np.linalg.norm(col)
        if norm == 0:
            continue
        col = col / norm
        big = np.flatnonzero(np.abs(col) > 1e-10 * np.abs(col).max())
        lead = col[big[0]]
        col = col * (abs(lead) / lead)
        col[big[0]] = abs(lead)
        W[:, k] = col
    return W


def eig(A: np.ndarray) -> EigenPairs:
    """Eigendecomposition with deterministic ordering and eigenvector phase.

    Eigenvalues are sorted by descending modulus (ties: descending imaginary
    part); each eigenvector has unit norm and its first non-negligible entry
    is real and positive.
    """
    A = np.asarray(A)
    if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape[0] == 0:
        raise MalformedData(f"eig needs a non-empty square matrix, got shape {A.shape}")
    _check_finite(A)
    try:
        lam, W = scipy.linalg.eig(A)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise NumericalFailure(f"eigensolver failed: {exc}") from None
    if not np.all(np.isfinite(lam)):
        raise NumericalFailure("eigensolver returned non-finite eigenvalues")
    lam = lam.astype(complex)
    order = _ordering(lam)
    return EigenPairs(eigenvalues=lam[order], eigenvectors=_normalize_columns(W[:, order]))


def sort_eigenvalues(values) -> np.ndarray:
    values = np.asarray(values, dtype=complex)
    return values[_ordering(values)]


def eigenvalue_distance(a, b) -> float:
    """Largest pairwise gap after optimally matching two eigenvalue sets.

    Sets of unequal size are matched on the smaller one.
    """
    a = np.asarray(a, dtype=complex).ravel()
    b = np.asarray(b, dtype=complex).ravel()
    if a.size == 0 or b.size == 0:
        return float("inf")
    cost = np.abs(a[:, None] - b[None, :])
    rows, cols = linear_sum_assignment(cost)
    return float(cost[rows, cols].max())
