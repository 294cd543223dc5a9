import numpy as np
import pytest

from modalkit import _kernels

_ACCEPTANCE = []

BACKENDS = ["python"] + (["cython"] if _kernels.BACKEND == "cython" else [])


@pytest.fixture(params=BACKENDS)
def backend(request):
    return request.param


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def criterion():
    """Record one acceptance line; printed in the terminal summary."""

    def record(label, passed, detail=""):
        _ACCEPTANCE.append((label, bool(passed), detail))
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for label, passed, detail in _ACCEPTANCE:
        terminalreporter.write_line(f"[{'PASS' if passed else 'FAIL'}] {label}  {detail}")


def random_stable_system(rng, k, dt=0.01, max_rate=20.0):
    """Continuous A with distinct, well-separated stable eigenvalues."""
    blocks = []
    dim = 0
    while dim < k:
        sigma = -rng.uniform(0.2, max_rate)
        if k - dim >= 2 and rng.random() < 0.6:
            w = rng.uniform(2.0, 60.0)
            blocks.append(np.array([[sigma, -w], [w, sigma]]))
            dim += 2
        else:
            blocks.append(np.array([[sigma]]))
            dim += 1
    from scipy.linalg import block_diag
    A = block_diag(*blocks)
    T = rng.standard_normal((k, k)) + 2.0 * np.eye(k)
    return T @ A @ np.linalg.inv(T)


def trajectory(F, x0, n, G=None, U=None):
    """Brute-force iteration of ``x[j+1] = F x[j] (+ G u[j])``; oracle for fits."""
    X = np.empty((len(x0), n))
    X[:, 0] = x0
    for j in range(n - 1):
        X[:, j + 1] = F @ X[:, j] + (G @ U[:, j] if G is not None else 0.0)
    return X


def pairs_from(X, U=None, s=1, dt=1.0):
    """SnapshotMatrices from raw state (and input) arrays."""
    from modalkit.snapshots import Channel, Role, TimeSeries, build_pairs

    X = np.atleast_2d(X)
    chans = [Channel(f"x{i}", Role.STATE, row) for i, row in enumerate(X)]
    if U is not None:
        chans += [Channel(f"u{i}", Role.INPUT, row) for i, row in enumerate(np.atleast_2d(U))]
    return build_pairs(TimeSeries(tuple(chans), dt=dt), s)


def rotation(rho, theta):
    return rho * np.array([[np.cos(theta), -np.sin(theta)], [np.sin(theta), np.cos(theta)]])
