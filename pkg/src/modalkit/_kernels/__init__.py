"""Sequential kernels with a compiled core and a pure-Python fallback.

The compiled extension ``_core`` is used when it imports cleanly; setting the
environment variable ``MODALKIT_PURE_PYTHON=1`` forces the fallback.  Both
backends share one calling convention; the wrappers here coerce arguments to
C-contiguous float64 so the compiled signatures always accept them.

Functions
---------
propagate(F, G, x0, U)
    Iterate ``x[j+1] = F x[j] + G u[j]``; column 0 is ``x0``.
rk4(A0, A1, B, x0, U, dt, substeps, duty_mean, duty_amp, duty_freq, t0)
    Classical RK4 for ``x' = (A0 + d(t) A1) x + B u`` with ``u`` held
    constant over each sample interval.
power_abs_sums(magnitudes, n)
    ``sum_{j=1..n} |lambda|**j`` per entry.
"""
import os

import numpy as np

from . import _fallback

BACKEND = "python"
_impl = _fallback

if os.environ.get("MODALKIT_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _core
    except ImportError:  # extension not built
        pass
    else:
        _impl = _core
        BACKEND = "cython"


def _f64(a, ndim):
    out = np.ascontiguousarray(a, dtype=np.float64)
    if out.ndim != ndim:
        raise ValueError(f"expected a {ndim}-d array, got shape {out.shape}")
    return out


def _as_inputs(U, rows):
    U = np.ascontiguousarray(U, dtype=np.float64)
    if U.ndim == 1:
        U = U.reshape(rows, -1)
    return U


def propagate(F, G, x0, U, backend=None):
    impl = _select(backend)
    F = _f64(F, 2)
    G = _f64(G, 2)
    return impl.propagate(F, G, _f64(x0, 1), _f64(_as_inputs(U, G.shape[1]), 2))


def rk4(A0, A1, B, x0, U, dt, substeps=1, duty_mean=0.0, duty_amp=0.0,
        duty_freq=0.0, t0=0.0, backend=None):
    impl = _select(backend)
    B = _f64(B, 2)
    return impl.rk4(_f64(A0, 2), _f64(A1, 2), B, _f64(x0, 1),
                    _f64(_as_inputs(U, B.shape[1]), 2), float(dt), int(substeps),
                    float(duty_mean), float(duty_amp), float(duty_freq), float(t0))


def power_abs_sums(magnitudes, n, backend=None):
    impl = _select(backend)
    return impl.power_abs_sums(_f64(magnitudes, 1), int(n))


def _select(backend):
    if backend is None:
        return _impl
    if backend == "python":
        return _fallback
    if backend == "cython":
        from . import _core
        return _core
    raise ValueError(f"unknown kernel backend {backend!r}")
