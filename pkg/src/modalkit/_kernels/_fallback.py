"""Pure-Python versions of the compiled recurrences.

Used when the extension is not built, or when ``MODALKIT_PURE_PYTHON=1``.
"""
import math

import numpy as np


def propagate(F, G, x0, U):
    k, steps = F.shape[0], U.shape[1]
    X = np.empty((k, steps))
    if steps == 0:
        return X
    X[:, 0] = x0
    for j in range(steps - 1):
        X[:, j + 1] = F @ X[:, j] + G @ U[:, j]
    return X


def rk4(A0, A1, B, x0, U, dt, substeps, duty_mean, duty_amp, duty_freq, t0):
    k, steps = A0.shape[0], U.shape[1]
    h = dt / substeps
    X = np.empty((k, steps))
    if steps == 0:
        return X
    x = np.array(x0, dtype=float)
    X[:, 0] = x

    def duty(t):
        return duty_mean + duty_amp * math.sin(2.0 * math.pi * duty_freq * t)

    for j in range(steps - 1):
        bu = B @ U[:, j]
        for q in range(substeps):
            t = t0 + j * dt + q * h
            a_0 = A0 + duty(t) * A1
            a_m = A0 + duty(t + 0.5 * h) * A1
            a_1 = A0 + duty(t + h) * A1
            k1 = a_0 @ x + bu
            k2 = a_m @ (x + 0.5 * h * k1) + bu
            k3 = a_m @ (x + 0.5 * h * k2) + bu
            k4 = a_1 @ (x + h * k3) + bu
            x = x + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        X[:, j + 1] = x
    return X


def power_abs_sums(magnitudes, n):
    out = np.zeros(len(magnitudes))
    for i, mag in enumerate(magnitudes):
        term, acc = 1.0, 0.0
        for _ in range(n):
            term *= mag
            acc += term
        out[i] = acc
    return out
