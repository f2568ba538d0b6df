"""Independent reference implementations used by the tests."""

import numpy as np
import scipy.signal
from scipy import special


def hilbert(x):
    return scipy.signal.hilbert(x).imag


def stokes_ref(u, v):
    ua = u + 1j * hilbert(u)
    va = v + 1j * hilbert(v)
    c = ua * va.conj()
    return np.array([abs(ua) ** 2 + abs(va) ** 2, abs(ua) ** 2 - abs(va) ** 2, 2 * c.real, 2 * c.imag])


def dense_laplacian(n):
    D = np.diff(np.eye(n), axis=0)
    return D.T @ D


def nll_ref(s0x, s0y, sigma):
    z = np.sqrt(s0x * s0y) / sigma**2
    return s0x / (2 * sigma**2) + 0.5 * np.log(s0x) - (np.log(special.ive(1, z)) + z)


def kernel_loop(x, y, gamma, window, dt=1.0, weights="iterate", squared=False, clamp=1e-9):
    """Triple loop over (i, j) pairs of the sphere kernel penalty."""
    Sx = stokes_ref(*x)
    Sy = stokes_ref(*y)
    n = Sx.shape[1]
    fx = 1e-6 * Sx[0].max()
    fy = 1e-6 * Sy[0].max()
    S0w = Sx[0] if weights == "iterate" else Sy[0]
    total = 0.0
    for i in range(n):
        j_end = min(i + window, n - 1)
        w = 0.0
        for j in range(i, j_end + 1):
            w += np.exp(-gamma * ((j - i) * dt) ** 2) * S0w[j]
        acc = 0.0
        for j in range(i, j_end + 1):
            if Sx[0, i] <= fx or Sy[0, j] <= fy:
                continue
            sx = Sx[1:, i] / Sx[0, i]
            sy = Sy[1:, j] / Sy[0, j]
            d = np.arccos(min(max(float(sx @ sy), -1 + clamp), 1 - clamp))
            acc += np.exp(-gamma * ((j - i) * dt) ** 2) * (d * d if squared else d)
        total += w * acc
    return total


def central_fd(f, x, h=1e-5):
    g = np.zeros_like(x)
    for idx in np.ndindex(x.shape):
        e = np.zeros_like(x)
        e[idx] = h
        g[idx] = (f(x + e) - f(x - e)) / (2 * h)
    return g


def rel_err(g, ref):
    return float(np.max(np.abs(g - ref)) / max(np.max(np.abs(ref)), 1e-300))
