"""Bivariate signals, analytic extension and instantaneous Stokes parameters.

Conventions
-----------
With ``ua = u + i H(u)`` and ``va = v + i H(v)`` the Stokes parameters are::

    S0 = |ua|^2 + |va|^2
    S1 = |ua|^2 - |va|^2
    S2 = 2 Re(ua * conj(va))
    S3 = 2 Im(ua * conj(va))

so that ``S1^2 + S2^2 + S3^2 == S0^2`` holds sample by sample.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateTrajectoryError, InvalidInputError

__all__ = [
    "BivariateSignal",
    "AnalyticSignal",
    "StokesTrajectory",
    "NormalizedStokesTrajectory",
    "EllipseParams",
    "hilbert_transform",
    "analytic_signal",
    "stokes",
    "stokes_components",
    "normalize_stokes",
    "default_s0_floor",
    "ellipse_to_signal",
    "stokes_from_ellipse",
]

S0_FLOOR_RATIO = 1e-6


def _as_real_vector(x, name="x"):
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise InvalidInputError(f"{name} must be one-dimensional, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise InvalidInputError(f"{name} contains non-finite samples")
    return x


@dataclass(frozen=True)
class BivariateSignal:
    """Two real components sampled on a uniform time grid.

    Parameters
    ----------
    u, v : array_like
        Components, same length ``N >= 4``.
    dt : float
        Sample spacing.
    t0 : float
        Time of the first sample.
    """

    u: np.ndarray
    v: np.ndarray
    dt: float = 1.0
    t0: float = 0.0

    def __post_init__(self):
        u = _as_real_vector(self.u, "u")
        v = _as_real_vector(self.v, "v")
        if u.shape != v.shape:
            raise InvalidInputError(f"u and v lengths differ: {u.size} != {v.size}")
        if u.size < 4:
            raise InvalidInputError(f"need at least 4 samples, got {u.size}")
        if not (np.isfinite(self.dt) and self.dt > 0):
            raise InvalidInputError(f"dt must be positive, got {self.dt}")
        u.setflags(write=False)
        v.setflags(write=False)
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "v", v)
        object.__setattr__(self, "dt", float(self.dt))
        object.__setattr__(self, "t0", float(self.t0))

    @property
    def n(self) -> int:
        return self.u.size

    @property
    def t(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(self.n)

    def as_array(self) -> np.ndarray:
        """Stack the components into a ``(2, N)`` array (a copy)."""
        return np.vstack([self.u, self.v])

    @classmethod
    def from_array(cls, x, dt=1.0, t0=0.0) -> "BivariateSignal":
        x = np.asarray(x, dtype=float)
        if x.ndim != 2 or x.shape[0] != 2:
            raise InvalidInputError(f"expected a (2, N) array, got shape {x.shape}")
        return cls(x[0].copy(), x[1].copy(), dt, t0)

    def like(self, x) -> "BivariateSignal":
        """New signal on the same time grid with samples ``x`` of shape (2, N)."""
        return BivariateSignal.from_array(x, self.dt, self.t0)

    def energy(self) -> float:
        return float(np.sum(self.u**2) + np.sum(self.v**2))


@dataclass(frozen=True)
class AnalyticSignal:
    ua: np.ndarray
    va: np.ndarray


@dataclass(frozen=True)
class StokesTrajectory:
    S0: np.ndarray
    S1: np.ndarray
    S2: np.ndarray
    S3: np.ndarray

    def as_array(self) -> np.ndarray:
        """``(4, N)`` array with rows S0..S3."""
        return np.vstack([self.S0, self.S1, self.S2, self.S3])


@dataclass(frozen=True)
class NormalizedStokesTrajectory:
    """Unit vectors on the Poincare sphere.

    ``s`` has shape ``(N, 3)``. Rows where ``valid`` is False had an
    intensity at or below the floor and are filled with NaN.
    """

    s: np.ndarray
    s0: np.ndarray
    valid: np.ndarray
    s0_floor: float


@dataclass(frozen=True)
class EllipseParams:
    """Time-varying polarization ellipse: amplitude, orientation, ellipticity, phase."""

    a: np.ndarray
    theta: np.ndarray
    chi: np.ndarray
    phi: np.ndarray

    def __post_init__(self):
        arrays = {}
        for name in ("a", "theta", "chi", "phi"):
            arrays[name] = np.atleast_1d(np.asarray(getattr(self, name), dtype=float))
        n = max(arr.size for arr in arrays.values())
        for name, arr in arrays.items():
            if arr.size == 1 and n > 1:
                arr = np.full(n, arr.item())
            if arr.size != n:
                raise InvalidInputError(f"ellipse parameter {name} has length {arr.size}, expected {n}")
            if not np.all(np.isfinite(arr)):
                raise InvalidInputError(f"ellipse parameter {name} contains non-finite values")
            object.__setattr__(self, name, arr)
        if np.any(self.a < 0):
            raise InvalidInputError("amplitude must be nonnegative")
        if np.any(np.diff(self.phi) <= 0):
            raise InvalidInputError("phase must be strictly increasing")


def hilbert_transform(x) -> np.ndarray:
    """Discrete Hilbert transform through the one-sided spectrum.

    Positive-frequency bins are multiplied by ``-i``; the DC bin and, for
    even lengths, the Nyquist bin are zeroed. The resulting operator is
    real, linear and antisymmetric (its adjoint is ``-H``).

    Parameters
    ----------
    x : array_like
        Real samples, length >= 4. A 2-D input is transformed along the
        last axis.

    Returns
    -------
    numpy.ndarray
        Imaginary part of the discrete analytic signal of ``x``.
    """
    x = np.asarray(x, dtype=float)
    if x.shape[-1] < 4:
        raise InvalidInputError(f"need at least 4 samples, got {x.shape[-1]}")
    if not np.all(np.isfinite(x)):
        raise InvalidInputError("non-finite samples in Hilbert transform input")
    n = x.shape[-1]
    spec = np.fft.rfft(x, axis=-1)
    spec *= -1j
    spec[..., 0] = 0.0
    if n % 2 == 0:
        spec[..., -1] = 0.0
    return np.fft.irfft(spec, n=n, axis=-1)


def analytic_signal(sig: BivariateSignal) -> AnalyticSignal:
    h = hilbert_transform(np.vstack([sig.u, sig.v]))
    return AnalyticSignal(sig.u + 1j * h[0], sig.v + 1j * h[1])


def stokes_components(u, uh, v, vh) -> np.ndarray:
    """Stokes parameters from the four real quadrature components.

    Returns a ``(4, N)`` array. The objectives differentiate through this
    form directly.
    """
    pu = u * u + uh * uh
    pv = v * v + vh * vh
    return np.stack([
        pu + pv,
        pu - pv,
        2.0 * (u * v + uh * vh),
        2.0 * (uh * v - u * vh),
    ])


def stokes(a: AnalyticSignal) -> StokesTrajectory:
    ua, va = np.asarray(a.ua), np.asarray(a.va)
    S = stokes_components(ua.real, ua.imag, va.real, va.imag)
    return StokesTrajectory(*S)


def default_s0_floor(S0) -> float:
    """Intensity floor used to mask sphere points: ``1e-6 * max(S0)``."""
    return S0_FLOOR_RATIO * float(np.max(S0))


def normalize_stokes(S: StokesTrajectory, s0_floor: float | None = None) -> NormalizedStokesTrajectory:
    """Project Stokes vectors onto the unit sphere.

    Samples with ``S0 <= s0_floor`` are masked. Raises
    :class:`DegenerateTrajectoryError` when every sample is masked.
    """
    S0 = np.asarray(S.S0, dtype=float)
    if s0_floor is None:
        s0_floor = default_s0_floor(S0)
    if s0_floor < 0:
        raise InvalidInputError("s0_floor must be nonnegative")
    valid = S0 > s0_floor
    if not np.any(valid):
        raise DegenerateTrajectoryError("every sample has intensity at or below the floor")
    vec = np.stack([S.S1, S.S2, S.S3], axis=1)
    s = np.full_like(vec, np.nan)
    s[valid] = vec[valid] / S0[valid, None]
    return NormalizedStokesTrajectory(s=s, s0=S0, valid=valid, s0_floor=float(s0_floor))


def ellipse_to_signal(p: EllipseParams, dt: float = 1.0, t0: float = 0.0) -> BivariateSignal:
    """Synthesize ``u, v`` from amplitude, orientation, ellipticity and phase."""
    ct, st = np.cos(p.theta), np.sin(p.theta)
    cc, sc = np.cos(p.chi), np.sin(p.chi)
    cp, sp = np.cos(p.phi), np.sin(p.phi)
    u = p.a * (ct * cc * cp - st * sc * sp)
    v = p.a * (st * cc * cp + ct * sc * sp)
    return BivariateSignal(u, v, dt, t0)


def stokes_from_ellipse(p: EllipseParams) -> StokesTrajectory:
    a2 = p.a**2
    c2chi = np.cos(2 * p.chi)
    return StokesTrajectory(
        a2,
        a2 * c2chi * np.cos(2 * p.theta),
        a2 * c2chi * np.sin(2 * p.theta),
        a2 * np.sin(2 * p.chi),
    )
