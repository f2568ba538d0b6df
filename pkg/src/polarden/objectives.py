"""Denoising objectives and their analytic gradients.

Two objectives are provided over the ``(2, N)`` array of unknown samples:

* ``mixed``: component fidelity and smoothing, the noisy-intensity
  likelihood, fidelity of the geometric Stokes parameters and smoothing of
  all four Stokes parameters.
* ``kernel``: component fidelity and smoothing, the intensity likelihood,
  smoothing of the intensity and an intensity-weighted local kernel
  regression of the normalized Stokes vectors on the Poincare sphere.

Every Stokes-domain term is a function of ``(u, Hu, v, Hv)``. Gradients
are first taken with respect to the four Stokes rows and then pulled back
through :func:`polarden.signal.stokes_components` and the Hilbert
transform, whose adjoint is ``-H``.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field, replace

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import InvalidInputError
from .signal import BivariateSignal, S0_FLOOR_RATIO, hilbert_transform, stokes_components
from .stats import s0_nll, s0_nll_and_grad

__all__ = [
    "Hyperparams",
    "LaplacianOperator",
    "ObjectiveSpec",
    "make_objective",
    "laplacian_quadratic",
    "f1_loss",
    "f2_loss",
    "kernel_loss",
    "mixed_objective",
    "kernel_objective",
    "objective_value",
    "gradient",
    "value_and_grad",
]

ARCCOS_CLAMP = 1e-9
HUBER_DELTA = 1e-6
LIKELIHOOD_MODES = ("gaussian", "laplace")
DISTANCE_MODES = ("geodesic", "squared")
KERNEL_WEIGHTS = ("measured", "iterate")


@dataclass(frozen=True)
class Hyperparams:
    """Weights and locality settings shared by both objectives.

    ``lambda1`` smooths the components, ``lambda_s`` the Stokes parameters,
    ``beta1`` weighs the intensity likelihood, ``beta2`` the geometric
    Stokes fidelity and ``alpha`` the kernel penalty. ``gamma`` and
    ``window`` set the kernel bandwidth and the forward window length.
    ``sigma`` is the (known) noise level.

    ``kernel_weights`` selects where the kernel intensity weights come
    from: ``"measured"`` uses the intensity of the measurements (fixed
    during the solve); ``"iterate"`` uses the intensity of the current
    estimate and differentiates through it, which rewards shrinking the
    estimate toward zero once ``alpha`` is not tiny.
    """

    lambda1: float = 0.0
    lambda_s: float = 0.0
    beta1: float = 0.0
    beta2: float = 0.0
    alpha: float = 0.0
    gamma: float = 0.2
    window: int = 32
    sigma: float = 0.1
    likelihood_mode: str = "gaussian"
    distance_mode: str = "geodesic"
    kernel_weights: str = "measured"

    def __post_init__(self):
        for name in ("lambda1", "lambda_s", "beta1", "beta2", "alpha"):
            val = getattr(self, name)
            if not (np.isfinite(val) and val >= 0):
                raise InvalidInputError(f"{name} must be finite and nonnegative, got {val}")
        if not self.gamma > 0:
            raise InvalidInputError(f"gamma must be positive, got {self.gamma}")
        if int(self.window) != self.window or self.window < 1:
            raise InvalidInputError(f"window must be a positive integer, got {self.window}")
        object.__setattr__(self, "window", int(self.window))
        if not self.sigma > 0:
            raise InvalidInputError(f"sigma must be positive, got {self.sigma}")
        if self.likelihood_mode not in LIKELIHOOD_MODES:
            raise InvalidInputError(f"likelihood_mode must be one of {LIKELIHOOD_MODES}")
        if self.distance_mode not in DISTANCE_MODES:
            raise InvalidInputError(f"distance_mode must be one of {DISTANCE_MODES}")
        if self.kernel_weights not in KERNEL_WEIGHTS:
            raise InvalidInputError(f"kernel_weights must be one of {KERNEL_WEIGHTS}")

    def replace(self, **changes) -> "Hyperparams":
        return replace(self, **changes)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "Hyperparams":
        known = cls.__dataclass_fields__
        unknown = set(d) - set(known)
        if unknown:
            raise InvalidInputError(f"unknown hyperparameter key(s): {', '.join(sorted(unknown))}")
        return cls(**d)


@dataclass(frozen=True)
class LaplacianOperator:
    """Free-boundary path-graph Laplacian: ``z^T L z = sum (z[k+1] - z[k])^2``."""

    size: int
    boundary: str = "free"

    def quad(self, z) -> float:
        z = np.asarray(z, dtype=float)
        if z.shape[-1] != self.size:
            raise InvalidInputError(f"length {z.shape[-1]} does not match operator size {self.size}")
        d = np.diff(z, axis=-1)
        return float(np.sum(d * d))

    def apply(self, z) -> np.ndarray:
        """``L z`` along the last axis."""
        z = np.asarray(z, dtype=float)
        d = np.diff(z, axis=-1)
        out = np.zeros_like(z)
        out[..., :-1] -= d
        out[..., 1:] += d
        return out

    def dense(self) -> np.ndarray:
        n = self.size
        L = np.diag(np.full(n, 2.0)) - np.eye(n, k=1) - np.eye(n, k=-1)
        L[0, 0] = L[-1, -1] = 1.0
        return L


def laplacian_quadratic(z, L: LaplacianOperator | None = None) -> float:
    z = np.asarray(z, dtype=float)
    if L is None:
        L = LaplacianOperator(z.shape[-1])
    return L.quad(z)


@dataclass(frozen=True)
class ObjectiveSpec:
    """An objective bound to its measurements, with the ``y``-side quantities cached."""

    kind: str
    y: BivariateSignal
    hyper: Hyperparams
    Sy: np.ndarray = field(repr=False)
    sy: np.ndarray = field(repr=False)
    valid_y: np.ndarray = field(repr=False)
    s0_floor: float = 0.0
    taps: np.ndarray = field(default=None, repr=False)

    @property
    def laplacian(self) -> LaplacianOperator:
        return LaplacianOperator(self.y.n)


def make_objective(kind: str, y: BivariateSignal, hyper: Hyperparams) -> ObjectiveSpec:
    """Bind an objective of the given kind (``"mixed"`` or ``"kernel"``) to ``y``."""
    if kind not in ("mixed", "kernel"):
        raise InvalidInputError(f"objective kind must be 'mixed' or 'kernel', got {kind!r}")
    if kind == "kernel" and hyper.window >= y.n:
        raise InvalidInputError(f"window {hyper.window} must be smaller than N={y.n}")
    arr = y.as_array()
    hy = hilbert_transform(arr)
    Sy = stokes_components(arr[0], hy[0], arr[1], hy[1])
    floor = max(S0_FLOOR_RATIO * float(Sy[0].max()), np.finfo(float).tiny)
    valid_y = Sy[0] > floor
    sy = np.zeros((3, y.n))
    sy[:, valid_y] = Sy[1:, valid_y] / Sy[0, valid_y]
    lags = y.dt * np.arange(min(hyper.window, y.n - 1) + 1)
    taps = np.exp(-hyper.gamma * lags**2)
    return ObjectiveSpec(kind, y, hyper, Sy, sy, valid_y, floor, taps)


def _as_samples(x, spec: ObjectiveSpec) -> np.ndarray:
    if isinstance(x, BivariateSignal):
        x = x.as_array()
    x = np.asarray(x, dtype=float)
    if x.shape != (2, spec.y.n):
        raise InvalidInputError(f"expected samples of shape (2, {spec.y.n}), got {x.shape}")
    return x


def _huber(r):
    a = np.abs(r)
    val = np.where(a <= HUBER_DELTA, 0.5 * r * r / HUBER_DELTA, a - 0.5 * HUBER_DELTA)
    grad = np.where(a <= HUBER_DELTA, r / HUBER_DELTA, np.sign(r))
    return val, grad


def _f1_terms(x, spec, need_grad):
    h = spec.hyper
    L = spec.laplacian
    r = x - spec.y.as_array()
    val = float(np.sum(r * r)) + h.lambda1 * (L.quad(x[0]) + L.quad(x[1]))
    grad = 2.0 * r + 2.0 * h.lambda1 * L.apply(x) if need_grad else None
    return val, grad


def _intensity_terms(S, spec, need_grad):
    """Intensity likelihood plus smoothing of the selected Stokes rows."""
    h = spec.hyper
    val = 0.0
    gS = np.zeros_like(S) if need_grad else None
    if h.beta1 > 0:
        nll, dnll = s0_nll_and_grad(S[0], spec.Sy[0], h.sigma, spec.s0_floor)
        val += h.beta1 * float(np.sum(nll))
        if need_grad:
            gS[0] += h.beta1 * dnll
    if h.lambda_s > 0:
        L = spec.laplacian
        rows = range(4) if spec.kind == "mixed" else range(1)
        for i in rows:
            val += h.lambda_s * L.quad(S[i])
            if need_grad:
                gS[i] += 2.0 * h.lambda_s * L.apply(S[i])
    return val, gS


def _geometric_fidelity(S, spec, need_grad):
    h = spec.hyper
    gS = np.zeros_like(S) if need_grad else None
    if h.beta2 == 0:
        return 0.0, gS
    r = S[1:] - spec.Sy[1:]
    if h.likelihood_mode == "gaussian":
        val = float(np.sum(r * r))
        g = 2.0 * r
    else:
        hv, g = _huber(r)
        val = float(np.sum(hv))
    if need_grad:
        gS[1:] = h.beta2 * g
    return h.beta2 * val, gS


def _kernel_terms(S, spec, need_grad):
    """Intensity-weighted kernel regression of normalized Stokes vectors.

    ``sum_i w_i sum_{j=i}^{i+W} K(t_i, t_j) d(s^x_i, s^y_j)`` with
    ``w_i = sum_{j=i}^{i+W} K(t_i, t_j) S0_j``, where ``S0`` is the
    measured or the current intensity (``kernel_weights``). The window is truncated
    at the last sample. Pairs where either side is below the intensity
    floor are skipped.
    """
    h = spec.hyper
    n = S.shape[1]
    taps = spec.taps
    lags = taps.size
    S0 = S[0]
    valid_x = S0 > spec.s0_floor
    safe = np.where(valid_x, S0, 1.0)
    sx = np.where(valid_x, S[1:] / safe, 0.0)

    # zero padding past the last sample realizes the truncated window
    pad = lags - 1
    Y = sliding_window_view(np.pad(spec.sy, ((0, 0), (0, pad))), lags, axis=1)
    Vy = sliding_window_view(np.pad(spec.valid_y, (0, pad)), lags)
    iterate_weights = h.kernel_weights == "iterate"
    P0 = sliding_window_view(np.pad(S0 if iterate_weights else spec.Sy[0], (0, pad)), lags)

    w = P0 @ taps
    c = np.einsum("ni,nik->ik", sx, Y)
    mask = valid_x[:, None] & Vy
    lo, hi = -1.0 + ARCCOS_CLAMP, 1.0 - ARCCOS_CLAMP
    d = np.arccos(np.clip(c, lo, hi))
    dist = d * d if h.distance_mode == "squared" else d
    A = np.where(mask, dist, 0.0) @ taps
    val = float(np.dot(w, A))
    if not need_grad:
        return h.alpha * val, None

    inside = mask & (c > lo) & (c < hi)
    dd = np.where(inside, -1.0 / np.sqrt(np.where(inside, 1.0 - c * c, 1.0)), 0.0)
    if h.distance_mode == "squared":
        dd = 2.0 * d * dd
    gS = np.zeros_like(S)
    if iterate_weights:
        # w_i depends on S0_j for j = i..i+W
        gS[0] = np.convolve(A, taps)[:n]
    G = np.einsum("ik,nik->ni", dd * taps, Y) * w
    G = np.where(valid_x, G, 0.0)
    gS[1:] += G / safe
    gS[0] -= np.where(valid_x, np.einsum("ij,ij->j", G, S[1:]) / safe**2, 0.0)
    return h.alpha * val, h.alpha * gS


def _stokes_backward(x, xh, gS):
    u, v = x
    uh, vh = xh
    g0, g1, g2, g3 = gS
    gp = g0 + g1
    gm = g0 - g1
    du = 2.0 * (u * gp + v * g2 - vh * g3)
    duh = 2.0 * (uh * gp + vh * g2 + v * g3)
    dv = 2.0 * (v * gm + u * g2 + uh * g3)
    dvh = 2.0 * (vh * gm + uh * g2 - u * g3)
    return np.vstack([du, dv]) - hilbert_transform(np.vstack([duh, dvh]))


def value_and_grad(spec: ObjectiveSpec, x, need_grad: bool = True):
    """Objective value and, optionally, its gradient as a ``(2, N)`` array."""
    x = _as_samples(x, spec)
    h = spec.hyper
    val, grad = _f1_terms(x, spec, need_grad)
    uses_stokes = h.beta1 > 0 or h.lambda_s > 0 or h.beta2 > 0 or (spec.kind == "kernel" and h.alpha > 0)
    if not uses_stokes:
        return val, grad
    xh = hilbert_transform(x)
    S = stokes_components(x[0], xh[0], x[1], xh[1])
    v2, gS = _intensity_terms(S, spec, need_grad)
    val += v2
    if spec.kind == "mixed":
        v3, g3 = _geometric_fidelity(S, spec, need_grad)
    else:
        if h.alpha > 0:
            v3, g3 = _kernel_terms(S, spec, need_grad)
        else:
            v3, g3 = 0.0, (np.zeros_like(S) if need_grad else None)
    val += v3
    if need_grad:
        grad = grad + _stokes_backward(x, xh, gS + g3)
    return val, grad


def objective_value(spec: ObjectiveSpec, x) -> float:
    return value_and_grad(spec, x, need_grad=False)[0]


def gradient(spec: ObjectiveSpec, x) -> np.ndarray:
    """Exact gradient of the bound objective at ``x`` (shape ``(2, N)``)."""
    return value_and_grad(spec, x, need_grad=True)[1]


def mixed_objective(x, spec: ObjectiveSpec) -> float:
    if spec.kind != "mixed":
        raise InvalidInputError("spec is not a mixed objective")
    return objective_value(spec, x)


def kernel_objective(x, spec: ObjectiveSpec) -> float:
    if spec.kind != "kernel":
        raise InvalidInputError("spec is not a kernel objective")
    return objective_value(spec, x)


def _check_pair(x: BivariateSignal, y: BivariateSignal):
    if x.n != y.n:
        raise InvalidInputError(f"length mismatch: {x.n} != {y.n}")


def f1_loss(x: BivariateSignal, y: BivariateSignal, h: Hyperparams) -> float:
    """``||x - y||^2 + lambda1 (u^T L u + v^T L v)``."""
    _check_pair(x, y)
    r = x.as_array() - y.as_array()
    L = LaplacianOperator(x.n)
    return float(np.sum(r * r)) + h.lambda1 * (L.quad(x.u) + L.quad(x.v))


def f2_loss(x: BivariateSignal, y: BivariateSignal, h: Hyperparams, likelihood_mode: str | None = None) -> float:
    """Stokes-domain loss: intensity likelihood, geometric fidelity and Stokes smoothing."""
    _check_pair(x, y)
    if likelihood_mode is not None:
        h = h.replace(likelihood_mode=likelihood_mode)
    spec = make_objective("mixed", y, h)
    xa = x.as_array()
    xh = hilbert_transform(xa)
    S = stokes_components(xa[0], xh[0], xa[1], xh[1])
    return _intensity_terms(S, spec, False)[0] + _geometric_fidelity(S, spec, False)[0]


def kernel_loss(x: BivariateSignal, y: BivariateSignal, h: Hyperparams) -> float:
    """Unweighted (``alpha = 1``) kernel-regression penalty on the sphere."""
    _check_pair(x, y)
    spec = make_objective("kernel", y, h.replace(alpha=1.0))
    xa = x.as_array()
    xh = hilbert_transform(xa)
    S = stokes_components(xa[0], xh[0], xa[1], xh[1])
    return _kernel_terms(S, spec, False)[0]
