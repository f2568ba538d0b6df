"""ADAM minimization of the denoising objectives."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import DivergenceError, InvalidInputError
from .objectives import ObjectiveSpec, value_and_grad
from .signal import BivariateSignal

__all__ = ["AdamConfig", "SolveResult", "adam_minimize"]

REL_OBJ_WINDOW = 50


@dataclass(frozen=True)
class AdamConfig:
    """ADAM settings.

    ``decay1`` and ``decay2`` are the first and second moment decay rates.
    ``grad_tol=None`` means ``1e-6 * sqrt(2N)``. With ``cosine_decay`` the
    step size follows a half cosine from ``step_size`` to
    ``step_size * final_step_ratio`` over ``max_iters``.
    """

    step_size: float = 1e-2
    decay1: float = 0.9
    decay2: float = 0.999
    eps_hat: float = 1e-8
    max_iters: int = 20000
    grad_tol: float | None = None
    rel_obj_tol: float = 1e-9
    cosine_decay: bool = False
    final_step_ratio: float = 0.0

    def __post_init__(self):
        if self.max_iters < 1:
            raise InvalidInputError("max_iters must be at least 1")
        if not self.step_size > 0:
            raise InvalidInputError("step_size must be positive")
        if not (0 < self.decay1 < 1 and 0 < self.decay2 < 1):
            raise InvalidInputError("moment decays must lie in (0, 1)")
        if not self.eps_hat > 0:
            raise InvalidInputError("eps_hat must be positive")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class SolveResult:
    x_star: BivariateSignal
    objective_trace: np.ndarray
    grad_norm_trace: np.ndarray
    iterations: int
    converged: bool
    reason: str = ""
    extra: dict = field(default_factory=dict)

    def trace_rows(self):
        for k, (f, g) in enumerate(zip(self.objective_trace, self.grad_norm_trace)):
            yield k, float(f), float(g)


def adam_minimize(spec: ObjectiveSpec, x0: BivariateSignal | None = None, cfg: AdamConfig | None = None) -> SolveResult:
    """Minimize a bound objective with bias-corrected ADAM.

    Starts from the measurements when ``x0`` is None. Stops after
    ``max_iters`` updates, when the gradient sup-norm drops to
    ``grad_tol``, or when the objective changed by at most
    ``rel_obj_tol`` (relative) over the last 50 iterations.

    Trace entry ``k`` holds the objective and gradient sup-norm at the
    ``k``-th iterate, the last entry being the returned point.
    """
    cfg = cfg or AdamConfig()
    y = spec.y
    x0 = y if x0 is None else x0
    if x0.n != y.n:
        raise InvalidInputError(f"x0 has {x0.n} samples, measurements have {y.n}")
    x = x0.as_array()
    grad_tol = cfg.grad_tol if cfg.grad_tol is not None else 1e-6 * math.sqrt(2 * y.n)

    m = np.zeros_like(x)
    v = np.zeros_like(x)
    objs, gnorms = [], []
    converged = False
    reason = "max_iters"
    b1, b2 = cfg.decay1, cfg.decay2
    it = 0
    while True:
        # overflow is reported through the finiteness check below
        with np.errstate(over="ignore", invalid="ignore"):
            f, g = value_and_grad(spec, x)
        if not (np.isfinite(f) and np.all(np.isfinite(g))):
            raise DivergenceError("non-finite objective or gradient", it, objs, gnorms)
        gn = float(np.max(np.abs(g)))
        objs.append(f)
        gnorms.append(gn)
        if gn <= grad_tol:
            converged, reason = True, "grad_tol"
            break
        if it >= REL_OBJ_WINDOW:
            ref = objs[-1 - REL_OBJ_WINDOW]
            if abs(ref - f) <= cfg.rel_obj_tol * max(abs(ref), 1e-300):
                converged, reason = True, "rel_obj_tol"
                break
        if it >= cfg.max_iters:
            break
        it += 1
        lr = cfg.step_size
        if cfg.cosine_decay:
            frac = (it - 1) / max(cfg.max_iters - 1, 1)
            lr *= cfg.final_step_ratio + (1 - cfg.final_step_ratio) * 0.5 * (1 + math.cos(math.pi * frac))
        m = b1 * m + (1 - b1) * g
        v = b2 * v + (1 - b2) * (g * g)
        mhat = m / (1 - b1**it)
        vhat = v / (1 - b2**it)
        x = x - lr * mhat / (np.sqrt(vhat) + cfg.eps_hat)

    return SolveResult(
        x_star=y.like(x),
        objective_trace=np.array(objs),
        grad_norm_trace=np.array(gnorms),
        iterations=it,
        converged=converged,
        reason=reason,
    )
