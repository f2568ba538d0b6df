"""Denoising of bivariate signals with polarization (Stokes) priors."""

__version__ = "0.1.0"

from .errors import DegenerateTrajectoryError, DivergenceError, InvalidInputError
from .signal import (
    AnalyticSignal,
    BivariateSignal,
    EllipseParams,
    NormalizedStokesTrajectory,
    StokesTrajectory,
    analytic_signal,
    ellipse_to_signal,
    hilbert_transform,
    normalize_stokes,
    stokes,
    stokes_from_ellipse,
)
from .stats import (
    GeometricNoiseDecomposition,
    NoiseModel,
    add_noise,
    geometric_noise_params,
    ks_fit_pvalues,
    log_i1,
    s0_nll,
    simulate_stokes_noise,
    snr_db,
    validation_report,
)
from .objectives import (
    Hyperparams,
    LaplacianOperator,
    f1_loss,
    f2_loss,
    kernel_loss,
    kernel_objective,
    make_objective,
    mixed_objective,
    value_and_grad,
)
from .optimizer import AdamConfig, SolveResult, adam_minimize
from .experiments import (
    BenchmarkConfig,
    SweepConfig,
    export_sphere_trajectory,
    generate_benchmark_signal,
    grid_search,
    regime_hyperparams,
    run_denoise,
    sweep_snr,
)
