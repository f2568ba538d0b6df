import numpy as np
import pytest

from polarden.errors import DivergenceError, InvalidInputError
from polarden.experiments import REFERENCE_SIGMA, regime_hyperparams
from polarden.objectives import Hyperparams, gradient, make_objective, objective_value
from polarden.optimizer import AdamConfig, adam_minimize
from polarden.stats import NoiseModel, add_noise

from conftest import random_signal


def test_quadratic_surrogate_recovers_measurements(rng):
    y = random_signal(rng, 64)
    spec = make_objective("mixed", y, Hyperparams())
    res = adam_minimize(spec, y.like(np.zeros((2, 64))), AdamConfig(step_size=1e-2, max_iters=5000, grad_tol=1e-6))
    assert res.converged and res.iterations <= 5000
    assert np.max(np.abs(res.x_star.as_array() - y.as_array())) <= 1e-6


def test_starts_from_measurements(rng):
    y = random_signal(rng, 16)
    res = adam_minimize(make_objective("mixed", y, Hyperparams()))
    assert res.iterations == 0 and res.converged
    assert np.array_equal(res.x_star.as_array(), y.as_array())


def test_bit_identical_reruns(rng):
    y = random_signal(rng, 32)
    spec = make_objective("kernel", y, Hyperparams(lambda1=0.5, lambda_s=0.1, beta1=0.1, alpha=0.05, window=4))
    cfg = AdamConfig(max_iters=200)
    a, b = adam_minimize(spec, None, cfg), adam_minimize(spec, None, cfg)
    assert np.array_equal(a.objective_trace, b.objective_trace)
    assert np.array_equal(a.grad_norm_trace, b.grad_norm_trace)
    assert np.array_equal(a.x_star.as_array(), b.x_star.as_array())


def test_trace_lengths(rng):
    y = random_signal(rng, 16)
    res = adam_minimize(make_objective("mixed", y, Hyperparams(lambda1=1.0)), None,
                        AdamConfig(max_iters=30, rel_obj_tol=0.0))
    assert res.iterations == 30 and not res.converged
    assert len(res.objective_trace) == len(res.grad_norm_trace) == 31
    assert list(res.trace_rows())[0][0] == 0


def test_rel_obj_stop(rng):
    y = random_signal(rng, 16)
    res = adam_minimize(make_objective("mixed", y, Hyperparams(lambda1=1.0)), None,
                        AdamConfig(max_iters=20000, rel_obj_tol=1e-3))
    assert res.converged and res.reason == "rel_obj_tol"


@pytest.mark.parametrize("step", [1e-2, 5e-3])
def test_fixed_point_independent_of_step(rng, step):
    y = random_signal(rng, 16)
    spec = make_objective("mixed", y, Hyperparams(lambda1=0.5))
    cfg = AdamConfig(step_size=step, max_iters=20000, rel_obj_tol=0.0)
    res = adam_minimize(spec, None, cfg)
    assert res.converged
    assert np.max(np.abs(gradient(spec, res.x_star))) <= 1e-6 * np.sqrt(2 * 16)
    assert np.all(np.isfinite(res.x_star.as_array()))


def test_divergence_carries_iteration(rng):
    y = random_signal(rng, 16)
    spec = make_objective("mixed", y, Hyperparams(lambda1=1.0))
    # a starting point this large overflows the misfit
    with pytest.raises(DivergenceError) as info:
        adam_minimize(spec, y.like(np.full((2, 16), 1e200)), AdamConfig(max_iters=10))
    assert info.value.iteration == 0
    assert info.value.objective_trace == []


def test_length_mismatch(rng):
    y = random_signal(rng, 16)
    with pytest.raises(InvalidInputError):
        adam_minimize(make_objective("mixed", y, Hyperparams()), random_signal(rng, 8))


def test_config_validation():
    with pytest.raises(InvalidInputError):
        AdamConfig(max_iters=0)
    with pytest.raises(InvalidInputError):
        AdamConfig(decay1=1.0)


def test_benchmark_objective_decreases(bench_signal):
    y = add_noise(bench_signal, NoiseModel(REFERENCE_SIGMA, 0))
    spec = make_objective("mixed", y, regime_hyperparams("both", REFERENCE_SIGMA))
    res = adam_minimize(spec, None, AdamConfig(step_size=2e-2, max_iters=2000, cosine_decay=True))
    assert res.objective_trace[-1] <= 0.9 * objective_value(spec, y)
