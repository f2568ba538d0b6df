import numpy as np
import pytest

from polarden.experiments import BenchmarkConfig, generate_benchmark_signal
from polarden.signal import BivariateSignal


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def bench_signal():
    return generate_benchmark_signal(BenchmarkConfig())


def random_signal(rng, n, dt=1.0):
    return BivariateSignal(rng.standard_normal(n), rng.standard_normal(n), dt=dt)


def circular(n=64, f=4, amp=1.0):
    k = np.arange(n)
    return BivariateSignal(amp * np.cos(2 * np.pi * f * k / n), amp * np.sin(2 * np.pi * f * k / n))


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
