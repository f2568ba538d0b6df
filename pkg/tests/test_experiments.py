import numpy as np
import pytest

from polarden.errors import InvalidInputError
from polarden.experiments import (
    BENCH_ADAM,
    REFERENCE_SIGMA,
    BenchmarkConfig,
    SweepConfig,
    classify_regime,
    default_grid,
    export_sphere_trajectory,
    generate_benchmark_signal,
    grid_search,
    regime_hyperparams,
    run_denoise,
    sigma_for_input_snr,
    sphere_summary,
    sweep_seed,
    sweep_snr,
)
from polarden.objectives import Hyperparams
from polarden.optimizer import AdamConfig
from polarden.signal import BivariateSignal, analytic_signal, stokes
from polarden.stats import NoiseModel, add_noise, snr_db

FAST = AdamConfig(step_size=2e-2, max_iters=400, cosine_decay=True)


class TestBenchmark:
    def test_default(self, bench_signal):
        assert bench_signal.n == 1024
        assert bench_signal.u[0] == bench_signal.v[0] == 0.0
        assert abs(bench_signal.u[-1]) < 1e-15 and abs(bench_signal.v[-1]) < 1e-15
        assert bench_signal.dt == pytest.approx((np.pi / 2) / 1023)

    def test_peak_intensity(self, bench_signal):
        S0 = stokes(analytic_signal(bench_signal)).S0
        assert S0.max() == pytest.approx(1.0, rel=0.02)

    def test_degenerate_linear(self):
        sig = generate_benchmark_signal(BenchmarkConfig(chi_rate=0, chi0=0, theta_rate=0, theta0=0))
        assert not np.any(sig.v)

    def test_validation(self):
        with pytest.raises(InvalidInputError):
            BenchmarkConfig(n_samples=8)
        with pytest.raises(InvalidInputError):
            BenchmarkConfig(t_end=0.0)

    def test_input_snr_target(self, bench_signal):
        sigma = sigma_for_input_snr(9.75, bench_signal)
        vals = [snr_db(bench_signal, add_noise(bench_signal, NoiseModel(sigma, s))) for s in range(20)]
        assert np.mean(vals) == pytest.approx(9.75, abs=0.5)


class TestRegimes:
    @pytest.mark.parametrize("name,method", [("component", "mixed"), ("stokes", "mixed"),
                                             ("both", "mixed"), ("kernel", "kernel")])
    def test_presets_match_their_class(self, name, method):
        for sigma in (0.01, 0.1, 0.5):
            assert classify_regime(regime_hyperparams(name, sigma), method) == name

    def test_sigma_scaling(self):
        lo, hi = regime_hyperparams("both", 0.05), regime_hyperparams("both", 0.2)
        assert hi.lambda1 == pytest.approx(4 * lo.lambda1)
        # Stokes smoothing peaks at intermediate noise
        assert regime_hyperparams("both", 0.01).lambda_s < lo.lambda_s > hi.lambda_s
        assert hi.beta2 == lo.beta2

    def test_unknown(self):
        with pytest.raises(InvalidInputError):
            regime_hyperparams("nope", 0.1)
        with pytest.raises(InvalidInputError):
            classify_regime(Hyperparams(), "mixed")

    def test_run_denoise_needs_sigma(self, bench_signal):
        with pytest.raises(InvalidInputError):
            run_denoise(bench_signal, "both")
        with pytest.raises(InvalidInputError):
            run_denoise(bench_signal, Hyperparams(lambda1=1.0))


def test_reference_noise_ordering(bench_signal):
    # single realization; the seed-averaged version lives in the acceptance suite
    y = add_noise(bench_signal, NoiseModel(REFERENCE_SIGMA, 0))
    out = {r: snr_db(bench_signal, run_denoise(y, r, sigma=REFERENCE_SIGMA).x_star)
           for r in ("component", "stokes", "both")}
    assert out["both"] > out["stokes"] > out["component"] > snr_db(bench_signal, y)


def test_low_noise_tiny_weights(bench_signal):
    y = add_noise(bench_signal, NoiseModel(0.01, 1))
    h = Hyperparams(lambda1=1e-4, sigma=0.01)
    res = run_denoise(y, h, method="mixed", cfg=FAST)
    assert abs(snr_db(bench_signal, res.x_star) - snr_db(bench_signal, y)) <= 3.0


class TestGridSearch:
    def setup_method(self):
        self.x = generate_benchmark_signal(BenchmarkConfig(n_samples=128))
        self.y = add_noise(self.x, NoiseModel(0.1, 2))

    def test_single_point(self):
        best = grid_search(self.y, self.x, {"lambda1": [0.5]}, "mixed", cfg=FAST)
        assert best.lambda1 == 0.5

    def test_prefers_smoothing(self):
        best, table = grid_search(self.y, self.x, {"lambda1": [0.0, 0.1]}, "mixed", cfg=FAST,
                                  return_table=True)
        scores = dict((h.lambda1, s) for h, s in table)
        assert best.lambda1 == (0.1 if scores[0.1] > scores[0.0] else 0.0)
        assert scores[0.1] > scores[0.0]

    def test_empty(self):
        with pytest.raises(InvalidInputError):
            grid_search(self.y, self.x, {}, "mixed")
        with pytest.raises(InvalidInputError):
            grid_search(self.y, self.x, {"lambda1": []}, "mixed")

    def test_default_grid_shape(self):
        g = default_grid("both")
        assert set(g) == {"lambda1", "lambda_s", "beta1", "beta2"}
        assert np.allclose(g["lambda1"], [1e-3, 1e-2, 1e-1, 1, 10])


@pytest.mark.slow
def test_grid_both_beats_stokes(bench_signal):
    # subset of the default 1e-3..1e1 log grid to keep the run short
    sigma = REFERENCE_SIGMA
    y = add_noise(bench_signal, NoiseModel(sigma, 0))
    base = Hyperparams(sigma=sigma)
    common = {"lambda_s": [1.0, 10.0], "beta1": [1e-2], "beta2": [1e-2]}
    _, t_stokes = grid_search(y, bench_signal, common, "mixed", base=base, return_table=True)
    _, t_both = grid_search(y, bench_signal, {"lambda1": [1e-3, 1e-1, 1.0], **common}, "mixed",
                            base=base, return_table=True)
    assert max(s for _, s in t_both) >= max(s for _, s in t_stokes)


class TestSweep:
    cfg = SweepConfig(sigmas=(0.05, 0.2), n_seeds=2, regimes=("component", "both"),
                      tune_scales=(1.0,), max_iters=150)
    bench = BenchmarkConfig(n_samples=128)

    def test_cardinality_and_order(self):
        res, tuned = sweep_snr(self.cfg, self.bench)
        assert len(res.rows) == 8
        assert [(r.regime, r.sigma) for r in res.rows][:2] == [("component", 0.05)] * 2
        assert [r.seed for r in res.rows[:4]] == [0, 1, 1000, 1001]
        assert all(np.isfinite(r.snr_out_db) for r in res.rows)
        assert set(tuned) == {(r, s) for r in self.cfg.regimes for s in self.cfg.sigmas}

    def test_deterministic_and_parallel(self):
        a, _ = sweep_snr(self.cfg, self.bench, jobs=1)
        b, _ = sweep_snr(self.cfg, self.bench, jobs=1)
        c, _ = sweep_snr(self.cfg, self.bench, jobs=2)
        key = lambda rows: [(r.regime, r.sigma, r.seed, r.snr_in_db, r.snr_out_db, r.iterations) for r in rows]
        assert key(a.rows) == key(b.rows) == key(c.rows)

    def test_seed_scheme(self):
        cfg = SweepConfig(seed_base=7)
        assert sweep_seed(cfg, 2, 3) == 2010

    def test_config_validation(self):
        with pytest.raises(InvalidInputError):
            SweepConfig(sigmas=(0.1, -0.1))
        with pytest.raises(InvalidInputError):
            SweepConfig(regimes=("magic",))
        with pytest.raises(InvalidInputError, match="colour"):
            SweepConfig.from_dict({"colour": 1})

    def test_default_grid(self):
        cfg = SweepConfig()
        assert len(cfg.sigmas) == 10
        assert cfg.sigmas[0] == 0.01 and cfg.sigmas[-1] == 0.5
        assert (cfg.gamma, cfg.window) == (0.2, 32)


class TestSphere:
    def test_unit_norm_interior(self, bench_signal):
        tr = export_sphere_trajectory(bench_signal)
        assert not tr.valid[0] and not tr.valid[-1]
        assert np.allclose(np.linalg.norm(tr.s[1:-1][tr.valid[1:-1]], axis=1), 1.0, atol=1e-9)
        # a^2 stays under the 1e-6 relative floor for roughly ten samples at each end
        assert tr.valid.mean() > 0.97

    def test_zero_signal(self):
        tr = export_sphere_trajectory(BivariateSignal(np.zeros(16), np.zeros(16)))
        assert not tr.valid.any()

    def test_denoised_closer_than_noisy(self, bench_signal):
        y = add_noise(bench_signal, NoiseModel(REFERENCE_SIGMA, 0))
        x_mix = run_denoise(y, "both", sigma=REFERENCE_SIGMA).x_star
        summ = sphere_summary(bench_signal, {"noisy": y, "mixed": x_mix})
        assert summ["mixed"]["mean_distance_top"] < summ["noisy"]["mean_distance_top"]
        assert summ["mixed"]["mean_distance"] < summ["noisy"]["mean_distance"]
