"""A small input-vs-output SNR sweep, the library way.

Run from the repository root::

    python demos/snr_sweep.py

Uses three noise levels and three seeds; the ``polarden sweep`` command
runs the full grid and writes CSV.
"""

from polarden.experiments import SweepConfig, sweep_snr

cfg = SweepConfig(sigmas=(0.05, 0.158, 0.5), n_seeds=3)
result, tuned = sweep_snr(cfg)
for (regime, sigma), (snr_in, snr_out, n) in sorted(result.mean_snr().items(), key=lambda kv: kv[0][::-1]):
    h = tuned[(regime, sigma)]
    print(f"sigma={sigma:<6g} {regime:>9s}: {snr_in:6.2f} -> {snr_out:6.2f} dB   "
          f"(lambda1={h.lambda1:.3g}, lambda_s={h.lambda_s:.3g}, alpha={h.alpha:.2g})")
