"""
Monte-Carlo comparison and the averaging curve
==============================================

Compare standard DeePC with averaged DeePC plus EKF over paired
repetitions, then trace how the averaged controller approaches the MPC
cost as more datasets are averaged. Regularization is re-tuned at every
point. Increase ``REPS`` for tighter estimates.
"""
import time

from ekf_deepc import ExperimentConfig, monte_carlo, sweep_parameter

REPS = 20
cfg = ExperimentConfig(repetitions=REPS, lambda_g_grid=(10.0, 100.0, 1000.0), lambda_y_grid=(1e5,))

t0 = time.time()
mc = monte_carlo(cfg, variants=["mpc-oracle", "standard", "averaged+ekf"],
                 lambdas={"standard": (1e5, 1000.0), "averaged+ekf": (1e5, 100.0)})
for name, s in mc.stats.items():
    print(f"{name:13s} mean J {s.mean:8.1f}  std {s.std:7.1f}  median {s.quantiles[0.5]:8.1f}")
pair = mc.paired[("standard", "averaged+ekf")]
print(f"standard - averaged+ekf: mean {pair['mean_diff']:.1f}, wins {pair['wins']}/{pair['trials']}, "
      f"sign test p = {pair['p_value']:.2g}")

points = sweep_parameter(cfg, "N", [1, 5, 20], ["averaged"], repetitions=REPS)
for pt in points:
    print(f"N = {int(pt.value):2d}: mean J {pt.mean:7.1f} (lambda_g {pt.lambda_g:g})")
print(f"done in {time.time() - t0:.0f} s")
