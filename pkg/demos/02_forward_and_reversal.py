"""Forward diffusion paths and the one-step conditional reversal law.

Simulates many forward paths from a fixed start, checks that their
covariance is min(s, t) as for Brownian motion, then checks the law of
z(t - dt) given z(t) and y against its closed form.
"""

import numpy as np

from difflab.forward import conditional_reversal_moments, simulate_path
from difflab.rng import make_rng

path = simulate_path([0.0], dt=0.05, n_steps=40, rng=make_rng(0, "demo"), n_paths=50_000)
x = path.states[:, :, 0]
for a, b in [(10, 30), (20, 20), (40, 5)]:
    emp = np.mean(x[a] * x[b])
    print(f"cov(z({path.times[a]:.2f}), z({path.times[b]:.2f})) = {emp:.4f}, "
          f"expected {min(path.times[a], path.times[b]):.4f}")

print()
for dt in (1e-3, 0.1, 0.5):
    r = conditional_reversal_moments([0.0], 1.0, dt, 1_000_000, make_rng(1, "demo", str(dt)))
    print(f"dt={dt:g}: residual mean {r.empirical_mean[0]:+.2e} (SE {r.mean_standard_error[0]:.1e}), "
          f"variance {r.empirical_cov_diag[0]:.5f} vs dt(1 - dt/t) = {r.predicted_variance:.5f}")
