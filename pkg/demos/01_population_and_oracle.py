"""A Gaussian mixture, its noised family, and the exact denoiser.

Builds the bimodal benchmark, shows how noise widens every component,
and evaluates the oracle posterior mean E[y | t, z] and the score it
induces at a few noise levels.
"""

import numpy as np

from difflab import OracleDenoiser, bimodal, log_density, noised_mixture, score

m = bimodal()
print(f"population: weights {m.weights}, means {m.means.ravel()}, variances {m.variances}")
print(f"mean {m.mean[0]:.3f}, per-coordinate variance {m.coordinate_variances[0]:.3f}")

for t in (0.0, 1.0, 100.0):
    p = noised_mixture(m, t)
    print(f"t={t:>6g}: component variances {p.variances}, ln p_t(0) = {log_density(p, 0.0):.4f}")

d = OracleDenoiser(m)
z = np.array([[-3.0], [-0.5], [0.0], [0.5], [3.0]])
print("\nE[y | t, z] for z =", z.ravel())
for t in (0.01, 1.0, 10.0, 1e4):
    print(f"  t={t:>7g}: {np.round(d.posterior_mean(t, z).ravel(), 4)}")
print("small t returns z itself; large t collapses to the population mean 0")

print("\nscore (E[y|t,z] - z) / t at t=1:", np.round(score(d, 1.0, z).ravel(), 4))
