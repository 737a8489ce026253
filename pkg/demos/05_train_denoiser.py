"""Train a small network denoiser and sample with it.

A [2, 64, 64, 1] tanh MLP learns E[y | t, z] from (z / sqrt(1+t), ln t)
on the bimodal benchmark. Its held-out error is compared with the oracle
MMSE, then it drives the reverse SDE. Use more steps (the CLI default is
200000) for a closer fit.
"""

import sys
import time

from difflab import OracleDenoiser, SamplerConfig, bimodal, make_grid, make_rng
from difflab.denoiser import squared_errors
from difflab.network import train_denoiser
from difflab.sampler import sample_population, sample_summary

steps = int(sys.argv[1]) if len(sys.argv) > 1 else 30_000
m = bimodal()
start = time.perf_counter()
net = train_denoiser(m, [2, 64, 64, 1], (1e-3, 400.0), steps, 128, make_rng(0, "train"))
print(f"trained {steps} steps in {time.perf_counter() - start:.1f} s, "
      f"final training loss {net.meta['final_train_loss']:.4f}")

oracle = OracleDenoiser(m)
for t in (0.01, 0.1, 1.0, 10.0):
    a = squared_errors(m, net, t, 100_000, make_rng(1, "holdout", str(t))).mean()
    b = squared_errors(m, oracle, t, 100_000, make_rng(1, "holdout", str(t))).mean()
    print(f"t={t:<5g} network MSE {a:.4f}  oracle MMSE {b:.4f}  ratio {a / b:.3f}")

cfg = SamplerConfig(make_grid(1e-3, 400.0, 256), 1.0, 50_000, 0, "wide_gaussian")
s = sample_summary(sample_population(net, m, cfg), m, 1e-3)
print(f"reverse SDE with the network: mean {s['mean'][0]:+.4f}, variance {s['variance'][0]:.4f}, "
      f"mode masses {s['mode_masses'].round(4)}")
