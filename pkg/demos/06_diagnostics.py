"""The numerical self-checks, one by one and as a suite.

The heat-equation residual and the score check are pure discretization
error, so halving the grid should shrink them about fourfold.
"""

from difflab import bimodal, make_rng
from difflab.diagnostics import (
    flow_equivalence_check,
    fokker_planck_residual,
    run_checks,
    score_fd_check,
)

m = bimodal()
for dz, dtime in ((2e-3, 2e-4), (1e-3, 1e-4), (5e-4, 5e-5)):
    r = fokker_planck_residual(m, 0.5, dz=dz, dtime=dtime)
    print(f"heat equation at t=0.5, dz={dz:g}: max residual {r.max_abs_residual:.2e}")

for h in (1e-2, 1e-3, 1e-4):
    c = score_fd_check(m, 0.1, [[0.3], [1.7]], h=h)
    print(f"score vs central difference, h={h:g}: max error {c.max_abs_err:.2e}")

d = flow_equivalence_check(m, 0.01, 1.0, 50_000, 256, make_rng(0, "flow"))
print(f"flow 0.01 -> 1: variance {d.variance[0]:.4f} vs {d.variance_target[0]:.4f}")

print("\nfull suite:")
for result in run_checks(m, seed=0):
    print(f"  {'PASS' if result.passed else 'FAIL'} {result.name}")
