"""End-to-end command-line workflow in a scratch directory.

Writes a config, samples, evaluates likelihoods, trains a model, samples
with it, and runs the diagnostics, printing where each artifact lands.
"""

import json
import subprocess
import sys
import tempfile
from pathlib import Path

work = Path(tempfile.mkdtemp(prefix="difflab-demo-"))
config = work / "bimodal.yaml"
config.write_text(
    """\
seed: 7
population:
  weights: [0.5, 0.5]
  means: [[-2.0], [2.0]]
  variances: [0.25, 0.25]
grid: {t0: 0.001, T: 400.0, steps: 256}
sampler: {lambda: 1.0, chains: 20000}
quadrature: {nodes: 200, mc_samples: 10000}
likelihood: {y: [[0.0], [2.0]]}
training: {arch: [2, 32, 32, 1], steps: 5000}
"""
)


def difflab(*args):
    cmd = [sys.executable, "-m", "difflab", *args, "--config", str(config)]
    proc = subprocess.run(cmd, capture_output=True, text=True)
    print(f"$ difflab {' '.join(args)}  -> exit {proc.returncode}")
    if proc.stderr.strip():
        print("  " + proc.stderr.strip().replace("\n", "\n  "))
    return proc.returncode


difflab("sample", "--out", str(work / "sample"))
summary = json.loads((work / "sample" / "report.json").read_text())["results"]["summary"]
print(f"  variance {summary['variance'][0]:.4f}, mode masses {summary['mode_masses']}")

difflab("nll", "--out", str(work / "nll"))
for point in json.loads((work / "nll" / "report.json").read_text())["results"]["points"]:
    print(f"  -ln pop({point['y'][0]:g}) = {point['total_nll']:.4f} +/- {point['standard_error']:.4f}")

difflab("train", "--out", str(work / "train"))
model = work / "train" / "model.json"
difflab("sample", "--denoiser", f"trained:{model}", "--out", str(work / "trained"))

difflab("check", "--only", "score,fokker_planck", "--out", str(work / "check"))
difflab("sample", "--lambda", "-1", "--out", str(work / "bad"))
print(f"\nartifacts under {work}")
