"""``difflab`` command line: sample | nll | mi | entropy | train | check.

Exit codes: 0 success, 1 a diagnostic check failed, 2 bad configuration,
3 a computation went non-finite.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
import time
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__
from .config import RunConfig, load_config, population_from_config, validate
from .denoiser import OracleDenoiser
from .diagnostics import DEFAULT_TOLERANCES, run_checks
from .errors import ConfigError, DiffLabError, NonFiniteError
from .likelihood import (
    QuadratureSpec,
    entropy_report,
    information_grid,
    mutual_information_report,
    nll,
)
from .network import TrainedDenoiser, train_denoiser
from .population import GaussianMixture
from .rng import make_rng
from .sampler import (
    InitMode,
    PopulationStats,
    SamplerConfig,
    make_grid,
    sample_population,
    sample_summary,
    target_summary,
)

log = logging.getLogger("difflab")

EXIT_OK, EXIT_CHECK_FAILED, EXIT_CONFIG, EXIT_NONFINITE = 0, 1, 2, 3
SECOND_MOMENT_WARN = 4.0


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


def write_json(path: Path, doc: dict) -> None:
    path.write_text(json.dumps(_jsonable(doc), indent=2) + "\n")


def write_samples_csv(path: Path, z: np.ndarray) -> None:
    dim = z.shape[1]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["chain"] + [f"x{k}" for k in range(dim)])
        for i, row in enumerate(z):
            w.writerow([i] + [repr(float(v)) for v in row])


def _float_list(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _int_list(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="YAML run configuration")
    common.add_argument("--seed", type=int, help="64-bit root seed")
    common.add_argument("--out", help="output directory (default: $DIFFLAB_OUT or ./difflab-out)")
    common.add_argument("--threads", type=int, help="worker cap for chain-parallel work")
    common.add_argument("--benchmark", help="population benchmark name (overrides config)")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="difflab", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"difflab {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("sample", parents=[common], help="reverse-diffusion sampling")
    s.add_argument("--lambda", dest="lam", type=float)
    s.add_argument("--steps", type=int)
    s.add_argument("--chains", type=int)
    s.add_argument("--t0", type=float)
    s.add_argument("--T", type=float)
    s.add_argument("--init", choices=[m.value for m in InitMode])
    s.add_argument("--denoiser", help="'oracle' or 'trained:PATH'")

    for name, help_ in [
        ("nll", "negative log-likelihood of given points"),
        ("mi", "mutual information I(y; z(t0))"),
        ("entropy", "differential entropy of the population"),
    ]:
        q = sub.add_parser(name, parents=[common], help=help_)
        q.add_argument("--t0", type=float)
        q.add_argument("--T", type=float)
        q.add_argument("--nodes", type=int)
        q.add_argument("--mc", dest="mc_samples", type=int, help="Monte Carlo draws per node")
        q.add_argument("--tail", choices=["analytic", "truncate"])
        q.add_argument(
            "--crn", action="store_true", default=None, help="common random numbers across nodes"
        )
        q.add_argument("--denoiser", help="'oracle' or 'trained:PATH'")
        if name == "nll":
            q.add_argument(
                "--y",
                action="append",
                type=_float_list,
                help="point to evaluate, comma-separated coordinates; repeatable",
            )
        if name == "entropy":
            q.add_argument("--n-y", dest="n_y", type=int)

    t = sub.add_parser("train", parents=[common], help="train a denoiser network")
    t.add_argument("--steps", type=int)
    t.add_argument("--batch", type=int)
    t.add_argument("--lr", type=float)
    t.add_argument("--arch", type=_int_list, help="layer sizes, e.g. 2,64,64,1")
    t.add_argument("--model", default="model.json", help="model file name inside --out")

    c = sub.add_parser("check", parents=[common], help="run numerical diagnostics")
    c.add_argument("--only", action="append", help="run only this check; repeatable")
    c.add_argument("--tolerance", type=float, help="override every tolerance")
    c.add_argument("--denoiser", help="'oracle' or 'trained:PATH' for the reverse check")
    c.add_argument("--steps", type=int, help="reverse-check grid steps")
    c.add_argument("--chains", type=int, help="reverse-check chain count")
    return p


def resolve_config(args: argparse.Namespace) -> RunConfig:
    """Load the config file and apply flag overrides (flags win)."""
    cfg = load_config(args.config)
    for name in ("seed", "out", "threads"):
        if getattr(args, name, None) is not None:
            setattr(cfg, name, getattr(args, name))
    if getattr(args, "benchmark", None):
        cfg.population.benchmark = args.benchmark
        cfg.population.weights = cfg.population.means = cfg.population.variances = None
        cfg.population.samples = None

    def put(section, attr, value):
        if value is not None:
            setattr(section, attr, value)

    cmd = args.command
    if cmd == "sample":
        put(cfg.sampler, "lam", args.lam)
        put(cfg.sampler, "chains", args.chains)
        put(cfg.sampler, "init", args.init)
        put(cfg.sampler, "denoiser", args.denoiser)
        put(cfg.grid, "steps", args.steps)
        put(cfg.grid, "t0", args.t0)
        put(cfg.grid, "T", args.T)
    elif cmd in ("nll", "mi", "entropy"):
        put(cfg.quadrature, "t0", args.t0)
        put(cfg.quadrature, "T", args.T)
        put(cfg.quadrature, "nodes", args.nodes)
        put(cfg.quadrature, "mc_samples", args.mc_samples)
        put(cfg.quadrature, "tail", args.tail)
        put(cfg.quadrature, "common_random_numbers", args.crn)
        put(cfg.sampler, "denoiser", args.denoiser)
        if cmd == "nll":
            put(cfg.likelihood, "y", args.y)
        if cmd == "entropy":
            put(cfg.likelihood, "n_y", args.n_y)
    elif cmd == "train":
        put(cfg.training, "steps", args.steps)
        put(cfg.training, "batch", args.batch)
        put(cfg.training, "lr", args.lr)
        put(cfg.training, "arch", args.arch)
    elif cmd == "check":
        put(cfg.check, "only", args.only)
        put(cfg.check, "tolerance", args.tolerance)
        put(cfg.sampler, "denoiser", args.denoiser)
        put(cfg.grid, "steps", args.steps)
        put(cfg.sampler, "chains", args.chains)
    validate(cfg)
    return cfg


def _mixture(cfg: RunConfig, what: str) -> GaussianMixture:
    pop = population_from_config(cfg)
    if not isinstance(pop, GaussianMixture):
        raise ConfigError(f"{what} needs a closed-form mixture population, not samples")
    return pop


def _denoiser(cfg: RunConfig, pop):
    spec = cfg.sampler.denoiser
    if spec == "oracle":
        if not isinstance(pop, GaussianMixture):
            raise ConfigError("the oracle denoiser needs a mixture population")
        return OracleDenoiser(pop)
    path = spec.split(":", 1)[1]
    try:
        d = TrainedDenoiser.load(path)
    except (OSError, ValueError, KeyError) as exc:
        raise ConfigError(f"cannot load trained denoiser {path}: {exc}") from None
    dim = pop.dim if isinstance(pop, GaussianMixture) else pop.shape[1]
    if d.dim != dim:
        raise ConfigError(f"trained denoiser has dim {d.dim}, population has dim {dim}")
    _warn_scale(pop)
    return d


def _warn_scale(pop) -> None:
    if isinstance(pop, GaussianMixture):
        second = pop.second_moment / pop.dim
    else:
        second = float(np.mean(np.sum(pop**2, axis=1))) / pop.shape[1]
    if second > SECOND_MOMENT_WARN:
        log.warning(
            "population second moment per coordinate is %.3g (> %g); the sqrt(1+t) input "
            "scaling assumes a unit-scale population",
            second,
            SECOND_MOMENT_WARN,
        )


def _quadrature(cfg: RunConfig, t0: float | None = None) -> QuadratureSpec:
    q = cfg.quadrature
    return QuadratureSpec(
        grid=make_grid(q.t0 if t0 is None else t0, q.T, q.nodes),
        mc_samples=q.mc_samples,
        tail_mode=q.tail,
        common_random_numbers=q.common_random_numbers,
    )


def _report(cfg: RunConfig, command: str, results: dict, started: float) -> dict:
    return {
        "command": command,
        "version": __version__,
        "seed": cfg.seed,
        "config": cfg.to_dict(),
        "results": results,
        "wall_time_s": time.perf_counter() - started,
    }


def cmd_sample(cfg: RunConfig, out: Path, started: float) -> int:
    pop = population_from_config(cfg)
    d = _denoiser(cfg, pop)
    if isinstance(pop, GaussianMixture):
        source = pop
        init = cfg.sampler.init or (
            "exact_noised" if cfg.sampler.denoiser == "oracle" else "wide_gaussian"
        )
    else:
        source = PopulationStats.from_samples(pop)
        init = cfg.sampler.init or "wide_gaussian"
        if init != "wide_gaussian":
            raise ConfigError("a samples population only supports init: wide_gaussian")
    g = cfg.grid
    scfg = SamplerConfig(
        make_grid(g.t0, g.T, g.steps), cfg.sampler.lam, cfg.sampler.chains, cfg.seed, init
    )
    z = sample_population(d, source, scfg, threads=cfg.threads)
    write_samples_csv(out / "samples.csv", z)
    results = {
        "sampler": scfg.to_dict(),
        "summary": sample_summary(z, pop if isinstance(pop, GaussianMixture) else None, g.t0),
    }
    if isinstance(pop, GaussianMixture):
        results["target"] = target_summary(pop, g.t0)
    write_json(out / "report.json", _report(cfg, "sample", results, started))
    return EXIT_OK


def cmd_nll(cfg: RunConfig, out: Path, started: float) -> int:
    m = _mixture(cfg, "nll")
    d = _denoiser(cfg, m)
    spec = _quadrature(cfg)
    points = []
    for i, y in enumerate(cfg.likelihood.y):
        y = np.atleast_1d(np.asarray(y, dtype=np.float64))
        if y.shape != (m.dim,):
            raise ConfigError(
                f"likelihood.y[{i}] has {y.size} coordinates, population dim is {m.dim}"
            )
        rep = nll(m, d, y, spec, make_rng(cfg.seed, "nll", i))
        points.append({"y": y, **rep.to_dict()})
    results = {"quadrature": spec.to_dict(), "points": points}
    write_json(out / "report.json", _report(cfg, "nll", results, started))
    return EXIT_OK


def cmd_mi(cfg: RunConfig, out: Path, started: float) -> int:
    m = _mixture(cfg, "mi")
    d = _denoiser(cfg, m)
    q = cfg.quadrature
    # a t0 at or past T is handled by information_grid, which extends the range
    spec = _quadrature(cfg, t0=min(q.t0, q.T / 10))
    rep = mutual_information_report(m, d, q.t0, spec, make_rng(cfg.seed, "mi"))
    results = {
        "quadrature": {**spec.to_dict(), "grid": information_grid(q.t0, spec).to_dict()},
        "mutual_information": rep.to_dict(),
    }
    write_json(out / "report.json", _report(cfg, "mi", results, started))
    return EXIT_OK


def cmd_entropy(cfg: RunConfig, out: Path, started: float) -> int:
    m = _mixture(cfg, "entropy")
    d = _denoiser(cfg, m)
    spec = _quadrature(cfg)
    lk = cfg.likelihood
    rep = entropy_report(m, d, spec, lk.n_y, make_rng(cfg.seed, "entropy"), lk.draws_per_y)
    results = {
        "quadrature": spec.to_dict(),
        "n_y": lk.n_y,
        "draws_per_y": lk.draws_per_y,
        "entropy": rep.to_dict(),
    }
    write_json(out / "report.json", _report(cfg, "entropy", results, started))
    return EXIT_OK


def cmd_train(cfg: RunConfig, out: Path, started: float, model_name: str = "model.json") -> int:
    pop = population_from_config(cfg)
    _warn_scale(pop)
    dim = pop.dim if isinstance(pop, GaussianMixture) else pop.shape[1]
    tr = cfg.training
    arch = tr.arch or [dim + 1, 64, 64, dim]
    try:
        model = train_denoiser(
            pop,
            arch,
            (float(tr.t_range[0]), float(tr.t_range[1])),
            tr.steps,
            tr.batch,
            make_rng(cfg.seed, "train"),
            lr=tr.lr,
            momentum=tr.momentum,
            activation=tr.activation,
            lr_end=tr.lr_end,
        )
    except ValueError as exc:
        if isinstance(exc, NonFiniteError):
            raise
        raise ConfigError(str(exc)) from None
    model.save(out / model_name)
    with open(out / "training_log.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["step", "loss"])
        for i, loss in enumerate(model.loss_history):
            w.writerow([i, repr(float(loss))])
    results = {"model": model_name, "arch": arch, "meta": model.meta}
    write_json(out / "report.json", _report(cfg, "train", results, started))
    return EXIT_OK


def cmd_check(cfg: RunConfig, out: Path, started: float) -> int:
    m = _mixture(cfg, "check")
    d = _denoiser(cfg, m) if cfg.sampler.denoiser != "oracle" else None
    tolerances = None
    if cfg.check.tolerance is not None:
        tolerances = {k: cfg.check.tolerance for k in DEFAULT_TOLERANCES}
    g = cfg.grid
    init = cfg.sampler.init or ("exact_noised" if d is None else "wide_gaussian")
    scfg = SamplerConfig(make_grid(g.t0, g.T, g.steps), 1.0, cfg.sampler.chains, cfg.seed, init)
    only = []
    for item in cfg.check.only or []:
        only.extend(s for s in str(item).split(",") if s)
    try:
        results = run_checks(m, cfg.seed, only or None, tolerances, d, scfg, cfg.threads)
    except KeyError as exc:
        raise ConfigError(str(exc.args[0])) from None
    doc = _report(
        cfg,
        "check",
        {
            "checks": [
                {"name": r.name, "passed": r.passed, "failures": r.failures, "details": r.details}
                for r in results
            ],
            "all_passed": all(r.passed for r in results),
        },
        started,
    )
    write_json(out / "diagnostics.json", doc)
    failures = [f for r in results for f in r.failures]
    for r in results:
        print(f"{'PASS' if r.passed else 'FAIL'} {r.name}")
    for f in failures:
        print(f"  {f}", file=sys.stderr)
    return EXIT_OK if not failures else EXIT_CHECK_FAILED


COMMANDS = {
    "sample": cmd_sample,
    "nll": cmd_nll,
    "mi": cmd_mi,
    "entropy": cmd_entropy,
    "train": cmd_train,
    "check": cmd_check,
}


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="difflab: %(levelname)s: %(message)s",
        stream=sys.stderr,
    )
    started = time.perf_counter()
    try:
        cfg = resolve_config(args)
        out = cfg.output_dir()
        out.mkdir(parents=True, exist_ok=True)
        if args.command == "train":
            return cmd_train(cfg, out, started, args.model)
        return COMMANDS[args.command](cfg, out, started)
    except NonFiniteError as exc:
        print(f"difflab: non-finite computation: {exc}", file=sys.stderr)
        return EXIT_NONFINITE
    except (DiffLabError, OSError) as exc:
        print(f"difflab: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
