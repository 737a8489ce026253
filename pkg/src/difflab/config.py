"""Run configuration for the command line.

A config file is YAML with the sections below; every key is optional and
unknown keys are rejected::

    seed: 0
    out: out
    threads: 1
    population:            # either the mixture fields, a benchmark, or samples
      weights: [0.5, 0.5]
      means: [[-2.0], [2.0]]
      variances: [0.25, 0.25]
      # benchmark: bimodal | standard_normal | bimodal_2d
      # samples: data.csv
    grid: {t0: 0.001, T: 400.0, steps: 256}
    sampler: {lambda: 1.0, chains: 100000, init: exact_noised, denoiser: oracle}
    quadrature: {t0: 0.001, T: 1000.0, nodes: 200, mc_samples: 10000,
                 tail: analytic, common_random_numbers: false}
    likelihood: {y: [[0.0]], n_y: 20000, draws_per_y: 1}
    training: {arch: [2, 64, 64, 1], steps: 200000, batch: 128, lr: 0.01,
               lr_end: 0.0001, momentum: 0.9, activation: tanh, t_range: [0.001, 400.0]}
    check: {only: [], tolerance: null}
"""

from __future__ import annotations

import dataclasses
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

import numpy as np
import yaml

from .errors import ConfigError, DiffLabError
from .population import GaussianMixture, bimodal, mixture_new, standard_normal

OUT_ENV = "DIFFLAB_OUT"
DEFAULT_OUT = "difflab-out"

BENCHMARKS = {
    "standard_normal": lambda: standard_normal(1),
    "bimodal": lambda: bimodal(1),
    "bimodal_2d": lambda: bimodal(2),
}


@dataclass
class PopulationSection:
    benchmark: Optional[str] = None
    dim: Optional[int] = None
    weights: Optional[list] = None
    means: Optional[list] = None
    variances: Optional[list] = None
    samples: Optional[str] = None


@dataclass
class GridSection:
    t0: float = 1e-3
    T: float = 400.0
    steps: int = 256


@dataclass
class SamplerSection:
    # YAML key is "lambda"; see _FIELD_ALIASES
    lam: float = 1.0
    chains: int = 100_000
    init: Optional[str] = None
    denoiser: str = "oracle"


@dataclass
class QuadratureSection:
    t0: float = 1e-3
    T: float = 1e3
    nodes: int = 200
    mc_samples: int = 10_000
    tail: str = "analytic"
    common_random_numbers: bool = False


@dataclass
class LikelihoodSection:
    y: list = field(default_factory=lambda: [[0.0]])
    n_y: int = 20_000
    draws_per_y: int = 1


@dataclass
class TrainingSection:
    arch: Optional[list] = None
    steps: int = 200_000
    batch: int = 128
    lr: float = 0.01
    lr_end: Optional[float] = 1e-4
    momentum: float = 0.9
    activation: str = "tanh"
    t_range: list = field(default_factory=lambda: [1e-3, 400.0])


@dataclass
class CheckSection:
    only: list = field(default_factory=list)
    tolerance: Optional[float] = None


@dataclass
class RunConfig:
    seed: int = 0
    out: Optional[str] = None
    threads: int = 1
    population: PopulationSection = field(default_factory=PopulationSection)
    grid: GridSection = field(default_factory=GridSection)
    sampler: SamplerSection = field(default_factory=SamplerSection)
    quadrature: QuadratureSection = field(default_factory=QuadratureSection)
    likelihood: LikelihoodSection = field(default_factory=LikelihoodSection)
    training: TrainingSection = field(default_factory=TrainingSection)
    check: CheckSection = field(default_factory=CheckSection)

    def to_dict(self) -> dict:
        return _unalias(dataclasses.asdict(self))

    def output_dir(self) -> Path:
        return Path(self.out or os.environ.get(OUT_ENV) or DEFAULT_OUT)


_FIELD_ALIASES = {"lambda": "lam"}


def _unalias(d: Any) -> Any:
    if isinstance(d, dict):
        back = {v: k for k, v in _FIELD_ALIASES.items()}
        return {back.get(k, k): _unalias(v) for k, v in d.items()}
    return d


def _build(cls, data: Any, where: str):
    if data is None:
        return cls()
    if not isinstance(data, dict):
        raise ConfigError(f"{where}: expected a mapping, got {type(data).__name__}")
    kwargs = {}
    fields = {f.name: f for f in dataclasses.fields(cls)}
    for key, value in data.items():
        name = _FIELD_ALIASES.get(key, key)
        if name not in fields or key in _FIELD_ALIASES.values():
            raise ConfigError(f"{where}: unknown key {key!r}")
        kwargs[name] = value
    return cls(**kwargs)


_SECTIONS = {
    "population": PopulationSection,
    "grid": GridSection,
    "sampler": SamplerSection,
    "quadrature": QuadratureSection,
    "likelihood": LikelihoodSection,
    "training": TrainingSection,
    "check": CheckSection,
}


def config_from_dict(data: dict | None) -> RunConfig:
    data = data or {}
    if not isinstance(data, dict):
        raise ConfigError("config must be a mapping at top level")
    top = {}
    for key, value in data.items():
        if key in _SECTIONS:
            top[key] = _build(_SECTIONS[key], value, key)
        elif key in ("seed", "out", "threads"):
            top[key] = value
        else:
            raise ConfigError(f"unknown top-level key {key!r}")
    cfg = RunConfig(**top)
    validate(cfg)
    return cfg


def load_config(path: str | Path | None) -> RunConfig:
    if path is None:
        return config_from_dict({})
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse config {path}: {exc}") from None
    return config_from_dict(data)


def _as_int(value) -> int:
    # exact for 64-bit seeds; float() would round them
    if isinstance(value, int):
        return value
    try:
        return int(str(value).strip())
    except ValueError:
        f = float(value)
        if f != int(f):
            raise
        return int(f)


def _coerce(obj, name: str, kind, where: str):
    value = getattr(obj, name)
    if value is None:
        return
    try:
        if kind is int:
            if isinstance(value, bool):
                raise ValueError
            value = _as_int(value)
        elif kind is float:
            value = float(value)
        elif kind is bool:
            if not isinstance(value, bool):
                raise ValueError
    except (TypeError, ValueError):
        raise ConfigError(f"{where}.{name}: expected {kind.__name__}, got {value!r}") from None
    setattr(obj, name, value)


def validate(cfg: RunConfig) -> None:
    """Coerce numeric fields and check ranges; raises :class:`ConfigError`."""
    _coerce(cfg, "seed", int, "config")
    _coerce(cfg, "threads", int, "config")
    if not 0 <= cfg.seed < 2**64:
        raise ConfigError(f"seed must fit in 64 bits, got {cfg.seed}")
    if cfg.threads < 1:
        raise ConfigError("threads must be >= 1")
    for name in ("t0", "T"):
        _coerce(cfg.grid, name, float, "grid")
        _coerce(cfg.quadrature, name, float, "quadrature")
    _coerce(cfg.grid, "steps", int, "grid")
    _coerce(cfg.sampler, "lam", float, "sampler")
    _coerce(cfg.sampler, "chains", int, "sampler")
    _coerce(cfg.quadrature, "nodes", int, "quadrature")
    _coerce(cfg.quadrature, "mc_samples", int, "quadrature")
    _coerce(cfg.quadrature, "common_random_numbers", bool, "quadrature")
    _coerce(cfg.likelihood, "n_y", int, "likelihood")
    _coerce(cfg.likelihood, "draws_per_y", int, "likelihood")
    for name in ("steps", "batch"):
        _coerce(cfg.training, name, int, "training")
    for name in ("lr", "lr_end", "momentum"):
        _coerce(cfg.training, name, float, "training")
    _coerce(cfg.check, "tolerance", float, "check")

    g = cfg.grid
    if not (0 < g.t0 < g.T) or g.steps < 1:
        raise ConfigError(f"grid: need 0 < t0 < T and steps >= 1, got {g}")
    q = cfg.quadrature
    if not (0 < q.t0) or not (q.T > 0) or q.nodes < 1 or q.mc_samples < 1:
        raise ConfigError(f"quadrature: invalid values {q}")
    if q.tail not in ("analytic", "truncate"):
        raise ConfigError(f"quadrature.tail must be analytic or truncate, got {q.tail!r}")
    s = cfg.sampler
    if not s.lam >= 0:
        raise ConfigError(f"sampler.lambda must be >= 0, got {s.lam}")
    if s.chains < 1:
        raise ConfigError("sampler.chains must be >= 1")
    if s.init not in (None, "exact_noised", "wide_gaussian"):
        raise ConfigError(f"sampler.init must be exact_noised or wide_gaussian, got {s.init!r}")
    if not (s.denoiser == "oracle" or s.denoiser.startswith("trained:")):
        raise ConfigError(
            f"sampler.denoiser must be 'oracle' or 'trained:PATH', got {s.denoiser!r}"
        )
    t = cfg.training
    bad_end = t.lr_end is not None and not t.lr_end > 0
    if t.steps < 0 or t.batch < 1 or not t.lr > 0 or bad_end:
        raise ConfigError(f"training: invalid values {t}")
    if len(t.t_range) != 2 or not (0 < float(t.t_range[0]) < float(t.t_range[1])):
        raise ConfigError(f"training.t_range must be [t0, T] with 0 < t0 < T, got {t.t_range}")
    if cfg.likelihood.n_y < 1 or cfg.likelihood.draws_per_y < 1:
        raise ConfigError("likelihood.n_y and likelihood.draws_per_y must be >= 1")
    if cfg.check.tolerance is not None and not cfg.check.tolerance > 0:
        raise ConfigError("check.tolerance must be > 0")


def population_from_config(cfg: RunConfig) -> GaussianMixture | np.ndarray:
    """Mixture, or a ``(n, dim)`` sample array when ``population.samples`` is set."""
    p = cfg.population
    given = [p.benchmark is not None, p.weights is not None, p.samples is not None]
    if sum(given) == 0:
        raise ConfigError(
            "no population given (set population.benchmark, mixture fields or samples)"
        )
    if sum(given) > 1:
        raise ConfigError("population: give exactly one of benchmark, mixture fields, samples")
    if p.benchmark is not None:
        if p.benchmark not in BENCHMARKS:
            raise ConfigError(
                f"unknown benchmark {p.benchmark!r}; choose from {sorted(BENCHMARKS)}"
            )
        return BENCHMARKS[p.benchmark]()
    if p.samples is not None:
        return read_samples_csv(p.samples)
    if p.means is None or p.variances is None:
        raise ConfigError("population: weights, means and variances must all be given")
    try:
        means = np.asarray(p.means, dtype=np.float64)
        dim = p.dim if p.dim is not None else (1 if means.ndim == 1 else means.shape[1])
        return mixture_new(dim, p.weights, means, p.variances)
    except (DiffLabError, ValueError) as exc:
        raise ConfigError(f"population: {exc}") from None


def read_samples_csv(path: str | Path) -> np.ndarray:
    """Read ``x0..x{d-1}`` columns (an optional ``chain`` column is ignored)."""
    try:
        with open(path) as fh:
            header = fh.readline().strip().split(",")
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    except (OSError, ValueError) as exc:
        raise ConfigError(f"cannot read samples {path}: {exc}") from None
    cols = [i for i, name in enumerate(header) if name.strip().startswith("x")]
    if not cols or len(data) == 0:
        raise ConfigError(f"samples file {path} has no x0.. columns or no rows")
    return data[:, cols]
