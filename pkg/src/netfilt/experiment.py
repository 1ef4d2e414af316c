"""Monte Carlo detection experiments: True / Filter / Direct mis-detection vs SNR.

Seeding: every random stage draws from ``substream(seed, stage, ...)``. Test
noise for replicate ``r`` is keyed by ``r`` alone, so all SNR levels, all
sample sizes and all three methods see the same noise draws (paired design).
"""
from __future__ import annotations

import hashlib
import io
import json
import math
from collections import defaultdict
from dataclasses import asdict, dataclass, field, fields
from typing import Iterable, NamedTuple

import numpy as np

from . import __version__, _rng
from .filter import detect_direct, filter_estimated, filter_ideal
from .graph import Graph, format_edge_list, generate
from .lasso import BACKEND, LassoEstimate, estimate_B
from .model import PrecisionModel, build_simple, build_weighted, cholesky, lambda_min
from .sampling import sample_training

METHOD_ORDER = ("true", "filter", "direct")


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    topology: str = "ba"
    p: int = 100
    d_bar: float = 4.0
    weight_mode: str = "simple"  # "simple" uses q; "beta" uses a, b
    q: float = 1.25
    a: float = 1.0
    b: float = 1.0
    sigma2: float = 1.0
    n: int = 50
    snr_grid: tuple = tuple(float(s) for s in range(1, 21))
    replicates: int = 30
    target_policy: str = "cycle"
    seed: int = 0
    mu_grid: tuple | None = None
    k: int = 5
    cv_mode: str = "per_row"
    enforce_pd: bool = True
    pd_floor: float = 0.01  # q shrink target for the simple model only
    refit_per_replicate: bool = False
    threads: int = 1
    name: str = "run"

    def __post_init__(self):
        self.snr_grid = tuple(float(s) for s in self.snr_grid)
        if self.mu_grid is not None:
            self.mu_grid = tuple(float(m) for m in self.mu_grid)
        self.validate()

    def validate(self):
        if self.topology not in ("er", "ba", "geometric"):
            raise ConfigError(f"unknown topology {self.topology!r}")
        if self.weight_mode not in ("simple", "beta"):
            raise ConfigError(f"unknown weight_mode {self.weight_mode!r}")
        if self.target_policy not in ("cycle", "uniform"):
            raise ConfigError(f"unknown target_policy {self.target_policy!r}")
        if self.replicates < 1:
            raise ConfigError("replicates must be at least 1")
        if any(s < 0 for s in self.snr_grid):
            raise ConfigError("snr values must be nonnegative")
        if self.n < self.k:
            raise ConfigError("n must be at least k")
        if not self.sigma2 > 0:
            raise ConfigError("sigma2 must be positive")

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        return cls(**d)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["snr_grid"] = list(self.snr_grid)
        d["mu_grid"] = None if self.mu_grid is None else list(self.mu_grid)
        return d


class Outcome(NamedTuple):
    method: str
    snr: float
    n: int
    hit: bool
    replicate: int = -1
    target: int = -1
    detected: int = -1


class ResultRow(NamedTuple):
    method: str
    snr: float
    n: int
    misdetect_rate: float
    std_error: float
    replicates: int


CSV_HEADER = "method,snr,n,misdetect_rate,std_error,replicates"


@dataclass
class ResultTable:
    rows: list

    def to_csv(self) -> str:
        out = io.StringIO()
        out.write(CSV_HEADER + "\n")
        for r in self.rows:
            out.write(f"{r.method},{r.snr!r},{r.n},{r.misdetect_rate!r},{r.std_error!r},{r.replicates}\n")
        return out.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "ResultTable":
        lines = [ln for ln in text.splitlines() if ln.strip()]
        if lines[0] != CSV_HEADER:
            raise ValueError("unexpected header")
        rows = []
        for ln in lines[1:]:
            m, s, n, rate, se, reps = ln.split(",")
            rows.append(ResultRow(m, float(s), int(n), float(rate), float(se), int(reps)))
        return cls(rows)

    def rate(self, method: str, snr: float, n: int | None = None) -> float:
        return self.get(method, snr, n).misdetect_rate

    def get(self, method: str, snr: float, n: int | None = None) -> ResultRow:
        for r in self.rows:
            if r.method == method and r.snr == snr and (n is None or r.n == n):
                return r
        raise KeyError((method, snr, n))

    def curve(self, method: str, n: int | None = None) -> list:
        return [r for r in self.rows if r.method == method and (n is None or r.n == n)]


def aggregate(outcomes: Iterable) -> ResultTable:
    """Mis-detection rate and standard error per ``(method, snr, n)``.

    The standard error is the sample standard deviation (divisor reps-1) of
    the 0/1 miss indicators over ``sqrt(reps)``; it is 0 for a single replicate.
    """
    groups = defaultdict(list)
    for o in outcomes:
        method, snr, n, hit = o[:4]
        groups[(method, float(snr), int(n))].append(0.0 if hit else 1.0)
    if not groups:
        raise ValueError("no outcomes to aggregate")

    def order(key):
        m = key[0]
        return (METHOD_ORDER.index(m) if m in METHOD_ORDER else len(METHOD_ORDER), m, key[1], key[2])

    rows = []
    for key in sorted(groups, key=order):
        miss = np.array(groups[key])
        reps = len(miss)
        se = float(miss.std(ddof=1) / math.sqrt(reps)) if reps > 1 else 0.0
        rows.append(ResultRow(key[0], key[1], key[2], float(miss.mean()), se, reps))
    return ResultTable(rows)


@dataclass
class ExperimentResult:
    table: ResultTable
    outcomes: list
    manifest: dict
    model: PrecisionModel
    estimates: dict = field(default_factory=dict)  # n -> LassoEstimate (first fit)

    def outcomes_csv(self) -> str:
        out = io.StringIO()
        out.write("method,snr,n,replicate,target,detected,hit\n")
        for o in self.outcomes:
            out.write(f"{o.method},{o.snr!r},{o.n},{o.replicate},{o.target},{o.detected},{int(o.hit)}\n")
        return out.getvalue()


def build_model(cfg: ExperimentConfig) -> PrecisionModel:
    g = generate(cfg.topology, cfg.p, cfg.d_bar, _rng.substream(cfg.seed, _rng.GRAPH))
    if cfg.weight_mode == "simple":
        return build_simple(g, cfg.q, cfg.sigma2, enforce_pd=cfg.enforce_pd, pd_floor=cfg.pd_floor)
    return build_weighted(g, cfg.a, cfg.b, cfg.sigma2, _rng.substream(cfg.seed, _rng.WEIGHTS))


def graph_digest(g: Graph) -> str:
    return hashlib.sha256(format_edge_list(g).encode()).hexdigest()


def _targets(cfg: ExperimentConfig, p: int) -> list[int]:
    if cfg.target_policy == "cycle":
        return [r % p for r in range(cfg.replicates)]
    return [int(_rng.substream(cfg.seed, _rng.TARGET, r).integers(p)) for r in range(cfg.replicates)]


def _noise(cfg: ExperimentConfig, p: int) -> np.ndarray:
    return np.stack([_rng.substream(cfg.seed, _rng.TEST, r).standard_normal(p)
                     for r in range(cfg.replicates)])


def _fit(cfg, model, factor, n, replicate=None) -> LassoEstimate:
    key = (n,) if replicate is None else (n, replicate + 1)
    Y = sample_training(model, n, _rng.substream(cfg.seed, _rng.TRAINING, *key), factor=factor)
    return estimate_B(Y, cfg.mu_grid, cfg.k, _rng.substream(cfg.seed, _rng.CV, *key),
                      mode=cfg.cv_mode, threads=cfg.threads)


def _score(cfg, model, factor, n, estimates_for):
    """Outcomes for one sample size; ``estimates_for(r)`` gives the fit used on replicate r."""
    K = np.linalg.inv(np.eye(model.p) - model.B)
    targets = _targets(cfg, model.p)
    noise = _noise(cfg, model.p) @ factor.T
    outcomes = []
    for r, (t, z) in enumerate(zip(targets, noise)):
        est = estimates_for(r)
        for snr in cfg.snr_grid:
            y = snr * K[:, t] + z
            for method, out in (("true", filter_ideal(model, y)),
                                ("filter", filter_estimated(est, y)),
                                ("direct", detect_direct(y))):
                d = out.detected_index
                outcomes.append(Outcome(method, snr, n, d == t, r, t, d))
    return outcomes


def _fit_summary(est: LassoEstimate) -> dict:
    return {
        "mu_min": float(est.mu_per_row.min()),
        "mu_median": float(np.median(est.mu_per_row)),
        "mu_max": float(est.mu_per_row.max()),
        "unconverged_rows": [int(i) for i in np.flatnonzero(~est.converged)],
    }


def run_sample_size_sweep(cfg: ExperimentConfig, n_values, model: PrecisionModel | None = None) -> ExperimentResult:
    """One graph and model; a fresh training set and fit for every ``n``."""
    model = build_model(cfg) if model is None else model
    factor = cholesky(model).sigma
    outcomes = []
    estimates = {}
    fits = {}
    for n in n_values:
        n = int(n)
        if n < cfg.k:
            raise ConfigError(f"n={n} is smaller than k={cfg.k}")
        if cfg.refit_per_replicate:
            per_rep = [_fit(cfg, model, factor, n, r) for r in range(cfg.replicates)]
            estimates[n] = per_rep[0]
            fits[n] = [_fit_summary(e) for e in per_rep]
            outcomes += _score(cfg, model, factor, n, per_rep.__getitem__)
        else:
            est = _fit(cfg, model, factor, n)
            estimates[n] = est
            fits[n] = _fit_summary(est)
            outcomes += _score(cfg, model, factor, n, lambda r, e=est: e)
    manifest = {
        "version": __version__,
        "kernel": BACKEND,
        "seed": cfg.seed,
        "config": cfg.to_dict(),
        "n_values": [int(n) for n in n_values],
        "graph_sha256": graph_digest(model.graph) if model.graph is not None else None,
        "n_edges": model.graph.n_edges if model.graph is not None else None,
        "model_params": model.params,
        "lambda_min_I_minus_B": lambda_min(model.B),
        "fits": {str(n): v for n, v in fits.items()},
    }
    return ExperimentResult(aggregate(outcomes), outcomes, manifest, model, estimates)


def run_experiment(cfg: ExperimentConfig, model: PrecisionModel | None = None) -> ExperimentResult:
    """Single sample size ``cfg.n``: one graph, one model, one training fit."""
    return run_sample_size_sweep(cfg, [cfg.n], model)


def manifest_json(manifest: dict) -> str:
    return json.dumps(manifest, indent=1, sort_keys=True)
