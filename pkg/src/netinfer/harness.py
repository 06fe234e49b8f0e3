"""Experiment orchestration: metrics, baselines, seeded benchmark sweeps.

A benchmark sweep runs three methods over a grid of K values with a fixed
number of seeded trials per cell. All methods in one (K, trial) cell consume
the *same* instance, so metric differences are attributable to the method
alone. Output is a flat CSV with one row per trial plus mean/stderr
aggregate rows per (method, K) cell; rows are sorted and floats written via
``repr``, so identical configurations produce byte-identical files.
"""

from __future__ import annotations

import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, fields
from functools import lru_cache
from pathlib import Path

import numpy as np

from .datasets import (
    ExperimentInstance,
    draw_theta,
    generate_ego_like,
    generate_grid,
    grid_shapes,
    make_filter,
)
from .graphs import AdjacencyState, partition_entries, round_project, unvech, vech_indices
from .likelihood import SignalSet, evaluate_all
from .priors import BernoulliScore, EmpiricalScore, ScoreProvider, ZeroScore
from .sampler import Adam, AnnealingSchedule, InferenceResult, run_inference

METHODS = ("langevin_prior", "langevin_noprior", "adam_mle")


def f1_score(true_bits: np.ndarray, predicted_bits: np.ndarray) -> float:
    """F1 with edges as the positive class; both-empty counts as perfect."""
    t = np.asarray(true_bits).astype(bool)
    p = np.asarray(predicted_bits).astype(bool)
    if t.shape != p.shape:
        raise ValueError(f"length mismatch: {t.shape} vs {p.shape}")
    tp = int(np.sum(t & p))
    fp = int(np.sum(~t & p))
    fn = int(np.sum(t & ~p))
    if tp + fp + fn == 0:
        return 1.0
    return 2.0 * tp / (2.0 * tp + fp + fn)


def theta_nrmse(theta_true: np.ndarray, theta_hat: np.ndarray) -> float:
    """||theta_hat - theta_true|| / ||theta_true||; undefined at zero truth."""
    t = np.asarray(theta_true, dtype=float)
    h = np.asarray(theta_hat, dtype=float)
    if t.shape != h.shape:
        raise ValueError(f"length mismatch: {t.shape} vs {h.shape}")
    norm = np.linalg.norm(t)
    if norm == 0.0:
        raise ValueError("theta_true has zero norm; the ratio is undefined")
    return float(np.linalg.norm(h - t) / norm)


def run_adam_mle_baseline(
    state: AdjacencyState,
    filt,
    signals: SignalSet,
    schedule: AnnealingSchedule,
    seed: int | np.random.Generator,
    freeze_theta: bool = False,
    adam_learning_rate: float = 0.01,
) -> InferenceResult:
    """Joint Adam ascent on the log-likelihood over (unknown edges, theta).

    Edge variables are clipped to [0, 1] after every step; the iteration
    budget equals the Langevin run (levels x steps). Same random
    initialization scheme as the sampler, so seeds are comparable.
    """
    n = state.n_nodes
    rng = np.random.default_rng(seed)
    unknown_idx = state.unknown_vech_indices()
    r, c = vech_indices(n)
    a = state.entries[r, c].astype(float)
    a[unknown_idx] = rng.uniform(0.0, 1.0, size=len(unknown_idx))
    theta = np.asarray(filt.theta, dtype=float).copy()
    if not freeze_theta:
        theta = filt.initial_theta(rng)
    filt = filt.with_theta(theta)

    n_u = len(unknown_idx)
    adam = Adam(n_u + (0 if freeze_theta else len(theta)), learning_rate=adam_learning_rate)
    total_steps = schedule.n_levels * schedule.steps_per_level
    trace = []
    for step in range(total_steps):
        ll, edge_score, theta_grad = evaluate_all(filt, unvech(a, n), signals)
        if freeze_theta:
            grad = -edge_score[unknown_idx]
            packed = adam.step(a[unknown_idx], grad)
            a[unknown_idx] = np.clip(packed, 0.0, 1.0)
        else:
            grad = -np.concatenate([edge_score[unknown_idx], theta_grad])
            packed = adam.step(np.concatenate([a[unknown_idx], theta]), grad)
            a[unknown_idx] = np.clip(packed[:n_u], 0.0, 1.0)
            theta = packed[n_u:]
            filt = filt.with_theta(theta)
        if (step + 1) % schedule.steps_per_level == 0:
            trace.append(ll)

    continuous = unvech(a, n)
    return InferenceResult(
        adjacency=round_project(continuous),
        theta=theta,
        continuous=continuous,
        loglik_trace=tuple(trace),
    )


# -- benchmark configuration ----------------------------------------------------


@dataclass(frozen=True)
class BenchmarkConfig:
    generator: str = "grid"
    n_min: int = 12
    n_max: int = 20
    grid_min_side: int = 3
    extra_edges_min: int = 2
    extra_edges_max: int = 5
    ego_attachment: int = 2
    family: str = "polynomial"
    order: int = 2
    theta_min: float = -0.1
    theta_max: float = 0.1
    k_grid: tuple[int, ...] = (1, 2, 4, 8)
    unknown_fraction: float = 0.25
    noise_variance: float = 1.0
    trials: int = 50
    seed_base: int = 0
    prior: str = "empirical"
    prior_corpus_size: int = 200
    sigma_first: float = 0.5
    sigma_last: float = 0.03
    levels: int = 10
    steps_per_level: int = 300
    step_size: float = 1e-6
    temperature: float = 0.5
    adam_lr: float = 0.01
    methods: tuple[str, ...] = METHODS
    output: str = "benchmark.csv"
    workers: int = 1
    measure_wall_time: bool = False

    def schedule(self) -> AnnealingSchedule:
        return AnnealingSchedule(
            noise_levels=np.linspace(self.sigma_first, self.sigma_last, self.levels),
            steps_per_level=self.steps_per_level,
            step_size=self.step_size,
            temperature=self.temperature,
        )

    def validate(self) -> "BenchmarkConfig":
        problems = []
        if self.generator not in ("grid", "ego"):
            problems.append(f"generator must be grid or ego, got {self.generator!r}")
        if self.family not in ("polynomial", "heat"):
            problems.append(f"family must be polynomial or heat, got {self.family!r}")
        if not 2 <= self.n_min <= self.n_max:
            problems.append(f"need 2 <= n_min <= n_max, got [{self.n_min}, {self.n_max}]")
        if not 0.0 <= self.unknown_fraction <= 1.0:
            problems.append(f"unknown_fraction outside [0, 1]: {self.unknown_fraction}")
        if self.noise_variance <= 0:
            problems.append(f"noise_variance must be positive: {self.noise_variance}")
        if not self.k_grid or any(k < 0 for k in self.k_grid):
            problems.append(f"k_grid must be nonnegative integers: {self.k_grid}")
        if self.trials < 0:
            problems.append(f"trials must be nonnegative: {self.trials}")
        if not (self.prior in ("empirical", "zero") or self.prior.startswith("bernoulli:")):
            problems.append(f"prior must be empirical, zero, or bernoulli:<p>: {self.prior!r}")
        if self.prior.startswith("bernoulli:"):
            try:
                p = float(self.prior.split(":", 1)[1])
                if not 0.0 <= p <= 1.0:
                    raise ValueError
            except ValueError:
                problems.append(f"bad bernoulli prior spec {self.prior!r}")
        unknown_methods = set(self.methods) - set(METHODS)
        if unknown_methods:
            problems.append(f"unknown methods {sorted(unknown_methods)}; valid: {METHODS}")
        if not 0 < self.sigma_last < self.sigma_first:
            problems.append(
                f"need 0 < sigma_last < sigma_first, got {self.sigma_last}, {self.sigma_first}"
            )
        if self.levels < 1 or self.steps_per_level < 1:
            problems.append("levels and steps_per_level must be at least 1")
        if self.step_size <= 0 or self.temperature < 0 or self.adam_lr <= 0:
            problems.append("step_size and adam_lr must be positive, temperature nonnegative")
        if self.workers < 1:
            problems.append(f"workers must be at least 1: {self.workers}")
        if problems:
            raise ValueError("invalid benchmark config:\n  " + "\n  ".join(problems))
        return self


_CONFIG_TYPES = {f.name: f.type for f in fields(BenchmarkConfig)}


def _parse_value(key: str, raw: str):
    kind = _CONFIG_TYPES[key]
    if kind in ("int",):
        return int(raw)
    if kind in ("float",):
        return float(raw)
    if kind == "bool":
        if raw.lower() in ("true", "1", "yes", "on"):
            return True
        if raw.lower() in ("false", "0", "no", "off"):
            return False
        raise ValueError(f"bad boolean {raw!r}")
    if kind == "tuple[int, ...]":
        return tuple(int(tok) for tok in raw.replace(",", " ").split())
    if kind == "tuple[str, ...]":
        return tuple(tok for tok in raw.replace(",", " ").split())
    return raw


def parse_config_text(text: str, source: str = "<config>") -> dict:
    """Parse the flat ``key = value`` config format; '#' starts a comment."""
    values = {}
    problems = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            problems.append(f"{source}:{lineno}: expected 'key = value', got {line!r}")
            continue
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if key not in _CONFIG_TYPES:
            problems.append(f"{source}:{lineno}: unknown key {key!r}")
            continue
        try:
            values[key] = _parse_value(key, value)
        except ValueError as exc:
            problems.append(f"{source}:{lineno}: bad value for {key}: {exc}")
    if problems:
        raise ValueError("invalid config file:\n  " + "\n  ".join(problems))
    return values


def load_config(path, overrides: dict | None = None) -> BenchmarkConfig:
    values = parse_config_text(Path(path).read_text(), source=str(path)) if path else {}
    if overrides:
        values.update(overrides)
    return BenchmarkConfig(**values).validate()


# -- instance and prior construction --------------------------------------------


def _truth_graph(cfg: BenchmarkConfig, rng: np.random.Generator) -> np.ndarray:
    if cfg.generator == "grid":
        shapes = grid_shapes(cfg.n_min, cfg.n_max, cfg.grid_min_side)
        h, w = shapes[rng.integers(len(shapes))]
        extra = int(rng.integers(cfg.extra_edges_min, cfg.extra_edges_max + 1))
        return generate_grid(h, w, extra, rng)
    n = int(rng.integers(cfg.n_min, cfg.n_max + 1))
    attachment = int(rng.integers(1, cfg.ego_attachment + 1))
    return generate_ego_like(n, attachment, rng)


def build_trial_instance(cfg: BenchmarkConfig, K: int, trial: int) -> ExperimentInstance:
    """The shared instance of one (K, trial) cell, fully seed-determined.

    Cells of the same trial share the graph, the mask, theta, and a common
    signal pool: the K columns are a prefix of the max(k_grid) draw. Pairing
    the K sweep this way removes between-instance noise from adjacent-K
    comparisons, so trend estimates need far fewer trials.
    """
    children = np.random.SeedSequence([cfg.seed_base, 1, trial]).spawn(4)
    truth = _truth_graph(cfg, np.random.default_rng(children[0]))
    n = truth.shape[0]
    _, unknown = partition_entries(
        n, cfg.unknown_fraction, int(np.random.default_rng(children[1]).integers(2**31))
    )
    theta = draw_theta(
        cfg.family, np.random.default_rng(children[2]), (cfg.theta_min, cfg.theta_max), cfg.order
    )
    filt = make_filter(cfg.family, theta)
    k_max = max(max(cfg.k_grid), K)
    rng = np.random.default_rng(children[3])
    X = rng.uniform(-10.0, 10.0, size=(n, k_max))
    noise = rng.normal(0.0, np.sqrt(cfg.noise_variance), size=(n, k_max))
    Y = filt.apply(truth, X) + noise
    signals = SignalSet(X[:, :K], Y[:, :K], cfg.noise_variance)
    return ExperimentInstance(
        truth=truth,
        state=AdjacencyState.from_truth(truth, unknown),
        family=cfg.family,
        theta=theta,
        signals=signals,
        provenance=f"{cfg.generator}:seed_base={cfg.seed_base}:K={K}:trial={trial}",
    )


def _size_matched_corpus(cfg: BenchmarkConfig, n: int) -> tuple[np.ndarray, ...]:
    """Prior corpus of cfg.prior_corpus_size graphs with exactly n nodes."""
    rng = np.random.default_rng(np.random.SeedSequence([cfg.seed_base, 2, n]))
    graphs = []
    if cfg.generator == "grid":
        shapes = [s for s in grid_shapes(cfg.n_min, cfg.n_max, cfg.grid_min_side) if s[0] * s[1] == n]
        if not shapes:
            raise ValueError(f"no grid shapes of size {n} available for the prior corpus")
        for _ in range(cfg.prior_corpus_size):
            h, w = shapes[rng.integers(len(shapes))]
            extra = int(rng.integers(cfg.extra_edges_min, cfg.extra_edges_max + 1))
            graphs.append(generate_grid(h, w, extra, rng))
    else:
        for _ in range(cfg.prior_corpus_size):
            attachment = int(rng.integers(1, cfg.ego_attachment + 1))
            graphs.append(generate_ego_like(n, attachment, rng))
    return tuple(graphs)


@lru_cache(maxsize=32)
def _cached_prior(cfg: BenchmarkConfig, n: int) -> ScoreProvider:
    if cfg.prior == "zero":
        return ZeroScore()
    if cfg.prior.startswith("bernoulli:"):
        return BernoulliScore(float(cfg.prior.split(":", 1)[1]))
    return EmpiricalScore(_size_matched_corpus(cfg, n))


@dataclass(frozen=True)
class TrialRecord:
    method: str
    K: int
    seed: int
    f1: float
    theta_nrmse: float
    wall_ms: float


def run_trial(cfg: BenchmarkConfig, method: str, K: int, trial: int) -> TrialRecord:
    instance = build_trial_instance(cfg, K, trial)
    schedule = cfg.schedule()
    run_seed = np.random.SeedSequence([cfg.seed_base, 3, K, trial, METHODS.index(method)])
    rng = np.random.default_rng(run_seed)
    start = time.perf_counter() if cfg.measure_wall_time else 0.0
    if method == "adam_mle":
        result = run_adam_mle_baseline(
            instance.state, instance.true_filter(), instance.signals, schedule, rng,
            adam_learning_rate=cfg.adam_lr,
        )
    else:
        prior = _cached_prior(cfg, instance.n_nodes) if method == "langevin_prior" else ZeroScore()
        result = run_inference(
            instance.state, instance.true_filter(), instance.signals, prior, schedule, rng,
            adam_learning_rate=cfg.adam_lr,
        )
    wall_ms = (time.perf_counter() - start) * 1e3 if cfg.measure_wall_time else 0.0
    idx = instance.state.unknown_vech_indices()
    r, c = vech_indices(instance.n_nodes)
    predicted = result.adjacency[r, c][idx]
    f1 = f1_score(instance.unknown_truth_bits(), predicted)
    nrmse = theta_nrmse(instance.theta, result.theta)
    return TrialRecord(method=method, K=K, seed=trial, f1=f1, theta_nrmse=nrmse, wall_ms=wall_ms)


def _run_trial_tuple(args) -> TrialRecord:
    return run_trial(*args)


def run_benchmark(cfg: BenchmarkConfig, progress=None) -> list[TrialRecord]:
    """All (method, K, trial) cells of the sweep, in deterministic order."""
    cfg.validate()
    tasks = [
        (cfg, method, K, trial)
        for method in cfg.methods
        for K in cfg.k_grid
        for trial in range(cfg.trials)
    ]
    records = []
    if cfg.workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            for rec in pool.map(_run_trial_tuple, tasks, chunksize=4):
                records.append(rec)
                if progress:
                    progress(rec)
    else:
        for task in tasks:
            rec = _run_trial_tuple(task)
            records.append(rec)
            if progress:
                progress(rec)
    records.sort(key=lambda r: (r.method, r.K, r.seed))
    return records


def aggregate(records: list[TrialRecord]) -> dict[tuple[str, int], dict[str, float]]:
    """Per-(method, K) mean and standard error of both metrics."""
    cells: dict[tuple[str, int], list[TrialRecord]] = {}
    for rec in records:
        cells.setdefault((rec.method, rec.K), []).append(rec)
    out = {}
    for key, recs in sorted(cells.items()):
        f1s = np.array([r.f1 for r in recs])
        nrm = np.array([r.theta_nrmse for r in recs])
        wall = np.array([r.wall_ms for r in recs])
        n = len(recs)
        out[key] = {
            "f1_mean": float(f1s.mean()),
            "f1_stderr": float(f1s.std(ddof=1) / np.sqrt(n)) if n > 1 else 0.0,
            "nrmse_mean": float(nrm.mean()),
            "nrmse_stderr": float(nrm.std(ddof=1) / np.sqrt(n)) if n > 1 else 0.0,
            "wall_mean": float(wall.mean()),
            "wall_stderr": float(wall.std(ddof=1) / np.sqrt(n)) if n > 1 else 0.0,
        }
    return out


CSV_HEADER = "method,K,seed,f1,theta_nrmse,wall_ms"


def format_csv(records: list[TrialRecord]) -> str:
    """Per-trial rows plus mean/stderr aggregate rows, stable byte-for-byte."""
    lines = [CSV_HEADER]
    for r in sorted(records, key=lambda r: (r.method, r.K, r.seed)):
        lines.append(
            f"{r.method},{r.K},{r.seed},{r.f1!r},{r.theta_nrmse!r},{r.wall_ms!r}"
        )
    for (method, K), agg in aggregate(records).items():
        lines.append(
            f"{method},{K},mean,{agg['f1_mean']!r},{agg['nrmse_mean']!r},{agg['wall_mean']!r}"
        )
        lines.append(
            f"{method},{K},stderr,{agg['f1_stderr']!r},{agg['nrmse_stderr']!r},{agg['wall_stderr']!r}"
        )
    return "\n".join(lines) + "\n"


def write_csv(records: list[TrialRecord], path) -> None:
    Path(path).write_text(format_csv(records))
