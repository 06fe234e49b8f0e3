"""Joint annealed-Langevin / Adam inference and its brute-force oracle.

One run alternates a ULA step on the unknown half-vector entries with one
Adam step on the filter parameters, over a ladder of decreasing noise
levels. Observed entries are pinned to their binary values before the loop
and never touched; the continuous iterate is projected onto {0,1} only at
the very end. ``enumerate_posterior`` computes the exact discrete posterior
over all completions for small unknown sets and is the correctness oracle
for the sampling path.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .filters import GraphFilter
from .graphs import (
    AdjacencyState,
    n_nodes_from_length,
    round_project,
    unvech,
    vech_indices,
    vech_pairs,
)
from .likelihood import SignalSet, evaluate_all, log_likelihood
from .priors import EmpiricalScore, ScoreProvider


class DivergenceError(RuntimeError):
    """Raised when a non-finite quantity appears inside a run."""


@dataclass(frozen=True)
class AnnealingSchedule:
    """Noise ladder and step parameters for the annealed dynamics.

    ``noise_levels`` must be strictly decreasing and positive; the per-level
    step size is step_size * sigma_l^2 / sigma_L^2.
    """

    noise_levels: np.ndarray
    steps_per_level: int = 300
    step_size: float = 1e-6
    temperature: float = 0.5

    def __post_init__(self) -> None:
        levels = np.asarray(self.noise_levels, dtype=float).copy()
        if levels.ndim != 1 or len(levels) < 1:
            raise ValueError("noise_levels must be a non-empty 1-d sequence")
        if not np.all(levels > 0):
            raise ValueError("noise levels must be positive")
        if not np.all(np.diff(levels) < 0) and len(levels) > 1:
            raise ValueError("noise levels must be strictly decreasing")
        if self.steps_per_level < 1:
            raise ValueError("steps_per_level must be at least 1")
        if self.step_size <= 0:
            raise ValueError("step_size must be positive")
        if self.temperature < 0:
            raise ValueError("temperature must be nonnegative")
        levels.flags.writeable = False
        object.__setattr__(self, "noise_levels", levels)

    @property
    def n_levels(self) -> int:
        return len(self.noise_levels)

    def alpha(self, level: int) -> float:
        """Step size at the given level index, eps * sigma_l^2 / sigma_L^2."""
        s = self.noise_levels
        return float(self.step_size * s[level] ** 2 / s[-1] ** 2)

    @classmethod
    def default(cls, **overrides) -> "AnnealingSchedule":
        """Ten levels evenly spaced 0.5 -> 0.03, T=300, eps=1e-6, tau=0.5."""
        params = dict(
            noise_levels=np.linspace(0.5, 0.03, 10),
            steps_per_level=300,
            step_size=1e-6,
            temperature=0.5,
        )
        params.update(overrides)
        return cls(**params)


class Adam:
    """Plain Adam minimizer with bias correction, one parameter vector."""

    def __init__(
        self,
        n_params: int,
        learning_rate: float = 0.01,
        beta1: float = 0.9,
        beta2: float = 0.999,
        eps: float = 1e-8,
    ) -> None:
        self.learning_rate = learning_rate
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.m = np.zeros(n_params)
        self.v = np.zeros(n_params)
        self.t = 0

    def step(self, params: np.ndarray, grad: np.ndarray) -> np.ndarray:
        """One update minimizing the loss whose gradient is ``grad``."""
        grad = np.asarray(grad, dtype=float)
        if not np.all(np.isfinite(grad)):
            raise DivergenceError(f"non-finite gradient at Adam step {self.t + 1}")
        self.t += 1
        self.m = self.beta1 * self.m + (1.0 - self.beta1) * grad
        self.v = self.beta2 * self.v + (1.0 - self.beta2) * grad * grad
        m_hat = self.m / (1.0 - self.beta1**self.t)
        v_hat = self.v / (1.0 - self.beta2**self.t)
        return params - self.learning_rate * m_hat / (np.sqrt(v_hat) + self.eps)


@dataclass(frozen=True, eq=False)
class InferenceResult:
    """Output of one joint run: projected graph, parameters, diagnostics."""

    adjacency: np.ndarray
    theta: np.ndarray
    continuous: np.ndarray
    loglik_trace: tuple[float, ...]


def posterior_delta(
    a: np.ndarray,
    filt: GraphFilter,
    signals: SignalSet,
    prior: ScoreProvider,
    sigma: float,
) -> tuple[float, np.ndarray, np.ndarray]:
    """(log-likelihood, posterior edge score, theta gradient) at a~.

    The edge score is the full half-vector sum of the likelihood score and
    the annealed prior score; callers mask to the unknown entries.
    """
    n = n_nodes_from_length(len(a))
    A = unvech(a, n)
    ll, edge_score, theta_grad = evaluate_all(filt, A, signals)
    return ll, edge_score + prior.score(A, sigma), theta_grad


def langevin_step(
    a: np.ndarray,
    unknown_idx: np.ndarray,
    filt: GraphFilter,
    signals: SignalSet,
    prior: ScoreProvider,
    sigma: float,
    alpha: float,
    tau: float,
    rng: np.random.Generator,
) -> np.ndarray:
    """One ULA update of the unknown entries; observed entries untouched.

    One Gaussian draw per unordered pair keeps the implied matrix symmetric.
    """
    _, delta, _ = posterior_delta(a, filt, signals, prior, sigma)
    if not np.all(np.isfinite(delta[unknown_idx])):
        raise DivergenceError("non-finite Langevin drift")
    out = a.copy()
    z = rng.standard_normal(len(unknown_idx))
    out[unknown_idx] += alpha * delta[unknown_idx] + math.sqrt(2.0 * alpha * tau) * z
    return out


def run_inference(
    state: AdjacencyState,
    filt: GraphFilter,
    signals: SignalSet,
    prior: ScoreProvider,
    schedule: AnnealingSchedule,
    seed: int | np.random.Generator,
    freeze_theta: bool = False,
    adam_learning_rate: float = 0.01,
) -> InferenceResult:
    """Joint annealed-Langevin (edges) / Adam (parameters) inference.

    Unknown entries start Uniform[0,1]; theta starts Normal(0, 0.1^2) unless
    ``freeze_theta`` keeps the passed filter's parameters fixed. Deterministic
    for a given integer seed.
    """
    n = state.n_nodes
    if signals.n_pairs and signals.n_nodes != n:
        raise ValueError(f"signals have {signals.n_nodes} nodes, state has {n}")
    rng = np.random.default_rng(seed)
    unknown_idx = state.unknown_vech_indices()

    r, c = vech_indices(n)
    a = state.entries[r, c].astype(float)
    a[unknown_idx] = rng.uniform(0.0, 1.0, size=len(unknown_idx))

    theta = np.asarray(filt.theta, dtype=float).copy()
    if not freeze_theta:
        theta = filt.initial_theta(rng)
    filt = filt.with_theta(theta)

    adam = Adam(len(theta), learning_rate=adam_learning_rate)
    tau = schedule.temperature
    trace: list[float] = []
    for level in range(schedule.n_levels):
        sigma = float(schedule.noise_levels[level])
        alpha = schedule.alpha(level)
        noise_scale = math.sqrt(2.0 * alpha * tau)
        for step in range(schedule.steps_per_level):
            ll, delta, theta_grad = posterior_delta(a, filt, signals, prior, sigma)
            if not np.all(np.isfinite(delta[unknown_idx])):
                raise DivergenceError(
                    f"non-finite Langevin drift at level {level + 1}, step {step + 1}"
                )
            z = rng.standard_normal(len(unknown_idx))
            a[unknown_idx] += alpha * delta[unknown_idx] + noise_scale * z
            if not freeze_theta:
                theta = adam.step(theta, -theta_grad)
                filt = filt.with_theta(theta)
        trace.append(ll)

    continuous = unvech(a, n)
    adjacency = round_project(continuous)
    return InferenceResult(
        adjacency=adjacency,
        theta=theta,
        continuous=continuous,
        loglik_trace=tuple(trace),
    )


# -- exact enumeration oracle -------------------------------------------------

MAX_ENUMERATION_UNKNOWNS = 16


@dataclass(frozen=True, eq=False)
class PosteriorTable:
    """Exact posterior over all binary completions of the unknown entries."""

    pairs: tuple[tuple[int, int], ...]
    configs: np.ndarray
    probabilities: np.ndarray

    def mode(self) -> tuple[np.ndarray, float]:
        k = int(np.argmax(self.probabilities))
        return self.configs[k], float(self.probabilities[k])


def _bernoulli_log_mass(edges: float, u: int, p: float) -> float:
    if p == 0.0:
        return 0.0 if edges == 0 else -math.inf
    if p == 1.0:
        return 0.0 if edges == u else -math.inf
    return edges * math.log(p) + (u - edges) * math.log(1.0 - p)


def enumerate_posterior(
    state: AdjacencyState,
    filt: GraphFilter,
    signals: SignalSet,
    bernoulli_p: float | None = None,
    dataset: tuple[np.ndarray, ...] | list[np.ndarray] | None = None,
) -> PosteriorTable:
    """Exact posterior table over the 2^|unknown| binary completions.

    The prior over completions is either i.i.d. Bernoulli(p) per unknown
    entry or the Laplace-smoothed relative frequency of the full graph in a
    same-size dataset, (count + 1)/(M + 2). theta is taken from ``filt`` as
    known. Probabilities are normalized to sum to one.
    """
    if (bernoulli_p is None) == (dataset is None):
        raise ValueError("specify exactly one of bernoulli_p or dataset")
    n = state.n_nodes
    pairs_all = vech_pairs(n)
    unknown_idx = state.unknown_vech_indices()
    u = len(unknown_idx)
    if u > MAX_ENUMERATION_UNKNOWNS:
        raise ValueError(
            f"enumeration over {u} unknowns exceeds the 2^{MAX_ENUMERATION_UNKNOWNS} bound"
        )

    r, c = vech_indices(n)
    base = state.entries[r, c].astype(float)
    stack = None
    if dataset is not None:
        emp = EmpiricalScore(dataset)
        if emp.n_nodes != n:
            raise ValueError("dataset members must match the target's node count")
        stack = emp._stack
        m_total = stack.shape[0]

    configs = np.array(list(itertools.product((0.0, 1.0), repeat=u)), dtype=float)
    if u == 0:
        configs = np.zeros((1, 0))
    log_post = np.empty(len(configs))
    for k, cfg in enumerate(configs):
        a = base.copy()
        a[unknown_idx] = cfg
        ll = log_likelihood(filt, unvech(a, n), signals) if signals.n_pairs else 0.0
        if bernoulli_p is not None:
            lp = _bernoulli_log_mass(float(cfg.sum()), u, bernoulli_p)
        else:
            count = int(np.sum(np.all(stack == a[None, :], axis=1)))
            lp = math.log((count + 1.0) / (m_total + 2.0))
        log_post[k] = ll + lp

    log_post -= log_post.max()
    probs = np.exp(log_post)
    probs /= probs.sum()
    return PosteriorTable(
        pairs=tuple(pairs_all[i] for i in unknown_idx),
        configs=configs,
        probabilities=probs,
    )
