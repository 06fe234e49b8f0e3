"""Annealed prior-score providers s(a~, sigma) for the Langevin sampler.

Four interchangeable variants:

* ``ZeroScore`` -- the no-prior baseline.
* ``BernoulliScore(p)`` -- entrywise score of the Gaussian-smoothed i.i.d.
  Bernoulli edge density.
* ``EmpiricalScore(graphs)`` -- exact score of the Gaussian-smoothed
  empirical distribution of a same-size graph corpus (a kernel density
  estimate). This is the analytic limit of perfect denoising score-matching
  training, so it doubles as the reference for any learned network.
* ``LearnedScore(weights)`` -- inference-only forward pass of a small
  permutation-equivariant score network; weights come from the separate
  trainer through a versioned JSON file.

Every provider consumes the full noisy adjacency matrix (observed entries at
their exact binary values) and returns a half-vector score.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass

import numpy as np

from .graphs import check_adjacency, num_pairs, vech, vech_indices

WEIGHT_FORMAT_VERSION = 1


class WeightFileError(ValueError):
    """Malformed, version-mismatched, or shape-inconsistent weight file."""


def _check_sigma(sigma: float) -> float:
    if not sigma > 0:
        raise ValueError(f"noise level must be positive, got {sigma}")
    return float(sigma)


class ScoreProvider:
    """Interface: score(A~, sigma) -> half-vector approximating grad log p."""

    def score(self, A: np.ndarray, sigma: float) -> np.ndarray:
        raise NotImplementedError


class ZeroScore(ScoreProvider):
    """All-zero score: sampling driven by the likelihood alone."""

    def score(self, A: np.ndarray, sigma: float) -> np.ndarray:
        _check_sigma(sigma)
        return np.zeros(num_pairs(A.shape[0]))


@dataclass(frozen=True)
class BernoulliScore(ScoreProvider):
    """Entrywise score of q(t) = p N(t; 1, s^2) + (1-p) N(t; 0, s^2)."""

    p: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.p <= 1.0:
            raise ValueError(f"edge probability must lie in [0, 1], got {self.p}")

    def log_density(self, t: np.ndarray, sigma: float) -> np.ndarray:
        """Elementwise log q(t); exposed so tests can difference it."""
        sigma = _check_sigma(sigma)
        t = np.asarray(t, dtype=float)
        log_norm = -0.5 * math.log(2.0 * math.pi * sigma * sigma)
        with np.errstate(divide="ignore"):
            l1 = np.log(self.p) - 0.5 * ((t - 1.0) / sigma) ** 2 + log_norm
            l0 = np.log(1.0 - self.p) - 0.5 * (t / sigma) ** 2 + log_norm
        return np.logaddexp(l1, l0)

    def score(self, A: np.ndarray, sigma: float) -> np.ndarray:
        sigma = _check_sigma(sigma)
        r, c = vech_indices(A.shape[0])
        t = np.asarray(A, dtype=float)[r, c]
        with np.errstate(divide="ignore"):
            l1 = np.log(self.p) - 0.5 * ((t - 1.0) / sigma) ** 2
            l0 = np.log(1.0 - self.p) - 0.5 * (t / sigma) ** 2
        m = np.maximum(l1, l0)
        w1 = np.exp(l1 - m)
        w0 = np.exp(l0 - m)
        z = w1 + w0
        return (w1 * (1.0 - t) + w0 * (-t)) / (z * sigma * sigma)


@dataclass(frozen=True, eq=False)
class EmpiricalScore(ScoreProvider):
    """Exact score of the sigma-smoothed empirical graph distribution.

    All corpus members must match the target's node count; variable-size
    corpora are what the learned provider is for.
    """

    graphs: tuple[np.ndarray, ...]

    def __init__(self, graphs) -> None:
        members = tuple(check_adjacency(g) for g in graphs)
        if not members:
            raise ValueError("empirical score needs a non-empty graph corpus")
        n = members[0].shape[0]
        for k, g in enumerate(members):
            if g.shape[0] != n:
                raise ValueError(
                    f"corpus member {k} has {g.shape[0]} nodes, expected {n}; "
                    "the empirical provider requires a size-matched corpus"
                )
        object.__setattr__(self, "graphs", members)
        object.__setattr__(self, "_stack", np.stack([vech(g) for g in members]))

    @property
    def n_nodes(self) -> int:
        return self.graphs[0].shape[0]

    def log_density(self, a: np.ndarray, sigma: float) -> float:
        """log (1/M) sum_m N(a; a_m, sigma^2 I); exposed for tests."""
        sigma = _check_sigma(sigma)
        stack = self._stack
        d = stack.shape[1]
        sq = np.sum((stack - a[None, :]) ** 2, axis=1)
        logs = -0.5 * sq / (sigma * sigma)
        m = logs.max()
        lse = m + math.log(np.sum(np.exp(logs - m)))
        return float(
            lse - math.log(stack.shape[0]) - 0.5 * d * math.log(2.0 * math.pi * sigma * sigma)
        )

    def score(self, A: np.ndarray, sigma: float) -> np.ndarray:
        sigma = _check_sigma(sigma)
        if A.shape[0] != self.n_nodes:
            raise ValueError(
                f"target has {A.shape[0]} nodes but corpus members have {self.n_nodes}"
            )
        r, c = vech_indices(A.shape[0])
        a = np.asarray(A, dtype=float)[r, c]
        stack = self._stack
        diff = stack - a[None, :]
        logs = -0.5 * np.sum(diff * diff, axis=1) / (sigma * sigma)
        w = np.exp(logs - logs.max())
        w /= w.sum()
        return (w @ diff) / (sigma * sigma)


# -- learned score network --------------------------------------------------


@dataclass(frozen=True, eq=False)
class ScoreNetWeights:
    """Parameters of the equivariant score network.

    ``w_a[l]``/``w_s[l]`` mix neighbor-aggregated and self features at layer
    l; ``b[l]`` is the layer bias. The edge head maps per-pair features
    through one hidden tanh layer (``w1``, ``b1``) to a scalar (``w2``,
    ``b2``). Layer 0 consumes the two node features [1, degree/N].
    """

    w_a: tuple[np.ndarray, ...]
    w_s: tuple[np.ndarray, ...]
    b: tuple[np.ndarray, ...]
    w1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray
    b2: float
    version: int = WEIGHT_FORMAT_VERSION

    @property
    def n_layers(self) -> int:
        return len(self.w_a)

    @property
    def hidden_dim(self) -> int:
        return self.w_a[-1].shape[1]

    def validate(self) -> "ScoreNetWeights":
        if self.version != WEIGHT_FORMAT_VERSION:
            raise WeightFileError(
                f"unsupported weight format version {self.version}, "
                f"expected {WEIGHT_FORMAT_VERSION}"
            )
        L = self.n_layers
        if L < 1 or len(self.w_s) != L or len(self.b) != L:
            raise WeightFileError("w_a, w_s and b must have one entry per layer")
        d = self.hidden_dim
        in_dim = 2
        for l in range(L):
            for name, mat in (("w_a", self.w_a[l]), ("w_s", self.w_s[l])):
                if mat.shape != (in_dim, d):
                    raise WeightFileError(
                        f"{name}[{l}] has shape {mat.shape}, expected {(in_dim, d)}"
                    )
            if self.b[l].shape != (d,):
                raise WeightFileError(
                    f"b[{l}] has shape {self.b[l].shape}, expected {(d,)}"
                )
            in_dim = d
        if self.w1.shape != (d, 2 * d + 2):
            raise WeightFileError(
                f"w1 has shape {self.w1.shape}, expected {(d, 2 * d + 2)}"
            )
        if self.b1.shape != (d,):
            raise WeightFileError(f"b1 has shape {self.b1.shape}, expected {(d,)}")
        if self.w2.shape != (d,):
            raise WeightFileError(f"w2 has shape {self.w2.shape}, expected {(d,)}")
        arrays = [*self.w_a, *self.w_s, *self.b, self.w1, self.b1, self.w2]
        if not all(np.all(np.isfinite(a)) for a in arrays) or not math.isfinite(self.b2):
            raise WeightFileError("weight file contains non-finite values")
        return self


def scorenet_forward(weights: ScoreNetWeights, A: np.ndarray, sigma: float) -> np.ndarray:
    """Forward pass of the score network; permutation-equivariant.

    Node features start as [1, degree/N]; each layer mixes neighbor sums with
    self features under tanh; the edge head scores the symmetric pair feature
    [h_i * h_j, h_i + h_j, A_ij, log(1/sigma)] and the raw output is divided
    by sigma for noise conditioning.
    """
    sigma = _check_sigma(sigma)
    A = np.asarray(A, dtype=float)
    n = A.shape[0]
    H = np.column_stack([np.ones(n), A.sum(axis=1) / n])
    for l in range(weights.n_layers):
        H = np.tanh(A @ H @ weights.w_a[l] + H @ weights.w_s[l] + weights.b[l])
    r, c = vech_indices(n)
    u = np.concatenate(
        [
            H[r] * H[c],
            H[r] + H[c],
            A[r, c][:, None],
            np.full((len(r), 1), math.log(1.0 / sigma)),
        ],
        axis=1,
    )
    hidden = np.tanh(u @ weights.w1.T + weights.b1)
    raw = hidden @ weights.w2 + weights.b2
    return raw / sigma


@dataclass(frozen=True, eq=False)
class LearnedScore(ScoreProvider):
    """Score provider backed by a trained network's weights."""

    weights: ScoreNetWeights

    def score(self, A: np.ndarray, sigma: float) -> np.ndarray:
        return scorenet_forward(self.weights, A, sigma)


# -- weight file I/O ---------------------------------------------------------


def _as_array(obj, name: str, ndim: int) -> np.ndarray:
    try:
        arr = np.asarray(obj, dtype=float)
    except (TypeError, ValueError):
        raise WeightFileError(f"field {name!r} is not a numeric array") from None
    if arr.ndim != ndim:
        raise WeightFileError(f"field {name!r} has {arr.ndim} dimensions, expected {ndim}")
    return arr


def save_weights(weights: ScoreNetWeights, path: str | os.PathLike) -> None:
    """Write weights to the versioned JSON format (atomic replace)."""
    weights.validate()
    doc = {
        "version": weights.version,
        "l_net": weights.n_layers,
        "hidden_dim": weights.hidden_dim,
        "w_a": [m.tolist() for m in weights.w_a],
        "w_s": [m.tolist() for m in weights.w_s],
        "b": [v.tolist() for v in weights.b],
        "w1": weights.w1.tolist(),
        "b1": weights.b1.tolist(),
        "w2": weights.w2.tolist(),
        "b2": weights.b2,
    }
    tmp = f"{os.fspath(path)}.tmp"
    with open(tmp, "w") as fh:
        json.dump(doc, fh)
    os.replace(tmp, path)


def load_weights(path: str | os.PathLike) -> ScoreNetWeights:
    """Load and fully validate a weight file; never returns partial state."""
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise WeightFileError(f"{path}: not valid JSON ({exc})") from None
    if not isinstance(doc, dict):
        raise WeightFileError(f"{path}: top level must be an object")
    required = {"version", "l_net", "hidden_dim", "w_a", "w_s", "b", "w1", "b1", "w2", "b2"}
    missing = required - doc.keys()
    if missing:
        raise WeightFileError(f"{path}: missing fields {sorted(missing)}")
    if doc["version"] != WEIGHT_FORMAT_VERSION:
        raise WeightFileError(
            f"{path}: unsupported version {doc['version']}, expected {WEIGHT_FORMAT_VERSION}"
        )
    l_net = doc["l_net"]
    if not isinstance(l_net, int) or l_net < 1:
        raise WeightFileError(f"{path}: l_net must be a positive integer")
    for name in ("w_a", "w_s", "b"):
        if not isinstance(doc[name], list) or len(doc[name]) != l_net:
            raise WeightFileError(f"{path}: field {name!r} must list {l_net} layers")
    weights = ScoreNetWeights(
        w_a=tuple(_as_array(m, f"w_a[{l}]", 2) for l, m in enumerate(doc["w_a"])),
        w_s=tuple(_as_array(m, f"w_s[{l}]", 2) for l, m in enumerate(doc["w_s"])),
        b=tuple(_as_array(v, f"b[{l}]", 1) for l, v in enumerate(doc["b"])),
        w1=_as_array(doc["w1"], "w1", 2),
        b1=_as_array(doc["b1"], "b1", 1),
        w2=_as_array(doc["w2"], "w2", 1),
        b2=float(doc["b2"]),
        version=doc["version"],
    )
    if weights.hidden_dim != doc["hidden_dim"]:
        raise WeightFileError(
            f"{path}: hidden_dim {doc['hidden_dim']} does not match "
            f"matrix shapes ({weights.hidden_dim})"
        )
    try:
        return weights.validate()
    except WeightFileError as exc:
        raise WeightFileError(f"{path}: {exc}") from None
