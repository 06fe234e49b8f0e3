"""Gaussian log-likelihood of paired graph signals and its scores.

The observation model is y_k = h_theta(A) x_k + noise with i.i.d. Gaussian
measurement noise of known variance. The additive normalization constant of
the log-density is dropped throughout: it depends on neither the edge
variables nor theta, so every score and every posterior ratio is unchanged.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .filters import GraphFilter


@dataclass(frozen=True, eq=False)
class SignalSet:
    """K paired input/output signal columns and the noise variance.

    K = 0 is allowed and means "no data": the log-likelihood is identically
    zero, which is what prior-only sampling and the flat-likelihood oracle
    rely on.
    """

    inputs: np.ndarray
    outputs: np.ndarray
    noise_variance: float

    def __post_init__(self) -> None:
        X = np.asarray(self.inputs, dtype=float)
        Y = np.asarray(self.outputs, dtype=float)
        if X.ndim != 2 or Y.ndim != 2 or X.shape != Y.shape:
            raise ValueError(f"inputs {X.shape} and outputs {Y.shape} must be equal 2-d shapes")
        if self.noise_variance <= 0:
            raise ValueError(f"noise variance must be positive, got {self.noise_variance}")
        X = X.copy()
        Y = Y.copy()
        X.flags.writeable = False
        Y.flags.writeable = False
        object.__setattr__(self, "inputs", X)
        object.__setattr__(self, "outputs", Y)

    @property
    def n_nodes(self) -> int:
        return self.inputs.shape[0]

    @property
    def n_pairs(self) -> int:
        return self.inputs.shape[1]

    @classmethod
    def empty(cls, n_nodes: int, noise_variance: float) -> "SignalSet":
        return cls(np.zeros((n_nodes, 0)), np.zeros((n_nodes, 0)), noise_variance)


def _residuals(filt: GraphFilter, A: np.ndarray, signals: SignalSet) -> np.ndarray:
    if signals.n_nodes != A.shape[0]:
        raise ValueError(f"signals have {signals.n_nodes} nodes, adjacency {A.shape[0]}")
    return signals.outputs - filt.apply(A, signals.inputs)


def log_likelihood(filt: GraphFilter, A: np.ndarray, signals: SignalSet) -> float:
    """-(1/(2 sigma^2)) sum_k ||y_k - h_theta(A) x_k||^2, constant dropped."""
    R = _residuals(filt, A, signals)
    return float(-0.5 / signals.noise_variance * np.sum(R * R))


def score_edges(filt: GraphFilter, A: np.ndarray, signals: SignalSet) -> np.ndarray:
    """Gradient of the log-likelihood w.r.t. the half-vectorized edges.

    Returns the full half-vector; callers restrict to the unknown entries.
    """
    R = _residuals(filt, A, signals)
    return filt.edge_gradient_total(A, R, signals.inputs) / signals.noise_variance


def grad_theta(filt: GraphFilter, A: np.ndarray, signals: SignalSet) -> np.ndarray:
    """Gradient of the log-likelihood w.r.t. the filter parameters."""
    R = _residuals(filt, A, signals)
    return filt.theta_gradient_total(A, R, signals.inputs) / signals.noise_variance


def evaluate_all(
    filt: GraphFilter, A: np.ndarray, signals: SignalSet
) -> tuple[float, np.ndarray, np.ndarray]:
    """(log-likelihood, edge score, theta gradient) sharing one filter pass.

    Matches the three standalone functions exactly; exists because the
    sampler needs all of them every iteration.
    """
    from .graphs import num_pairs

    n = A.shape[0]
    if signals.n_pairs == 0:
        return 0.0, np.zeros(num_pairs(n)), np.zeros(len(filt.theta))
    hX = filt.apply(A, signals.inputs)
    R = signals.outputs - hX
    ll = float(-0.5 / signals.noise_variance * np.sum(R * R))
    es = filt.edge_gradient_total(A, R, signals.inputs) / signals.noise_variance
    tg = filt.theta_gradient_total(A, R, signals.inputs, hX=hX) / signals.noise_variance
    return ll, es, tg
