"""Parametric graph-filter families and their exact gradients.

Two families are built in: a polynomial in the adjacency matrix and a heat
diffusion exp(-theta * L). Both expose the value h_theta(A), its action on a
signal, and analytic derivatives with respect to the half-vectorized edge
variables and the filter parameters. A filter defined by subclassing
``GraphFilter`` with only ``matrix`` implemented falls back to central
finite differences for both gradients, so any differentiable family plugs
into the sampler unchanged.

Edge derivatives follow the symmetric coupling convention: the edge variable
a_(i,j) moves A_ij and A_ji together. For a scalar f(A), the half-vector
gradient entry is therefore dF_ij + dF_ji where dF is the elementwise
matrix derivative.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .graphs import laplacian, vech_indices

# Pade-13 numerator coefficients and the standard scaling threshold for the
# 1-norm (Higham's theta_13).
_PADE13 = (
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
)
_THETA13 = 5.371920351148152


def expm(M: np.ndarray) -> np.ndarray:
    """Matrix exponential by scaling-and-squaring with a degree-13 Pade core."""
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError(f"expm needs a square matrix, got shape {M.shape}")
    n = M.shape[0]
    norm = np.linalg.norm(M, 1)
    s = 0
    if norm > _THETA13:
        s = max(0, int(math.ceil(math.log2(norm / _THETA13))))
        M = M / (2.0**s)

    b = _PADE13
    eye = np.eye(n)
    M2 = M @ M
    M4 = M2 @ M2
    M6 = M2 @ M4
    U = M @ (M6 @ (b[13] * M6 + b[11] * M4 + b[9] * M2)
             + b[7] * M6 + b[5] * M4 + b[3] * M2 + b[1] * eye)
    V = (M6 @ (b[12] * M6 + b[10] * M4 + b[8] * M2)
         + b[6] * M6 + b[4] * M4 + b[2] * M2 + b[0] * eye)
    F = np.linalg.solve(V - U, V + U)
    for _ in range(s):
        F = F @ F
    return F


def expm_frechet(M: np.ndarray, E: np.ndarray) -> np.ndarray:
    """Directional derivative of expm at M along E.

    Computed as the upper-right block of exp([[M, E], [0, M]]).
    """
    M = np.asarray(M, dtype=float)
    E = np.asarray(E, dtype=float)
    if M.shape != E.shape or M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError(f"incompatible shapes {M.shape} and {E.shape}")
    n = M.shape[0]
    block = np.zeros((2 * n, 2 * n))
    block[:n, :n] = M
    block[:n, n:] = E
    block[n:, n:] = M
    return expm(block)[:n, n:]


def _sym_expm_frechet(M: np.ndarray, C: np.ndarray) -> np.ndarray:
    """L_exp(M, C) for symmetric M via eigendecomposition.

    Daleckii-Krein: in the eigenbasis the Frechet derivative acts entrywise
    as the divided difference (e^li - e^lj)/(li - lj), written here in the
    cancellation-free form e^((li+lj)/2) * sinh(h)/h with h = (li - lj)/2.
    """
    lam, Q = np.linalg.eigh(M)
    h = 0.5 * (lam[:, None] - lam[None, :])
    small = np.abs(h) < 1e-8
    safe = np.where(small, 1.0, h)
    sinch = np.where(small, 1.0 + h * h / 6.0, np.sinh(safe) / safe)
    phi = np.exp(0.5 * (lam[:, None] + lam[None, :])) * sinch
    return Q @ ((Q.T @ C @ Q) * phi) @ Q.T


def _pair_scores(G: np.ndarray) -> np.ndarray:
    """Collapse an elementwise matrix gradient to the half-vector convention."""
    S = G + G.T
    r, c = vech_indices(G.shape[0])
    return S[r, c]


class GraphFilter:
    """Base class for parametric filters h_theta(A).

    Subclasses must implement ``matrix``; the gradient methods default to
    central finite differences so user-supplied families work out of the box.
    ``theta`` is a flat parameter vector, immutable by convention.
    """

    theta: np.ndarray

    def matrix(self, A: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def apply(self, A: np.ndarray, x: np.ndarray) -> np.ndarray:
        """h_theta(A) @ x for a vector or a column-stacked signal matrix."""
        x = np.asarray(x, dtype=float)
        if x.shape[0] != A.shape[0]:
            raise ValueError(f"signal length {x.shape[0]} != n_nodes {A.shape[0]}")
        return self.matrix(A) @ x

    def with_theta(self, theta: np.ndarray) -> "GraphFilter":
        raise NotImplementedError

    def initial_theta(self, rng: np.random.Generator) -> np.ndarray:
        """Random starting parameters for joint inference, Normal(0, 0.1^2)."""
        return rng.normal(0.0, 0.1, size=len(self.theta))

    # -- gradients ---------------------------------------------------------

    def pair_gradient_matrix(self, A: np.ndarray, C: np.ndarray) -> np.ndarray:
        """Elementwise gradient G of sum_k v_k^T h_theta(A) x_k w.r.t. A.

        ``C`` is the weight matrix sum_k v_k x_k^T; the derivative is linear
        in C, so a batch of pairs costs the same as one. Finite-difference
        fallback: perturb each entry of A separately (h = 1e-6).
        """
        h = 1e-6
        n = A.shape[0]
        G = np.zeros((n, n))
        for i in range(n):
            for j in range(n):
                Ap = A.copy()
                Am = A.copy()
                Ap[i, j] += h
                Am[i, j] -= h
                G[i, j] = np.sum(C * (self.matrix(Ap) - self.matrix(Am))) / (2 * h)
        return G

    def edge_gradient(self, A: np.ndarray, v: np.ndarray, x: np.ndarray) -> np.ndarray:
        """Half-vector gradient of v^T h_theta(A) x under symmetric coupling."""
        v = np.asarray(v, dtype=float)
        x = np.asarray(x, dtype=float)
        if v.shape[0] != A.shape[0] or x.shape[0] != A.shape[0]:
            raise ValueError("v and x must have one entry per node")
        return _pair_scores(self.pair_gradient_matrix(A, np.outer(v, x)))

    def edge_gradient_total(self, A: np.ndarray, V: np.ndarray, X: np.ndarray) -> np.ndarray:
        """Sum of edge_gradient over the columns of V and X."""
        return _pair_scores(self.pair_gradient_matrix(A, V @ X.T))

    def theta_gradient_total(
        self, A: np.ndarray, V: np.ndarray, X: np.ndarray, hX: np.ndarray | None = None
    ) -> np.ndarray:
        """Gradient of sum_k v_k^T h_theta(A) x_k w.r.t. theta.

        Finite-difference fallback (h = 1e-7); ``hX`` lets callers pass a
        precomputed h_theta(A) @ X, unused by the fallback.
        """
        h = 1e-7
        g = np.zeros(len(self.theta))
        for p in range(len(self.theta)):
            tp = self.theta.copy()
            tm = self.theta.copy()
            tp[p] += h
            tm[p] -= h
            fp = np.sum(V * (self.with_theta(tp).matrix(A) @ X))
            fm = np.sum(V * (self.with_theta(tm).matrix(A) @ X))
            g[p] = (fp - fm) / (2 * h)
        return g

    def theta_gradient(self, A: np.ndarray, v: np.ndarray, x: np.ndarray) -> np.ndarray:
        """Gradient of v^T h_theta(A) x w.r.t. theta."""
        v = np.asarray(v, dtype=float)
        x = np.asarray(x, dtype=float)
        return self.theta_gradient_total(A, v[:, None], x[:, None])


@dataclass(frozen=True, eq=False)
class PolynomialFilter(GraphFilter):
    """h_theta(A) = sum_p theta_p A^p, default order 2."""

    theta: np.ndarray

    def __post_init__(self) -> None:
        t = np.atleast_1d(np.asarray(self.theta, dtype=float)).copy()
        if not np.all(np.isfinite(t)):
            raise ValueError("polynomial coefficients must be finite")
        t.flags.writeable = False
        object.__setattr__(self, "theta", t)

    @property
    def order(self) -> int:
        return len(self.theta) - 1

    def with_theta(self, theta: np.ndarray) -> "PolynomialFilter":
        return replace(self, theta=np.asarray(theta, dtype=float))

    def matrix(self, A: np.ndarray) -> np.ndarray:
        A = np.asarray(A, dtype=float)
        n = A.shape[0]
        H = self.theta[0] * np.eye(n)
        Ap = np.eye(n)
        for p in range(1, len(self.theta)):
            Ap = Ap @ A
            H += self.theta[p] * Ap
        return H

    def apply(self, A: np.ndarray, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape[0] != A.shape[0]:
            raise ValueError(f"signal length {x.shape[0]} != n_nodes {A.shape[0]}")
        out = self.theta[0] * x
        Apx = x
        for p in range(1, len(self.theta)):
            Apx = A @ Apx
            out = out + self.theta[p] * Apx
        return out

    def pair_gradient_matrix(self, A: np.ndarray, C: np.ndarray) -> np.ndarray:
        # d(v^T A^p x)/dA_uv = sum_{q=0}^{p-1} [(A^T)^q v x^T (A^T)^{p-1-q}]_uv
        # by the product rule; the constant term contributes nothing.
        A = np.asarray(A, dtype=float)
        At = A.T
        P = self.order
        if P < 1:
            return np.zeros_like(C)
        # left[q] = (A^T)^q C, right[m] = (A^T)^m
        left = [C]
        right = [np.eye(A.shape[0])]
        for _ in range(P - 1):
            left.append(At @ left[-1])
            right.append(right[-1] @ At)
        G = np.zeros_like(C)
        for p in range(1, P + 1):
            for q in range(p):
                m = p - 1 - q
                G += self.theta[p] * (left[q] if m == 0 else left[q] @ right[m])
        return G

    def theta_gradient_total(
        self, A: np.ndarray, V: np.ndarray, X: np.ndarray, hX: np.ndarray | None = None
    ) -> np.ndarray:
        A = np.asarray(A, dtype=float)
        g = np.zeros(len(self.theta))
        ApX = np.asarray(X, dtype=float)
        g[0] = np.sum(V * ApX)
        for p in range(1, len(self.theta)):
            ApX = A @ ApX
            g[p] = np.sum(V * ApX)
        return g


@dataclass(frozen=True, eq=False)
class HeatDiffusionFilter(GraphFilter):
    """h_theta(A) = exp(-theta * L(A)) with L = diag(A 1) - A."""

    theta: np.ndarray

    def __post_init__(self) -> None:
        t = np.atleast_1d(np.asarray(self.theta, dtype=float)).copy()
        if t.shape != (1,):
            raise ValueError(f"heat filter takes a single rate, got shape {t.shape}")
        if not np.all(np.isfinite(t)):
            raise ValueError("diffusion rate must be finite")
        t.flags.writeable = False
        object.__setattr__(self, "theta", t)

    @property
    def rate(self) -> float:
        return float(self.theta[0])

    def with_theta(self, theta: np.ndarray) -> "HeatDiffusionFilter":
        return replace(self, theta=np.asarray(theta, dtype=float))

    def initial_theta(self, rng: np.random.Generator) -> np.ndarray:
        # The likelihood cannot tell (rate, A) from (-rate, -A); starting on
        # the nonnegative branch keeps joint runs out of the mirrored mode.
        return np.abs(rng.normal(0.0, 0.1, size=1))

    def matrix(self, A: np.ndarray) -> np.ndarray:
        A = np.asarray(A, dtype=float)
        M = -self.rate * laplacian(A)
        if np.array_equal(M, M.T):
            lam, Q = np.linalg.eigh(M)
            return (Q * np.exp(lam)) @ Q.T
        return expm(M)

    def pair_gradient_matrix(self, A: np.ndarray, C: np.ndarray) -> np.ndarray:
        # Adjoint identity: grad_M of sum_k v_k^T exp(M) x_k is L_exp(M^T, C).
        # Chain rule through M = -theta L(A) with L = diag(A 1) - A gives the
        # elementwise derivative -theta (G_uu - G_uv). One dense linear-algebra
        # evaluation per call, shared across all pairs: an eigendecomposition
        # with divided differences when M is symmetric (the sampler keeps it
        # so), otherwise one doubled-size expm.
        A = np.asarray(A, dtype=float)
        M = -self.rate * laplacian(A)
        if np.array_equal(M, M.T):
            G = _sym_expm_frechet(M, C)
        else:
            G = expm_frechet(M.T, C)
        d = np.diag(G)
        return -self.rate * (d[:, None] - G)

    def theta_gradient_total(
        self, A: np.ndarray, V: np.ndarray, X: np.ndarray, hX: np.ndarray | None = None
    ) -> np.ndarray:
        A = np.asarray(A, dtype=float)
        L = laplacian(A)
        if hX is None:
            hX = self.matrix(A) @ np.asarray(X, dtype=float)
        return np.array([-np.sum(V * (L @ hX))])
