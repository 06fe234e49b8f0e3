"""Core graph representations: half-vectorization, Laplacian, masks.

All adjacency matrices in this package are square, symmetric and hollow
(zero diagonal). Edges are unweighted, so matrices are binary at the
input/output boundary; continuous entries appear only inside the sampler.

The half-vectorization convention is fixed once here: strictly-upper
entries in row-major order, i.e. (0,1),(0,2),...,(0,N-1),(1,2),...
Every other module relies on this ordering.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

Pair = tuple[int, int]


def num_pairs(n: int) -> int:
    """Number of unordered node pairs, n*(n-1)/2."""
    return n * (n - 1) // 2


def n_nodes_from_length(length: int) -> int:
    """Invert num_pairs; raises if length is not of the form n*(n-1)/2."""
    n = int(round((1.0 + math.sqrt(1.0 + 8.0 * length)) / 2.0))
    if num_pairs(n) != length:
        raise ValueError(f"length {length} is not n*(n-1)/2 for any integer n")
    return n


def vech_pairs(n: int) -> list[Pair]:
    """All pairs (i, j), i < j, in the fixed vech order."""
    return [(i, j) for i in range(n) for j in range(i + 1, n)]


@lru_cache(maxsize=None)
def vech_indices(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Row/column index arrays of the strict upper triangle in vech order.

    Cached and returned read-only; this sits in the sampler's hot loop.
    """
    r, c = np.triu_indices(n, k=1)
    r.flags.writeable = False
    c.flags.writeable = False
    return r, c


def check_adjacency(A: np.ndarray, atol: float = 0.0) -> np.ndarray:
    """Validate that A is a square, symmetric, hollow real matrix."""
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"adjacency must be square, got shape {A.shape}")
    if not np.allclose(A, A.T, atol=atol, rtol=0.0):
        raise ValueError("adjacency must be symmetric")
    if not np.allclose(np.diag(A), 0.0, atol=atol, rtol=0.0):
        raise ValueError("adjacency must have a zero diagonal")
    return A


def vech(A: np.ndarray) -> np.ndarray:
    """Half-vectorize a symmetric hollow matrix (strict upper, row-major)."""
    A = check_adjacency(A)
    r, c = vech_indices(A.shape[0])
    return A[r, c].copy()


def unvech(a: np.ndarray, n: int) -> np.ndarray:
    """Rebuild the symmetric hollow matrix from its half-vectorization."""
    a = np.asarray(a, dtype=float)
    if a.ndim != 1 or a.shape[0] != num_pairs(n):
        raise ValueError(
            f"half-vector of length {a.shape} does not match n={n} "
            f"(expected {num_pairs(n)})"
        )
    A = np.zeros((n, n))
    r, c = vech_indices(n)
    A[r, c] = a
    A[c, r] = a
    return A


def laplacian(A: np.ndarray) -> np.ndarray:
    """Combinatorial Laplacian diag(A 1) - A; rows sum to zero."""
    A = np.asarray(A, dtype=float)
    return np.diag(A.sum(axis=1)) - A


def round_project(A: np.ndarray) -> np.ndarray:
    """Project each off-diagonal entry onto {0, 1}; ties at 0.5 go to 1."""
    A = np.asarray(A, dtype=float)
    B = (A >= 0.5).astype(float)
    np.fill_diagonal(B, 0.0)
    return B


def partition_entries(
    n: int, unknown_fraction: float, seed: int
) -> tuple[frozenset[Pair], frozenset[Pair]]:
    """Split all pairs i<j into an observed and an unknown set.

    The unknown set has round(unknown_fraction * n(n-1)/2) members (half-up
    rounding), drawn uniformly by the seeded generator. Deterministic in
    (n, unknown_fraction, seed).
    """
    if n < 2:
        raise ValueError(f"need n >= 2, got {n}")
    if not 0.0 <= unknown_fraction <= 1.0:
        raise ValueError(f"unknown_fraction must lie in [0, 1], got {unknown_fraction}")
    pairs = vech_pairs(n)
    m = int(math.floor(unknown_fraction * len(pairs) + 0.5))
    rng = np.random.default_rng(seed)
    chosen = rng.permutation(len(pairs))[:m]
    unknown = frozenset(pairs[k] for k in chosen)
    observed = frozenset(pairs) - unknown
    return observed, unknown


@dataclass(frozen=True, eq=False)
class AdjacencyState:
    """A partially known adjacency matrix.

    ``entries`` holds binary values at observed positions; unknown positions
    carry no information (conventionally zero). The two index sets partition
    all pairs i < j.
    """

    entries: np.ndarray
    observed: frozenset[Pair]
    unknown: frozenset[Pair]

    def __post_init__(self) -> None:
        A = check_adjacency(self.entries)
        A = A.copy()
        A.flags.writeable = False
        object.__setattr__(self, "entries", A)
        n = A.shape[0]
        all_pairs = set(vech_pairs(n))
        if self.observed & self.unknown:
            raise ValueError("observed and unknown sets overlap")
        if (self.observed | self.unknown) != all_pairs:
            raise ValueError("observed and unknown sets must cover all pairs i<j")
        for i, j in self.observed:
            if A[i, j] not in (0.0, 1.0):
                raise ValueError(f"observed entry ({i},{j}) = {A[i, j]} is not binary")

    @property
    def n_nodes(self) -> int:
        return self.entries.shape[0]

    def unknown_vech_indices(self) -> np.ndarray:
        """Positions of the unknown pairs inside the vech ordering, sorted."""
        pairs = vech_pairs(self.n_nodes)
        idx = {p: k for k, p in enumerate(pairs)}
        return np.array(sorted(idx[p] for p in self.unknown), dtype=int)

    @classmethod
    def from_truth(
        cls, A: np.ndarray, unknown: frozenset[Pair] | set[Pair]
    ) -> "AdjacencyState":
        """Mask a fully known binary adjacency: unknown entries zeroed out."""
        A = check_adjacency(A).copy()
        unknown = frozenset(unknown)
        for i, j in unknown:
            A[i, j] = 0.0
            A[j, i] = 0.0
        observed = frozenset(vech_pairs(A.shape[0])) - unknown
        return cls(entries=A, observed=observed, unknown=unknown)


def parse_edgelist(text: str, source: str = "<string>") -> np.ndarray:
    """Parse the plain-text edge-list format into an adjacency matrix.

    First non-comment line is ``N <num_nodes>``; each following line is
    ``<i> <j>`` with 0-based endpoints and i < j. Blank lines and lines
    starting with ``#`` are ignored.
    """
    n = None
    A = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        tokens = line.split()
        if n is None:
            if len(tokens) != 2 or tokens[0] != "N":
                raise ValueError(f"{source}:{lineno}: expected header 'N <num_nodes>'")
            try:
                n = int(tokens[1])
            except ValueError:
                raise ValueError(f"{source}:{lineno}: bad node count {tokens[1]!r}") from None
            if n < 1:
                raise ValueError(f"{source}:{lineno}: node count must be positive")
            A = np.zeros((n, n))
            continue
        if len(tokens) != 2:
            raise ValueError(f"{source}:{lineno}: expected '<i> <j>', got {line!r}")
        try:
            i, j = int(tokens[0]), int(tokens[1])
        except ValueError:
            raise ValueError(f"{source}:{lineno}: non-integer endpoint in {line!r}") from None
        if not (0 <= i < j < n):
            raise ValueError(f"{source}:{lineno}: edge ({i},{j}) out of range for n={n}")
        A[i, j] = 1.0
        A[j, i] = 1.0
    if A is None:
        raise ValueError(f"{source}: missing 'N <num_nodes>' header")
    return A


def format_edgelist(A: np.ndarray) -> str:
    """Serialize a binary adjacency matrix to the edge-list format."""
    A = check_adjacency(A)
    n = A.shape[0]
    lines = [f"N {n}"]
    r, c = vech_indices(n)
    for i, j in zip(r, c):
        if A[i, j] != 0.0:
            lines.append(f"{i} {j}")
    return "\n".join(lines) + "\n"
