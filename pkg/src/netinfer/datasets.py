"""Graph generators, corpus I/O, and signal synthesis.

Two seeded generators cover the experimental families: perturbed grids and a
hub-centered stand-in for ego networks (hermetic, so nothing external is
ever downloaded). ``synthesize_signals`` draws filter parameters and inputs
from configurable ranges and pushes them through the observation model.
"""

from __future__ import annotations

import csv
import io
import json
import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .filters import GraphFilter, HeatDiffusionFilter, PolynomialFilter
from .graphs import (
    AdjacencyState,
    check_adjacency,
    format_edgelist,
    parse_edgelist,
    partition_entries,
    vech_pairs,
)
from .likelihood import SignalSet


class CorpusError(ValueError):
    """A corpus directory or one of its files is malformed."""


@dataclass(frozen=True, eq=False)
class GraphDataset:
    """A list of binary adjacency matrices, possibly of different sizes."""

    graphs: tuple[np.ndarray, ...]

    def __post_init__(self) -> None:
        members = []
        for k, g in enumerate(self.graphs):
            g = check_adjacency(g)
            if not np.all(np.isin(g, (0.0, 1.0))):
                raise ValueError(f"dataset member {k} is not binary")
            g = g.copy()
            g.flags.writeable = False
            members.append(g)
        object.__setattr__(self, "graphs", tuple(members))

    def __len__(self) -> int:
        return len(self.graphs)

    def __iter__(self):
        return iter(self.graphs)

    def with_size(self, n: int) -> "GraphDataset":
        """Members with exactly n nodes (the empirical provider needs this)."""
        return GraphDataset(tuple(g for g in self.graphs if g.shape[0] == n))

    def with_max_nodes(self, n_max: int) -> "GraphDataset":
        return GraphDataset(tuple(g for g in self.graphs if g.shape[0] <= n_max))


def generate_grid(
    height: int, width: int, n_extra_edges: int = 0, seed: int | np.random.Generator = 0
) -> np.ndarray:
    """4-neighbor grid of the given shape plus random extra edges.

    The extra edges join uniformly random currently non-adjacent pairs,
    without duplicates; asking for more than the number of available
    non-edges is an error.
    """
    if height < 1 or width < 1 or height * width < 2:
        raise ValueError(f"grid {height}x{width} needs at least 2 nodes")
    n = height * width
    A = np.zeros((n, n))
    for r in range(height):
        for c in range(width):
            v = r * width + c
            if c + 1 < width:
                A[v, v + 1] = A[v + 1, v] = 1.0
            if r + 1 < height:
                A[v, v + width] = A[v + width, v] = 1.0
    if n_extra_edges:
        rng = np.random.default_rng(seed)
        non_edges = [(i, j) for (i, j) in vech_pairs(n) if A[i, j] == 0.0]
        if n_extra_edges > len(non_edges):
            raise ValueError(
                f"asked for {n_extra_edges} extra edges but only "
                f"{len(non_edges)} non-adjacent pairs exist"
            )
        for k in rng.permutation(len(non_edges))[:n_extra_edges]:
            i, j = non_edges[k]
            A[i, j] = A[j, i] = 1.0
    return A


def grid_shapes(n_min: int, n_max: int, min_side: int = 3) -> list[tuple[int, int]]:
    """Factor pairs (h, w), h <= w, with h*w in [n_min, n_max] and h >= min_side."""
    shapes = []
    for n in range(n_min, n_max + 1):
        for h in range(min_side, int(np.sqrt(n)) + 1):
            if n % h == 0 and n // h >= h:
                shapes.append((h, n // h))
    if not shapes:
        raise ValueError(f"no {min_side}-sided grid shapes with size in [{n_min}, {n_max}]")
    return shapes


def generate_ego_like(
    n_nodes: int, attachment: int = 2, seed: int | np.random.Generator = 0
) -> np.ndarray:
    """Hub-centered graph: node 0 adjacent to all, peripheral edges preferential.

    Each node v >= 2 attaches to min(attachment, v-1) earlier peripheral
    nodes, chosen without replacement with probability proportional to their
    current peripheral degree plus one. Connected by construction.
    """
    if n_nodes < 2:
        raise ValueError(f"need at least 2 nodes, got {n_nodes}")
    rng = np.random.default_rng(seed)
    A = np.zeros((n_nodes, n_nodes))
    A[0, 1:] = 1.0
    A[1:, 0] = 1.0
    peripheral_degree = np.zeros(n_nodes)
    for v in range(2, n_nodes):
        candidates = np.arange(1, v)
        k = min(attachment, len(candidates))
        weights = peripheral_degree[candidates] + 1.0
        chosen = rng.choice(candidates, size=k, replace=False, p=weights / weights.sum())
        for u in chosen:
            A[u, v] = A[v, u] = 1.0
            peripheral_degree[u] += 1
            peripheral_degree[v] += 1
    return A


DEFAULT_THETA_RANGES = {
    "polynomial": (-0.1, 0.1),
    "heat": (0.3, 0.7),
}


def make_filter(family: str, theta: np.ndarray) -> GraphFilter:
    if family == "polynomial":
        return PolynomialFilter(theta)
    if family == "heat":
        return HeatDiffusionFilter(theta)
    raise ValueError(f"unknown filter family {family!r}")


def draw_theta(
    family: str,
    rng: np.random.Generator,
    theta_range: tuple[float, float] | None = None,
    order: int = 2,
) -> np.ndarray:
    """Draw filter parameters uniformly from the family's range."""
    lo, hi = theta_range if theta_range is not None else DEFAULT_THETA_RANGES[family]
    size = order + 1 if family == "polynomial" else 1
    return rng.uniform(lo, hi, size=size)


def synthesize_signals(
    A: np.ndarray,
    family: str,
    K: int,
    noise_variance: float = 1.0,
    theta_range: tuple[float, float] | None = None,
    x_range: tuple[float, float] = (-10.0, 10.0),
    seed: int | np.random.Generator = 0,
    order: int = 2,
) -> tuple[np.ndarray, SignalSet]:
    """Draw theta and K input columns, then push through the noisy system.

    Inputs are i.i.d. uniform on ``x_range``; outputs are h_theta(A) x plus
    Gaussian noise of the given variance. Deterministic per seed.
    """
    A = check_adjacency(A)
    rng = np.random.default_rng(seed)
    theta = draw_theta(family, rng, theta_range, order)
    filt = make_filter(family, theta)
    n = A.shape[0]
    X = rng.uniform(x_range[0], x_range[1], size=(n, K))
    noise = rng.normal(0.0, np.sqrt(noise_variance), size=(n, K))
    Y = filt.apply(A, X) + noise
    return theta, SignalSet(inputs=X, outputs=Y, noise_variance=noise_variance)


@dataclass(frozen=True, eq=False)
class ExperimentInstance:
    """Ground truth plus masked view and signals for one trial."""

    truth: np.ndarray
    state: AdjacencyState
    family: str
    theta: np.ndarray
    signals: SignalSet
    provenance: str

    @property
    def n_nodes(self) -> int:
        return self.truth.shape[0]

    def true_filter(self) -> GraphFilter:
        return make_filter(self.family, self.theta)

    def unknown_truth_bits(self) -> np.ndarray:
        """Truth at the unknown pairs, in sorted vech order."""
        r_idx = self.state.unknown_vech_indices()
        pairs = vech_pairs(self.n_nodes)
        return np.array([self.truth[pairs[k]] for k in r_idx])


def make_instance(
    A: np.ndarray,
    family: str,
    K: int,
    unknown_fraction: float,
    noise_variance: float = 1.0,
    theta_range: tuple[float, float] | None = None,
    seed: int = 0,
    provenance: str = "",
) -> ExperimentInstance:
    """Mask a truth graph and synthesize matching signals, all from one seed."""
    A = check_adjacency(A)
    seq = np.random.SeedSequence([seed, 0xA11CE])
    mask_seed, signal_seed = seq.spawn(2)
    _, unknown = partition_entries(
        A.shape[0], unknown_fraction, np.random.default_rng(mask_seed).integers(2**32)
    )
    theta, signals = synthesize_signals(
        A,
        family,
        K,
        noise_variance=noise_variance,
        theta_range=theta_range,
        seed=np.random.default_rng(signal_seed),
    )
    return ExperimentInstance(
        truth=A,
        state=AdjacencyState.from_truth(A, unknown),
        family=family,
        theta=theta,
        signals=signals,
        provenance=provenance,
    )


# -- corpus and instance I/O ---------------------------------------------------


def load_edgelist(path: str | os.PathLike) -> np.ndarray:
    path = Path(path)
    try:
        return parse_edgelist(path.read_text(), source=str(path))
    except ValueError as exc:
        raise CorpusError(str(exc)) from None


def save_edgelist(A: np.ndarray, path: str | os.PathLike) -> None:
    Path(path).write_text(format_edgelist(A))


def load_corpus(directory: str | os.PathLike, max_nodes: int | None = None) -> GraphDataset:
    """Read every ``*.edgelist`` file in a directory into a dataset.

    Files are taken in sorted name order; an empty directory yields an empty
    dataset (constructing an empirical prior from it then fails loudly).
    """
    directory = Path(directory)
    if not directory.is_dir():
        raise CorpusError(f"{directory}: not a directory")
    graphs = []
    for path in sorted(directory.glob("*.edgelist")):
        A = load_edgelist(path)
        if max_nodes is None or A.shape[0] <= max_nodes:
            graphs.append(A)
    return GraphDataset(tuple(graphs))


def save_corpus(dataset: GraphDataset, directory: str | os.PathLike) -> None:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    width = max(4, len(str(len(dataset))))
    for k, g in enumerate(dataset):
        save_edgelist(g, directory / f"graph_{k:0{width}d}.edgelist")


def write_signals_csv(signals: SignalSet, path: str | os.PathLike) -> None:
    """CSV with header ``k,node,x,y``; one row per (pair, node)."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["k", "node", "x", "y"])
    for k in range(signals.n_pairs):
        for node in range(signals.n_nodes):
            writer.writerow(
                [k, node, repr(float(signals.inputs[node, k])), repr(float(signals.outputs[node, k]))]
            )
    Path(path).write_text(buf.getvalue())


def read_signals_csv(
    path: str | os.PathLike, noise_variance: float, n_nodes: int | None = None
) -> SignalSet:
    path = Path(path)
    with path.open() as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["k", "node", "x", "y"]:
            raise CorpusError(f"{path}: expected header k,node,x,y, got {header}")
        cells: dict[tuple[int, int], tuple[float, float]] = {}
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                k, node = int(row[0]), int(row[1])
                x, y = float(row[2]), float(row[3])
            except (IndexError, ValueError):
                raise CorpusError(f"{path}:{lineno}: malformed row {row}") from None
            cells[(k, node)] = (x, y)
    if not cells:
        if n_nodes is None:
            raise CorpusError(f"{path}: no signal rows")
        return SignalSet.empty(n_nodes, noise_variance)
    n_pairs = max(k for k, _ in cells) + 1
    n_nodes = max(node for _, node in cells) + 1
    if len(cells) != n_pairs * n_nodes:
        raise CorpusError(f"{path}: missing (k, node) combinations")
    X = np.zeros((n_nodes, n_pairs))
    Y = np.zeros((n_nodes, n_pairs))
    for (k, node), (x, y) in cells.items():
        X[node, k] = x
        Y[node, k] = y
    return SignalSet(inputs=X, outputs=Y, noise_variance=noise_variance)


def save_instance(instance: ExperimentInstance, directory: str | os.PathLike) -> None:
    """Write graph.edgelist, signals.csv and instance.json into a directory."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    save_edgelist(instance.truth, directory / "graph.edgelist")
    write_signals_csv(instance.signals, directory / "signals.csv")
    meta = {
        "family": instance.family,
        "theta": instance.theta.tolist(),
        "noise_variance": instance.signals.noise_variance,
        "unknown_pairs": sorted([int(i), int(j)] for (i, j) in instance.state.unknown),
        "provenance": instance.provenance,
    }
    (directory / "instance.json").write_text(json.dumps(meta, indent=2) + "\n")


def load_instance(directory: str | os.PathLike) -> ExperimentInstance:
    directory = Path(directory)
    meta_path = directory / "instance.json"
    try:
        meta = json.loads(meta_path.read_text())
    except FileNotFoundError:
        raise CorpusError(f"{meta_path}: missing") from None
    except json.JSONDecodeError as exc:
        raise CorpusError(f"{meta_path}: {exc}") from None
    truth = load_edgelist(directory / "graph.edgelist")
    signals = read_signals_csv(
        directory / "signals.csv", float(meta["noise_variance"]), n_nodes=truth.shape[0]
    )
    unknown = frozenset((int(i), int(j)) for i, j in meta["unknown_pairs"])
    return ExperimentInstance(
        truth=truth,
        state=AdjacencyState.from_truth(truth, unknown),
        family=meta["family"],
        theta=np.asarray(meta["theta"], dtype=float),
        signals=signals,
        provenance=meta.get("provenance", ""),
    )
