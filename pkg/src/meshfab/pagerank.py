"""Protein-network ingestion, transition matrices and PageRank runs."""

from __future__ import annotations

import io
import re
from dataclasses import dataclass
from typing import Iterator, NamedTuple, Optional, Sequence

import numpy as np

from .fabric import Fabric, FabricConfig
from .scheduler import build_tiled_pagerank_iteration, result_vector


class GraphError(ValueError):
    def __init__(self, msg: str, lineno: Optional[int] = None):
        super().__init__(msg if lineno is None else f"line {lineno}: {msg}")
        self.lineno = lineno


@dataclass(frozen=True)
class Graph:
    n: int
    labels: tuple[str, ...]
    edges: tuple[tuple[int, int], ...]
    directed: bool = False

    def relabeled(self, perm: Sequence[int]) -> "Graph":
        """Node i becomes node perm[i]."""
        labels = [""] * self.n
        for i, p in enumerate(perm):
            labels[p] = self.labels[i]
        edges = tuple(sorted(_norm(perm[a], perm[b], self.directed) for a, b in self.edges))
        return Graph(self.n, tuple(labels), edges, self.directed)

    def to_edge_list(self) -> str:
        return "".join(f"{self.labels[a]}\t{self.labels[b]}\n" for a, b in self.edges)


@dataclass
class PageRankParams:
    damping: float = 0.85
    iterations: int = 100
    tol: Optional[float] = None  # L1 early stop; off by default

    def __post_init__(self):
        if not 0.0 <= self.damping <= 1.0:
            raise ValueError(f"damping {self.damping} outside [0, 1]")
        if self.iterations < 1:
            raise ValueError("iterations must be at least 1")


def _norm(a: int, b: int, directed: bool) -> tuple[int, int]:
    return (a, b) if directed or a <= b else (b, a)


def load_graph(source: str, directed: bool = False) -> Graph:
    """Parse a two-column edge list (tab or whitespace separated)."""
    index: dict[str, int] = {}
    edges: dict[tuple[int, int], None] = {}
    for lineno, line in enumerate(io.StringIO(source), 1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        parts = re.split(r"\s+", body)
        if len(parts) != 2:
            raise GraphError(f"expected two node labels, got {body!r}", lineno)
        ids = [index.setdefault(label, len(index)) for label in parts]
        edges.setdefault(_norm(ids[0], ids[1], directed), None)
    if not index:
        raise GraphError("edge list contains no edges")
    labels = tuple(sorted(index, key=index.__getitem__))
    return Graph(len(labels), labels, tuple(edges), directed)


def synthetic_network(n: int, attach: int = 2, seed: int = 42) -> Graph:
    """Seeded preferential-attachment interaction network with labels P0000..."""
    import networkx as nx

    g = nx.barabasi_albert_graph(n, min(attach, n - 1) if n > 1 else 0, seed=seed)
    width = max(4, len(str(n - 1)))
    labels = tuple(f"P{i:0{width}d}" for i in range(n))
    edges = tuple(sorted(_norm(a, b, False) for a, b in g.edges()))
    return Graph(n, labels, edges, False)


def build_transition(g: Graph) -> np.ndarray:
    """Column-stochastic H with H[i, j] = 1/deg(j) for each edge j -> i.

    Columns of nodes without out-edges are replaced by the uniform column.
    """
    adj = np.zeros((g.n, g.n))
    for a, b in g.edges:
        adj[b, a] = 1.0
        if not g.directed:
            adj[a, b] = 1.0
    deg = adj.sum(axis=0)
    H = np.divide(adj, deg, out=np.zeros_like(adj), where=deg > 0)
    H[:, deg == 0] = 1.0 / g.n
    return H


def pagerank_iterates(H: np.ndarray, damping: float) -> Iterator[np.ndarray]:
    """PR_1, PR_2, ... starting from the uniform vector, in float64."""
    n = H.shape[0]
    pr = np.full(n, 1.0 / n)
    teleport = (1.0 - damping) / n
    while True:
        pr = damping * (H @ pr) + teleport
        yield pr


def reference_pagerank(H: np.ndarray, params: PageRankParams = PageRankParams()) -> np.ndarray:
    n = H.shape[0]
    prev = np.full(n, 1.0 / n)
    for k, pr in enumerate(pagerank_iterates(H, params.damping), 1):
        if k == params.iterations:
            return pr
        if params.tol is not None and np.abs(pr - prev).sum() < params.tol:
            return pr
        prev = pr
    raise AssertionError("unreachable")


class FabricPageRank(NamedTuple):
    ranks: np.ndarray
    timesteps: int
    seconds: float
    iterations: int


def fabric_pagerank(g: Graph, params: PageRankParams = PageRankParams(),
                    config: Optional[FabricConfig] = None) -> FabricPageRank:
    """Run PageRank iterations on the simulated fabric (tiling when needed)."""
    config = config or FabricConfig(64, 64)
    H = build_transition(g).astype(np.float32)
    pr = np.full(g.n, 1.0 / g.n, dtype=np.float32)
    fabric = Fabric(config, keep_trace=False)
    total = 0
    done = 0
    for _ in range(params.iterations):
        _, schedule = build_tiled_pagerank_iteration(H, pr, params.damping, config)
        result = fabric.run(schedule)
        total += result.timesteps
        done += 1
        nxt = result_vector(schedule, result)
        converged = (params.tol is not None
                     and float(np.abs(nxt.astype(np.float64) - pr).sum()) < params.tol)
        pr = nxt
        if converged:
            break
    return FabricPageRank(pr, total, total / config.clock_hz, done)


def rank_order(ranks) -> list[int]:
    ranks = np.asarray(ranks)
    return sorted(range(len(ranks)), key=lambda i: (-ranks[i], i))


def rank_report(ranks, labels: Sequence[str], k: Optional[int] = None) -> str:
    """Top-k CSV table ``rank,node,label,score``, highest score first."""
    order = rank_order(ranks)
    k = len(order) if k is None else max(0, min(k, len(order)))
    lines = ["rank,node,label,score"]
    for pos, i in enumerate(order[:k], 1):
        lines.append(f"{pos},{i},{labels[i]},{float(ranks[i]):.9g}")
    return "\n".join(lines) + "\n"


def run_summary(n: int, iterations: int, damping: float, timesteps: int, seconds: float) -> str:
    return ("N,n,d,timesteps,model_seconds\n"
            f"{n},{iterations},{damping:g},{timesteps},{seconds:.9g}\n")
