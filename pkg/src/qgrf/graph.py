"""Undirected weighted graphs, generators, Laplacians and GRF adjacency."""

from __future__ import annotations

import io
import logging
import math
import os
from dataclasses import dataclass
from typing import Iterable

import numpy as np

log = logging.getLogger(__name__)

ORACLE_LIMIT = 5000
ER_MAX_RETRIES = 100


class GraphError(ValueError):
    pass


class ConvergenceError(RuntimeError):
    pass


@dataclass(frozen=True, eq=False)
class Graph:
    """Immutable undirected graph stored as sorted adjacency lists (CSR).

    ``indices[indptr[i]:indptr[i+1]]`` are the neighbours of ``i`` in
    increasing order and ``weights`` the matching edge weights.  Every edge is
    stored at both endpoints.
    """

    n: int
    indptr: np.ndarray
    indices: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        for arr in (self.indptr, self.indices, self.weights):
            arr.setflags(write=False)

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[tuple], default_weight: float = 1.0) -> "Graph":
        """Build from ``(u, v)`` or ``(u, v, w)`` tuples.

        Repeated edges are accepted only with an identical weight.
        """
        if n < 1:
            raise GraphError("graph needs at least one node")
        table: dict[tuple[int, int], float] = {}
        for edge in edges:
            u, v = int(edge[0]), int(edge[1])
            w = float(edge[2]) if len(edge) > 2 else default_weight
            if u == v:
                raise GraphError(f"self-loop at node {u}")
            if not (0 <= u < n and 0 <= v < n):
                raise GraphError(f"edge ({u}, {v}) out of range for n={n}")
            if not math.isfinite(w):
                raise GraphError(f"non-finite weight on edge ({u}, {v})")
            key = (min(u, v), max(u, v))
            if key in table and table[key] != w:
                raise GraphError(f"edge {key} listed with conflicting weights {table[key]} and {w}")
            table[key] = w
        return cls._from_table(n, table)

    @classmethod
    def _from_table(cls, n, table):
        if table:
            pairs = np.array(list(table.keys()), dtype=np.int64)
            w = np.array(list(table.values()), dtype=np.float64)
            rows = np.concatenate([pairs[:, 0], pairs[:, 1]])
            cols = np.concatenate([pairs[:, 1], pairs[:, 0]])
            ws = np.concatenate([w, w])
        else:
            rows = cols = np.empty(0, dtype=np.int64)
            ws = np.empty(0)
        order = np.lexsort((cols, rows))
        rows, cols, ws = rows[order], cols[order], ws[order]
        counts = np.bincount(rows, minlength=n)
        isolated = np.flatnonzero(counts == 0)
        if isolated.size:
            raise GraphError(f"isolated node(s) {isolated[:10].tolist()}; every node needs degree >= 1")
        indptr = np.concatenate([[0], np.cumsum(counts)]).astype(np.int64)
        return cls(n=n, indptr=indptr, indices=cols.astype(np.int64), weights=ws)

    @classmethod
    def from_dense(cls, w: np.ndarray, atol: float = 0.0) -> "Graph":
        w = np.asarray(w, dtype=float)
        if not np.allclose(w, w.T, atol=atol, rtol=0):
            raise GraphError("weight matrix is not symmetric")
        iu, ju = np.nonzero(np.triu(w, 1))
        if np.any(np.diag(w) != 0):
            raise GraphError("non-zero diagonal (self-loop)")
        return cls.from_edges(w.shape[0], zip(iu, ju, w[iu, ju]))

    # -- accessors -------------------------------------------------------
    def neighbors(self, i: int) -> list[tuple[int, float]]:
        lo, hi = self.indptr[i], self.indptr[i + 1]
        return list(zip(self.indices[lo:hi].tolist(), self.weights[lo:hi].tolist()))

    @property
    def degree(self) -> np.ndarray:
        return np.diff(self.indptr)

    @property
    def weighted_degree(self) -> np.ndarray:
        return np.add.reduceat(self.weights, self.indptr[:-1]) if self.n else np.empty(0)

    @property
    def num_edges(self) -> int:
        return int(self.indices.size // 2)

    def edges(self) -> list[tuple[int, int, float]]:
        rows = np.repeat(np.arange(self.n), self.degree)
        keep = rows < self.indices
        return list(zip(rows[keep].tolist(), self.indices[keep].tolist(), self.weights[keep].tolist()))

    def with_weights(self, weights: np.ndarray) -> "Graph":
        """Same topology, new per-slot weights (must stay symmetric)."""
        return Graph(n=self.n, indptr=self.indptr.copy(), indices=self.indices.copy(),
                     weights=np.asarray(weights, dtype=float).copy())

    def to_dense(self) -> np.ndarray:
        _check_oracle_size(self.n)
        w = np.zeros((self.n, self.n))
        rows = np.repeat(np.arange(self.n), self.degree)
        w[rows, self.indices] = self.weights
        return w

    def __repr__(self):
        return f"Graph(n={self.n}, edges={self.num_edges})"


def _check_oracle_size(n, limit=None):
    limit = ORACLE_LIMIT if limit is None else limit
    if n > limit:
        raise GraphError(f"dense matrices limited to n <= {limit} (got n={n})")


# -- loaders -----------------------------------------------------------------

def load_edge_list(source) -> Graph:
    """Parse ``u v [w]`` lines (0-indexed, ``#`` comments) from text or a file object."""
    if isinstance(source, str):
        source = io.StringIO(source)
    edges = []
    n = 0
    for lineno, line in enumerate(source, start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) not in (2, 3):
            raise GraphError(f"line {lineno}: expected 'u v [w]', got {line!r}")
        try:
            u, v = int(parts[0]), int(parts[1])
            w = float(parts[2]) if len(parts) == 3 else 1.0
        except ValueError as exc:
            raise GraphError(f"line {lineno}: {exc}") from None
        if u < 0 or v < 0:
            raise GraphError(f"line {lineno}: negative node index")
        if u == v:
            raise GraphError(f"line {lineno}: self-loop at node {u}")
        edges.append((u, v, w))
        n = max(n, u + 1, v + 1)
    if not edges:
        raise GraphError("edge list is empty")
    return Graph.from_edges(n, edges)


def read_edge_list(path: str | os.PathLike) -> Graph:
    with open(path) as fh:
        return load_edge_list(fh)


# -- generators --------------------------------------------------------------

def generate_er(n: int, p_edge: float, seed: int = 0) -> Graph:
    """Erdős–Rényi G(n, p), resampled until no node is isolated."""
    if not 0.0 <= p_edge <= 1.0:
        raise GraphError(f"p_edge must lie in [0, 1], got {p_edge}")
    if n < 2:
        raise GraphError("ER graph needs n >= 2")
    rng = np.random.default_rng(seed)
    iu, ju = np.triu_indices(n, 1)
    for attempt in range(ER_MAX_RETRIES):
        mask = rng.random(iu.size) < p_edge
        deg = np.bincount(iu[mask], minlength=n) + np.bincount(ju[mask], minlength=n)
        if deg.min() >= 1:
            if attempt:
                log.info("ER(%d, %g): %d resample(s) to avoid isolated nodes", n, p_edge, attempt)
            return Graph.from_edges(n, zip(iu[mask], ju[mask]))
    raise GraphError(f"ER({n}, {p_edge}) produced isolated nodes in {ER_MAX_RETRIES} attempts")


def generate_structured(kind: str, size: int) -> Graph:
    """Deterministic topologies; ``size`` is nodes (path/complete), rungs (ladder) or depth (binary_tree)."""
    if size < 1:
        raise GraphError("size must be >= 1")
    if kind == "path":
        n = size
        edges = [(i, i + 1) for i in range(n - 1)]
    elif kind == "complete":
        n = size
        edges = [(i, j) for i in range(n) for j in range(i + 1, n)]
    elif kind == "ladder":
        n = 2 * size
        edges = [(i, i + size) for i in range(size)]
        edges += [(i, i + 1) for i in range(size - 1)]
        edges += [(size + i, size + i + 1) for i in range(size - 1)]
    elif kind == "binary_tree":
        n = 2 ** (size + 1) - 1
        edges = [((i - 1) // 2, i) for i in range(1, n)]
    else:
        raise GraphError(f"unknown graph kind {kind!r}")
    return Graph.from_edges(n, edges)


# -- matrices ----------------------------------------------------------------

def normalized_laplacian(g: Graph) -> np.ndarray:
    """I - D^{-1/2} W D^{-1/2} as a dense matrix."""
    dw = g.weighted_degree
    if np.any(dw <= 0):
        raise GraphError("normalized Laplacian needs positive weighted degrees")
    s = 1.0 / np.sqrt(dw)
    lap = -(s[:, None] * g.to_dense() * s[None, :])
    np.fill_diagonal(lap, 1.0)
    return lap


def _check_sigma(sigma):
    if not 0.0 < sigma < 1.0:
        raise GraphError(f"sigma must lie in (0, 1), got {sigma}")


def grf_edge_weights(g: Graph, sigma: float) -> np.ndarray:
    """Per-slot weights sigma^2/(1+sigma^2) * W_ij / sqrt(deg_i deg_j)."""
    _check_sigma(sigma)
    dw = g.weighted_degree
    if np.any(dw <= 0):
        raise GraphError("GRF adjacency needs positive weighted degrees")
    rows = np.repeat(np.arange(g.n), g.degree)
    scale = sigma**2 / (1.0 + sigma**2)
    return scale * g.weights / np.sqrt(dw[rows] * dw[g.indices])


def grf_walk_graph(g: Graph, sigma: float) -> Graph:
    """Sparse graph whose weights are the GRF adjacency U; walks run on this."""
    return g.with_weights(grf_edge_weights(g, sigma))


def grf_adjacency(g: Graph, sigma: float) -> np.ndarray:
    """Dense U; its spectral radius is below sigma^2/(1+sigma^2) < 1."""
    return grf_walk_graph(g, sigma).to_dense()


def spectral_radius(m: np.ndarray, tol: float = 1e-10, max_iters: int = 10_000, seed: int = 0) -> float:
    """Largest |eigenvalue| of a symmetric matrix by power iteration.

    Tracks ||M x|| for unit x, which converges to rho(M) even when +rho and
    -rho are both eigenvalues (bipartite graphs).
    """
    m = np.asarray(m, dtype=float)
    if not np.any(m):
        return 0.0
    x = np.random.default_rng(seed).standard_normal(m.shape[0])
    x /= np.linalg.norm(x)
    est, prev_step = -1.0, None
    for _ in range(max_iters):
        # iterate on M^2: sqrt of its Rayleigh quotient is ||M x||
        y = m @ x
        rho = float(np.linalg.norm(y))
        step = abs(rho - est)
        if prev_step:
            # errors shrink geometrically; bound the remaining tail by step * r / (1 - r)
            r = min(step / prev_step, 1.0 - 1e-6)
            if step <= tol and step * r / (1.0 - r) <= tol:
                return rho
        if step == 0.0:
            return rho
        est, prev_step = rho, step
        z = m @ y
        nz = float(np.linalg.norm(z))
        if nz == 0.0:
            return 0.0
        x = z / nz
    raise ConvergenceError(f"power iteration did not converge in {max_iters} iterations")
