"""Random-walk simulation and GRF / q-GRF feature assembly.

Walks run on a graph whose edge weights *are* the matrix U being inverted, so
for features ``phi`` built here ``E[phi(i) . phi(j)] = (I - U)^{-2}_{ij}`` for
``i != j``.  Use :func:`qgrf.graph.grf_walk_graph` to get U from a raw graph.

Each walk deposits its running load at every visited prefix, the length-0
prefix included.  The load is multiplied at every step by
``weight / P(step)``: ``w_ij * deg(i) / (1 - p)`` for uniform neighbour
sampling and ``deg_W(i) / (1 - p)`` for weight-proportional sampling.
"""

from __future__ import annotations

import csv
import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.sparse as sp

from qgrf.coupling import CouplingScheme, walker_trvs
from qgrf.graph import Graph, GraphError
from qgrf.streams import TAG_DIRECTION, keyed_uniform

log = logging.getLogger(__name__)

UNIFORM = "uniform"
WEIGHTED = "weighted"
TRUNCATION_WARN_RATE = 1e-9


def default_max_steps(p: float) -> int:
    """Smallest cap with truncation probability (1-p)^cap below 1e-12."""
    return math.ceil(-12.0 * math.log(10.0) / math.log1p(-p))


@dataclass(frozen=True)
class WalkConfig:
    m: int = 16
    p: float = 0.5
    scheme: CouplingScheme = field(default_factory=CouplingScheme.iid)
    strategy: str = UNIFORM
    max_steps: int | None = None
    seed: int = 0

    def __post_init__(self):
        if self.m < 1:
            raise ValueError("need at least one walk per node")
        if self.strategy not in (UNIFORM, WEIGHTED):
            raise ValueError(f"unknown strategy {self.strategy!r}")
        self.scheme.validate(self.p, self.m)
        if self.max_steps is None:
            object.__setattr__(self, "max_steps", default_max_steps(self.p))
        if self.max_steps < 1:
            raise ValueError("max_steps must be >= 1")

    def validate_for(self, g: Graph) -> None:
        if self.strategy == WEIGHTED and np.any(g.weights <= 0):
            raise GraphError("weight-proportional sampling needs strictly positive weights")

    def echo(self) -> dict:
        return {"m": self.m, "p": self.p, "scheme": self.scheme.label(), "strategy": self.strategy,
                "max_steps": self.max_steps, "seed": self.seed}


@dataclass
class FeatureVector:
    source: int
    loads: dict[int, float]

    def dot(self, other: "FeatureVector") -> float:
        small, big = sorted((self.loads, other.loads), key=len)
        return float(sum(v * big[k] for k, v in small.items() if k in big))


@dataclass
class FeatureMatrix:
    """Row i holds phi(i); optionally a second independent ensemble for diagonals."""

    matrix: sp.csr_matrix
    config: WalkConfig
    truncated: int = 0
    second: sp.csr_matrix | None = None

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    def row(self, i: int) -> FeatureVector:
        lo, hi = self.matrix.indptr[i], self.matrix.indptr[i + 1]
        return FeatureVector(i, dict(zip(self.matrix.indices[lo:hi].tolist(), self.matrix.data[lo:hi].tolist())))

    def to_dense(self) -> np.ndarray:
        return self.matrix.toarray()

    def save(self, path: str | os.PathLike) -> None:
        """Columnar CSV: ``source,node,load`` with one line per non-zero load."""
        coo = self.matrix.tocoo()
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["source", "node", "load"])
            for r, c, v in zip(coo.row.tolist(), coo.col.tolist(), coo.data.tolist()):
                w.writerow([r, c, repr(v)])


def load_feature_csv(path: str | os.PathLike, n: int) -> sp.csr_matrix:
    rows, cols, vals = [], [], []
    with open(path, newline="") as fh:
        for rec in csv.DictReader(fh):
            rows.append(int(rec["source"]))
            cols.append(int(rec["node"]))
            vals.append(float(rec["load"]))
    return sp.csr_matrix((vals, (rows, cols)), shape=(n, n))


# -- simulator --------------------------------------------------------------

class _Tables:
    """Per-edge multipliers and sampling tables for one graph/config pair."""

    def __init__(self, g: Graph, config: WalkConfig):
        deg = g.degree
        degw = g.weighted_degree
        rows = np.repeat(np.arange(g.n), deg)
        q = 1.0 - config.p
        if config.strategy == UNIFORM:
            self.mult = g.weights * deg[rows] / q
            self.key = None
        else:
            self.mult = degw[rows] / q
            # row index + within-row cumulative probability, last slot exactly row+1
            local = np.cumsum(g.weights) - np.repeat(np.concatenate([[0.0], np.cumsum(g.weights)])[g.indptr[:-1]], deg)
            frac = local / degw[rows]
            frac[g.indptr[1:] - 1] = 1.0
            self.key = rows + frac
        self.indptr = g.indptr
        self.indices = g.indices
        self.deg = deg

    def step(self, cur: np.ndarray, u: np.ndarray) -> np.ndarray:
        """Edge slot chosen from node ``cur`` given direction uniform ``u``."""
        lo = self.indptr[cur]
        if self.key is None:
            off = np.minimum((u * self.deg[cur]).astype(np.int64), self.deg[cur] - 1)
            return lo + off
        slot = np.searchsorted(self.key, cur + u, side="right")
        return np.clip(slot, lo, self.indptr[cur + 1] - 1)


@dataclass
class WalkBatch:
    """Raw output of :func:`simulate`: deposits as COO triplets plus walk lengths."""

    rows: np.ndarray
    cols: np.ndarray
    loads: np.ndarray
    lengths: np.ndarray
    truncated: int
    walk_ids: np.ndarray | None = None


def simulate(g: Graph, config: WalkConfig, sources, ensembles=0, stream: int = 0,
             tables: _Tables | None = None) -> WalkBatch:
    """Run ``m`` walks out of each (source, ensemble) row.

    ``sources`` and ``ensembles`` broadcast to a flat list of R rows.  Deposits
    are emitted step by step in (row, walker) order, so a row's contributions
    always arrive in the same order whatever else is in the batch.
    """
    config.validate_for(g)
    sources, ensembles = np.broadcast_arrays(np.asarray(sources, dtype=np.int64),
                                             np.asarray(ensembles, dtype=np.int64))
    sources, ensembles = sources.ravel(), ensembles.ravel()
    if sources.size and (sources.min() < 0 or sources.max() >= g.n):
        raise GraphError("source node out of range")
    tables = tables or _Tables(g, config)
    m, scheme, seed = config.m, config.scheme, config.seed
    R = sources.size

    row = np.repeat(np.arange(R), m)
    walker = np.tile(np.arange(m), R)
    src = sources[row]
    ens = ensembles[row]
    cur = src.copy()
    load = np.ones(row.size)
    lengths = np.zeros(R * m, dtype=np.int64)
    alive = np.arange(R * m)

    out_r, out_c, out_l, out_w = [], [], [], []
    truncated = 0
    for step in range(config.max_steps + 1):
        out_r.append(row)
        out_c.append(cur)
        out_l.append(load)
        out_w.append(alive)
        if step == config.max_steps:
            truncated = int(row.size)
            break
        trv = walker_trvs(seed, stream, ens, src, walker, step, scheme)
        go = trv >= config.p
        if not go.any():
            break
        row, walker, src, ens, cur, load, alive = (a[go] for a in (row, walker, src, ens, cur, load, alive))
        lengths[alive] += 1
        u = keyed_uniform(seed, stream, ens, src, walker, step, TAG_DIRECTION)
        slot = tables.step(cur, u)
        cur = tables.indices[slot]
        load = load * tables.mult[slot]

    if truncated:
        rate = truncated / max(R * m, 1)
        level = logging.WARNING if rate > TRUNCATION_WARN_RATE else logging.DEBUG
        log.log(level, "%d of %d walks truncated at max_steps=%d", truncated, R * m, config.max_steps)
    return WalkBatch(np.concatenate(out_r), np.concatenate(out_c), np.concatenate(out_l),
                     lengths.reshape(R, m), truncated, np.concatenate(out_w))


def _accumulate(batch: WalkBatch, n_rows: int, n: int, m: int) -> sp.csr_matrix:
    keys = batch.rows * n + batch.cols
    uniq, inv = np.unique(keys, return_inverse=True)
    vals = np.bincount(inv, weights=batch.loads) / m
    return sp.csr_matrix((vals, (uniq // n, uniq % n)), shape=(n_rows, n))


def dense_features(g: Graph, config: WalkConfig, ensembles, stream: int = 0) -> np.ndarray:
    """Feature matrices for many ensembles at once, shape (E, n, n); small graphs only."""
    ensembles = np.asarray(ensembles, dtype=np.int64).ravel()
    E, n = ensembles.size, g.n
    batch = simulate(g, config, np.arange(n)[None, :], ensembles[:, None], stream)
    flat = np.bincount(batch.rows * n + batch.cols, weights=batch.loads, minlength=E * n * n)
    return flat.reshape(E, n, n) / config.m


def walk_lengths(g: Graph, config: WalkConfig, sources, ensembles=0, stream: int = 0) -> np.ndarray:
    """Lengths (edges traversed) of every walk, shape (rows, m)."""
    return simulate(g, config, sources, ensembles, stream).lengths


def walk_paths(g: Graph, config: WalkConfig, sources, ensembles=0, stream: int = 0) -> list[list[list[int]]]:
    """Node sequences of every walk: ``paths[row][walker]``."""
    batch = simulate(g, config, sources, ensembles, stream)
    R, m = batch.lengths.shape
    # deposits arrive step by step, so a stable sort by walk id keeps each path in order
    order = np.argsort(batch.walk_ids, kind="stable")
    flat = np.split(batch.cols[order], np.cumsum(batch.lengths.ravel() + 1)[:-1])
    return [[flat[r * m + w].tolist() for w in range(m)] for r in range(R)]


def sample_walk(g: Graph, start: int, config: WalkConfig, walker: int = 0, ensemble: int = 0,
                stream: int = 0) -> list[int]:
    """Node sequence of one walker, using the same keyed draws as :func:`simulate`."""
    if not 0 <= start < g.n:
        raise GraphError("start node out of range")
    config.validate_for(g)
    tables = _Tables(g, config)
    path = [start]
    cur = start
    for step in range(config.max_steps):
        trv = walker_trvs(config.seed, stream, ensemble, start, walker, step, config.scheme)
        if trv < config.p:
            break
        u = keyed_uniform(config.seed, stream, ensemble, start, walker, step, TAG_DIRECTION)
        cur = int(tables.indices[tables.step(np.array([cur]), np.atleast_1d(u))[0]])
        path.append(cur)
    return path


def prefix_load_multiplier(g: Graph, frm: int, to: int, p: float, strategy: str = UNIFORM) -> float:
    """Factor by which a walk's load grows when it traverses ``frm -> to``."""
    nbrs = dict(g.neighbors(frm))
    if to not in nbrs:
        raise GraphError(f"no edge ({frm}, {to})")
    if strategy == UNIFORM:
        return nbrs[to] * len(nbrs) / (1.0 - p)
    if strategy == WEIGHTED:
        return sum(nbrs.values()) / (1.0 - p)
    raise ValueError(f"unknown strategy {strategy!r}")


# -- feature builders -------------------------------------------------------

def build_feature(g: Graph, i: int, config: WalkConfig, ensemble: int = 0, stream: int = 0) -> FeatureVector:
    batch = simulate(g, config, [i], ensemble, stream)
    mat = _accumulate(batch, 1, g.n, config.m)
    return FeatureVector(i, dict(zip(mat.indices.tolist(), mat.data.tolist())))


def _build_rows(g, config, nodes, ensemble, stream, tables):
    batch = simulate(g, config, nodes, ensemble, stream, tables)
    return _accumulate(batch, len(nodes), g.n, config.m), batch.truncated


def build_feature_matrix(g: Graph, config: WalkConfig, ensemble: int = 0, *, two_ensemble: bool = False,
                         workers: int | None = None, chunk: int = 512) -> FeatureMatrix:
    """phi(i) for every node.  ``workers > 1`` builds row chunks on a thread pool.

    Rows are independent and keyed, so the result is bit-identical for any
    ``workers``/``chunk`` choice.
    """
    tables = _Tables(g, config)
    chunks = [np.arange(lo, min(lo + chunk, g.n)) for lo in range(0, g.n, chunk)]

    def run(stream):
        jobs = [(g, config, c, ensemble, stream, tables) for c in chunks]
        if workers and workers > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                parts = list(pool.map(lambda a: _build_rows(*a), jobs))
        else:
            parts = [_build_rows(*a) for a in jobs]
        return sp.vstack([p[0] for p in parts], format="csr"), sum(p[1] for p in parts)

    mat, trunc = run(0)
    second = None
    if two_ensemble:
        second, t2 = run(1)
        trunc += t2
    return FeatureMatrix(mat, config, trunc, second)


def estimate_diagonal(g: Graph, i: int, config: WalkConfig, ensemble: int = 0) -> float:
    """phi_1(i) . phi_2(i) from two independent ensembles; unbiased for (I-U)^{-2}_ii."""
    a = build_feature(g, i, config, ensemble, stream=0)
    b = build_feature(g, i, config, ensemble, stream=1)
    return a.dot(b)


def with_scheme(config: WalkConfig, scheme: CouplingScheme, **kw) -> WalkConfig:
    return replace(config, scheme=scheme, max_steps=kw.pop("max_steps", None), **kw)
