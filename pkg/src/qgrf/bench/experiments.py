"""Desk-scale versions of the four GRF / q-GRF experiments.

Repeat ``r`` of every experiment uses feature ensemble ``r`` under one seed,
so different schemes at the same repeat share their direction draws and the
comparison is paired.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Sequence

import numpy as np

from qgrf.bench.cluster import clustering_error, kernelized_kmeans
from qgrf.bench.mesh import Mesh, mesh_graph, torus_mesh, vertex_normals
from qgrf.bench.report import ExperimentReport
from qgrf.coupling import CouplingScheme
from qgrf.features import UNIFORM, FeatureMatrix, WalkConfig, build_feature_matrix
from qgrf.graph import (Graph, GraphError, ORACLE_LIMIT, generate_er, generate_structured,
                        grf_walk_graph, read_edge_list)
from qgrf.kernels import (backward_euler_operator, estimate_k2, exact_regularized_laplacian,
                          relative_frobenius_error)

log = logging.getLogger(__name__)

DEFAULT_SCHEMES = (CouplingScheme.iid(), CouplingScheme.antithetic())


def _map(fn, items, workers):
    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, items))
    return [fn(x) for x in items]


# -- inputs -------------------------------------------------------------------

def parse_generator(spec: str, seed: int = 0) -> Graph | Mesh:
    """``er:<n>:<p>``, ``tree:<depth>``, ``ladder:<rungs>``, ``path:<n>``,
    ``complete:<n>`` or ``torus:<major>:<minor>`` (the last returns a Mesh)."""
    kind, *args = spec.split(":")
    try:
        if kind == "er" and len(args) == 2:
            return generate_er(int(args[0]), float(args[1]), seed)
        if kind == "tree" and len(args) == 1:
            return generate_structured("binary_tree", int(args[0]))
        if kind in ("ladder", "path", "complete") and len(args) == 1:
            return generate_structured(kind, int(args[0]))
        if kind == "torus" and len(args) == 2:
            return torus_mesh(int(args[0]), int(args[1]))
    except ValueError as exc:
        raise GraphError(f"bad generator spec {spec!r}: {exc}") from None
    raise GraphError(f"bad generator spec {spec!r}")


def load_graph(path: str | None = None, generator: str | None = None, seed: int = 0) -> Graph:
    if (path is None) == (generator is None):
        raise GraphError("give exactly one of a graph file or a generator spec")
    if path is not None:
        return read_edge_list(path)
    obj = parse_generator(generator, seed)
    return mesh_graph(obj) if isinstance(obj, Mesh) else obj


def _config(m, p, scheme, seed, strategy=UNIFORM):
    return WalkConfig(m=m, p=p, scheme=scheme, strategy=strategy, seed=seed)


def _check_oracle(g):
    if g.n > ORACLE_LIMIT:
        raise GraphError(f"exact oracle needs n <= {ORACLE_LIMIT}, graph has {g.n} nodes")


# -- kernel approximation -----------------------------------------------------

def run_frobenius(g: Graph, sigma: float = 0.1, p: float = 0.5, m_list: Sequence[int] = (2, 4, 8, 16),
                  schemes: Sequence[CouplingScheme] = DEFAULT_SCHEMES, repeats: int = 100, seed: int = 0,
                  two_ensemble: bool = False, strategy: str = UNIFORM,
                  feature_fn: Callable | None = None, workers: int | None = None) -> ExperimentReport:
    """Relative Frobenius error of the K^(2) estimate per (m, scheme).

    ``feature_fn(walk_graph, config, repeat)`` replaces the random features
    (a test hook).
    """
    _check_oracle(g)
    exact = exact_regularized_laplacian(g, sigma, 2)
    wg = grf_walk_graph(g, sigma)
    report = ExperimentReport("frobenius", {
        "n": g.n, "edges": g.num_edges, "sigma": sigma, "p": p, "m": list(m_list), "repeats": repeats,
        "seed": seed, "schemes": [s.label() for s in schemes], "strategy": strategy,
        "diagonal": "two-ensemble" if two_ensemble else "same-ensemble"})
    for m in m_list:
        for scheme in schemes:
            cfg = _config(m, p, scheme, seed, strategy)

            def one(r, cfg=cfg):
                phi = (feature_fn(wg, cfg, r) if feature_fn
                       else build_feature_matrix(wg, cfg, r, two_ensemble=two_ensemble))
                return relative_frobenius_error(exact, estimate_k2(phi, sigma).matrix)

            report.add(_map(one, range(repeats), workers), m=m, scheme=scheme.label())
    return report


# -- diffusion ----------------------------------------------------------------

def simulate_diffusion(g: Graph, t: float = 1.0, n_steps: int = 1000, m: int = 10, p: float = 0.5,
                       schemes: Sequence[CouplingScheme] = DEFAULT_SCHEMES, repeats: int = 100, seed: int = 0,
                       source: int = 0, operator: Callable | None = None,
                       workers: int | None = None) -> ExperimentReport:
    """Heat diffusion from a one-hot state by n_steps/2 applications of a K^(2) estimate.

    The reference is the exact discrete propagator (I + (t/N) L~)^{-N} u0.
    Rows: ``mse`` is the squared error summed over nodes, averaged over
    repeats (the scale of the published table); ``mse_per_node`` divides it
    by n.  ``operator(v)`` substitutes a fixed K^(2) application (test hook).
    """
    if n_steps < 2 or n_steps % 2:
        raise ValueError("n_steps must be even")
    _check_oracle(g)
    sigma = math.sqrt(t / n_steps)
    u0 = np.zeros(g.n)
    u0[source] = 1.0
    reference = backward_euler_operator(g, t, n_steps) @ u0
    wg = grf_walk_graph(g, sigma)
    report = ExperimentReport("diffuse", {
        "n": g.n, "edges": g.num_edges, "t": t, "n_steps": n_steps, "sigma_sq": t / n_steps, "m": m, "p": p,
        "repeats": repeats, "seed": seed, "source": source, "schemes": [s.label() for s in schemes]})

    def evolve(apply):
        v = u0
        for _ in range(n_steps // 2):
            v = apply(v)
        return float(np.sum((v - reference) ** 2))

    if operator is not None:
        errs = [evolve(operator)]
        report.add(errs, scheme="custom", metric="mse")
        report.add([e / g.n for e in errs], scheme="custom", metric="mse_per_node")
        return report
    for scheme in schemes:
        cfg = _config(m, p, scheme, seed)

        def one(r, cfg=cfg):
            phi = build_feature_matrix(wg, cfg, r).matrix.tocsr()
            phi_t = phi.T.tocsr()
            scale = (1.0 + sigma**2) ** -2
            return evolve(lambda v: scale * (phi @ (phi_t @ v)))

        errs = _map(one, range(repeats), workers)
        report.add(errs, scheme=scheme.label(), metric="mse")
        report.add([e / g.n for e in errs], scheme=scheme.label(), metric="mse_per_node")
    return report


# -- clustering ---------------------------------------------------------------

def run_clustering(g: Graph, n_clusters: int = 2, sigma: float = 0.1, p: float = 0.5, m: int = 16,
                   schemes: Sequence[CouplingScheme] = DEFAULT_SCHEMES, repeats: int = 10, seed: int = 0,
                   reference: np.ndarray | None = None, workers: int | None = None) -> ExperimentReport:
    """Clustering error of k-means on estimated kernels against a reference partition.

    Without ``reference`` the partition from the exact K^(2) is used.
    """
    _check_oracle(g)
    if reference is None:
        reference = kernelized_kmeans(exact_regularized_laplacian(g, sigma, 2), n_clusters, seed=seed)
    wg = grf_walk_graph(g, sigma)
    report = ExperimentReport("cluster", {
        "n": g.n, "edges": g.num_edges, "n_clusters": n_clusters, "sigma": sigma, "p": p, "m": m,
        "repeats": repeats, "seed": seed, "schemes": [s.label() for s in schemes]})
    for scheme in schemes:
        cfg = _config(m, p, scheme, seed)

        def one(r, cfg=cfg):
            k = estimate_k2(build_feature_matrix(wg, cfg, r), sigma).matrix
            return clustering_error(kernelized_kmeans(k, n_clusters, seed=seed + r), reference)

        report.add(_map(one, range(repeats), workers), scheme=scheme.label())
    return report


# -- regression ---------------------------------------------------------------

def split_vertices(n: int, test_fraction: float, seed: int, split: int):
    if not 0.0 < test_fraction < 0.5:
        raise ValueError("test_fraction must lie in (0, 0.5)")
    rng = np.random.default_rng([seed, split])
    k = max(1, int(round(test_fraction * n)))
    test = np.sort(rng.choice(n, size=k, replace=False))
    return test, np.setdiff1d(np.arange(n), test)


def predict_normals(kernel_rows: np.ndarray, train_normals: np.ndarray):
    """Kernel-weighted mean of training normals; rows with no kernel mass are flagged."""
    den = kernel_rows.sum(axis=1)
    pred = kernel_rows @ train_normals
    norm = np.linalg.norm(pred, axis=1)
    flagged = (den == 0) | (norm == 0)
    safe = np.where(flagged, 1.0, norm)
    return pred / safe[:, None], flagged


def regression_errors(mesh: Mesh, test_fraction: float = 0.05, sigma: float = 0.1, m: int = 6, p: float = 0.5,
                      scheme: CouplingScheme = CouplingScheme.iid(), seed: int = 0, split: int = 0,
                      normals: np.ndarray | None = None, graph: Graph | None = None,
                      features: FeatureMatrix | None = None, kernel_fn: Callable | None = None):
    """Per-test-vertex 1 - cos(angle) and the flagged mask (zero kernel mass -> error 1).

    ``kernel_fn(test, train)`` returns a dense kernel block and bypasses the
    random features.
    """
    g = graph if graph is not None else mesh_graph(mesh)
    normals = vertex_normals(mesh) if normals is None else normals
    test, train = split_vertices(g.n, test_fraction, seed, split)
    if kernel_fn is not None:
        block = np.asarray(kernel_fn(test, train), dtype=float)
    else:
        if features is None:
            features = build_feature_matrix(grf_walk_graph(g, sigma), _config(m, p, scheme, seed), split)
        phi = features.matrix
        block = (phi[test] @ phi[train].T).toarray() / (1.0 + sigma**2) ** 2
    pred, flagged = predict_normals(block, normals[train])
    err = 1.0 - np.sum(pred * normals[test], axis=1)
    err[flagged] = 1.0
    if flagged.any():
        log.debug("%d test vertices had no kernel mass on the training set", int(flagged.sum()))
    return err, flagged


def kernel_regress_normals(mesh: Mesh, test_fraction: float = 0.05, sigma: float = 0.1, m: int = 6,
                           p: float = 0.5, scheme: CouplingScheme = CouplingScheme.iid(), seed: int = 0,
                           split: int = 0, **kw) -> float:
    err, _ = regression_errors(mesh, test_fraction, sigma, m, p, scheme, seed, split, **kw)
    return float(err.mean())


def run_regression(mesh: Mesh, test_fraction: float = 0.05, sigma: float = 0.1, m: int = 6, p: float = 0.5,
                   schemes: Sequence[CouplingScheme] = DEFAULT_SCHEMES, repeats: int = 50, seed: int = 0,
                   workers: int | None = None) -> ExperimentReport:
    g = mesh_graph(mesh)
    normals = vertex_normals(mesh)
    wg = grf_walk_graph(g, sigma)
    report = ExperimentReport("regress", {
        "n": g.n, "faces": int(len(mesh.faces)), "test_fraction": test_fraction, "sigma": sigma, "m": m, "p": p,
        "repeats": repeats, "seed": seed, "schemes": [s.label() for s in schemes]})
    for scheme in schemes:
        cfg = _config(m, p, scheme, seed)

        def one(r, cfg=cfg):
            feats = build_feature_matrix(wg, cfg, r)
            err, _ = regression_errors(mesh, test_fraction, sigma, m, p, scheme, seed, r,
                                       normals=normals, graph=g, features=feats)
            return float(err.mean())

        report.add(_map(one, range(repeats), workers), scheme=scheme.label())
    return report
