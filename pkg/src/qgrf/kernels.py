"""Exact kernel oracles, estimator assembly and error metrics.

Estimator functions accept either a :class:`FeatureMatrix` or a dense array of
shape ``(..., n, n)``; dense inputs with leading batch axes are handled
batch-wise, which the Monte-Carlo tests rely on.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from qgrf.features import FeatureMatrix
from qgrf.graph import Graph, GraphError, _check_oracle_size, normalized_laplacian


@dataclass
class KernelEstimate:
    matrix: np.ndarray
    meta: dict = field(default_factory=dict)


def regularized_operator(g: Graph, sigma: float) -> np.ndarray:
    """I + sigma^2 L~, the inverse of the one-step backward-Euler propagator."""
    return np.eye(g.n) + sigma**2 * normalized_laplacian(g)


def exact_regularized_laplacian(g: Graph, sigma: float, d: int = 2) -> np.ndarray:
    """(I + sigma^2 L~)^{-d} via a Cholesky factorisation reused d times."""
    if d < 1:
        raise ValueError("d must be >= 1")
    _check_oracle_size(g.n)
    try:
        factor = sla.cho_factor(regularized_operator(g, sigma))
    except sla.LinAlgError as exc:
        raise GraphError(f"regularised Laplacian is singular: {exc}") from None
    k = np.eye(g.n)
    for _ in range(d):
        k = sla.cho_solve(factor, k)
    return 0.5 * (k + k.T)


def exact_heat_kernel(g: Graph, t: float) -> np.ndarray:
    if t < 0:
        raise ValueError("t must be non-negative")
    _check_oracle_size(g.n)
    lam, vec = np.linalg.eigh(normalized_laplacian(g))
    return (vec * np.exp(-lam * t)) @ vec.T


def backward_euler_operator(g: Graph, t: float, n_steps: int) -> np.ndarray:
    """(I + (t/N) L~)^{-N}: N implicit Euler steps of the heat equation."""
    if n_steps < 1:
        raise ValueError("n_steps must be >= 1")
    _check_oracle_size(g.n)
    lam, vec = np.linalg.eigh(normalized_laplacian(g))
    return (vec * (1.0 + lam * t / n_steps) ** (-float(n_steps))) @ vec.T


def _dense(phi):
    if isinstance(phi, FeatureMatrix):
        return phi.to_dense()
    return np.asarray(phi, dtype=float)


def _gram(phi, phi_alt=None):
    if isinstance(phi, FeatureMatrix):
        a = phi.matrix
        g = (a @ a.T).toarray()
        second = phi.second if phi_alt is None else getattr(phi_alt, "matrix", phi_alt)
        if second is not None:
            np.fill_diagonal(g, np.asarray(a.multiply(second).sum(axis=1)).ravel())
        return g, second is not None
    a = np.asarray(phi, dtype=float)
    g = a @ np.swapaxes(a, -1, -2)
    if phi_alt is not None:
        b = _dense(phi_alt)
        idx = np.arange(a.shape[-1])
        g[..., idx, idx] = np.einsum("...ix,...ix->...i", a, b)
    return g, phi_alt is not None


def estimate_k2(phi, sigma: float, phi_alt=None) -> KernelEstimate:
    """(1+sigma^2)^{-2} Phi Phi^T.

    Off-diagonal entries are unbiased.  The diagonal is the same-ensemble
    product (slightly biased) unless a second independent ensemble is
    available, either as ``phi_alt`` or as ``phi.second``.
    """
    t0 = time.perf_counter()
    if not isinstance(phi, FeatureMatrix):
        a = np.asarray(phi)
        if a.ndim < 2 or a.shape[-1] != a.shape[-2]:
            raise ValueError(f"feature matrix must be square, got shape {a.shape}")
    g, unbiased_diag = _gram(phi, phi_alt)
    meta = {"diagonal": "two-ensemble" if unbiased_diag else "same-ensemble",
            "wall_time": time.perf_counter() - t0}
    if isinstance(phi, FeatureMatrix):
        meta.update(phi.config.echo(), truncated=phi.truncated)
    return KernelEstimate(g / (1.0 + sigma**2) ** 2, meta)


def estimate_kd(phis, sigma: float, d: int, laplacian: np.ndarray) -> KernelEstimate:
    """Unbiased estimate of (I + sigma^2 L~)^{-d} for any d >= 1.

    K^(d) = prod_k K2_k  @  (I + sigma^2 L~)^{2*ceil(d/2) - d} with ceil(d/2)
    independent K^(2) estimates.  Only d = 2 can use a same-ensemble
    diagonal; for other d the diagonal feeds off-diagonal entries through the
    matrix products, so every factor must carry a second ensemble.
    ``phis`` is one feature matrix or a sequence of ``(phi, phi_alt)`` /
    two-ensemble :class:`FeatureMatrix` factors.
    """
    if d < 1:
        raise ValueError("d must be >= 1")
    factors = list(phis) if isinstance(phis, (list, tuple)) else [phis]
    need = -(-d // 2)
    if len(factors) < need:
        raise ValueError(f"d={d} needs {need} independent feature matrices, got {len(factors)}")
    factors = factors[:need]
    estimates = []
    for f in factors:
        phi, alt = f if isinstance(f, tuple) else (f, None)
        est = estimate_k2(phi, sigma, alt)
        if d != 2 and est.meta["diagonal"] != "two-ensemble":
            raise ValueError("d != 2 needs two-ensemble diagonals for unbiasedness")
        estimates.append(est)
    k = estimates[0].matrix
    n = k.shape[-1]
    if np.shape(laplacian)[-1] != n:
        raise ValueError("laplacian and features disagree on n")
    for e in estimates[1:]:
        k = k @ e.matrix
    if d % 2:
        k = k @ (np.eye(n) + sigma**2 * np.asarray(laplacian))
    return KernelEstimate(k, {"d": d, "factors": need, **estimates[0].meta})


def relative_frobenius_error(exact: np.ndarray, approx: np.ndarray) -> float:
    """||K - K^||_F^2 / ||K||_F^2."""
    exact = np.asarray(exact, dtype=float)
    approx = np.asarray(approx, dtype=float)
    if exact.shape != approx.shape:
        raise ValueError(f"shape mismatch {exact.shape} vs {approx.shape}")
    denom = float(np.sum(exact**2))
    if denom == 0.0:
        raise ValueError("exact matrix has zero Frobenius norm")
    return float(np.sum((exact - approx) ** 2)) / denom


def low_rank_apply(phi, v: np.ndarray, sigma: float) -> np.ndarray:
    """(1+sigma^2)^{-2} Phi (Phi^T v) without forming Phi Phi^T."""
    a = phi.matrix if isinstance(phi, FeatureMatrix) else phi
    return (a @ (a.T @ v)) / (1.0 + sigma**2) ** 2

