"""Closed-form laws for antithetic / offset walk termination.

Everything here is an oracle for the simulator: conditional walk-length
distributions, joint subwalk probabilities on d-regular graphs, and the
eigenvalue-indexed matrices C, D, D_delta, E, F, J whose definiteness
governs the variance of the kernel estimator.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

import numpy as np

from qgrf.coupling import CouplingError

DEFINITE_RTOL = 1e-10


def _check_p(p):
    if not 0.0 < p <= 0.5:
        raise CouplingError(f"need 0 < p <= 1/2, got {p}")


def antithetic_constant(p: float) -> float:
    """c = (1-2p)/(1-p)^2."""
    return (1.0 - 2.0 * p) / (1.0 - p) ** 2


def offset_constant(p: float, delta: float) -> float:
    """(1-p-delta)/(1-p)^2; offsets in [p, 1-p] behave exactly like delta = p."""
    _check_delta(p, delta)
    return (1.0 - p - min(delta, p)) / (1.0 - p) ** 2


def _check_delta(p, delta):
    if not p * (1.0 - p) - 1e-15 <= delta <= 1.0 - p + 1e-15:
        raise CouplingError(f"delta={delta} outside [p(1-p), 1-p]")


# -- walk lengths -------------------------------------------------------------

def conditional_length_pmf(p: float, m: int, i: int) -> float:
    """P(len(walk 2) = i | len(walk 1) = m) for an antithetic pair."""
    _check_p(p)
    if m < 0 or i < 0:
        raise ValueError("lengths are non-negative")
    r = (1.0 - 2.0 * p) / (1.0 - p)
    if i < m:
        return r**i * p / (1.0 - p)
    if i == m:
        return 0.0
    return r**m * (1.0 - p) ** (i - m - 1) * p


def conditional_expected_length(p: float, m: int) -> float:
    _check_p(p)
    return (1.0 - 2.0 * p) / p + 2.0 * ((1.0 - 2.0 * p) / (1.0 - p)) ** m


def marginal_expected_length(p: float) -> float:
    if not 0.0 < p < 1.0:
        raise ValueError(f"need 0 < p < 1, got {p}")
    return (1.0 - p) / p


def joint_subwalk_prob(p: float, d_reg: int, m: int, n: int, scheme: str = "iid",
                       delta: float | None = None) -> float:
    """P(walk 1 contains a given length-m subwalk and walk 2 a given length-n one).

    Both subwalks start at the same node of a d-regular graph and the walkers
    pick neighbours uniformly.  ``scheme`` is ``iid``, ``antithetic`` or
    ``offset`` (with ``delta``).
    """
    if m < 0 or n < 0:
        raise ValueError("lengths are non-negative")
    if scheme == "iid":
        if not 0.0 < p < 1.0:
            raise ValueError(f"need 0 < p < 1, got {p}")
        return ((1.0 - p) / d_reg) ** (m + n)
    _check_p(p)
    if scheme == "antithetic":
        both = 1.0 - 2.0 * p
    elif scheme == "offset":
        if delta is None:
            raise ValueError("offset scheme needs delta")
        _check_delta(p, delta)
        both = 1.0 - p - min(delta, p)
    else:
        raise ValueError(f"unknown scheme {scheme!r}")
    lo, hi = min(m, n), max(m, n)
    # both walkers survive the shared steps, then the longer one continues alone
    return d_reg ** -(m + n) * both**lo * (1.0 - p) ** (hi - lo)


# -- variance-structure matrices --------------------------------------------

@dataclass
class TheoryParams:
    p: float
    w: float
    lambdas: np.ndarray
    delta: float | None = None
    d_reg: int | None = None

    def __post_init__(self):
        _check_p(self.p)
        self.lambdas = np.asarray(self.lambdas, dtype=float)
        if self.w * np.max(np.abs(self.lambdas), initial=0.0) >= 1.0:
            raise ValueError("need w * max|lambda| < 1 for the walk series to converge")
        if self.delta is not None:
            _check_delta(self.p, self.delta)

    @property
    def c(self) -> float:
        return antithetic_constant(self.p)

    @property
    def scaled(self) -> np.ndarray:
        """Eigenvalues of the weighted adjacency, w * lambda."""
        return self.w * self.lambdas


@dataclass
class CorrelationMatrices:
    C: np.ndarray
    D: np.ndarray
    D_delta: np.ndarray | None
    E: np.ndarray
    F: np.ndarray
    J: np.ndarray

    def items(self):
        return [(k, v) for k, v in asdict(self).items() if v is not None]


def _coupled(lb, x, k):
    den = 1.0 - k * x
    if np.any(np.abs(den) < 1e-12):
        raise ZeroDivisionError("1 - c w^2 lambda_p lambda_q vanishes")
    return k * x / den * (1.0 - x) / np.outer(1.0 - lb, 1.0 - lb)


def correlation_matrices(params: TheoryParams) -> CorrelationMatrices:
    lb = params.scaled
    x = np.outer(lb, lb)
    geo = lb / (1.0 - lb)
    C = np.outer(geo, geo)
    D = _coupled(lb, x, params.c)
    D_delta = None
    if params.delta is not None:
        D_delta = _coupled(lb, x, offset_constant(params.p, params.delta))
    E = C * D - C * C
    F = D * D - C * C
    J = (1.0 - x) / np.outer(1.0 - lb, 1.0 - lb) * (D - C)
    return CorrelationMatrices(C, D, D_delta, E, F, J)


@dataclass
class DefinitenessCheck:
    negative_semidefinite: bool
    max_eigenvalue: float
    tolerance: float


def check_negative_semidefinite(m: np.ndarray, tol: float | None = None,
                                rtol: float = DEFINITE_RTOL) -> DefinitenessCheck:
    """lambda_max(m) <= tol; default tol is rtol * ||m||_F."""
    m = np.asarray(m, dtype=float)
    if not np.allclose(m, m.T, rtol=1e-12, atol=1e-300):
        raise ValueError("matrix is not symmetric")
    lam = float(np.linalg.eigvalsh(m)[-1])
    if tol is None:
        tol = rtol * float(np.linalg.norm(m))
    return DefinitenessCheck(lam <= tol, lam, tol)


@dataclass
class TheoryRecord:
    matrix: str
    p: float
    w: float
    delta: float | None
    n_lambdas: int
    lambda_max: float
    tolerance: float
    verdict: str
    max_abs: float = 0.0
    extra: dict = field(default_factory=dict)


def theory_records(params: TheoryParams) -> list[TheoryRecord]:
    """One record per matrix: its top eigenvalue and a negative-semidefinite verdict."""
    out = []
    for name, mat in correlation_matrices(params).items():
        chk = check_negative_semidefinite(mat)
        out.append(TheoryRecord(name, params.p, params.w, params.delta, len(params.lambdas),
                                chk.max_eigenvalue, chk.tolerance,
                                "nsd" if chk.negative_semidefinite else "not-nsd",
                                float(np.max(np.abs(mat), initial=0.0))))
    return out


def records_to_json(records: list[TheoryRecord]) -> str:
    return json.dumps([asdict(r) for r in records], indent=2, sort_keys=True)


def proven_regime(name: str, p: float, w: float) -> bool:
    """Whether nonpositivity of ``name`` is asserted at (p, w) rather than only recorded."""
    if name == "E":
        return True
    if name == "F":
        return w <= 0.1 or p >= 0.45
    if name == "J":
        return w <= 0.1
    return False


def sweep(ps, ws, lambdas, delta=None) -> list[TheoryRecord]:
    out = []
    for p in ps:
        for w in ws:
            out.extend(theory_records(TheoryParams(p, w, lambdas, delta)))
    return out
