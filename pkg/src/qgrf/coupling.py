"""Coupled termination random variables (TRVs).

A walker terminates at a step when its TRV is below ``p``.  Walkers out of the
same node are split into groups; inside a group every walker shares one base
uniform per step and adds a fixed mod-1 offset to it, so each walker's TRV is
still marginally Unif[0, 1) while terminations are correlated.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from qgrf.streams import TAG_TRV, keyed_uniform

IID = "iid"
ANTITHETIC = "antithetic"
ENSEMBLE = "ensemble"


class CouplingError(ValueError):
    pass


@dataclass(frozen=True)
class CouplingScheme:
    variant: str = IID
    delta: float | None = None
    group_size: int = 1

    def __post_init__(self):
        if self.variant == IID:
            if self.delta is not None or self.group_size != 1:
                raise CouplingError("iid scheme takes no delta/group_size")
        elif self.variant == ANTITHETIC:
            if self.group_size != 2 or self.delta not in (None, 0.5):
                raise CouplingError("antithetic pairs have delta=1/2 and group_size=2")
            object.__setattr__(self, "delta", 0.5)
        elif self.variant == ENSEMBLE:
            if self.delta is None or not 0.0 < self.delta < 1.0:
                raise CouplingError(f"offset ensemble needs delta in (0, 1), got {self.delta}")
            if self.group_size < 2:
                raise CouplingError("offset ensemble needs group_size >= 2")
            if self.group_size > math.floor(1.0 / self.delta + 1e-12):
                raise CouplingError(
                    f"group_size {self.group_size} exceeds floor(1/delta) = {math.floor(1 / self.delta + 1e-12)}")
        else:
            raise CouplingError(f"unknown coupling variant {self.variant!r}")

    @classmethod
    def iid(cls) -> "CouplingScheme":
        return cls(IID)

    @classmethod
    def antithetic(cls) -> "CouplingScheme":
        return cls(ANTITHETIC, 0.5, 2)

    @classmethod
    def offset(cls, delta: float, group_size: int = 2) -> "CouplingScheme":
        return cls(ENSEMBLE, float(delta), int(group_size))

    @classmethod
    def from_name(cls, name: str, delta: float | None = None, group_size: int | None = None) -> "CouplingScheme":
        if name == IID:
            if delta is not None:
                raise CouplingError("--delta is meaningless for the iid scheme")
            return cls.iid()
        if name == ANTITHETIC:
            if delta not in (None, 0.5):
                raise CouplingError("antithetic pairs use delta=1/2; use the ensemble scheme for other offsets")
            return cls.antithetic()
        if name == ENSEMBLE:
            if delta is None:
                raise CouplingError("ensemble scheme needs a delta")
            if group_size is None:
                group_size = math.floor(1.0 / delta + 1e-12)
            return cls.offset(delta, group_size)
        raise CouplingError(f"unknown scheme {name!r}")

    @property
    def offsets(self) -> np.ndarray:
        if self.variant == IID:
            return np.zeros(1)
        return np.mod(np.arange(self.group_size) * self.delta, 1.0)

    @property
    def coupled(self) -> bool:
        return self.variant != IID

    def validate(self, p: float, m: int | None = None) -> None:
        check_termination_probability(p, self)
        if self.variant == ENSEMBLE and self.delta < p * (1.0 - p) - 1e-15:
            raise CouplingError(f"delta={self.delta} below p(1-p)={p * (1 - p)}")
        if m is not None and m % self.group_size:
            raise CouplingError(f"m={m} walkers is not a multiple of the group size {self.group_size}")

    def label(self) -> str:
        if self.variant == ENSEMBLE:
            return f"ensemble(delta={self.delta:g},k={self.group_size})"
        return self.variant


def check_termination_probability(p: float, scheme: CouplingScheme | None = None) -> None:
    if scheme is not None and scheme.coupled:
        if not 0.0 < p <= 0.5:
            raise CouplingError(f"coupled schemes need 0 < p <= 1/2, got {p}")
    elif not 0.0 < p < 1.0:
        raise CouplingError(f"termination probability must lie in (0, 1), got {p}")


def coupled_trvs(base, scheme: CouplingScheme) -> np.ndarray:
    """Expand base draws of shape (..., groups) to TRVs of shape (..., groups*group_size)."""
    base = np.asarray(base, dtype=float)
    trv = np.mod(base[..., None] + scheme.offsets, 1.0)
    return trv.reshape(*base.shape[:-1], -1)


@dataclass(frozen=True)
class TrvStream:
    """Keyed TRVs for the ``m`` walkers leaving one node in one ensemble."""

    scheme: CouplingScheme
    m: int
    seed: int = 0
    node: int = 0
    ensemble: int = 0
    stream: int = 0

    def __post_init__(self):
        if self.m < 1 or self.m % self.scheme.group_size:
            raise CouplingError(f"m={self.m} incompatible with group size {self.scheme.group_size}")


def base_uniforms(seed, stream, ensemble, node, group, step):
    return keyed_uniform(seed, stream, ensemble, node, group, step, TAG_TRV)


def walker_trvs(seed, stream, ensemble, node, walker, step, scheme: CouplingScheme):
    """TRV of individual walkers (vectorised over any of the key arrays)."""
    walker = np.asarray(walker)
    g = scheme.group_size
    base = base_uniforms(seed, stream, ensemble, node, walker // g, step)
    return np.mod(base + scheme.offsets[walker % g], 1.0)


def draw_step_trvs(stream: TrvStream, step: int) -> np.ndarray:
    groups = stream.m // stream.scheme.group_size
    base = base_uniforms(stream.seed, stream.stream, stream.ensemble, stream.node, np.arange(groups), step)
    return coupled_trvs(base, stream.scheme)


def terminates(trv, p: float, scheme: CouplingScheme | None = None):
    check_termination_probability(p, scheme)
    return np.asarray(trv) < p if np.ndim(trv) else bool(trv < p)


class JointTermination(NamedTuple):
    s2_given_s1: float
    not_s2_given_s1: float
    s2_given_not_s1: float
    not_s2_given_not_s1: float


def joint_termination_probs(p: float, delta: float) -> JointTermination:
    """Per-step conditional termination law of a pair whose TRVs differ by ``delta`` mod 1."""
    if not 0.0 < p <= 0.5:
        raise CouplingError(f"need 0 < p <= 1/2, got {p}")
    if not p * (1.0 - p) - 1e-15 <= delta <= 1.0 - p + 1e-15:
        raise CouplingError(f"delta={delta} outside [p(1-p), 1-p] = [{p * (1 - p)}, {1 - p}]")
    if delta >= p:
        return JointTermination(0.0, 1.0, p / (1.0 - p), (1.0 - 2.0 * p) / (1.0 - p))
    return JointTermination((p - delta) / p, delta / p, delta / (1.0 - p), (1.0 - p - delta) / (1.0 - p))


def max_mutually_antithetic(p: float) -> int:
    if not 0.0 < p <= 0.5:
        raise CouplingError(f"need 0 < p <= 1/2, got {p}")
    return math.floor(1.0 / p + 1e-12)
