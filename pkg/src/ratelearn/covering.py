"""Epsilon-nets and covering numbers of a finite family of pmfs.

Nets are subsets of the family itself and distances are measured in the
F-norm. Entropies are in bits.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .losses import FunctionClass
from .measures import JointPmf, f_norm

COVER_TOL = 1e-9
EXACT_MAX_MEMBERS = 20


@dataclass(frozen=True, eq=False)
class DistributionFamily:
    members: tuple[JointPmf, ...]

    def __post_init__(self):
        members = tuple(m if isinstance(m, JointPmf) else JointPmf(m) for m in self.members)
        if not members:
            raise ValueError("distribution family is empty")
        shape = members[0].shape
        for m in members[1:]:
            if m.shape != shape:
                raise ValueError(f"family members disagree on alphabet: {shape} vs {m.shape}")
        object.__setattr__(self, "members", members)
        stack = np.stack([m.probs for m in members])
        stack.setflags(write=False)
        object.__setattr__(self, "_stack", stack)

    @property
    def stack(self) -> np.ndarray:
        """Members as an array of shape ``(size, x_size, y_size)``."""
        return self._stack

    @property
    def shape(self) -> tuple[int, int]:
        return self.members[0].shape

    def __len__(self):
        return len(self.members)

    def __getitem__(self, i) -> JointPmf:
        return self.members[i]

    def __iter__(self):
        return iter(self.members)

    def index_of(self, P: JointPmf, atol: float = 1e-12) -> int | None:
        """Index of the first member equal to ``P`` (entrywise within ``atol``)."""
        hits = np.flatnonzero(np.abs(self.stack - P.probs).max(axis=(1, 2)) <= atol)
        return int(hits[0]) if hits.size else None


@dataclass(frozen=True)
class EpsilonNet:
    member_indices: tuple[int, ...]
    epsilon: float
    certified_radius: float

    def __post_init__(self):
        if not self.member_indices:
            raise ValueError("a net needs at least one member")
        if len(set(self.member_indices)) != len(self.member_indices):
            raise ValueError("net members must be distinct")
        if self.certified_radius > self.epsilon + COVER_TOL:
            raise ValueError(
                f"radius {self.certified_radius} exceeds epsilon {self.epsilon}"
            )

    def __len__(self):
        return len(self.member_indices)


def pairwise_distances(family: DistributionFamily, F: FunctionClass) -> np.ndarray:
    """Matrix of ``||P_i - P_j||_F`` over the family."""
    stack = family.stack
    return f_norm(stack[:, None] - stack[None, :], F)


def _radius(dist: np.ndarray, idx: Sequence[int]) -> float:
    return float(dist[:, list(idx)].min(axis=1).max())


def covering_number(
    family: DistributionFamily,
    eps: float,
    F: FunctionClass,
    mode: str = "exact",
    *,
    distances: np.ndarray | None = None,
) -> tuple[int, EpsilonNet]:
    """Size of an eps-net of ``family`` drawn from the family itself.

    ``mode="exact"`` returns the minimal net: subsets are tried by increasing
    size in lexicographic order and the first covering one wins. ``"greedy"``
    repeatedly adds the member covering most still-uncovered members (lowest
    index on ties), which upper-bounds the minimum.
    """
    if eps < 0:
        raise ValueError("eps must be nonnegative")
    dist = pairwise_distances(family, F) if distances is None else distances
    covers = dist <= eps + COVER_TOL
    k = len(family)
    if mode == "exact":
        if k > EXACT_MAX_MEMBERS:
            raise ValueError(
                f"exact covering limited to {EXACT_MAX_MEMBERS} members, family has {k}; "
                "use mode='greedy'"
            )
        idx = _exact_cover(covers)
    elif mode == "greedy":
        idx = _greedy_cover(covers)
    else:
        raise ValueError(f"unknown mode {mode!r}")
    net = EpsilonNet(tuple(idx), float(eps), _radius(dist, idx))
    return len(idx), net


def _exact_cover(covers: np.ndarray) -> list[int]:
    k = covers.shape[0]
    # bitmask of members covered by each candidate centre
    masks = [int(sum(1 << i for i in np.flatnonzero(covers[:, j]))) for j in range(k)]
    full = (1 << k) - 1
    for size in range(1, k + 1):
        for combo in itertools.combinations(range(k), size):
            acc = 0
            for j in combo:
                acc |= masks[j]
            if acc == full:
                return list(combo)
    raise AssertionError("a family always covers itself")


def _greedy_cover(covers: np.ndarray) -> list[int]:
    uncovered = np.ones(covers.shape[0], dtype=bool)
    chosen: list[int] = []
    while uncovered.any():
        gain = covers[uncovered].sum(axis=0)
        gain[chosen] = -1
        j = int(np.argmax(gain))
        chosen.append(j)
        uncovered &= ~covers[:, j]
    return chosen


def kolmogorov_entropy(family, eps, F, mode="exact") -> float:
    return math.log2(covering_number(family, eps, F, mode)[0])


def entropy_rate_profile(
    family: DistributionFamily,
    F: FunctionClass,
    eps_sequence: Sequence[tuple[int, float]],
    mode: str = "exact",
) -> list[tuple[int, float]]:
    """``[(n, log2 N_F(eps_n) / n), ...]`` for a nonincreasing schedule."""
    eps_values = [e for _, e in eps_sequence]
    if any(b > a for a, b in zip(eps_values, eps_values[1:])):
        raise ValueError("eps_n must be nonincreasing in n")
    dist = pairwise_distances(family, F)
    out = []
    for n, eps in eps_sequence:
        count, _ = covering_number(family, eps, F, mode, distances=dist)
        out.append((int(n), math.log2(count) / n))
    return out
