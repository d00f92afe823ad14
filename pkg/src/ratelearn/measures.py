"""Probability mass functions on a finite product alphabet X x Y.

Everything here is indexed by integers: ``x`` in ``range(x_size)`` and ``y``
in ``range(y_size)``. Distributions are stored as ``(x_size, y_size)`` float
arrays, empirical measures keep exact integer counts.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING, Iterable

import numpy as np

if TYPE_CHECKING:
    from .losses import FunctionClass

PROB_ATOL = 1e-12


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class JointPmf:
    """A pmf on ``range(x_size) x range(y_size)`` stored as a matrix."""

    probs: np.ndarray

    def __post_init__(self):
        probs = _frozen(self.probs)
        if probs.ndim != 2:
            raise ValueError(f"probs must be a matrix, got shape {probs.shape}")
        if probs.shape[0] < 1:
            raise ValueError("x_size must be positive")
        if probs.shape[1] < 2:
            raise ValueError("y_size must be at least 2")
        if not np.all(np.isfinite(probs)) or np.any(probs < 0):
            raise ValueError("probabilities must be finite and nonnegative")
        if abs(probs.sum() - 1.0) > PROB_ATOL:
            raise ValueError(f"probabilities sum to {probs.sum()!r}, not 1")
        object.__setattr__(self, "probs", probs)

    @classmethod
    def from_normalized(cls, weights) -> "JointPmf":
        """Normalize a nonnegative weight matrix into a pmf."""
        w = np.asarray(weights, dtype=float)
        return cls(w / w.sum())

    @classmethod
    def point_mass(cls, x: int, y: int, x_size: int, y_size: int) -> "JointPmf":
        probs = np.zeros((x_size, y_size))
        probs[x, y] = 1.0
        return cls(probs)

    @property
    def x_size(self) -> int:
        return self.probs.shape[0]

    @property
    def y_size(self) -> int:
        return self.probs.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.probs.shape

    @property
    def x_marginal(self) -> np.ndarray:
        return self.probs.sum(axis=1)

    @property
    def y_marginal(self) -> np.ndarray:
        return self.probs.sum(axis=0)

    def __sub__(self, other: "JointPmf") -> "SignedMeasure":
        _check_shapes(self.shape, other.shape)
        return SignedMeasure(self.probs - other.probs)

    def __repr__(self):
        return f"JointPmf({self.probs.tolist()!r})"


@dataclass(frozen=True, eq=False)
class SignedMeasure:
    """A signed measure on the product alphabet, usually a difference of pmfs."""

    values: np.ndarray

    def __post_init__(self):
        values = _frozen(self.values)
        if values.ndim != 2:
            raise ValueError(f"values must be a matrix, got shape {values.shape}")
        object.__setattr__(self, "values", values)

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    def __neg__(self) -> "SignedMeasure":
        return SignedMeasure(-self.values)


@dataclass(frozen=True, eq=False)
class EmpiricalMeasure:
    """Exact counts of a sample; normalization happens on demand."""

    counts: np.ndarray

    def __post_init__(self):
        counts = np.array(self.counts)
        if counts.ndim != 2 or counts.shape[1] < 2:
            raise ValueError(f"bad counts shape {counts.shape}")
        if not np.issubdtype(counts.dtype, np.integer):
            raise TypeError("counts must be integers")
        if np.any(counts < 0):
            raise ValueError("counts must be nonnegative")
        if counts.sum() < 1:
            raise ValueError("empty sample")
        counts = counts.astype(np.int64)
        counts.setflags(write=False)
        object.__setattr__(self, "counts", counts)

    @property
    def n(self) -> int:
        return int(self.counts.sum())

    @property
    def x_size(self) -> int:
        return self.counts.shape[0]

    @property
    def y_size(self) -> int:
        return self.counts.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.counts.shape

    @property
    def probs(self) -> np.ndarray:
        return self.counts / self.n

    def to_pmf(self) -> JointPmf:
        return JointPmf(self.probs)


def _check_shapes(a, b):
    if tuple(a) != tuple(b):
        raise ValueError(f"dimension mismatch: {tuple(a)} vs {tuple(b)}")


def empirical(sample: Iterable[tuple[int, int]], x_size: int, y_size: int) -> EmpiricalMeasure:
    """Count the pairs of ``sample`` into an ``EmpiricalMeasure``."""
    pairs = np.asarray(list(sample) if not isinstance(sample, np.ndarray) else sample)
    if pairs.size == 0:
        raise ValueError("empty sample")
    pairs = pairs.reshape(-1, 2)
    if not np.issubdtype(pairs.dtype, np.integer):
        raise TypeError("sample indices must be integers")
    xs, ys = pairs[:, 0], pairs[:, 1]
    if xs.min() < 0 or xs.max() >= x_size or ys.min() < 0 or ys.max() >= y_size:
        raise IndexError(f"sample index out of range for alphabet {x_size}x{y_size}")
    counts = np.bincount(xs * y_size + ys, minlength=x_size * y_size)
    return EmpiricalMeasure(counts.reshape(x_size, y_size))


def _as_values(mu) -> np.ndarray:
    if isinstance(mu, SignedMeasure):
        return mu.values
    if isinstance(mu, (JointPmf, EmpiricalMeasure)):
        return mu.probs
    return np.asarray(mu, dtype=float)


def f_norm(mu, F: "FunctionClass") -> float:
    """Return ``max_f |sum_z mu(z) f(z)|`` over the finite class ``F``.

    ``mu`` may be a ``SignedMeasure``, a pmf, or a plain ``(x_size, y_size)``
    array. A stack of measures with shape ``(..., x_size, y_size)`` gives one
    norm per leading index.
    """
    values = _as_values(mu)
    if values.shape[-2:] != F.values.shape[1:]:
        raise ValueError(
            f"dimension mismatch: measure {values.shape[-2:]} vs class {F.values.shape[1:]}"
        )
    flat = values.reshape(values.shape[:-2] + (-1,))
    out = np.abs(flat @ F.flat.T).max(axis=-1)
    return float(out) if out.ndim == 0 else out


def variational_distance(P, Q) -> float:
    """L1 distance ``sum_z |P(z) - Q(z)|``.

    On a finite alphabet this equals the supremum over partitions of
    ``sum_i |P(A_i) - Q(A_i)|``; the sign partition attains it.
    """
    p, q = _as_values(P), _as_values(Q)
    _check_shapes(p.shape, q.shape)
    return float(np.abs(p - q).sum())
