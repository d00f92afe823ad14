"""Finite loss classes and the expected / best-in-class loss."""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .measures import JointPmf, _as_values


@dataclass(frozen=True, eq=False)
class FunctionClass:
    """A finite class of losses ``f: X x Y -> [0, B]``.

    ``values[k, x, y]`` is the loss of function ``k`` at ``(x, y)``.
    ``predictors`` optionally holds, per function, the prediction made at each
    ``x`` (a label index for classification, a real value for regression);
    estimators use it to implement ``predict``.
    """

    values: np.ndarray
    bound: float
    labels: tuple[str, ...] | None = None
    predictors: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.ndim != 3:
            raise ValueError(f"values must have shape (k, x, y), got {values.shape}")
        if values.shape[0] < 1:
            raise ValueError("function class is empty")
        if values.shape[2] < 2:
            raise ValueError("y_size must be at least 2")
        bound = float(self.bound)
        if not bound > 0:
            raise ValueError("bound must be positive")
        if np.any(values < 0) or np.any(values > bound):
            raise ValueError(f"loss values must lie in [0, {bound}]")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "bound", bound)
        if self.labels is not None:
            if len(self.labels) != values.shape[0]:
                raise ValueError("one label per function required")
            object.__setattr__(self, "labels", tuple(self.labels))
        if self.predictors is not None:
            pred = np.array(self.predictors)
            if pred.shape != values.shape[:2]:
                raise ValueError("predictors must have shape (k, x_size)")
            pred.setflags(write=False)
            object.__setattr__(self, "predictors", pred)
        flat = values.reshape(values.shape[0], -1)
        flat.setflags(write=False)
        object.__setattr__(self, "_flat", flat)

    @property
    def flat(self) -> np.ndarray:
        """Values reshaped to ``(k, x_size * y_size)``."""
        return self._flat

    @property
    def size(self) -> int:
        return self.values.shape[0]

    @property
    def x_size(self) -> int:
        return self.values.shape[1]

    @property
    def y_size(self) -> int:
        return self.values.shape[2]

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape[1:]

    def __len__(self):
        return self.size


@dataclass(frozen=True, eq=False)
class ClassifierFamily:
    """Classifiers ``g: X -> Y`` stored as integer arrays ``g[x]``."""

    x_size: int
    y_size: int
    maps: tuple

    def __post_init__(self):
        maps = tuple(tuple(int(v) for v in g) for g in self.maps)
        for g in maps:
            if len(g) != self.x_size:
                raise ValueError(f"classifier {g} does not cover x_size={self.x_size}")
            if any(not 0 <= v < self.y_size for v in g):
                raise ValueError(f"classifier {g} outputs a label outside range({self.y_size})")
        object.__setattr__(self, "maps", maps)

    @classmethod
    def all_maps(cls, x_size: int, y_size: int) -> "ClassifierFamily":
        """Every map ``X -> Y``, ``y_size ** x_size`` of them, in lexicographic order."""
        return cls(x_size, y_size, tuple(itertools.product(range(y_size), repeat=x_size)))

    def __len__(self):
        return len(self.maps)


def _check_dims(F: FunctionClass, P) -> np.ndarray:
    probs = _as_values(P)
    if probs.shape[-2:] != F.shape:
        raise ValueError(f"dimension mismatch: pmf {probs.shape[-2:]} vs class {F.shape}")
    return probs


def expected_loss(f_index: int, F: FunctionClass, P: JointPmf) -> float:
    """``L(f, P) = sum_z P(z) f(z)``."""
    probs = _check_dims(F, P)
    if not 0 <= f_index < F.size:
        raise IndexError(f"function index {f_index} out of range({F.size})")
    return float(np.sum(F.values[f_index] * probs))


def all_expected_losses(F: FunctionClass, P) -> np.ndarray:
    """Vector of ``L(f, P)`` for every ``f`` in ``F``."""
    probs = _check_dims(F, P)
    return F.flat @ probs.reshape(-1)


def bayes_loss(F: FunctionClass, P) -> tuple[int, float]:
    """Best-in-class index and loss; ties go to the lowest index."""
    losses = all_expected_losses(F, P)
    k = int(np.argmin(losses))
    return k, float(losses[k])


def classification_class(G: ClassifierFamily) -> FunctionClass:
    """0-1 losses ``f(x, y) = 1{g(x) != y}``, one per classifier."""
    if len(G) == 0:
        raise ValueError("classifier family is empty")
    maps = np.array(G.maps, dtype=np.int64)
    labels = np.arange(G.y_size)
    values = (maps[:, :, None] != labels[None, None, :]).astype(float)
    names = tuple("g=" + "".join(map(str, g)) for g in G.maps)
    return FunctionClass(values, 1.0, labels=names, predictors=maps)


def regression_class(G: Sequence[Sequence[float]], y_values: Sequence[float]) -> FunctionClass:
    """Squared losses ``(g(x) - y)^2`` on a finite grid of response values.

    The bound is the largest loss that actually occurs.
    """
    if len(G) == 0:
        raise ValueError("estimator family is empty")
    g = np.asarray(G, dtype=float)
    yv = np.asarray(y_values, dtype=float)
    if g.ndim != 2:
        raise ValueError("each estimator must be an array over x")
    values = (g[:, :, None] - yv[None, None, :]) ** 2
    bound = float(values.max())
    if bound == 0.0:
        # all losses vanish; any positive bound is valid
        bound = 1.0
    return FunctionClass(values, bound, predictors=g)
