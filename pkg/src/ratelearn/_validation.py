"""Input checks shared by the estimators, in the spirit of ``check_X_y``."""
from __future__ import annotations

import numpy as np


def check_sample(X, y=None, *, x_size: int, y_size: int):
    """Validate an index-valued training sample.

    ``X`` may also be an ``(n, 2)`` array of pairs when ``y`` is None.
    Returns integer arrays ``(xs, ys)`` of equal length.
    """
    if y is None:
        pairs = np.asarray(X)
        if pairs.ndim != 2 or pairs.shape[1] != 2:
            raise ValueError(f"expected an (n, 2) array of pairs, got shape {pairs.shape}")
        xs, ys = pairs[:, 0], pairs[:, 1]
    else:
        xs, ys = np.asarray(X), np.asarray(y)
    xs = np.ravel(xs)
    ys = np.ravel(ys)
    if xs.shape != ys.shape:
        raise ValueError(f"X and y lengths differ: {xs.shape[0]} vs {ys.shape[0]}")
    if xs.size == 0:
        raise ValueError("empty sample")
    for name, a, size in (("X", xs, x_size), ("y", ys, y_size)):
        if not np.issubdtype(a.dtype, np.integer):
            if np.issubdtype(a.dtype, np.floating) and np.all(a == np.round(a)):
                a = a.astype(np.int64)
            else:
                raise TypeError(f"{name} must hold integer symbol indices")
        if a.min() < 0 or a.max() >= size:
            raise IndexError(f"{name} holds a symbol outside range({size})")
        if name == "X":
            xs = a.astype(np.int64)
        else:
            ys = a.astype(np.int64)
    return xs, ys


def check_sequence(seq, length: int, alphabet: int) -> np.ndarray:
    s = np.asarray(seq, dtype=np.int64).ravel()
    if s.shape[0] != length:
        raise ValueError(f"sequence length {s.shape[0]} does not match block length {length}")
    if s.size and (s.min() < 0 or s.max() >= alphabet):
        raise IndexError(f"sequence symbol outside range({alphabet})")
    return s


def counts_from(xs: np.ndarray, ys: np.ndarray, x_size: int, y_size: int) -> np.ndarray:
    return np.bincount(xs * y_size + ys, minlength=x_size * y_size).reshape(x_size, y_size)
