"""Independent brute-force reference implementations used by the tests.

Nothing here calls the package's algorithms; only plain enumeration and
textbook formulas.
"""
from __future__ import annotations

import functools
import itertools
import math

import numpy as np


def set_partitions(items):
    """All set partitions of ``items`` (lists of blocks)."""
    items = list(items)
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for part in set_partitions(rest):
        for i in range(len(part)):
            yield part[:i] + [[first] + part[i]] + part[i + 1:]
        yield [[first]] + part


@functools.lru_cache(maxsize=None)
def _partition_tensor(size: int) -> np.ndarray:
    parts = list(set_partitions(range(size)))
    out = np.zeros((len(parts), size, size))
    for p, blocks in enumerate(parts):
        for b, block in enumerate(blocks):
            out[p, b, block] = 1.0
    return out


def partition_sup(p, q) -> float:
    """``sup`` over every partition ``{A_i}`` of ``sum_i |P(A_i) - Q(A_i)|``."""
    d = np.ravel(p) - np.ravel(q)
    blocks = _partition_tensor(d.size) @ d
    return float(np.abs(blocks).sum(axis=1).max())


def fnorm_loop(mu, values) -> float:
    """``max_f |sum mu f|`` by explicit loops."""
    mu = np.asarray(mu, dtype=float)
    best = 0.0
    for f in values:
        s = 0.0
        for x in range(mu.shape[0]):
            for y in range(mu.shape[1]):
                s += mu[x, y] * f[x, y]
        best = max(best, abs(s))
    return best


def zero_one_losses(x_size: int, y_size: int):
    """Every classifier's 0-1 loss table, enumerated independently."""
    out = []
    for g in itertools.product(range(y_size), repeat=x_size):
        out.append(np.array([[0.0 if g[x] == y else 1.0 for y in range(y_size)]
                             for x in range(x_size)]))
    return out


def min_cover_size(dist, eps) -> int:
    """Smallest subset of members whose eps-balls cover everyone."""
    k = dist.shape[0]
    for size in range(1, k + 1):
        for subset in itertools.combinations(range(k), size):
            if all(min(dist[i, j] for j in subset) <= eps + 1e-9 for i in range(k)):
                return size
    raise AssertionError("unreachable: the family covers itself")


def entropy_bits(p) -> float:
    return -sum(v * math.log2(v) for v in np.ravel(p) if v > 0)


def mutual_information_entropies(p_y, rows) -> float:
    """``H(U) - H(U|Y)`` from the entropy formula."""
    rows = np.asarray(rows, dtype=float)
    p_u = np.asarray(p_y) @ rows
    h_cond = sum(p_y[y] * entropy_bits(rows[y]) for y in range(len(p_y)))
    return entropy_bits(p_u) - h_cond


def empirical_fnorm(xs, ys, P, values) -> float:
    n = len(xs)
    emp = np.zeros_like(np.asarray(P, dtype=float))
    for x, y in zip(xs, ys):
        emp[x, y] += 1.0 / n
    return fnorm_loop(emp - P, values)


def dhat_enumeration(n, M, family, values):
    """Minimax quantizer by listing every map ``Y^n -> Y^n`` with image size <= M.

    Sequences are tuples in lexicographic order; the distortion of a member
    sums over all ``(x^n, y^n)`` with the product probability. Returns the
    optimal value only (ties are irrelevant for the value).
    """
    x_size, y_size = np.asarray(family[0]).shape
    ys_all = list(itertools.product(range(y_size), repeat=n))
    xs_all = list(itertools.product(range(x_size), repeat=n))
    # cost[k][y][c]: expected distortion contribution of mapping y -> c
    cost = np.zeros((len(family), len(ys_all), len(ys_all)))
    for k, P in enumerate(family):
        P = np.asarray(P, dtype=float)
        for yi, yseq in enumerate(ys_all):
            for xseq in xs_all:
                w = math.prod(P[x, y] for x, y in zip(xseq, yseq))
                if w == 0.0:
                    continue
                for ci, cseq in enumerate(ys_all):
                    cost[k, yi, ci] += w * empirical_fnorm(xseq, cseq, P, values)
    best = math.inf
    N = len(ys_all)
    for image_size in range(1, min(M, N) + 1):
        for image in itertools.combinations(range(N), image_size):
            for mapping in itertools.product(image, repeat=N):
                total = cost[:, np.arange(N), list(mapping)].sum(axis=1).max()
                best = min(best, float(total))
    return best
