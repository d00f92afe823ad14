"""Type II scheme: the encoder sees only the outputs ``y^n``.

The encoder maps ``y^n`` to one of at most ``floor(2 ** (n R))`` output
sequences, the learner pairs the decoded sequence with the exactly observed
inputs ``x^n``, projects that empirical measure onto the family and returns
the best-in-class function for the projection.

The worst-case expected F-distance between the paired empirical measure and
the truth, minimized over quantizers, is the block-``n`` operational
distortion-rate value ``D_n``. For a fixed member ``P`` the expectation
splits over output sequences,

    E_P ||P_(x^n, q(y^n)) - P||_F = sum_{y^n} cost_P[y^n, q(y^n)],

so quantizer search works on a ``(members, sequences, codewords)`` cost
tensor.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ._validation import check_sample, check_sequence, counts_from
from .covering import DistributionFamily
from .losses import FunctionClass, all_expected_losses, bayes_loss
from .measures import JointPmf, f_norm
from .type1 import TrialRecord

EXACT_LOG2_LIMIT = 20
SEARCH_BUDGET = 20_000_000
TIE_TOL = 1e-12
RATE_TOL = 1e-9


class GuardError(RuntimeError):
    """A configured computational limit would be exceeded."""


def codebook_size(n: int, R: float) -> int:
    """Largest codebook at rate ``R``: ``floor(2 ** (n R))`` (never exceeds the rate)."""
    if R < 0:
        raise ValueError("rate must be nonnegative")
    m = math.floor(2.0 ** (n * R) + 1e-9)
    # guard the +1e-9 nudge against overshooting the rate
    if math.log2(m) > n * R + RATE_TOL:
        m -= 1
    return max(m, 1)


def all_sequences(n: int, size: int) -> np.ndarray:
    """Every length-``n`` sequence over ``range(size)``, in rank order."""
    idx = np.arange(size ** n)
    powers = size ** np.arange(n - 1, -1, -1)
    return (idx[:, None] // powers[None, :]) % size


def rank(seq, size: int) -> int:
    """Lexicographic rank, position 0 most significant."""
    r = 0
    for s in seq:
        r = r * size + int(s)
    return r


def unrank(r: int, n: int, size: int) -> np.ndarray:
    out = np.empty(n, dtype=np.int64)
    for i in range(n - 1, -1, -1):
        r, out[i] = divmod(r, size)
    return out


@dataclass(frozen=True, eq=False)
class QuantizerMap:
    """A map from output sequences to a codebook of output sequences.

    ``assignment[r]`` is the codeword index of the sequence of rank ``r``;
    ``codebook[j]`` is codeword ``j`` as a length-``n`` array. Codewords are
    kept sorted by rank and every one of them is used.
    """

    n: int
    y_size: int
    assignment: np.ndarray
    codebook: np.ndarray
    rate: float | None = None

    def __post_init__(self):
        assignment = np.array(self.assignment, dtype=np.int64).ravel()
        codebook = np.array(self.codebook, dtype=np.int64).reshape(-1, self.n)
        if assignment.shape[0] != self.y_size ** self.n:
            raise ValueError("assignment must cover every output sequence")
        M = codebook.shape[0]
        if M < 1 or assignment.min() < 0 or assignment.max() >= M:
            raise ValueError("assignment targets outside the codebook")
        if np.unique(assignment).shape[0] != M:
            raise ValueError("every codeword must be used")
        if codebook.min() < 0 or codebook.max() >= self.y_size:
            raise ValueError("codeword symbol outside the output alphabet")
        if self.rate is not None and math.log2(M) / self.n > self.rate + RATE_TOL:
            raise ValueError(f"{M} codewords exceed rate {self.rate} at n={self.n}")
        for a in (assignment, codebook):
            a.setflags(write=False)
        object.__setattr__(self, "assignment", assignment)
        object.__setattr__(self, "codebook", codebook)

    @classmethod
    def from_mapping(cls, n: int, y_size: int, mapping, rate=None) -> "QuantizerMap":
        """Build from ``mapping[r]`` = rank of the codeword for sequence rank ``r``."""
        mapping = np.asarray(mapping, dtype=np.int64)
        words, assignment = np.unique(mapping, return_inverse=True)
        codebook = np.array([unrank(int(w), n, y_size) for w in words]).reshape(-1, n)
        return cls(n, y_size, assignment, codebook, rate)

    @classmethod
    def identity(cls, n: int, y_size: int) -> "QuantizerMap":
        return cls.from_mapping(n, y_size, np.arange(y_size ** n))

    @property
    def M(self) -> int:
        return self.codebook.shape[0]

    @property
    def codeword_ranks(self) -> np.ndarray:
        powers = self.y_size ** np.arange(self.n - 1, -1, -1)
        return self.codebook @ powers

    @property
    def mapping(self) -> np.ndarray:
        """Sequence rank to codeword rank."""
        return self.codeword_ranks[self.assignment]

    def code_rate(self) -> float:
        return math.log2(self.M) / self.n

    def transform(self, y_seqs) -> np.ndarray:
        """Quantize one sequence (shape ``(n,)``) or a batch (shape ``(k, n)``)."""
        s = np.asarray(y_seqs, dtype=np.int64)
        single = s.ndim == 1
        s = np.atleast_2d(s)
        if s.shape[1] != self.n:
            raise ValueError(f"sequences must have length {self.n}")
        powers = self.y_size ** np.arange(self.n - 1, -1, -1)
        out = self.codebook[self.assignment[s @ powers]]
        return out[0] if single else out


@dataclass(frozen=True)
class DhatResult:
    value: float
    quantizer: QuantizerMap
    n: int
    R: float
    per_P_distortion: tuple[float, ...]
    exact: bool = True
    nodes: int = field(default=0, compare=False)


def _check_exact_guard(n: int, x_size: int, y_size: int):
    if n * math.log2(x_size * y_size) > EXACT_LOG2_LIMIT:
        raise GuardError(
            f"exact expectation over (|X||Y|)^n = {(x_size * y_size)}^{n} pairs exceeds "
            f"2^{EXACT_LOG2_LIMIT}; use quantizer_distortion_mc for a Monte Carlo estimate"
        )


def _pair_weights(stack: np.ndarray, n: int) -> np.ndarray:
    """``W[k, x^n, y^n] = prod_i P_k(x_i, y_i)``."""
    K, xs, ys = stack.shape
    xseq, yseq = all_sequences(n, xs), all_sequences(n, ys)
    W = np.ones((K, xseq.shape[0], yseq.shape[0]))
    for i in range(n):
        W *= stack[:, xseq[:, i]][:, :, yseq[:, i]]
    return W


def _emp_fnorm(stack: np.ndarray, F: FunctionClass, n: int) -> np.ndarray:
    """``Phi[k, x^n, c] = ||P_(x^n, c) - P_k||_F`` for every codeword ``c``."""
    K, xs, ys = stack.shape
    xseq, cseq = all_sequences(n, xs), all_sequences(n, ys)
    # F-averages of the empirical measure, fa[x^n, c, f] = mean_i f(x_i, c_i)
    fa = np.zeros((xseq.shape[0], cseq.shape[0], F.size))
    for i in range(n):
        fa += F.values[:, xseq[:, i]][:, :, cseq[:, i]].transpose(1, 2, 0)
    fa /= n
    pf = stack.reshape(K, -1) @ F.flat.T  # P_k(f)
    out = np.empty((K, xseq.shape[0], cseq.shape[0]))
    for k in range(K):
        out[k] = np.abs(fa - pf[k]).max(axis=-1)
    return out


def _rho_average(stack: np.ndarray, F: FunctionClass, n: int) -> np.ndarray:
    """``Psi[k, x^n, c] = n^-1 sum_i ||delta_(x_i, c_i) - P_k||_F``."""
    K, xs, ys = stack.shape
    xseq, cseq = all_sequences(n, xs), all_sequences(n, ys)
    rho = _rho_table(stack, F)
    out = np.zeros((K, xseq.shape[0], cseq.shape[0]))
    for i in range(n):
        out += rho[:, xseq[:, i]][:, :, cseq[:, i]]
    return out / n


def _rho_table(stack: np.ndarray, F: FunctionClass) -> np.ndarray:
    """``rho[k, x, u] = ||delta_(x, u) - P_k||_F``."""
    K = stack.shape[0]
    pf = stack.reshape(K, -1) @ F.flat.T
    # delta_(x,u)(f) = f(x, u)
    return np.abs(F.values[None, :, :, :] - pf[:, :, None, None]).max(axis=1)


def distortion_costs(stack: np.ndarray, F: FunctionClass, n: int, single_letter=False) -> np.ndarray:
    """Cost tensor ``C[k, y^n, c]`` whose row sums give expected distortions.

    ``single_letter=True`` swaps the F-distance of the empirical measure for
    the average of per-letter F-distances of Dirac measures.
    """
    stack = np.asarray(stack, dtype=float)
    if stack.ndim == 2:
        stack = stack[None]
    _check_exact_guard(n, stack.shape[1], stack.shape[2])
    W = _pair_weights(stack, n)
    phi = _rho_average(stack, F, n) if single_letter else _emp_fnorm(stack, F, n)
    return np.einsum("kxy,kxc->kyc", W, phi)


def quantizer_distortion(q: QuantizerMap, P: JointPmf, F: FunctionClass) -> float:
    """Exact ``E_P ||P_(X^n, q(Y^n)) - P||_F`` by summing over all of ``Z^n``."""
    if P.shape != F.shape or q.y_size != P.y_size:
        raise ValueError("quantizer, pmf and function class disagree on the alphabet")
    C = distortion_costs(P.probs, F, q.n)[0]
    return float(C[np.arange(C.shape[0]), q.mapping].sum())


def quantizer_distortion_mc(q: QuantizerMap, P: JointPmf, F: FunctionClass, trials: int,
                            seed: int = 0) -> tuple[float, float]:
    """Monte Carlo estimate of the distortion: ``(mean, standard error)``."""
    if P.shape != F.shape or q.y_size != P.y_size:
        raise ValueError("quantizer, pmf and function class disagree on the alphabet")
    rng = np.random.default_rng(seed)
    cells = rng.choice(P.probs.size, size=(trials, q.n), p=P.probs.ravel())
    xs, ys = np.divmod(cells, P.y_size)
    us = q.transform(ys)
    pf = F.flat @ P.probs.ravel()
    # F-averages of each sample's paired empirical measure
    fa = F.values[:, xs, us].mean(axis=-1).T
    d = np.abs(fa - pf).max(axis=1)
    se = d.std(ddof=1) / math.sqrt(trials) if trials > 1 else 0.0
    return float(d.mean()), float(se)


def count_quantizers(N: int, M: int) -> int:
    """Number of maps from ``N`` sequences into ``N`` codewords with image size <= ``M``."""
    total = 0
    for k in range(1, min(M, N) + 1):
        # surjections onto k points by inclusion-exclusion
        surj = sum((-1) ** j * math.comb(k, j) * (k - j) ** N for j in range(k + 1))
        total += math.comb(N, k) * surj
    return total


def _minimax_search(C: np.ndarray, M: int, cap: float = math.inf) -> tuple[float, list[int], int]:
    """Minimize ``max_k sum_y C[k, y, a(y)]`` over maps ``a`` with at most ``M`` distinct values.

    Depth-first in lexicographic order of ``a`` with a lower bound that
    ignores the codebook limit once free slots remain, so the first minimizer
    found is the lexicographically smallest (up to ``TIE_TOL``). ``cap`` is a
    known achievable value used for pruning before the first leaf.
    """
    K, N, _ = C.shape
    Cl = C.tolist()
    colmin = C.min(axis=2)
    suffix = np.zeros((K, N + 1))
    suffix[:, :N] = np.cumsum(colmin[:, ::-1], axis=1)[:, ::-1]
    suffix = suffix.tolist()
    best = [math.inf, None]
    assign = [0] * N
    nodes = 0
    limit = cap + TIE_TOL if math.isfinite(cap) else math.inf

    def bound_full(t, partial, used):
        # image is full: remaining sequences may only use codewords in ``used``
        lb = 0.0
        for k in range(K):
            s = partial[k]
            row = Cl[k]
            for y in range(t, N):
                r = row[y]
                s += min(r[c] for c in used)
            if s > lb:
                lb = s
        return lb

    def prune(lb):
        if best[1] is None:
            return lb > limit
        return lb >= best[0] - TIE_TOL

    def visit(t, partial, used):
        nonlocal nodes
        nodes += 1
        if t == N:
            v = max(partial)
            if best[1] is None or v < best[0] - TIE_TOL:
                best[0], best[1] = v, assign.copy()
            return
        full = len(used) >= M
        cands = sorted(used) if full else range(N)
        for c in cands:
            nxt = [partial[k] + Cl[k][t][c] for k in range(K)]
            if c in used:
                nused = used
            else:
                nused = used | {c}
            if len(nused) >= M:
                lb = bound_full(t + 1, nxt, nused)
            else:
                lb = max(nxt[k] + suffix[k][t + 1] for k in range(K))
            if prune(lb):
                continue
            assign[t] = c
            visit(t + 1, nxt, nused)

    visit(0, [0.0] * K, frozenset())
    return best[0], best[1], nodes


def _local_search(C: np.ndarray, M: int, start: np.ndarray) -> tuple[float, np.ndarray]:
    """First-improvement descent using reassignment and codeword-swap moves."""
    K, N, _ = C.shape
    a = start.copy()
    idx = np.arange(N)
    sums = C[:, idx, a].sum(axis=1)
    val = sums.max()
    improved = True
    while improved:
        improved = False
        used = np.unique(a)
        for y in range(N):
            cands = used if used.shape[0] >= M else idx
            for c in cands:
                if c == a[y]:
                    continue
                new =sums + C[:, y, c] - C[:, y, a[y]]
                if new.max() < val - TIE_TOL:
                    a[y] = c
                    sums, val = new, new.max()
                    used = np.unique(a)
                    improved = True
                    break
        for w in np.unique(a):
            for c in idx:
                if c in a:
                    continue
                moved = a == w
                new = sums + C[:, moved, c].sum(axis=1) - C[:, moved, w].sum(axis=1)
                if new.max() < val - TIE_TOL:
                    a[moved] = c
                    sums, val = new, new.max()
                    improved = True
                    break
    return float(val), a


def _greedy_search(C: np.ndarray, M: int, restarts: int, seed: int) -> tuple[float, np.ndarray]:
    K, N, _ = C.shape
    rng = np.random.default_rng(seed)
    starts = []
    # deterministic start: each member's nearest-codeword map over the best codebook prefix
    mean_cost = C.mean(axis=0)
    order = np.argsort(mean_cost.min(axis=0), kind="stable")[: min(M, N)]
    starts.append(order[np.argmin(mean_cost[:, order], axis=1)])
    for _ in range(max(restarts, 0)):
        book = rng.choice(N, size=min(M, N), replace=False)
        starts.append(book[rng.integers(0, book.shape[0], size=N)])
    best_val, best_a = math.inf, None
    for s in starts:
        v, a = _local_search(C, M, np.asarray(s, dtype=np.int64))
        if best_a is None or v < best_val - TIE_TOL or (
            abs(v - best_val) <= TIE_TOL and tuple(a) < tuple(best_a)
        ):
            best_val, best_a = v, a
    return best_val, best_a


def _prepare(n, R, family, F):
    if isinstance(family, JointPmf):
        family = DistributionFamily((family,))
    elif not isinstance(family, DistributionFamily):
        family = DistributionFamily(tuple(family))
    if family.shape != F.shape:
        raise ValueError("family and function class disagree on the alphabet")
    if n < 1:
        raise ValueError("block length must be positive")
    return family, codebook_size(n, R)


def _result(C, mapping, n, R, family, exact, nodes=0) -> DhatResult:
    per = C[:, np.arange(C.shape[1]), mapping].sum(axis=1)
    q = QuantizerMap.from_mapping(n, family.shape[1], mapping, rate=R)
    return DhatResult(float(per.max()), q, n, float(R), tuple(float(v) for v in per), exact, nodes)


def _exact_minimax(C, n, R, family, budget) -> DhatResult:
    N = C.shape[1]
    M = codebook_size(n, R)
    count = count_quantizers(N, M)
    if count > budget:
        raise GuardError(
            f"brute force over {count} quantizers (n={n}, M={M}) exceeds budget {budget}; "
            "use greedy_quantizer"
        )
    cap, _ = _greedy_search(C, M, restarts=2, seed=0)
    _, mapping, nodes = _minimax_search(C, M, cap)
    return _result(C, np.asarray(mapping), n, R, family, True, nodes)


def optimal_quantizer(n: int, R: float, family, F: FunctionClass, budget: int = SEARCH_BUDGET) -> DhatResult:
    """Minimax-optimal rate-``R`` quantizer of block length ``n`` by exhaustive search.

    Returns the exact ``D_n`` value; among optimal maps the one with the
    lexicographically smallest sequence-to-codeword-rank vector is returned.
    """
    family, _ = _prepare(n, R, family, F)
    C = distortion_costs(family.stack, F, n)
    return _exact_minimax(C, n, R, family, budget)


def greedy_quantizer(n: int, R: float, family, F: FunctionClass, restarts: int = 8,
                     seed: int = 0) -> DhatResult:
    """Local-search quantizer; its value upper-bounds ``D_n``."""
    family, M = _prepare(n, R, family, F)
    C = distortion_costs(family.stack, F, n)
    _, mapping = _greedy_search(C, M, restarts, seed)
    return _result(C, mapping, n, R, family, exact=False)


def encode_type2(y_seq, q: QuantizerMap) -> int:
    """Codeword index of ``y_seq``."""
    s = check_sequence(y_seq, q.n, q.y_size)
    return int(q.assignment[rank(s, q.y_size)])


def _project(counts: np.ndarray, n: int, family: DistributionFamily, F: FunctionClass) -> int:
    d = np.atleast_1d(f_norm(family.stack - counts / n, F))
    return int(np.argmin(d))


def learn_type2(J: int, x_seq, q: QuantizerMap, family, F: FunctionClass) -> tuple[int, int]:
    """Projection index and learned function index from code ``J`` and inputs ``x_seq``."""
    if not 0 <= J < q.M:
        raise IndexError(f"code {J} out of range({q.M})")
    family = family if isinstance(family, DistributionFamily) else DistributionFamily(tuple(family))
    xs = check_sequence(x_seq, q.n, F.x_size)
    counts = counts_from(xs, q.codebook[J], F.x_size, F.y_size)
    k = _project(counts, q.n, family, F)
    return k, bayes_loss(F, family[k])[0]


def type2_trial(sample, q: QuantizerMap, family, F: FunctionClass, true_P: JointPmf) -> TrialRecord:
    """One Type II run. The bound is ``4 ||P - P_(x^n, q(y^n))||_F``."""
    family = family if isinstance(family, DistributionFamily) else DistributionFamily(tuple(family))
    pairs = np.asarray(sample, dtype=np.int64).reshape(-1, 2)
    xs, ys = check_sample(pairs, x_size=F.x_size, y_size=F.y_size)
    J = encode_type2(ys, q)
    k, f = learn_type2(J, xs, q, family, F)
    losses = all_expected_losses(F, true_P)
    l_star = float(losses.min())
    loss = float(losses[f])
    paired = counts_from(xs, q.codebook[J], F.x_size, F.y_size) / q.n
    bound = 4.0 * f_norm(true_P.probs - paired, F)
    in_family = family.index_of(true_P) is not None
    return TrialRecord(loss, loss - l_star, bound, l_star, f, J, in_family)


class Type2Learner(BaseEstimator):
    """Learner that sees inputs exactly and outputs through a rate-``rate`` quantizer.

    ``fit(X, y)`` uses the block length ``n = len(y)``, designs (or reuses)
    the quantizer for that length, encodes ``y`` and learns from
    ``(code, X)``.

    Attributes set by ``fit``: ``quantizer_``, ``dhat_``, ``code_``,
    ``p_hat_index_``, ``f_index_``.
    """

    def __init__(self, family=None, function_class=None, rate=0.0, quantizer_mode="exact",
                 restarts=8, random_state=0):
        self.family = family
        self.function_class = function_class
        self.rate = rate
        self.quantizer_mode = quantizer_mode
        self.restarts = restarts
        self.random_state = random_state

    def _design(self, n):
        owner, cache = getattr(self, "_design_cache", (None, {}))
        params = (self.rate, self.quantizer_mode, self.restarts, self.random_state)
        if owner is None or owner[0] is not self.family or owner[1] is not self.function_class \
                or owner[2] != params:
            owner, cache = (self.family, self.function_class, params), {}
        if n not in cache:
            if self.quantizer_mode == "exact":
                cache[n] = optimal_quantizer(n, self.rate, self.family, self.function_class)
            elif self.quantizer_mode == "greedy":
                cache[n] = greedy_quantizer(n, self.rate, self.family, self.function_class,
                                            self.restarts, self.random_state)
            else:
                raise ValueError(f"unknown quantizer_mode {self.quantizer_mode!r}")
        self._design_cache = (owner, cache)
        return cache[n]

    def fit(self, X, y):
        F = self.function_class
        if self.family is None or F is None:
            raise ValueError("family and function_class are required")
        xs, ys = check_sample(X, y, x_size=F.x_size, y_size=F.y_size)
        self.dhat_ = self._design(xs.shape[0])
        self.quantizer_ = self.dhat_.quantizer
        self.code_ = encode_type2(ys, self.quantizer_)
        self.p_hat_index_, self.f_index_ = learn_type2(self.code_, xs, self.quantizer_,
                                                       self.family, F)
        return self

    def predict(self, X):
        check_is_fitted(self, "f_index_")
        F = self.function_class
        if F.predictors is None:
            raise ValueError("function class carries no predictors; use f_index_")
        return F.predictors[self.f_index_][np.asarray(X, dtype=np.int64).ravel()]

    def score(self, X, y):
        """Negative mean loss of the learned function on ``(X, y)``."""
        check_is_fitted(self, "f_index_")
        F = self.function_class
        xs, ys = check_sample(X, y, x_size=F.x_size, y_size=F.y_size)
        return -float(F.values[self.f_index_][xs, ys].mean())
