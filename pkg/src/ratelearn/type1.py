"""Type I scheme: the encoder sees whole training pairs.

The encoder sends the index of the net member closest (in F-norm) to the
empirical distribution; the learner returns the best-in-class function for
that member. Every realization satisfies

    L(f_hat, P) <= L*(F, P) + 4 ||P - P_emp||_F + 2 eps_n

whenever the true ``P`` belongs to the family.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ._validation import check_sample, counts_from
from .covering import DistributionFamily, EpsilonNet, covering_number, pairwise_distances
from .losses import FunctionClass, all_expected_losses, bayes_loss
from .measures import EmpiricalMeasure, JointPmf, empirical, f_norm

BOUND_TOL = 1e-9


def epsilon_schedule(n: int, scale: float = 0.5) -> float:
    """Default net radius ``scale / log2(n + 2)``; decreases to zero in n."""
    return scale / math.log2(n + 2)


@dataclass(frozen=True)
class TrialRecord:
    """Outcome of one training run against a known true distribution."""

    loss: float
    excess: float
    bound: float
    l_star: float
    f_index: int
    code: int
    in_family: bool

    @property
    def ok(self) -> bool:
        """Whether ``loss <= L* + bound`` (up to 1e-9)."""
        return self.loss <= self.l_star + self.bound + BOUND_TOL


@dataclass(frozen=True, eq=False)
class Type1Scheme:
    family: DistributionFamily
    F: FunctionClass
    net: EpsilonNet
    epsilon_n: float

    def __post_init__(self):
        if self.family.shape != self.F.shape:
            raise ValueError("family and function class disagree on the alphabet")
        dist = pairwise_distances(self.family, self.F)
        radius = float(dist[:, list(self.net.member_indices)].min(axis=1).max())
        if radius > self.epsilon_n + BOUND_TOL:
            raise ValueError(f"net has radius {radius} > epsilon_n = {self.epsilon_n}")
        centres = self.family.stack[list(self.net.member_indices)]
        centres.setflags(write=False)
        object.__setattr__(self, "_centres", centres)
        # the learner's answer only depends on J, so precompute it
        acts = tuple(bayes_loss(self.F, c)[0] for c in centres)
        object.__setattr__(self, "_acts", acts)

    @classmethod
    def build(cls, family, F, epsilon_n, mode="exact") -> "Type1Scheme":
        """Scheme using a minimal ``epsilon_n``-net (greedy net if ``mode='greedy'``)."""
        _, net = covering_number(family, epsilon_n, F, mode)
        return cls(family, F, net, float(epsilon_n))

    @property
    def centres(self) -> np.ndarray:
        return self._centres

    @property
    def size(self) -> int:
        return len(self.net)


def _as_probs(sample, scheme) -> np.ndarray:
    if isinstance(sample, EmpiricalMeasure):
        if sample.shape != scheme.F.shape:
            raise ValueError("sample alphabet does not match the scheme")
        return sample.probs
    x_size, y_size = scheme.F.shape
    return empirical(sample, x_size, y_size).probs


def _encode_probs(probs: np.ndarray, scheme: Type1Scheme) -> int:
    d = f_norm(scheme.centres - probs, scheme.F)
    return int(np.argmin(np.atleast_1d(d)))


def encode_type1(sample, scheme: Type1Scheme) -> int:
    """Net index closest to the empirical measure of ``sample`` (lowest on ties)."""
    return _encode_probs(_as_probs(sample, scheme), scheme)


def learn_type1(J: int, scheme: Type1Scheme) -> int:
    """Best-in-class function index under net member ``J``."""
    if not 0 <= J < scheme.size:
        raise IndexError(f"code {J} out of range({scheme.size})")
    return scheme._acts[J]


def _trial(probs: np.ndarray, scheme: Type1Scheme, true_P: JointPmf, in_family: bool) -> TrialRecord:
    J = _encode_probs(probs, scheme)
    f = scheme._acts[J]
    losses = all_expected_losses(scheme.F, true_P)
    l_star = float(losses.min())
    loss = float(losses[f])
    bound = 4.0 * f_norm(true_P.probs - probs, scheme.F) + 2.0 * scheme.epsilon_n
    return TrialRecord(loss, loss - l_star, bound, l_star, f, J, in_family)


def type1_trial(sample, scheme: Type1Scheme, true_P: JointPmf) -> TrialRecord:
    """Run encoder and learner on ``sample`` and score against ``true_P``.

    A ``true_P`` outside the family is allowed; the record's ``in_family`` is
    then False and the bound carries no guarantee.
    """
    in_family = scheme.family.index_of(true_P) is not None
    return _trial(_as_probs(sample, scheme), scheme, true_P, in_family)


def rate_of_scheme(scheme: Type1Scheme, n: int) -> float:
    return math.log2(scheme.size) / n


class Type1Learner(BaseEstimator):
    """Rate-constrained learner that sees its training data only through an eps-net code.

    ``fit(X, y)`` picks the radius for the sample size (``epsilon`` if given,
    else ``eps_scale / log2(n + 2)``), builds the net, encodes the sample and
    learns from the code alone.

    Attributes set by ``fit``: ``scheme_``, ``code_``, ``f_index_``, ``rate_``.
    """

    def __init__(self, family=None, function_class=None, epsilon=None, eps_scale=0.5,
                 cover_mode="exact"):
        self.family = family
        self.function_class = function_class
        self.epsilon = epsilon
        self.eps_scale = eps_scale
        self.cover_mode = cover_mode

    def _family(self):
        fam = self.family
        if fam is None or self.function_class is None:
            raise ValueError("family and function_class are required")
        return fam if isinstance(fam, DistributionFamily) else DistributionFamily(tuple(fam))

    def fit(self, X, y=None):
        F = self.function_class
        family = self._family()
        xs, ys = check_sample(X, y, x_size=F.x_size, y_size=F.y_size)
        n = xs.shape[0]
        eps = self.epsilon if self.epsilon is not None else epsilon_schedule(n, self.eps_scale)
        owner, cache = getattr(self, "_scheme_cache", (None, {}))
        if (owner is None or owner[0] is not self.family or owner[1] is not F
                or owner[2] != self.cover_mode):
            owner, cache = (self.family, F, self.cover_mode), {}
        key = float(eps)
        if key not in cache:
            cache[key] = Type1Scheme.build(family, F, eps, self.cover_mode)
        self._scheme_cache = (owner, cache)
        self.scheme_ = cache[key]
        probs = counts_from(xs, ys, F.x_size, F.y_size) / n
        self.code_ = _encode_probs(probs, self.scheme_)
        self.f_index_ = learn_type1(self.code_, self.scheme_)
        self.rate_ = rate_of_scheme(self.scheme_, n)
        self.n_samples_ = n
        return self

    def predict(self, X):
        """Predictions of the learned function at inputs ``X``."""
        check_is_fitted(self, "f_index_")
        F = self.function_class
        if F.predictors is None:
            raise ValueError("function class carries no predictors; use f_index_")
        xs = np.asarray(X, dtype=np.int64).ravel()
        return F.predictors[self.f_index_][xs]

    def score(self, X, y=None):
        """Negative mean loss of the learned function on ``(X, y)``."""
        check_is_fitted(self, "f_index_")
        F = self.function_class
        xs, ys = check_sample(X, y, x_size=F.x_size, y_size=F.y_size)
        return -float(F.values[self.f_index_][xs, ys].mean())
