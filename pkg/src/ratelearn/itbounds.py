"""Information-theoretic side of the Type II problem.

Test channels ``Q(u | y)`` share the output alphabet (``u`` ranges over
``range(y_size)``). Informations are in bits.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linprog

from .covering import DistributionFamily
from .losses import FunctionClass
from .measures import JointPmf, f_norm
from .type2 import (
    SEARCH_BUDGET,
    DhatResult,
    QuantizerMap,
    _check_exact_guard,
    _exact_minimax,
    _prepare,
    _rho_table,
    all_sequences,
    distortion_costs,
    optimal_quantizer,
)

MI_FEAS_TOL = 1e-12
ORDER_TOL = 1e-6


@dataclass(frozen=True, eq=False)
class Channel:
    """Row-stochastic matrix ``rows[y, u] = Q(u | y)``."""

    rows: np.ndarray

    def __post_init__(self):
        rows = np.array(self.rows, dtype=float)
        if rows.ndim != 2:
            raise ValueError("channel must be a matrix")
        if np.any(rows < 0) or np.any(np.abs(rows.sum(axis=1) - 1) > 1e-12):
            raise ValueError("channel rows must be pmfs")
        rows.setflags(write=False)
        object.__setattr__(self, "rows", rows)

    @classmethod
    def identity(cls, size: int) -> "Channel":
        return cls(np.eye(size))

    @classmethod
    def constant(cls, row, in_size: int) -> "Channel":
        return cls(np.tile(np.asarray(row, dtype=float), (in_size, 1)))

    @property
    def in_size(self) -> int:
        return self.rows.shape[0]

    @property
    def out_size(self) -> int:
        return self.rows.shape[1]


def _rows(Q) -> np.ndarray:
    return Q.rows if isinstance(Q, Channel) else np.asarray(Q, dtype=float)


def _mi(p_y: np.ndarray, rows: np.ndarray) -> np.ndarray:
    """Vectorized ``I(Y; U)`` for channels stacked on leading axes of ``rows``."""
    joint = p_y[:, None] * rows
    p_u = joint.sum(axis=-2, keepdims=True)
    denom = p_y[:, None] * p_u
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(joint > 0, joint * np.log2(joint / denom), 0.0)
    return np.maximum(terms.sum(axis=(-2, -1)), 0.0)


def mutual_information(p_y, Q) -> float:
    """``I(Y; U)`` in bits for ``Y ~ p_y`` and ``U | Y ~ Q``."""
    p_y = np.asarray(p_y, dtype=float)
    rows = _rows(Q)
    if rows.shape[0] != p_y.shape[0]:
        raise ValueError(f"channel input size {rows.shape[0]} != {p_y.shape[0]}")
    return float(_mi(p_y, rows))


def induced_joint_xu(P: JointPmf, Q) -> JointPmf:
    """Joint law of ``(X, U)`` for ``X -> Y -> U``."""
    rows = _rows(Q)
    if rows.shape[0] != P.y_size:
        raise ValueError(f"channel input size {rows.shape[0]} != y_size {P.y_size}")
    joint = P.probs @ rows
    return JointPmf(joint / joint.sum())


def rho_distortion(x: int, u: int, P: JointPmf, F: FunctionClass) -> float:
    """``||delta_(x,u) - P||_F``."""
    if not (0 <= x < P.x_size and 0 <= u < P.y_size):
        raise IndexError(f"({x}, {u}) outside the {P.x_size}x{P.y_size} alphabet")
    delta = np.zeros(P.shape)
    delta[x, u] = 1.0
    return f_norm(delta - P.probs, F)


def simplex_grid(dim: int, divisions: int) -> np.ndarray:
    """All pmfs on ``dim`` points with coordinates in multiples of ``1/divisions``."""
    # stars and bars: dim - 1 bars among divisions + dim - 1 slots
    slots = divisions + dim - 1
    pts = [
        np.diff(np.concatenate(([-1], bars, [slots]))) - 1
        for bars in itertools.combinations(range(slots), dim - 1)
    ]
    return np.array(pts, dtype=float).reshape(-1, dim) / divisions


def channel_grid(in_size: int, out_size: int, divisions: int) -> np.ndarray:
    """Every channel whose rows lie on the simplex grid; shape ``(G, in, out)``."""
    rows = simplex_grid(out_size, divisions)
    idx = np.array(list(itertools.product(range(rows.shape[0]), repeat=in_size)))
    return rows[idx]


@dataclass(frozen=True)
class DksResult:
    value: float
    channel: Channel
    achieved_mi: float
    solver_report: dict = field(default_factory=dict)


def _distortions(P: JointPmf, F: FunctionClass, rows: np.ndarray) -> np.ndarray:
    joint = np.einsum("xy,...yu->...xu", P.probs, rows)
    return np.atleast_1d(f_norm(joint - P.probs, F))


class _DksProblem:
    def __init__(self, P, F, R):
        self.P, self.F, self.R = P, F, R
        self.p_y = P.y_marginal
        # d/dQ[y,u] of P_XU(f) is sum_x P(x, y) f(x, u)
        self.grad = np.einsum("xy,kxu->kyu", P.probs, F.values)
        self.pf = F.flat @ P.probs.ravel()
        self.evals = 0

    def value(self, rows):
        self.evals += 1
        g = np.einsum("kyu,yu->k", self.grad, rows) - self.pf
        return float(np.abs(g).max()), g

    def mi(self, rows):
        return float(_mi(self.p_y, rows))

    def feasible(self, rows):
        return self.mi(rows) <= self.R + MI_FEAS_TOL

    def project(self, rows):
        """Pull ``rows`` toward the constant channel with the same output law until feasible.

        Mutual information is convex along that segment and zero at its end,
        so the feasible part is an interval and bisection finds its start.
        """
        if self.feasible(rows):
            return rows
        const = np.tile(self.p_y @ rows, (rows.shape[0], 1))
        lo, hi = 0.0, 1.0
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            if self.feasible((1 - mid) * rows + mid * const):
                hi = mid
            else:
                lo = mid
        return (1 - hi) * rows + hi * const


def _mi_gradient(p_y: np.ndarray, rows: np.ndarray) -> np.ndarray:
    """``dI/dQ[y, u] = p(y) log2(Q(u|y) / r(u))``, finite only for positive entries."""
    r = p_y @ rows
    return p_y[:, None] * np.log2(rows / r[None, :])


def _cutting_plane(prob: _DksProblem, seeds, tol: float, max_iter: int = 500):
    """Kelley's method on ``min t s.t. |g_f(Q)| <= t, tangent cuts of I(Y;U) <= R``.

    The LP optimum over the outer approximation is a lower bound; pulling
    it back into the feasible set gives an upper bound. Stops when the two
    are within ``tol``. ``R = 0`` and ``R >= H(Y)`` need no cuts: the first
    forces identical rows on the support of ``p_y``, the second is vacuous.
    """
    p_y, R = prob.p_y, prob.R
    K, ny, nu = prob.grad.shape
    nq = ny * nu
    G = prob.grad.reshape(K, nq)
    A_ub = [np.hstack([G, -np.ones((K, 1))]), np.hstack([-G, -np.ones((K, 1))])]
    b_ub = [prob.pf, -prob.pf]
    A_eq = np.zeros((ny, nq + 1))
    for y in range(ny):
        A_eq[y, y * nu:(y + 1) * nu] = 1.0
    b_eq = np.ones(ny)
    h_y = float(-(p_y[p_y > 0] * np.log2(p_y[p_y > 0])).sum())
    zero_rate = R <= MI_FEAS_TOL
    if zero_rate:
        support = np.flatnonzero(p_y > 0)
        extra = []
        for y in support[1:]:
            for u in range(nu):
                row = np.zeros(nq + 1)
                row[support[0] * nu + u], row[y * nu + u] = 1.0, -1.0
                extra.append(row)
        if extra:
            A_eq = np.vstack([A_eq, extra])
            b_eq = np.concatenate([b_eq, np.zeros(len(extra))])
    needs_cuts = not zero_rate and R < h_y

    def add_cut(rows):
        q = (1 - 1e-9) * rows + 1e-9 / nu
        grad = _mi_gradient(p_y, q).ravel()
        A_ub.append(np.append(grad, 0.0)[None])
        b_ub.append(np.array([R - prob.mi(q) + grad @ q.ravel()]))

    best_rows, best = None, math.inf
    for rows in seeds:
        rows = prob.project(rows)
        v, _ = prob.value(rows)
        if v < best:
            best_rows, best = rows, v
        if needs_cuts and prob.mi(rows) > 0:
            add_cut(rows)
    lower = 0.0
    it = 0
    for it in range(1, max_iter + 1):
        res = linprog(
            np.append(np.zeros(nq), 1.0),
            A_ub=np.vstack(A_ub), b_ub=np.concatenate(b_ub),
            A_eq=A_eq, b_eq=b_eq,
            bounds=[(0, 1)] * nq + [(0, None)],
            method="highs",
        )
        if res.status != 0:
            raise RuntimeError(f"LP solve failed: {res.message}")
        lower = max(lower, float(res.x[-1]))
        rows = np.clip(res.x[:nq].reshape(ny, nu), 0, None)
        rows /= rows.sum(axis=1, keepdims=True)
        cand = prob.project(rows)
        v, _ = prob.value(cand)
        if v < best:
            best_rows, best = cand, v
        if best - lower <= tol or not needs_cuts:
            break
        add_cut(rows)
    report = {"iterations": it, "lower_bound": min(lower, best), "gap": max(best - lower, 0.0),
              "cuts": len(b_ub) - 2}
    return best_rows, best, report


def _grid_size(y_size, divisions):
    return math.comb(divisions + y_size - 1, y_size - 1) ** y_size


def d_ks(P: JointPmf, F: FunctionClass, R: float, divisions: int = 50, tol: float = 1e-4,
         max_grid: int = 200_000) -> DksResult:
    """Smallest ``||P_XU - P||_F`` over test channels with ``I(Y; U) <= R``.

    A grid over channels (rows in multiples of ``1/divisions``; coarsened if
    the grid would exceed ``max_grid`` points) seeds a cutting-plane
    refinement that runs until its upper and lower bounds are within
    ``tol``. Distortion and constraint are both convex in the channel. The
    returned channel is always feasible, so the value is an upper bound on
    the infimum; ``solver_report["lower_bound"]`` is a lower bound.
    """
    if R < 0:
        raise ValueError("rate must be nonnegative")
    if P.shape != F.shape:
        raise ValueError("pmf and function class disagree on the alphabet")
    y_size = P.y_size
    prob = _DksProblem(P, F, float(R))
    div = divisions
    while div > 1 and _grid_size(y_size, div) > max_grid:
        div -= 1
    grid = channel_grid(y_size, y_size, div)
    mis = _mi(prob.p_y, grid)
    dist = _distortions(P, F, grid)
    dist = np.where(mis <= R + MI_FEAS_TOL, dist, np.inf)
    g0 = int(np.argmin(dist))
    grid_value = float(dist[g0])
    rows = grid[g0]
    if grid_value > 0:
        rows, value, report = _cutting_plane(prob, [rows], tol)
    else:
        report = {"iterations": 0, "lower_bound": 0.0, "gap": 0.0, "cuts": 0}
    rows = np.clip(rows, 0, None)
    rows = rows / rows.sum(axis=1, keepdims=True)
    channel = Channel(rows)
    value = float(_distortions(P, F, channel.rows)[0])
    report.update(grid_divisions=div, grid_points=int(grid.shape[0]), grid_value=grid_value,
                  evaluations=prob.evals, tolerance=tol)
    return DksResult(value, channel, mutual_information(prob.p_y, channel), report)


def single_letter_bound(n: int, R: float, family, F: FunctionClass,
                        budget: int = SEARCH_BUDGET) -> DhatResult:
    """Minimax value of the averaged per-letter distortion ``||delta_(x,u) - P||_F``.

    The triangle inequality puts it above the block-``n`` operational value;
    at ``n = 1`` the two objectives coincide.
    """
    family, _ = _prepare(n, R, family, F)
    C = distortion_costs(family.stack, F, n, single_letter=True)
    return _exact_minimax(C, n, R, family, budget)


@dataclass(frozen=True)
class AveragedTriple:
    """Position-averaged law of ``(X_i, Y_i, U_i)`` under a quantizer."""

    joint: np.ndarray
    marginal_error: float
    distortion: float
    mutual_information: float
    markov_gap: float

    @property
    def channel(self) -> np.ndarray:
        """Averaged test channel ``Q(u | y)`` (uniform rows where ``P_Y(y) = 0``)."""
        pyu = self.joint.sum(axis=0)
        py = pyu.sum(axis=1, keepdims=True)
        with np.errstate(invalid="ignore", divide="ignore"):
            rows = np.where(py > 0, pyu / py, 1.0 / pyu.shape[1])
        return rows


def averaged_triple(q: QuantizerMap, P: JointPmf, F: FunctionClass) -> AveragedTriple:
    """Average the per-position triples ``(X_i, Y_i, q(Y^n)_i)`` over ``i``.

    Enumerates all of ``Z^n``; the Markov gap measures how far the result is
    from ``P(x, y) Q(u | y)``.
    """
    n, xs, ys = q.n, P.x_size, P.y_size
    _check_exact_guard(n, xs, ys)
    xseq, yseq = all_sequences(n, xs), all_sequences(n, ys)
    useq = q.codebook[q.assignment]  # quantized sequence, by y rank
    W = np.ones((xseq.shape[0], yseq.shape[0]))
    for i in range(n):
        W *= P.probs[xseq[:, i]][:, yseq[:, i]]
    joint = np.zeros((xs, ys, ys))
    for i in range(n):
        np.add.at(
            joint,
            (xseq[:, i][:, None], yseq[:, i][None, :], useq[:, i][None, :]),
            W,
        )
    joint /= n
    marginal_error = float(np.abs(joint.sum(axis=2) - P.probs).max())
    xu = joint.sum(axis=1)
    distortion = f_norm(xu - P.probs, F)
    pyu = joint.sum(axis=0)
    p_y = pyu.sum(axis=1)
    with np.errstate(invalid="ignore", divide="ignore"):
        cond = np.where(p_y[:, None] > 0, pyu / p_y[:, None], 0.0)
    mi = mutual_information(p_y, np.where(p_y[:, None] > 0, cond, 1.0 / ys))
    markov_gap = float(np.abs(joint - P.probs[:, :, None] * cond[None]).max())
    return AveragedTriple(joint, marginal_error, distortion, mi, markov_gap)


@dataclass(frozen=True)
class MemberCheck:
    dks: DksResult
    quantizer_distortion: float
    triple: AveragedTriple
    marginal_ok: bool
    distortion_ok: bool
    information_ok: bool


@dataclass(frozen=True)
class OrderingReport:
    n: int
    R: float
    dhat: DhatResult
    members: tuple[MemberCheck, ...]

    @property
    def max_dks(self) -> float:
        return max(m.dks.value for m in self.members)

    @property
    def slack(self) -> float:
        return self.dhat.value - self.max_dks

    @property
    def ordering_ok(self) -> bool:
        return self.slack >= -ORDER_TOL

    @property
    def ok(self) -> bool:
        return self.ordering_ok and all(
            m.marginal_ok and m.distortion_ok and m.information_ok for m in self.members
        )


def ordering_check(n: int, R: float, family, F: FunctionClass, dks_kwargs=None,
                   dhat: DhatResult | None = None) -> OrderingReport:
    """Compare ``D_n`` with ``max_P D_KS(P, F, R)`` and check the averaged-triple chain.

    For each member the optimal quantizer's position-averaged triple must
    have ``(X, Y)``-marginal ``P``, ``||P_XU - P||_F`` at most that member's
    quantizer distortion, and ``I(Y; U) <= R``.
    """
    family, _ = _prepare(n, R, family, F)
    if dhat is None:
        dhat = optimal_quantizer(n, R, family, F)
    checks = []
    for k, P in enumerate(family):
        dks = d_ks(P, F, R, **(dks_kwargs or {}))
        tri = averaged_triple(dhat.quantizer, P, F)
        per = dhat.per_P_distortion[k]
        checks.append(MemberCheck(
            dks, per, tri,
            marginal_ok=tri.marginal_error <= 1e-12,
            distortion_ok=tri.distortion <= per + 1e-9,
            information_ok=tri.mutual_information <= R + ORDER_TOL,
        ))
    return OrderingReport(n, float(R), dhat, tuple(checks))


@dataclass(frozen=True)
class Eq7Result:
    value: float
    report: dict


def eq7_grid_value(family, F: FunctionClass, R: float, alpha_list, delta_list,
                   p_prime_resolution: int, channel_resolution: int) -> Eq7Result:
    """Grid evaluation of the sup-inf-sup-inf-sup upper-bound expression.

    ``sup_alpha inf_delta sup_P' inf_Q sup_P E_{P x Q} ||delta_(X,U) - P||_F``
    with ``Q`` restricted to ``I(P' x Q) <= R + alpha`` and ``P`` to members
    whose output marginal is within ``delta`` of ``P'`` in L1. A supremum
    over no members is ``-inf``. This approximates the expression on the
    given grids and certifies nothing in either direction.
    """
    family = family if isinstance(family, DistributionFamily) else DistributionFamily(tuple(family))
    alpha_list, delta_list = list(alpha_list), list(delta_list)
    if not alpha_list or not delta_list:
        raise ValueError("alpha and delta grids must be nonempty")
    if p_prime_resolution < 1 or channel_resolution < 1:
        raise ValueError("grid resolutions must be positive")
    if family.shape != F.shape:
        raise ValueError("family and function class disagree on the alphabet")
    y_size = family.shape[1]
    stack = family.stack
    p_primes = simplex_grid(y_size, p_prime_resolution)
    chans = channel_grid(y_size, y_size, channel_resolution)
    rho = _rho_table(stack, F)  # (K, x, u)
    # E[k, g] = sum_{x,y,u} P_k(x,y) Q_g(u|y) rho_k(x,u)
    E = np.einsum("kxy,gyu,kxu->kg", stack, chans, rho)
    mis = np.stack([_mi(pp, chans) for pp in p_primes])  # (P', G)
    dist_v = np.abs(stack.sum(axis=1)[:, None, :] - p_primes[None]).sum(axis=2)  # (K, P')
    per_alpha = []
    for alpha in alpha_list:
        feas = mis <= R + alpha + MI_FEAS_TOL
        per_delta = []
        for delta in delta_list:
            best_pp = -math.inf
            for j in range(p_primes.shape[0]):
                members = dist_v[:, j] <= delta + 1e-12
                if not members.any():
                    continue
                inner = E[members][:, feas[j]].max(axis=0)
                best_pp = max(best_pp, float(inner.min()))
            per_delta.append(best_pp)
        per_alpha.append(min(per_delta))
    value = max(per_alpha)
    report = {
        "alpha_values": alpha_list,
        "delta_values": delta_list,
        "per_alpha": per_alpha,
        "p_prime_points": int(p_primes.shape[0]),
        "channel_points": int(chans.shape[0]),
    }
    return Eq7Result(float(value), report)
