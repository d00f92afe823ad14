import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ratelearn import (
    Channel,
    DistributionFamily,
    JointPmf,
    QuantizerMap,
    d_ks,
    eq7_grid_value,
    f_norm,
    mutual_information,
    optimal_quantizer,
    single_letter_bound,
    ordering_check,
)
from ratelearn.itbounds import (
    averaged_triple,
    channel_grid,
    induced_joint_xu,
    rho_distortion,
    simplex_grid,
)

from conftest import random_class, random_pmf
from oracles import fnorm_loop, mutual_information_entropies, zero_one_losses

RATES = [0.0, 1 / 3, 0.5, 1.0]


def fine_grid_dks(P, F, R, divisions=500):
    """Best channel on a 1/divisions grid of binary channels (independent of the solver)."""
    a = np.arange(divisions + 1) / divisions
    q0, q1 = np.meshgrid(a, a, indexing="ij")
    q0, q1 = q0.ravel(), q1.ravel()  # Q(u=0 | y=0), Q(u=0 | y=1)
    p = P.probs
    py = p.sum(axis=0)
    pu0 = py[0] * q0 + py[1] * q1

    def h(v):
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where((v > 0) & (v < 1), -v * np.log2(v) - (1 - v) * np.log2(1 - v), 0.0)

    mi = h(pu0) - py[0] * h(q0) - py[1] * h(q1)
    joint0 = p[:, 0][None, :] * q0[:, None] + p[:, 1][None, :] * q1[:, None]  # P_XU(x, 0)
    joint1 = p.sum(axis=1)[None, :] - joint0
    stacked = np.stack([joint0, joint1], axis=-1) - p[None]
    vals = np.abs(np.einsum("gxu,kxu->gk", stacked, F.values)).max(axis=1)
    return float(np.where(mi <= R + 1e-12, vals, np.inf).min())


class TestMutualInformation:
    def test_identity_uniform(self):
        assert mutual_information([0.5, 0.5], Channel.identity(2)) == pytest.approx(1.0)

    def test_constant(self):
        assert mutual_information([0.3, 0.7], Channel.constant([0.2, 0.8], 2)) == pytest.approx(0.0, abs=1e-15)

    def test_bsc_entropy_oracle(self):
        rows = [[0.9, 0.1], [0.1, 0.9]]
        assert mutual_information([0.9, 0.1], Channel(rows)) == pytest.approx(
            mutual_information_entropies([0.9, 0.1], rows), abs=1e-12)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            mutual_information([0.5, 0.5], Channel.identity(3))

    def test_channel_validation(self):
        with pytest.raises(ValueError):
            Channel([[0.5, 0.6], [1.0, 0.0]])


@settings(max_examples=80, deadline=None)
@given(data=st.data(), k=st.integers(2, 4))
def test_mi_properties(data, k):
    raw = data.draw(st.lists(st.floats(0, 1), min_size=k, max_size=k))
    p_y = np.array(raw) + 1e-3
    p_y /= p_y.sum()
    rows = np.array(data.draw(st.lists(st.lists(st.floats(0, 1), min_size=k, max_size=k),
                                       min_size=k, max_size=k))) + 1e-3
    rows /= rows.sum(axis=1, keepdims=True)
    mi = mutual_information(p_y, rows)
    assert mi >= 0
    assert mi == pytest.approx(mutual_information_entropies(p_y, rows), abs=1e-9)
    assert mi <= math.log2(k) + 1e-12
    same = np.tile(rows[0], (k, 1))
    assert mutual_information(p_y, same) == pytest.approx(0.0, abs=1e-12)


class TestInducedJoint:
    def test_identity(self):
        P = random_pmf(np.random.default_rng(0), (3, 2))
        np.testing.assert_allclose(induced_joint_xu(P, Channel.identity(2)).probs, P.probs)

    def test_constant_product(self):
        P = random_pmf(np.random.default_rng(1), (3, 2))
        J = induced_joint_xu(P, Channel.constant([0.3, 0.7], 2))
        np.testing.assert_allclose(J.probs, np.outer(P.x_marginal, [0.3, 0.7]))

    def test_u_marginal(self):
        rng = np.random.default_rng(2)
        P = random_pmf(rng, (2, 3))
        rows = rng.dirichlet(np.ones(3), size=3)
        J = induced_joint_xu(P, rows)
        np.testing.assert_allclose(J.probs.sum(axis=0), P.y_marginal @ rows)

    def test_mismatch(self):
        with pytest.raises(ValueError):
            induced_joint_xu(random_pmf(np.random.default_rng(3), (2, 2)), Channel.identity(3))


class TestRho:
    def test_point_mass(self, clf22):
        assert rho_distortion(1, 0, JointPmf.point_mass(1, 0, 2, 2), clf22) == 0.0

    def test_bounded(self):
        rng = np.random.default_rng(4)
        for _ in range(20):
            F = random_class(rng, (2, 2))
            P = random_pmf(rng, (2, 2))
            for x, u in itertools.product(range(2), repeat=2):
                assert rho_distortion(x, u, P, F) <= 2 * F.bound + 1e-12

    def test_enumeration(self, clf22):
        P = random_pmf(np.random.default_rng(5), (2, 2))
        for x, u in itertools.product(range(2), repeat=2):
            delta = np.zeros((2, 2))
            delta[x, u] = 1
            oracle = max(abs(((delta - P.probs) * f).sum()) for f in zero_one_losses(2, 2))
            assert rho_distortion(x, u, P, clf22) == pytest.approx(oracle, abs=1e-15)

    def test_index_error(self, clf22):
        with pytest.raises(IndexError):
            rho_distortion(2, 0, JointPmf(np.full((2, 2), 0.25)), clf22)


def test_grids():
    g = simplex_grid(3, 4)
    assert g.shape == (math.comb(6, 2), 3)
    np.testing.assert_allclose(g.sum(axis=1), 1.0)
    assert len({tuple(r) for r in g}) == g.shape[0]
    assert channel_grid(2, 2, 10).shape == (121, 2, 2)


class TestDks:
    def test_full_rate_zero(self, clf22):
        rng = np.random.default_rng(6)
        for _ in range(10):
            res = d_ks(random_pmf(rng, (2, 2)), clf22, 1.0)
            assert res.value == 0.0

    def test_zero_rate_one_dimensional(self, clf22):
        rng = np.random.default_rng(7)
        w = np.linspace(0, 1, 10001)
        for _ in range(10):
            P = random_pmf(rng, (2, 2))
            prods = np.stack([np.outer(P.x_marginal, [a, 1 - a]) for a in w])
            oracle = float(f_norm(prods - P.probs, clf22).min())
            res = d_ks(P, clf22, 0.0)
            assert res.achieved_mi <= 1e-9
            assert abs(res.value - oracle) <= 1e-4

    def test_fine_grid_oracle(self, clf22):
        rng = np.random.default_rng(8)
        for _ in range(8):
            P = random_pmf(rng, (2, 2))
            for R in (0.1, 1 / 3, 0.5):
                res = d_ks(P, clf22, R)
                assert res.achieved_mi <= R + 1e-6
                assert abs(res.value - fine_grid_dks(P, clf22, R)) <= 1e-3
                assert res.solver_report["lower_bound"] <= res.value + 1e-12

    def test_random_class_oracle(self):
        rng = np.random.default_rng(9)
        for _ in range(5):
            F = random_class(rng, (2, 2))
            P = random_pmf(rng, (2, 2))
            res = d_ks(P, F, 0.3)
            assert abs(res.value - fine_grid_dks(P, F, 0.3)) <= 1e-3 * F.bound

    def test_negative_rate(self, clf22):
        with pytest.raises(ValueError):
            d_ks(JointPmf(np.full((2, 2), 0.25)), clf22, -0.1)

    def test_report(self, clf22):
        res = d_ks(random_pmf(np.random.default_rng(10), (2, 2)), clf22, 0.4)
        for key in ("iterations", "lower_bound", "gap", "grid_divisions", "grid_points", "tolerance"):
            assert key in res.solver_report

    def test_three_letter_outputs(self):
        rng = np.random.default_rng(11)
        P = random_pmf(rng, (2, 3))
        F = random_class(rng, (2, 3))
        vals = [d_ks(P, F, R, divisions=12).value for R in (0.0, 0.5, 1.0, math.log2(3))]
        assert all(b <= a + 1e-9 for a, b in zip(vals, vals[1:]))
        assert vals[-1] == 0.0


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2 ** 32 - 1))
def test_dks_monotone_and_feasible(seed):
    rng = np.random.default_rng(seed)
    P = random_pmf(rng, (2, 2), sparse=True)
    F = random_class(rng, (2, 2))
    vals = []
    for R in (0.0, 0.2, 0.5, 0.8, 1.0):
        res = d_ks(P, F, R, divisions=20)
        assert res.achieved_mi <= R + 1e-6
        assert res.value >= 0
        vals.append(res.value)
    # each value is within its certified gap of the infimum, which is monotone
    assert all(b <= a + 2e-4 * F.bound for a, b in zip(vals, vals[1:]))
    assert vals[-1] == 0.0


class TestTheorem3:
    def test_full_rate(self, family2, clf22):
        rep = ordering_check(2, 1.0, family2, clf22)
        assert rep.max_dks == 0.0 and rep.ok

    def test_n2_half_rate(self, family2, clf22):
        rep = ordering_check(2, 0.5, family2, clf22)
        assert rep.ordering_ok and rep.ok
        assert rep.slack == pytest.approx(rep.dhat.value - rep.max_dks)

    def test_n1_zero_rate(self, family2, clf22):
        rep = ordering_check(1, 0.0, family2, clf22)
        for m in rep.members:
            assert rep.dhat.value >= m.dks.value - 1e-6

    def test_averaged_triple_is_markov(self, family2, clf22):
        # all positions share the law of (X_i, Y_i), so averaging keeps X - Y - U
        res = optimal_quantizer(3, 0.5, family2, clf22)
        for P in family2:
            tri = averaged_triple(res.quantizer, P, clf22)
            assert tri.markov_gap <= 1e-12
            assert tri.marginal_error <= 1e-12
            joint_xu = tri.joint.sum(axis=1)
            np.testing.assert_allclose(joint_xu, induced_joint_xu(P, tri.channel).probs, atol=1e-12)

    def test_triple_identity_quantizer(self, clf22):
        P = random_pmf(np.random.default_rng(12), (2, 2))
        tri = averaged_triple(QuantizerMap.identity(2, 2), P, clf22)
        assert tri.distortion == pytest.approx(0.0, abs=1e-12)
        assert tri.mutual_information == pytest.approx(mutual_information_entropies(
            P.y_marginal, np.eye(2)), abs=1e-12)


class TestSingleLetter:
    def test_n1_coincides(self, family2, clf22):
        for R in RATES:
            assert single_letter_bound(1, R, family2, clf22).value == pytest.approx(
                optimal_quantizer(1, R, family2, clf22).value, abs=1e-12)

    def test_dominates(self, family2, clf22):
        for n in (1, 2, 3):
            for R in RATES:
                assert single_letter_bound(n, R, family2, clf22).value >= \
                    optimal_quantizer(n, R, family2, clf22).value - 1e-9

    def test_gap_n2(self, family2, clf22):
        s = single_letter_bound(2, 0.5, family2, clf22).value
        d = optimal_quantizer(2, 0.5, family2, clf22).value
        assert s - d >= 0


class TestEq7:
    def test_full_rate_singleton(self, clf22):
        P = JointPmf([[0.3, 0.1], [0.2, 0.4]])  # P_Y = (0.5, 0.5) lies on the grid
        fam = DistributionFamily((P,))
        res = eq7_grid_value(fam, clf22, 1.0, [0.0], [2.0], 10, 10)
        # linear in Q, so the inner infimum is attained by a deterministic map y -> u
        best = min(
            sum(P.probs[x, y] * fnorm_loop(np.eye(4)[2 * x + m[y]].reshape(2, 2) - P.probs, clf22.values)
                for x in range(2) for y in range(2))
            for m in itertools.product(range(2), repeat=2)
        )
        assert res.value == pytest.approx(best, abs=1e-12)
        ident = sum(P.probs[x, y] * rho_distortion(x, y, P, clf22) for x in range(2) for y in range(2))
        assert res.value <= ident + 1e-12

    def test_vacuous_branches(self, family2, clf22):
        # tiny delta: most P' balls miss every member and are skipped, not fatal
        res = eq7_grid_value(family2, clf22, 0.5, [0.0], [1e-9, 0.5], 20, 8)
        assert math.isfinite(res.value)

    def test_all_branches_empty(self, clf22):
        P = JointPmf([[0.33, 0.0], [0.0, 0.67]])
        res = eq7_grid_value(DistributionFamily((P,)), clf22, 0.5, [0.0], [1e-9], 4, 4)
        assert res.value == -math.inf

    def test_refining_channels(self, family2, clf22):
        coarse = eq7_grid_value(family2, clf22, 0.5, [0.0, 0.1], [0.1], 10, 4).value
        fine = eq7_grid_value(family2, clf22, 0.5, [0.0, 0.1], [0.1], 10, 8).value
        assert fine <= coarse + 1e-12

    def test_empty_grid(self, family2, clf22):
        with pytest.raises(ValueError):
            eq7_grid_value(family2, clf22, 0.5, [], [0.1], 10, 4)
