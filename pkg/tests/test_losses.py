import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ratelearn import (
    ClassifierFamily,
    FunctionClass,
    JointPmf,
    bayes_loss,
    classification_class,
    expected_loss,
    f_norm,
    regression_class,
)
from ratelearn.losses import all_expected_losses

from conftest import function_classes, pmfs
from oracles import zero_one_losses

P_REF = JointPmf([[0.4, 0.1], [0.2, 0.3]])


def test_constant_bound_loss():
    F = FunctionClass(np.full((1, 2, 2), 2.5), 2.5)
    assert expected_loss(0, F, P_REF) == pytest.approx(2.5)


def test_perfect_classifier_has_zero_loss():
    F = classification_class(ClassifierFamily(2, 2, ((0, 1),)))
    P = JointPmf([[0.7, 0.0], [0.0, 0.3]])
    assert expected_loss(0, F, P) == 0.0


def test_identity_classifier_loss():
    F = classification_class(ClassifierFamily(2, 2, ((0, 1),)))
    brute = sum(P_REF.probs[x, y] for x in range(2) for y in range(2) if x != y)
    assert expected_loss(0, F, P_REF) == pytest.approx(brute) == pytest.approx(0.3)


def test_bayes_over_all_classifiers():
    F = classification_class(ClassifierFamily.all_maps(2, 2))
    oracle = min(float((f * P_REF.probs).sum()) for f in zero_one_losses(2, 2))
    idx, value = bayes_loss(F, P_REF)
    assert value == pytest.approx(oracle) == pytest.approx(0.3)
    assert F.predictors[idx].tolist() == [0, 1]


def test_bayes_singleton():
    F = FunctionClass(np.array([[[0.2, 0.4], [0.6, 0.8]]]), 1.0)
    assert bayes_loss(F, P_REF) == (0, pytest.approx(expected_loss(0, F, P_REF)))


def test_bayes_with_zero_function():
    F = FunctionClass(np.stack([np.full((2, 2), 0.5), np.zeros((2, 2))]), 1.0)
    assert bayes_loss(F, P_REF) == (1, 0.0)


def test_bayes_ties_lowest_index():
    F = FunctionClass(np.stack([np.full((2, 2), 0.5)] * 3), 1.0)
    assert bayes_loss(F, P_REF)[0] == 0


def test_classification_identity_values():
    F = classification_class(ClassifierFamily(2, 2, ((0, 1),)))
    assert F.values[0].tolist() == [[0, 1], [1, 0]]
    assert F.bound == 1.0


def test_classification_counts():
    assert len(classification_class(ClassifierFamily.all_maps(2, 2))) == 4
    assert len(classification_class(ClassifierFamily.all_maps(2, 3))) == 9


def test_classification_constant_zero():
    F = classification_class(ClassifierFamily(3, 2, ((0, 0, 0),)))
    assert F.values[0].tolist() == [[0, 1]] * 3


def test_classification_empty():
    with pytest.raises(ValueError):
        classification_class(ClassifierFamily(2, 2, ()))


def test_classifier_range_checked():
    with pytest.raises(ValueError):
        ClassifierFamily(2, 2, ((0, 2),))


def test_regression_constant_at_first_value():
    F = regression_class([[0.0, 0.0]], [0.0, 1.0])
    assert F.values[0].tolist() == [[0, 1], [0, 1]]


def test_regression_interpolating():
    F = regression_class([[0.0, 1.0]], [0.0, 1.0])
    P = JointPmf([[0.6, 0.0], [0.0, 0.4]])
    assert expected_loss(0, F, P) == 0.0


def test_regression_half():
    F = regression_class([[0.5, 0.5]], [0.0, 1.0])
    assert np.all(F.values == 0.25)
    assert F.bound == 0.25


def test_regression_empty():
    with pytest.raises(ValueError):
        regression_class([], [0.0, 1.0])


def test_values_outside_bound():
    with pytest.raises(ValueError):
        FunctionClass(np.full((1, 2, 2), 1.5), 1.0)


def test_dimension_mismatch():
    F = classification_class(ClassifierFamily.all_maps(3, 2))
    with pytest.raises(ValueError):
        expected_loss(0, F, P_REF)


@settings(max_examples=60, deadline=None)
@given(data=st.data(), shape=st.sampled_from([(2, 2), (3, 3), (2, 3)]))
def test_loss_properties(data, shape):
    F = data.draw(function_classes(shape))
    P, Q = data.draw(pmfs(shape)), data.draw(pmfs(shape))
    lam = data.draw(st.floats(0, 1))
    lp, lq = bayes_loss(F, P)[1], bayes_loss(F, Q)[1]
    assert abs(lp - lq) <= f_norm(P - Q, F) + 1e-9
    mix = JointPmf.from_normalized(lam * P.probs + (1 - lam) * Q.probs)
    for k in range(len(F)):
        assert expected_loss(k, F, mix) == pytest.approx(
            lam * expected_loss(k, F, P) + (1 - lam) * expected_loss(k, F, Q), abs=1e-9)
    assert np.all(bayes_loss(F, P)[1] <= all_expected_losses(F, P) + 1e-15)
    assert 0 <= lp <= F.bound + 1e-12


@settings(max_examples=60, deadline=None)
@given(data=st.data(), shape=st.sampled_from([(2, 2), (3, 2), (2, 3), (3, 3)]))
def test_bayes_closed_form(data, shape):
    P = data.draw(pmfs(shape))
    F = classification_class(ClassifierFamily.all_maps(*shape))
    assert bayes_loss(F, P)[1] == pytest.approx(1 - P.probs.max(axis=1).sum(), abs=1e-12)
