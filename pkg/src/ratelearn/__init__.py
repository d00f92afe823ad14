"""Statistical learning from rate-limited descriptions of the training data.

Finite-alphabet building blocks: pmfs and the F-norm (``measures``), loss
classes (``losses``), eps-nets (``covering``), the two encoder/learner
schemes (``type1``, ``type2``), information-theoretic bounds
(``itbounds``) and Monte Carlo experiments (``montecarlo``).
"""
__version__ = "0.1.0"

from .covering import DistributionFamily, EpsilonNet, covering_number, entropy_rate_profile
from .itbounds import Channel, d_ks, eq7_grid_value, mutual_information, single_letter_bound, ordering_check
from .losses import ClassifierFamily, FunctionClass, bayes_loss, classification_class, expected_loss, regression_class
from .measures import EmpiricalMeasure, JointPmf, SignedMeasure, empirical, f_norm, variational_distance
from .type1 import Type1Learner, Type1Scheme, encode_type1, learn_type1, type1_trial
from .type2 import (
    GuardError,
    QuantizerMap,
    Type2Learner,
    encode_type2,
    greedy_quantizer,
    learn_type2,
    optimal_quantizer,
    quantizer_distortion,
    type2_trial,
)

__all__ = [
    "Channel", "ClassifierFamily", "DistributionFamily", "EmpiricalMeasure", "EpsilonNet",
    "FunctionClass", "GuardError", "JointPmf", "QuantizerMap", "SignedMeasure", "Type1Learner",
    "Type1Scheme", "Type2Learner", "bayes_loss", "classification_class", "covering_number",
    "d_ks", "empirical", "encode_type1", "encode_type2", "entropy_rate_profile",
    "eq7_grid_value", "expected_loss", "f_norm", "greedy_quantizer", "learn_type1",
    "learn_type2", "mutual_information", "optimal_quantizer", "quantizer_distortion",
    "regression_class", "single_letter_bound", "ordering_check", "type1_trial", "type2_trial",
    "variational_distance",
]
