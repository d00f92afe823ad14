import json
from pathlib import Path

import numpy as np
import pytest
from hypothesis import strategies as st

from ratelearn import ClassifierFamily, DistributionFamily, FunctionClass, JointPmf, classification_class
from ratelearn.config import family as family_from_config

ROOT = Path(__file__).resolve().parents[1]
CONFIGS = ROOT / "configs"
GOLDEN = ROOT / "tests" / "golden"

# one line per acceptance criterion, shown in the terminal summary
ACCEPTANCE = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE:
            terminalreporter.write_line(line)


def load_config(name):
    return json.loads((CONFIGS / f"{name}_reference.json").read_text())


@pytest.fixture(scope="session")
def clf22():
    return classification_class(ClassifierFamily.all_maps(2, 2))


@pytest.fixture(scope="session")
def family2():
    return family_from_config(load_config("dhat"))


@pytest.fixture(scope="session")
def family8():
    return family_from_config(load_config("type1"))


def random_pmf(rng, shape, sparse=False):
    w = rng.dirichlet(np.ones(shape[0] * shape[1]))
    if sparse:
        w[rng.random(w.size) < 0.3] = 0.0
        if w.sum() == 0:
            w[0] = 1.0
    return JointPmf.from_normalized(w.reshape(shape))


def random_class(rng, shape, k=None, bound=None):
    k = k or int(rng.integers(1, 7))
    bound = bound or float(rng.uniform(0.5, 3.0))
    return FunctionClass(rng.uniform(0, bound, size=(k,) + shape), bound)


def random_family(rng, size, shape=(2, 2)):
    return DistributionFamily(tuple(random_pmf(rng, shape) for _ in range(size)))


shapes = st.sampled_from([(2, 2), (3, 3), (2, 3), (1, 2)])


@st.composite
def pmfs(draw, shape):
    raw = draw(st.lists(st.floats(0, 1), min_size=shape[0] * shape[1],
                        max_size=shape[0] * shape[1]))
    w = np.array(raw)
    if w.sum() < 1e-6:
        w[0] = 1.0
    return JointPmf.from_normalized(w.reshape(shape))


@st.composite
def function_classes(draw, shape):
    k = draw(st.integers(1, 5))
    bound = draw(st.floats(0.1, 5))
    raw = draw(st.lists(st.floats(0, 1), min_size=k * shape[0] * shape[1],
                        max_size=k * shape[0] * shape[1]))
    return FunctionClass(np.array(raw).reshape((k,) + shape) * bound, bound)
