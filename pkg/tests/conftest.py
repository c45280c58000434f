import numpy as np
import pytest

from lvsa.encoder import init_params
from lvsa.kg import Kg, split_graphs
from lvsa.synth import synth_splits


@pytest.fixture
def chain_kg():
    """a -r-> b -s-> c"""
    return Kg.from_labels([("a", "r", "b"), ("b", "s", "c")])


@pytest.fixture(scope="session")
def toy_splits():
    return synth_splits(50, 4, 6, seed=11, clusters=5)


@pytest.fixture(scope="session")
def tiny_splits():
    """Small enough for the unpruned enumerator."""
    return synth_splits(15, 2, 3, seed=5, clusters=3)


@pytest.fixture
def small_params(toy_splits):
    kg = toy_splits.full
    return init_params(kg.num_entities, kg.num_relation_ids, 8, seed=3, layers=(1, 2, 1))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def manual_splits():
    return split_graphs([("a", "r", "b")], [("b", "r", "c")], [("c", "r", "d")])


def pytest_terminal_summary(terminalreporter):
    """Repeat the acceptance verdicts in one block at the end of the run."""
    import sys

    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(lines):
        terminalreporter.write_line(lines[key])
