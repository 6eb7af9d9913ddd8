import json
import math
import sys
from functools import reduce
from pathlib import Path

import numpy as np
import pytest

from effham.fidelity import TrialSet
from effham.tfim import TFIMParams, initial_states

FIXTURES = Path(__file__).parent / "fixtures"

_P = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.diag([1.0, -1.0]).astype(complex),
}


def kron_op(n, ops):
    """Independent dense operator: ``ops`` maps 0-based site -> axis letter."""
    return reduce(np.kron, [_P[ops.get(i, "I")] for i in range(n)])


def dense_tfim(n, delta, J):
    h = sum(-delta / 2 * kron_op(n, {i: "Z"}) for i in range(n))
    return h + sum(-J * kron_op(n, {i: "X", i + 1: "X"}) for i in range(n - 1))


def dense_sw(n, lam, kappa):
    h = np.zeros((2**n, 2**n), dtype=complex)
    for gap, c in ((1, -lam / 2), (2, -kappa / 2)):
        for i in range(n - gap):
            for a in "XY":
                h += c * kron_op(n, {i: a, i + gap: a})
    return h - kron_op(n, {0: "Z"}) - kron_op(n, {n - 1: "Z"})


def random_state(rng, dim):
    v = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return v / np.linalg.norm(v)


@pytest.fixture(scope="session")
def oracle():
    return json.loads((FIXTURES / "fixtures.json").read_text())


@pytest.fixture(scope="session")
def chain_model():
    return TFIMParams(5, 10.0, 1.0)


@pytest.fixture(scope="session")
def chain_trials():
    return TrialSet.shared_time(initial_states(5), 2 * math.pi)


@pytest.fixture
def rng():
    return np.random.default_rng(20240531)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
