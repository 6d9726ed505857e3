import numpy as np
import pytest

from qcm.circuit import TEMPLATES, FunctionalModel, SicMeasure, Unitary, Wire, chain_model, haar_unitary, random_model
from qcm.sic import known_sic

ACCEPTANCE_LINES = []


def record(criterion: str, passed: bool, detail: str):
    ACCEPTANCE_LINES.append(f"[{'PASS' if passed else 'FAIL'}] {criterion}: {detail}")


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def chain2():
    return chain_model(["Z", "D"])


@pytest.fixture(scope="session")
def chain3():
    return chain_model(["A", "Z", "D"])


def fork_circuit(u):
    """C measured on wire c, a two-wire unitary, then A on c and B on e."""
    sic2 = known_sic(2)
    return FunctionalModel(
        [Wire("c", 2), Wire("e", 2)],
        [SicMeasure("C", "c", sic2), Unitary(["c", "e"], u), SicMeasure("A", "c", sic2), SicMeasure("B", "e", sic2)],
    )


@pytest.fixture(scope="session")
def fork_model():
    return fork_circuit(haar_unitary(4, 11))


@pytest.fixture(scope="session")
def test_models():
    """20 seeded random models for each of the four templates."""
    return {(name, seed): random_model(t, seed) for name, t in TEMPLATES.items() for seed in range(20)}


@pytest.fixture(params=sorted(TEMPLATES))
def template(request):
    return request.param, TEMPLATES[request.param]
