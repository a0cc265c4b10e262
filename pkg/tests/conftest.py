import numpy as np
import pytest

from apdens.problems import EvaluationBatch, Evaluation

ACCEPTANCE_LINES: dict[int, str] = {}


def ev(f: float, v: float = 0.0, theta: float | None = None) -> Evaluation:
    """Hand-made evaluation with a single constraint slot."""
    theta = v if theta is None else theta
    return Evaluation(f=float(f), g=np.array([v]), h=np.zeros(0), G=np.array([v]),
                      v=float(v), theta=float(theta))


def batch(pairs) -> EvaluationBatch:
    return EvaluationBatch.from_evaluations(ev(*p) for p in pairs)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[k])
