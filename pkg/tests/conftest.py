import numpy as np
import pytest

from vegtox import Grid, ModelParams, State2, State3, step_fast, step_limit
from vegtox.config import MODEL_DEFAULTS, SCENARIOS

_ACCEPTANCE_RESULTS = []


def make_params(**overrides) -> ModelParams:
    """Baseline parameter set with overrides (all effects off by default)."""
    base = dict(MODEL_DEFAULTS)
    base.update(overrides)
    return ModelParams(**base)


def scenario_params(label, **overrides) -> ModelParams:
    gamma, s, sigma = SCENARIOS[label]
    return make_params(gamma=gamma, s=s, sigma=sigma, **overrides)


@pytest.fixture(scope="session", autouse=True)
def warm_kernels():
    """Compile the stepping kernels once so timed tests measure stepping,
    not JIT compilation."""
    p = scenario_params("ii", epsilon=0.1)
    g1 = Grid(1, 8.0, 8)
    g2 = Grid(2, 8.0, 8)
    s1 = State2(np.full(8, 1.0), np.zeros(8))
    s2 = State2(np.full((8, 8), 1.0), np.zeros((8, 8)))
    step_limit(s1, p, g1, 1e-6)
    step_limit(s2, p, g2, 1e-6)
    f1 = State3(np.full(8, 1.0), np.zeros(8), np.zeros(8))
    f2 = State3(np.full((8, 8), 1.0), np.zeros((8, 8)), np.zeros((8, 8)))
    step_fast(f1, p, g1, 1e-6)
    step_fast(f2, p, g2, 1e-6)


def record_criterion(number, description, passed, detail=""):
    _ACCEPTANCE_RESULTS.append((number, description, passed, detail))


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE_RESULTS:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for number, description, passed, detail in sorted(_ACCEPTANCE_RESULTS):
        status = "PASS" if passed else "FAIL"
        line = f"criterion {number:2d}: {status} - {description}"
        if detail:
            line += f" ({detail})"
        terminalreporter.write_line(line)
