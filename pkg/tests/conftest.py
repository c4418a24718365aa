import numpy as np
import pytest
from hypothesis import settings

from stablesub.levy_copula import ClaytonParams
from stablesub.series import ModelSpec
from stablesub.stable import StableParams
from stablesub.subordinator import LogNormalCppParams

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")

# one line per acceptance criterion, echoed in the terminal summary
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)

APPLE = StableParams(1.62, 0.09, 1.83e-05, 3.02e-09)
MSFT = StableParams(1.64, 0.15, 2.10e-05, 1.216e-08)
SUB1 = LogNormalCppParams(5.22, 8.82, 0.73)
SUB2 = LogNormalCppParams(7.8, 8.01, 0.91)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def apple_msft():
    return ModelSpec(APPLE, MSFT, SUB1, SUB2, ClaytonParams(1.92))


@pytest.fixture
def unit_model():
    """Small-number model for fast simulator checks."""
    return ModelSpec(StableParams(1.5, 0.3, 1.0, 0.2), StableParams(1.8, -0.2, 0.5, -0.1),
                     LogNormalCppParams(3.0, 0.0, 0.5), LogNormalCppParams(5.0, -0.5, 0.4),
                     ClaytonParams(1.0))


def write_bar_pair(folder, n_bars, seed):
    """Two aligned bar files whose per-bar trade counts are common jumps of the Apple/Msft model."""
    from stablesub.calibration import synthetic_bars, synthetic_common_jumps
    from stablesub.data_io import save_bars
    gen = np.random.default_rng(seed)
    jumps = np.zeros((0, 2))
    while len(jumps) < n_bars:
        jumps = np.vstack([jumps, synthetic_common_jumps(ClaytonParams(1.92), SUB1, SUB2, n_bars, gen)])
    jumps = jumps[:n_bars]
    paths = []
    for k, st in enumerate((APPLE, MSFT)):
        bars = synthetic_bars(st, None, n_bars, gen, counts=jumps[:, k])
        path = folder / f"asset{k + 1}.csv"
        save_bars(bars, path)
        paths.append(path)
    return paths
