import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from g2dlda import Dataset, class_statistics  # noqa: E402


def random_dataset(seed, c=3, n=4, d1=5, d2=4, sep=1.0):
    rng = np.random.default_rng(seed)
    means = sep * rng.standard_normal((c, d1, d2))
    X = np.concatenate([means[i] + rng.standard_normal((n, d1, d2)) for i in range(c)])
    return Dataset(X, np.repeat(np.arange(1, c + 1), n))


def axis_dataset(spread=0.3):
    """Two 1-column classes offset along e1, within-class variation along e2 only."""
    X = np.array([[[1.0], [spread]], [[1.0], [-spread]], [[-1.0], [spread]], [[-1.0], [-spread]]])
    return Dataset(X, np.array([1, 1, 2, 2]))


@pytest.fixture
def small_dataset():
    return random_dataset(0)


@pytest.fixture
def small_stats(small_dataset):
    return class_statistics(small_dataset)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is not None and mod.REPORT:
        terminalreporter.section("acceptance criteria")
        for line in mod.REPORT:
            terminalreporter.write_line(line)
