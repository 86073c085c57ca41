import sys
from pathlib import Path

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

sys.path.insert(0, str(Path(__file__).parent))

settings.register_profile(
    "default", deadline=None, suppress_health_check=[HealthCheck.too_slow], max_examples=60
)
settings.load_profile("default")


def random_binary_store(rng, N, C, K, p_correct=None):
    """Complete 0-1 store with random labels, fold plan and predictions."""
    from bbccv.resampling import unstratified_fold_plan
    from bbccv.selection import PredictionStore

    labels = rng.integers(0, 2, size=N)
    p = rng.uniform(0.3, 0.9, size=C) if p_correct is None else np.full(C, p_correct)
    correct = rng.uniform(size=(N, C)) < p
    preds = np.where(correct, labels[:, None], 1 - labels[:, None])
    plan = unstratified_fold_plan(N, K, seed=int(rng.integers(2**32)))
    return PredictionStore.from_matrix(preds, labels, plan.assignment), plan


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def toy_data():
    from bbccv.learners import Dataset

    r = np.random.default_rng(7)
    X = r.normal(size=(60, 2))
    y = (X[:, 0] + 0.3 * r.normal(size=60) > 0).astype(int)
    return Dataset(X, y)


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance")
    lines = getattr(module, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
