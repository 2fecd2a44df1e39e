import math

import numpy as np
import pytest

from itree.model import config_from_probabilities

ACCEPTANCE_RESULTS: list[tuple[str, bool, str]] = []


def random_config(rng: np.random.Generator, n_steps: int, seed: int = 0):
    """Step-dependent probabilities, arbitrary lambda and initial spin."""
    return config_from_probabilities(
        n_steps,
        float(rng.uniform(-math.pi / 2, math.pi / 2)),
        rng.uniform(0.0, 1.0, n_steps).tolist(),
        rng.uniform(0.0, 1.0, n_steps).tolist(),
        float(rng.uniform(-1.0, 1.0)),
        seed,
    )


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok, detail in ACCEPTANCE_RESULTS:
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}")
