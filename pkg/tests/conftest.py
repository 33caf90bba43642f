import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from rdmkit.operators import random_state

settings.register_profile(
    "rdmkit", deadline=None, max_examples=40, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("rdmkit")

# criterion id -> (passed, detail); filled by test_acceptance
ACCEPTANCE: dict = {}


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


def make_state(d: int, seed: int):
    return random_state(d, np.random.default_rng([seed, d]))


def random_matrix(rng, d: int) -> np.ndarray:
    return rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))


def random_hermitian(rng, d: int) -> np.ndarray:
    g = random_matrix(rng, d)
    return (g + g.conj().T) / 2


def random_psd(rng, d: int) -> np.ndarray:
    g = random_matrix(rng, d)
    return g.conj().T @ g


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE, key=lambda s: int(s.split()[0])):
        passed, detail = ACCEPTANCE[key]
        terminalreporter.write_line(f"criterion {key}: {'PASS' if passed else 'FAIL'}  {detail}")
