import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from tfhe_bku.bootstrap import generate_cloud_keys
from tfhe_bku.params import load_preset
from tfhe_bku.torus import sample_secret_keys
from tfhe_bku.transform.backend import make_backend

settings.register_profile(
    "repo",
    deadline=None,
    max_examples=40,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.function_scoped_fixture],
)
settings.load_profile("repo")


@pytest.fixture(scope="session")
def toy():
    return load_preset("toy")


@pytest.fixture(scope="session")
def toy_keys(toy):
    sk = sample_secret_keys(toy, 11)
    return sk, generate_cloud_keys(sk, toy, 12)


@pytest.fixture(scope="session")
def toy_backend(toy):
    return make_backend("approximate", toy.N, toy.beta)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def acceptance_log():
    return ACCEPTANCE_LINES


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
