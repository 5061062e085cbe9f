import numpy as np
import pytest

from carnot import make_spec

SPEC_ARGS = {
    "H1": (0, [4.0]),
    "RH1": (1, [4.0]),
    "H2": (0, [4.0, 4.0]),
    "B12": (0, [1.0, 2.0]),
}

# filled by test_acceptance.py, printed once at the end of the session
ACCEPTANCE_LINES = []


def spec_of(name):
    return make_spec(*SPEC_ARGS[name])


@pytest.fixture(params=list(SPEC_ARGS))
def spec(request):
    return spec_of(request.param)


@pytest.fixture
def h1():
    return spec_of("H1")


@pytest.fixture
def rh1():
    return spec_of("RH1")


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


def interior_covectors(spec, rng, n, frac=0.95):
    p = rng.normal(size=(n, spec.dim))
    p[:, -1] = rng.uniform(-frac, frac, size=n) * spec.pz_max
    return p


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
