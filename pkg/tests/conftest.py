import pytest
from hypothesis import HealthCheck, settings

from klsym.bessel import frobenius_matrix_rel
from klsym.padic import PrecisionProfile

# fixed, reproducible property runs with at least 100 cases each
settings.register_profile(
    "repro",
    max_examples=100,
    derandomize=True,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.function_scoped_fixture],
)
settings.load_profile("repro")

SMALL = PrecisionProfile(p=5, a=1, N_padic=20, N_t=8, M_w=12, M_T=4)
MEDIUM = PrecisionProfile(p=5, a=1, N_padic=30, N_t=12, M_w=16, M_T=4)

CRITERIA: dict[int, tuple[bool, str]] = {}


@pytest.fixture(scope="session")
def small_profile():
    return SMALL


@pytest.fixture(scope="session")
def frob_small():
    return frobenius_matrix_rel(5, 1, SMALL.q * SMALL.N_t, SMALL.N_padic)


@pytest.fixture(scope="session")
def criteria():
    return CRITERIA


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(CRITERIA):
        ok, text = CRITERIA[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {text}")
