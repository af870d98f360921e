import numpy as np
import pytest

from fdiv.generators import all_generators, make_generator
from fdiv.solver import SolverConfig

# the nine catalog entries, with alpha at 1.5
CATALOG = all_generators()
CATALOG_IDS = [g.name for g in CATALOG]

# catalog plus extra alpha values, used where cheap
EXTENDED = all_generators(alphas=(0.5, 1.5, 2.0, 4.0))
EXTENDED_IDS = [g.name for g in EXTENDED]

TIGHT = SolverConfig(tolerance=1e-13, max_iterations=200)


@pytest.fixture(params=CATALOG, ids=CATALOG_IDS)
def gen(request):
    return request.param


@pytest.fixture(params=EXTENDED, ids=EXTENDED_IDS)
def gen_ext(request):
    return request.param


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_instance(rng, k_range=(2, 6), theta_scale=5.0, q_range=(0.1, 3.0)):
    k = int(rng.integers(k_range[0], k_range[1] + 1))
    theta = rng.uniform(-theta_scale, theta_scale, k)
    q = rng.uniform(*q_range, k)
    return theta, q


def random_simplex(rng, k, floor=0.0):
    p = rng.dirichlet(np.ones(k))
    if floor:
        p = np.maximum(p, floor)
        p /= p.sum()
    return p


def kl():
    return make_generator("kl")


# ---------------------------------------------------------------------------
# acceptance reporting: one PASS/FAIL line per criterion in the terminal summary

_ACCEPTANCE = {}


@pytest.fixture
def criterion(request):
    """Attach a one-line statistic to the running acceptance test."""
    def detail(text):
        request.node.user_properties.append(("detail", text))
        print(text)
    return detail


def pytest_runtest_logreport(report):
    name = report.nodeid.rsplit("::", 1)[-1]
    if not name.startswith("test_criterion_"):
        return
    if report.when == "call" or (report.when == "setup" and not report.passed):
        number = int(name.split("_")[2])
        text = "; ".join(v for k, v in report.user_properties if k == "detail")
        _ACCEPTANCE[number] = (report.outcome, name, text)


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_ACCEPTANCE):
        outcome, name, text = _ACCEPTANCE[number]
        status = "PASS" if outcome == "passed" else "FAIL"
        terminalreporter.write_line(f"criterion {number:2d} {status}  {name[18:]}: {text}")
