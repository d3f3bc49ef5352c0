import numpy as np
import pytest

from formlab.forms import FormCalculus
from formlab.mesh import build_disk_mesh, build_flat_torus, build_interval_mesh


@pytest.fixture(scope="session")
def torus8():
    return build_flat_torus(8, 8)


@pytest.fixture(scope="session")
def torus8_calc(torus8):
    return FormCalculus(torus8)


@pytest.fixture(scope="session")
def interval1k():
    return build_interval_mesh(1.0, 1000)


@pytest.fixture(scope="session")
def disk():
    return build_disk_mesh(4.0, 12)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


_ACCEPTANCE = pytest.StashKey[list]()


@pytest.fixture
def acceptance(request):
    """Record one pass/fail line for an acceptance criterion."""
    lines = request.config.stash.setdefault(_ACCEPTANCE, [])

    def record(number, title, ok, detail):
        line = f"acceptance {number} [{'PASS' if ok else 'FAIL'}] {title}: {detail}"
        print(line)
        lines.append(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_ACCEPTANCE, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: s.split()[1]):
            terminalreporter.write_line(line)
