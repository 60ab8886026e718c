import pytest

from picard_nth import FAParams, reference_config


@pytest.fixture(scope="session")
def ref():
    """(ReactorConfig, PinGeometry) of the bundled reference case."""
    return reference_config()


@pytest.fixture(scope="session")
def ref_fa(ref):
    return FAParams.from_config(*ref)


@pytest.fixture
def small_config(ref):
    """Reference physics on a short, coarse slab: cheap coupled runs."""
    config, pin = ref
    return config.with_height(50.0), pin


ACCEPTANCE_LINES = []


@pytest.fixture
def acceptance_report():
    """Record one PASS/FAIL line per acceptance criterion for the summary."""

    def record(name, passed, detail):
        ACCEPTANCE_LINES.append(f"{'PASS' if passed else 'FAIL'}  {name}: {detail}")
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
