import pytest

from gelfand_radial import bottom_of_spectrum, hyperbolic, threshold_eta

# (criterion number, short title, passed, detail) collected by the acceptance suite
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for num, title, ok, detail in sorted(ACCEPTANCE_LINES, key=lambda t: t[0]):
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] {num:2d} {title}: {detail}")


@pytest.fixture(scope="session")
def h3():
    return hyperbolic()


@pytest.fixture(scope="session")
def spectrum_h3():
    return bottom_of_spectrum(hyperbolic(), 3)


@pytest.fixture(scope="session")
def spectrum_h2():
    return bottom_of_spectrum(hyperbolic(), 2)


@pytest.fixture(scope="session")
def eta_h3(spectrum_h3):
    return threshold_eta(hyperbolic(), 3, log_lambda1=spectrum_h3.log_value)


@pytest.fixture(scope="session")
def eta_h2(spectrum_h2):
    return threshold_eta(hyperbolic(), 2, log_lambda1=spectrum_h2.log_value)
