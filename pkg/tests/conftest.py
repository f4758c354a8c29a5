import math

import pytest

from coupler_swap.model import DeviceParams

TWO_PI = 2 * math.pi
G = TWO_PI * 100e6
OMEGA_C = TWO_PI * 6.0e9


def table1_params(alpha: float, lossy: bool = True, crosstalk: dict | None = None) -> DeviceParams:
    """Two pairs at delta_1 = +alpha g, delta_2 = -alpha g with g = mu = 2 pi x 100 MHz."""
    d = alpha * G
    rates = dict(kappa_a=(1e6, 1e6), kappa_b=(1e6, 1e6), gamma=1 / 3e-6, gamma_phi=1 / 3e-6) if lossy else {}
    return DeviceParams(
        omega_c=OMEGA_C,
        omega_a=(OMEGA_C - d, OMEGA_C + d),
        omega_b=(OMEGA_C - d, OMEGA_C + d),
        g=(G, G),
        mu=(G, G),
        crosstalk=crosstalk or {},
        **rates,
    )


@pytest.fixture
def lossless_pair_params():
    return table1_params(5.5, lossy=False)


_REPORT_KEY = pytest.StashKey[dict]()


@pytest.fixture(scope="session")
def acceptance_report(request):
    """Collects one PASS/FAIL line per acceptance criterion for the terminal summary."""
    return request.config.stash.setdefault(_REPORT_KEY, {})


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    report = config.stash.get(_REPORT_KEY, {})
    if not report:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(report, key=lambda k: (int(k.split(".")[0]), k)):
        terminalreporter.write_line(report[key])
