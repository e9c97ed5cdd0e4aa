"""Per-criterion pass/fail summary for the acceptance suite."""

import pytest

CRITERIA = {
    1: "backend equivalence (Lindblad vs spectral)",
    2: "short-time quadratic coefficient of C_q",
    3: "short-time means of P_m, sigma_x, sigma_y",
    4: "thermal enhancement over n_m",
    5: "qubit heating penalty over P_ee",
    6: "theta structure of C_q^max",
    7: "resonance peak over detuning",
    8: "robustness to mechanical damping",
    9: "dissipative steady state",
    10: "QID effects",
    11: "circuit derivation",
    12: "state health on every stored point",
}

_OUTCOMES = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): acceptance criterion number")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None or not (rep.when == "call" or rep.failed):
        return
    n = marker.args[0]
    detail = dict(item.user_properties).get("criterion_detail", "")
    if rep.failed and not detail:
        detail = str(rep.longrepr.reprcrash.message if hasattr(rep.longrepr, "reprcrash") else rep.longrepr)
        detail = detail.splitlines()[0] if detail else ""
    status = "FAIL" if rep.failed else ("SKIP" if rep.skipped else "PASS")
    _OUTCOMES[n] = (status, detail)


def pytest_terminal_summary(terminalreporter):
    if not _OUTCOMES:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for n, title in CRITERIA.items():
        status, detail = _OUTCOMES.get(n, ("NOT RUN", ""))
        tr.write_line(f"criterion {n:2d} [{status}] {title}" + (f": {detail}" if detail else ""))
