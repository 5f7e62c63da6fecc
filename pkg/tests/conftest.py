import collections

import pytest

CRITERIA = {
    1: "flow matches closed-form oracles (affine, power)",
    2: "moebius flow satisfies its transcendental flow equation",
    3: "Abel residual of the Koenigs map",
    4: "sector recovery for power and affine generators",
    5: "complex-time extension agrees with ray flow; negatives diverge",
    6: "envelope containment and moebius log bound",
    7: "H^p norms of test functions and dilation law",
    8: "dissipativity pairing: quadrature vs closed form",
    9: "characterization of composition operators",
    10: "restricted-semigroup widening gamma(k) and threshold",
}

_outcomes = collections.defaultdict(list)


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): acceptance criterion number")


def pytest_runtest_logreport(report):
    # the call phase decides, unless setup already failed or skipped
    if report.when != "call" and not (report.when == "setup" and report.outcome != "passed"):
        return
    for key, value in report.user_properties:
        if key == "criterion":
            _outcomes[value].append(report.outcome)


@pytest.hookimpl(tryfirst=True)
def pytest_runtest_setup(item):
    for mark in item.iter_markers("criterion"):
        item.user_properties.append(("criterion", mark.args[0]))


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    terminalreporter.section("acceptance criteria")
    for n, title in CRITERIA.items():
        results = _outcomes.get(n)
        if not results:
            status = "NOT RUN"
        elif all(r == "passed" for r in results):
            status = "PASS"
        else:
            status = "FAIL"
        terminalreporter.write_line(f"criterion {n:2d}: {status:7s} {title}")
