import re

import numpy as np
import pytest


def cgauss(rng, *shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def rand_hermitian(rng, n):
    G = cgauss(rng, n, n)
    return (G + G.conj().T) / 2


def rand_unitary(rng, n):
    Q, R = np.linalg.qr(cgauss(rng, n, n))
    return Q * (np.diag(R) / np.abs(np.diag(R)))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


# --- acceptance summary ------------------------------------------------------

_acceptance_lines: dict[str, str] = {}


def pytest_runtest_logreport(report):
    if "test_acceptance.py" not in report.nodeid:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        props = dict(report.user_properties)
        m = re.match(r"test_c(\d+)_", report.nodeid.split("::")[-1])
        label = f"criterion {int(m.group(1)):2d}" if m else report.nodeid.split("::")[-1]
        status = "PASS" if report.outcome == "passed" else "FAIL"
        detail = props.get("summary", "")
        _acceptance_lines[label] = f"{label}: {status}" + (f"  ({detail})" if detail else "")


def pytest_terminal_summary(terminalreporter):
    if not _acceptance_lines:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(_acceptance_lines, key=lambda k: (len(k), k)):
        terminalreporter.write_line(_acceptance_lines[key])
