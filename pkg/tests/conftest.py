import re

import numpy as np
import pytest
from hypothesis import settings

from beamfrac import assembly as asm
from beamfrac import beam_core as bc

settings.register_profile("default", max_examples=40, deadline=None)
settings.load_profile("default")


def fd_jacobian(fun, x, h=1e-6):
    """Central-difference Jacobian of a vector function."""
    x = np.asarray(x, dtype=float)
    f0 = np.asarray(fun(x))
    J = np.zeros((f0.size, x.size))
    for j in range(x.size):
        e = np.zeros_like(x)
        e[j] = h
        J[:, j] = (np.asarray(fun(x + e)) - np.asarray(fun(x - e))).ravel() / (2 * h)
    return J


def rotation(axis, angle):
    axis = np.asarray(axis, dtype=float)
    axis = axis / np.linalg.norm(axis)
    S = bc.skew(axis)
    return np.eye(3) + np.sin(angle) * S + (1 - np.cos(angle)) * S @ S


def rotate_state(x, Q, shift=None):
    """Rotate every slot of a global DOF vector; positions are also shifted."""
    X = np.asarray(x).reshape(-1, 4, 3) @ Q.T
    if shift is not None:
        X[:, 0::2] += shift
    return X.reshape(-1)


@pytest.fixture
def steel():
    return bc.MaterialSection(E=200e9, rho=7800.0, R=0.01)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def mesh4():
    return asm.BeamMesh.uniform(1.0, 4)


# acceptance verdicts, echoed at the end of the run
ACCEPTANCE = []


def report(criterion, ok, detail):
    line = f"{'PASS' if ok else 'FAIL'} criterion {criterion}: {detail}"
    ACCEPTANCE.append(line)
    print(line)
    return ok


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    # a criterion whose run raises still gets its FAIL line
    rep = (yield).get_result()
    m = re.match(r"test_criterion_(\d+)", item.name)
    reported = m and any(line.split(":")[0].endswith(f"criterion {m[1]}") for line in ACCEPTANCE)
    if m and not reported and rep.when == "call" and rep.failed and call.excinfo is not None:
        report(m[1], False, f"run aborted: {call.excinfo.typename}: {call.excinfo.value}")


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE:
            terminalreporter.write_line(line)
