import sys

import numpy as np
import pytest

from bilex import curve as cv
from bilex.conformal import build_phi
from bilex.extension import build_extension


@pytest.fixture(scope="session")
def bend():
    return cv.bend_curve()


@pytest.fixture(scope="session")
def zigzag():
    return cv.zigzag_curve()


@pytest.fixture(scope="session")
def bend_phi(bend):
    return build_phi(bend)


@pytest.fixture(scope="session")
def zigzag_phi(zigzag):
    return build_phi(zigzag)


@pytest.fixture(scope="session")
def extensions():
    curves = [cv.identity_curve(), cv.affine_curve(), cv.bend_curve(), cv.zigzag_curve()]
    return {c.name: build_extension(c) for c in curves}


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    lines = {}
    for mod in list(sys.modules.values()):
        lines.update(getattr(mod, "ACCEPTANCE_LINES", None) or {})
    if lines:
        terminalreporter.section("acceptance criteria")
        for n in sorted(lines):
            terminalreporter.write_line(lines[n])
