import math
import os

import numpy as np
import pytest
from hypothesis import settings

from uvjitter import ChannelParams, DetectorParams, LinkGeometry, expand_ftpd

settings.register_profile("default", deadline=None, max_examples=60)
settings.register_profile("thorough", deadline=None, max_examples=500)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
        terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def baseline():
    return LinkGeometry.from_degrees(50.0, 20.0, 20.0, 5.0, 0.0, 1.0, 30.0)


@pytest.fixture(scope="session")
def params():
    return ChannelParams()


@pytest.fixture(scope="session")
def detector():
    return DetectorParams()


@pytest.fixture(scope="session")
def baseline_model(baseline, params):
    return expand_ftpd(baseline, params)


def l1_trapezoid(xs, a, b):
    return float(np.trapezoid(np.abs(np.asarray(a) - np.asarray(b)), xs))


def wilson_contains(est, value):
    return est.ci_lo <= value <= est.ci_hi


def sample_spectral(form, n, rng):
    """Direct samples of ``eps + sum_pos l chi2_1(d) - sum_neg l chi2_1(d)``."""
    x = np.full(n, form.eps)
    for sign, part in ((1.0, form.pos), (-1.0, form.neg)):
        for lam, d in part:
            z = rng.standard_normal(n) + math.sqrt(d)
            x += sign * lam * z * z
    return x
