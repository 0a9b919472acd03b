import os
import sys
import time

import pytest

sys.path.insert(0, os.path.dirname(__file__))

from weaklyhard.config import load_config, reference_config_path  # noqa: E402
from weaklyhard.sweep import run_sweep  # noqa: E402

# Filled by tests/test_acceptance.py, printed at the end of the run.
ACCEPTANCE = {}
SWEEP_SECONDS = {}


@pytest.fixture(scope="session")
def reference_cfg():
    return load_config(reference_config_path())


@pytest.fixture(scope="session")
def reference_sweep(reference_cfg):
    """Full 55..300 ms sweep of the reference study (about half a minute)."""
    t0 = time.perf_counter()
    rows = run_sweep(reference_cfg)
    SWEEP_SECONDS[35.0] = time.perf_counter() - t0
    return rows


@pytest.fixture(scope="session")
def reference_sweep_30(reference_cfg):
    t0 = time.perf_counter()
    rows = run_sweep(reference_cfg.with_overrides(norm_bound=30.0))
    SWEEP_SECONDS[30.0] = time.perf_counter() - t0
    return rows


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[key])
