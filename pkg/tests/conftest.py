import os
import random
import sys
from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings

sys.path.insert(0, str(Path(__file__).parent))

SEED = int(os.environ.get("DSLKIT_SEED", "20240517"))

# derandomize makes hypothesis runs reproducible; DSLKIT_SEED varies the
# plain random.Random streams used by the brute-force suites
settings.register_profile("dslkit", derandomize=True, deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("dslkit")


@pytest.fixture
def rng():
    return random.Random(SEED)


def pytest_report_header(config):
    return f"DSLKIT_SEED={SEED}"


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if results:
        terminalreporter.section("acceptance criteria")
        for n in sorted(results):
            terminalreporter.write_line(results[n])
