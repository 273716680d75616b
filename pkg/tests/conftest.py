import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(__file__))


@pytest.fixture
def rng():
    import numpy as np

    return np.random.default_rng(20240601)


def pytest_terminal_summary(terminalreporter):
    """Repeat the acceptance PASS/FAIL lines, which pytest captures by default."""
    lines = []
    for key in ("passed", "failed"):
        for rep in terminalreporter.stats.get(key, []):
            for line in getattr(rep, "capstdout", "").splitlines():
                if line.startswith(("PASS criterion", "FAIL criterion")):
                    lines.append(line)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: s.split()[2].zfill(2)):
            terminalreporter.write_line(line)
