import re
import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


_AC_PATTERN = re.compile(r"test_ac(\d+)_(\w+)")


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """One pass/fail line per acceptance criterion."""
    lines = {}
    for status in ("passed", "failed", "error"):
        for report in terminalreporter.stats.get(status, []):
            match = _AC_PATTERN.search(getattr(report, "nodeid", ""))
            if match:
                label = "PASS" if status == "passed" else "FAIL"
                lines[int(match.group(1))] = (
                    f"[AC{int(match.group(1)):02d}] {label} {match.group(2)}")
    if lines:
        terminalreporter.write_sep("=", "acceptance criteria")
        for num in sorted(lines):
            terminalreporter.write_line(lines[num])
