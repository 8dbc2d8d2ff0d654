import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent))

import helpers  # noqa: E402


def pytest_terminal_summary(terminalreporter):
    if helpers.ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(helpers.ACCEPTANCE, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
