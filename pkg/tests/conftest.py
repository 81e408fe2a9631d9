import os
from pathlib import Path

import pytest

ROOT = Path(__file__).resolve().parents[1]
DATA_DIR = ROOT / "data"
CONFIG_DIR = ROOT / "configs"

# criterion number -> (passed, detail), filled by test_acceptance.py
ACCEPTANCE = {}


@pytest.fixture(autouse=True)
def _data_dir(monkeypatch):
    if "FUNCMCMC_DATA_DIR" not in os.environ:
        monkeypatch.setenv("FUNCMCMC_DATA_DIR", str(DATA_DIR))


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(ACCEPTANCE):
        passed, detail = ACCEPTANCE[num]
        terminalreporter.write_line(f"CRITERION {num}: {'PASS' if passed else 'FAIL'} - {detail}")
