"""Run the acceptance suite and show its PASS/FAIL lines."""

import sys
from pathlib import Path

import pytest

if __name__ == "__main__":
    here = Path(__file__).resolve().parent.parent / "tests" / "test_acceptance.py"
    sys.exit(pytest.main(["-v", str(here), *sys.argv[1:]]))
