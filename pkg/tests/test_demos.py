import shutil
import subprocess
import sys
from pathlib import Path

import pytest

DEMOS = Path(__file__).resolve().parent.parent / "demos"


@pytest.mark.slow
@pytest.mark.parametrize("script", sorted(p.name for p in DEMOS.glob("[0-9]*.py")))
def test_demo_runs(script):
    proc = subprocess.run([sys.executable, script], cwd=DEMOS, capture_output=True, text=True, timeout=300)
    assert proc.returncode == 0, proc.stderr


@pytest.mark.skipif(shutil.which("dtsmc") is None, reason="console script not installed")
def test_cli_walkthrough_runs():
    proc = subprocess.run(["sh", "06_cli_walkthrough.sh"], cwd=DEMOS, capture_output=True, text=True, timeout=120)
    assert proc.returncode == 0, proc.stderr
    assert "exit code 3" in proc.stdout
