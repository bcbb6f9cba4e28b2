"""Acceptance criteria, one test each, at their stated tolerances.

Every test prints a ``[PASS]``/``[FAIL]`` line with the measured figures,
so ``pytest -v`` output doubles as the acceptance report.
"""

import subprocess
import sys
import time

import pytest

from pdptools.verify import CHECKS, SUITE_LIMITS, run_suite


@pytest.fixture(scope="module")
def full_suite():
    results, timing = run_suite("full")
    return {r.number: r for r in results}, timing


def _report(capsys, result):
    with capsys.disabled():
        print("\n" + result.line())
    assert result.passed, result.detail


@pytest.mark.parametrize("number", sorted(CHECKS), ids=lambda n: f"criterion_{n:02d}")
def test_criterion(full_suite, capsys, number):
    results, _ = full_suite
    _report(capsys, results[number])


def test_criterion_15_suite_runtimes(full_suite, capsys):
    _, timing = full_suite
    start = time.perf_counter()
    proc = subprocess.run(
        [sys.executable, "-m", "pdptools", "verify", "quick"], capture_output=True, text=True, timeout=600
    )
    quick = time.perf_counter() - start
    with capsys.disabled():
        mark = "PASS" if proc.returncode == 0 and quick < SUITE_LIMITS["quick"] else "FAIL"
        print(f"\n[{mark}] criterion 15 quick suite via CLI: {quick:.1f}s (limit {SUITE_LIMITS['quick']:.0f}s)")
    assert proc.returncode == 0, proc.stdout + proc.stderr
    assert quick < SUITE_LIMITS["quick"]
    _report(capsys, timing)
