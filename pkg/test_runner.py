#!/usr/bin/env python3
"""
Developer shortcuts for pivotsat.

    python test_runner.py tests [pytest args]
    python test_runner.py coverage [pytest args]
    python test_runner.py smoke
    python test_runner.py acceptance

`acceptance` reproduces the fixtures, then runs the strict campaign in
campaigns/acceptance.cfg and leaves acceptance-report.json and
scoreboard.csv behind.
"""
import subprocess
import sys

PYTEST = [sys.executable, "-m", "pytest", "tests/"]
PIVOTSAT = [sys.executable, "main.py"]


def run_tests(extra):
    return subprocess.run([*PYTEST, "-v", *extra]).returncode


def run_tests_with_coverage(extra):
    cmd = [*PYTEST, "--cov=.", "--cov-report=term-missing", "--cov-report=html", *extra]
    return subprocess.run(cmd).returncode


def run_smoke(extra):
    """Quick differential campaign from campaigns/smoke.cfg."""
    return subprocess.run([*PIVOTSAT, "fuzz", "campaigns/smoke.cfg", *extra]).returncode


def run_acceptance(extra):
    fixtures = subprocess.run([*PIVOTSAT, "fixtures", "--format", "text"])
    if fixtures.returncode != 0:
        return fixtures.returncode
    cmd = [*PIVOTSAT, "fuzz", "campaigns/acceptance.cfg", "--strict", "--csv", "scoreboard.csv", *extra]
    with open("acceptance-report.json", "w", encoding="utf-8") as report:
        return subprocess.run(cmd, stdout=report).returncode


COMMANDS = {
    "tests": run_tests,
    "coverage": run_tests_with_coverage,
    "smoke": run_smoke,
    "acceptance": run_acceptance,
}


def main():
    if len(sys.argv) < 2 or sys.argv[1] not in COMMANDS:
        print(f"Usage: python test_runner.py [{'|'.join(COMMANDS)}] [extra args]")
        sys.exit(1)
    sys.exit(COMMANDS[sys.argv[1]](sys.argv[2:]))


if __name__ == "__main__":
    main()
