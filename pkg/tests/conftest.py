import math
import os
from pathlib import Path

import pytest

from boundary_weyl.domains import Annulus, SphereCapComplement
from boundary_weyl.eigensolver import cached_spectrum

CACHE = Path(os.environ.get("BOUNDARY_WEYL_CACHE", Path(__file__).resolve().parents[1] / ".cache" / "spectra"))

DOMAINS = {
    "annulus": Annulus(1.0, 2.0),
    "hemisphere": SphereCapComplement(math.pi / 2),
    "cap": SphereCapComplement(math.pi / 3),
}


@pytest.fixture(scope="session")
def spectrum():
    """Factory ``spectrum(name, bc, lambda_max)`` backed by an on-disk cache."""
    memo = {}

    def get(name, bc, lambda_max=150.0):
        key = (name, bc, float(lambda_max))
        if key not in memo:
            memo[key] = cached_spectrum(DOMAINS[name], bc, lambda_max, cache_dir=CACHE, threads=4)
        return memo[key]

    return get


_ACCEPTANCE = []


@pytest.fixture(scope="session")
def acceptance():
    """Record one summary line per acceptance criterion."""

    def record(number, title, ok, detail):
        line = f"criterion {number} [{'PASS' if ok else 'FAIL'}] {title}: {detail}"
        _ACCEPTANCE.append((number, line))
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.write_sep("=", "acceptance criteria")
        for _, line in sorted(_ACCEPTANCE):
            terminalreporter.write_line(line)
