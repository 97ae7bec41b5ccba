"""Shared fixtures and the acceptance summary printed at the end of a run."""

from __future__ import annotations

import math

import pytest

from asian_spectral import DimensionlessParams, MarketParams, to_dimensionless

_ACCEPTANCE_LINES: list[str] = []


def record_acceptance(label: str, passed: bool, detail: str) -> None:
    line = f"[{'PASS' if passed else 'FAIL'}] {label}: {detail}"
    _ACCEPTANCE_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def benchmark_market() -> MarketParams:
    return MarketParams(spot=2.0, strike=2.0, rate=0.05, vol=0.5, expiry=1.0)


@pytest.fixture
def benchmark_dp(benchmark_market) -> DimensionlessParams:
    return to_dimensionless(benchmark_market)


def reduced(nu: float, tau: float, x: float = math.log(2.0), strike: float = 2.0) -> DimensionlessParams:
    return DimensionlessParams.from_reduced((nu + 1.0) / 2.0, tau, x, strike)
