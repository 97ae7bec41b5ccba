"""Monte Carlo oracle: limits, parity, reproducibility and statistical scaling."""

from __future__ import annotations

import math

import pytest

from asian_spectral.mc import (
    MCConfig,
    discretization_gap,
    estimate,
    estimate_many,
    parity_adjustment,
    parity_residual,
    parity_residual_detail,
)
from asian_spectral.pricing import MarketParams

BENCH = MarketParams(2.0, 2.0, 0.05, 0.5, 1.0)


class TestConfig:
    @pytest.mark.parametrize("kw", [dict(n_paths=500), dict(n_paths=1001), dict(n_steps=10),
                                    dict(seed=-1), dict(seed=2**64), dict(n_threads=0)])
    def test_invalid(self, kw):
        with pytest.raises(ValueError):
            MCConfig(**kw)

    def test_odd_paths_without_antithetic(self):
        assert MCConfig(n_paths=1001, antithetic=False).n_paths == 1001

    def test_kind_checked(self):
        with pytest.raises(ValueError):
            estimate(BENCH, "straddle", MCConfig(n_paths=1000))


class TestLimits:
    def test_degenerate_volatility(self):
        m = MarketParams(1.0, 2.0, 0.0, 1e-4, 1.0)
        e = estimate(m, "put", MCConfig(n_paths=10_000))
        assert e.stderr < 1e-5
        assert abs(e.mean - 1.0) <= 3.0 * e.stderr

    def test_zero_strike_call(self):
        m = MarketParams(2.0, 0.0, 0.05, 0.5, 1.0)
        e = estimate(m, "call", MCConfig(n_paths=1_000_000))
        want = 2.0 * -math.expm1(-0.05) / 0.05
        assert abs(e.mean - want) <= 3.0 * e.stderr

    def test_zero_strike_put_is_zero(self):
        m = MarketParams(2.0, 0.0, 0.05, 0.5, 1.0)
        e = estimate(m, "put", MCConfig(n_paths=2000))
        assert e.mean == 0.0 and e.stderr == 0.0


class TestParity:
    def test_adjustment_benchmark(self):
        # 2 (1 - e^{-0.05}) / 0.05 - 2 e^{-0.05} = 0.0483642
        want = 2.0 * -math.expm1(-0.05) / 0.05 - 2.0 * math.exp(-0.05)
        assert parity_adjustment(BENCH) == pytest.approx(want, rel=1e-13)
        assert parity_adjustment(BENCH) == pytest.approx(0.0483642, abs=1e-7)

    def test_benchmark_residual(self):
        cfg = MCConfig(n_paths=200_000)
        res = parity_residual_detail(BENCH, cfg)
        assert abs(res.residual) <= 3.0 * res.stderr
        # separate put and call estimates on the same paths tell the same story
        est = estimate_many(BENCH, [BENCH.strike], cfg)
        diff = est["call"][0].mean - est["put"][0].mean - parity_adjustment(BENCH)
        assert diff == pytest.approx(res.residual, abs=1e-12)

    @pytest.mark.parametrize("m", [MarketParams(1.0, 1.3, 0.09, 0.3, 2.0), MarketParams(5.0, 4.0, -0.01, 0.7, 0.5)])
    def test_residual_other_contracts(self, m):
        res = parity_residual_detail(m, MCConfig(n_paths=100_000, seed=3))
        assert abs(res.residual) <= 3.0 * res.stderr

    def test_zero_strike(self):
        m = MarketParams(2.0, 0.0, 0.05, 0.5, 1.0)
        cfg = MCConfig(n_paths=20_000)
        put = estimate(m, "put", cfg)
        call = estimate(m, "call", cfg)
        assert put.mean == 0.0
        # with a zero put the residual is the call's sampling error alone
        assert parity_residual(m, cfg) == pytest.approx(call.mean - parity_adjustment(m), abs=1e-14)

    def test_vanishing_rate_series(self):
        m = MarketParams(2.0, 2.0, 1e-12, 0.5, 1.0)
        adj = parity_adjustment(m)
        assert math.isfinite(adj)
        assert adj == pytest.approx(0.0, abs=1e-11)
        assert math.isfinite(parity_residual(m, MCConfig(n_paths=2000)))


class TestReproducibility:
    def test_same_config_bit_identical(self):
        cfg = MCConfig(n_paths=40_000, seed=99)
        assert estimate(BENCH, "call", cfg) == estimate(BENCH, "call", cfg)

    def test_thread_count_irrelevant(self):
        one = estimate_many(BENCH, [1.8, 2.0], MCConfig(n_paths=50_000, n_threads=1))
        four = estimate_many(BENCH, [1.8, 2.0], MCConfig(n_paths=50_000, n_threads=4))
        assert one == four

    def test_seed_changes_result(self):
        a = estimate(BENCH, "call", MCConfig(n_paths=20_000, seed=1))
        b = estimate(BENCH, "call", MCConfig(n_paths=20_000, seed=2))
        assert a.mean != b.mean

    def test_metadata(self):
        e = estimate(BENCH, "put", MCConfig(n_paths=4000, seed=5))
        assert (e.n_paths, e.seed) == (4000, 5)
        assert e.stderr > 0.0


class TestStatistics:
    def test_sqrt_n_scaling(self):
        small = estimate(BENCH, "call", MCConfig(n_paths=100_000, seed=11))
        large = estimate(BENCH, "call", MCConfig(n_paths=400_000, seed=11))
        assert large.stderr / small.stderr == pytest.approx(0.5, rel=0.2)

    def test_step_doubling(self):
        cfg = MCConfig(n_paths=200_000)
        base = estimate(BENCH, "call", cfg)
        gap = discretization_gap(BENCH, "call", cfg)
        assert abs(gap.mean) < base.stderr

    def test_antithetic_not_worse(self):
        anti = estimate(BENCH, "call", MCConfig(n_paths=100_000, antithetic=True))
        plain = estimate(BENCH, "call", MCConfig(n_paths=100_000, antithetic=False))
        assert anti.stderr <= plain.stderr

    def test_benchmark_call_near_expected(self):
        e = estimate(BENCH, "call", MCConfig(n_paths=200_000))
        assert abs(e.mean - 0.2464) <= 3.0 * e.stderr + 1e-4
