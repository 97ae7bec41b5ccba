"""Monte Carlo oracle for continuously averaged arithmetic Asian options.

Paths of geometric Brownian motion are stepped exactly in log space; the
time average is the trapezoidal mean over the step grid.  Random numbers
come from Philox streams keyed by (seed, block index), and block results are
reduced in block order, so estimates do not depend on the thread count.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .pricing import MarketParams

BLOCK_PATHS = 8192


@dataclass(frozen=True)
class MCConfig:
    """``n_paths`` counts every path, so antithetic runs use n_paths / 2 pairs."""

    n_paths: int = 200_000
    n_steps: int = 252
    seed: int = 12345
    antithetic: bool = True
    n_threads: int = 1

    def __post_init__(self):
        if self.n_paths < 1000:
            raise ValueError(f"n_paths must be >= 1000, got {self.n_paths}")
        if self.antithetic and self.n_paths % 2:
            raise ValueError("n_paths must be even when antithetic sampling is on")
        if self.n_steps < 50:
            raise ValueError(f"n_steps must be >= 50, got {self.n_steps}")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        if self.n_threads < 1:
            raise ValueError("n_threads must be >= 1")


@dataclass(frozen=True)
class MCEstimate:
    mean: float
    stderr: float
    n_paths: int
    seed: int


def _block_sizes(cfg: MCConfig) -> list[int]:
    """Independent samples per block (pairs when antithetic)."""
    total = cfg.n_paths // 2 if cfg.antithetic else cfg.n_paths
    sizes = [BLOCK_PATHS] * (total // BLOCK_PATHS)
    if total % BLOCK_PATHS:
        sizes.append(total % BLOCK_PATHS)
    return sizes


def _block_averages(m: MarketParams, cfg: MCConfig, index: int, size: int) -> np.ndarray:
    """Trapezoidal path averages for one block; shape (size,) or (2, size) when antithetic."""
    rng = np.random.Generator(np.random.Philox(key=[cfg.seed, index]))
    dt = m.expiry / cfg.n_steps
    drift = (m.rate - 0.5 * m.vol**2) * dt
    vol = m.vol * math.sqrt(dt)
    signs = (1.0, -1.0) if cfg.antithetic else (1.0,)
    log_s = np.zeros((len(signs), size))
    acc = np.full((len(signs), size), 0.5)
    sign_col = np.asarray(signs)[:, None]
    for step in range(cfg.n_steps):
        z = rng.standard_normal(size)
        log_s += drift + vol * sign_col * z
        level = np.exp(log_s)
        acc += level if step < cfg.n_steps - 1 else 0.5 * level
    return m.spot * acc / cfg.n_steps


def _coupled_averages(m: MarketParams, cfg: MCConfig, index: int, size: int) -> np.ndarray:
    """Path averages on 2 n_steps and n_steps grids from the same Brownian path.

    Returns shape (2, size) or (2, 2, size) when antithetic: fine grid first.
    """
    rng = np.random.Generator(np.random.Philox(key=[cfg.seed, index]))
    n = 2 * cfg.n_steps
    dt = m.expiry / n
    drift = (m.rate - 0.5 * m.vol**2) * dt
    vol = m.vol * math.sqrt(dt)
    signs = np.asarray((1.0, -1.0) if cfg.antithetic else (1.0,))[:, None]
    log_s = np.zeros((signs.shape[0], size))
    fine = np.full(log_s.shape, 0.5)
    coarse = np.full(log_s.shape, 0.5)
    for step in range(n):
        log_s += drift + vol * signs * rng.standard_normal(size)
        level = np.exp(log_s)
        last = step == n - 1
        fine += 0.5 * level if last else level
        if step % 2:
            coarse += 0.5 * level if last else level
    out = np.stack([fine / n, coarse / cfg.n_steps]) * m.spot
    return out if cfg.antithetic else out[:, 0]


def _combine(parts):
    """Merge (count, mean, M2) block statistics in block order (Chan et al.)."""
    n, mean, m2 = parts[0]
    for nb, mb, m2b in parts[1:]:
        tot = n + nb
        delta = mb - mean
        mean = mean + delta * (nb / tot)
        m2 = m2 + m2b + delta * delta * (n * nb / tot)
        n = tot
    return n, mean, m2


def _block_stats(samples: np.ndarray):
    mean = samples.mean(axis=0)
    return samples.shape[0], mean, ((samples - mean) ** 2).sum(axis=0)


def _map_blocks(m: MarketParams, cfg: MCConfig, fn):
    sizes = _block_sizes(cfg)

    def work(job):
        i, size = job
        return _block_stats(fn(_block_averages(m, cfg, i, size)))

    jobs = list(enumerate(sizes))
    if cfg.n_threads > 1:
        with ThreadPoolExecutor(cfg.n_threads) as pool:
            parts = list(pool.map(work, jobs))
    else:
        parts = [work(j) for j in jobs]
    return _combine(parts)


def _finish(n: int, mean: float, m2: float, disc: float, cfg: MCConfig) -> MCEstimate:
    return MCEstimate(disc * float(mean), disc * math.sqrt(float(m2) / (n - 1) / n), cfg.n_paths, cfg.seed)


def estimate_many(m: MarketParams, strikes, cfg: MCConfig = MCConfig()) -> dict[str, list[MCEstimate]]:
    """Put and call estimates for several strikes from one set of paths.

    Samples are antithetic pair means when ``cfg.antithetic`` is set.
    """
    strikes = np.atleast_1d(np.asarray(strikes, dtype=float))

    def payoffs(avg):
        put = np.maximum(strikes - avg[..., None], 0.0).mean(axis=0)
        call = np.maximum(avg[..., None] - strikes, 0.0).mean(axis=0)
        return np.concatenate([put, call], axis=1)  # (samples, 2 * n_strikes)

    n, mean, m2 = _map_blocks(m, cfg, payoffs)
    disc = math.exp(-m.rate * m.expiry)
    ns = strikes.size
    return {
        kind: [_finish(n, mean[off + j], m2[off + j], disc, cfg) for j in range(ns)]
        for off, kind in ((0, "put"), (ns, "call"))
    }


def estimate(m: MarketParams, kind: str, cfg: MCConfig = MCConfig()) -> MCEstimate:
    """Discounted Monte Carlo value of the Asian ``kind`` ('put' or 'call')."""
    if kind not in ("put", "call"):
        raise ValueError(f"kind must be 'put' or 'call', got {kind!r}")
    return estimate_many(m, [m.strike], cfg)[kind][0]


def discretization_gap(m: MarketParams, kind: str, cfg: MCConfig = MCConfig()) -> MCEstimate:
    """Value on 2 n_steps minus value on n_steps, from common Brownian paths.

    The coarse grid takes every second point of the fine one, so the
    estimate isolates the bias of the trapezoidal average.
    """
    if kind not in ("put", "call"):
        raise ValueError(f"kind must be 'put' or 'call', got {kind!r}")
    sign = 1.0 if kind == "call" else -1.0
    k = m.strike

    def work(job):
        i, size = job
        avg = _coupled_averages(m, cfg, i, size)
        pay = np.maximum(sign * (avg - k), 0.0)
        diff = pay[0] - pay[1]
        return _block_stats(diff.mean(axis=0) if cfg.antithetic else diff)

    n, mean, m2 = _combine([work(j) for j in enumerate(_block_sizes(cfg))])
    return _finish(n, mean, m2, math.exp(-m.rate * m.expiry), cfg)


def parity_adjustment(m: MarketParams) -> float:
    """((1 - e^{-rt}) / (rt)) S0 - e^{-rt} K, using the series when rt is tiny."""
    rt = m.rate * m.expiry
    factor = -math.expm1(-rt) / rt if abs(rt) > 1e-8 else 1.0 - rt / 2.0 + rt * rt / 6.0
    return factor * m.spot - math.exp(-rt) * m.strike


@dataclass(frozen=True)
class ParityResidual:
    residual: float
    stderr: float


def parity_residual_detail(m: MarketParams, cfg: MCConfig = MCConfig()) -> ParityResidual:
    """(call - put) - parity adjustment on common paths, with its standard error.

    On each path call - put = A - K exactly, so the residual is the sampling
    error of the discounted mean of A.
    """
    k = m.strike

    def diff(avg):
        return (np.maximum(avg - k, 0.0) - np.maximum(k - avg, 0.0)).mean(axis=0)

    n, mean, m2 = _map_blocks(m, cfg, diff)
    disc = math.exp(-m.rate * m.expiry)
    return ParityResidual(disc * float(mean) - parity_adjustment(m), disc * math.sqrt(float(m2) / (n - 1) / n))


def parity_residual(m: MarketParams, cfg: MCConfig = MCConfig()) -> float:
    return parity_residual_detail(m, cfg).residual
