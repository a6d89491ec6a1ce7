"""Seeded Monte Carlo paths of the pricing kernel, optimal wealth and strategy.

Paths are generated in fixed-size blocks.  Block ``b`` draws its Gaussian
increments from a Philox generator keyed by ``(seed, b)``, so a path's
increments depend only on the seed, the block size and its index, never on
how blocks are scheduled across threads.  Wealth follows
``dX = (sigma pi) . (lambda dt + dW)``.
"""

from __future__ import annotations

import json
import logging
import math
from collections.abc import Callable, Sequence
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Final, Literal, NamedTuple

import numpy as np
import pandas as pd
from numpy.typing import ArrayLike
from pydantic import BaseModel, ConfigDict, Field

from aumai_forwardrdu.errors import DomainError
from aumai_forwardrdu.forward_utility import (
    forward_u_prime,
    forward_u_prime_inverse,
    h_inverse,
    log_h,
    log_h_x,
)
from aumai_forwardrdu.market import (
    accumulate_risk,
    kernel_law,
    kernel_power_mean,
    refine_grid,
    sample_kernel,
    stochastic_integral,
)
from aumai_forwardrdu.models import ForwardPair, MarketCurve

logger = logging.getLogger(__name__)

DEFAULT_BLOCK_SIZE: Final[int] = 4096
_LOG_MAX: Final[float] = math.log(np.finfo(float).max)

Scheme = Literal["closed_form", "euler"]


class PolicyState(NamedTuple):
    """State handed to a strategy map at a grid time (arrays are per path)."""

    t: float
    wealth: np.ndarray
    brownian: np.ndarray
    lambda_integral: np.ndarray
    cumulated_risk: float


Policy = Callable[[float, PolicyState], np.ndarray]


class PathSet(BaseModel):
    """Simulated paths recorded on ``times``.

    Arrays are indexed ``[path, time]`` (and ``[path, time, asset]`` for the
    Brownian motion and the strategy).
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    times: np.ndarray
    brownian: np.ndarray
    rho: np.ndarray
    wealth: np.ndarray
    strategy: np.ndarray
    flagged: np.ndarray = Field(description="Paths that overflowed or were absorbed")
    seed: int
    scheme: str
    initial_wealth: float

    @property
    def n_paths(self) -> int:
        """Number of simulated paths."""
        return int(self.wealth.shape[0])

    @property
    def n_assets(self) -> int:
        """Number of Brownian factors."""
        return int(self.brownian.shape[2])

    @property
    def flagged_count(self) -> int:
        """Number of flagged paths."""
        return int(np.sum(self.flagged))


def _freeze(*arrays: np.ndarray) -> None:
    for array in arrays:
        array.setflags(write=False)


def _blocks(n_paths: int, block_size: int) -> list[tuple[int, int]]:
    if n_paths <= 0:
        raise DomainError("n_paths must be positive")
    if block_size <= 0:
        raise DomainError("block_size must be positive")
    starts = range(0, n_paths, block_size)
    return [(start, min(block_size, n_paths - start)) for start in starts]


def block_normals(
    seed: int, block: int, n_paths: int, n_steps: int, n_assets: int
) -> np.ndarray:
    """Standard normals of one block, shape ``(n_paths, n_steps, n_assets)``."""
    sequence = np.random.SeedSequence(seed, spawn_key=(block,))
    rng = np.random.Generator(np.random.Philox(sequence))
    return rng.standard_normal((n_paths, n_steps, n_assets))


def _prepare_grid(market: MarketCurve, t_grid: ArrayLike) -> np.ndarray:
    grid = np.asarray(t_grid, dtype=float)
    if grid.size < 2 or grid[0] != 0.0 or np.any(np.diff(grid) <= 0.0):
        raise DomainError("time grids must start at 0 and increase strictly")
    return refine_grid(market, grid)


def _record_indices(n_times: int, record_every: int) -> np.ndarray:
    if record_every <= 0:
        raise DomainError("record_every must be positive")
    indices = np.arange(0, n_times, record_every)
    if indices[-1] != n_times - 1:
        indices = np.append(indices, n_times - 1)
    return indices


def _cumulated_risk(market: MarketCurve, grid: np.ndarray) -> np.ndarray:
    return np.array([accumulate_risk(market, 0.0, float(t)) for t in grid])


def _directions(market: MarketCurve, grid: np.ndarray) -> np.ndarray:
    """``sigma^{-1} lambda`` at each grid time, shape ``(len(grid), N)``."""
    return np.stack([market.segment_at(float(t)).strategy_direction() for t in grid])


def _run_blocks(
    worker: Callable[[int, int, int], tuple[np.ndarray, ...]],
    n_paths: int,
    block_size: int,
    threads: int,
) -> list[tuple[np.ndarray, ...]]:
    blocks = _blocks(n_paths, block_size)
    logger.debug("scheduling %d blocks on %d threads", len(blocks), threads)
    if threads <= 1:
        return [worker(index, *block) for index, block in enumerate(blocks)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        futures = [
            pool.submit(worker, index, *block) for index, block in enumerate(blocks)
        ]
        return [future.result() for future in futures]


def _optimal_block(
    pair: ForwardPair,
    x0: float,
    grid: np.ndarray,
    normals: np.ndarray,
    record: np.ndarray,
) -> tuple[np.ndarray, ...]:
    market = pair.market
    dt = np.diff(grid)
    increments = normals * np.sqrt(dt)[None, :, None]
    lam_int = stochastic_integral(market, grid, increments)
    risk = _cumulated_risk(market, grid)
    n = normals.shape[0]
    brownian = np.zeros((n, grid.size, normals.shape[2]))
    brownian[:, 1:, :] = np.cumsum(increments, axis=1)
    rho = np.exp(-0.5 * risk[None, :] - lam_int)
    directions = _directions(market, grid)
    if pair.degenerate:
        wealth = np.full((n, grid.size), x0)
        strategy = np.zeros((n, grid.size, normals.shape[2]))
        flagged = np.zeros(n, dtype=bool)
    else:
        gamma = pair.gamma
        start = float(h_inverse(pair.mixture, x0, 0.0))
        z = start + gamma * risk[None, :] + gamma * lam_int
        tau = gamma * gamma * risk
        log_wealth = np.empty_like(z)
        log_slope = np.empty_like(z)
        for k in range(grid.size):
            log_wealth[:, k] = log_h(pair.mixture, z[:, k], float(tau[k]))
            log_slope[:, k] = log_h_x(pair.mixture, z[:, k], float(tau[k]))
        with np.errstate(over="ignore"):
            wealth = np.exp(log_wealth)
            strategy = gamma * np.exp(log_slope)[:, :, None] * directions[None, :, :]
        overflow = (log_wealth > _LOG_MAX) | (log_slope > _LOG_MAX)
        flagged = np.any(overflow, axis=1)
    return (
        brownian[:, record],
        rho[:, record],
        wealth[:, record],
        strategy[:, record],
        flagged,
    )


def _assemble(
    parts: Sequence[tuple[np.ndarray, ...]],
    times: np.ndarray,
    seed: int,
    scheme: Scheme,
    x0: float,
) -> PathSet:
    brownian, rho, wealth, strategy, flagged = (
        np.concatenate([part[i] for part in parts]) for i in range(5)
    )
    _freeze(times, brownian, rho, wealth, strategy, flagged)
    if np.any(flagged):
        logger.warning(
            "%s simulation: %d of %d paths flagged",
            scheme,
            int(flagged.sum()),
            flagged.size,
        )
    return PathSet(
        times=times,
        brownian=brownian,
        rho=rho,
        wealth=wealth,
        strategy=strategy,
        flagged=flagged,
        seed=seed,
        scheme=scheme,
        initial_wealth=x0,
    )


def simulate_optimal(
    pair: ForwardPair,
    x0: float,
    t_grid: ArrayLike,
    n_paths: int,
    seed: int,
    threads: int = 1,
    block_size: int = DEFAULT_BLOCK_SIZE,
    record_every: int = 1,
) -> PathSet:
    """Evaluate the closed-form optimal wealth and strategy on simulated paths.

    ``X*_t = h(h^{-1}(x, 0) + gamma A_t + gamma int lambda dW, gamma^2 A_t)``
    and ``pi*_t = gamma sigma^{-1} lambda_t h_x(...)``; ``gamma = 0`` gives
    ``X* = x`` and ``pi* = 0``.  Paths whose wealth or strategy overflows are
    flagged.

    Raises:
        DomainError: If ``x0 <= 0`` or the grid is invalid.
    """
    if x0 <= 0.0:
        raise DomainError("initial wealth must be positive")
    grid = _prepare_grid(pair.market, t_grid)
    record = _record_indices(grid.size, record_every)
    n_assets = pair.market.n_assets

    def worker(block: int, start: int, count: int) -> tuple[np.ndarray, ...]:
        normals = block_normals(seed, block, count, grid.size - 1, n_assets)
        return _optimal_block(pair, x0, grid, normals, record)

    parts = _run_blocks(worker, n_paths, block_size, threads)
    logger.info("simulate_optimal: %d paths on %d grid times", n_paths, grid.size)
    return _assemble(parts, grid[record].copy(), seed, "closed_form", x0)


def _euler_block(
    policy: Policy,
    market: MarketCurve,
    x0: float,
    grid: np.ndarray,
    increments: np.ndarray,
    record: np.ndarray,
) -> tuple[np.ndarray, ...]:
    n, n_steps, n_assets = increments.shape
    dt = np.diff(grid)
    wealth = np.full(n, x0)
    brownian = np.zeros((n, n_assets))
    lam_int = np.zeros(n)
    risk = 0.0
    absorbed = np.zeros(n, dtype=bool)
    slots = {int(index): slot for slot, index in enumerate(record)}
    out_w = np.empty((n, record.size, n_assets))
    out_rho = np.empty((n, record.size))
    out_x = np.empty((n, record.size))
    out_pi = np.empty((n, record.size, n_assets))

    for k in range(n_steps + 1):
        t = float(grid[k])
        state = PolicyState(t, wealth, brownian, lam_int, risk)
        pi = np.array(np.broadcast_to(policy(t, state), (n, n_assets)), dtype=float)
        pi[absorbed] = 0.0
        if k in slots:
            slot = slots[k]
            out_w[:, slot] = brownian
            out_rho[:, slot] = np.exp(-0.5 * risk - lam_int)
            out_x[:, slot] = wealth
            out_pi[:, slot] = pi
        if k == n_steps:
            break
        segment = market.segment_at(t)
        lam = segment.lambda_array()
        exposure = pi @ segment.sigma_array().T
        d_w = increments[:, k, :]
        wealth = wealth + exposure @ lam * dt[k] + np.sum(exposure * d_w, axis=1)
        hit = (wealth <= 0.0) & ~absorbed
        if np.any(hit):
            absorbed |= hit
        wealth = np.where(absorbed, 0.0, wealth)
        brownian = brownian + d_w
        lam_int = lam_int + d_w @ lam
        risk += float(lam @ lam) * dt[k]
    return out_w, out_rho, out_x, out_pi, absorbed


def euler_wealth(
    policy: Policy,
    market: MarketCurve,
    x0: float,
    t_grid: ArrayLike,
    n_paths: int,
    seed: int,
    threads: int = 1,
    block_size: int = DEFAULT_BLOCK_SIZE,
    record_every: int = 1,
) -> PathSet:
    """Euler-Maruyama evolution of the wealth under *policy*.

    Uses the same block increments as :func:`simulate_optimal` for the same
    seed, grid and block size.  Paths reaching zero wealth are absorbed at 0
    and flagged.
    """
    if x0 <= 0.0:
        raise DomainError("initial wealth must be positive")
    grid = _prepare_grid(market, t_grid)
    record = _record_indices(grid.size, record_every)
    sqrt_dt = np.sqrt(np.diff(grid))[None, :, None]

    def worker(block: int, start: int, count: int) -> tuple[np.ndarray, ...]:
        normals = block_normals(seed, block, count, grid.size - 1, market.n_assets)
        return _euler_block(policy, market, x0, grid, normals * sqrt_dt, record)

    parts = _run_blocks(worker, n_paths, block_size, threads)
    logger.info("euler_wealth: %d paths on %d grid times", n_paths, grid.size)
    return _assemble(parts, grid[record].copy(), seed, "euler", x0)


def zero_policy(t: float, state: PolicyState) -> np.ndarray:
    """All wealth in cash."""
    return np.zeros((state.wealth.size, state.brownian.shape[1]))


def constant_proportion_policy(market: MarketCurve, kappa: float) -> Policy:
    """``pi_t = kappa sigma_t^{-1} lambda_t X_t``."""

    def policy(t: float, state: PolicyState) -> np.ndarray:
        direction = market.segment_at(t).strategy_direction()
        return kappa * state.wealth[:, None] * direction[None, :]

    return policy


def replay_policy(pair: ForwardPair, x0: float) -> Policy:
    """The optimal strategy as a function of the Brownian state of the path."""
    market, gamma = pair.market, pair.gamma
    z0 = float(h_inverse(pair.mixture, x0, 0.0)) if gamma > 0.0 else 0.0

    def policy(t: float, state: PolicyState) -> np.ndarray:
        direction = market.segment_at(t).strategy_direction()
        if gamma == 0.0:
            return np.zeros((state.wealth.size, direction.size))
        risk = state.cumulated_risk
        z = z0 + gamma * risk + gamma * state.lambda_integral
        slope = np.exp(np.asarray(log_h_x(pair.mixture, z, gamma * gamma * risk)))
        return gamma * slope[:, None] * direction[None, :]

    return policy


def _closed_form_terminal(
    pair: ForwardPair, x0: float, lam_int: np.ndarray
) -> np.ndarray:
    gamma = pair.gamma
    horizon = pair.market.horizon
    if gamma == 0.0:
        return np.full(lam_int.shape, x0)
    risk = accumulate_risk(pair.market, 0.0, horizon)
    z = float(h_inverse(pair.mixture, x0, 0.0)) + gamma * risk + gamma * lam_int
    return np.exp(np.asarray(log_h(pair.mixture, z, gamma * gamma * risk)))


def strong_error_sweep(
    pair: ForwardPair,
    x0: float,
    n_paths: int,
    seed: int,
    levels: Sequence[int] = (6, 7, 8, 9, 10, 11, 12),
    block_size: int = 512,
) -> pd.DataFrame:
    """RMS gap between the Euler replay of ``pi*`` and the closed-form ``X*_T``.

    The market must have a single segment on ``[0, T]``.  Each level ``L``
    uses ``2**L`` steps; coarse increments are sums of the finest ones, so all
    levels share one Brownian path per draw.

    Returns:
        Frame with columns ``dt`` and ``rms_error``, finest step last.
    """
    market = pair.market
    horizon = market.horizon
    finest = max(levels)
    n_fine = 2**finest
    policy = replay_policy(pair, x0)
    sums = dict.fromkeys(levels, 0.0)
    if len(market.segments) != 1:
        raise DomainError("strong_error_sweep needs a single-segment market")
    lam = market.segments[0].lambda_array()
    for index, (_, count) in enumerate(_blocks(n_paths, block_size)):
        normals = block_normals(seed, index, count, n_fine, market.n_assets)
        fine = normals * math.sqrt(horizon / n_fine)
        exact = _closed_form_terminal(pair, x0, fine.sum(axis=1) @ lam)
        for level in levels:
            group = 2 ** (finest - level)
            coarse = fine.reshape(count, 2**level, group, market.n_assets).sum(axis=2)
            grid = np.linspace(0.0, horizon, 2**level + 1)
            record = np.array([grid.size - 1])
            _, _, x_out, _, _ = _euler_block(policy, market, x0, grid, coarse, record)
            sums[level] += float(np.sum((x_out[:, 0] - exact) ** 2))
    frame = pd.DataFrame(
        {
            "dt": [horizon / 2**level for level in sorted(levels)],
            "rms_error": [math.sqrt(sums[level] / n_paths) for level in sorted(levels)],
        }
    )
    logger.info("strong_error_sweep: slope %.3f", convergence_slope(frame))
    return frame


def convergence_slope(frame: pd.DataFrame) -> float:
    """Least-squares slope of ``log rms_error`` against ``log dt``."""
    slope, _ = np.polyfit(np.log(frame["dt"]), np.log(frame["rms_error"]), 1)
    return float(slope)


def budget_summary(paths: PathSet) -> pd.DataFrame:
    """Per-time mean and standard error of ``rho_t X_t`` over unflagged paths."""
    keep = ~paths.flagged
    products = paths.rho[keep] * paths.wealth[keep]
    count = products.shape[0]
    return pd.DataFrame(
        {
            "t": paths.times,
            "mean": products.mean(axis=0),
            "se": products.std(axis=0, ddof=1) / math.sqrt(count),
        }
    )


def conditional_resample(
    pair: ForwardPair, s: float, wealth_s: float, t: float, n_paths: int, seed: int
) -> np.ndarray:
    """Draw ``X*_t`` given ``X*_s = wealth_s``.

    ``X*_t = (u'_t)^{-1}(u'_s(X*_s) E[rho^(1-gamma)] rho^gamma)`` with
    ``rho ~ rho_{s,t}``.

    Raises:
        DomainError: If ``s >= t`` or ``wealth_s <= 0``.
    """
    if not 0.0 <= s < t:
        raise DomainError("conditional resampling needs 0 <= s < t")
    if wealth_s <= 0.0:
        raise DomainError("wealth must be positive")
    law = kernel_law(pair.market, s, t)
    if pair.degenerate or law.degenerate:
        return np.full(n_paths, wealth_s)
    gamma = pair.gamma
    rho = sample_kernel(law, n_paths, seed)
    scale = kernel_power_mean(law, 1.0 - gamma)
    marginal = float(forward_u_prime(pair, s, wealth_s)) * scale
    return np.asarray(forward_u_prime_inverse(pair, t, marginal * np.power(rho, gamma)))


def to_frame(paths: PathSet) -> pd.DataFrame:
    """Long-format table with one row per (path, recorded time)."""
    n, n_times = paths.wealth.shape
    frame = pd.DataFrame(
        {
            "path_id": np.repeat(np.arange(n), n_times),
            "t": np.tile(paths.times, n),
        }
    )
    if paths.n_assets == 1:
        frame["W"] = paths.brownian[:, :, 0].ravel()
    else:
        for j in range(paths.n_assets):
            frame[f"W_{j + 1}"] = paths.brownian[:, :, j].ravel()
    frame["rho"] = paths.rho.ravel()
    frame["X_star"] = paths.wealth.ravel()
    for j in range(paths.n_assets):
        frame[f"pi_star_{j + 1}"] = paths.strategy[:, :, j].ravel()
    return frame


def write_csv(paths: PathSet, target: Path) -> Path:
    """Write the path table to *target* with round-trip float formatting."""
    to_frame(paths).to_csv(target, index=False, float_format="%.17g")
    logger.info("wrote %s", target)
    return target


def write_summary(paths: PathSet, target: Path) -> Path:
    """Write the per-time budget identity statistics as JSON."""
    summary = budget_summary(paths)
    payload = {
        "seed": paths.seed,
        "scheme": paths.scheme,
        "n_paths": paths.n_paths,
        "flagged": paths.flagged_count,
        "initial_wealth": paths.initial_wealth,
        "budget": summary.to_dict(orient="records"),
    }
    target.write_text(json.dumps(payload, indent=2), encoding="utf-8")
    logger.info("wrote %s", target)
    return target


__all__ = [
    "DEFAULT_BLOCK_SIZE",
    "PolicyState",
    "Policy",
    "PathSet",
    "block_normals",
    "simulate_optimal",
    "euler_wealth",
    "zero_policy",
    "constant_proportion_policy",
    "replay_policy",
    "strong_error_sweep",
    "convergence_slope",
    "budget_summary",
    "conditional_resample",
    "to_frame",
    "write_csv",
    "write_summary",
]
