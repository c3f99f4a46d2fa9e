"""Correlated GBM path generation with reproducible counter-based streams.

Paths are simulated in fixed chunks of :data:`CHUNK` paths.  Each chunk owns
a counter-based random stream (Philox) keyed by ``seed * 2**64 + chunk``,
and draws inside a chunk are consumed step-major: at each step the chunk
generates a full (CHUNK, d) block of uniforms, maps them through the normal
inverse CDF (one uniform per normal, keeping the counter aligned), and
correlates them with the regime's factor.  The tail chunk still generates a
full block and slices, so the draw behind path i never depends on the total
path count.  Together these make every output a pure function of
(seed, n_paths, model) no matter how chunks are scheduled across workers.

Prices evolve in log space; exponentials happen only where prices are
reported.  A sampled value exactly on a barrier counts as a hit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtri

from .bridge import _xi_from_logs
from .model import MarketModel, Regime

__all__ = [
    "CHUNK",
    "NormalDraw",
    "PathState",
    "PathBatch",
    "step",
    "simulate_path",
    "path_batches",
]

# Paths per random stream.  Part of the reproducibility contract: changing it
# changes which draw lands on which path.
CHUNK = 32768

# Correlated standard-normal draws for one step, shape (..., d).
NormalDraw = np.ndarray

# Generator.random can return exactly 0.0, where the inverse CDF diverges;
# half an ulp below the smallest positive draw is statistically invisible.
_U_FLOOR = 2.0**-54


@dataclass(frozen=True)
class PathState:
    """One simulated trajectory at the sampling dates.

    ``values`` holds prices of shape (M+1, d); ``alive_discrete`` is the
    discretely monitored no-hit indicator (every sampled vector strictly
    inside its dates' barriers, boundary counting as a hit).
    """

    values: np.ndarray
    alive_discrete: bool
    path_index: int


@dataclass(frozen=True)
class PathBatch:
    """Batch outputs of the path engine for one chunk of paths.

    The batch analog of PathState, keeping only what estimators need:
    terminal prices, the discrete no-hit indicator, and the accumulated
    per-path no-hit weight under each bound.  ``w_exact`` is present only
    when every interval has at most one active barrier event.
    """

    first: int
    terminal: np.ndarray
    alive: np.ndarray
    w_lower: np.ndarray
    w_indep: np.ndarray
    w_upper: np.ndarray
    w_exact: np.ndarray | None


def step(prev: np.ndarray, regime: Regime, dt: float, z: NormalDraw) -> np.ndarray:
    """One simulation step: S * exp[(mu - sigma^2/2) dt + sigma sqrt(dt) z].

    ``z`` carries already-correlated standard normals; shapes broadcast, so
    ``prev`` and ``z`` may be (d,) vectors or (n, d) batches.
    """
    prev = np.asarray(prev, dtype=float)
    z = np.asarray(z, dtype=float)
    growth = (regime.mu - 0.5 * regime.sigma**2) * dt + regime.sigma * math.sqrt(dt) * z
    return prev * np.exp(growth)


def _stream(seed: int, chunk_index: int) -> np.random.Generator:
    """The counter-based generator owning the draws of one chunk."""
    if not 0 <= seed < 2**64:
        raise ValueError(f"seed must be in [0, 2**64), got {seed}")
    return np.random.Generator(np.random.Philox(key=(seed << 64) + chunk_index))


def _normal_block(gen: np.random.Generator, d: int) -> np.ndarray:
    u = gen.random((CHUNK, d))
    np.fmax(u, _U_FLOOR, out=u)
    return ndtri(u)


@dataclass(frozen=True)
class _EventKernel:
    asset: int
    lower: bool
    log_level: float
    variance: float  # sigma_k^2 * dt


@dataclass(frozen=True)
class _StepKernel:
    drift: np.ndarray  # (d,) (mu - sigma^2/2) dt
    vol: np.ndarray  # (d,) sigma sqrt(dt)
    factor: np.ndarray
    events: tuple[_EventKernel, ...]


@dataclass(frozen=True)
class _EnginePlan:
    d: int
    log_spot: np.ndarray
    steps: tuple[_StepKernel, ...]
    exact: bool  # every interval has at most one event


def _plan(model: MarketModel) -> _EnginePlan:
    steps = []
    exact = True
    for m, regime in enumerate(model.regimes):
        dt = model.grid.dt(m)
        events = []
        for k, side, level in regime.events():
            if side == "lower" and level == 0.0:
                continue  # a zero lower barrier is never hit by positive prices
            events.append(
                _EventKernel(
                    asset=k,
                    lower=(side == "lower"),
                    log_level=math.log(level),
                    variance=float(regime.sigma[k]) ** 2 * dt,
                )
            )
        exact = exact and len(events) <= 1
        steps.append(
            _StepKernel(
                drift=(regime.mu - 0.5 * regime.sigma**2) * dt,
                vol=regime.sigma * math.sqrt(dt),
                factor=model.regime_factor(m),
                events=tuple(events),
            )
        )
    return _EnginePlan(
        d=model.d, log_spot=np.log(model.spot), steps=tuple(steps), exact=exact
    )


def _apply_event_alive(alive: np.ndarray, x0: np.ndarray, x1: np.ndarray, ev: _EventKernel) -> None:
    # Both endpoints of the interval must sit strictly inside the barrier.
    if ev.lower:
        alive &= (x0[:, ev.asset] > ev.log_level) & (x1[:, ev.asset] > ev.log_level)
    else:
        alive &= (x0[:, ev.asset] < ev.log_level) & (x1[:, ev.asset] < ev.log_level)


def _compute_batch(plan: _EnginePlan, seed: int, chunk_index: int, rows: int) -> PathBatch:
    """Simulate one full chunk and keep the first ``rows`` paths."""
    gen = _stream(seed, chunk_index)
    d = plan.d
    x0 = np.broadcast_to(plan.log_spot, (CHUNK, d)).copy()
    w_lower = np.ones(CHUNK)
    w_indep = np.ones(CHUNK)
    w_upper = np.ones(CHUNK)
    alive = np.ones(CHUNK, dtype=bool)

    for kernel in plan.steps:
        z = _normal_block(gen, d)
        x1 = x0 + kernel.drift + kernel.vol * (z @ kernel.factor.T)
        events = kernel.events
        if len(events) == 1:
            ev = events[0]
            side = "lower" if ev.lower else "upper"
            p = 1.0 - _xi_from_logs(
                x0[:, ev.asset], x1[:, ev.asset], ev.log_level, ev.variance, side
            )
            w_lower *= p
            w_indep *= p
            w_upper *= p
            _apply_event_alive(alive, x0, x1, ev)
        elif events:
            sum_xi = np.zeros(CHUNK)
            prod = np.ones(CHUNK)
            least = np.ones(CHUNK)
            for ev in events:
                side = "lower" if ev.lower else "upper"
                xi_vec = _xi_from_logs(
                    x0[:, ev.asset], x1[:, ev.asset], ev.log_level, ev.variance, side
                )
                sum_xi += xi_vec
                no_hit = 1.0 - xi_vec
                prod *= no_hit
                np.fmin(least, no_hit, out=least)
                _apply_event_alive(alive, x0, x1, ev)
            # Frechet chain p_lower <= p_indep <= p_upper; fmin only guards
            # last-ulp rounding inversions, the math already orders them.
            p_upper = least
            p_indep = np.fmin(prod, p_upper)
            p_lower = np.fmin(np.fmax(1.0 - sum_xi, 0.0), p_indep)
            w_lower *= p_lower
            w_indep *= p_indep
            w_upper *= p_upper
        x0 = x1

    return PathBatch(
        first=chunk_index * CHUNK,
        terminal=np.exp(x0[:rows]),
        alive=alive[:rows],
        w_lower=w_lower[:rows],
        w_indep=w_indep[:rows],
        w_upper=w_upper[:rows],
        w_exact=w_upper[:rows].copy() if plan.exact else None,
    )


def path_batches(model: MarketModel, n_paths: int, seed: int = 0):
    """Yield PathBatch chunks covering ``n_paths`` paths, in chunk order."""
    plan = _plan(model)
    for chunk_index in range(_n_chunks(n_paths)):
        rows = min(CHUNK, n_paths - chunk_index * CHUNK)
        yield _compute_batch(plan, seed, chunk_index, rows)


def _n_chunks(n_paths: int) -> int:
    return -(-n_paths // CHUNK)


def simulate_path(model: MarketModel, path_index: int, seed: int = 0) -> PathState:
    """Simulate one full trajectory, bit-identical to the batch engine's.

    The chunk containing ``path_index`` is regenerated and the path's row
    extracted, so the result never depends on worker count or on how many
    other paths a pricing run asked for.
    """
    if path_index < 0:
        raise ValueError("path_index must be >= 0")
    plan = _plan(model)
    chunk_index, row = divmod(path_index, CHUNK)
    gen = _stream(seed, chunk_index)
    d = plan.d
    n_steps = len(plan.steps)
    values = np.empty((n_steps + 1, d))
    values[0] = model.spot
    x0 = np.broadcast_to(plan.log_spot, (CHUNK, d)).copy()
    alive = np.ones(CHUNK, dtype=bool)
    for m, kernel in enumerate(plan.steps):
        z = _normal_block(gen, d)
        x1 = x0 + kernel.drift + kernel.vol * (z @ kernel.factor.T)
        for ev in kernel.events:
            _apply_event_alive(alive, x0, x1, ev)
        values[m + 1] = np.exp(x1[row])
        x0 = x1
    return PathState(values=values, alive_discrete=bool(alive[row]), path_index=path_index)
