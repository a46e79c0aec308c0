"""Exact event-driven simulation of the replication network chain.

Randomness is keyed by ``(seed, replica)`` through numpy's SeedSequence, so
replica sets are reproducible and independent of execution order.  The heavy
loop lives in :mod:`filerep.kernel`.
"""

from __future__ import annotations

import numpy as np

from . import kernel
from .errors import DomainError, ParameterError
from .model import INFINITE, ModelParams, ScaledParams, SystemState, free_capacity, is_infinite
from .paths import NOT_HIT, GridPath, OccupationQuery, Path, TransitionKind, reconstruct_states


def _rng(seed: int, replica: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence((seed, replica))))


def enabled_transitions(
    state: SystemState, params: ModelParams, scaled: ScaledParams
) -> list[tuple[TransitionKind, float]]:
    """Transitions with positive rate from ``state``, with their rates.

    Admission needs two free slots, duplication one free slot and a
    single-copy file to duplicate.
    """
    m = free_capacity(state, scaled)
    out = []
    if is_infinite(m) or m >= 2:
        out.append((TransitionKind.ADMISSION, params.xi * scaled.n))
    if state.x1 > 0 and (is_infinite(m) or m >= 1):
        out.append((TransitionKind.DUPLICATION, params.lam * scaled.n))
    if state.x2 > 0:
        out.append((TransitionKind.DOUBLE_LOSS, 2.0 * params.mu * state.x2))
    if state.x1 > 0:
        out.append((TransitionKind.SINGLE_LOSS, params.mu * state.x1))
    return out


def simulate_path(
    params: ModelParams,
    scaled: ScaledParams,
    init: SystemState,
    horizon: float,
    seed: int,
    replica: int = 0,
    stop_m_le: int | None = None,
) -> Path:
    """Sample one path of the chain on [0, horizon].

    The sample is statistically exact (exponential total clock plus
    categorical pick) and deterministic given ``(seed, replica)``.  With
    ``stop_m_le`` set, the run stops at the first event bringing the free
    capacity to or below that level.  If every transition is disabled the
    path freezes at the current state and ``frozen`` is flagged.
    """
    if horizon <= 0:
        raise DomainError(f"horizon must be > 0, got {horizon}")
    init.check_capacity(scaled)
    f_n = scaled.f_n if scaled.finite else -1
    if stop_m_le is not None and not scaled.finite:
        raise DomainError("stop_m_le requires finite capacity")
    times, kinds, _final, frozen, stopped_at = kernel.run_events(
        params.lam * scaled.n,
        params.xi * scaled.n,
        params.mu,
        f_n,
        init.x0,
        init.x1,
        init.x2,
        horizon,
        _rng(seed, replica),
        -1 if stop_m_le is None else stop_m_le,
    )
    x0, x1, x2 = reconstruct_states(init, kinds)
    return Path(
        scaled=scaled,
        init=init,
        horizon=horizon,
        times=times,
        kinds=kinds,
        x0=x0,
        x1=x1,
        x2=x2,
        frozen=frozen,
        stopped_at=None if stopped_at < 0 else float(stopped_at),
    )


def simulate_grid(
    params: ModelParams,
    scaled: ScaledParams,
    init: SystemState,
    horizon: float,
    seed: int,
    grid_dt: float,
    replica: int = 0,
) -> GridPath:
    """Sample one path, recording only states on the grid i*grid_dt."""
    if horizon <= 0:
        raise DomainError(f"horizon must be > 0, got {horizon}")
    if grid_dt <= 0:
        raise DomainError(f"grid_dt must be > 0, got {grid_dt}")
    init.check_capacity(scaled)
    n_grid = int(round(horizon / grid_dt))
    if abs(n_grid * grid_dt - horizon) > 1e-9 * max(1.0, horizon):
        raise DomainError(f"horizon {horizon} is not a multiple of grid_dt {grid_dt}")
    f_n = scaled.f_n if scaled.finite else -1
    gx0, gx1, gx2, n_events, _final, frozen = kernel.run_grid(
        params.lam * scaled.n,
        params.xi * scaled.n,
        params.mu,
        f_n,
        init.x0,
        init.x1,
        init.x2,
        horizon,
        _rng(seed, replica),
        n_grid,
        grid_dt,
    )
    return GridPath(
        scaled=scaled,
        init=init,
        horizon=horizon,
        grid_dt=grid_dt,
        x0=gx0,
        x1=gx1,
        x2=gx2,
        n_events=int(n_events),
        frozen=frozen,
    )


def simulate_replicas(
    params: ModelParams,
    scaled: ScaledParams,
    init: SystemState,
    horizon: float,
    seed: int,
    replicas: int,
    stop_m_le: int | None = None,
):
    """Yield ``replicas`` independent paths keyed by (seed, 0..replicas-1)."""
    if replicas < 1:
        raise ParameterError(f"replicas must be >= 1, got {replicas}")
    for r in range(replicas):
        yield simulate_path(params, scaled, init, horizon, seed, replica=r, stop_m_le=stop_m_le)


def scaled_state(path: Path, t: float, n: int | None = None) -> tuple[float, float]:
    """(x1(t)/N, x2(t)/N); N defaults to the path's own system size."""
    if n is None or n == path.scaled.n:
        return path.scaled_state(t)
    s = path.state_at(t)
    return (s.x1 / n, s.x2 / n)


def hitting_time_T1(path: Path):
    """First time the free capacity enters {0, 1} (NOT_HIT if never)."""
    return path.hitting_time_T1()


def occupation_measure(path: Path, query: OccupationQuery) -> float:
    """Time spent with free capacity in ``query.gamma`` before ``query.t``."""
    return path.occupation_measure(query)


def windowed_m_histogram(path: Path, t_lo: float, t_hi: float, n_max: int):
    """Time-fraction histogram of the free capacity over a window."""
    return path.windowed_m_histogram(t_lo, t_hi, n_max)


def initial_state_from_scaled(x1_scaled: float, x2_scaled: float, n: int) -> SystemState:
    """Integer state closest to (x1_scaled*N, x2_scaled*N)."""
    return SystemState(x1=round(x1_scaled * n), x2=round(x2_scaled * n))
