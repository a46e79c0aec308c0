"""Trajectory containers and path post-processing.

A :class:`Path` is the full event log of one run: strictly increasing event
times, the transition kind of each event, and the integer state after it.
A :class:`GridPath` keeps only snapshots on a fixed time grid, for long runs
where the event log would not fit comfortably in memory.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from enum import IntEnum

import numpy as np

from .errors import DomainError, ParameterError
from .model import INFINITE, ScaledParams, SystemState, is_infinite


class TransitionKind(IntEnum):
    """The four transitions of the network chain (values match the kernels)."""

    ADMISSION = 0
    DUPLICATION = 1
    DOUBLE_LOSS = 2
    SINGLE_LOSS = 3


#: State deltas (dx1, dx2, dx0) indexed by TransitionKind value.
DELTAS = {
    TransitionKind.ADMISSION: (0, 1, 0),
    TransitionKind.DUPLICATION: (-1, 1, 0),
    TransitionKind.DOUBLE_LOSS: (1, -1, 0),
    TransitionKind.SINGLE_LOSS: (-1, 0, 1),
}

_KIND_NAMES = {
    TransitionKind.ADMISSION: "admission",
    TransitionKind.DUPLICATION: "duplication",
    TransitionKind.DOUBLE_LOSS: "double_loss",
    TransitionKind.SINGLE_LOSS: "single_loss",
}

_DX1 = np.array([0, -1, 1, -1], dtype=np.int64)
_DX2 = np.array([1, 1, -1, 0], dtype=np.int64)
_DX0 = np.array([0, 0, 0, 1], dtype=np.int64)


class _NotHitType:
    """Singleton returned by hitting-time queries that found no hit."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "NOT_HIT"


NOT_HIT = _NotHitType()


@dataclass(frozen=True)
class OccupationQuery:
    """Time budget question: how long was the free capacity inside ``gamma``?"""

    t: float
    gamma: frozenset

    def __post_init__(self):
        if self.t < 0:
            raise DomainError(f"query time must be >= 0, got {self.t}")
        object.__setattr__(self, "gamma", frozenset(self.gamma))
        for value in self.gamma:
            if not isinstance(value, (int, np.integer)) or value < 0:
                raise DomainError(f"gamma must contain non-negative integers, got {value!r}")


@dataclass
class Path:
    """Event log of one run of the network chain on [0, horizon].

    ``times``/``kinds`` hold one entry per event; ``x0``/``x1``/``x2`` hold
    the state just after each event.  The state on [0, times[0]) is ``init``;
    the path is right-continuous at event times.
    """

    scaled: ScaledParams
    init: SystemState
    horizon: float
    times: np.ndarray
    kinds: np.ndarray
    x0: np.ndarray
    x1: np.ndarray
    x2: np.ndarray
    frozen: bool = False
    stopped_at: float | None = None

    @property
    def n_events(self) -> int:
        return len(self.times)

    def m_values(self) -> np.ndarray:
        """Free capacity after each event (finite capacity only)."""
        if not self.scaled.finite:
            raise DomainError("free capacity is unbounded when F_N is INFINITE")
        return self.scaled.f_n - self.x1 - 2 * self.x2

    def m_init(self) -> int:
        if not self.scaled.finite:
            raise DomainError("free capacity is unbounded when F_N is INFINITE")
        return self.scaled.f_n - self.init.x1 - 2 * self.init.x2

    def _index_at(self, t: float) -> int:
        """Number of events with time <= t (right-continuous convention)."""
        if t < 0 or t > self.horizon:
            raise DomainError(f"t={t} outside [0, {self.horizon}]")
        return int(np.searchsorted(self.times, t, side="right"))

    def state_at(self, t: float) -> SystemState:
        k = self._index_at(t)
        if k == 0:
            return self.init
        return SystemState(x1=int(self.x1[k - 1]), x2=int(self.x2[k - 1]), x0=int(self.x0[k - 1]))

    def scaled_state(self, t: float) -> tuple[float, float]:
        """(x1(t)/N, x2(t)/N) from the piecewise-constant path."""
        s = self.state_at(t)
        n = self.scaled.n
        return (s.x1 / n, s.x2 / n)

    def hitting_time_T1(self):
        """First time the free capacity enters {0, 1}; NOT_HIT if never.

        A path starting saturated (m(0) <= 1) reports 0.0.
        """
        if not self.scaled.finite:
            raise DomainError("hitting time of {0,1} is undefined for infinite capacity")
        if self.m_init() <= 1:
            return 0.0
        if self.stopped_at is not None:
            return self.stopped_at
        hits = np.nonzero(self.m_values() <= 1)[0]
        if len(hits) == 0:
            return NOT_HIT
        return float(self.times[hits[0]])

    def _piecewise(self, t_hi: float):
        """Segment times/durations/m-values covering [0, t_hi]."""
        k = self._index_at(t_hi)
        starts = np.concatenate(([0.0], self.times[:k]))
        ends = np.concatenate((self.times[:k], [t_hi]))
        m = np.concatenate(([self.m_init()], self.m_values()[:k]))
        return np.maximum(ends - starts, 0.0), m

    def occupation_measure(self, query: OccupationQuery) -> float:
        """Lebesgue time with m in ``query.gamma`` over [0, query.t]."""
        durations, m = self._piecewise(query.t)
        if not query.gamma:
            return 0.0
        mask = np.isin(m, np.fromiter(query.gamma, dtype=np.int64))
        return float(durations[mask].sum())

    def windowed_m_histogram(self, t_lo: float, t_hi: float, n_max: int):
        """Time-fraction histogram of m over [t_lo, t_hi].

        Returns ``(probs, overflow)`` where ``probs[j]`` is the fraction of
        the window spent at m == j for j <= n_max and ``overflow`` the
        fraction spent above n_max.  Fractions sum to 1.
        """
        if not (0 <= t_lo < t_hi <= self.horizon):
            raise DomainError(f"window [{t_lo}, {t_hi}] invalid for horizon {self.horizon}")
        k = self._index_at(t_hi)
        starts = np.concatenate(([0.0], self.times[:k]))
        ends = np.concatenate((self.times[:k], [t_hi]))
        m = np.concatenate(([self.m_init()], self.m_values()[:k]))
        clipped = np.minimum(ends, t_hi) - np.maximum(starts, t_lo)
        clipped = np.maximum(clipped, 0.0)
        width = t_hi - t_lo
        probs = np.zeros(n_max + 1)
        in_range = m <= n_max
        np.add.at(probs, m[in_range], clipped[in_range])
        overflow = float(clipped[~in_range].sum()) / width
        return probs / width, overflow

    def write_csv(self, fileobj, precision: int = 12) -> None:
        """Rows ``t,x0,x1,x2,m,kind``: the initial state then one per event."""
        writer = csv.writer(fileobj)
        writer.writerow(["t", "x0", "x1", "x2", "m", "kind"])
        fmt = f"{{:.{precision}g}}"
        m0 = self.m_init() if self.scaled.finite else "infinite"
        writer.writerow([fmt.format(0.0), self.init.x0, self.init.x1, self.init.x2, m0, "init"])
        m = self.m_values() if self.scaled.finite else None
        for i in range(self.n_events):
            writer.writerow(
                [
                    fmt.format(self.times[i]),
                    int(self.x0[i]),
                    int(self.x1[i]),
                    int(self.x2[i]),
                    int(m[i]) if m is not None else "infinite",
                    _KIND_NAMES[TransitionKind(int(self.kinds[i]))],
                ]
            )


@dataclass
class GridPath:
    """State snapshots on the uniform grid i*grid_dt, i = 0..n_grid."""

    scaled: ScaledParams
    init: SystemState
    horizon: float
    grid_dt: float
    x0: np.ndarray
    x1: np.ndarray
    x2: np.ndarray
    n_events: int = 0
    frozen: bool = False

    def __post_init__(self):
        n_grid = len(self.x1) - 1
        self.ts = self.grid_dt * np.arange(n_grid + 1)

    def m_values(self) -> np.ndarray:
        if not self.scaled.finite:
            raise DomainError("free capacity is unbounded when F_N is INFINITE")
        return self.scaled.f_n - self.x1 - 2 * self.x2

    def scaled_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        n = self.scaled.n
        return self.x1 / n, self.x2 / n

    def write_csv(self, fileobj, precision: int = 12) -> None:
        writer = csv.writer(fileobj)
        writer.writerow(["t", "x0", "x1", "x2", "m", "kind"])
        fmt = f"{{:.{precision}g}}"
        m = self.m_values() if self.scaled.finite else None
        for i in range(len(self.ts)):
            writer.writerow(
                [
                    fmt.format(self.ts[i]),
                    int(self.x0[i]),
                    int(self.x1[i]),
                    int(self.x2[i]),
                    int(m[i]) if m is not None else "infinite",
                    "grid",
                ]
            )


def reconstruct_states(init: SystemState, kinds: np.ndarray):
    """Post-event state arrays from the initial state and the kind log."""
    k = kinds.astype(np.int64)
    x1 = init.x1 + np.cumsum(_DX1[k])
    x2 = init.x2 + np.cumsum(_DX2[k])
    x0 = init.x0 + np.cumsum(_DX0[k])
    return x0, x1, x2
