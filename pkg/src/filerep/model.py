"""Core model types: rates, scaling, states, load regimes and the domain S.

The network stores files on N servers with a shared capacity of F_N slots.
A file holds one or two copies; ``x1``/``x2`` count files per copy number and
``m = F_N - x1 - 2*x2`` is the number of free slots.  All per-server rates
(duplication ``lam``, admission ``xi``) scale linearly with N while the
per-copy failure rate ``mu`` does not.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

from .errors import CapacityError, ParameterError


class _InfiniteType:
    """Singleton marker for an unbounded capacity (F_N = infinity)."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "INFINITE"

    def __copy__(self):
        return self

    def __deepcopy__(self, memo):
        return self


#: Marker used wherever a capacity or free-slot count may be unbounded.
INFINITE = _InfiniteType()


def is_infinite(value) -> bool:
    """True if ``value`` is the INFINITE capacity marker."""
    return value is INFINITE


class Regime(Enum):
    """Position of the demand level rho relative to the capacity beta_bar."""

    UNDER_LOADED = "under-loaded"
    CRITICAL = "critical"
    OVER_LOADED = "over-loaded"


@dataclass(frozen=True)
class ModelParams:
    """Per-server rates and average capacity.

    Attributes
    ----------
    lam : float
        Duplication rate per server (scales as ``lam * N``).
    xi : float
        Admission rate per server (scales as ``xi * N``).
    mu : float
        Failure rate per stored copy.
    beta_bar : float
        Average number of storage slots per server.
    """

    lam: float
    xi: float
    mu: float
    beta_bar: float

    def __post_init__(self):
        for name in ("lam", "xi", "mu", "beta_bar"):
            value = getattr(self, name)
            if not (isinstance(value, (int, float)) and math.isfinite(value) and value > 0):
                raise ParameterError(f"{name} must be a finite positive number, got {value!r}")


@dataclass(frozen=True)
class ScaledParams:
    """System size N and total capacity F_N (a positive integer or INFINITE)."""

    n: int
    f_n: int | _InfiniteType

    def __post_init__(self):
        if not isinstance(self.n, int) or self.n < 1:
            raise ParameterError(f"n must be a positive integer, got {self.n!r}")
        if self.f_n is not INFINITE:
            if not isinstance(self.f_n, int) or self.f_n < 2:
                # With fewer than 2 slots no admission is ever enabled from
                # an empty network, so the chain would be degenerate.
                raise ParameterError(f"f_n must be an integer >= 2 or INFINITE, got {self.f_n!r}")

    @classmethod
    def from_model(cls, params: ModelParams, n: int) -> "ScaledParams":
        """Default capacity: round-half-to-even of ``beta_bar * n``."""
        return cls(n=n, f_n=round(params.beta_bar * n))

    @property
    def finite(self) -> bool:
        return self.f_n is not INFINITE


@dataclass(frozen=True)
class SystemState:
    """Integer counts of files with one copy, two copies, and lost files."""

    x1: int
    x2: int
    x0: int = 0

    def __post_init__(self):
        for name in ("x1", "x2", "x0"):
            value = getattr(self, name)
            if not isinstance(value, int) or value < 0:
                raise ParameterError(f"{name} must be a non-negative integer, got {value!r}")

    def check_capacity(self, scaled: ScaledParams) -> None:
        """Raise CapacityError unless the state fits in ``scaled.f_n`` slots."""
        free_capacity(self, scaled)


def rho(params: ModelParams) -> float:
    """Demand level (lam + 2*xi) / mu, the load each server must absorb."""
    return (params.lam + 2.0 * params.xi) / params.mu


def classify_regime(params: ModelParams, tol: float = 0.0) -> Regime:
    """Compare rho to beta_bar; |rho - beta_bar| <= tol counts as critical."""
    if tol < 0:
        raise ParameterError(f"tol must be >= 0, got {tol!r}")
    gap = rho(params) - params.beta_bar
    if abs(gap) <= tol:
        return Regime.CRITICAL
    return Regime.OVER_LOADED if gap > 0 else Regime.UNDER_LOADED


def equilibrium_point(params: ModelParams) -> tuple[float, float]:
    """Fixed point (xi/mu, (lam + xi)/(2*mu)) of the unconstrained flow."""
    return (params.xi / params.mu, (params.lam + params.xi) / (2.0 * params.mu))


def free_capacity(state: SystemState, scaled: ScaledParams):
    """Free slots F_N - x1 - 2*x2, or INFINITE for unbounded capacity."""
    if scaled.f_n is INFINITE:
        return INFINITE
    m = scaled.f_n - state.x1 - 2 * state.x2
    if m < 0:
        raise CapacityError(
            f"state (x1={state.x1}, x2={state.x2}) exceeds capacity F_N={scaled.f_n}"
        )
    return m


def in_domain_S(point: tuple[float, float], beta_bar: float, tol: float = 1e-9) -> bool:
    """Membership in S = {x1 >= 0, x2 >= 0, x1 + 2*x2 <= beta_bar}.

    ``tol`` loosens every face so that floating-point boundary points count
    as inside.
    """
    x1, x2 = point
    return x1 >= -tol and x2 >= -tol and x1 + 2.0 * x2 <= beta_bar + tol
