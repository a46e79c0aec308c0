"""Martingale constructions and Monte Carlo drift verification.

For the infinite-capacity chain the function

    g_c(t, w) = (1 + c e^{mu t})^{w1 + 2 w2} * exp(-N phi_c(t))

is space-time harmonic, which makes ``g_c(t, X(t))`` a martingale, and its
expansion in Poisson-Charlier polynomials yields polynomial martingales of
every order; the first two are

    e^{mu t} (v.X - N rho)                                       (linear)
    e^{2 mu t} ((v.X - N rho)^2 - v.X - N xi / mu)               (quadratic)

with v = (1, 2).  Optional stopping at the saturation time T1 turns these
into closed-form expressions for E[e^{mu T1}] and E[e^{2 mu T1}].

This module implements the functions themselves, an exact-generator residual
check, a replica-based drift test with CLT error bands, and the hitting-time
moment identities.  It also evaluates the compensated martingales M1, M2 of
the finite-capacity chain along simulated paths (sup, predictable bracket
and quadratic variation), used to verify that fluctuations vanish at rate
N^{-1/2}.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DomainError, ParameterError, RegimeError, SimulationError
from .model import INFINITE, ModelParams, Regime, ScaledParams, SystemState, classify_regime, rho
from .paths import Path, TransitionKind
from .simulate import initial_state_from_scaled, simulate_path


# ---------------------------------------------------------------------------
# the harmonic family
# ---------------------------------------------------------------------------

def phi_c(params: ModelParams, c: float, t: float) -> float:
    """phi_c(t) = c e^{mu t} (rho + (c xi / 2 mu) e^{mu t}).

    N times this function is the exponent normalizing g_c.
    """
    e = math.exp(params.mu * t)
    return c * e * (rho(params) + c * params.xi / (2.0 * params.mu) * e)


def log_gc(params: ModelParams, n: int, c: float, t: float, w: tuple[int, int]) -> float:
    """log of g_c(t, w); requires 1 + c e^{mu t} > 0."""
    base = 1.0 + c * math.exp(params.mu * t)
    if base <= 0.0:
        raise DomainError(f"1 + c e^(mu t) = {base} <= 0: g_c undefined")
    vw = w[0] + 2 * w[1]
    return vw * math.log(base) - n * phi_c(params, c, t)


def harmonic_residual(
    params: ModelParams, n: int, c: float, t: float, w: tuple[int, int], h: float = 1e-6
) -> float:
    """(d/dt + Q) g_c at (t, w), normalized by g_c(t, w).

    Q is the infinite-capacity generator applied exactly (neighbour values
    enter as exact ratios of g_c, so there is no under/overflow); the time
    derivative is a Richardson-refined central difference.  Vanishes
    identically when g_c is space-time harmonic.
    """
    w1, w2 = w
    if w1 < 1 or w2 < 0:
        raise DomainError(f"w={w} outside N* x N")
    base = 1.0 + c * math.exp(params.mu * t)
    if base <= 0.0:
        raise DomainError("1 + c e^(mu t) must stay positive")
    vw = w1 + 2 * w2
    lam_n = params.lam * n
    xi_n = params.xi * n
    # Exact generator action: each transition shifts v.w by -1, +1 or +2,
    # so neighbour/center ratios are integer powers of the base.
    q_over_g = (
        lam_n * (base - 1.0)
        + xi_n * (base * base - 1.0)
        + params.mu * vw * (1.0 / base - 1.0)
    )

    log_center = log_gc(params, n, c, t, w)

    def ratio(s: float) -> float:
        return math.exp(log_gc(params, n, c, s, w) - log_center)

    def central(step: float) -> float:
        return (ratio(t + step) - ratio(t - step)) / (2.0 * step)

    dt_over_g = (4.0 * central(h / 2.0) - central(h)) / 3.0
    return dt_over_g + q_over_g


# ---------------------------------------------------------------------------
# Poisson-Charlier expansion
# ---------------------------------------------------------------------------

def poisson_charlier(n: int, a: float, z: float) -> float:
    """n-th coefficient (times n!) of e^{-a x} (1 + x)^z in powers of x.

    Computed as the finite convolution of the two series: coefficient i of
    e^{-a x} is (-a)^i / i! and coefficient j of (1 + x)^z is the falling
    factorial z (z-1) ... (z-j+1) / j!.
    """
    if n < 0:
        raise DomainError(f"n must be >= 0, got {n}")
    total = 0.0
    falling = 1.0
    for j in range(n + 1):
        # term i = n - j of the exponential series, j of the binomial series
        total += math.comb(n, n - j) * (-a) ** (n - j) * falling
        falling *= z - j
    return total


def psi_coefficient(n: int, params: ModelParams, n_servers: int, z: float) -> float:
    """Order-n coefficient of the expansion of (1+x)^z e^{-N rho x - c x^2}.

    With c = N xi / (2 mu), the Gaussian factor contributes
    b_{2k} = (2k)!/k! (-c)^k in the x^n/n! basis and the product series is
    the binomial convolution of those with the Poisson-Charlier terms.
    Orders 1 and 2 reproduce the linear and quadratic martingale shapes.
    """
    if n < 0:
        raise DomainError(f"n must be >= 0, got {n}")
    a = n_servers * rho(params)
    c = n_servers * params.xi / (2.0 * params.mu)
    total = 0.0
    for k in range(0, n + 1, 2):
        j = k // 2
        b_k = math.factorial(k) / math.factorial(j) * (-c) ** j
        total += math.comb(n, k) * poisson_charlier(n - k, a, z) * b_k
    return total


def psi_value(params: ModelParams, n_servers: int, x: float, z: float) -> float:
    """(1+x)^z e^{-N rho x} e^{-(N xi / 2 mu) x^2}; equals g_c when
    x = c e^{mu t} and z = v.X(t)."""
    if x <= -1.0:
        raise DomainError("x must exceed -1")
    c = n_servers * params.xi / (2.0 * params.mu)
    return math.exp(z * math.log1p(x) - n_servers * rho(params) * x - c * x * x)


# ---------------------------------------------------------------------------
# drift testing
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MartingaleFunctional:
    """A named function (t, state, N, params) -> value to test for drift."""

    name: str
    evaluate: Callable[[float, SystemState, int, ModelParams], float]


def _vw(state: SystemState) -> int:
    return state.x1 + 2 * state.x2


def linear_martingale() -> MartingaleFunctional:
    """e^{mu t} (v.X - N rho)."""

    def ev(t, state, n, params):
        return math.exp(params.mu * t) * (_vw(state) - n * rho(params))

    return MartingaleFunctional("linear", ev)


def quadratic_martingale() -> MartingaleFunctional:
    """e^{2 mu t} ((v.X - N rho)^2 - v.X - N xi / mu)."""

    def ev(t, state, n, params):
        d = _vw(state) - n * rho(params)
        return math.exp(2.0 * params.mu * t) * (d * d - _vw(state) - n * params.xi / params.mu)

    return MartingaleFunctional("quadratic", ev)


def quadratic_martingale_half_constant() -> MartingaleFunctional:
    """Same shape with N xi / (2 mu); kept as the documented non-martingale
    alternative, rejected by the exact generator residual."""

    def ev(t, state, n, params):
        d = _vw(state) - n * rho(params)
        return math.exp(2.0 * params.mu * t) * (
            d * d - _vw(state) - n * params.xi / (2.0 * params.mu)
        )

    return MartingaleFunctional("quadratic-half-constant", ev)


def gc_martingale(c: float) -> MartingaleFunctional:
    """g_c(t, X(t)) itself."""

    def ev(t, state, n, params):
        try:
            return math.exp(log_gc(params, n, c, t, (state.x1, state.x2)))
        except OverflowError:
            return math.inf

    return MartingaleFunctional(f"g_c(c={c})", ev)


def negative_control() -> MartingaleFunctional:
    """e^{mu t} (v.X - N rho / 2): drifts like e^{mu t}, must fail the test."""

    def ev(t, state, n, params):
        return math.exp(params.mu * t) * (_vw(state) - 0.5 * n * rho(params))

    return MartingaleFunctional("negative-control", ev)


@dataclass
class DriftTestReport:
    """Replica means of a functional on a time grid with CLT error bars."""

    name: str
    ts: np.ndarray
    means: np.ndarray
    stderrs: np.ndarray
    k: float
    replicas: int
    passed: bool
    usable_horizon: float

    def write_csv(self, fileobj, precision: int = 12) -> None:
        writer = csv.writer(fileobj)
        writer.writerow(["t", "mean", "stderr"])
        fmt = f"{{:.{precision}g}}"
        for i in range(len(self.ts)):
            writer.writerow(
                [fmt.format(self.ts[i]), fmt.format(self.means[i]), fmt.format(self.stderrs[i])]
            )


def drift_test(
    functional: MartingaleFunctional,
    params: ModelParams,
    n: int,
    init: SystemState,
    horizon: float,
    replicas: int,
    seed: int,
    n_grid: int = 11,
    k: float = 3.0,
) -> DriftTestReport:
    """Monte Carlo constancy check of E[functional(t, X(t))].

    Simulates the infinite-capacity chain; passes iff every grid mean stays
    within ``k`` combined standard errors of the t=0 mean.  If the
    functional overflows, the grid is truncated at the last finite time and
    the report says so through ``usable_horizon``.
    """
    if replicas < 50:
        raise ParameterError(f"need >= 50 replicas for meaningful error bars, got {replicas}")
    scaled = ScaledParams(n=n, f_n=INFINITE)
    grid = np.linspace(0.0, horizon, n_grid)
    values = np.empty((replicas, n_grid))
    for r in range(replicas):
        path = simulate_path(params, scaled, init, horizon, seed, replica=r)
        for j, t in enumerate(grid):
            values[r, j] = functional.evaluate(t, path.state_at(t), n, params)

    finite_cols = np.all(np.isfinite(values), axis=0)
    usable = int(np.argmin(finite_cols)) if not finite_cols.all() else n_grid
    if usable < 2:
        raise DomainError(f"functional {functional.name} overflows immediately")
    grid = grid[:usable]
    values = values[:, :usable]

    means = values.mean(axis=0)
    stderrs = values.std(axis=0, ddof=1) / math.sqrt(replicas)
    scale = max(1.0, float(np.abs(means).max()))
    bands = k * (stderrs + stderrs[0]) + 1e-12 * scale
    passed = bool(np.all(np.abs(means - means[0]) <= bands))
    return DriftTestReport(
        name=functional.name,
        ts=grid,
        means=means,
        stderrs=stderrs,
        k=k,
        replicas=replicas,
        passed=passed,
        usable_horizon=float(grid[-1]),
    )


def spacetime_generator_residual(
    params: ModelParams,
    n: int,
    functional: MartingaleFunctional,
    t: float,
    state: SystemState,
    h: float = 1e-6,
) -> float:
    """(d/dt + Q) functional at (t, state) for the infinite-capacity chain.

    Exact zero (up to finite-difference error) iff the functional is
    space-time harmonic; used to adjudicate between near-miss variants
    without Monte Carlo noise.
    """
    x1, x2 = state.x1, state.x2

    def f(tt, a, b):
        return functional.evaluate(tt, SystemState(x1=a, x2=b), n, params)

    center = f(t, x1, x2)
    q = params.xi * n * (f(t, x1, x2 + 1) - center)
    if x1 > 0:
        q += params.lam * n * (f(t, x1 - 1, x2 + 1) - center)
        q += params.mu * x1 * (f(t, x1 - 1, x2) - center)
    q += 2.0 * params.mu * x2 * (f(t, x1 + 1, x2 - 1) - center)

    def central(step):
        return (f(t + step, x1, x2) - f(t - step, x1, x2)) / (2.0 * step)

    dt_term = (4.0 * central(h / 2.0) - central(h)) / 3.0
    return dt_term + q


# ---------------------------------------------------------------------------
# hitting-time identities
# ---------------------------------------------------------------------------

def exp_hitting_identity(
    params: ModelParams, n: int, x0_scaled: tuple[float, float]
) -> tuple[float, float]:
    """Closed-form (E[e^{mu T1}], E[e^{2 mu T1}]) for the default capacity.

    T1 is the first time the free capacity drops into {0, 1}; both formulas
    follow from optional stopping of the linear and quadratic martingales
    with v.X(T1) pinned at F_N - 1.
    """
    if classify_regime(params) is not Regime.OVER_LOADED:
        raise RegimeError("hitting identities require the over-loaded regime")
    load = x0_scaled[0] + 2.0 * x0_scaled[1]
    if load >= params.beta_bar:
        raise DomainError(f"need x1 + 2 x2 < beta_bar, got {load}")
    lam, xi, mu = params.lam, params.xi, params.mu
    f_n = ScaledParams.from_model(params, n).f_n
    r = rho(params)
    rhs1 = (lam + 2.0 * xi - mu * load) / (lam + 2.0 * xi - mu * f_n / n + mu / n)
    top = n * (load - r) ** 2 - load - xi / mu
    edge = (f_n - 1) / n
    bottom = n * (edge - r) ** 2 - edge - xi / mu
    return rhs1, top / bottom


def sample_hitting_times(
    params: ModelParams,
    n: int,
    x0_scaled: tuple[float, float],
    replicas: int,
    seed: int,
    horizon_cap: float | None = None,
) -> np.ndarray:
    """Independent samples of T1, stopping each run at saturation."""
    if classify_regime(params) is not Regime.OVER_LOADED:
        raise RegimeError("T1 sampling requires the over-loaded regime")
    scaled = ScaledParams.from_model(params, n)
    init = initial_state_from_scaled(*x0_scaled, n)
    if horizon_cap is None:
        from .fluid import hitting_time_T0

        horizon_cap = 6.0 * hitting_time_T0(params, x0_scaled) + 10.0 / params.mu
    out = np.empty(replicas)
    for r in range(replicas):
        path = simulate_path(
            params, scaled, init, horizon_cap, seed, replica=r, stop_m_le=1
        )
        t1 = path.hitting_time_T1()
        if not isinstance(t1, float):
            raise SimulationError(
                f"replica {r} did not saturate within {horizon_cap} time units"
            )
        out[r] = t1
    return out


@dataclass
class VarianceScalingReport:
    """N * var(e^{mu T1}) across system sizes, against the identity-based limit."""

    n_list: list[int]
    n_var: np.ndarray
    reference: np.ndarray
    ratio: float
    passed: bool


def variance_scaling_check(
    params: ModelParams,
    x0_scaled: tuple[float, float],
    n_list: list[int],
    replicas: int,
    seed: int,
    ratio_bound: float = 5.0,
) -> VarianceScalingReport:
    """Check that N * var(e^{mu T1}) stays bounded across ``n_list``.

    The reference value for each N is N*(rhs2 - rhs1^2) from the two
    hitting-moment identities.
    """
    if replicas < 2:
        raise ParameterError(f"need >= 2 replicas to estimate a variance, got {replicas}")
    n_var = np.empty(len(n_list))
    reference = np.empty(len(n_list))
    for i, n in enumerate(n_list):
        t1 = sample_hitting_times(params, n, x0_scaled, replicas, seed + i)
        n_var[i] = n * np.exp(params.mu * t1).var(ddof=1)
        rhs1, rhs2 = exp_hitting_identity(params, n, x0_scaled)
        reference[i] = n * (rhs2 - rhs1 * rhs1)
    ratio = float(n_var.max() / n_var.min())
    return VarianceScalingReport(
        n_list=list(n_list),
        n_var=n_var,
        reference=reference,
        ratio=ratio,
        passed=ratio < ratio_bound,
    )


# ---------------------------------------------------------------------------
# path martingales of the finite-capacity chain
# ---------------------------------------------------------------------------

def _segments(path: Path, params: ModelParams, t_max: float):
    """Per-segment state and rate-indicator arrays on [0, t_max]."""
    k = path._index_at(t_max)
    starts = np.concatenate(([0.0], path.times[:k]))
    ends = np.concatenate((path.times[:k], [t_max]))
    x1 = np.concatenate(([path.init.x1], path.x1[:k]))
    x2 = np.concatenate(([path.init.x2], path.x2[:k]))
    if path.scaled.finite:
        m = path.scaled.f_n - x1 - 2 * x2
        dup_on = (x1 > 0) & (m >= 1)
        adm_on = m >= 2
    else:
        dup_on = x1 > 0
        adm_on = np.ones_like(x1, dtype=bool)
    return k, np.maximum(ends - starts, 0.0), x1, x2, dup_on, adm_on


def martingale_paths(path: Path, params: ModelParams, t_max: float):
    """Running values of the compensated martingales M1, M2 along a path.

    Returns ``(sup1, sup2, end1, end2)`` where sup_i is sup_{t<=t_max}|M_i|.
    M_i is piecewise linear between events, so the sup is attained at an
    event time (either side of a jump) or at t_max.
    """
    lam_n = params.lam * path.scaled.n
    xi_n = params.xi * path.scaled.n
    mu = params.mu
    k, d, x1, x2, dup_on, adm_on = _segments(path, params, t_max)

    cum_x1 = np.concatenate(([0.0], np.cumsum(x1 * d)))
    cum_x2 = np.concatenate(([0.0], np.cumsum(x2 * d)))
    cum_dup = np.concatenate(([0.0], np.cumsum(dup_on * d)))
    cum_adm = np.concatenate(([0.0], np.cumsum(adm_on * d)))

    # Post-event values at each event time (indices 1..k of the cumulatives).
    m1_post = (
        x1[1:] - x1[0] + mu * cum_x1[1:-1] - 2.0 * mu * cum_x2[1:-1] + lam_n * cum_dup[1:-1]
    )
    m2_post = (
        x2[1:] - x2[0] + 2.0 * mu * cum_x2[1:-1] - xi_n * cum_adm[1:-1] - lam_n * cum_dup[1:-1]
    )
    jump1 = np.diff(x1)
    jump2 = np.diff(x2)
    m1_end = x1[k] - x1[0] + mu * cum_x1[-1] - 2.0 * mu * cum_x2[-1] + lam_n * cum_dup[-1]
    m2_end = x2[k] - x2[0] + 2.0 * mu * cum_x2[-1] - xi_n * cum_adm[-1] - lam_n * cum_dup[-1]

    def runsup(post, jump, end):
        if len(post) == 0:
            return abs(end)
        pre = post - jump
        return max(float(np.abs(post).max()), float(np.abs(pre).max()), abs(end))

    return (
        runsup(m1_post, jump1, m1_end),
        runsup(m2_post, jump2, m2_end),
        float(m1_end),
        float(m2_end),
    )


def martingale_brackets(path: Path, params: ModelParams, t_max: float) -> tuple[float, float]:
    """Predictable brackets <M1>(t_max), <M2>(t_max) along the path."""
    lam_n = params.lam * path.scaled.n
    xi_n = params.xi * path.scaled.n
    mu = params.mu
    _, d, x1, x2, dup_on, adm_on = _segments(path, params, t_max)
    i_x1 = float((x1 * d).sum())
    i_x2 = float((x2 * d).sum())
    i_dup = float((dup_on * d).sum())
    i_adm = float((adm_on * d).sum())
    b1 = 2.0 * mu * i_x2 + mu * i_x1 + lam_n * i_dup
    b2 = xi_n * i_adm + 2.0 * mu * i_x2 + lam_n * i_dup
    return b1, b2


def martingale_quadratic_variation(path: Path, t_max: float) -> tuple[float, float]:
    """[M1](t_max), [M2](t_max): sums of squared jumps (all of size 1)."""
    k = path._index_at(t_max)
    kinds = path.kinds[:k]
    n_adm = int((kinds == TransitionKind.ADMISSION).sum())
    n_dup = int((kinds == TransitionKind.DUPLICATION).sum())
    n_dl = int((kinds == TransitionKind.DOUBLE_LOSS).sum())
    n_sl = int((kinds == TransitionKind.SINGLE_LOSS).sum())
    return float(n_dup + n_dl + n_sl), float(n_adm + n_dup + n_dl)
