"""The fast free-capacity chain and its stationary law.

In the over-loaded regime the free-slot count m relaxes on a time scale
O(1/N) while the file counts move on the O(1) scale, so boundary behaviour
of the network is governed by the stationary law ``pi`` of the limiting
chain on the non-negative integers:

    m -> m + 1   at rate mu * beta_bar
    m -> m - 1   at rate lam        (m >= 1)
    m -> m - 2   at rate xi         (m >= 2)

Closed forms for pi(0), pi(1) and the probability generating function are
implemented next to a truncated balance-equation solver and a Monte Carlo
estimator, each of which serves as an independent check on the others.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, ParameterError, RegimeError, ToleranceError
from .model import ModelParams, Regime, classify_regime, rho


def _require_overloaded(params: ModelParams) -> None:
    if classify_regime(params) is not Regime.OVER_LOADED:
        raise RegimeError(
            f"fast-chain stationary law needs rho > beta_bar, got rho={rho(params)} "
            f"beta_bar={params.beta_bar}"
        )


def fast_rates(m: int, params: ModelParams) -> list[tuple[int, float]]:
    """Enabled jumps (delta, rate) of the free-capacity chain at level m."""
    if m < 0:
        raise DomainError(f"m must be >= 0, got {m}")
    out = [(+1, params.mu * params.beta_bar)]
    if m >= 1:
        out.append((-1, params.lam))
    if m >= 2:
        out.append((-2, params.xi))
    return out


def charpoly(params: ModelParams, u: float) -> float:
    """P(u) = -mu*beta_bar*u^2 + (lam + xi)*u + xi, the balance polynomial."""
    return -params.mu * params.beta_bar * u * u + (params.lam + params.xi) * u + params.xi


def y_star(params: ModelParams) -> float:
    """The unique root of P in (-1, 0) (over-loaded regime only)."""
    _require_overloaded(params)
    lam, xi, mb = params.lam, params.xi, params.mu * params.beta_bar
    # Sign pattern guaranteeing a single root in (-1, 0): P(-1) < 0 < P(0),
    # and P(1) > 0 so the root cannot sit in [0, 1].
    assert charpoly(params, -1.0) < 0 and charpoly(params, 1.0) > 0
    root = ((lam + xi) - math.sqrt((lam + xi) ** 2 + 4.0 * xi * mb)) / (2.0 * mb)
    if not -1.0 < root < 0.0:
        raise ParameterError(f"root {root} escaped (-1, 0); inconsistent parameters")
    return root


def pi_heads(params: ModelParams) -> tuple[float, float]:
    """Stationary probabilities (pi(0), pi(1)) of the free-capacity chain."""
    _require_overloaded(params)
    lam, xi = params.lam, params.xi
    mb = params.mu * params.beta_bar
    ys = y_star(params)
    pi0 = (1.0 + ys) * (lam + 2.0 * xi - mb) / ((lam + 2.0 * xi) * (1.0 + ys) - 2.0 * mb * ys)
    pi1 = (lam + 2.0 * xi - mb) / (2.0 * xi) - (lam + 2.0 * xi) / (2.0 * xi) * pi0
    for name, value in (("pi(0)", pi0), ("pi(1)", pi1)):
        if not 0.0 <= value <= 1.0:
            raise ParameterError(f"{name}={value} outside [0, 1]; inconsistent parameters")
    return pi0, pi1


def generating_function(params: ModelParams, u: float) -> float:
    """g(u) = sum pi(n) u^n for u in [-1, 1].

    Evaluated as the ratio of the balance numerator to P(u); the removable
    singularity at the root of P is handled by the derivative ratio.
    """
    if not -1.0 <= u <= 1.0:
        raise DomainError(f"u must lie in [-1, 1], got {u}")
    _require_overloaded(params)
    lam, xi = params.lam, params.xi
    pi0, pi1 = pi_heads(params)
    p = charpoly(params, u)
    if abs(p) < 1e-8:
        num_d = (lam + xi) * pi0 + xi * (1.0 + 2.0 * u) * pi1
        p_d = -2.0 * params.mu * params.beta_bar * u + (lam + xi)
        return num_d / p_d
    num = ((lam + xi) * u + xi) * pi0 + xi * (1.0 + u) * u * pi1
    return num / p


@dataclass
class FastChainDistribution:
    """Stationary law on {0..n_max} plus the estimated mass beyond n_max."""

    pi: np.ndarray
    tail_mass: float
    n_max: int

    def mean_drift(self, params: ModelParams) -> float:
        """sum pi(m) * (up rate - down rates); zero at stationarity."""
        m = np.arange(self.n_max + 1)
        drift = params.mu * params.beta_bar - params.lam * (m >= 1) - 2.0 * params.xi * (m >= 2)
        return float(self.pi @ drift)


def stationary_distribution(
    params: ModelParams, n_max: int = 200, tol: float = 1e-10
) -> FastChainDistribution:
    """Solve the global balance equations on {0..n_max}.

    The chain is truncated by dropping the up-rate at n_max; the mass beyond
    the truncation is estimated from the geometric decay of the last entries
    and must come in under ``tol``.
    """
    _require_overloaded(params)
    if n_max < 10:
        raise ParameterError(f"n_max must be >= 10, got {n_max}")
    lam, xi = params.lam, params.xi
    up = params.mu * params.beta_bar

    q = np.zeros((n_max + 1, n_max + 1))
    for i in range(n_max + 1):
        if i < n_max:
            q[i, i + 1] += up
        if i >= 1:
            q[i, i - 1] += lam
        if i >= 2:
            q[i, i - 2] += xi
        q[i, i] = -q[i].sum()

    a = q.T.copy()
    a[-1, :] = 1.0  # normalization replaces one balance row
    b = np.zeros(n_max + 1)
    b[-1] = 1.0
    pi = np.linalg.solve(a, b)
    if pi.min() < -1e-13:
        raise ToleranceError(f"balance solve produced negative mass {pi.min()}")
    pi = np.maximum(pi, 0.0)
    pi /= pi.sum()

    # Entries below the double-precision noise floor of the LU solve carry
    # no decay information; fit the geometric ratio on the last entries
    # still above it and extrapolate past the truncation.
    floor = pi.max() * 1e-12
    above = np.nonzero(pi > floor)[0]
    k_hi = int(above[-1])
    window = pi[max(0, k_hi - 10) : k_hi + 1]
    ratios = window[1:] / window[:-1]
    r = float(np.median(ratios))
    if not 0.0 < r < 1.0:
        raise ToleranceError(f"tail is not geometrically decaying (ratio {r})")
    tail = float(pi[k_hi] * r ** (n_max - k_hi + 1) / (1.0 - r))
    if tail > tol:
        raise ToleranceError(f"estimated tail mass {tail:.3e} exceeds tol {tol:.3e}; raise n_max")
    return FastChainDistribution(pi=pi * (1.0 - tail), tail_mass=tail, n_max=n_max)


@dataclass
class FastChainPath:
    """Event log of a simulated free-capacity chain."""

    times: np.ndarray
    states: np.ndarray
    horizon: float
    m0: int

    def _segments(self, t_lo: float, t_hi: float):
        starts = np.concatenate(([0.0], self.times))
        ends = np.concatenate((self.times, [self.horizon]))
        states = np.concatenate(([self.m0], self.states))
        clipped = np.minimum(ends, t_hi) - np.maximum(starts, t_lo)
        return np.maximum(clipped, 0.0), states

    def occupation_fraction(self, gamma, t_lo: float = 0.0, t_hi: float | None = None) -> float:
        """Fraction of [t_lo, t_hi] spent with m in gamma."""
        t_hi = self.horizon if t_hi is None else t_hi
        durations, states = self._segments(t_lo, t_hi)
        mask = np.isin(states, np.fromiter(gamma, dtype=np.int64))
        return float(durations[mask].sum()) / (t_hi - t_lo)

    def empirical(self, n_max: int):
        """(probs over {0..n_max}, overflow fraction) for the whole run."""
        durations, states = self._segments(0.0, self.horizon)
        probs = np.zeros(n_max + 1)
        in_range = states <= n_max
        np.add.at(probs, states[in_range], durations[in_range])
        overflow = float(durations[~in_range].sum())
        total = self.horizon
        return probs / total, overflow / total

    def batch_fractions(self, gamma, n_batches: int) -> np.ndarray:
        """Occupation fraction of gamma over equal consecutive time batches."""
        edges = np.linspace(0.0, self.horizon, n_batches + 1)
        return np.array(
            [self.occupation_fraction(gamma, edges[i], edges[i + 1]) for i in range(n_batches)]
        )


def simulate_fast_chain(
    params: ModelParams, horizon: float, seed: int, m0: int = 0, replica: int = 0
) -> FastChainPath:
    """Exact simulation of the free-capacity chain on [0, horizon]."""
    _require_overloaded(params)
    if horizon < 0:
        raise DomainError(f"horizon must be >= 0, got {horizon}")
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence((seed, replica))))
    up, lam, xi = params.mu * params.beta_bar, params.lam, params.xi
    times = []
    states = []
    t = 0.0
    m = m0
    while True:
        r_down1 = lam if m >= 1 else 0.0
        r_down2 = xi if m >= 2 else 0.0
        total = up + r_down1 + r_down2
        t += rng.exponential(1.0 / total)
        if t > horizon:
            break
        r = rng.random() * total
        if r < up:
            m += 1
        elif r < up + r_down1:
            m -= 1
        else:
            m -= 2
        times.append(t)
        states.append(m)
    return FastChainPath(
        times=np.array(times), states=np.array(states, dtype=np.int64), horizon=horizon, m0=m0
    )


def total_variation(
    dist: FastChainDistribution, probs: np.ndarray, overflow: float = 0.0
) -> float:
    """TV distance between an empirical histogram and the stationary law.

    ``probs`` must cover {0..dist.n_max}; the empirical overflow bucket is
    matched against the distribution's tail mass.
    """
    if len(probs) != dist.n_max + 1:
        raise DomainError("histogram support must match the distribution's n_max")
    return 0.5 * (float(np.abs(probs - dist.pi).sum()) + abs(overflow - dist.tail_mass))
