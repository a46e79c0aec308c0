"""Deterministic fluid trajectories of the scaled network.

Away from the capacity face the scaled flow follows a linear ODE with the
closed form implemented in :func:`interior_solution`.  In the over-loaded
regime the flow reaches the face {x1 + 2 x2 = beta_bar} at the finite time
:func:`hitting_time_T0` and afterwards follows a slower linear ODE whose
admission and duplication terms are thinned by the stationary masses of the
fast free-capacity chain (:func:`boundary_drift`).  The assembler
:func:`fluid_trajectory` pieces the two together, delegating to the numeric
Skorokhod solver whenever the x1 = 0 face comes into play.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, RegimeError
from .fastchain import pi_heads
from .model import ModelParams, Regime, classify_regime, in_domain_S, rho
from .skorokhod import SkorokhodData, solve_2d

#: Flag recorded when a boundary trajectory reaches x1 = 0, where the
#: post-contact dynamics are not defined.
UNSPECIFIED_CORNER = "UNSPECIFIED_CORNER"


def interior_solution(params: ModelParams, x0: tuple[float, float], t):
    """Closed-form unconstrained flow started from ``x0``.

    Accepts a scalar or array ``t``; returns ``(x1(t), x2(t))``.
    """
    lam, xi, mu = params.lam, params.xi, params.mu
    x1, x2 = x0
    t = np.asarray(t, dtype=float)
    e1 = np.exp(-mu * t)
    e2 = np.exp(-2.0 * mu * t)
    x2_inf = (lam + xi) / (2.0 * mu)
    x1_t = (x1 + 2.0 * x2 - (lam + 2.0 * xi) / mu) * e1 - (2.0 * x2 - (lam + xi) / mu) * e2 + xi / mu
    x2_t = x2_inf + (x2 - x2_inf) * e2
    if t.ndim == 0:
        return float(x1_t), float(x2_t)
    return x1_t, x2_t


def hitting_time_T0(params: ModelParams, x0: tuple[float, float]) -> float:
    """Time at which the interior flow reaches the capacity face.

    Defined in the over-loaded regime for starting points with
    x1 + 2*x2 <= beta_bar; a start already on the face returns 0.
    """
    if classify_regime(params) is not Regime.OVER_LOADED:
        raise RegimeError("the capacity face is only reached when rho > beta_bar")
    if not in_domain_S(x0, params.beta_bar):
        raise DomainError(f"x0={x0} outside S")
    load = x0[0] + 2.0 * x0[1]
    r = rho(params)
    if load > params.beta_bar:
        raise DomainError(f"x1 + 2*x2 = {load} exceeds beta_bar = {params.beta_bar}")
    return math.log((r - load) / (r - params.beta_bar)) / params.mu


def boundary_drift(
    params: ModelParams, pi0: float, y: tuple[float, float]
) -> tuple[float, float]:
    """Right-hand side of the post-contact ODE on the capacity face.

    Admission is blocked a fraction pi0 + pi1 of the (fast) time and
    duplication a fraction pi0; averaging those indicators yields a linear
    field whose flow preserves x1 + 2*x2.
    """
    if not 0.0 <= pi0 <= 1.0:
        raise DomainError(f"pi0 must lie in [0, 1], got {pi0}")
    lam, mu, bb = params.lam, params.mu, params.beta_bar
    y1, y2 = y
    f1 = -lam * (1.0 - pi0) + mu * (2.0 * y2 - y1)
    f2 = mu * bb / 2.0 + lam / 2.0 * (1.0 - pi0) - 2.0 * mu * y2
    return f1, f2


def boundary_fixed_point(params: ModelParams, pi0: float) -> tuple[float, float]:
    """Stationary point of the boundary ODE (lies on the capacity face)."""
    lam, mu, bb = params.lam, params.mu, params.beta_bar
    x2_inf = bb / 4.0 + lam / (4.0 * mu) * (1.0 - pi0)
    return 2.0 * x2_inf - lam / mu * (1.0 - pi0), x2_inf


def boundary_solution(
    params: ModelParams,
    pi0: float,
    y0: tuple[float, float],
    t,
    method: str = "closed",
    rk_dt: float = 1e-3,
):
    """Solve the boundary ODE from a point on the capacity face.

    ``method="closed"`` uses the exact two-exponential solution (the system
    relaxes at rates mu and 2*mu, always distinct); ``method="rk4"`` is the
    guard for a hypothetical coalescent case and for cross-checks.
    """
    if not 0.0 <= pi0 <= 1.0:
        raise DomainError(f"pi0 must lie in [0, 1], got {pi0}")
    tol = 1e-9 * max(1.0, params.beta_bar)
    load = y0[0] + 2.0 * y0[1]
    if abs(load - params.beta_bar) > tol:
        raise DomainError(f"y0 load {load} is off the face beta_bar={params.beta_bar}")
    if method == "rk4":
        return _boundary_rk4(params, pi0, y0, t, rk_dt)

    lam, mu = params.lam, params.mu
    x1_star, x2_inf = boundary_fixed_point(params, pi0)
    delta = y0[1] - x2_inf
    t = np.asarray(t, dtype=float)
    e1 = np.exp(-mu * t)
    e2 = np.exp(-2.0 * mu * t)
    x2_t = x2_inf + delta * e2
    x1_t = y0[0] * e1 + x1_star * (1.0 - e1) + 2.0 * delta * (e1 - e2)
    if t.ndim == 0:
        return float(x1_t), float(x2_t)
    return x1_t, x2_t


def _boundary_rk4(params, pi0, y0, t, dt):
    t_arr = np.atleast_1d(np.asarray(t, dtype=float))
    order = np.argsort(t_arr)
    out = np.empty((len(t_arr), 2))
    y = np.asarray(y0, dtype=float)
    now = 0.0

    def f(state):
        return np.asarray(boundary_drift(params, pi0, tuple(state)))

    for idx in order:
        target = t_arr[idx]
        while now < target - 1e-15:
            h = min(dt, target - now)
            k1 = f(y)
            k2 = f(y + 0.5 * h * k1)
            k3 = f(y + 0.5 * h * k2)
            k4 = f(y + h * k3)
            y = y + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            now += h
        out[idx] = y
    if np.asarray(t, dtype=float).ndim == 0:
        return float(out[0, 0]), float(out[0, 1])
    return out[:, 0], out[:, 1]


@dataclass
class FluidTrajectory:
    """Sampled fluid path with contact bookkeeping."""

    ts: np.ndarray
    x1: np.ndarray
    x2: np.ndarray
    beta_bar: float
    regime: Regime
    contact_time: float | None = None
    pi0: float | None = None
    numeric: bool = False
    corner: str | None = None

    @property
    def on_boundary2(self) -> np.ndarray:
        tol = 1e-6 * max(1.0, self.beta_bar)
        return np.abs(self.x1 + 2.0 * self.x2 - self.beta_bar) <= tol

    def endpoint(self) -> tuple[float, float]:
        return float(self.x1[-1]), float(self.x2[-1])

    def at(self, t: float) -> tuple[float, float]:
        """Linear interpolation on the sample grid."""
        return (
            float(np.interp(t, self.ts, self.x1)),
            float(np.interp(t, self.ts, self.x2)),
        )

    def write_csv(self, fileobj, precision: int = 12) -> None:
        writer = csv.writer(fileobj)
        writer.writerow(["t", "x1", "x2", "on_boundary2"])
        fmt = f"{{:.{precision}g}}"
        on_b = self.on_boundary2
        for i in range(len(self.ts)):
            writer.writerow(
                [fmt.format(self.ts[i]), fmt.format(self.x1[i]), fmt.format(self.x2[i]), int(on_b[i])]
            )

    def summary(self) -> dict:
        return {
            "regime": self.regime.value,
            "contact_time": self.contact_time,
            "endpoint": list(self.endpoint()),
            "numeric": self.numeric,
            "corner": self.corner,
            "pi0": self.pi0,
        }

    def to_json(self) -> str:
        return json.dumps(self.summary(), sort_keys=True, indent=2)


def _interior_positive(params, x0, t_end):
    """Check x1 > 0 along the interior flow on (0, t_end] on a fine grid."""
    if t_end <= 0:
        return True
    fine = np.linspace(0.0, t_end, max(256, int(t_end / 1e-3) + 1))
    x1_t, _ = interior_solution(params, x0, fine)
    return bool(np.all(x1_t[1:] > 0.0))


def fluid_trajectory(
    params: ModelParams,
    x0: tuple[float, float],
    horizon: float,
    dt: float = 1e-3,
    regime_tol: float = 0.0,
) -> FluidTrajectory:
    """Piecewise fluid path on [0, horizon] sampled every ``dt``.

    Interior closed form until the capacity face is hit, then the averaged
    boundary ODE.  If the interior flow would cross x1 = 0 the whole
    trajectory is delegated to the projected-Euler Skorokhod solver and
    flagged ``numeric``; a boundary trajectory reaching x1 = 0 stops with
    ``corner`` set, since no dynamics are defined there.
    """
    if dt <= 0 or horizon <= 0:
        raise DomainError("horizon and dt must be > 0")
    if not in_domain_S(x0, params.beta_bar, tol=1e-9 * max(1.0, params.beta_bar)):
        raise DomainError(f"x0={x0} outside S")
    regime = classify_regime(params, regime_tol)
    load0 = x0[0] + 2.0 * x0[1]

    pi0 = pi1 = None
    if regime is Regime.OVER_LOADED:
        pi0, pi1 = pi_heads(params)

    t0_contact = None
    if regime is Regime.OVER_LOADED:
        t0_contact = 0.0 if load0 >= params.beta_bar else hitting_time_T0(params, x0)

    interior_end = horizon if t0_contact is None else min(t0_contact, horizon)
    if not _interior_positive(params, x0, interior_end):
        return _fluid_numeric(params, x0, horizon, dt, regime, pi0, pi1)

    grid = np.linspace(0.0, horizon, int(round(horizon / dt)) + 1)
    if t0_contact is None or t0_contact >= horizon:
        x1_t, x2_t = interior_solution(params, x0, grid)
        contact = t0_contact if (t0_contact is not None and t0_contact <= horizon) else None
        return FluidTrajectory(
            ts=grid, x1=x1_t, x2=x2_t, beta_bar=params.beta_bar, regime=regime,
            contact_time=contact, pi0=pi0,
        )

    ts = np.unique(np.concatenate((grid, [t0_contact])))
    pre = ts <= t0_contact
    x1_out = np.empty_like(ts)
    x2_out = np.empty_like(ts)
    x1_out[pre], x2_out[pre] = interior_solution(params, x0, ts[pre])
    y_contact = interior_solution(params, x0, t0_contact)
    # Land exactly on the face before switching branch (removes the O(1e-16)
    # closed-form residue that boundary_solution would otherwise reject).
    y_contact = (y_contact[0], (params.beta_bar - y_contact[0]) / 2.0)
    x1_out[~pre], x2_out[~pre] = boundary_solution(params, pi0, y_contact, ts[~pre] - t0_contact)

    corner = None
    neg = np.nonzero(x1_out <= 0.0)[0]
    if len(neg) > 0:
        k = neg[0]
        ts, x1_out, x2_out = ts[:k], x1_out[:k], x2_out[:k]
        corner = UNSPECIFIED_CORNER
    return FluidTrajectory(
        ts=ts, x1=x1_out, x2=x2_out, beta_bar=params.beta_bar, regime=regime,
        contact_time=t0_contact, pi0=pi0, corner=corner,
    )


def _fluid_numeric(params, x0, horizon, dt, regime, pi0, pi1):
    """Skorokhod-solver fallback used when the x1 = 0 face is active."""
    data = SkorokhodData.from_model(params)
    sol = solve_2d(data, x0, horizon, dt)
    contact = None
    corner = UNSPECIFIED_CORNER if sol.stalled else None
    ts, z = sol.ts, sol.z

    if regime is Regime.OVER_LOADED:
        # Switch the occupation weights to the stationary masses once the
        # capacity face is reached; before contact they are identically 0.
        ctol = max(1e-9 * max(1.0, params.beta_bar),
                   1.5 * dt * params.mu * (rho(params) - params.beta_bar))
        load = z[:, 0] + 2.0 * z[:, 1]
        hit = np.nonzero(load >= params.beta_bar - ctol)[0]
        if len(hit) > 0:
            k = int(hit[0])
            contact = float(ts[k])
            weights = (pi0, pi0 + pi1)
            data_b = SkorokhodData.from_model(params, measure_weight=lambda t: weights)
            sol_b = solve_2d(data_b, tuple(z[k]), horizon - contact, dt)
            ts = np.concatenate((ts[: k + 1], contact + sol_b.ts[1:]))
            z = np.concatenate((z[: k + 1], sol_b.z[1:]))
            if sol_b.stalled:
                corner = UNSPECIFIED_CORNER

    return FluidTrajectory(
        ts=ts, x1=z[:, 0], x2=z[:, 1], beta_bar=params.beta_bar, regime=regime,
        contact_time=contact, pi0=pi0, numeric=True, corner=corner,
    )
