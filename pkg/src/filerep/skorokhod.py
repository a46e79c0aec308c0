"""Reflection maps: the explicit 1D solution and a 2D projected-Euler solver.

The 2D problem constrains the flow

    dz = (theta + A z + forcing(t, z)) dt

to the triangle S = {z1 >= 0, z2 >= 0, z1 + 2 z2 <= beta_bar}, pushing along
the first column of R on the face {z1 = 0} and along the second column on
{z1 + 2 z2 = beta_bar, z1 > 0}.  The forcing carries the occupation masses
of the fast free-capacity chain: a caller-supplied weight function
``t -> (q0, q01)`` with q0 = mass of {0} and q01 = mass of {0, 1}, zero
before boundary contact and equal to the stationary masses after it.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import DomainError, ParameterError
from .model import ModelParams, in_domain_S

#: Diagnostic value recorded when no admissible push restores feasibility.
CORNER_STALL = "CORNER_STALL"


def reflect_1d(v: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """One-sided reflection at 0 of a sampled free path.

    Returns ``(z, y)`` with ``y(t) = sup_{s<=t} max(0, -v(s))`` (the minimal
    non-decreasing regulator) and ``z = v + y >= 0``.
    """
    v = np.asarray(v, dtype=float)
    if v.ndim != 1 or len(v) == 0:
        raise DomainError("v must be a non-empty 1D sampled path")
    if v[0] < 0:
        raise DomainError(f"v(0) must be >= 0, got {v[0]}")
    y = np.maximum.accumulate(np.maximum(0.0, -v))
    return v + y, y


def _zero_weight(t: float) -> tuple[float, float]:
    return 0.0, 0.0


@dataclass
class SkorokhodData:
    """Drift data (theta, A, R), the capacity, and the occupation weights."""

    theta: np.ndarray
    a_matrix: np.ndarray
    r_matrix: np.ndarray
    beta_bar: float
    measure_weight: Callable[[float], tuple[float, float]] = _zero_weight
    lam: float = None
    xi: float = None

    def __post_init__(self):
        self.theta = np.asarray(self.theta, dtype=float).reshape(2)
        self.a_matrix = np.asarray(self.a_matrix, dtype=float).reshape(2, 2)
        self.r_matrix = np.asarray(self.r_matrix, dtype=float).reshape(2, 2)
        if self.beta_bar <= 0:
            raise ParameterError(f"beta_bar must be > 0, got {self.beta_bar}")
        if self.lam is None:
            self.lam = float(self.r_matrix[0, 0])
        if self.xi is None:
            self.xi = float(self.theta[1] + self.theta[0])
        # Pushing along column 1 must raise z1, and pushing along column 2
        # must lower z1 + 2*z2, otherwise feasibility can never be restored.
        if self.r_matrix[0, 0] <= 0:
            raise ParameterError("column 1 of R must have a positive first component")
        if self.r_matrix[0, 1] + 2.0 * self.r_matrix[1, 1] >= 0:
            raise ParameterError("column 2 of R must decrease z1 + 2*z2")

    @classmethod
    def from_model(cls, params: ModelParams, measure_weight=None) -> "SkorokhodData":
        """The network's data: theta=(-lam, xi+lam), triangular A, rank-1 R."""
        lam, xi, mu = params.lam, params.xi, params.mu
        return cls(
            theta=np.array([-lam, xi + lam]),
            a_matrix=np.array([[-mu, 2.0 * mu], [0.0, -2.0 * mu]]),
            r_matrix=np.array([[lam, lam], [-lam, -lam]]),
            beta_bar=params.beta_bar,
            measure_weight=measure_weight or _zero_weight,
            lam=lam,
            xi=xi,
        )


@dataclass
class ReflectedSolution:
    """Grid samples of the constrained path z and its regulators y."""

    ts: np.ndarray
    z: np.ndarray
    y: np.ndarray
    beta_bar: float
    face_tol: float
    corner_time: float | None = None

    @property
    def stalled(self) -> bool:
        return self.corner_time is not None

    def complementarity_residuals(self) -> tuple[float, float]:
        """Regulator mass accumulated while the matching face was inactive.

        Both numbers are 0 for an exact solution; the discrete scheme keeps
        them at 0 because pushes land the state exactly on the face.
        """
        dy = np.diff(self.y, axis=0)
        z_new = self.z[1:]
        off_face1 = z_new[:, 0] > self.face_tol
        load = z_new[:, 0] + 2.0 * z_new[:, 1]
        off_face2 = np.abs(load - self.beta_bar) > self.face_tol
        return float(dy[off_face1, 0].sum()), float(dy[off_face2, 1].sum())

    def write_csv(self, fileobj, precision: int = 12) -> None:
        writer = csv.writer(fileobj)
        writer.writerow(["t", "z1", "z2", "y1", "y2"])
        fmt = f"{{:.{precision}g}}"
        for i in range(len(self.ts)):
            writer.writerow(
                [
                    fmt.format(self.ts[i]),
                    fmt.format(self.z[i, 0]),
                    fmt.format(self.z[i, 1]),
                    fmt.format(self.y[i, 0]),
                    fmt.format(self.y[i, 1]),
                ]
            )


def solve_2d(
    data: SkorokhodData,
    z0: tuple[float, float],
    horizon: float,
    dt: float = 1e-3,
) -> ReflectedSolution:
    """Explicit Euler predictor with minimal pushes along the columns of R.

    Faces are corrected in a fixed order (z1 = 0 first, then the capacity
    face); the scheme is empirically first-order in ``dt``.  Integration
    stops early with ``corner_time`` set if the capacity face is violated
    while z1 is pinned at 0, where no admissible push exists.
    """
    if dt <= 0 or horizon <= 0:
        raise DomainError("horizon and dt must be > 0")
    face_tol = 1e-9 * max(1.0, data.beta_bar)
    z = np.asarray(z0, dtype=float)
    if not in_domain_S(tuple(z), data.beta_bar, tol=face_tol):
        raise DomainError(f"z0={z0} outside S")

    n = int(np.ceil(horizon / dt - 1e-12))
    ts = np.minimum(dt * np.arange(n + 1), horizon)
    zs = np.empty((n + 1, 2))
    ys = np.zeros((n + 1, 2))
    zs[0] = z
    y1 = y2 = 0.0
    corner_time = None
    lam, xi = data.lam, data.xi
    col1 = data.r_matrix[:, 0]
    col2 = data.r_matrix[:, 1]
    push2_rate = -(col2[0] + 2.0 * col2[1])

    for k in range(n):
        t = ts[k]
        step = ts[k + 1] - t
        q0, q01 = data.measure_weight(t)
        if not (0.0 <= q0 <= q01 <= 1.0):
            raise DomainError(f"measure weights ({q0}, {q01}) invalid at t={t}")
        exch = lam * q0 if z[0] > face_tol else 0.0
        drift = data.theta + data.a_matrix @ z
        drift[0] += exch
        drift[1] += -xi * q01 - exch
        z = z + step * drift

        if z[0] < 0.0:
            dy1 = -z[0] / col1[0]
            z = z + col1 * dy1
            z[0] = 0.0
            y1 += dy1
        load = z[0] + 2.0 * z[1]
        if load > data.beta_bar:
            if z[0] <= face_tol:
                corner_time = ts[k + 1]
                zs[k + 1] = z
                ys[k + 1] = (y1, y2)
                n = k + 1
                break
            dy2 = (load - data.beta_bar) / push2_rate
            z = z + col2 * dy2
            y2 += dy2
        zs[k + 1] = z
        ys[k + 1] = (y1, y2)

    return ReflectedSolution(
        ts=ts[: n + 1],
        z=zs[: n + 1],
        y=ys[: n + 1],
        beta_bar=data.beta_bar,
        face_tol=face_tol,
        corner_time=corner_time,
    )
