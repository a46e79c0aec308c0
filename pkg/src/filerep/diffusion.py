"""Diffusion-scale fluctuations: centered paths and coefficient estimation.

Under-loaded networks fluctuate around N*rho on the sqrt(N) scale: the
centered load Z = (X1 + 2 X2 - N rho)/sqrt(N) behaves like an
Ornstein-Uhlenbeck process with drift -mu Z, second-order generator
coefficient lam + 3 xi, and stationary variance (lam + 3 xi)/mu.  At
criticality the triple (Z1, Z2, Z) of centered coordinates is the analogue
reflected at the hard floor Z >= sqrt(N)(beta_bar - F_N/N).

The estimators here regress conditional increment moments over a small lag,
restricted to the interior in the critical case where reflection would bias
them.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, ParameterError, RegimeError
from .model import ModelParams, Regime, classify_regime, equilibrium_point, rho
from .paths import GridPath


@dataclass
class CenteredPath:
    """sqrt(N)-scale fluctuation samples on a uniform grid."""

    ts: np.ndarray
    z: np.ndarray
    n: int
    regime: Regime
    z1: np.ndarray | None = None
    z2: np.ndarray | None = None
    floor: float | None = None

    @property
    def grid_dt(self) -> float:
        return float(self.ts[1] - self.ts[0])

    def write_csv(self, fileobj, precision: int = 12) -> None:
        writer = csv.writer(fileobj)
        fmt = f"{{:.{precision}g}}"
        if self.z1 is None:
            writer.writerow(["t", "z"])
            for i in range(len(self.ts)):
                writer.writerow([fmt.format(self.ts[i]), fmt.format(self.z[i])])
        else:
            writer.writerow(["t", "z1", "z2", "z"])
            for i in range(len(self.ts)):
                writer.writerow(
                    [
                        fmt.format(self.ts[i]),
                        fmt.format(self.z1[i]),
                        fmt.format(self.z2[i]),
                        fmt.format(self.z[i]),
                    ]
                )


def _grid_slice(path: GridPath, burn_in: float):
    if burn_in < 0 or burn_in >= path.horizon:
        raise DomainError(f"burn_in={burn_in} outside [0, horizon)")
    k0 = int(math.ceil(burn_in / path.grid_dt - 1e-9))
    return path.ts[k0:], path.x1[k0:], path.x2[k0:]


def centered_underloaded(
    path: GridPath, params: ModelParams, n: int, burn_in: float = 0.0
) -> CenteredPath:
    """Z(t) = (X1 + 2 X2 - N rho)/sqrt(N) on the path's grid."""
    if classify_regime(params) is not Regime.UNDER_LOADED:
        raise RegimeError("centered load is defined for the under-loaded regime")
    ts, x1, x2 = _grid_slice(path, burn_in)
    z = (x1 + 2 * x2 - n * rho(params)) / math.sqrt(n)
    return CenteredPath(ts=ts, z=z, n=n, regime=Regime.UNDER_LOADED)


def centered_critical(
    path: GridPath, params: ModelParams, n: int, burn_in: float = 0.0
) -> CenteredPath:
    """(Z1, Z2, Z) = sqrt(N)(rho_i - Xi/N) with Z = Z1 + 2 Z2 >= floor."""
    if classify_regime(params) is not Regime.CRITICAL:
        raise RegimeError("centered triple is defined for the critical regime")
    if not path.scaled.finite:
        raise DomainError("critical centering requires finite capacity")
    ts, x1, x2 = _grid_slice(path, burn_in)
    rho1, rho2 = equilibrium_point(params)
    sq = math.sqrt(n)
    z1 = sq * (rho1 - x1 / n)
    z2 = sq * (rho2 - x2 / n)
    z = z1 + 2.0 * z2
    floor = sq * (params.beta_bar - path.scaled.f_n / n)
    return CenteredPath(
        ts=ts, z=z, n=n, regime=Regime.CRITICAL, z1=z1, z2=z2, floor=floor
    )


def stationary_variance(cpath: CenteredPath) -> float:
    """Time-average variance of Z over the sampled grid."""
    return float(cpath.z.var())


def autocorrelation(cpath: CenteredPath, lag: float) -> float:
    """Empirical corr(Z_t, Z_{t+lag}); e^{-mu lag} for a stationary OU."""
    stride = _stride(cpath, lag)
    a = cpath.z[:-stride]
    b = cpath.z[stride:]
    return float(np.corrcoef(a, b)[0, 1])


def _stride(cpath: CenteredPath, lag: float) -> int:
    stride = int(round(lag / cpath.grid_dt))
    if stride < 1 or abs(stride * cpath.grid_dt - lag) > 1e-9 * max(1.0, lag):
        raise DomainError(f"lag {lag} is not a multiple of the grid spacing {cpath.grid_dt}")
    return stride


@dataclass
class DriftDiffusionFit:
    """OLS fit of E[dZ | Z]/lag = a + b Z and the residual-based diffusion."""

    slope: float
    slope_se: float
    intercept: float
    intercept_se: float
    diffusion: float
    diffusion_se: float
    lag: float
    n_samples: int


def empirical_drift_diffusion(
    cpath: CenteredPath, lag: float, interior_only: bool = False
) -> DriftDiffusionFit:
    """Estimate the OU drift line and diffusion constant from increments.

    ``interior_only`` drops increments starting within 3/sqrt(N) of the
    reflection floor (critical regime), where the free generator does not
    apply.  The diffusion constant is Var[dZ | Z]/(2 lag), matching the
    second-order generator coefficient.
    """
    stride = _stride(cpath, lag)
    z0 = cpath.z[:-stride]
    dz = cpath.z[stride:] - z0
    if interior_only:
        if cpath.floor is None:
            raise DomainError("interior_only requires a path with a reflection floor")
        keep = z0 > cpath.floor + 3.0 / math.sqrt(cpath.n)
        z0, dz = z0[keep], dz[keep]
    n = len(z0)
    if n < 100:
        raise DomainError(f"only {n} interior increments; not enough to regress")

    x = np.column_stack((np.ones(n), z0))
    rate = dz / lag
    coef, *_ = np.linalg.lstsq(x, rate, rcond=None)
    resid = rate - x @ coef
    dof = n - 2
    sigma2 = float(resid @ resid) / dof
    cov = sigma2 * np.linalg.inv(x.T @ x)
    diffusion = 0.5 * lag * sigma2  # Var[dZ|Z]/(2 lag)
    # Relative error of a variance estimate ~ sqrt(2/dof) for near-Gaussian
    # residuals; increments over one lag are nearly independent.
    diffusion_se = diffusion * math.sqrt(2.0 / dof)
    return DriftDiffusionFit(
        slope=float(coef[1]),
        slope_se=float(math.sqrt(cov[1, 1])),
        intercept=float(coef[0]),
        intercept_se=float(math.sqrt(cov[0, 0])),
        diffusion=diffusion,
        diffusion_se=diffusion_se,
        lag=lag,
        n_samples=n,
    )


@dataclass
class DriftMatrixFit:
    """Least-squares drift matrix of (Z1, Z2) against two candidate forms."""

    estimate: np.ndarray
    candidate_a: np.ndarray
    candidate_b: np.ndarray
    rss_a: float
    rss_b: float
    better: str
    n_samples: int


def drift_matrix_fit(cpath: CenteredPath, params: ModelParams, lag: float) -> DriftMatrixFit:
    """Fit E[d(Z1,Z2) | Z]/lag = A (Z1, Z2) and compare two candidates.

    Candidate A couples dZ2/dt to -2 mu Z2 (relaxation of the two-copy
    count); candidate B couples it to -2 mu Z1.  The report states which
    one the data prefers; nothing is asserted.
    """
    if cpath.z1 is None:
        raise DomainError("drift matrix fit needs the critical centered triple")
    stride = _stride(cpath, lag)
    keep = cpath.z[:-stride] > (cpath.floor or 0.0) + 3.0 / math.sqrt(cpath.n)
    z = np.column_stack((cpath.z1[:-stride], cpath.z2[:-stride]))[keep]
    dz = (
        np.column_stack((cpath.z1[stride:], cpath.z2[stride:]))[keep]
        - z
    ) / lag
    if len(z) < 100:
        raise DomainError(f"only {len(z)} interior increments; not enough to regress")
    coef, *_ = np.linalg.lstsq(z, dz, rcond=None)
    estimate = coef.T  # rows: equations for dZ1, dZ2

    mu = params.mu
    cand_a = np.array([[-mu, 2.0 * mu], [0.0, -2.0 * mu]])
    cand_b = np.array([[-mu, 2.0 * mu], [-2.0 * mu, 0.0]])

    def rss(a_mat):
        pred = z @ a_mat.T
        return float(((dz - pred) ** 2).sum())

    rss_a, rss_b = rss(cand_a), rss(cand_b)
    return DriftMatrixFit(
        estimate=estimate,
        candidate_a=cand_a,
        candidate_b=cand_b,
        rss_a=rss_a,
        rss_b=rss_b,
        better="a" if rss_a <= rss_b else "b",
        n_samples=len(z),
    )
