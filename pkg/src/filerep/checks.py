"""Machine-readable verification checks wrapping the analysis modules.

Each function returns a verdict dict with ``check``, ``passed`` and a
``details`` block holding every number that went into the decision, so the
CLI can emit a JSON document and the acceptance suite can print one line
per criterion.  Checks whose regime precondition fails return
``skipped=True`` with the violated precondition named.
"""

from __future__ import annotations

import math

import numpy as np

from . import diffusion, fastchain, fluid, martingales
from .errors import RegimeError
from .model import (
    INFINITE,
    ModelParams,
    Regime,
    ScaledParams,
    classify_regime,
    equilibrium_point,
    rho,
)
from .simulate import initial_state_from_scaled, simulate_grid, simulate_path


def _skip(name: str, reason: str) -> dict:
    return {"check": name, "skipped": True, "reason": reason}


# ---------------------------------------------------------------------------
# fluid comparison
# ---------------------------------------------------------------------------

def compare_distances(
    params: ModelParams,
    x0_scaled: tuple[float, float],
    n: int,
    horizon: float,
    seed: int,
    replicas: int,
    grid_dt: float = 0.01,
    f_n=None,
) -> np.ndarray:
    """Per-replica sup-norm distance between scaled paths and the fluid limit.

    Distance is the max over the shared grid of the larger coordinate
    deviation.
    """
    scaled = ScaledParams(n=n, f_n=round(params.beta_bar * n) if f_n is None else f_n)
    init = initial_state_from_scaled(*x0_scaled, n)
    traj = fluid.fluid_trajectory(params, x0_scaled, horizon, dt=grid_dt)
    n_grid = int(round(horizon / grid_dt))
    ts = grid_dt * np.arange(n_grid + 1)
    ref1 = np.interp(ts, traj.ts, traj.x1)
    ref2 = np.interp(ts, traj.ts, traj.x2)
    out = np.empty(replicas)
    for r in range(replicas):
        gp = simulate_grid(params, scaled, init, horizon, seed, grid_dt, replica=r)
        s1, s2 = gp.scaled_arrays()
        out[r] = max(
            float(np.abs(s1 - ref1).max()),
            float(np.abs(s2 - ref2).max()),
        )
    return out


def check_compare(
    params: ModelParams,
    x0_scaled: tuple[float, float],
    seed: int,
    n: int = 10_000,
    n_small: int = 100,
    horizon: float = math.log(2.0),
    replicas: int = 20,
    grid_dt: float = 0.01,
    dist_tol: float = 0.05,
    min_within: int = 18,
    pair_fraction: float = 0.9,
) -> dict:
    """Fluid convergence: sup distances at N and the monotone trend vs N_small."""
    d_big = compare_distances(params, x0_scaled, n, horizon, seed, replicas, grid_dt)
    d_small = compare_distances(params, x0_scaled, n_small, horizon, seed, replicas, grid_dt)
    within = int((d_big < dist_tol).sum())
    dominated = int((d_small > d_big).sum())
    passed = within >= min_within and dominated >= math.ceil(pair_fraction * replicas)
    return {
        "check": "compare",
        "skipped": False,
        "passed": bool(passed),
        "details": {
            "n": n,
            "n_small": n_small,
            "replicas": replicas,
            "dist_big": d_big.tolist(),
            "dist_small": d_small.tolist(),
            "within_tol": within,
            "small_exceeds_big": dominated,
        },
        "tolerances": {
            "dist_tol": dist_tol,
            "min_within": min_within,
            "min_pairs": math.ceil(pair_fraction * replicas),
        },
    }


# ---------------------------------------------------------------------------
# fast chain
# ---------------------------------------------------------------------------

def check_fastchain(
    params: ModelParams,
    seed: int,
    n_max: int = 200,
    tail_tol: float = 1e-10,
    mc_horizon: float = 1e4,
    oracle_tol: float = 1e-9,
) -> dict:
    """Closed forms vs the truncated balance solve vs Monte Carlo."""
    if classify_regime(params) is not Regime.OVER_LOADED:
        return _skip("fastchain", "REQUIRES_OVERLOADED")
    pi0, pi1 = fastchain.pi_heads(params)
    dist = fastchain.stationary_distribution(params, n_max=n_max, tol=tail_tol)
    delta0 = abs(pi0 - dist.pi[0])
    delta1 = abs(pi1 - dist.pi[1])
    drift_closed = params.mu * params.beta_bar - params.lam * (1.0 - pi0) - 2.0 * params.xi * (
        1.0 - pi0 - pi1
    )
    drift_solve = dist.mean_drift(params)
    g1 = fastchain.generating_function(params, 1.0)
    g0 = fastchain.generating_function(params, 0.0)

    chain = fastchain.simulate_fast_chain(params, mc_horizon, seed)
    mc_pi0 = chain.occupation_fraction({0})
    batches = chain.batch_fractions({0}, 100)
    mc_se = float(batches.std(ddof=1)) / math.sqrt(len(batches))

    passed = (
        delta0 <= oracle_tol
        and delta1 <= oracle_tol
        and abs(drift_closed) <= 1e-9
        and abs(drift_solve) <= 1e-9
        and abs(mc_pi0 - pi0) <= 3.0 * mc_se
        and abs(g1 - 1.0) <= 1e-12
        and abs(g0 - pi0) <= 1e-12
    )
    return {
        "check": "fastchain",
        "skipped": False,
        "passed": bool(passed),
        "details": {
            "y_star": fastchain.y_star(params),
            "pi0_closed": pi0,
            "pi1_closed": pi1,
            "pi0_solve": float(dist.pi[0]),
            "pi1_solve": float(dist.pi[1]),
            "delta0": delta0,
            "delta1": delta1,
            "tail_mass": dist.tail_mass,
            "drift_residual_closed": drift_closed,
            "drift_residual_solve": drift_solve,
            "mc_pi0": mc_pi0,
            "mc_se": mc_se,
            "g_at_1": g1,
            "g_at_0": g0,
        },
        "tolerances": {"oracle": oracle_tol, "drift": 1e-9, "mc_sigmas": 3, "g": 1e-12},
    }


# ---------------------------------------------------------------------------
# hitting times
# ---------------------------------------------------------------------------

def check_hitting(
    params: ModelParams,
    x0_scaled: tuple[float, float],
    seed: int,
    n: int = 10_000,
    mean_replicas: int = 200,
    exp_replicas: int = 500,
    var_n_list: tuple[int, ...] = (100, 1000, 10_000),
    var_replicas: int = 400,
    mean_tol: float = 0.02,
) -> dict:
    """T1 concentration around T0 and the exponential-moment identities."""
    if classify_regime(params) is not Regime.OVER_LOADED:
        return _skip("hitting", "REQUIRES_OVERLOADED")
    load = x0_scaled[0] + 2.0 * x0_scaled[1]
    if load >= params.beta_bar:
        return _skip("hitting", "REQUIRES_INTERIOR_START")

    t0 = fluid.hitting_time_T0(params, x0_scaled)
    t1 = martingales.sample_hitting_times(params, n, x0_scaled, mean_replicas, seed)
    mean_gap = abs(float(t1.mean()) - t0)

    t1_exp = martingales.sample_hitting_times(params, n, x0_scaled, exp_replicas, seed + 1)
    e_mu = np.exp(params.mu * t1_exp)
    rhs1, rhs2 = martingales.exp_hitting_identity(params, n, x0_scaled)
    mc_mean = float(e_mu.mean())
    mc_se = float(e_mu.std(ddof=1)) / math.sqrt(exp_replicas)

    scaling = martingales.variance_scaling_check(
        params, x0_scaled, list(var_n_list), var_replicas, seed + 2
    )

    passed = (
        mean_gap <= mean_tol
        and abs(mc_mean - rhs1) <= 3.0 * mc_se
        and scaling.passed
    )
    return {
        "check": "hitting",
        "skipped": False,
        "passed": bool(passed),
        "details": {
            "t0": t0,
            "t1_mean": float(t1.mean()),
            "mean_gap": mean_gap,
            "rhs1": rhs1,
            "rhs2": rhs2,
            "mc_exp_mean": mc_mean,
            "mc_exp_se": mc_se,
            "n_var": scaling.n_var.tolist(),
            "n_var_reference": scaling.reference.tolist(),
            "n_var_ratio": scaling.ratio,
        },
        "tolerances": {"mean_tol": mean_tol, "mc_sigmas": 3, "ratio_bound": 5.0},
    }


# ---------------------------------------------------------------------------
# martingales
# ---------------------------------------------------------------------------

def check_martingale(
    params: ModelParams,
    seed: int,
    n: int = 100,
    replicas: int = 500,
    horizon: float = 1.0,
    x0_scaled: tuple[float, float] = (0.5, 0.25),
    sweep: int = 100,
    residual_tol: float = 1e-6,
) -> dict:
    """Harmonic residual sweep plus drift tests for the polynomial family."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    n_res = 50
    for _ in range(sweep):
        c = float(rng.uniform(-0.3, 0.5))
        if abs(c) < 1e-3:
            c = 0.05
        t = float(rng.uniform(0.0, 1.0))
        w = (int(rng.integers(1, 50)), int(rng.integers(0, 50)))
        worst = max(worst, abs(martingales.harmonic_residual(params, n_res, c, t, w)))

    init = initial_state_from_scaled(*x0_scaled, n)
    rep_lin = martingales.drift_test(
        martingales.linear_martingale(), params, n, init, horizon, replicas, seed
    )
    rep_quad = martingales.drift_test(
        martingales.quadratic_martingale(), params, n, init, horizon, replicas, seed
    )
    rep_neg = martingales.drift_test(
        martingales.negative_control(), params, n, init, horizon, replicas, seed
    )

    passed = (
        worst <= residual_tol and rep_lin.passed and rep_quad.passed and not rep_neg.passed
    )
    return {
        "check": "martingale",
        "skipped": False,
        "passed": bool(passed),
        "details": {
            "max_harmonic_residual": worst,
            "linear_passed": rep_lin.passed,
            "quadratic_passed": rep_quad.passed,
            "negative_control_passed": rep_neg.passed,
            "replicas": replicas,
        },
        "tolerances": {"residual": residual_tol, "k_sigmas": 3},
    }


# ---------------------------------------------------------------------------
# diffusion scale
# ---------------------------------------------------------------------------

def check_diffusion(
    params: ModelParams,
    seed: int,
    n: int = 10_000,
    horizon: float | None = None,
    burn_in: float = 5.0,
    grid_dt: float = 0.01,
    lag: float = 0.01,
) -> dict:
    """OU coefficient checks; dispatches on the regime."""
    regime = classify_regime(params)
    if regime is Regime.UNDER_LOADED:
        return _check_diffusion_underloaded(
            params, seed, n, horizon or 200.0, burn_in, grid_dt, lag
        )
    if regime is Regime.CRITICAL:
        return _check_diffusion_critical(
            params, seed, n, horizon or 60.0, burn_in, grid_dt, lag
        )
    return _skip("diffusion", "REQUIRES_UNDER_LOADED_OR_CRITICAL")


def _check_diffusion_underloaded(params, seed, n, horizon, burn_in, grid_dt, lag):
    eq = equilibrium_point(params)
    scaled = ScaledParams.from_model(params, n)
    init = initial_state_from_scaled(*eq, n)
    gp = simulate_grid(params, scaled, init, burn_in + horizon, seed, grid_dt)
    cpath = diffusion.centered_underloaded(gp, params, n, burn_in=burn_in)

    target_var = (params.lam + 3.0 * params.xi) / params.mu
    target_diff = params.lam + 3.0 * params.xi
    var = diffusion.stationary_variance(cpath)
    fit = diffusion.empirical_drift_diffusion(cpath, lag)
    ac = diffusion.autocorrelation(cpath, 10 * grid_dt)

    var_ok = abs(var - target_var) <= 0.10 * target_var
    slope_ok = abs(fit.slope - (-params.mu)) <= 0.15 * params.mu
    diff_ok = abs(fit.diffusion - target_diff) <= 0.15 * target_diff
    return {
        "check": "diffusion",
        "skipped": False,
        "passed": bool(var_ok and slope_ok and diff_ok),
        "details": {
            "regime": "under-loaded",
            "stationary_variance": var,
            "target_variance": target_var,
            "drift_slope": fit.slope,
            "drift_slope_se": fit.slope_se,
            "diffusion": fit.diffusion,
            "diffusion_se": fit.diffusion_se,
            "target_diffusion": target_diff,
            "autocorr_10lags": ac,
            "expected_autocorr": math.exp(-params.mu * 10 * grid_dt),
        },
        "tolerances": {"variance": 0.10, "slope": 0.15, "diffusion": 0.15},
    }


def _check_diffusion_critical(params, seed, n, horizon, burn_in, grid_dt, lag):
    eq = equilibrium_point(params)
    scaled = ScaledParams.from_model(params, n)
    init = initial_state_from_scaled(*eq, n)
    gp = simulate_grid(params, scaled, init, burn_in + horizon, seed, grid_dt)
    cpath = diffusion.centered_critical(gp, params, n, burn_in=burn_in)

    floor_ok = bool(cpath.z.min() >= cpath.floor - 1e-12)
    target_diff = params.lam + 2.5 * params.xi
    fit = diffusion.empirical_drift_diffusion(cpath, lag, interior_only=True)
    diff_ok = abs(fit.diffusion - target_diff) <= 0.20 * target_diff
    matrix = diffusion.drift_matrix_fit(cpath, params, lag)
    return {
        "check": "diffusion",
        "skipped": False,
        "passed": bool(floor_ok and diff_ok),
        "details": {
            "regime": "critical",
            "floor": cpath.floor,
            "z_min": float(cpath.z.min()),
            "diffusion": fit.diffusion,
            "diffusion_se": fit.diffusion_se,
            "target_diffusion": target_diff,
            "drift_matrix_estimate": matrix.estimate.tolist(),
            "drift_matrix_rss_a": matrix.rss_a,
            "drift_matrix_rss_b": matrix.rss_b,
            "drift_matrix_better": matrix.better,
        },
        "tolerances": {"diffusion": 0.20},
    }
