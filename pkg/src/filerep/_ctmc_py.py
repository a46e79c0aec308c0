"""Pure-Python event-loop kernels.

Reference implementation of the hot loops; `filerep._ctmc` is the compiled
twin.  Both consume uniforms from the supplied numpy Generator in blocks of
``BLOCK`` and in the same order (one draw for the waiting time, one for the
transition choice), so a given seed yields bit-identical paths on either
backend.

Transition encoding (fixed across the package):
    0 admission    (x2 += 1)          rate xi*N    requires m >= 2
    1 duplication  (x1 -= 1, x2 += 1) rate lam*N   requires x1 > 0 and m >= 1
    2 double loss  (x1 += 1, x2 -= 1) rate 2*mu*x2
    3 single loss  (x1 -= 1, x0 += 1) rate mu*x1
"""

from math import log

import numpy as np

BLOCK = 1 << 16


def run_events(lam_n, xi_n, mu, f_n, x0, x1, x2, horizon, rng, stop_m_le=-1):
    """Simulate the chain on [0, horizon], recording every event.

    ``f_n < 0`` means infinite capacity.  If ``stop_m_le >= 0`` the run stops
    at the first event after which the free capacity is <= ``stop_m_le``.

    Returns ``(times, kinds, final_state, frozen, stopped_at)`` where
    ``stopped_at`` is -1.0 unless the stop rule fired.
    """
    cap = 1 << 14
    times = np.empty(cap, dtype=np.float64)
    kinds = np.empty(cap, dtype=np.uint8)
    n = 0

    buf = rng.random(BLOCK)
    idx = 0
    t = 0.0
    frozen = False
    stopped_at = -1.0

    while True:
        if f_n >= 0:
            m = f_n - x1 - 2 * x2
            r_adm = xi_n if m >= 2 else 0.0
            r_dup = lam_n if (x1 > 0 and m >= 1) else 0.0
        else:
            r_adm = xi_n
            r_dup = lam_n if x1 > 0 else 0.0
        r_dl = 2.0 * mu * x2
        r_sl = mu * x1
        total = r_adm + r_dup + r_dl + r_sl
        if total <= 0.0:
            frozen = True
            break

        if idx == BLOCK:
            buf = rng.random(BLOCK)
            idx = 0
        u = buf[idx]
        idx += 1
        t_next = t - log(1.0 - u) / total
        if t_next > horizon:
            break

        if idx == BLOCK:
            buf = rng.random(BLOCK)
            idx = 0
        r = buf[idx] * total
        idx += 1
        if r < r_adm:
            kind = 0
            x2 += 1
        elif r < r_adm + r_dup:
            kind = 1
            x1 -= 1
            x2 += 1
        elif r < r_adm + r_dup + r_dl:
            kind = 2
            x1 += 1
            x2 -= 1
        else:
            kind = 3
            x1 -= 1
            x0 += 1
        t = t_next

        if n == cap:
            cap *= 2
            times = np.resize(times, cap)
            kinds = np.resize(kinds, cap)
        times[n] = t
        kinds[n] = kind
        n += 1

        if stop_m_le >= 0 and f_n >= 0 and (f_n - x1 - 2 * x2) <= stop_m_le:
            stopped_at = t
            break

    return times[:n].copy(), kinds[:n].copy(), (x0, x1, x2), frozen, stopped_at


def run_grid(lam_n, xi_n, mu, f_n, x0, x1, x2, horizon, rng, n_grid, grid_dt):
    """Simulate on [0, horizon], recording the state at i*grid_dt only.

    The recorded state is right-continuous: grid point tau carries the state
    after all events with time <= tau.  Returns
    ``(gx0, gx1, gx2, n_events, final_state, frozen)`` with arrays of length
    ``n_grid + 1``.
    """
    gx0 = np.empty(n_grid + 1, dtype=np.int64)
    gx1 = np.empty(n_grid + 1, dtype=np.int64)
    gx2 = np.empty(n_grid + 1, dtype=np.int64)
    g = 0

    buf = rng.random(BLOCK)
    idx = 0
    t = 0.0
    n_events = 0
    frozen = False

    while True:
        if f_n >= 0:
            m = f_n - x1 - 2 * x2
            r_adm = xi_n if m >= 2 else 0.0
            r_dup = lam_n if (x1 > 0 and m >= 1) else 0.0
        else:
            r_adm = xi_n
            r_dup = lam_n if x1 > 0 else 0.0
        r_dl = 2.0 * mu * x2
        r_sl = mu * x1
        total = r_adm + r_dup + r_dl + r_sl
        if total <= 0.0:
            frozen = True
            break

        if idx == BLOCK:
            buf = rng.random(BLOCK)
            idx = 0
        u = buf[idx]
        idx += 1
        t_next = t - log(1.0 - u) / total
        fill_to = horizon if t_next > horizon else t_next
        while g <= n_grid and g * grid_dt < fill_to:
            gx0[g] = x0
            gx1[g] = x1
            gx2[g] = x2
            g += 1
        if t_next > horizon:
            break

        if idx == BLOCK:
            buf = rng.random(BLOCK)
            idx = 0
        r = buf[idx] * total
        idx += 1
        if r < r_adm:
            x2 += 1
        elif r < r_adm + r_dup:
            x1 -= 1
            x2 += 1
        elif r < r_adm + r_dup + r_dl:
            x1 += 1
            x2 -= 1
        else:
            x1 -= 1
            x0 += 1
        t = t_next
        n_events += 1

    while g <= n_grid:
        gx0[g] = x0
        gx1[g] = x1
        gx2[g] = x2
        g += 1

    return gx0, gx1, gx2, n_events, (x0, x1, x2), frozen
