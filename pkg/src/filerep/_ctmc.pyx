# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled event-loop kernels; semantics match filerep._ctmc_py exactly.

Uniform randoms are drawn from the caller's numpy Generator in blocks of
BLOCK and consumed in the same order as the pure-Python kernel, so paths are
bit-identical across backends for a given seed.
"""

from libc.math cimport log

import numpy as np

BLOCK = 1 << 16

cdef Py_ssize_t _BLOCK = BLOCK


def run_events(double lam_n, double xi_n, double mu, long long f_n,
               long long x0, long long x1, long long x2,
               double horizon, object rng, long long stop_m_le=-1):
    """See filerep._ctmc_py.run_events."""
    cdef Py_ssize_t cap = 1 << 14
    times_arr = np.empty(cap, dtype=np.float64)
    kinds_arr = np.empty(cap, dtype=np.uint8)
    cdef double[::1] times = times_arr
    cdef unsigned char[::1] kinds = kinds_arr
    cdef Py_ssize_t n = 0

    buf_arr = rng.random(BLOCK)
    cdef double[::1] buf = buf_arr
    cdef Py_ssize_t idx = 0

    cdef double t = 0.0
    cdef double t_next, u, r, total, r_adm, r_dup, r_dl, r_sl
    cdef double stopped_at = -1.0
    cdef long long m
    cdef int kind
    cdef bint frozen = False

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

        if idx == _BLOCK:
            buf_arr = rng.random(BLOCK)
            buf = buf_arr
            idx = 0
        u = buf[idx]
        idx += 1
        t_next = t - log(1.0 - u) / total
        if t_next > horizon:
            break

        if idx == _BLOCK:
            buf_arr = rng.random(BLOCK)
            buf = buf_arr
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
            new_times = np.empty(cap, dtype=np.float64)
            new_kinds = np.empty(cap, dtype=np.uint8)
            new_times[:n] = times_arr[:n]
            new_kinds[:n] = kinds_arr[:n]
            times_arr = new_times
            kinds_arr = new_kinds
            times = times_arr
            kinds = kinds_arr
        times[n] = t
        kinds[n] = kind
        n += 1

        if stop_m_le >= 0 and f_n >= 0 and (f_n - x1 - 2 * x2) <= stop_m_le:
            stopped_at = t
            break

    return times_arr[:n].copy(), kinds_arr[:n].copy(), (x0, x1, x2), frozen, stopped_at


def run_grid(double lam_n, double xi_n, double mu, long long f_n,
             long long x0, long long x1, long long x2,
             double horizon, object rng, Py_ssize_t n_grid, double grid_dt):
    """See filerep._ctmc_py.run_grid."""
    gx0_arr = np.empty(n_grid + 1, dtype=np.int64)
    gx1_arr = np.empty(n_grid + 1, dtype=np.int64)
    gx2_arr = np.empty(n_grid + 1, dtype=np.int64)
    cdef long long[::1] gx0 = gx0_arr
    cdef long long[::1] gx1 = gx1_arr
    cdef long long[::1] gx2 = gx2_arr
    cdef Py_ssize_t g = 0

    buf_arr = rng.random(BLOCK)
    cdef double[::1] buf = buf_arr
    cdef Py_ssize_t idx = 0

    cdef double t = 0.0
    cdef double t_next, u, r, total, r_adm, r_dup, r_dl, r_sl, fill_to
    cdef long long m, n_events = 0
    cdef bint frozen = False

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

        if idx == _BLOCK:
            buf_arr = rng.random(BLOCK)
            buf = buf_arr
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

        if idx == _BLOCK:
            buf_arr = rng.random(BLOCK)
            buf = buf_arr
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

    return gx0_arr, gx1_arr, gx2_arr, n_events, (x0, x1, x2), frozen
