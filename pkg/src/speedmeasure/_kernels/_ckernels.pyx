# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled path kernels.

Both kernels draw uniforms from a numpy ``BitGenerator`` through its C
interface, in exactly the order used by the pure-Python twins in
``_pykernels``; the two backends therefore produce bit-identical paths.
"""
from libc.math cimport log, exp, sqrt, floor, fabs, isinf
from libc.stdlib cimport malloc, realloc, free
from cpython.pycapsule cimport PyCapsule_GetPointer
from numpy.random cimport bitgen_t

import numpy as np

# termination codes and edge kinds shared with the Python backend
cdef enum:
    ST_HORIZON = 0
    ST_EXIT = 1
    ST_ABSORBED = 2
    ST_ESCAPED = 3
    EDGE_REFLECT = 0
    EDGE_ABSORB = 1
    EDGE_ESCAPE = 2


cdef struct Buf:
    double* t
    double* x
    Py_ssize_t n
    Py_ssize_t cap
    int failed


cdef inline void buf_init(Buf* b) noexcept nogil:
    b.cap = 256
    b.n = 0
    b.failed = 0
    b.t = <double*> malloc(b.cap * sizeof(double))
    b.x = <double*> malloc(b.cap * sizeof(double))
    if b.t == NULL or b.x == NULL:
        b.failed = 1


cdef inline void buf_push(Buf* b, double t, double x) noexcept nogil:
    cdef double* nt
    cdef double* nx
    if b.failed:
        return
    if b.n == b.cap:
        b.cap *= 2
        nt = <double*> realloc(b.t, b.cap * sizeof(double))
        if nt == NULL:
            b.failed = 1
            return
        b.t = nt
        nx = <double*> realloc(b.x, b.cap * sizeof(double))
        if nx == NULL:
            b.failed = 1
            return
        b.x = nx
    b.t[b.n] = t
    b.x[b.n] = x
    b.n += 1


cdef object buf_release(Buf* b):
    cdef Py_ssize_t i
    if b.failed:
        free(b.t)
        free(b.x)
        raise MemoryError("path buffer allocation failed")
    ts = np.empty(b.n, dtype=np.float64)
    xs = np.empty(b.n, dtype=np.float64)
    cdef double[::1] tv = ts
    cdef double[::1] xv = xs
    for i in range(b.n):
        tv[i] = b.t[i]
        xv[i] = b.x[i]
    free(b.t)
    free(b.x)
    return ts, xs


cdef inline bitgen_t* _bitgen(object bitgen) except NULL:
    return <bitgen_t*> PyCapsule_GetPointer(bitgen.capsule, "BitGenerator")


def chain_path(const double[::1] hold, const double[::1] up, Py_ssize_t start,
               double horizon, Py_ssize_t stop_lo, Py_ssize_t stop_hi,
               const double[::1] grid, bint record_all, object bitgen):
    """Simulate one continuous-time birth-death path.

    Returns ``(times, node_indices_as_float, status)``.  See the Python
    backend for the exact recording rules.
    """
    cdef bitgen_t* rng = _bitgen(bitgen)
    cdef Buf b
    cdef Py_ssize_t idx = start, j = 0, ng = grid.shape[0]
    cdef double t = 0.0, tn, h, u
    cdef int status = ST_HORIZON
    buf_init(&b)
    with nogil:
        if record_all:
            buf_push(&b, 0.0, <double> idx)
        while True:
            if idx <= stop_lo or idx >= stop_hi:
                status = ST_EXIT
                break
            h = hold[idx]
            if isinf(h):
                status = ST_ABSORBED
                break
            u = rng.next_double(rng.state)
            tn = t - h * log(1.0 - u)
            if tn >= horizon:
                status = ST_HORIZON
                break
            if not record_all:
                while j < ng and grid[j] < tn:
                    buf_push(&b, grid[j], <double> idx)
                    j += 1
            u = rng.next_double(rng.state)
            if u < up[idx]:
                idx += 1
            else:
                idx -= 1
            t = tn
            if record_all:
                buf_push(&b, t, <double> idx)
        if status == ST_EXIT:
            if not record_all:
                buf_push(&b, t, <double> idx)
        else:
            if record_all:
                if horizon > t and not isinf(horizon):
                    buf_push(&b, horizon, <double> idx)
            else:
                while j < ng:
                    buf_push(&b, grid[j], <double> idx)
                    j += 1
                if isinf(horizon) and t > grid[ng - 1]:
                    buf_push(&b, t, <double> idx)
    ts, xs = buf_release(&b)
    return ts, xs, status


cdef inline int fill(Buf* b, const double[::1] grid, Py_ssize_t* j, Py_ssize_t ng,
                     double until, double value) noexcept nogil:
    while j[0] < ng and grid[j[0]] < until:
        buf_push(b, grid[j[0]], value)
        j[0] += 1
    return 0


cdef inline int crossed(bitgen_t* rng, double level, double x, double y, double dt) noexcept nogil:
    """Brownian-bridge test for a crossing of ``level`` between two inside points."""
    cdef double p = exp(-2.0 * (x - level) * (y - level) / dt)
    if p > 1e-12:
        return rng.next_double(rng.state) < p
    return 0


def timechange_path(double x0, double horizon, double dt,
                    double bin_lo, double bw, const double[::1] rate,
                    const double[::1] atom_at, const double[::1] atom_rate,
                    double lo, int lo_kind, double lo_rate,
                    double hi, int hi_kind, double hi_rate,
                    double stop_lo, double stop_hi,
                    const double[::1] grid, object bitgen):
    """Simulate one time-changed Brownian path; returns ``(times, values, status)``."""
    cdef bitgen_t* rng = _bitgen(bitgen)
    cdef Buf b
    cdef Py_ssize_t j = 0, ng = grid.shape[0], nb = rate.shape[0], na = atom_at.shape[0]
    cdef Py_ssize_t k, i
    cdef double T = 0.0, B = x0, Bn, seg, half = 0.5 * bw, sdt = sqrt(dt)
    cdef double u1, u2, s, f, z, spare = 0.0, exit_val = 0.0
    cdef int have_spare = 0, status = ST_HORIZON
    buf_init(&b)
    with nogil:
        if x0 <= stop_lo or x0 >= stop_hi:
            buf_push(&b, 0.0, x0)
            status = ST_EXIT
        else:
            while True:
                if lo_rate > 0.0 and B < lo + half:
                    seg = dt * lo_rate
                    fill(&b, grid, &j, ng, T + seg, lo)
                    T += seg
                if hi_rate > 0.0 and B > hi - half:
                    seg = dt * hi_rate
                    fill(&b, grid, &j, ng, T + seg, hi)
                    T += seg
                for i in range(na):
                    if fabs(B - atom_at[i]) < half:
                        seg = dt * atom_rate[i]
                        fill(&b, grid, &j, ng, T + seg, atom_at[i])
                        T += seg
                k = <Py_ssize_t> floor((B - bin_lo) / bw)
                if k < 0:
                    k = 0
                elif k >= nb:
                    k = nb - 1
                seg = dt * rate[k]
                fill(&b, grid, &j, ng, T + seg, B)
                T += seg
                if T >= horizon and j >= ng:
                    status = ST_HORIZON
                    break
                # driver increment (Marsaglia polar, second variate cached)
                if have_spare:
                    z = spare
                    have_spare = 0
                else:
                    while True:
                        u1 = 2.0 * rng.next_double(rng.state) - 1.0
                        u2 = 2.0 * rng.next_double(rng.state) - 1.0
                        s = u1 * u1 + u2 * u2
                        if s < 1.0 and s > 0.0:
                            break
                    f = sqrt(-2.0 * log(s) / s)
                    z = u1 * f
                    spare = u2 * f
                    have_spare = 1
                Bn = B + sdt * z
                if Bn <= stop_lo or (not isinf(stop_lo) and crossed(rng, stop_lo, B, Bn, dt)):
                    status = ST_EXIT
                    exit_val = stop_lo
                    break
                if Bn >= stop_hi or (not isinf(stop_hi) and crossed(rng, stop_hi, B, Bn, dt)):
                    status = ST_EXIT
                    exit_val = stop_hi
                    break
                if Bn < lo:
                    if lo_kind == EDGE_REFLECT:
                        Bn = 2.0 * lo - Bn
                    elif lo_kind == EDGE_ABSORB:
                        status = ST_ABSORBED
                        exit_val = lo
                        break
                    else:
                        status = ST_ESCAPED
                        break
                if Bn > hi:
                    if hi_kind == EDGE_REFLECT:
                        Bn = 2.0 * hi - Bn
                        if Bn < lo:
                            Bn = lo
                    elif hi_kind == EDGE_ABSORB:
                        status = ST_ABSORBED
                        exit_val = hi
                        break
                    else:
                        status = ST_ESCAPED
                        break
                B = Bn
            if status == ST_EXIT:
                buf_push(&b, T, exit_val)
            elif status == ST_ABSORBED:
                while j < ng:
                    buf_push(&b, grid[j], exit_val)
                    j += 1
                if isinf(horizon):
                    buf_push(&b, T, exit_val)
    ts, xs = buf_release(&b)
    return ts, xs, status
