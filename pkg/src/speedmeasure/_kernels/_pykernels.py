"""Pure-Python path kernels, line-for-line twins of the compiled ones.

Uniforms come from ``Generator(bitgen).random`` in blocks; since numpy's
``random()`` and the C ``next_double`` share the same 53-bit conversion, the
two backends consume identical streams and return bit-identical paths.
"""
from __future__ import annotations

import math

import numpy as np

ST_HORIZON, ST_EXIT, ST_ABSORBED, ST_ESCAPED = 0, 1, 2, 3
EDGE_REFLECT, EDGE_ABSORB, EDGE_ESCAPE = 0, 1, 2

_BLOCK = 4096


class _Uniforms:
    def __init__(self, bitgen):
        self._gen = np.random.Generator(bitgen)
        self._buf: list[float] = []
        self._pos = 0

    def __call__(self) -> float:
        if self._pos == len(self._buf):
            self._buf = self._gen.random(_BLOCK).tolist()
            self._pos = 0
        u = self._buf[self._pos]
        self._pos += 1
        return u


def _pack(ts, xs, status):
    return np.asarray(ts, dtype=np.float64), np.asarray(xs, dtype=np.float64), status


def chain_path(hold, up, start, horizon, stop_lo, stop_hi, grid, record_all, bitgen):
    """Simulate one continuous-time birth-death path.

    Exponential holding with the node's mean, then a step up with
    probability ``up[idx]``.  With ``record_all`` every jump is recorded (plus
    the horizon end point); otherwise the state is sampled on ``grid``.  An
    exit from the stop index range appends the exit event ``(t, idx)``.
    """
    rand = _Uniforms(bitgen)
    hold = np.asarray(hold).tolist()
    up = np.asarray(up).tolist()
    grid = np.asarray(grid).tolist()
    ng = len(grid)
    ts: list[float] = []
    xs: list[float] = []
    idx = int(start)
    j = 0
    t = 0.0
    status = ST_HORIZON
    if record_all:
        ts.append(0.0)
        xs.append(float(idx))
    while True:
        if idx <= stop_lo or idx >= stop_hi:
            status = ST_EXIT
            break
        h = hold[idx]
        if math.isinf(h):
            status = ST_ABSORBED
            break
        u = rand()
        tn = t - h * math.log(1.0 - u)
        if tn >= horizon:
            status = ST_HORIZON
            break
        if not record_all:
            while j < ng and grid[j] < tn:
                ts.append(grid[j])
                xs.append(float(idx))
                j += 1
        u = rand()
        if u < up[idx]:
            idx += 1
        else:
            idx -= 1
        t = tn
        if record_all:
            ts.append(t)
            xs.append(float(idx))
    if status == ST_EXIT:
        if not record_all:
            ts.append(t)
            xs.append(float(idx))
    else:
        if record_all:
            if horizon > t and not math.isinf(horizon):
                ts.append(horizon)
                xs.append(float(idx))
        else:
            while j < ng:
                ts.append(grid[j])
                xs.append(float(idx))
                j += 1
            if math.isinf(horizon) and t > grid[ng - 1]:
                ts.append(t)
                xs.append(float(idx))
    return _pack(ts, xs, status)


def _crossed(rand, level, x, y, dt):
    p = math.exp(-2.0 * (x - level) * (y - level) / dt)
    if p > 1e-12:
        return rand() < p
    return False


def timechange_path(
    x0, horizon, dt, bin_lo, bw, rate, atom_at, atom_rate,
    lo, lo_kind, lo_rate, hi, hi_kind, hi_rate, stop_lo, stop_hi, grid, bitgen,
):
    """Simulate one time-changed Brownian path.

    Per driver step the clock ``T`` advances by the local-time increments of
    the sticky boundary window, the atom windows and the density bin, in that
    order; grid times falling inside each increment see the value attached to
    it (boundary, atom location, driver position).  Returns
    ``(times, values, status)``.
    """
    rand = _Uniforms(bitgen)
    rate = np.asarray(rate).tolist()
    atom_at = np.asarray(atom_at).tolist()
    atom_rate = np.asarray(atom_rate).tolist()
    grid = np.asarray(grid).tolist()
    ng, nb, na = len(grid), len(rate), len(atom_at)
    ts: list[float] = []
    xs: list[float] = []
    j = 0
    T = 0.0
    B = x0
    half = 0.5 * bw
    sdt = math.sqrt(dt)
    spare = 0.0
    have_spare = False
    status = ST_HORIZON
    exit_val = 0.0

    def fill(until, value):
        nonlocal j
        while j < ng and grid[j] < until:
            ts.append(grid[j])
            xs.append(value)
            j += 1

    if x0 <= stop_lo or x0 >= stop_hi:
        ts.append(0.0)
        xs.append(x0)
        return _pack(ts, xs, ST_EXIT)
    while True:
        if lo_rate > 0.0 and B < lo + half:
            seg = dt * lo_rate
            fill(T + seg, lo)
            T += seg
        if hi_rate > 0.0 and B > hi - half:
            seg = dt * hi_rate
            fill(T + seg, hi)
            T += seg
        for i in range(na):
            if abs(B - atom_at[i]) < half:
                seg = dt * atom_rate[i]
                fill(T + seg, atom_at[i])
                T += seg
        k = math.floor((B - bin_lo) / bw)
        if k < 0:
            k = 0
        elif k >= nb:
            k = nb - 1
        seg = dt * rate[k]
        fill(T + seg, B)
        T += seg
        if T >= horizon and j >= ng:
            status = ST_HORIZON
            break
        if have_spare:
            z = spare
            have_spare = False
        else:
            while True:
                u1 = 2.0 * rand() - 1.0
                u2 = 2.0 * rand() - 1.0
                s = u1 * u1 + u2 * u2
                if s < 1.0 and s > 0.0:
                    break
            f = math.sqrt(-2.0 * math.log(s) / s)
            z = u1 * f
            spare = u2 * f
            have_spare = True
        Bn = B + sdt * z
        if Bn <= stop_lo or (not math.isinf(stop_lo) and _crossed(rand, stop_lo, B, Bn, dt)):
            status = ST_EXIT
            exit_val = stop_lo
            break
        if Bn >= stop_hi or (not math.isinf(stop_hi) and _crossed(rand, stop_hi, B, Bn, dt)):
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
        ts.append(T)
        xs.append(exit_val)
    elif status == ST_ABSORBED:
        while j < ng:
            ts.append(grid[j])
            xs.append(exit_val)
            j += 1
        if math.isinf(horizon):
            ts.append(T)
            xs.append(exit_val)
    return _pack(ts, xs, status)
