"""Numba kernels for the explicit-Euler device integration.

Parameter rows are packed as float64 arrays in the order given by
``PARAM_FIELDS`` so that a whole set of cells can be advanced in one call.
"""

import math

import numpy as np
from numba import njit

PARAM_FIELDS = ("r_on", "r_off", "v_set_th", "v_reset_th",
                "k_set", "k_reset", "alpha_set", "alpha_reset")


def substep_count(width, dt):
    """Number of Euler sub-steps and the (possibly shorter) final step."""
    n = max(1, int(math.ceil(width / dt - 1e-9)))
    last = width - (n - 1) * dt
    return n, last


@njit(cache=True, inline="always")
def _power(od, a):
    # integer exponents are by far the common case and pow() is slow
    if a == 1.0:
        return od
    if a == 2.0:
        return od * od
    return od ** a


@njit(cache=True)
def _rate(x, v, p):
    vset = p[2]
    vreset = p[3]
    if v > vset:
        od = (v - vset) / vset
        return p[4] * _power(od, p[6]) * (1.0 - x)
    if v < vreset:
        od = (vreset - v) / -vreset
        return -p[5] * _power(od, p[7]) * x
    return 0.0


@njit(cache=True)
def _conductance(x, p):
    return x / p[0] + (1.0 - x) / p[1]


@njit(cache=True)
def _clamp(x):
    if x < 0.0:
        return 0.0
    if x > 1.0:
        return 1.0
    return x


@njit(cache=True)
def single_pulse(x0, p, amplitude, n, dt, last):
    """Drive one bare device at a constant voltage; return x and samples."""
    t = np.empty(n + 1)
    v = np.empty(n + 1)
    i = np.empty(n + 1)
    x = x0
    t[0] = 0.0
    v[0] = amplitude
    i[0] = amplitude * _conductance(x, p)
    now = 0.0
    for k in range(n):
        h = dt if k < n - 1 else last
        x = _clamp(x + h * _rate(x, amplitude, p))
        now += h
        t[k + 1] = now
        v[k + 1] = amplitude
        i[k + 1] = amplitude * _conductance(x, p)
    return x, t, v, i


@njit(cache=True)
def _solve(x, P, drive, floating, col_driven, r_sel, g_load, v_load, vcell, icell):
    m = x.shape[0]
    num = g_load * v_load
    den = g_load
    any_float = False
    for b in range(m):
        r = 1.0 / _conductance(x[b], P[b])
        rb = r + r_sel
        # stash the device share of the branch resistance for the second pass
        vcell[b] = r / rb
        icell[b] = 1.0 / rb
        if floating[b]:
            any_float = True
            num += drive[b] * icell[b]
            den += icell[b]
    v_bus = num / den if any_float and den > 0.0 else 0.0
    for b in range(m):
        if floating[b]:
            if col_driven[b]:
                vb = v_bus - drive[b]
            else:
                vb = drive[b] - v_bus
        else:
            vb = drive[b]
        vcell[b] = vb * vcell[b]
        icell[b] = vb * icell[b]


@njit(cache=True)
def network_pulse(x0, P, drive, floating, col_driven, r_sel, g_load, v_load, n, dt, last):
    """Advance a set of selected cells through one program step.

    Non-floating branches see ``drive`` (row minus column voltage) across the
    selector/device pair. Floating branches have one terminal tied to a shared
    node whose voltage is re-solved from KCL at every sub-step; an optional
    peripheral load (conductance ``g_load`` to ``v_load``) also ties to it.
    Returns final states and per-branch device energy (trapezoidal rule).
    """
    m = x0.shape[0]
    x = x0.copy()
    energy = np.zeros(m)
    vcell = np.empty(m)
    icell = np.empty(m)
    p_prev = np.empty(m)
    _solve(x, P, drive, floating, col_driven, r_sel, g_load, v_load, vcell, icell)
    for b in range(m):
        p_prev[b] = vcell[b] * icell[b]
    for k in range(n):
        h = dt if k < n - 1 else last
        for b in range(m):
            x[b] = _clamp(x[b] + h * _rate(x[b], vcell[b], P[b]))
        _solve(x, P, drive, floating, col_driven, r_sel, g_load, v_load, vcell, icell)
        for b in range(m):
            p = vcell[b] * icell[b]
            energy[b] += 0.5 * h * (p_prev[b] + p)
            p_prev[b] = p
    return x, energy


@njit(cache=True)
def batch_pulse(x0, P, amplitude, r_sel, n, dt, last):
    """Independent driven cells (no shared node); final states only.

    Algebraically the same update as ``single_pulse`` behind a selector,
    rearranged to one division per sub-step.
    """
    m = x0.shape[0]
    out = np.empty(m)
    for b in range(m):
        x = x0[b]
        g_on = 1.0 / P[b, 0]
        g_off = 1.0 / P[b, 1]
        vset, vreset = P[b, 2], P[b, 3]
        inv_set, inv_reset = 1.0 / vset, 1.0 / vreset
        kset, kreset = P[b, 4], P[b, 5]
        aset, areset = P[b, 6], P[b, 7]
        for k in range(n):
            h = dt if k < n - 1 else last
            g = x * g_on + (1.0 - x) * g_off
            v = amplitude / (1.0 + r_sel * g)
            if v > vset:
                dx = kset * _power(v * inv_set - 1.0, aset) * (1.0 - x)
            elif v < vreset:
                dx = -kreset * _power(v * inv_reset - 1.0, areset) * x
            else:
                break
            if dx == 0.0:
                break
            x = _clamp(x + h * dx)
        out[b] = x
    return out
