"""Electrical recipes for the in-array gate primitives.

Every gate is built from program steps that only depend on cell
coordinates. Two kinds of step exist:

* driven steps: every involved line has a fixed voltage; a set of cells
  can be SET, RESET or read in one step;
* divider steps: the lines of the participating cells on one side are
  released from their drivers and tied to a shared floating node through
  the peripheral analog switches, so the cells form a resistive divider.
  When the two cells share a row the columns are driven instead (with
  negated voltages), which produces the same cell voltages.

``conditional_set`` (COPY, and each half of OR2) drives the source with
RESET polarity and the destination with SET polarity: a low-resistance
source pushes the destination over its SET threshold, a high-resistance one
leaves it inside the deadband. ``conditional_reset`` (NOT) drives the source
with SET polarity against a pre-SET destination; a peripheral bias load on
the shared node sets the trip point.
"""

from dataclasses import asdict, dataclass, replace

import numpy as np

from . import _kernels
from .device import DeviceParams
from .exceptions import CalibrationError


@dataclass(frozen=True)
class GateRecipe:
    v_write: float = 2.5
    write_width: float = 1e-6
    v_read: float = 0.2
    read_width: float = 100e-9
    v_copy: float = 1.8
    copy_width: float = 1e-6
    v_not: float = 1.92
    not_load_r: float = 200e3
    not_load_v: float = 19.25
    not_width: float = 1e-6
    max_weak_depth: int = 4
    r_selector_on: float = 1e3
    dt: float = 1e-9

    def violations(self):
        out = []
        for name, value in asdict(self).items():
            if name in ("max_weak_depth",):
                if value < 1:
                    out.append((name, "must be >= 1"))
            elif not np.isfinite(value):
                out.append((name, "must be finite"))
        for name in ("write_width", "read_width", "copy_width", "not_width", "dt",
                     "not_load_r", "v_write", "v_read", "v_copy", "v_not"):
            if getattr(self, name) <= 0:
                out.append((name, "must be > 0"))
        if self.r_selector_on < 0:
            out.append(("r_selector_on", "must be >= 0"))
        return out


@dataclass
class Step:
    """One program step: line voltages, selector mask and timing.

    ``row_v``/``col_v`` entries that are NaN are tied to the step's shared
    floating node. ``bus_load`` is an optional ``(ohms, volts)`` peripheral
    load from that node to a fixed voltage.
    """

    row_v: np.ndarray
    col_v: np.ndarray
    select: np.ndarray
    width: float
    phase: str
    op_id: int
    bus_load: tuple = None

    @classmethod
    def blank(cls, rows, cols, width, phase, op_id):
        return cls(np.zeros(rows), np.zeros(cols), np.zeros((rows, cols), dtype=bool),
                   float(width), phase, int(op_id))

    def cells(self):
        return [tuple(int(v) for v in rc) for rc in np.argwhere(self.select)]


def drive_step(rows, cols, cells, volts, width, phase, op_id):
    """Apply ``volts`` across every cell in ``cells`` (rows driven, columns grounded)."""
    st = Step.blank(rows, cols, width, phase, op_id)
    for r, c in cells:
        st.row_v[r] = volts
        st.select[r, c] = True
    return st


def _divider(rows, cols, src, dst, v_src, v_dst, width, phase, op_id, load=None):
    st = Step.blank(rows, cols, width, phase, op_id)
    st.select[src] = True
    st.select[dst] = True
    if src[0] != dst[0]:
        st.row_v[src[0]] = v_src
        st.row_v[dst[0]] = v_dst
        st.col_v[src[1]] = np.nan
        st.col_v[dst[1]] = np.nan
        st.bus_load = load
    else:
        st.col_v[src[1]] = -v_src
        st.col_v[dst[1]] = -v_dst
        st.row_v[src[0]] = np.nan
        if load is not None:
            st.bus_load = (load[0], -load[1])
    return st


def conditional_set(rows, cols, src, dst, recipe, phase, op_id):
    return _divider(rows, cols, src, dst, -recipe.v_copy, 0.0, recipe.copy_width,
                    phase, op_id)


def conditional_reset(rows, cols, src, dst, recipe, phase, op_id):
    return _divider(rows, cols, src, dst, recipe.v_not, 0.0, recipe.not_width, phase,
                    op_id, load=(recipe.not_load_r, recipe.not_load_v))


# ---------------------------------------------------------------- calibration

def _branch(r, rs):
    return r + rs


def not_margins(recipe, params, r_weak):
    """Initial-voltage margins (volts) of the NOT template.

    Returns ``(hold_out, hold_in, trip)``: how far the pre-SET output and the
    HRS input stay inside the deadband when the input is 0, and how far a
    weak-1 input of ``r_weak`` drives the output past the RESET threshold.
    """
    rs = recipe.r_selector_on
    ro, rh = params.r_on, params.r_off
    a, rl, vl = recipe.v_not, recipe.not_load_r, recipe.not_load_v
    bo, bh, bw = _branch(ro, rs), _branch(rh, rs), _branch(r_weak, rs)
    vb0 = (a / bh + vl / rl) / (1 / bh + 1 / bo + 1 / rl)
    vb1 = (a / bw + vl / rl) / (1 / bw + 1 / bo + 1 / rl)
    hold_out = abs(params.v_reset_th) - vb0 * ro / bo
    hold_in = params.v_set_th - (a - vb0) * rh / bh
    trip = vb1 * ro / bo - abs(params.v_reset_th)
    return hold_out, hold_in, trip


def copy_margins(recipe, params):
    """``(hold, source)``: HRS-source hold margin and LRS-source disturb margin."""
    rs = recipe.r_selector_on
    ro, rh = params.r_on, params.r_off
    v = recipe.v_copy
    hold = params.v_set_th - v * rh / (2 * _branch(rh, rs))
    # at the self-limiting point the destination sits at its threshold
    v_dst_branch = params.v_set_th * (1 + rs / ro)
    source = abs(params.v_reset_th) - (v - v_dst_branch) * ro / _branch(ro, rs)
    return hold, source


def weak_one(recipe, params, depth):
    """Resistance left after ``depth`` chained conditional SETs from a full LRS."""
    n, last = _kernels.substep_count(recipe.copy_width, recipe.dt)
    P = np.vstack([params.packed(), params.packed()])
    x_src = 1.0
    for _ in range(depth):
        x, _ = _kernels.network_pulse(
            np.array([x_src, 0.0]), P, np.array([-recipe.v_copy, 0.0]),
            np.array([True, True]), np.array([False, False]),
            recipe.r_selector_on, 0.0, 0.0, n, recipe.dt, last)
        x_src = float(x[1])
    return 1.0 / (x_src / params.r_on + (1 - x_src) / params.r_off)


def calibrate_gates(params=None, base=None, copy_grid=None, not_grid=None):
    """Sweep the template voltages and keep the widest worst-case margin.

    COPY drive trades the hold margin against how quickly chained weak ones
    degrade; for every COPY voltage the NOT recipe is then tuned for the
    weakest one it can receive (``max_weak_depth`` chained copies).
    Returns ``(recipe, margins)``.
    """
    params = DeviceParams() if params is None else params
    base = GateRecipe() if base is None else base
    copy_grid = np.round(np.arange(1.6, 2.0, 0.05), 3) if copy_grid is None else copy_grid
    if not_grid is None:
        not_grid = [(a, rl, vl)
                    for a in np.round(np.arange(1.4, 2.4, 0.02), 3)
                    for rl in (50e3, 100e3, 200e3, 500e3)
                    for vl in np.round(np.arange(2.0, 40.0, 0.25), 3)]
    best = None
    for v in copy_grid:
        rec = replace(base, v_copy=float(v))
        hold, source = copy_margins(rec, params)
        r_weak = weak_one(rec, params, rec.max_weak_depth)
        if r_weak >= params.read_threshold:
            continue
        for a, rl, vl in not_grid:
            cand = replace(rec, v_not=float(a), not_load_r=float(rl), not_load_v=float(vl))
            m = (hold, source) + not_margins(cand, params, r_weak)
            score = min(m)
            if best is None or score > best[0]:
                best = (score, cand, m)
    if best is None:
        raise CalibrationError("no COPY voltage keeps chained ones readable")
    names = ("copy_hold", "copy_source", "not_hold_out", "not_hold_in", "not_trip")
    return best[1], dict(zip(names, best[2]))
