"""1T1R crossbar array simulator.

Each cell is a selector transistor (ideal switch with a fixed on-resistance)
in series with one RRAM device. Unselected cells are open circuits, so a
program step only ever touches the cells in its selector mask.
"""

import csv
import io
import json
import math
from collections import defaultdict
from dataclasses import dataclass, field, fields

import numpy as np

from . import _kernels
from .device import (DeviceParams, DeviceState, VariationSpec, perturb_c2c, resistance,
                     sample_instance)
from .exceptions import DimensionError, InvalidInputError
from .seeding import substream
from .templates import GateRecipe, conditional_set, drive_step

PHASES = ("init", "load", "evaluate", "read", "reset")
FORMAT_VERSION = 1
MAX_ROWS, MAX_COLS = 512, 32


@dataclass
class PulseProgram:
    rows: int
    cols: int
    steps: list = field(default_factory=list)
    dt: float = 1e-9

    def append(self, step):
        self.steps.append(step)
        return step

    def extend(self, steps):
        self.steps.extend(steps)

    @property
    def duration(self):
        return math.fsum(s.width for s in self.steps)

    def validate(self):
        for k, s in enumerate(self.steps):
            if s.row_v.shape != (self.rows,) or s.col_v.shape != (self.cols,):
                raise DimensionError(f"step {k}: line voltage vectors do not match "
                                     f"{self.rows}x{self.cols}")
            if s.select.shape != (self.rows, self.cols):
                raise DimensionError(f"step {k}: select mask shape {s.select.shape}")
            if not s.width > 0:
                raise InvalidInputError(f"step {k}: width must be > 0")
            if s.phase not in PHASES:
                raise InvalidInputError(f"step {k}: unknown phase {s.phase!r}")
        return self


@dataclass
class ExecutionTrace:
    """Energy entries ``(row, col, op_id, phase, joules)`` plus final states."""

    rows: int
    cols: int
    entries: list = field(default_factory=list)
    steps: int = 0
    duration: float = 0.0
    final_x: np.ndarray = None

    def extend(self, other):
        self.entries.extend(other.entries)
        self.steps += other.steps
        self.duration += other.duration
        self.final_x = other.final_x


@dataclass
class EnergyReport:
    per_device: np.ndarray
    per_op: dict
    per_phase: dict
    total: float
    entries: list

    def identity_error(self):
        """Largest relative disagreement between the aggregate views."""
        dev = math.fsum(self.per_device.ravel())
        ops = math.fsum(self.per_op.values())
        phs = math.fsum(self.per_phase.values())
        scale = max(abs(self.total), 1e-300)
        return max(abs(v - self.total) for v in (dev, ops, phs)) / scale

    def write_csv(self, fh):
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["row", "col", "op_id", "phase", "joules"])
        for r, c, op, ph, j in self.entries:
            w.writerow([r, c, op, ph, repr(float(j))])


def energy_report(trace):
    """Aggregate a trace into per-device, per-op and per-phase totals.

    Entries for the same (cell, op, phase) are merged first; every view is then a
    compensated sum of those merged values.
    """
    merged = defaultdict(float)
    for r, c, op, ph, j in trace.entries:
        merged[(r, c, op, ph)] += j
    per_device = np.zeros((trace.rows, trace.cols))
    by_dev, by_op, by_phase = defaultdict(list), defaultdict(list), defaultdict(list)
    entries = []
    for (r, c, op, ph), j in sorted(merged.items()):
        by_dev[(r, c)].append(j)
        by_op[op].append(j)
        by_phase[ph].append(j)
        entries.append((r, c, op, ph, j))
    for (r, c), vals in by_dev.items():
        per_device[r, c] = math.fsum(vals)
    per_op = {op: math.fsum(v) for op, v in sorted(by_op.items())}
    per_phase = {ph: math.fsum(v) for ph, v in by_phase.items()}
    total = math.fsum(j for *_, j in entries)
    return EnergyReport(per_device, per_op, per_phase, total, entries)


class Crossbar:
    """A rows x cols array of 1T1R cells with its own C2C random stream."""

    def __init__(self, rows, cols, params, x=None, cycles=None, r_selector_on=1e3,
                 seed=0, recipe=None):
        self.rows = rows
        self.cols = cols
        self.params = params
        self.r_selector_on = float(r_selector_on)
        self.seed = int(seed)
        self.recipe = recipe or GateRecipe(r_selector_on=self.r_selector_on)
        self.x = np.zeros((rows, cols)) if x is None else np.array(x, dtype=float)
        self.cycles = np.zeros((rows, cols), dtype=np.int64) if cycles is None else np.array(cycles)
        self.rng = substream(seed, "c2c")
        self.trace = ExecutionTrace(rows, cols, final_x=self.x.copy())
        self._packed = np.array([[p.packed() for p in row] for row in params])

    # ------------------------------------------------------------- helpers

    def check_cell(self, cell):
        r, c = cell
        if not (0 <= r < self.rows and 0 <= c < self.cols):
            raise DimensionError(f"cell {cell} outside {self.rows}x{self.cols} array")

    def state(self, cell):
        return DeviceState(float(self.x[cell]), int(self.cycles[cell]))

    def set_state(self, cell, state):
        self.x[cell] = state.x
        self.cycles[cell] = state.cycle_count

    def resistance(self, cell):
        return resistance(float(self.x[cell]), self.params[cell[0]][cell[1]])

    def resistance_map(self):
        g = self.x / self._packed[..., 0] + (1 - self.x) / self._packed[..., 1]
        return 1.0 / g

    def sense_bit(self, cell):
        """Compare the cell against its own LRS/HRS geometric mean (no pulse)."""
        p = self.params[cell[0]][cell[1]]
        return int(self.resistance(cell) < p.read_threshold)

    def copy(self):
        other = Crossbar.loads(self.dumps())
        other.recipe = self.recipe
        return other

    # ------------------------------------------------------- serialization

    def dumps(self):
        """Versioned key-value text; floats use ``repr`` so reload is bit-exact."""
        out = io.StringIO()
        out.write(f"rramkit-crossbar {FORMAT_VERSION}\n")
        out.write(f"rows {self.rows}\ncols {self.cols}\nseed {self.seed}\n")
        out.write(f"r_selector_on {self.r_selector_on!r}\n")
        out.write("rng " + json.dumps(self.rng.bit_generator.state, sort_keys=True) + "\n")
        names = [f.name for f in fields(DeviceParams)]
        out.write("param_fields " + " ".join(names) + "\n")
        for r in range(self.rows):
            for c in range(self.cols):
                p = self.params[r][c]
                vals = " ".join(repr(float(getattr(p, n))) for n in names)
                out.write(f"cell {r} {c} {float(self.x[r, c])!r} {int(self.cycles[r, c])} {vals}\n")
        return out.getvalue()

    @classmethod
    def loads(cls, text):
        lines = text.splitlines()
        head = lines[0].split()
        if head[0] != "rramkit-crossbar" or int(head[1]) != FORMAT_VERSION:
            raise InvalidInputError("not a rramkit crossbar dump (or unknown version)")
        kv = {}
        cells = []
        for line in lines[1:]:
            key, _, rest = line.partition(" ")
            if key == "cell":
                cells.append(rest.split())
            else:
                kv[key] = rest
        rows, cols = int(kv["rows"]), int(kv["cols"])
        names = kv["param_fields"].split()
        params = [[None] * cols for _ in range(rows)]
        x = np.zeros((rows, cols))
        cyc = np.zeros((rows, cols), dtype=np.int64)
        for parts in cells:
            r, c = int(parts[0]), int(parts[1])
            x[r, c] = float(parts[2])
            cyc[r, c] = int(parts[3])
            params[r][c] = DeviceParams(**{n: float(v) for n, v in zip(names, parts[4:])})
        xb = cls(rows, cols, params, x, cyc, float(kv["r_selector_on"]), int(kv["seed"]))
        xb.rng.bit_generator.state = json.loads(kv["rng"])
        return xb


def new_crossbar(rows, cols, nominal=None, spec=None, seed=0, r_selector_on=1e3, recipe=None):
    """Build a crossbar whose cells are D2D instances of ``nominal``.

    Cell ``(r, c)`` draws from substream ``(seed, "d2d", r, c)``, so the array
    is reproducible cell by cell. All devices start in HRS.
    """
    if rows < 1 or cols < 1:
        raise DimensionError("crossbar needs at least one row and one column")
    nominal = (nominal or DeviceParams()).validate()
    spec = spec if spec is not None else VariationSpec.none()
    params = [[sample_instance(nominal, spec, substream(seed, "d2d", r, c))
               for c in range(cols)] for r in range(rows)]
    if recipe is not None:
        r_selector_on = recipe.r_selector_on
    return Crossbar(rows, cols, params, r_selector_on=r_selector_on, seed=seed, recipe=recipe)


def _step_branches(step):
    cells = step.cells()
    drive = np.empty(len(cells))
    floating = np.zeros(len(cells), dtype=bool)
    col_driven = np.zeros(len(cells), dtype=bool)
    for b, (r, c) in enumerate(cells):
        rv, cv = step.row_v[r], step.col_v[c]
        r_float, c_float = math.isnan(rv), math.isnan(cv)
        if r_float and c_float:
            drive[b] = 0.0
        elif c_float:
            drive[b], floating[b] = rv, True
        elif r_float:
            drive[b], floating[b], col_driven[b] = cv, True, True
        else:
            drive[b] = rv - cv
    return cells, drive, floating, col_driven


def run_program(xbar, prog, c2c=False):
    """Execute ``prog`` step by step and return its execution trace."""
    if (prog.rows, prog.cols) != (xbar.rows, xbar.cols):
        raise DimensionError(f"program is {prog.rows}x{prog.cols}, crossbar is "
                             f"{xbar.rows}x{xbar.cols}")
    prog.validate()
    trace = ExecutionTrace(xbar.rows, xbar.cols)
    for step in prog.steps:
        cells, drive, floating, col_driven = _step_branches(step)
        trace.steps += 1
        trace.duration += step.width
        if not cells:
            continue
        idx = tuple(np.array(cells).T)
        if c2c:
            P = np.array([perturb_c2c(xbar.params[r][c], xbar.rng).packed() for r, c in cells])
        else:
            P = xbar._packed[idx]
        g_load, v_load = 0.0, 0.0
        if step.bus_load is not None:
            g_load, v_load = 1.0 / step.bus_load[0], step.bus_load[1]
        n, last = _kernels.substep_count(step.width, prog.dt)
        x0 = xbar.x[idx]
        x1, energy = _kernels.network_pulse(x0, P, drive, floating, col_driven,
                                            xbar.r_selector_on, g_load, v_load,
                                            n, prog.dt, last)
        xbar.x[idx] = x1
        xbar.cycles[idx] += (x1 != x0)
        for (r, c), j in zip(cells, energy):
            trace.entries.append((r, c, step.op_id, step.phase, float(j)))
    trace.final_x = xbar.x.copy()
    xbar.trace.extend(trace)
    return trace


def _single(xbar, step, c2c):
    prog = PulseProgram(xbar.rows, xbar.cols, [step], xbar.recipe.dt)
    return run_program(xbar, prog, c2c)


def write_bit(xbar, cell, bit, c2c=False, op_id=0):
    """Full SET (bit 1) or full RESET (bit 0) of one cell."""
    xbar.check_cell(cell)
    rec = xbar.recipe
    volts = rec.v_write if bit else -rec.v_write
    _single(xbar, drive_step(xbar.rows, xbar.cols, [cell], volts, rec.write_width,
                             "load", op_id), c2c)


def read_bit(xbar, cell, c2c=False, op_id=0):
    """Apply a read pulse, then threshold the cell at sqrt(r_on * r_off)."""
    xbar.check_cell(cell)
    rec = xbar.recipe
    _single(xbar, drive_step(xbar.rows, xbar.cols, [cell], rec.v_read, rec.read_width,
                             "read", op_id), c2c)
    return xbar.sense_bit(cell)


def clone_program(rows, cols, src, dst, recipe, op_id=0):
    """Two-step in-array copy: RESET ``dst``, then a conditional SET from ``src``."""
    return [
        drive_step(rows, cols, [dst], -recipe.v_write, recipe.write_width, "init", op_id),
        conditional_set(rows, cols, src, dst, recipe, "evaluate", op_id),
    ]


def clone_cell(xbar, src, dst, c2c=False, op_id=0):
    """Copy ``src``'s binary state into ``dst`` without reading it out."""
    src, dst = tuple(src), tuple(dst)
    if src == dst:
        raise InvalidInputError("clone source and destination must differ")
    xbar.check_cell(src)
    xbar.check_cell(dst)
    prog = PulseProgram(xbar.rows, xbar.cols,
                        clone_program(xbar.rows, xbar.cols, src, dst, xbar.recipe, op_id),
                        xbar.recipe.dt)
    return run_program(xbar, prog, c2c)
