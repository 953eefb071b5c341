"""SPICE netlist emission for compiled LiM schedules, plus a reader for it.

The emitted deck is generic SPICE: a behavioural 1T1R subcircuit, one
instance per placed cell, and piecewise-linear sources for every line the
schedule drives. Lines that are released onto the shared divider node in
some step get two analog switches (driver and node) with their own PWL
enables. Each PWL source carries two breakpoints per program step: the
level is reached ``edge`` seconds after the step starts and held until it
ends.
"""

import math
import re
from dataclasses import dataclass, field

from .._version import __version__

GATE_ON = 1.0


def _fmt(v):
    return repr(float(v))


def _pwl(name, pos, neg, levels, bounds, edge):
    pts = []
    for (t0, t1), v in zip(bounds, levels):
        pts.append(f"{_fmt(t0 + edge)} {_fmt(v)}")
        pts.append(f"{_fmt(t1)} {_fmt(v)}")
    return f"{name} {pos} {neg} PWL({' '.join(pts)})"


def _bounds(steps):
    # correctly rounded prefix sums, so the last edge equals the fsum duration
    widths = [st.width for st in steps]
    ends = [math.fsum(widths[:k + 1]) for k in range(len(widths))]
    return list(zip([0.0] + ends[:-1], ends))


def emit_spice(sched, params, inputs=None, edge=None):
    """Render ``sched`` (load steps bound to ``inputs``, default all zeros)."""
    bits = [0] * len(sched.inputs) if inputs is None else list(inputs)
    prog = sched.program_for(bits)
    steps = prog.steps
    bounds = _bounds(steps)
    total = math.fsum(st.width for st in steps)
    rec = sched.recipe
    if edge is None:
        edge = min([prog.dt] + [st.width / 10 for st in steps]) if steps else prog.dt
    lines = [
        f"* rramkit {__version__} logic-in-memory deck",
        f"* array {sched.rows}x{sched.cols}, placed cells {len(sched.placement)}, "
        f"steps {len(steps)}",
    ]
    if not sched.placement and not steps:
        lines.append(".end")
        return "\n".join(lines) + "\n"

    lines += [
        f".model selsw SW(Ron={_fmt(rec.r_selector_on)} Roff=1e12 Vt=0.5 Vh=0)",
        ".model asw SW(Ron=1 Roff=1e12 Vt=0.5 Vh=0)",
        f".subckt rram1t1r line_r line_c gate x0=0 ron={_fmt(params.r_on)} "
        f"roff={_fmt(params.r_off)}",
        "S1 line_r mid gate 0 selsw",
        "Rdev mid line_c R={1/(x0/ron+(1-x0)/roff)}",
        ".ends rram1t1r",
    ]
    for sig, (r, c) in sorted(sched.placement.items(), key=lambda kv: kv[1]):
        lines.append(f"* {sig}")
        lines.append(f"Xr{r}c{c} row{r} col{c} gate{r}c{c} rram1t1r x0=0")

    def line_levels(kind, idx):
        vals = [(st.row_v if kind == "row" else st.col_v)[idx] for st in steps]
        return vals

    for kind, count in (("row", sched.rows), ("col", sched.cols)):
        for idx in range(count):
            vals = line_levels(kind, idx)
            floats = [math.isnan(v) for v in vals]
            active = any(floats) or any(v != 0 for v in vals)
            node = f"{kind}{idx}"
            if not active:
                lines.append(f"V{node} {node} 0 0")
                continue
            drive = [0.0 if f else v for v, f in zip(vals, floats)]
            if not any(floats):
                lines.append(_pwl(f"V{node}", node, "0", drive, bounds, edge))
                continue
            lines.append(_pwl(f"V{node}", f"{node}_drv", "0", drive, bounds, edge))
            lines.append(f"S{node}_drv {node}_drv {node} {node}_en 0 asw")
            lines.append(_pwl(f"E{node}_en", f"{node}_en", "0",
                              [0.0 if f else GATE_ON for f in floats], bounds, edge))
            lines.append(f"S{node}_bus {node} bus {node}_ben 0 asw")
            lines.append(_pwl(f"E{node}_ben", f"{node}_ben", "0",
                              [GATE_ON if f else 0.0 for f in floats], bounds, edge))

    loads = [st.bus_load for st in steps]
    if any(ld is not None for ld in loads):
        r_load = next(ld[0] for ld in loads if ld is not None)
        lines.append(f"Rbusload bus busload {_fmt(r_load)}")
        lines.append(_pwl("Vbusload", "busload_drv", "0",
                          [ld[1] if ld else 0.0 for ld in loads], bounds, edge))
        lines.append("Sbusload busload_drv busload busload_en 0 asw")
        lines.append(_pwl("Ebusload_en", "busload_en", "0",
                          [GATE_ON if ld else 0.0 for ld in loads], bounds, edge))

    for sig, (r, c) in sorted(sched.placement.items(), key=lambda kv: kv[1]):
        lines.append(_pwl(f"G{r}c{c}", f"gate{r}c{c}", "0",
                          [GATE_ON if st.select[r, c] else 0.0 for st in steps], bounds, edge))
    if steps:
        lines.append(f".tran {_fmt(prog.dt)} {_fmt(total)}")
    lines.append(".end")
    return "\n".join(lines) + "\n"


@dataclass
class SpiceDeck:
    cells: list = field(default_factory=list)
    sources: dict = field(default_factory=dict)
    tran_stop: float = 0.0
    header: list = field(default_factory=list)

    def line_sources(self):
        """PWL drivers of crossbar rows and columns (not enables or gates)."""
        return {k: v for k, v in self.sources.items() if re.fullmatch(r"V(row|col)\d+", k)}


_PWL = re.compile(r"^(\S+)\s+(\S+)\s+(\S+)\s+PWL\((.*)\)\s*$", re.I)


def parse_spice(text):
    deck = SpiceDeck()
    for raw in text.splitlines():
        line = raw.strip()
        if not line:
            continue
        if line.startswith("*"):
            deck.header.append(line)
            continue
        m = _PWL.match(line)
        if m:
            nums = [float(v) for v in m.group(4).split()]
            deck.sources[m.group(1)] = list(zip(nums[::2], nums[1::2]))
            continue
        tok = line.split()
        if tok[0].upper().startswith("X") and not tok[0].startswith(".") and "rram1t1r" in tok:
            deck.cells.append(tok[0])
        elif tok[0].lower() == ".tran":
            deck.tran_stop = float(tok[2])
    return deck
