"""Placement, scheduling and execution of mapped gate graphs."""

from dataclasses import dataclass, field
from typing import Dict, List, Tuple

from ..exceptions import DimensionError, InvalidInputError, PlacementError
from ..templates import GateRecipe, conditional_reset, conditional_set, drive_step
from ..xbar import PulseProgram, run_program
from .techmap import NOT

PHASE_ORDER = ("init", "load", "evaluate", "read")


@dataclass
class LimSchedule:
    rows: int
    cols: int
    placement: Dict[str, Tuple[int, int]]
    program: PulseProgram
    gate_order: List[tuple]  # (op_id, Gate)
    inputs: List[str]
    outputs: List[Tuple[str, str]]
    recipe: GateRecipe
    load_steps: Dict[str, int] = field(default_factory=dict)
    op_kinds: Dict[int, str] = field(default_factory=dict)

    @property
    def phase_names(self):
        seen = ["init"]
        for st in self.program.steps:
            if st.phase not in seen:
                seen.append(st.phase)
        return seen

    @property
    def duration(self):
        return self.program.duration

    def output_cells(self):
        return [self.placement[sig] for _, sig in self.outputs]

    def program_for(self, bits):
        """The schedule's program with the input-load steps bound to ``bits``."""
        if len(bits) != len(self.inputs):
            raise InvalidInputError(f"expected {len(self.inputs)} input bits, got {len(bits)}")
        steps = list(self.program.steps)
        rec = self.recipe
        for name, bit in zip(self.inputs, bits):
            k = self.load_steps[name]
            old = steps[k]
            volts = rec.v_write if int(bit) else -rec.v_write
            steps[k] = drive_step(self.rows, self.cols, [self.placement[name]], volts,
                                  old.width, old.phase, old.op_id)
        return PulseProgram(self.rows, self.cols, steps, self.program.dt)

    def verify(self):
        """Structural legality checks; raises on the first violation.

        Placement must be injective, and every gate may only read cells that
        were loaded or computed by an earlier op. Each step carries a single
        op id, so two ops never write a cell within one step.
        """
        cells = list(self.placement.values())
        if len(set(cells)) != len(cells):
            raise PlacementError(len(cells), len(set(cells)))
        gates = dict(self.gate_order)
        ready = set()
        for st in self.program.steps:
            if st.phase == "load":
                ready.update(n for n in self.inputs if st.select[self.placement[n]])
            elif st.op_id in gates:
                g = gates[st.op_id]
                missing = [s for s in g.inputs if s not in ready]
                if missing:
                    raise InvalidInputError(f"gate {g.output} reads {missing} before they exist")
                ready.add(g.output)
        return True


def schedule(graph, rows, cols, recipe=None):
    """Place every signal first-fit row-major and emit the four-phase program."""
    recipe = recipe or GateRecipe()
    signals = graph.signals()
    if len(signals) > rows * cols:
        raise PlacementError(len(signals), rows * cols)
    placement = {s: divmod(i, cols) for i, s in enumerate(signals)}
    prog = PulseProgram(rows, cols, dt=recipe.dt)
    op_kinds = {}
    op = 0

    reset_cells = [placement[g.output] for g in graph.gates if g.kind != NOT]
    preset_cells = [placement[g.output] for g in graph.gates if g.kind == NOT]
    if reset_cells:
        prog.append(drive_step(rows, cols, reset_cells, -recipe.v_write, recipe.write_width,
                               "init", op))
        op_kinds[op] = "init-reset"
        op += 1
    if preset_cells:
        prog.append(drive_step(rows, cols, preset_cells, recipe.v_write, recipe.write_width,
                               "init", op))
        op_kinds[op] = "init-set"
        op += 1

    load_steps = {}
    for name in graph.inputs:
        load_steps[name] = len(prog.steps)
        prog.append(drive_step(rows, cols, [placement[name]], recipe.v_write,
                               recipe.write_width, "load", op))
        op_kinds[op] = f"load {name}"
        op += 1

    gate_order = []
    for g in graph.gates:
        dst = placement[g.output]
        srcs = [placement[s] for s in g.inputs]
        if g.kind == NOT:
            prog.append(conditional_reset(rows, cols, srcs[0], dst, recipe, "evaluate", op))
        else:
            for src in srcs:
                prog.append(conditional_set(rows, cols, src, dst, recipe, "evaluate", op))
        gate_order.append((op, g))
        op_kinds[op] = g.kind
        op += 1

    out_cells = [placement[sig] for _, sig in graph.outputs]
    if out_cells:
        prog.append(drive_step(rows, cols, list(dict.fromkeys(out_cells)), recipe.v_read,
                               recipe.read_width, "read", op))
        op_kinds[op] = "read"
    return LimSchedule(rows, cols, placement, prog, gate_order, list(graph.inputs),
                       list(graph.outputs), recipe, load_steps, op_kinds)


def execute_schedule(xbar, sched, bits, c2c=False):
    """Run the schedule for one input vector; returns ``(output bits, trace)``."""
    if (xbar.rows, xbar.cols) != (sched.rows, sched.cols):
        raise DimensionError(f"schedule is {sched.rows}x{sched.cols}, crossbar is "
                             f"{xbar.rows}x{xbar.cols}")
    trace = run_program(xbar, sched.program_for(bits), c2c)
    outs = [xbar.sense_bit(cell) for cell in sched.output_cells()]
    return outs, trace
