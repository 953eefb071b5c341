"""Multi-valued computing on multi-level cells.

Ternary operands live in cells as the three lowest levels of a level ladder;
the digit-serial adder keeps its carry in the controller and writes every
sum digit back as a level. The Krinsky automaton stores its whole state in
one cell, one level per automaton state.
"""

import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np

from .device import classify_resistance, program_level
from .exceptions import DimensionError, InvalidInputError, StateCorruptionError
from .seeding import substream

REWARD, PENALTY = 0, 1


# ------------------------------------------------------------------ trits

@dataclass(frozen=True)
class TritVector:
    """Unbalanced ternary digits, least significant first."""

    digits: tuple

    def __post_init__(self):
        object.__setattr__(self, "digits", tuple(int(d) for d in self.digits))
        if any(d not in (0, 1, 2) for d in self.digits):
            raise InvalidInputError(f"trits must be 0, 1 or 2: {self.digits}")

    def __len__(self):
        return len(self.digits)

    @property
    def value(self):
        return sum(d * 3 ** i for i, d in enumerate(self.digits))

    @classmethod
    def from_int(cls, value, n):
        value = int(value)
        if value < 0 or value >= 3 ** n:
            raise InvalidInputError(f"{value} does not fit in {n} trits")
        digits = []
        for _ in range(n):
            value, d = divmod(value, 3)
            digits.append(d)
        return cls(tuple(digits))

    @classmethod
    def parse(cls, text, n=None):
        """Decimal by default; a ``0t`` prefix marks base-3 (most significant first)."""
        text = text.strip().lower()
        try:
            value = int(text[2:], 3) if text.startswith("0t") else int(text, 10)
        except ValueError:
            raise InvalidInputError(f"not a decimal or 0t-prefixed ternary number: {text!r}")
        if value < 0:
            raise InvalidInputError("operands must be non-negative")
        if n is None:
            n = max(1, trits_needed(value))
        return cls.from_int(value, n)

    def __str__(self):
        s = "".join(str(d) for d in reversed(self.digits)).lstrip("0")
        return s or "0"


def trits_needed(value):
    n = 0
    while 3 ** n <= value:
        n += 1
    return n


def _cells(xbar, start, n):
    r0, c0 = start
    first = r0 * xbar.cols + c0
    if first + n > xbar.rows * xbar.cols:
        raise DimensionError(f"{n} cells from {start} exceed the "
                             f"{xbar.rows}x{xbar.cols} array")
    return [divmod(first + k, xbar.cols) for k in range(n)]


def program_cell(xbar, cell, cfg, level, c2c=False):
    p = xbar.params[cell[0]][cell[1]]
    xbar.set_state(cell, program_level(xbar.state(cell), p, cfg, level, xbar.rng, c2c))


def read_cell(xbar, cell, cfg):
    """Level index of one cell (the read voltage sits in the deadband)."""
    return classify_resistance(xbar.resistance(cell), cfg)


def write_trits(xbar, start, v, cfg, c2c=False):
    if cfg.n_levels < 3:
        raise InvalidInputError("ternary storage needs a ladder with at least 3 levels")
    cells = _cells(xbar, start, len(v))
    for cell, d in zip(cells, v.digits):
        program_cell(xbar, cell, cfg, d, c2c)
    return cells


def read_trits(xbar, start, n, cfg):
    # levels above 2 can only come from a misread; the nearest trit is 2
    return TritVector(tuple(min(read_cell(xbar, cell, cfg), 2)
                            for cell in _cells(xbar, start, n)))


@dataclass
class AddResult:
    total: TritVector
    a_cells: list
    b_cells: list
    sum_cells: list


def ternary_add(xbar, a, b, cfg, start=(0, 0), c2c=False, detail=False):
    """Digit-serial ``a + b``; returns ``n + 1`` trits (final carry on top).

    Operands occupy ``2n`` cells and the sum ``n + 1`` more, row-major from
    ``start``. Each sum digit is read back from its cell, so the result
    reflects what the array actually holds.
    """
    if len(a) != len(b):
        raise InvalidInputError(f"operand lengths differ: {len(a)} vs {len(b)}")
    n = len(a)
    cells = _cells(xbar, start, 3 * n + 1)
    a_cells, b_cells, s_cells = cells[:n], cells[n:2 * n], cells[2 * n:]
    write_trits(xbar, a_cells[0], a, cfg, c2c)
    write_trits(xbar, b_cells[0], b, cfg, c2c)
    carry = 0
    for i in range(n):
        da = min(read_cell(xbar, a_cells[i], cfg), 2)
        db = min(read_cell(xbar, b_cells[i], cfg), 2)
        carry, digit = divmod(da + db + carry, 3)
        program_cell(xbar, s_cells[i], cfg, digit, c2c)
    program_cell(xbar, s_cells[n], cfg, carry, c2c)
    out = read_trits(xbar, s_cells[0], n + 1, cfg)
    return AddResult(out, a_cells, b_cells, s_cells) if detail else out


# ------------------------------------------------------------- automaton

@dataclass
class AutomatonConfig:
    """Krinsky automaton with ``2 * depth`` states.

    States ``1..depth`` choose action 1, ``depth+1..2*depth`` action 2.
    ``level_map[s]`` is the ladder level holding state ``s``; by default
    state ``s`` sits on level ``s - 1``, so action 1 is the low-resistance end.
    """

    depth: int = 3
    c1: float = 0.2
    c2: float = 0.6
    level_map: Optional[Dict[int, int]] = None
    start_state: Optional[int] = None

    def __post_init__(self):
        if self.depth < 1:
            raise InvalidInputError("automaton depth must be >= 1")
        for name in ("c1", "c2"):
            p = getattr(self, name)
            if not 0.0 <= p <= 1.0:
                raise InvalidInputError(f"{name} must lie in [0, 1]")
        if self.level_map is None:
            self.level_map = {s: s - 1 for s in range(1, 2 * self.depth + 1)}
        self.level_map = {int(k): int(v) for k, v in self.level_map.items()}
        if sorted(self.level_map) != list(range(1, 2 * self.depth + 1)):
            raise InvalidInputError("level_map must cover states 1..2*depth")
        if len(set(self.level_map.values())) != len(self.level_map):
            raise InvalidInputError("level_map must be injective")
        if self.start_state is None:
            self.start_state = self.depth
        if not 1 <= self.start_state <= 2 * self.depth:
            raise InvalidInputError("start_state outside 1..2*depth")

    @property
    def n_states(self):
        return 2 * self.depth

    def action(self, state):
        return 1 if state <= self.depth else 2

    def penalty_prob(self, action):
        return self.c1 if action == 1 else self.c2

    def check_ladder(self, cfg):
        if max(self.level_map.values()) >= cfg.n_levels:
            raise InvalidInputError(f"automaton needs {max(self.level_map.values()) + 1} "
                                    f"levels, ladder has {cfg.n_levels}")


def krinsky_next(state, depth, feedback):
    """Pure transition rule."""
    action1 = state <= depth
    if feedback == REWARD:
        return 1 if action1 else 2 * depth
    return state + 1 if action1 else state - 1


def decode_level(level, acfg, nearest=False):
    inverse = {v: k for k, v in acfg.level_map.items()}
    if level in inverse:
        return inverse[level]
    if not nearest:
        raise StateCorruptionError(f"level {level} is not an automaton state")
    return min(acfg.level_map, key=lambda s: (abs(acfg.level_map[s] - level), s))


def krinsky_step(xbar, cell, acfg, cfg, feedback, c2c=False):
    """Read the state held in ``cell``, apply one Krinsky update, write it back."""
    state = decode_level(read_cell(xbar, cell, cfg), acfg)
    new = krinsky_next(state, acfg.depth, feedback)
    program_cell(xbar, cell, cfg, acfg.level_map[new], c2c)
    return new


@dataclass
class AutomatonRun:
    states: List[int]
    actions: List[int]
    feedback: List[int]
    misread: List[bool] = field(default_factory=list)

    @property
    def misdetections(self):
        return int(sum(self.misread))

    def action_frequency(self, last=None):
        acts = np.asarray(self.actions[-last:] if last else self.actions)
        f1 = float(np.mean(acts == 1)) if len(acts) else math.nan
        return {1: f1, 2: 1.0 - f1}

    def rows(self):
        for k, (s, a, fb, m) in enumerate(zip(self.states, self.actions, self.feedback,
                                                self.misread)):
            yield k, s, a, "penalty" if fb else "reward", int(m)


def software_automaton(acfg, steps, seed):
    """Reference automaton without a device; same environment stream as the device run."""
    env = substream(seed, "environment")
    state = acfg.start_state
    run = AutomatonRun([], [], [], [])
    for _ in range(steps):
        action = acfg.action(state)
        fb = PENALTY if env.random() < acfg.penalty_prob(action) else REWARD
        run.states.append(state)
        run.actions.append(action)
        run.feedback.append(fb)
        run.misread.append(False)
        state = krinsky_next(state, acfg.depth, fb)
    return run


def run_automaton(xbar, acfg, cfg, steps, seed, cell=(0, 0), c2c=False):
    """Device-backed Krinsky run in a random environment.

    Each step reads the cell, decodes the level (a misread snaps to the
    nearest mapped state and is counted), picks the action, draws feedback
    and programs the next state. The cell is only re-programmed when the
    target level changes. Row ``k`` of the trajectory is the state acted
    on at step ``k``.
    """
    if steps < 1:
        raise InvalidInputError("steps must be >= 1")
    acfg.check_ladder(cfg)
    xbar.check_cell(cell)
    env = substream(seed, "environment")
    held = acfg.level_map[acfg.start_state]
    program_cell(xbar, cell, cfg, held, c2c)
    run = AutomatonRun([], [], [], [])
    for _ in range(steps):
        level = read_cell(xbar, cell, cfg)
        state = decode_level(level, acfg, nearest=True)
        action = acfg.action(state)
        fb = PENALTY if env.random() < acfg.penalty_prob(action) else REWARD
        run.states.append(state)
        run.actions.append(action)
        run.feedback.append(fb)
        run.misread.append(level != held)
        target = acfg.level_map[krinsky_next(state, acfg.depth, fb)]
        if target != held or level != held:
            program_cell(xbar, cell, cfg, target, c2c)
            held = target
    return run


def trit_misread_rate(xbar, cfg, trials, c2c=True, cell=(0, 0)):
    """Fraction of single-trit write/read round trips that come back wrong."""
    rng = substream(xbar.seed, "trit-misread")
    digits = rng.integers(0, 3, size=trials)
    wrong = 0
    for d in digits:
        program_cell(xbar, cell, cfg, int(d), c2c)
        wrong += min(read_cell(xbar, cell, cfg), 2) != d
    return wrong / trials
