"""Logic-in-memory compiler: BLIF in, crossbar schedule and SPICE deck out."""

import itertools

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ..device import DeviceParams
from ..exceptions import InvalidInputError
from ..templates import GateRecipe
from ..xbar import new_crossbar
from .netlist import LogicNetlist, Node, logical_sim, parse_netlist
from .schedule import LimSchedule, execute_schedule, schedule
from .spice import SpiceDeck, emit_spice, parse_spice
from .techmap import COPY, NOT, OR2, Gate, GateGraph, tech_map

MAX_EXHAUSTIVE_INPUTS = 10

__all__ = [
    "COPY", "NOT", "OR2", "Gate", "GateGraph", "LimSchedule", "LogicInMemoryCircuit",
    "LogicNetlist", "Node", "SpiceDeck", "compile_netlist", "emit_spice",
    "execute_schedule", "input_vectors", "logical_sim", "parse_netlist", "parse_spice",
    "schedule", "tech_map",
]


def input_vectors(n):
    """All ``2**n`` input vectors, first input most significant."""
    if n > MAX_EXHAUSTIVE_INPUTS:
        raise InvalidInputError(f"exhaustive sweep over {n} inputs exceeds the "
                                f"{MAX_EXHAUSTIVE_INPUTS}-input guard")
    return [list(bits) for bits in itertools.product((0, 1), repeat=n)]


def compile_netlist(text, rows, cols, recipe=None, max_fanout=8):
    recipe = recipe or GateRecipe()
    net = parse_netlist(text)
    graph = tech_map(net, max_fanout=max_fanout, max_weak_depth=recipe.max_weak_depth)
    return net, graph, schedule(graph, rows, cols, recipe)


class LogicInMemoryCircuit(BaseEstimator):
    """A compiled netlist bound to a simulated crossbar.

    ``fit`` parses, maps and schedules the BLIF text; ``predict`` runs every
    row of a bit matrix through the crossbar and returns the output bits.
    The crossbar persists across calls, so energy accumulates in its trace.
    """

    def __init__(self, blif="", rows=8, cols=4, device=None, variation=None, recipe=None,
                 seed=0, c2c=False, max_fanout=8):
        self.blif = blif
        self.rows = rows
        self.cols = cols
        self.device = device
        self.variation = variation
        self.recipe = recipe
        self.seed = seed
        self.c2c = c2c
        self.max_fanout = max_fanout

    def fit(self, X=None, y=None):
        recipe = self.recipe or GateRecipe()
        self.netlist_, self.graph_, self.schedule_ = compile_netlist(
            self.blif, self.rows, self.cols, recipe, self.max_fanout)
        self.xbar_ = new_crossbar(self.rows, self.cols, self.device or DeviceParams(),
                                  self.variation, self.seed, recipe=recipe)
        self.n_features_in_ = len(self.netlist_.inputs)
        self.traces_ = []
        return self

    def predict(self, X):
        check_is_fitted(self, "schedule_")
        X = np.asarray(X, dtype=int).reshape(-1, self.n_features_in_)
        out = np.empty((len(X), len(self.netlist_.outputs)), dtype=int)
        for i, bits in enumerate(X):
            out[i], trace = execute_schedule(self.xbar_, self.schedule_, bits, self.c2c)
            self.traces_.append(trace)
        return out

    def reference(self, X):
        """Boolean oracle outputs for the same rows."""
        check_is_fitted(self, "netlist_")
        X = np.asarray(X, dtype=int).reshape(-1, self.n_features_in_)
        return np.array([logical_sim(self.netlist_, row) for row in X], dtype=int)

    def spice(self, inputs=None):
        check_is_fitted(self, "schedule_")
        return emit_spice(self.schedule_, self.device or DeviceParams(), inputs)
