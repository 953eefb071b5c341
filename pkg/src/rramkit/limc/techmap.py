"""Technology mapping onto the OR2 / NOT / COPY crossbar primitives.

Each node's cover becomes a sum of products. A product term is built by
De Morgan, ``AND(l1..lk) = NOT(OR(~l1..~lk))``, and the sum is a balanced
OR2 tree. Inverters of a signal are shared across the whole graph.

The mapper also tracks drive strength. A conditional-SET output (OR2,
COPY) is a slightly weaker logic 1 than its input, while a NOT output is
always restored to a full LRS/HRS. Every OR2/COPY input whose weakness
depth has reached ``max_weak_depth`` is replaced by a double inversion.
"""

from dataclasses import dataclass, field
from typing import List, Tuple

from ..exceptions import InvalidInputError, UnsupportedWidthError

MAX_NODE_INPUTS = 16
OR2, NOT, COPY = "OR2", "NOT", "COPY"


@dataclass(frozen=True)
class Gate:
    kind: str
    inputs: Tuple[str, ...]
    output: str


@dataclass
class GateGraph:
    inputs: List[str]
    outputs: List[Tuple[str, str]]  # (netlist output name, driving signal)
    gates: List[Gate] = field(default_factory=list)

    def evaluate(self, bits):
        values = dict(zip(self.inputs, (int(b) for b in bits)))
        for g in self.gates:
            if g.kind == OR2:
                values[g.output] = values[g.inputs[0]] | values[g.inputs[1]]
            elif g.kind == NOT:
                values[g.output] = 1 - values[g.inputs[0]]
            else:
                values[g.output] = values[g.inputs[0]]
        return [values[sig] for _, sig in self.outputs]

    def counts(self):
        out = {OR2: 0, NOT: 0, COPY: 0}
        for g in self.gates:
            out[g.kind] += 1
        return out

    def signals(self):
        return list(self.inputs) + [g.output for g in self.gates]


class _Builder:
    def __init__(self, inputs):
        self.gates = []
        self.n = 0
        self.inverse = {}
        self.const1 = None
        self.inputs = list(inputs)

    def fresh(self):
        self.n += 1
        return f"_n{self.n}"

    def emit(self, kind, *ins):
        out = self.fresh()
        self.gates.append(Gate(kind, tuple(ins), out))
        return out

    def NOT(self, s):
        if s not in self.inverse:
            out = self.emit(NOT, s)
            self.inverse[s] = out
            self.inverse[out] = s
        return self.inverse[s]

    def OR(self, terms):
        terms = list(dict.fromkeys(terms))
        while len(terms) > 1:
            nxt = [self.emit(OR2, a, b) for a, b in zip(terms[::2], terms[1::2])]
            if len(terms) % 2:
                nxt.append(terms[-1])
            terms = nxt
        return terms[0]

    def one(self):
        if self.const1 is None:
            if not self.inputs:
                raise UnsupportedWidthError("constant node in a netlist without inputs")
            a = self.inputs[0]
            self.const1 = self.emit(OR2, a, self.NOT(a))
        return self.const1

    def cube(self, pattern, names):
        lits = [(name, ch == "1") for ch, name in zip(pattern, names) if ch != "-"]
        if not lits:
            return self.one()
        if len(lits) == 1:
            name, pos = lits[0]
            return name if pos else self.NOT(name)
        return self.NOT(self.OR([self.NOT(n) if pos else n for n, pos in lits]))


def _map_nodes(netlist):
    b = _Builder(netlist.inputs)
    alias = {name: name for name in netlist.inputs}
    for node in netlist.nodes:
        if len(node.inputs) > MAX_NODE_INPUTS:
            raise UnsupportedWidthError(
                f"node {node.output} has {len(node.inputs)} inputs (max {MAX_NODE_INPUTS})")
        names = [alias[n] for n in node.inputs]
        if not node.rows:
            sig = b.NOT(b.one())
        else:
            terms = [b.cube(p, names) for p in node.cubes()]
            if b.const1 is not None and b.const1 in terms:
                terms = [b.const1]
            sig = b.OR(terms)
            if not node.onset:
                sig = b.NOT(sig)
        alias[node.output] = sig
    return b, alias


def _prune(gates, outputs):
    live = {sig for _, sig in outputs}
    kept = []
    for g in reversed(gates):
        if g.output in live:
            kept.append(g)
            live.update(g.inputs)
    return kept[::-1]


def _split_fanout(gates, inputs, max_fanout, fresh):
    """Chain COPY gates so no signal has more than ``max_fanout`` readers.

    Each link keeps ``max_fanout - 1`` direct readers and hands the rest to
    a copy of itself; a copy is placed right before its first reader.
    """
    consumers = {}
    for gi, g in enumerate(gates):
        for slot, s in enumerate(g.inputs):
            consumers.setdefault(s, []).append((gi, slot))
    rewired = [list(g.inputs) for g in gates]
    extra = {}  # gate index -> copies to emit right before it
    for sig, uses in consumers.items():
        src = sig
        while len(uses) > max_fanout:
            rest = uses[max_fanout - 1:]
            out = fresh()
            extra.setdefault(rest[0][0], []).append(Gate(COPY, (src,), out))
            for gi, slot in rest:
                rewired[gi][slot] = out
            src, uses = out, rest
    result = []
    for gi, g in enumerate(gates):
        result.extend(extra.get(gi, []))
        result.append(Gate(g.kind, tuple(rewired[gi]), g.output))
    return result


def _restore(gates, inputs, max_weak_depth, fresh):
    depth = {s: 0 for s in inputs}
    restored = {}
    out = []
    for g in gates:
        ins = list(g.inputs)
        if g.kind in (OR2, COPY):
            for slot, s in enumerate(ins):
                if depth[s] >= max_weak_depth:
                    if s not in restored:
                        n1, n2 = fresh(), fresh()
                        out.append(Gate(NOT, (s,), n1))
                        out.append(Gate(NOT, (n1,), n2))
                        depth[n1] = depth[n2] = 0
                        restored[s] = n2
                    ins[slot] = restored[s]
        if g.kind == NOT:
            depth[g.output] = 0
        else:
            depth[g.output] = max(depth[s] for s in ins) + 1
        out.append(Gate(g.kind, tuple(ins), g.output))
    return out


def tech_map(netlist, max_fanout=8, max_weak_depth=4):
    """Map a parsed netlist to a topologically ordered OR2/NOT/COPY graph."""
    if max_fanout < 2:
        raise InvalidInputError("max_fanout must be >= 2 (a copy uses one reader slot)")
    b, alias = _map_nodes(netlist)
    gates = b.gates
    outputs = []
    owned = set()
    for name in netlist.outputs:
        sig = alias[name]
        # each primary output gets a cell of its own
        if sig in netlist.inputs or sig in owned:
            sig = b.emit(COPY, sig)
        owned.add(sig)
        outputs.append((name, sig))
    gates = _prune(b.gates, outputs)
    gates = _split_fanout(gates, netlist.inputs, max_fanout, b.fresh)
    gates = _restore(gates, netlist.inputs, max_weak_depth, b.fresh)
    return GateGraph(list(netlist.inputs), outputs, gates)
