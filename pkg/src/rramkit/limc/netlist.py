"""BLIF subset reader and the Boolean reference simulator.

Supported directives: ``.model``, ``.inputs``, ``.outputs``, ``.names`` with
single-output cover rows over ``{0, 1, -}``, and ``.end``. Lines may be
continued with a trailing backslash; ``#`` starts a comment.
"""

from dataclasses import dataclass, field
from typing import List, Tuple

from ..exceptions import CycleError, NetlistError


@dataclass(frozen=True)
class Node:
    output: str
    inputs: Tuple[str, ...]
    rows: Tuple[Tuple[str, str], ...]

    @property
    def onset(self):
        """True when the cover lists the on-set (rows ending in 1)."""
        return not self.rows or self.rows[0][1] == "1"

    def cubes(self):
        return [pattern for pattern, _ in self.rows]

    def evaluate(self, values):
        hit = any(all(ch == "-" or int(ch) == values[name]
                      for ch, name in zip(pattern, self.inputs))
                  for pattern in self.cubes())
        if not self.rows:
            return 0
        return int(hit) if self.onset else int(not hit)


@dataclass
class LogicNetlist:
    model: str
    inputs: List[str]
    outputs: List[str]
    nodes: List[Node] = field(default_factory=list)

    def driver(self, name):
        for node in self.nodes:
            if node.output == name:
                return node
        return None


def _logical_lines(text):
    buf, start = "", None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].rstrip()
        if start is None:
            start = lineno
        if line.endswith("\\"):
            buf += line[:-1] + " "
            continue
        buf += line
        if buf.strip():
            yield start, buf.split()
        buf, start = "", None
    if buf.strip():
        yield start, buf.split()


def parse_netlist(text):
    model = None
    inputs, outputs = [], []
    nodes = []
    current = None
    ended = False
    for lineno, tok in _logical_lines(text):
        if ended:
            raise NetlistError("content after .end", lineno)
        head = tok[0]
        if head.startswith("."):
            current = None
            if head == ".model":
                model = tok[1] if len(tok) > 1 else "top"
            elif head == ".inputs":
                inputs.extend(tok[1:])
            elif head == ".outputs":
                outputs.extend(tok[1:])
            elif head == ".names":
                if len(tok) < 2:
                    raise NetlistError(".names needs at least an output signal", lineno)
                current = {"inputs": tuple(tok[1:-1]), "output": tok[-1], "rows": [],
                           "line": lineno}
                nodes.append(current)
            elif head == ".end":
                ended = True
            else:
                raise NetlistError(f"unsupported directive {head}", lineno)
            continue
        if current is None:
            raise NetlistError(f"cover row outside .names: {' '.join(tok)}", lineno)
        width = len(current["inputs"])
        if width == 0:
            if tok != ["1"] and tok != ["0"]:
                raise NetlistError("constant cover row must be 1 or 0", lineno)
            pattern, out = "", tok[0]
        else:
            if len(tok) != 2 or len(tok[0]) != width:
                raise NetlistError(f"cover row needs {width} input literals and one output",
                                   lineno)
            pattern, out = tok
        if set(pattern) - set("01-") or out not in ("0", "1"):
            raise NetlistError(f"bad cover row {' '.join(tok)}", lineno)
        if current["rows"] and current["rows"][0][1] != out:
            raise NetlistError("cover mixes on-set and off-set rows", lineno)
        current["rows"].append((pattern, out))
    net = LogicNetlist(model or "top", inputs,
                       outputs, [Node(n["output"], n["inputs"], tuple(n["rows"])) for n in nodes])
    _validate(net, {n["output"]: n["line"] for n in nodes})
    net.nodes = _toposort(net)
    return net


def _validate(net, lines):
    defined = {}
    for name in net.inputs:
        if name in defined:
            raise NetlistError(f"input {name} declared twice")
        defined[name] = "input"
    for node in net.nodes:
        if node.output in defined:
            raise NetlistError(f"signal {node.output} has more than one driver",
                               lines.get(node.output))
        defined[node.output] = node
    for node in net.nodes:
        for name in node.inputs:
            if name not in defined:
                raise NetlistError(f"undefined signal {name} used by {node.output}",
                                   lines.get(node.output))
    for name in net.outputs:
        if name not in defined:
            raise NetlistError(f"output {name} is never driven")


def _toposort(net):
    by_out = {n.output: n for n in net.nodes}
    order, state = [], {}

    def visit(name, stack):
        node = by_out.get(name)
        if node is None:
            return
        mark = state.get(name)
        if mark == "done":
            return
        if mark == "active":
            loop = stack[stack.index(name):] + [name]
            raise CycleError(loop)
        state[name] = "active"
        stack.append(name)
        for dep in node.inputs:
            visit(dep, stack)
        stack.pop()
        state[name] = "done"
        order.append(node)

    for node in net.nodes:
        visit(node.output, [])
    return order


def logical_sim(netlist, inputs):
    """Evaluate the netlist; ``inputs`` is a name->bit mapping or an ordered sequence."""
    if not isinstance(inputs, dict):
        inputs = dict(zip(netlist.inputs, inputs))
    values = {name: int(inputs[name]) for name in netlist.inputs}
    for node in netlist.nodes:
        values[node.output] = node.evaluate(values)
    return [values[name] for name in netlist.outputs]
