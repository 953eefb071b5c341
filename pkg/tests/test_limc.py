import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rramkit.device import DeviceParams
from rramkit.exceptions import CycleError, NetlistError, PlacementError, UnsupportedWidthError
from rramkit.limc import (COPY, NOT, OR2, LogicInMemoryCircuit, compile_netlist, emit_spice,
                          execute_schedule, input_vectors, logical_sim, parse_netlist,
                          parse_spice, tech_map)
from rramkit.limc.techmap import MAX_NODE_INPUTS
from rramkit.xbar import energy_report, new_crossbar

FA_BLIF = "full_adder.blif"


# ---- netlist

def test_parse_full_adder(bench):
    net = parse_netlist(bench(FA_BLIF))
    assert net.model == "full_adder"
    assert net.inputs == ["a", "b", "cin"] and net.outputs == ["sum", "cout"]
    for a, b, c in itertools.product((0, 1), repeat=3):
        s = a + b + c
        assert logical_sim(net, [a, b, c]) == [s & 1, s >> 1]


def test_continuation_comments_and_offset_cover():
    net = parse_netlist(".model m # top\n.inputs a \\\n b\n.outputs y\n"
                        ".names a b y\n11 0\n.end\n")
    assert net.inputs == ["a", "b"]
    assert [logical_sim(net, v)[0] for v in input_vectors(2)] == [1, 1, 1, 0]


def test_constants():
    net = parse_netlist(".model k\n.outputs one zero\n.names one\n1\n.names zero\n.end\n")
    assert logical_sim(net, []) == [1, 0]


@pytest.mark.parametrize("text,line", [
    (".model m\n.inputs a\n.outputs y\n.names a y\n2 1\n.end\n", 5),
    (".model m\n.inputs a\n.outputs y\n.names a y\n11 1\n.end\n", 5),
    (".model m\n.inputs a\n.outputs y\n.latch a y\n.end\n", 4),
    (".model m\n.inputs a\n.outputs y\n1 1\n", 4),
    (".model m\n.inputs a\n.outputs y\n.names a y\n1 1\n0 0\n.end\n", 6),
    (".model m\n.inputs a\n.outputs y\n.names a y\n1 1\n.end\n.names a y\n", 7),
])
def test_netlist_errors_carry_line(text, line):
    with pytest.raises(NetlistError) as err:
        parse_netlist(text)
    assert err.value.line == line


@pytest.mark.parametrize("text", [
    ".model m\n.inputs a\n.outputs y\n.names b y\n1 1\n.end\n",
    ".model m\n.inputs a\n.outputs y z\n.names a y\n1 1\n.end\n",
    ".model m\n.inputs a\n.outputs y\n.names a y\n1 1\n.names a y\n0 1\n.end\n",
])
def test_semantic_errors(text):
    with pytest.raises(NetlistError):
        parse_netlist(text)


def test_cycle_reports_loop():
    text = (".model c\n.inputs a\n.outputs y\n.names a z y\n11 1\n"
            ".names y z\n1 1\n.end\n")
    with pytest.raises(CycleError) as err:
        parse_netlist(text)
    assert err.value.loop[0] == err.value.loop[-1]
    assert set(err.value.loop) == {"y", "z"}


def test_wide_node_rejected():
    n = MAX_NODE_INPUTS + 1
    names = [f"i{k}" for k in range(n)]
    text = (f".model w\n.inputs {' '.join(names)}\n.outputs y\n"
            f".names {' '.join(names)} y\n{'1' * n} 1\n.end\n")
    with pytest.raises(UnsupportedWidthError):
        tech_map(parse_netlist(text))


def test_exhaustive_guard():
    assert len(input_vectors(3)) == 8
    with pytest.raises(ValueError):
        input_vectors(11)


# ---- technology mapping

covers = st.integers(1, 3).flatmap(lambda n: st.tuples(
    st.just(n),
    st.lists(st.text("01-", min_size=n, max_size=n), min_size=1, max_size=4),
    st.booleans()))


@given(covers, st.integers(2, 8))
@settings(max_examples=60, deadline=None)
def test_techmap_matches_logic(cover, fanout):
    n, rows, onset = cover
    names = [f"x{k}" for k in range(n)]
    body = "".join(f"{p} {int(onset)}\n" for p in rows)
    text = (f".model r\n.inputs {' '.join(names)}\n.outputs y\n"
            f".names {' '.join(names)} y\n{body}.end\n")
    net = parse_netlist(text)
    graph = tech_map(net, max_fanout=fanout, max_weak_depth=2)
    for v in input_vectors(n):
        assert graph.evaluate(v) == logical_sim(net, v)
    assert set(graph.counts()) == {OR2, NOT, COPY}


def test_fanout_and_weak_depth_limits(bench):
    net = parse_netlist(bench("rca4.blif"))
    graph = tech_map(net, max_fanout=2, max_weak_depth=2)
    readers = {}
    for g in graph.gates:
        for s in g.inputs:
            readers[s] = readers.get(s, 0) + 1
    assert max(readers.values()) <= 2
    weak = {s: 0 for s in graph.inputs}
    for g in graph.gates:
        if g.kind == NOT:
            weak[g.output] = 0
        else:
            depth = max(weak[s] for s in g.inputs) + 1
            assert depth <= 2
            weak[g.output] = depth
    for v in [[int(b) for b in f"{k:09b}"] for k in range(0, 512, 37)]:
        assert graph.evaluate(v) == logical_sim(net, v)


def test_long_fanout_chains_respect_limit():
    names = [f"x{k}" for k in range(6)]
    body = "".join(f".names x0 {n} y{k}\n11 1\n" for k, n in enumerate(names[1:]))
    text = (f".model f\n.inputs {' '.join(names)}\n"
            f".outputs {' '.join(f'y{k}' for k in range(5))}\n{body}.end\n")
    net = parse_netlist(text)
    graph = tech_map(net, max_fanout=2)
    readers = {}
    for g in graph.gates:
        for s in g.inputs:
            readers[s] = readers.get(s, 0) + 1
    assert max(readers.values()) <= 2
    for v in input_vectors(6):
        assert graph.evaluate(v) == logical_sim(net, v)


def test_fanout_one_rejected():
    with pytest.raises(ValueError):
        tech_map(parse_netlist(".model m\n.inputs a\n.outputs y\n.names a y\n1 1\n.end\n"),
                 max_fanout=1)


def test_output_aliasing_an_input_gets_own_cell():
    net = parse_netlist(".model w\n.inputs a\n.outputs a\n.end\n")
    graph = tech_map(net)
    assert graph.counts()[COPY] == 1
    assert graph.outputs[0][1] != "a"


# ---- scheduling and execution

def test_not_on_one_by_two(bench):
    net, graph, sched = compile_netlist(bench("not.blif"), 1, 2)
    assert len(sched.placement) == 2
    assert sched.phase_names == ["init", "load", "evaluate", "read"]
    assert sched.verify()


def test_placement_overflow_reports_counts(bench):
    with pytest.raises(PlacementError) as err:
        compile_netlist(bench("rca4.blif"), 8, 4)
    assert err.value.required == 113 and err.value.available == 32


@pytest.mark.parametrize("name,expect", [("or2.blif", [0, 1, 1, 1]), ("not.blif", [1, 0]),
                                         ("and2.blif", [0, 0, 0, 1])])
def test_gate_truth_tables(bench, name, expect):
    net, _, sched = compile_netlist(bench(name), 2, 4)
    xb = new_crossbar(2, 4)
    got = [execute_schedule(xb, sched, v)[0][0] for v in input_vectors(len(net.inputs))]
    assert got == expect


def test_full_adder_energy_rows(bench):
    net, graph, sched = compile_netlist(bench(FA_BLIF), 8, 4)
    xb = new_crossbar(8, 4)
    outs, trace = execute_schedule(xb, sched, [1, 0, 1])
    assert outs == [0, 1]
    touched = {(c, st.op_id) for st in sched.program.steps for c in st.cells()}
    rep = energy_report(trace)
    assert len(rep.entries) == len(touched)
    assert rep.per_phase["init"] > 0 and rep.per_phase["evaluate"] > 0
    assert rep.identity_error() <= 1e-9


def test_estimator_predict_matches_reference(bench):
    est = LogicInMemoryCircuit(blif=bench(FA_BLIF)).fit()
    X = np.array(input_vectors(3))
    assert np.array_equal(est.predict(X), est.reference(X))
    assert len(est.traces_) == 8
    assert est.get_params()["rows"] == 8


# ---- SPICE

def test_spice_roundtrip(bench):
    _, _, sched = compile_netlist(bench(FA_BLIF), 8, 4)
    deck = parse_spice(emit_spice(sched, DeviceParams(), [1, 1, 0]))
    assert len(deck.cells) == len(sched.placement)
    assert deck.tran_stop == sched.duration
    for pts in deck.sources.values():
        t = [p[0] for p in pts]
        assert all(b > a for a, b in zip(t, t[1:]))
        assert t[-1] == sched.duration
    assert deck.line_sources()


def test_spice_binds_inputs(bench):
    _, _, sched = compile_netlist(bench("or2.blif"), 1, 4)
    lo = parse_spice(emit_spice(sched, DeviceParams(), [0, 0])).sources
    hi = parse_spice(emit_spice(sched, DeviceParams(), [1, 1])).sources
    assert lo != hi


def test_empty_schedule_deck():
    _, _, sched = compile_netlist(".model empty\n.end\n", 1, 1)
    assert sched.phase_names == ["init"] and not sched.program.steps
    text = emit_spice(sched, DeviceParams())
    lines = text.splitlines()
    assert lines[-1] == ".end"
    assert all(line.startswith("*") for line in lines[:-1])
    deck = parse_spice(text)
    assert deck.cells == [] and deck.tran_stop == 0.0
