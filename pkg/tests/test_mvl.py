import pytest
from hypothesis import given, settings, strategies as st

from rramkit.exceptions import DimensionError, InvalidInputError, StateCorruptionError
from rramkit.mvl import (PENALTY, REWARD, AutomatonConfig, TritVector, decode_level,
                         krinsky_next, krinsky_step, program_cell, read_cell, read_trits,
                         run_automaton, software_automaton, ternary_add, trit_misread_rate,
                         trits_needed, write_trits)
from rramkit.xbar import new_crossbar


@given(st.integers(0, 3**12 - 1))
def test_trit_vector_roundtrip(v):
    t = TritVector.from_int(v, 12)
    assert t.value == v
    assert int(str(t), 3) == v
    assert TritVector.parse(f"0t{t}").value == v
    assert TritVector.parse(str(v)).value == v


def test_trits_needed():
    assert [trits_needed(v) for v in (0, 1, 2, 3, 8, 9, 26, 27)] == [0, 1, 1, 2, 2, 3, 3, 4]
    assert trits_needed(2**64 - 1) == 41


@pytest.mark.parametrize("text", ["-3", "0t12x", "abc", "0t3"])
def test_parse_rejects(text):
    with pytest.raises(InvalidInputError):
        TritVector.parse(text)


def test_bad_digits_and_width():
    with pytest.raises(InvalidInputError):
        TritVector((0, 3))
    with pytest.raises(InvalidInputError):
        TritVector.from_int(27, 3)


def test_write_read_trits(cfg):
    xb = new_crossbar(2, 4)
    v = TritVector.from_int(5 + 2 * 27, 5)
    write_trits(xb, (0, 1), v, cfg.levels)
    assert read_trits(xb, (0, 1), 5, cfg.levels) == v
    with pytest.raises(DimensionError):
        write_trits(xb, (1, 2), v, cfg.levels)


@given(st.integers(0, 80), st.integers(0, 80))
@settings(max_examples=30, deadline=None)
def test_small_adds(cfg, a, b):
    xb = new_crossbar(1, 13)
    total = ternary_add(xb, TritVector.from_int(a, 4), TritVector.from_int(b, 4), cfg.levels)
    assert len(total) == 5 and total.value == a + b


def test_add_detail_and_length_check(cfg):
    xb = new_crossbar(1, 10)
    res = ternary_add(xb, TritVector.from_int(7, 3), TritVector.from_int(8, 3), cfg.levels,
                      detail=True)
    assert res.total.value == 15
    assert len(res.sum_cells) == 4 and set(res.a_cells).isdisjoint(res.sum_cells)
    with pytest.raises(InvalidInputError):
        ternary_add(xb, TritVector.from_int(1, 2), TritVector.from_int(1, 3), cfg.levels)


def test_sum_cells_hold_the_digits(cfg):
    xb = new_crossbar(1, 7)
    res = ternary_add(xb, TritVector.from_int(8, 2), TritVector.from_int(8, 2), cfg.levels,
                      detail=True)
    assert [read_cell(xb, c, cfg.levels) for c in res.sum_cells] == list(res.total.digits)


# ---- automaton

@pytest.mark.parametrize("state,fb,want", [(1, REWARD, 1), (3, REWARD, 1), (4, REWARD, 6),
                                           (6, REWARD, 6), (1, PENALTY, 2), (3, PENALTY, 4),
                                           (4, PENALTY, 3), (6, PENALTY, 5)])
def test_krinsky_rule(state, fb, want):
    assert krinsky_next(state, 3, fb) == want


def test_automaton_config_checks(cfg):
    with pytest.raises(InvalidInputError):
        AutomatonConfig(depth=0)
    with pytest.raises(InvalidInputError):
        AutomatonConfig(c1=1.5)
    with pytest.raises(InvalidInputError):
        AutomatonConfig(depth=1, level_map={1: 0, 2: 0})
    with pytest.raises(InvalidInputError):
        AutomatonConfig(depth=5).check_ladder(cfg.levels)
    a = AutomatonConfig(depth=2)
    assert a.start_state == 2 and a.action(2) == 1 and a.action(3) == 2


def test_decode_level():
    a = AutomatonConfig(depth=2, level_map={1: 0, 2: 2, 3: 3, 4: 5})
    assert decode_level(2, a) == 2
    with pytest.raises(StateCorruptionError):
        decode_level(1, a)
    assert decode_level(1, a, nearest=True) == 1
    assert decode_level(4, a, nearest=True) == 3


def test_krinsky_step_on_device(cfg):
    a = AutomatonConfig(depth=3)
    xb = new_crossbar(1, 1)
    program_cell(xb, (0, 0), cfg.levels, a.level_map[3])
    assert krinsky_step(xb, (0, 0), a, cfg.levels, PENALTY) == 4
    assert read_cell(xb, (0, 0), cfg.levels) == 3
    assert krinsky_step(xb, (0, 0), a, cfg.levels, REWARD) == 6


@given(st.integers(0, 2**32))
@settings(max_examples=5, deadline=None)
def test_device_run_equals_software(cfg, seed):
    a = AutomatonConfig(depth=3, c1=0.5, c2=0.5)
    dev = run_automaton(new_crossbar(1, 1), a, cfg.levels, 300, seed)
    ref = software_automaton(a, 300, seed)
    assert dev.states == ref.states and dev.feedback == ref.feedback
    assert dev.misdetections == 0


def test_run_rows_and_frequency(cfg):
    a = AutomatonConfig(depth=2, c1=0.1, c2=0.9)
    run = run_automaton(new_crossbar(1, 1), a, cfg.levels, 50, 1)
    rows = list(run.rows())
    assert len(rows) == 50 and rows[0][1] == a.start_state
    f = run.action_frequency(10)
    assert f[1] + f[2] == pytest.approx(1.0)
    with pytest.raises(InvalidInputError):
        run_automaton(new_crossbar(1, 1), a, cfg.levels, 0, 1)


def test_misread_rate_without_c2c_is_zero(cfg):
    assert trit_misread_rate(new_crossbar(1, 1), cfg.levels, 60, c2c=False) == 0.0


def test_deeper_automaton_is_no_less_expedient():
    # action 1 is penalised less often, so more memory should only help
    freqs = []
    for depth in (1, 3, 5):
        a = AutomatonConfig(depth=depth, c1=0.2, c2=0.6)
        runs = [software_automaton(a, 3000, s).action_frequency(1000)[1] for s in range(30)]
        freqs.append(sum(runs) / len(runs))
    assert freqs[0] <= freqs[1] + 0.01 and freqs[1] <= freqs[2] + 0.01
    assert freqs[0] > 0.5
