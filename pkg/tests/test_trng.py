import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, strategies as st

from rramkit.device import DeviceParams
from rramkit.exceptions import CalibrationError, InvalidInputError
from rramkit.sec.trng import (TrngConfig, calibrate_trng, randomness_tests, raw_bits,
                              switching_probability, trng_bit, trng_stream, von_neumann)
from rramkit.seeding import substream
from rramkit.xbar import new_crossbar


@pytest.fixture(scope="module")
def calibrated():
    xb = new_crossbar(1, 1)
    tcfg, achieved = calibrate_trng(xb, TrngConfig(), 0, trials=4000)
    return xb, tcfg, achieved


def test_von_neumann_table():
    assert list(von_neumann([0, 1, 1, 0, 0, 0, 1, 1, 1])) == [0, 1]
    assert len(von_neumann([])) == 0


@given(st.lists(st.integers(0, 1), max_size=200))
def test_von_neumann_length_bound(bits):
    out = von_neumann(bits)
    assert len(out) <= len(bits) // 2
    assert set(out) <= {0, 1}


def test_von_neumann_removes_bias():
    src = (substream(3, "biased").random(400_000) < 0.6).astype(np.uint8)
    out = von_neumann(src)
    assert abs(out.mean() - 0.5) < 0.01
    # expected yield is 2pq per pair
    assert len(out) == pytest.approx(200_000 * 2 * 0.6 * 0.4, rel=0.02)


def test_switching_probability_is_monotone():
    xb = new_crossbar(1, 1)
    z = substream(0, "z").standard_normal((2000, 4))
    ps = [switching_probability(xb, TrngConfig(), a, z) for a in (1.3, 1.45, 1.5, 1.7)]
    assert ps == sorted(ps)
    assert ps[0] < 0.2 and ps[-1] > 0.8


def test_calibration_hits_target(calibrated):
    _, tcfg, achieved = calibrated
    assert abs(achieved - 0.5) <= 0.01
    assert 1.0 < tcfg.pulse_amplitude < 2.0


def test_calibration_is_deterministic():
    a = calibrate_trng(new_crossbar(1, 1), TrngConfig(), 9, trials=2000)
    b = calibrate_trng(new_crossbar(1, 1), TrngConfig(), 9, trials=2000)
    assert a == b


def test_calibration_unreachable_target():
    # without jitter the switching rate is a step from 0 to 1
    flat = new_crossbar(1, 1, DeviceParams(c2c_sigma_th=0.0, c2c_sigma_rate=0.0))
    with pytest.raises(CalibrationError):
        calibrate_trng(flat, TrngConfig(), 0, trials=500, max_iter=8, tol=0.001)


@pytest.mark.parametrize("kw", [{"target_p": 0.0}, {"target_p": 1.0},
                                {"pulse_amplitude": -1.0}, {"pulse_width": 0.0}])
def test_config_validation(kw):
    with pytest.raises(InvalidInputError):
        TrngConfig(**kw).validate()


def test_stream_reproducible_and_unbiased(calibrated):
    xb, tcfg, _ = calibrated
    a = trng_stream(xb, 20_000, tcfg, substream(1, "s"))
    b = trng_stream(xb, 20_000, tcfg, substream(1, "s"))
    assert np.array_equal(a.bits, b.bits)
    assert abs(a.bias) < 0.03
    assert xb.x[0, 0] == 0.0


def test_min_output_draws_more_blocks(calibrated):
    xb, tcfg, _ = calibrated
    s = trng_stream(xb, 100, tcfg, substream(2, "s"), debias=True, min_output=300)
    assert len(s.bits) == 300 and s.debiased and s.raw_consumed >= 600


def test_single_trial_matches_bulk_law(calibrated):
    xb, tcfg, _ = calibrated
    rng = substream(4, "single")
    bits = [trng_bit(xb, tcfg, rng) for _ in range(400)]
    assert 0.35 < np.mean(bits) < 0.65
    assert xb.sense_bit(tcfg.cell) == 0


def test_raw_bits_checks_cell(calibrated):
    xb, tcfg, _ = calibrated
    with pytest.raises(ValueError):
        raw_bits(xb, 10, replace(tcfg, cell=(1, 0)), substream(0, "x"))


def test_randomness_tests_oracles():
    good = substream(0, "good").integers(0, 2, 100_000)
    assert randomness_tests(good).passed
    alt = np.tile([0, 1], 5000)
    rep = randomness_tests(alt)
    assert rep.monobit_pass and not rep.runs_pass
    ones = np.ones(2000, dtype=np.uint8)
    rep = randomness_tests(ones)
    assert not rep.monobit_pass and math.isinf(rep.runs_z)
    with pytest.raises(InvalidInputError):
        randomness_tests(good[:999])
