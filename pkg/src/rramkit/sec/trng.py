"""Stochastic-switching TRNG.

Each trial starts from a RESET cell and applies one pulse just above the
SET threshold. The per-event threshold and rate jitter decide whether the
cell crosses the binary read threshold, so the outcome is a Bernoulli
trial whose probability rises smoothly with the pulse amplitude.
"""

import math
from dataclasses import dataclass, replace
from statistics import NormalDist

import numpy as np

from .. import _kernels
from ..exceptions import CalibrationError, InvalidInputError
from ..seeding import substream
from ..xbar import write_bit

MIN_TEST_BITS = 1000
CHUNK = 65536


@dataclass(frozen=True)
class TrngConfig:
    pulse_amplitude: float = 1.48
    pulse_width: float = 20e-9
    target_p: float = 0.5
    debias: bool = False
    cell: tuple = (0, 0)
    dt: float = 1e-9

    def violations(self):
        out = []
        if not 0.0 < self.target_p < 1.0:
            out.append(("target_p", "must lie strictly between 0 and 1"))
        if not (math.isfinite(self.pulse_amplitude) and self.pulse_amplitude > 0):
            out.append(("pulse_amplitude", "must be a finite positive voltage"))
        if not self.pulse_width > 0 or not 0 < self.dt <= self.pulse_width:
            out.append(("pulse_width", "needs width > 0 and 0 < dt <= width"))
        return out

    def validate(self):
        bad = self.violations()
        if bad:
            raise InvalidInputError(f"TrngConfig.{bad[0][0]} {bad[0][1]}")
        return self


def _jittered(params, z):
    """Vectorised per-trial C2C copies (same law as ``perturb_c2c``)."""
    P = np.tile(params.packed(), (len(z), 1))
    s_th, s_k = params.c2c_sigma_th, params.c2c_sigma_rate
    P[:, 2] = np.maximum(params.v_set_th + s_th * z[:, 0], 1e-3 * params.v_set_th)
    P[:, 3] = np.minimum(params.v_reset_th + s_th * z[:, 1], 1e-3 * params.v_reset_th)
    P[:, 4] *= np.exp(s_k * z[:, 2])
    P[:, 5] *= np.exp(s_k * z[:, 3])
    return P


def _final_x(xbar, cfg, amplitude, z, x0=None):
    p = xbar.params[cfg.cell[0]][cfg.cell[1]]
    x0 = np.zeros(len(z)) if x0 is None else np.asarray(x0, dtype=float)
    n, last = _kernels.substep_count(cfg.pulse_width, cfg.dt)
    return _kernels.batch_pulse(x0, _jittered(p, z), float(amplitude), xbar.r_selector_on,
                                n, cfg.dt, last)


def _bits(xbar, cfg, x):
    p = xbar.params[cfg.cell[0]][cfg.cell[1]]
    r = 1.0 / (x / p.r_on + (1.0 - x) / p.r_off)
    return (r < p.read_threshold).astype(np.uint8)


def trng_bit(xbar, cfg, rng):
    """One full trial on the crossbar: RESET, jittered pulse, read, RESET."""
    xbar.check_cell(cfg.cell)
    write_bit(xbar, cfg.cell, 0)
    x = _final_x(xbar, cfg, cfg.pulse_amplitude, rng.standard_normal((1, 4)),
                 [xbar.x[cfg.cell]])
    xbar.x[cfg.cell] = x[0]
    xbar.cycles[cfg.cell] += 1
    bit = xbar.sense_bit(cfg.cell)
    write_bit(xbar, cfg.cell, 0)
    return bit


def raw_bits(xbar, n, cfg, rng):
    """``n`` trials in bulk. Every trial starts from a fully RESET cell."""
    xbar.check_cell(cfg.cell)
    out = np.empty(n, dtype=np.uint8)
    for lo in range(0, n, CHUNK):
        hi = min(n, lo + CHUNK)
        out[lo:hi] = _bits(xbar, cfg, _final_x(xbar, cfg, cfg.pulse_amplitude,
                                               rng.standard_normal((hi - lo, 4))))
    xbar.x[cfg.cell] = 0.0
    xbar.cycles[cfg.cell] += 2 * int(out.sum())
    return out


def von_neumann(bits):
    """(0,1) -> 0, (1,0) -> 1, equal pairs dropped; a trailing odd bit is ignored."""
    b = np.asarray(bits, dtype=np.uint8)
    pairs = b[: len(b) // 2 * 2].reshape(-1, 2)
    keep = pairs[:, 0] != pairs[:, 1]
    return pairs[keep, 0].copy()


@dataclass
class TrngStream:
    bits: np.ndarray
    raw_consumed: int
    debiased: bool

    @property
    def bias(self):
        return float(self.bits.mean()) - 0.5 if len(self.bits) else math.nan


def trng_stream(xbar, n, cfg, rng=None, debias=None, min_output=None):
    """Collect ``n`` raw bits, debiasing when asked.

    With ``min_output`` set, raw bits keep being drawn in blocks of ``n``
    until at least that many output bits exist; the output is then cut to
    exactly ``min_output``.
    """
    if n < 1:
        raise InvalidInputError("n must be >= 1")
    rng = xbar.rng if rng is None else rng
    debias = cfg.debias if debias is None else debias
    pieces, raw = [], 0
    have = 0
    while True:
        block = raw_bits(xbar, n, cfg, rng)
        raw += n
        out = von_neumann(block) if debias else block
        pieces.append(out)
        have += len(out)
        if min_output is None or have >= min_output:
            break
    bits = np.concatenate(pieces)
    if min_output is not None:
        bits = bits[:min_output]
    return TrngStream(bits, raw, bool(debias))


def switching_probability(xbar, cfg, amplitude, z):
    return float(_bits(xbar, cfg, _final_x(xbar, cfg, amplitude, z)).mean())


def calibrate_trng(xbar, cfg, seed, trials=10_000, max_iter=50, tol=0.01):
    """Bisect the pulse amplitude until the switching rate hits ``target_p``.

    All probes reuse one set of jitter draws, so the empirical rate is a
    monotone step function of amplitude and bisection cannot oscillate.
    Returns the tuned config and the achieved rate.
    """
    cfg.validate()
    xbar.check_cell(cfg.cell)
    z = substream(seed, "trng-calibration", *cfg.cell).standard_normal((trials, 4))
    p = xbar.params[cfg.cell[0]][cfg.cell[1]]
    lo, hi = 0.5 * p.v_set_th, 2.0 * p.v_set_th
    p_lo = switching_probability(xbar, cfg, lo, z)
    p_hi = switching_probability(xbar, cfg, hi, z)
    if not p_lo <= cfg.target_p <= p_hi:
        raise CalibrationError(f"switching rate spans only [{p_lo}, {p_hi}]")
    best = (abs(p_hi - cfg.target_p), hi, p_hi)
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        pm = switching_probability(xbar, cfg, mid, z)
        best = min(best, (abs(pm - cfg.target_p), mid, pm))
        if pm == cfg.target_p:
            break
        if pm < cfg.target_p:
            lo = mid
        else:
            hi = mid
    err, amp, achieved = best
    if err > tol:
        raise CalibrationError(f"no amplitude within {tol} of p={cfg.target_p} "
                               f"after {max_iter} iterations (best {achieved})")
    return replace(cfg, pulse_amplitude=amp), achieved


@dataclass
class RandomnessReport:
    n: int
    ones: int
    runs: int
    monobit_z: float
    runs_z: float
    monobit_pass: bool
    runs_pass: bool
    alpha: float

    @property
    def passed(self):
        return self.monobit_pass and self.runs_pass


def randomness_tests(bits, alpha=0.01):
    """Monobit and Wald-Wolfowitz runs z-scores with two-sided thresholds."""
    b = np.asarray(bits, dtype=np.int8)
    n = len(b)
    if n < MIN_TEST_BITS:
        raise InvalidInputError(f"randomness tests need at least {MIN_TEST_BITS} bits, got {n}")
    crit = NormalDist().inv_cdf(1 - alpha / 2)
    ones = int(b.sum())
    zeros = n - ones
    mono = (ones - zeros) / math.sqrt(n)
    runs = 1 + int(np.count_nonzero(b[1:] != b[:-1]))
    mu = 2.0 * ones * zeros / n + 1.0
    var = (mu - 1.0) * (mu - 2.0) / (n - 1)
    # a constant string has no runs distribution; treat it as a failure
    runs_z = (runs - mu) / math.sqrt(var) if var > 0 else math.inf
    return RandomnessReport(n, ones, runs, mono, runs_z, abs(mono) <= crit,
                            abs(runs_z) <= crit, alpha)
