"""Variation-based PUF on a formed crossbar, seeded by the on-chip TRNG.

A chip is a crossbar with D2D variation. One cell (by default the last) is
reserved for the TRNG; every other cell is formed (fully SET) and serves
the PUF. At enrollment the TRNG produces a 64-bit pairing seed. A challenge
is folded together with that seed by a multiply-xor-shift mixer into a key
that drives a Fisher-Yates shuffle of the PUF cells; consecutive entries of
the shuffle form the disjoint comparison pairs. A response bit is 1 when
the first cell of its pair has the lower resistance.
"""

from dataclasses import dataclass, field, replace
from typing import List, Tuple

import numpy as np

from ..device import DeviceParams, VariationSpec
from ..exceptions import DimensionError, InvalidInputError
from ..seeding import MASK64, child_seed, substream
from ..templates import drive_step
from ..xbar import PulseProgram, new_crossbar, run_program
from .trng import TrngConfig, calibrate_trng, trng_stream

GOLDEN = 0x9E3779B97F4A7C15
PAIRING_BITS = 64
MIN_LOG_SPREAD = 1e-3


def mix64(z):
    """SplitMix64 finaliser: an invertible 64-bit multiply-xor-shift mixer."""
    z = (z + GOLDEN) & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def bits_to_int(bits):
    out = 0
    for b in bits:
        out = (out << 1) | int(b)
    return out


def bits_to_hex(bits):
    bits = [int(b) for b in bits]
    pad = (-len(bits)) % 4
    return format(bits_to_int([0] * pad + bits), f"0{(len(bits) + pad) // 4}x")


def challenge_key(challenge, pairing_seed):
    """Fold the challenge, 64 bits at a time, into the pairing seed."""
    h = mix64(int(pairing_seed) ^ len(challenge))
    for lo in range(0, len(challenge), 64):
        h = mix64(h ^ bits_to_int(challenge[lo:lo + 64]))
    return h


def expand_pairs(challenge, pairing_seed, n_cells, n_pairs):
    """Disjoint index pairs over ``range(n_cells)`` for one challenge."""
    if 2 * n_pairs > n_cells:
        raise DimensionError(f"{n_pairs} pairs need {2 * n_pairs} cells, have {n_cells}")
    order = list(range(n_cells))
    state = challenge_key(challenge, pairing_seed)
    for i in range(n_cells - 1, 0, -1):
        state = (state + GOLDEN) & MASK64
        j = mix64(state) % (i + 1)
        order[i], order[j] = order[j], order[i]
    return [(order[2 * k], order[2 * k + 1]) for k in range(n_pairs)]


@dataclass
class PufHealth:
    ok: bool
    log_r_spread: float
    tie_fraction: float
    reason: str = ""


@dataclass
class PufInstance:
    chip: object
    challenge_len: int
    response_len: int
    pairing_seed: int
    puf_cells: List[Tuple[int, int]]
    trng_cell: Tuple[int, int]
    chip_seed: int = 0
    trng_config: TrngConfig = None

    def __post_init__(self):
        if self.response_len > len(self.puf_cells) // 2:
            raise InvalidInputError(f"response_len {self.response_len} exceeds "
                                    f"{len(self.puf_cells) // 2} available pairs")

    def pairs(self, challenge):
        idx = expand_pairs(challenge, self.pairing_seed, len(self.puf_cells), self.response_len)
        return [(self.puf_cells[a], self.puf_cells[b]) for a, b in idx]

    def _check(self, challenge):
        challenge = np.asarray(challenge, dtype=np.uint8)
        if challenge.shape != (self.challenge_len,):
            raise InvalidInputError(f"challenge must have {self.challenge_len} bits, "
                                    f"got {challenge.size}")
        if np.any(challenge > 1):
            raise InvalidInputError("challenge bits must be 0 or 1")
        return challenge

    def _pulse(self, volts, c2c):
        rec = self.chip.recipe
        xb = self.chip
        step = drive_step(xb.rows, xb.cols, self.puf_cells, volts, rec.write_width, "init", 0)
        run_program(xb, PulseProgram(xb.rows, xb.cols, [step], rec.dt), c2c)

    def form(self, c2c=False):
        """Full SET of every PUF cell."""
        self._pulse(self.chip.recipe.v_write, c2c)

    def reform(self, c2c=True):
        """RESET then SET again; with C2C on this is one noisy re-read."""
        self._pulse(-self.chip.recipe.v_write, c2c)
        self._pulse(self.chip.recipe.v_write, c2c)


def enroll(chip_seed, rows=9, cols=32, nominal=None, spec=None, challenge_len=64,
           response_len=128, trng=None, trng_cell=None):
    """Build one chip, draw its pairing seed from its TRNG cell and form the PUF cells."""
    spec = VariationSpec() if spec is None else spec
    chip = new_crossbar(rows, cols, nominal or DeviceParams(), spec, chip_seed)
    trng_cell = (rows - 1, cols - 1) if trng_cell is None else tuple(trng_cell)
    chip.check_cell(trng_cell)
    cells = [(r, c) for r in range(rows) for c in range(cols) if (r, c) != trng_cell]
    cfg = TrngConfig(cell=trng_cell) if trng is None else trng
    cfg, _ = calibrate_trng(chip, replace(cfg, cell=trng_cell), chip_seed)
    stream = trng_stream(chip, 4 * PAIRING_BITS, cfg, substream(chip_seed, "pairing"),
                         debias=True, min_output=PAIRING_BITS)
    inst = PufInstance(chip, challenge_len, response_len, bits_to_int(stream.bits), cells,
                       trng_cell, chip_seed, cfg)
    inst.form()
    return inst


def puf_response(inst, challenge):
    """Response bits for ``challenge`` from the chip's current resistances."""
    challenge = inst._check(challenge)
    R = inst.chip.resistance_map()
    return np.array([int(R[a] < R[b]) for a, b in inst.pairs(challenge)], dtype=np.uint8)


def health_check(inst, challenge=None):
    """Flag chips whose resistance spread is too small to act as a PUF."""
    R = np.array([inst.chip.resistance(c) for c in inst.puf_cells])
    spread = float(np.std(np.log(R)))
    if challenge is None:
        challenge = np.zeros(inst.challenge_len, dtype=np.uint8)
    pairs = inst.pairs(inst._check(challenge))
    ties = sum(inst.chip.resistance(a) == inst.chip.resistance(b) for a, b in pairs)
    tie_fraction = ties / len(pairs) if pairs else 0.0
    reasons = []
    if spread < MIN_LOG_SPREAD:
        reasons.append(f"log-resistance spread {spread:.3g} below {MIN_LOG_SPREAD}")
    if tie_fraction > 0:
        reasons.append(f"{tie_fraction:.0%} of pairs tie")
    return PufHealth(not reasons, spread, tie_fraction, "; ".join(reasons))


@dataclass
class PufMetrics:
    uniformity: np.ndarray
    uniqueness: float
    reliability: np.ndarray
    bit_aliasing: np.ndarray
    n_bits: int = 0
    summary: dict = field(default_factory=dict)

    def as_dict(self):
        return {
            "n_chips": int(len(self.uniformity)),
            "n_bits": int(self.n_bits),
            "uniformity_mean": float(np.mean(self.uniformity)),
            "uniqueness": float(self.uniqueness),
            "reliability_mean": float(np.mean(self.reliability)),
            "reliability_min": float(np.min(self.reliability)),
            "bit_aliasing_mean": float(np.mean(self.bit_aliasing)),
            "uniformity": [float(v) for v in self.uniformity],
            "reliability": [float(v) for v in self.reliability],
            "bit_aliasing": [float(v) for v in self.bit_aliasing],
        }


def puf_metrics(responses, rereads):
    """Population statistics, all in percent.

    ``responses`` is ``chips x n`` reference bits; ``rereads`` is
    ``chips x m x n`` noisy repeats of the same challenges.
    """
    R = np.asarray(responses, dtype=np.uint8)
    if R.ndim != 2 or R.shape[0] < 2:
        raise InvalidInputError("uniqueness needs responses from at least 2 chips")
    k, n = R.shape
    RR = np.asarray(rereads, dtype=np.uint8)
    if RR.ndim != 3 or RR.shape[0] != k or RR.shape[2] != n or RR.shape[1] < 2:
        raise InvalidInputError("rereads must be chips x m x n with m >= 2")
    uniformity = 100.0 * R.mean(axis=1)
    hd = 0.0
    for i in range(k):
        hd += np.count_nonzero(R[i] != R[i + 1:], axis=1).sum()
    uniqueness = 100.0 * 2.0 / (k * (k - 1)) * hd / n
    reliability = 100.0 - 100.0 * (RR != R[:, None, :]).mean(axis=(1, 2))
    aliasing = 100.0 * R.mean(axis=0)
    return PufMetrics(uniformity, float(uniqueness), reliability, aliasing, n)


def random_challenges(seed, count, length):
    return substream(seed, "challenges").integers(0, 2, size=(count, length), dtype=np.uint8)


@dataclass
class Population:
    chips: List[PufInstance]
    challenges: np.ndarray
    responses: np.ndarray
    rereads: np.ndarray
    metrics: PufMetrics

    def crp_rows(self):
        for i, inst in enumerate(self.chips):
            n = inst.response_len
            for j, ch in enumerate(self.challenges):
                yield i, bits_to_hex(ch), bits_to_hex(self.responses[i, j * n:(j + 1) * n])


def evaluate_population(n_chips, n_challenges, m, seed, rows=9, cols=32, nominal=None,
                        spec=None, challenge_len=64, response_len=128, trng=None):
    """Enroll ``n_chips`` chips, collect reference and ``m`` C2C re-read responses."""
    if n_chips < 2:
        raise InvalidInputError("a population needs at least 2 chips")
    if n_challenges < 1 or m < 2:
        raise InvalidInputError("need at least 1 challenge and m >= 2 re-reads")
    challenges = random_challenges(seed, n_challenges, challenge_len)
    chips, ref, again = [], [], []
    for i in range(n_chips):
        inst = enroll(child_seed(seed, "chip", i), rows, cols, nominal, spec, challenge_len,
                      response_len, trng)
        ref.append(np.concatenate([puf_response(inst, ch) for ch in challenges]))
        reps = []
        for _ in range(m):
            inst.reform(c2c=True)
            reps.append(np.concatenate([puf_response(inst, ch) for ch in challenges]))
        again.append(reps)
        chips.append(inst)
    responses, rereads = np.array(ref), np.array(again)
    return Population(chips, challenges, responses, rereads, puf_metrics(responses, rereads))

