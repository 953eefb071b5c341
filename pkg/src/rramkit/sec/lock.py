"""PUF-keyed locking of 4-level neural-network weights.

Weights are 2-bit level indices. Locking XORs every index with two bits of
a keystream made of the chip's responses to a fixed challenge schedule,
so only the enrolling chip can undo it. The schedule is named by a public
64-bit id; the keystream itself is never stored.
"""

import json
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ..exceptions import DimensionError, InvalidInputError, KeystreamError
from ..mvl import program_cell, read_cell
from ..seeding import substream
from .puf import GOLDEN, MASK64, mix64, puf_response

LEVEL_BITS = 2
LEVEL_VALUES = (-1.5, -0.5, 0.5, 1.5)
MLP_SHAPE = (4, 8, 2)
LOCK_FORMAT = "rramkit-locked-weights 1"


def schedule_challenge(schedule_id, k, length):
    """Challenge ``k`` of a schedule: mixer output bits, most significant first."""
    bits = []
    word = 0
    while len(bits) < length:
        z = mix64((int(schedule_id) + (k + 1) * GOLDEN + word * 0xD1B54A32D192ED03) & MASK64)
        bits.extend((z >> (63 - i)) & 1 for i in range(64))
        word += 1
    return np.array(bits[:length], dtype=np.uint8)


def keystream(inst, schedule_id, n_bits):
    """Concatenated responses to the schedule until ``n_bits`` are available."""
    out, k = [], 0
    while sum(len(r) for r in out) < n_bits:
        out.append(puf_response(inst, schedule_challenge(schedule_id, k, inst.challenge_len)))
        k += 1
    return np.concatenate(out)[:n_bits] if out else np.zeros(0, dtype=np.uint8)


def keystream_health(key):
    """A constant keystream (for instance from a zero-variation chip) is unusable."""
    key = np.asarray(key)
    return bool(len(key) and key.min() != key.max())


def _masks(key, n):
    key = np.asarray(key, dtype=np.uint8)
    if len(key) < LEVEL_BITS * n:
        raise KeystreamError(f"keystream has {len(key)} bits, locking {n} weights "
                             f"needs {LEVEL_BITS * n}")
    k = key[: LEVEL_BITS * n].reshape(n, LEVEL_BITS)
    return (k[:, 0] << 1) | k[:, 1]


def lock_weights(levels, key):
    levels = np.asarray(levels, dtype=np.int64)
    if levels.size and (levels.min() < 0 or levels.max() >= 1 << LEVEL_BITS):
        raise InvalidInputError("weight levels must lie in 0..3")
    return levels ^ _masks(key, levels.size).reshape(levels.shape)


# XOR masking is its own inverse
unlock_weights = lock_weights


# ------------------------------------------------------------------ demo MLP

@dataclass
class DemoMLP:
    """4-8-2 ReLU network whose weights are 4-level indices."""

    levels: np.ndarray
    b1: np.ndarray
    b2: np.ndarray
    shape: tuple = MLP_SHAPE

    @property
    def n_weights(self):
        i, h, o = self.shape
        return i * h + h * o

    def weights(self, levels=None):
        levels = self.levels if levels is None else np.asarray(levels)
        if levels.size != self.n_weights:
            raise DimensionError(f"expected {self.n_weights} weight levels, got {levels.size}")
        vals = np.asarray(LEVEL_VALUES)[levels.ravel()]
        i, h, o = self.shape
        return vals[: i * h].reshape(i, h), vals[i * h:].reshape(h, o)


def nn_infer(mlp, X, levels=None):
    """Class logits for a batch of inputs; ``levels`` overrides the stored weights."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != mlp.shape[0]:
        raise DimensionError(f"inputs must be n x {mlp.shape[0]}")
    W1, W2 = mlp.weights(levels)
    hidden = np.maximum(X @ W1 + mlp.b1, 0.0)
    return hidden @ W2 + mlp.b2


def accuracy(mlp, X, y, levels=None):
    return float(np.mean(np.argmax(nn_infer(mlp, X, levels), axis=1) == y))


def demo_task(seed, per_class=500):
    """Random teacher network plus a class-balanced dataset it labels perfectly."""
    rng = substream(seed, "mlp-teacher")
    i, h, o = MLP_SHAPE
    mlp = DemoMLP(rng.integers(0, 4, size=i * h + h * o), rng.normal(0, 0.5, h), np.zeros(o))
    X = rng.normal(size=(40 * per_class, i))
    y = np.argmax(nn_infer(mlp, X), axis=1)
    keep = []
    for cls in range(o):
        idx = np.flatnonzero(y == cls)
        if len(idx) < per_class:
            raise InvalidInputError(f"teacher seed {seed} yields too few class-{cls} samples")
        keep.append(idx[:per_class])
    keep = np.sort(np.concatenate(keep))
    return mlp, X[keep], y[keep]


# ------------------------------------------------------------ storage

def program_weights(xbar, levels, cfg, start=0, c2c=False):
    """Store weight levels as the four lowest ladder levels, row-major from ``start``."""
    cells = [divmod(start + k, xbar.cols) for k in range(len(levels))]
    if start + len(levels) > xbar.rows * xbar.cols:
        raise DimensionError("weight array does not fit in the crossbar")
    for cell, lv in zip(cells, levels):
        program_cell(xbar, cell, cfg, int(lv), c2c)
    return cells


def read_weights(xbar, cells, cfg):
    return np.array([min(read_cell(xbar, c, cfg), 3) for c in cells], dtype=np.int64)


def dump_locked(locked, mlp, schedule_id):
    """Locked-weight document. It names the challenge schedule, never the key."""
    return json.dumps({
        "format": LOCK_FORMAT,
        "challenge_schedule_id": f"{int(schedule_id):016x}",
        "shape": list(mlp.shape),
        "level_values": list(LEVEL_VALUES),
        "locked_levels": [int(v) for v in np.asarray(locked).ravel()],
        "b1": [float(v) for v in mlp.b1],
        "b2": [float(v) for v in mlp.b2],
    }, indent=2) + "\n"


def load_locked(text):
    doc = json.loads(text)
    if doc.get("format") != LOCK_FORMAT:
        raise InvalidInputError("not a locked-weight file")
    mlp = DemoMLP(np.array(doc["locked_levels"]), np.array(doc["b1"]), np.array(doc["b2"]),
                  tuple(doc["shape"]))
    return mlp, int(doc["challenge_schedule_id"], 16)


class WeightLocker(TransformerMixin, BaseEstimator):
    """Transformer view: ``transform`` locks level arrays, ``inverse_transform`` unlocks.

    ``fit`` derives the keystream from ``puf`` for the configured schedule,
    sized to the first array it sees.
    """

    def __init__(self, puf=None, schedule_id=0):
        self.puf = puf
        self.schedule_id = schedule_id

    def fit(self, X, y=None):
        n = np.asarray(X).size
        self.key_ = keystream(self.puf, self.schedule_id, LEVEL_BITS * n)
        self.n_weights_ = n
        return self

    def transform(self, X):
        check_is_fitted(self, "key_")
        return lock_weights(X, self.key_)

    def inverse_transform(self, X):
        check_is_fitted(self, "key_")
        return unlock_weights(X, self.key_)
