"""Toolchain configuration.

A config file is a JSON object whose sections override the shipped
defaults field by field. Every section is checked against the invariants
of the type it builds, and the first problem is reported with its dotted
field name.
"""

import json
import math
from dataclasses import asdict, dataclass, field, fields, replace
from importlib import resources

from .device import DeviceParams, LevelConfig, VariationSpec
from .exceptions import ConfigError
from .sec.trng import TrngConfig
from .templates import GateRecipe


def shipped_calibration():
    text = resources.files("rramkit").joinpath("data", "calibration.json").read_text()
    return json.loads(text)


def default_levels(name="levels"):
    """The shipped six-level ladder (``levels``) or ten-level one (``automaton_levels``)."""
    return LevelConfig(**shipped_calibration()[name])


@dataclass(frozen=True)
class HarnessConfig:
    """Monte Carlo sizes and pass thresholds for the security harnesses."""

    trng_calibration_trials: int = 10_000
    trng_max_iter: int = 50
    trng_tolerance: float = 0.01
    alpha: float = 0.01
    puf_rows: int = 9
    puf_cols: int = 32
    challenge_len: int = 64
    response_len: int = 128
    rereads: int = 10
    reliability_floor: float = 90.0
    metric_band: float = 5.0
    lock_schedule_id: int = 0x5EED
    lock_accuracy_ceiling: float = 0.65

    def violations(self):
        out = []
        for name in ("trng_calibration_trials", "trng_max_iter", "puf_rows", "puf_cols",
                     "challenge_len", "response_len"):
            if getattr(self, name) < 1:
                out.append((name, "must be >= 1"))
        if self.rereads < 2:
            out.append(("rereads", "must be >= 2"))
        if not 0 < self.alpha < 1:
            out.append(("alpha", "must lie strictly between 0 and 1"))
        if not 0 < self.trng_tolerance < 1:
            out.append(("trng_tolerance", "must lie strictly between 0 and 1"))
        if self.response_len > (self.puf_rows * self.puf_cols - 1) // 2:
            out.append(("response_len", "exceeds the pairs available on the PUF array"))
        return out


@dataclass(frozen=True)
class LimConfig:
    rows: int = 8
    cols: int = 4
    max_fanout: int = 8

    def violations(self):
        out = []
        if not 1 <= self.rows <= 512:
            out.append(("rows", "must lie in 1..512"))
        if not 1 <= self.cols <= 32:
            out.append(("cols", "must lie in 1..32"))
        if self.max_fanout < 2:
            out.append(("max_fanout", "must be >= 2"))
        return out


@dataclass(frozen=True)
class AutomatonDefaults:
    depth: int = 3
    c1: float = 0.2
    c2: float = 0.6
    steps: int = 10_000

    def violations(self):
        out = []
        if self.depth < 1:
            out.append(("depth", "must be >= 1"))
        for name in ("c1", "c2"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                out.append((name, "must lie in [0, 1]"))
        if self.steps < 1:
            out.append(("steps", "must be >= 1"))
        return out


SECTIONS = {
    "device": DeviceParams,
    "variation": VariationSpec,
    "levels": LevelConfig,
    "automaton_levels": LevelConfig,
    "gates": GateRecipe,
    "trng": TrngConfig,
    "harness": HarnessConfig,
    "lim": LimConfig,
    "automaton": AutomatonDefaults,
}


@dataclass(frozen=True)
class ToolConfig:
    seed: int = 0
    r_selector_on: float = 1e3
    device: DeviceParams = field(default_factory=DeviceParams)
    variation: VariationSpec = field(default_factory=VariationSpec)
    levels: LevelConfig = field(default_factory=default_levels)
    automaton_levels: LevelConfig = field(
        default_factory=lambda: default_levels("automaton_levels"))
    gates: GateRecipe = field(default_factory=GateRecipe)
    trng: TrngConfig = field(default_factory=TrngConfig)
    harness: HarnessConfig = field(default_factory=HarnessConfig)
    lim: LimConfig = field(default_factory=LimConfig)
    automaton: AutomatonDefaults = field(default_factory=AutomatonDefaults)

    def recipe(self):
        return replace(self.gates, r_selector_on=self.r_selector_on)

    def to_dict(self):
        out = {"seed": self.seed, "r_selector_on": self.r_selector_on}
        for name in SECTIONS:
            out[name] = asdict(getattr(self, name))
        out["trng"]["cell"] = list(self.trng.cell)
        return out


def _coerce(section, name, ftype, value):
    where = f"{section}.{name}"
    if ftype in (float, "float"):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(where, f"expected a number, got {value!r}")
        if not math.isfinite(value):
            raise ConfigError(where, "must be finite")
        return float(value)
    if ftype in (int, "int"):
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(where, f"expected an integer, got {value!r}")
        return value
    if ftype in (bool, "bool"):
        if not isinstance(value, bool):
            raise ConfigError(where, f"expected true or false, got {value!r}")
        return value
    if isinstance(value, list):
        if not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in value):
            raise ConfigError(where, "expected a list of numbers")
        return tuple(value) if name == "cell" else [float(v) for v in value]
    return value


def _section(name, cls, base, data):
    if not isinstance(data, dict):
        raise ConfigError(name, "expected an object")
    known = {f.name: f for f in fields(cls)}
    changes = {}
    for key, value in data.items():
        if key not in known:
            raise ConfigError(f"{name}.{key}", "unknown field")
        changes[key] = _coerce(name, key, known[key].type, value)
    try:
        obj = replace(base, **changes)
    except (TypeError, ValueError) as exc:
        raise ConfigError(name, str(exc))
    bad = obj.violations()
    if bad:
        raise ConfigError(f"{name}.{bad[0][0]}", bad[0][1])
    return obj


def build_config(data=None):
    """Overlay a parsed JSON document onto the shipped defaults."""
    data = {} if data is None else data
    if not isinstance(data, dict):
        raise ConfigError("<root>", "config must be a JSON object")
    cfg = ToolConfig()
    changes = {}
    for key, value in data.items():
        if key == "seed":
            changes["seed"] = _coerce("<root>", "seed", int, value)
            if not 0 <= changes["seed"] < 2 ** 64:
                raise ConfigError("seed", "must be an unsigned 64-bit integer")
        elif key == "r_selector_on":
            changes[key] = _coerce("<root>", key, float, value)
            if changes[key] < 0:
                raise ConfigError(key, "must be >= 0")
        elif key in SECTIONS:
            changes[key] = _section(key, SECTIONS[key], getattr(cfg, key), value)
        else:
            raise ConfigError(key, "unknown section")
    return replace(cfg, **changes)


def load_config(path=None):
    if path is None:
        return build_config()
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError("<file>", f"invalid JSON: {exc}")
    return build_config(data)
