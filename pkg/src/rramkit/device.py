"""Threshold-switching RRAM device model.

The internal state ``x`` in [0, 1] interpolates conductance linearly between
the high-resistance state (x=0) and the low-resistance state (x=1). Above the
SET threshold the state moves toward 1 at a rate proportional to a power of
the relative overdrive and the remaining window ``1 - x``; below the RESET
threshold it moves toward 0 at a rate proportional to ``x``. Inside the
deadband nothing changes, which is what makes reads non-destructive.
"""

import bisect
import math
from dataclasses import asdict, dataclass, replace
from typing import List, NamedTuple

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_is_fitted

from . import _kernels
from .exceptions import (CalibrationError, InvalidInputError, LevelRangeError,
                         VariationInfeasibleError)

DEFAULT_DT = 1e-9
MAX_RESAMPLES = 100


@dataclass(frozen=True)
class DeviceParams:
    r_on: float = 10e3
    r_off: float = 1e6
    v_set_th: float = 1.0
    v_reset_th: float = -1.0
    k_set: float = 1e7
    k_reset: float = 1e7
    alpha_set: float = 1.0
    alpha_reset: float = 1.0
    c2c_sigma_th: float = 0.02
    c2c_sigma_rate: float = 0.02

    def violations(self):
        """Return a list of ``(field, message)`` for every broken invariant."""
        out = []
        for name, value in asdict(self).items():
            if not math.isfinite(value):
                out.append((name, "must be finite"))
        if out:
            return out
        if not self.r_on > 0:
            out.append(("r_on", "must be > 0"))
        if not self.r_off > self.r_on:
            out.append(("r_off", "must exceed r_on"))
        if not self.v_set_th > 0:
            out.append(("v_set_th", "must be > 0"))
        if not self.v_reset_th < 0:
            out.append(("v_reset_th", "must be < 0"))
        for name in ("k_set", "k_reset", "c2c_sigma_th", "c2c_sigma_rate"):
            if getattr(self, name) < 0:
                out.append((name, "must be >= 0"))
        for name in ("alpha_set", "alpha_reset"):
            if getattr(self, name) < 1:
                out.append((name, "must be >= 1"))
        return out

    def validate(self):
        bad = self.violations()
        if bad:
            name, msg = bad[0]
            raise InvalidInputError(f"DeviceParams.{name} {msg}")
        return self

    def packed(self):
        return np.array([getattr(self, f) for f in _kernels.PARAM_FIELDS], dtype=float)

    @property
    def read_threshold(self):
        """Binary decision resistance: geometric mean of LRS and HRS."""
        return math.sqrt(self.r_on * self.r_off)


@dataclass
class DeviceState:
    x: float = 0.0
    cycle_count: int = 0

    def copy(self):
        return DeviceState(self.x, self.cycle_count)


@dataclass(frozen=True)
class VariationSpec:
    d2d_sigma_r: float = 0.1
    d2d_sigma_th: float = 0.05
    d2d: bool = True
    c2c: bool = True

    def violations(self):
        out = []
        for name in ("d2d_sigma_r", "d2d_sigma_th"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value >= 0):
                out.append((name, "must be a finite value >= 0"))
        return out

    @classmethod
    def none(cls):
        return cls(0.0, 0.0, d2d=False, c2c=False)


@dataclass(frozen=True)
class Pulse:
    amplitude: float
    width: float
    dt: float = DEFAULT_DT


class Samples(NamedTuple):
    t: np.ndarray
    v: np.ndarray
    i: np.ndarray

    def energy(self):
        return float(np.trapezoid(self.v * self.i, self.t))


def resistance(state, params):
    x = state.x if isinstance(state, DeviceState) else state
    return 1.0 / (x / params.r_on + (1.0 - x) / params.r_off)


def perturb_c2c(params, rng):
    """Per-event copy of ``params`` with jittered thresholds and rates."""
    z = rng.standard_normal(4)
    s_th = params.c2c_sigma_th
    s_k = params.c2c_sigma_rate
    return replace(
        params,
        v_set_th=max(params.v_set_th + s_th * z[0], 1e-3 * params.v_set_th),
        v_reset_th=min(params.v_reset_th + s_th * z[1], 1e-3 * params.v_reset_th),
        k_set=params.k_set * math.exp(s_k * z[2]),
        k_reset=params.k_reset * math.exp(s_k * z[3]),
    )


def _check_pulse(pulse):
    for name in ("amplitude", "width", "dt"):
        if not math.isfinite(getattr(pulse, name)):
            raise InvalidInputError(f"pulse {name} must be finite")
    if pulse.width <= 0 or pulse.dt <= 0 or pulse.dt > pulse.width:
        raise InvalidInputError("pulse needs width > 0 and 0 < dt <= width")


def apply_pulse(state, params, pulse, rng=None, c2c=False):
    """Integrate one constant-amplitude pulse across a bare device.

    Returns the new state and the ``(t, v, i)`` samples at every sub-step
    boundary. With ``c2c`` on, one perturbed parameter copy is drawn from
    ``rng`` for the whole pulse.
    """
    _check_pulse(pulse)
    p = params
    if c2c:
        if rng is None:
            raise InvalidInputError("c2c sampling requires an rng")
        p = perturb_c2c(params, rng)
    n, last = _kernels.substep_count(pulse.width, pulse.dt)
    x, t, v, i = _kernels.single_pulse(float(state.x), p.packed(), float(pulse.amplitude),
                                       n, pulse.dt, last)
    switched = pulse.amplitude > p.v_set_th or pulse.amplitude < p.v_reset_th
    new = DeviceState(float(x), state.cycle_count + int(switched))
    return new, Samples(t, v, i)


def sample_instance(nominal, spec, rng):
    """Draw one device-to-device instance of ``nominal``.

    Resistances get lognormal factors, thresholds get additive normal
    shifts. Draws that break the parameter invariants are retried.
    """
    bad = spec.violations()
    if bad:
        raise InvalidInputError(f"VariationSpec.{bad[0][0]} {bad[0][1]}")
    if not spec.d2d:
        return nominal
    for _ in range(MAX_RESAMPLES):
        z = rng.standard_normal(4)
        cand = replace(
            nominal,
            r_on=nominal.r_on * math.exp(spec.d2d_sigma_r * z[0]),
            r_off=nominal.r_off * math.exp(spec.d2d_sigma_r * z[1]),
            v_set_th=nominal.v_set_th + spec.d2d_sigma_th * z[2],
            v_reset_th=nominal.v_reset_th + spec.d2d_sigma_th * z[3],
        )
        if not cand.violations():
            return cand
    raise VariationInfeasibleError(
        f"{MAX_RESAMPLES} consecutive D2D samples violated device invariants")


# ---------------------------------------------------------------- multi-level

@dataclass(frozen=True)
class LevelConfig:
    """A gradual-RESET level ladder.

    Level 0 is a plain full SET. Level ``k > 0`` is a full SET followed by a
    single RESET pulse of ``reset_amplitudes[k-1]`` volts lasting
    ``reset_width`` seconds.
    """

    n_levels: int
    targets: List[float]
    reset_amplitudes: List[float]
    read_boundaries: List[float]
    set_amplitude: float = 2.0
    set_width: float = 1e-6
    reset_width: float = 200e-9
    dt: float = DEFAULT_DT

    def violations(self):
        out = []
        n = self.n_levels
        if n < 2:
            return [("n_levels", "must be >= 2")]
        if len(self.targets) != n:
            out.append(("targets", f"needs {n} entries"))
        if len(self.reset_amplitudes) != n - 1:
            out.append(("reset_amplitudes", f"needs {n - 1} entries"))
        if len(self.read_boundaries) != n - 1:
            out.append(("read_boundaries", f"needs {n - 1} entries"))
        if out:
            return out
        if any(b <= a for a, b in zip(self.targets, self.targets[1:])):
            out.append(("targets", "must be strictly increasing"))
        if any(b <= a for a, b in zip(self.read_boundaries, self.read_boundaries[1:])):
            out.append(("read_boundaries", "must be strictly increasing"))
        for k, rb in enumerate(self.read_boundaries):
            if not self.targets[k] < rb < self.targets[k + 1]:
                out.append(("read_boundaries", f"boundary {k} not between targets {k} and {k + 1}"))
                break
        if any(b >= a for a, b in zip(self.reset_amplitudes, self.reset_amplitudes[1:])):
            out.append(("reset_amplitudes", "must be increasingly negative"))
        if self.set_width <= 0 or self.reset_width <= 0 or self.dt <= 0:
            out.append(("reset_width", "pulse widths and dt must be > 0"))
        return out

    def validate(self):
        bad = self.violations()
        if bad:
            raise InvalidInputError(f"LevelConfig.{bad[0][0]} {bad[0][1]}")
        return self

    def band(self, k):
        """Resistance interval ``(lo, hi]`` that decodes to level ``k``."""
        lo = 0.0 if k == 0 else self.read_boundaries[k - 1]
        hi = math.inf if k == self.n_levels - 1 else self.read_boundaries[k]
        return lo, hi


def full_set(state, params, cfg, rng=None, c2c=False):
    pulse = Pulse(cfg.set_amplitude, cfg.set_width, cfg.dt)
    return apply_pulse(state, params, pulse, rng, c2c)[0]


def program_level(state, params, cfg, k, rng=None, c2c=False):
    if not 0 <= k < cfg.n_levels:
        raise LevelRangeError(f"level {k} outside 0..{cfg.n_levels - 1}")
    state = full_set(state, params, cfg, rng, c2c)
    if k > 0:
        pulse = Pulse(cfg.reset_amplitudes[k - 1], cfg.reset_width, cfg.dt)
        state = apply_pulse(state, params, pulse, rng, c2c)[0]
    return state


def classify_resistance(r, cfg):
    # bisect_left counts boundaries strictly below r, so exact hits go low
    return bisect.bisect_left(cfg.read_boundaries, r)


def read_level(state, params, cfg):
    return classify_resistance(resistance(state, params), cfg)


def ladder_targets(params, n_levels, r_high=None):
    """Log-spaced targets from ``r_on`` up to ``r_high`` (default r_off/2)."""
    r_high = params.r_off / 2 if r_high is None else r_high
    return list(np.geomspace(params.r_on, r_high, n_levels))


def calibrate_levels(params=None, n_levels=6, r_high=None, set_amplitude=2.0,
                     set_width=1e-6, reset_width=200e-9, dt=DEFAULT_DT,
                     max_amplitude=12.0, iterations=60):
    """Find RESET amplitudes that land each level on its target.

    Bisection per level on the RESET amplitude (deeper amplitude, higher
    resistance), against the nominal device with C2C off.
    """
    params = DeviceParams() if params is None else params
    targets = ladder_targets(params, n_levels, r_high)
    base = LevelConfig(n_levels, targets, [0.0] * (n_levels - 1), [0.0] * (n_levels - 1),
                       set_amplitude, set_width, reset_width, dt)
    start = full_set(DeviceState(), params, base)
    amps = []
    for target in targets[1:]:
        lo, hi = params.v_reset_th, -abs(max_amplitude)

        def reached(a):
            s = apply_pulse(start, params, Pulse(a, reset_width, dt))[0]
            return resistance(s, params)

        if reached(hi) < target:
            raise CalibrationError(f"target {target:.4g} ohm unreachable at {hi} V")
        for _ in range(iterations):
            mid = 0.5 * (lo + hi)
            if reached(mid) < target:
                lo = mid
            else:
                hi = mid
        amps.append(0.5 * (lo + hi))
    bounds = [math.sqrt(a * b) for a, b in zip(targets, targets[1:])]
    return LevelConfig(n_levels, targets, amps, bounds, set_amplitude, set_width,
                       reset_width, dt).validate()


class LevelLadder(ClassifierMixin, BaseEstimator):
    """Estimator wrapper around the level ladder.

    ``fit`` calibrates the RESET amplitudes against ``device``; ``predict``
    maps read resistances to level indices, so ``score`` is the
    classification accuracy of a set of programmed cells.
    """

    def __init__(self, device=None, n_levels=6, r_high=None, set_amplitude=2.0,
                 set_width=1e-6, reset_width=200e-9, dt=DEFAULT_DT):
        self.device = device
        self.n_levels = n_levels
        self.r_high = r_high
        self.set_amplitude = set_amplitude
        self.set_width = set_width
        self.reset_width = reset_width
        self.dt = dt

    def fit(self, X=None, y=None):
        self.device_ = self.device or DeviceParams()
        self.config_ = calibrate_levels(self.device_, self.n_levels, self.r_high,
                                        self.set_amplitude, self.set_width,
                                        self.reset_width, self.dt)
        self.classes_ = np.arange(self.n_levels)
        return self

    @classmethod
    def from_config(cls, cfg, device=None):
        est = cls(device=device, n_levels=cfg.n_levels, set_amplitude=cfg.set_amplitude,
                  set_width=cfg.set_width, reset_width=cfg.reset_width, dt=cfg.dt)
        est.device_ = device or DeviceParams()
        est.config_ = cfg
        est.classes_ = np.arange(cfg.n_levels)
        return est

    def program(self, levels, rng=None, c2c=False):
        """Program fresh devices to ``levels``; return their read resistances."""
        check_is_fitted(self, "config_")
        out = np.empty(len(levels))
        for j, k in enumerate(levels):
            s = program_level(DeviceState(), self.device_, self.config_, int(k), rng, c2c)
            out[j] = resistance(s, self.device_)
        return out

    def predict(self, X):
        check_is_fitted(self, "config_")
        r = np.asarray(X, dtype=float).reshape(len(X), -1)[:, 0]
        return np.searchsorted(self.config_.read_boundaries, r, side="left")
