"""RRAM crossbar simulator with a logic-in-memory compiler, multi-valued
arithmetic and hardware-security primitives on one 1T1R array model."""

from ._version import __version__
from .device import (DeviceParams, DeviceState, LevelConfig, LevelLadder, VariationSpec,
                     apply_pulse, calibrate_levels, program_level, read_level, resistance,
                     sample_instance)
from .exceptions import RramError
from .xbar import (Crossbar, EnergyReport, PulseProgram, clone_cell, energy_report,
                   new_crossbar, read_bit, run_program, write_bit)

__all__ = [
    "Crossbar", "DeviceParams", "DeviceState", "EnergyReport", "LevelConfig", "LevelLadder",
    "PulseProgram", "RramError", "VariationSpec", "__version__", "apply_pulse",
    "calibrate_levels", "clone_cell", "energy_report", "new_crossbar", "program_level",
    "read_bit", "read_level", "resistance", "run_program", "sample_instance", "write_bit",
]
