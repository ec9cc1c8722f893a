"""Weak-probe response of a Λ atom driven by a control field and a lower-level coupling field."""

__version__ = "0.1.0"

from .liouville import Generator, assemble_generator, linear_response, steady_state
from .model import (DriveFields, NumericalError, ProbeSpec, SystemParams,
                    ValidationError, dipole_prefactor, magnetic_field_for_rabi,
                    validate_params)
from .pulse import PulseSpec, PulseTrace, propagate, spectrum
from .response import (DopplerSpec, GroupIndex, KnobScan, ResponseSample,
                       doppler_susceptibility, group_index, knob_scan, susceptibility)

__all__ = [
    "DopplerSpec", "DriveFields", "Generator", "GroupIndex", "KnobScan",
    "NumericalError", "ProbeSpec", "PulseSpec", "PulseTrace", "ResponseSample",
    "SystemParams", "ValidationError", "assemble_generator", "dipole_prefactor",
    "doppler_susceptibility", "group_index", "knob_scan", "linear_response",
    "magnetic_field_for_rabi", "propagate", "spectrum", "steady_state",
    "susceptibility", "validate_params",
]
