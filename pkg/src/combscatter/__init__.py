"""Coupled-mode scattering for a parametrically pumped resonator probed on a frequency comb.

The frequency-domain model lives in :mod:`.model`, :mod:`.cmt_matrix` and
:mod:`.scattering`; :mod:`.digraph` evaluates and expands the same matrices
term by term, :mod:`.interference` solves the isolator and circulator
conditions, :mod:`.timedomain` is an independent integrator-based oracle and
:mod:`.sweep_fit` holds sweeps, scans and fitting.
"""
from .cmt_matrix import AmplitudeLabel, CoupledModeMatrix, amplitude_labels, build_m, parse_label
from .config import bundled_config, load_config, parse_config
from .digraph import count_digraphs, det_exact, expand_symbolic, s_element_exact, s_matrix_exact
from .errors import (CombScatterError, ConfigurationError, InstabilityError, NormalizationError,
                     NumericalError, NumericalSingularityError, ParseError)
from .interference import (Scheme, apply_conditions, circulator_conditions, circulator_thirdorder,
                           isolator_conditions, predicted_transmission)
from .model import FrequencyComb, ModelConfig, PumpKind, PumpTone, build_comb, detect_loop_relations
from .scattering import ScatteringMatrix, check_reciprocity, normalize_pump_off, scattering_matrix
from .sweep_fit import SweepSpec, fit, full_scan, load_measured, sweep

__version__ = "0.1.0"

__all__ = [
    "AmplitudeLabel", "CoupledModeMatrix", "amplitude_labels", "build_m", "parse_label",
    "bundled_config", "load_config", "parse_config",
    "count_digraphs", "det_exact", "expand_symbolic", "s_element_exact", "s_matrix_exact",
    "CombScatterError", "ConfigurationError", "InstabilityError", "NormalizationError",
    "NumericalError", "NumericalSingularityError", "ParseError",
    "Scheme", "apply_conditions", "circulator_conditions", "circulator_thirdorder",
    "isolator_conditions", "predicted_transmission",
    "FrequencyComb", "ModelConfig", "PumpKind", "PumpTone", "build_comb", "detect_loop_relations",
    "ScatteringMatrix", "check_reciprocity", "normalize_pump_off", "scattering_matrix",
    "SweepSpec", "fit", "full_scan", "load_measured", "sweep",
]
