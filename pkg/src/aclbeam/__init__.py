"""Simulation and spectral analysis of active constrained layer sandwich beams."""

__version__ = "0.1.0"

from .model import (Actuation, BeamConfig, ConfigError, DerivedConstants, FeedbackGains,
                    LayerParams, default_config, derive_constants, load_config, validate)
from .elements import Mesh
from .fem import DofLayout, OperatorBundle, assemble
from .dynamics import EnergyTrace, StateVector, default_initial_state, energy, simulate, step_midpoint
from .spectral import (SpectrumReport, compare_models, compute_spectrum, decay_rate_fit,
                       observability_report, spectral_abscissa)
from .multilayer import MultilayerConfig, assemble_multilayer, build_incidence, shear_vector_N

__all__ = [
    "Actuation", "BeamConfig", "ConfigError", "DerivedConstants", "FeedbackGains", "LayerParams",
    "default_config", "derive_constants", "load_config", "validate", "Mesh", "DofLayout",
    "OperatorBundle", "assemble", "EnergyTrace", "StateVector", "default_initial_state", "energy",
    "simulate", "step_midpoint", "SpectrumReport", "compare_models", "compute_spectrum",
    "decay_rate_fit", "observability_report", "spectral_abscissa", "MultilayerConfig",
    "assemble_multilayer", "build_incidence", "shear_vector_N",
]
