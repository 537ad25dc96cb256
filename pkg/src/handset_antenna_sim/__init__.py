"""
Handset Antenna Simulator

A model-level simulator for multi-antenna handheld UEs that provides:
- Directive element patterns and their efficiency metrics
- Reference handset, CPE and legacy half-wave array layouts
- Frame rotations with polarization-correct field transforms
- Element-wise scenario blockage and the Model A blocker
- Sphere sweeps, imbalance statistics and combining studies
- Seeded Monte-Carlo runs with CSV export
"""

__version__ = "1.0.0"

from .config_manager import ConfigManager, ConfigurationError, SimConfig, ValidationError, load_config
from .errors import ContractViolation, HandsetAntennaError, InvalidArgument
from .sphere_geom import Direction, Frame, Rotation, RotationAngles, rotation_matrix
from .element_pattern import PatternParams, gain_db, pattern_metrics
from .device_layout import DeviceLayout, cpe_reference, legacy_halfwave_array, reference_handset
from .blockage_sns import AttenuationTable, BlockageScenario, ScenarioProbabilities, load_attenuation_table
from .field_synthesis import UeState, antenna_field_gcs, effective_gain_db, sphere_sweep
from .simulation import cdf_compute, monte_carlo_run

__all__ = [
    "ConfigManager",
    "ConfigurationError",
    "SimConfig",
    "ValidationError",
    "load_config",
    "ContractViolation",
    "HandsetAntennaError",
    "InvalidArgument",
    "Direction",
    "Frame",
    "Rotation",
    "RotationAngles",
    "rotation_matrix",
    "PatternParams",
    "gain_db",
    "pattern_metrics",
    "DeviceLayout",
    "cpe_reference",
    "legacy_halfwave_array",
    "reference_handset",
    "AttenuationTable",
    "BlockageScenario",
    "ScenarioProbabilities",
    "load_attenuation_table",
    "UeState",
    "antenna_field_gcs",
    "effective_gain_db",
    "sphere_sweep",
    "cdf_compute",
    "monte_carlo_run",
]
