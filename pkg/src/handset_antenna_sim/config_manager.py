#!/usr/bin/env python3
"""
Configuration Manager for the Handset Antenna Simulator
Handles YAML configuration loading, validation, and default settings, and
builds the typed SimConfig consumed by the simulation layer
"""

import copy
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

import yaml

from .blockage_sns import (
    AttenuationTable,
    AttenuationTableError,
    BandNotCovered,
    BlockageScenario,
    InvalidRange,
    ModelARegion,
    ScenarioProbabilities,
    SCENARIO_ORDER,
    load_attenuation_table,
)
from .device_layout import (
    DeviceLayout,
    LayoutError,
    LayoutKind,
    apply_overrides,
    cpe_reference,
    legacy_halfwave_array,
    load_layout_file,
    reference_handset,
    validate as validate_layout,
)
from .element_pattern import PatternParameterError, PatternParams
from .errors import HandsetAntennaError
from .sphere_geom import Direction, RotationAngles

BLOCKAGE_MODELS = ('sns', 'model_a', 'none')
ORIENTATION_DISTRIBUTIONS = ('fixed', 'uniform')


class ConfigurationError(HandsetAntennaError):
    """Custom exception for configuration-related errors"""
    pass


class ParseError(ConfigurationError):
    """The configuration file could not be read or parsed"""
    pass


class ValidationError(ConfigurationError):
    """One or more configuration invariants are violated"""

    def __init__(self, violations: List[str]):
        self.violations = list(violations)
        super().__init__("Invalid configuration:\n  - " + "\n  - ".join(self.violations))


DEFAULT_CONFIG: Dict[str, Any] = {
    'layout': {
        'kind': 'handheld',
        'n_ports': 4,
        'elements': [],
        'layout_file': None,
    },
    'pattern': {
        'kind': 'directive',
        'g_max_dbi': 5.3,
        'theta_3db_deg': 125.0,
        'phi_3db_deg': 125.0,
        'sla_v_db': 22.5,
        'a_max_db': 22.5,
    },
    'blockage': {
        'model': 'sns',
        'scenario_probabilities': {'FreeSpace': 1.0},
        'attenuation_table': None,
        'model_a_region': {
            'center_phi_deg': 0.0,
            'width_phi_deg': 120.0,
            'center_theta_deg': 90.0,
            'height_theta_deg': 80.0,
            'attenuation_db': 30.0,
        },
        'port_imbalance': {
            'enabled': False,
            'range_db': [2.0, 3.0],
        },
    },
    'run': {
        'seed': None,
        'replications': 1000,
        'theta_step_deg': 1.0,
        'phi_step_deg': 1.0,
        'carrier_hz': 3.5e9,
        'active_ids': None,
        'orientation': {
            'distribution': 'fixed',
            'alpha_deg': 0.0,
            'beta_deg': 0.0,
            'gamma_deg': 0.0,
        },
        'probe_step_deg': 10.0,
        'serving_direction': {'theta_deg': 90.0, 'phi_deg': 0.0},
        'n_jobs': 1,
        'quadrature_step_deg': 0.25,
    },
    'logging': {
        'level': 'INFO',
        'log_file': None,
    },
}


# Sections read with .get during build; parents precede their children
MAPPING_SECTIONS = (
    'layout', 'pattern', 'blockage', 'run', 'logging',
    'blockage.model_a_region', 'blockage.port_imbalance', 'run.orientation', 'run.serving_direction',
)


def _deep_merge(base: Dict[str, Any], override: Dict[str, Any]) -> Dict[str, Any]:
    merged = copy.deepcopy(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = _deep_merge(merged[key], value)
        else:
            merged[key] = copy.deepcopy(value)
    return merged


@dataclass(frozen=True)
class BlockageConfig:
    model: str
    probabilities: ScenarioProbabilities
    table: AttenuationTable
    table_path: Optional[str]
    model_a_region: ModelARegion
    port_imbalance_enabled: bool
    port_imbalance_range_db: Tuple[float, float]


@dataclass(frozen=True)
class RunConfig:
    seed: Optional[int]
    replications: int
    theta_step_deg: float
    phi_step_deg: float
    carrier_hz: float
    active_ids: Optional[Tuple[int, ...]]
    orientation_distribution: str
    fixed_orientation: RotationAngles
    probe_step_deg: float
    serving_direction: Direction
    n_jobs: int
    quadrature_step_deg: float


@dataclass(frozen=True)
class SimConfig:
    """Fully validated simulation configuration"""
    layout: DeviceLayout
    pattern: PatternParams
    blockage: BlockageConfig
    run: RunConfig
    log_level: str
    log_file: Optional[str]
    source: Optional[str] = None

    @property
    def active_ids(self) -> Tuple[int, ...]:
        return self.run.active_ids if self.run.active_ids is not None else self.layout.ids


class ConfigManager:
    """Manages configuration loading and validation for simulation runs"""

    def __init__(self, config_path: Optional[str] = None):
        """
        Initialize configuration manager

        Args:
            config_path: Path to YAML configuration file
        """
        self.config = None
        self.config_path = config_path
        self.logger = logging.getLogger(__name__)

        if config_path:
            self.load_config(config_path)
        else:
            self.load_default_config()

    def load_config(self, config_path: str) -> Dict[str, Any]:
        """
        Load configuration from YAML file and merge it over the defaults

        Args:
            config_path: Path to YAML configuration file

        Returns:
            Merged configuration dictionary

        Raises:
            ParseError: If configuration file cannot be read or parsed
        """
        config_file = Path(config_path)
        if not config_file.exists():
            raise ParseError(f"Configuration file not found: {config_path}")

        try:
            with open(config_file, 'r', encoding='utf-8') as f:
                user_config = yaml.safe_load(f) or {}
        except yaml.YAMLError as e:
            raise ParseError(f"Error parsing YAML configuration: {e}")
        except OSError as e:
            raise ParseError(f"Error reading configuration: {e}")

        if not isinstance(user_config, dict):
            raise ParseError(f"Configuration root must be a mapping, got {type(user_config).__name__}")

        unknown = sorted(set(user_config) - set(DEFAULT_CONFIG))
        if unknown:
            self.logger.warning(f"Ignoring unknown configuration sections: {unknown}")

        self.config = _deep_merge(DEFAULT_CONFIG, user_config)
        # A probability table is replaced as a whole, never merged with the FreeSpace default
        user_blockage = user_config.get('blockage')
        user_probabilities = user_blockage.get('scenario_probabilities') if isinstance(user_blockage, dict) else None
        if user_probabilities is not None:
            self.set('blockage.scenario_probabilities', copy.deepcopy(user_probabilities))
        self.config_path = config_path
        self.logger.info(f"Configuration loaded from: {config_path}")
        return self.config

    def load_default_config(self) -> Dict[str, Any]:
        """Load default configuration settings"""
        self.config = copy.deepcopy(DEFAULT_CONFIG)
        self.logger.info("Default configuration loaded")
        return self.config

    def get(self, key_path: str, default: Any = None) -> Any:
        """
        Get configuration value using dot notation

        Args:
            key_path: Dot-separated key path (e.g., 'run.orientation.distribution')
            default: Default value if key not found

        Returns:
            Configuration value or default
        """
        if not self.config:
            return default

        value = self.config
        for key in key_path.split('.'):
            if isinstance(value, dict) and key in value:
                value = value[key]
            else:
                return default
        return value

    def set(self, key_path: str, value: Any) -> None:
        """
        Set configuration value using dot notation

        Args:
            key_path: Dot-separated key path
            value: Value to set
        """
        if not self.config:
            self.config = {}

        keys = key_path.split('.')
        current = self.config
        for key in keys[:-1]:
            if key not in current or not isinstance(current[key], dict):
                current[key] = {}
            current = current[key]
        current[keys[-1]] = value

    def update_from_args(self, args) -> None:
        """
        Update configuration from command line arguments

        Args:
            args: Parsed command line arguments
        """
        if getattr(args, 'seed', None) is not None:
            self.set('run.seed', args.seed)

        if getattr(args, 'carrier_hz', None) is not None:
            self.set('run.carrier_hz', args.carrier_hz)

        if getattr(args, 'replications', None) is not None:
            self.set('run.replications', args.replications)

        if getattr(args, 'active_ids', None):
            self.set('run.active_ids', list(args.active_ids))

        if getattr(args, 'n_jobs', None) is not None:
            self.set('run.n_jobs', args.n_jobs)

        if getattr(args, 'attenuation_table', None):
            self.set('blockage.attenuation_table', args.attenuation_table)

    def save_config(self, output_path: str) -> None:
        """
        Save current configuration to YAML file

        Args:
            output_path: Path to save configuration file
        """
        try:
            with open(output_path, 'w', encoding='utf-8') as f:
                yaml.safe_dump(self.config, f, default_flow_style=False, indent=2, sort_keys=False)
            self.logger.info(f"Configuration saved to: {output_path}")
        except OSError as e:
            raise ConfigurationError(f"Error saving configuration: {e}")

    def _resolve_path(self, path: Optional[str]) -> Optional[str]:
        """Relative file references resolve against the configuration file's directory"""
        if not path:
            return None
        candidate = Path(path)
        if not candidate.is_absolute() and self.config_path:
            relative = Path(self.config_path).parent / candidate
            if relative.exists() or not candidate.exists():
                return str(relative)
        return str(candidate)

    def build(self, require_seed: bool = False) -> SimConfig:
        """
        Validate the merged configuration and build the typed SimConfig

        Every violated invariant is collected before raising.

        Args:
            require_seed: Reject a missing run.seed (randomized runs)

        Returns:
            Validated SimConfig

        Raises:
            ValidationError: Listing every violation found
        """
        violations = self._section_problems()
        if violations:
            raise ValidationError(violations)
        pattern = self._build_pattern(violations)
        layout = self._build_layout(pattern, violations)
        blockage = self._build_blockage(violations)
        run = self._build_run(violations, require_seed)

        if layout is not None and run is not None:
            # Structural problems were already collected with the layout
            violations.extend(f"run.active_ids: {v.message}"
                              for v in validate_layout(layout, run.carrier_hz, run.active_ids)
                              if v.antenna_id is not None)

        if layout is not None and blockage is not None:
            layout_ids = set(layout.ids)
            stray = [i for i in blockage.table.antenna_ids() if i not in layout_ids]
            if stray and layout.kind is LayoutKind.HANDHELD:
                violations.append(f"attenuation table has entries for unknown antenna ids {stray}")
            if run is not None and blockage.model == 'sns':
                violations.extend(self._coverage_problems(layout, blockage, run))

        level = str(self.get('logging.level', 'INFO')).upper()
        if level not in ('DEBUG', 'INFO', 'WARNING', 'ERROR', 'CRITICAL'):
            violations.append(f"logging.level must be a standard level name, got {level!r}")

        if violations:
            raise ValidationError(violations)

        self.logger.info("Configuration validation completed")
        return SimConfig(
            layout=layout,
            pattern=pattern,
            blockage=blockage,
            run=run,
            log_level=level,
            log_file=self.get('logging.log_file'),
            source=self.config_path,
        )

    def _section_problems(self) -> List[str]:
        """Sections that are not mappings; their children are skipped"""
        problems = []
        bad = []
        for key in MAPPING_SECTIONS:
            if any(key.startswith(f"{parent}.") for parent in bad):
                continue
            value = self.get(key)
            if not isinstance(value, dict):
                bad.append(key)
                problems.append(f"{key} must be a mapping, got {type(value).__name__}")
        return problems

    @staticmethod
    def _coverage_problems(layout: DeviceLayout, blockage: BlockageConfig, run: RunConfig) -> List[str]:
        """Every drawable non-free scenario must resolve for every active antenna at the carrier"""
        scenarios = [s for s, p in zip(SCENARIO_ORDER, blockage.probabilities.values)
                     if p > 0 and s is not BlockageScenario.FREE_SPACE]
        if not scenarios:
            return []
        try:
            band_index = blockage.table.band_index(run.carrier_hz)
        except BandNotCovered as e:
            return [f"blockage: {e}"]
        active = run.active_ids if run.active_ids is not None else layout.ids
        missing = [f"{s.value}/#{i}" for s in scenarios for i in active
                   if i in layout.ids and (s, i, band_index) not in blockage.table.entries]
        if missing:
            return [f"blockage: attenuation table band {band_index} lacks entries for {missing}"]
        return []

    def _build_pattern(self, violations: List[str]) -> Optional[PatternParams]:
        try:
            return PatternParams.from_dict(self.get('pattern', {}))
        except (PatternParameterError, TypeError, ValueError) as e:
            violations.append(f"pattern: {e}")
            return None

    def _build_layout(self, pattern: Optional[PatternParams], violations: List[str]) -> Optional[DeviceLayout]:
        pattern = pattern or PatternParams()
        kind = self.get('layout.kind', 'handheld')
        overrides = list(self.get('layout.elements') or [])
        try:
            layout_file = self._resolve_path(self.get('layout.layout_file'))
            if layout_file:
                overrides.extend(load_layout_file(layout_file))

            if kind == LayoutKind.HANDHELD.value:
                layout = reference_handset(pattern)
            elif kind == LayoutKind.CPE.value:
                layout = cpe_reference()
            elif kind == LayoutKind.LEGACY_ARRAY.value:
                layout = legacy_halfwave_array(int(self.get('layout.n_ports', 4)),
                                               float(self.get('run.carrier_hz', 3.5e9)))
            else:
                violations.append(f"layout.kind must be one of {[k.value for k in LayoutKind]}, got {kind!r}")
                return None
            layout = apply_overrides(layout, overrides, pattern)
        except (LayoutError, TypeError, ValueError) as e:
            violations.append(f"layout: {e}")
            return None

        if layout.kind is LayoutKind.HANDHELD:
            bad_ids = sorted(i for i in layout.ids if not 1 <= i <= 8)
            if bad_ids:
                violations.append(f"handheld antenna ids must lie in 1..8, got {bad_ids}")
        violations.extend(f"layout: {p}" for p in layout.structural_problems())
        return layout

    def _build_blockage(self, violations: List[str]) -> Optional[BlockageConfig]:
        model = self.get('blockage.model', 'sns')
        if model not in BLOCKAGE_MODELS:
            violations.append(f"blockage.model must be one of {BLOCKAGE_MODELS}, got {model!r}")

        probabilities = None
        raw = self.get('blockage.scenario_probabilities') or {}
        if isinstance(raw, (list, tuple)):
            raw = dict(zip((s.value for s in SCENARIO_ORDER), raw))
        if not isinstance(raw, dict):
            violations.append("blockage.scenario_probabilities must be a mapping or a list of 4 values")
        else:
            unknown = [k for k in raw if k not in {s.value for s in SCENARIO_ORDER}]
            if unknown:
                violations.append(f"unknown blockage scenarios {unknown}")
            try:
                values = [float(raw.get(s.value, 0.0)) for s in SCENARIO_ORDER]
                problems = ScenarioProbabilities.problems(values)
                violations.extend(f"blockage.scenario_probabilities: {p}" for p in problems)
                if not problems and not unknown:
                    probabilities = ScenarioProbabilities(tuple(values))
            except (TypeError, ValueError) as e:
                violations.append(f"blockage.scenario_probabilities: {e}")

        table = None
        table_path = self._resolve_path(self.get('blockage.attenuation_table'))
        try:
            table = load_attenuation_table(table_path)
        except AttenuationTableError as e:
            violations.append(f"blockage.attenuation_table: {e}")

        region = None
        try:
            region = ModelARegion.from_dict(self.get('blockage.model_a_region', {}))
        except (InvalidRange, TypeError, ValueError) as e:
            violations.append(f"blockage.model_a_region: {e}")

        enabled = bool(self.get('blockage.port_imbalance.enabled', False))
        range_db = self.get('blockage.port_imbalance.range_db', [2.0, 3.0])
        try:
            lo, hi = (float(v) for v in range_db)
            if lo > hi or lo < 0:
                violations.append(f"blockage.port_imbalance.range_db must satisfy 0 <= lo <= hi, got {range_db}")
        except (TypeError, ValueError):
            violations.append(f"blockage.port_imbalance.range_db must be [lo, hi], got {range_db!r}")
            lo, hi = 2.0, 3.0

        if probabilities is None or table is None or region is None or model not in BLOCKAGE_MODELS:
            return None
        return BlockageConfig(model, probabilities, table, table_path, region, enabled, (lo, hi))

    def _build_run(self, violations: List[str], require_seed: bool) -> Optional[RunConfig]:
        start = len(violations)
        run = self.get('run', {})

        seed = run.get('seed')
        if seed is None:
            if require_seed:
                violations.append("run.seed is mandatory for randomized runs")
        elif isinstance(seed, bool) or not isinstance(seed, int) or not 0 <= seed < 2 ** 64:
            violations.append(f"run.seed must be an unsigned 64-bit integer, got {seed!r}")

        def number(key: str, positive: bool = True) -> float:
            try:
                value = float(run.get(key))
            except (TypeError, ValueError):
                violations.append(f"run.{key} must be a number, got {run.get(key)!r}")
                return 0.0
            if positive and value <= 0:
                violations.append(f"run.{key} must be positive, got {value}")
            return value

        replications = run.get('replications')
        if isinstance(replications, bool) or not isinstance(replications, int) or replications < 1:
            violations.append(f"run.replications must be a positive integer, got {replications!r}")
        theta_step = number('theta_step_deg')
        phi_step = number('phi_step_deg')
        for key, step, span in (('theta_step_deg', theta_step, 180.0), ('phi_step_deg', phi_step, 360.0)):
            if step > 0 and abs(span / step - round(span / step)) > 1e-9:
                violations.append(f"run.{key} must divide {span:g} evenly, got {step}")
        carrier_hz = number('carrier_hz')
        probe_step = number('probe_step_deg')
        if probe_step > 0 and abs(180.0 / probe_step - round(180.0 / probe_step)) > 1e-9:
            violations.append(f"run.probe_step_deg must divide 180 evenly, got {probe_step}")
        quadrature_step = number('quadrature_step_deg')
        if quadrature_step > 1.0:
            violations.append(f"run.quadrature_step_deg must not exceed 1 degree, got {quadrature_step}")

        n_jobs = run.get('n_jobs', 1)
        if isinstance(n_jobs, bool) or not isinstance(n_jobs, int) or n_jobs < 1:
            violations.append(f"run.n_jobs must be a positive integer, got {n_jobs!r}")

        active_ids = run.get('active_ids')
        if active_ids is not None:
            try:
                active_ids = tuple(int(i) for i in active_ids)
            except (TypeError, ValueError):
                violations.append(f"run.active_ids must be a list of integers, got {active_ids!r}")
                active_ids = None

        orientation = run.get('orientation') or {}
        distribution = orientation.get('distribution', 'fixed')
        if distribution not in ORIENTATION_DISTRIBUTIONS:
            violations.append(f"run.orientation.distribution must be one of {ORIENTATION_DISTRIBUTIONS}, "
                              f"got {distribution!r}")
        try:
            fixed = RotationAngles(float(orientation.get('alpha_deg', 0.0)),
                                   float(orientation.get('beta_deg', 0.0)),
                                   float(orientation.get('gamma_deg', 0.0)))
        except (TypeError, ValueError) as e:
            violations.append(f"run.orientation: {e}")
            fixed = RotationAngles()

        serving = run.get('serving_direction') or {}
        try:
            serving_direction = Direction(float(serving.get('theta_deg', 90.0)), float(serving.get('phi_deg', 0.0)))
        except (TypeError, ValueError) as e:
            violations.append(f"run.serving_direction: {e}")
            serving_direction = Direction(90.0, 0.0)

        if len(violations) > start:
            return None
        return RunConfig(
            seed=seed,
            replications=replications,
            theta_step_deg=theta_step,
            phi_step_deg=phi_step,
            carrier_hz=carrier_hz,
            active_ids=active_ids,
            orientation_distribution=distribution,
            fixed_orientation=fixed,
            probe_step_deg=probe_step,
            serving_direction=serving_direction,
            n_jobs=n_jobs,
            quadrature_step_deg=quadrature_step,
        )


def load_config(path: Optional[str] = None, require_seed: bool = False) -> SimConfig:
    """
    Load, default-fill and validate a configuration file

    Args:
        path: YAML configuration file; defaults only when None
        require_seed: Reject configurations without run.seed

    Returns:
        Validated SimConfig

    Raises:
        ParseError: If the file cannot be read or parsed
        ValidationError: Listing every violated invariant
    """
    return ConfigManager(path).build(require_seed=require_seed)
