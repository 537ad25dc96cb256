#!/usr/bin/env python3
"""
Blockage Models
Element-wise spatial non-stationarity (SNS) blockage and the legacy Model A blocker:
- Usage scenario enumeration and seeded inverse-CDF sampling
- Attenuation tables keyed by (scenario, antenna id, frequency band)
- Optional randomized per-port imbalance loss
- Model A: a fixed angular region attenuating every antenna equally

Tables and probabilities are data, loaded from YAML; nothing normative is hardcoded.
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from importlib import resources
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np
import yaml

from .device_layout import SUB_1GHZ_IDS, is_sub_1ghz
from .errors import HandsetAntennaError
from .sphere_geom import Direction, wrap_phi

logger = logging.getLogger(__name__)

PROBABILITY_TOLERANCE = 1e-9
DEFAULT_PORT_IMBALANCE_DB = (2.0, 3.0)
EXAMPLE_TABLE_RESOURCE = 'example_attenuation_table.yaml'


class AttenuationTableError(HandsetAntennaError):
    """Attenuation table file or content invalid"""
    pass


class BandNotCovered(AttenuationTableError):
    pass


class AntennaNotInBand(AttenuationTableError):
    pass


class ProbabilityError(HandsetAntennaError):
    pass


class InvalidRange(HandsetAntennaError):
    pass


class BlockageScenario(str, Enum):
    FREE_SPACE = "FreeSpace"
    ONE_HAND_BROWSING = "OneHandBrowsing"
    TWO_HAND_BROWSING = "TwoHandBrowsing"
    HEAD_HAND_TALK = "HeadHandTalk"


# Fixed enumeration order used by the inverse-CDF draw
SCENARIO_ORDER: Tuple[BlockageScenario, ...] = tuple(BlockageScenario)


def parse_scenario(value: Any) -> BlockageScenario:
    try:
        return BlockageScenario(value)
    except ValueError:
        raise AttenuationTableError(
            f"Unknown blockage scenario {value!r}; expected one of {[s.value for s in SCENARIO_ORDER]}")


@dataclass(frozen=True)
class ScenarioProbabilities:
    """Scenario probabilities in SCENARIO_ORDER"""
    values: Tuple[float, ...] = (1.0, 0.0, 0.0, 0.0)

    def __post_init__(self):
        values = tuple(float(v) for v in self.values)
        problems = self.problems(values)
        if problems:
            raise ProbabilityError("; ".join(problems))
        object.__setattr__(self, 'values', values)

    @staticmethod
    def problems(values: Sequence[float]) -> List[str]:
        found = []
        if len(values) != len(SCENARIO_ORDER):
            return [f"Expected {len(SCENARIO_ORDER)} scenario probabilities, got {len(values)}"]
        for scenario, p in zip(SCENARIO_ORDER, values):
            if not 0.0 <= p <= 1.0:
                found.append(f"Probability of {scenario.value} must lie in [0, 1], got {p}")
        total = float(sum(values))
        if abs(total - 1.0) > PROBABILITY_TOLERANCE:
            found.append(f"Scenario probabilities must sum to 1, got {total:g}")
        return found

    @classmethod
    def from_mapping(cls, mapping: Mapping[str, float]) -> "ScenarioProbabilities":
        """Build from {scenario name: probability}; missing scenarios get 0"""
        unknown = [k for k in mapping if k not in {s.value for s in SCENARIO_ORDER}]
        if unknown:
            raise ProbabilityError(f"Unknown scenarios in probabilities: {unknown}")
        return cls(tuple(float(mapping.get(s.value, 0.0)) for s in SCENARIO_ORDER))

    @classmethod
    def uniform(cls) -> "ScenarioProbabilities":
        n = len(SCENARIO_ORDER)
        return cls(tuple([1.0 / n] * n))

    def as_dict(self) -> Dict[str, float]:
        return {s.value: p for s, p in zip(SCENARIO_ORDER, self.values)}


@dataclass(frozen=True)
class FrequencyBand:
    """Half-open band (f_low_hz, f_high_hz]"""
    f_low_hz: float
    f_high_hz: float
    provenance: str = "example"

    def contains(self, carrier_hz: float) -> bool:
        return self.f_low_hz < carrier_hz <= self.f_high_hz

    @property
    def sub_1ghz(self) -> bool:
        return is_sub_1ghz(self.f_high_hz)


@dataclass(frozen=True)
class AttenuationTable:
    """Per (scenario, antenna id, band index) attenuation in dB"""
    bands: Tuple[FrequencyBand, ...]
    entries: Mapping[Tuple[BlockageScenario, int, int], float] = field(default_factory=dict)
    provenance: str = "example"

    def __post_init__(self):
        object.__setattr__(self, 'bands', tuple(self.bands))
        object.__setattr__(self, 'entries', dict(self.entries))
        problems = self.problems()
        if problems:
            raise AttenuationTableError("Invalid attenuation table: " + "; ".join(problems))

    def problems(self) -> List[str]:
        found = []
        if not self.bands:
            found.append("table has no frequency bands")
        for i, band in enumerate(self.bands):
            if band.f_high_hz <= band.f_low_hz:
                found.append(f"band {i} is empty: ({band.f_low_hz}, {band.f_high_hz}]")
            if i > 0 and band.f_low_hz < self.bands[i - 1].f_high_hz:
                found.append(f"band {i} overlaps or precedes band {i - 1}")
        for (scenario, antenna_id, band_index), value in self.entries.items():
            if not 0 <= band_index < len(self.bands):
                found.append(f"entry ({scenario.value}, #{antenna_id}) references missing band {band_index}")
                continue
            if value < 0:
                found.append(f"entry ({scenario.value}, #{antenna_id}, band {band_index}) is negative: {value}")
            if scenario is BlockageScenario.FREE_SPACE and value != 0:
                found.append(f"FreeSpace entry for #{antenna_id} must be 0 dB, got {value}")
            if self.bands[band_index].sub_1ghz and antenna_id not in SUB_1GHZ_IDS:
                found.append(f"sub-1 GHz band {band_index} has an entry for antenna #{antenna_id}; "
                             f"only {sorted(SUB_1GHZ_IDS)} are allowed")
        return found

    def band_index(self, carrier_hz: float) -> int:
        for i, band in enumerate(self.bands):
            if band.contains(carrier_hz):
                return i
        covered = ", ".join(f"({b.f_low_hz / 1e9:g}, {b.f_high_hz / 1e9:g}] GHz" for b in self.bands)
        raise BandNotCovered(f"Carrier {carrier_hz / 1e9:g} GHz is outside every table band: {covered}")

    def antenna_ids(self) -> List[int]:
        return sorted({antenna_id for _, antenna_id, _ in self.entries})

    @classmethod
    def from_dict(cls, content: Mapping[str, Any]) -> "AttenuationTable":
        """Build from the YAML schema: bands list, then entries records"""
        try:
            bands = tuple(
                FrequencyBand(float(b['f_low_hz']), float(b['f_high_hz']),
                              str(b.get('provenance', content.get('provenance', 'example'))))
                for b in content.get('bands', [])
            )
            entries = {}
            for record in content.get('entries', []):
                key = (parse_scenario(record['scenario']), int(record['antenna_id']), int(record['band_index']))
                if key in entries:
                    raise AttenuationTableError(f"Duplicate attenuation entry {key}")
                entries[key] = float(record['attenuation_db'])
        except (KeyError, TypeError, ValueError) as e:
            raise AttenuationTableError(f"Malformed attenuation table record: {e}")
        return cls(bands, entries, str(content.get('provenance', 'example')))

    def to_dict(self) -> Dict[str, Any]:
        return {
            'provenance': self.provenance,
            'bands': [{'f_low_hz': b.f_low_hz, 'f_high_hz': b.f_high_hz, 'provenance': b.provenance}
                      for b in self.bands],
            'entries': [{'scenario': s.value, 'antenna_id': i, 'band_index': b, 'attenuation_db': v}
                        for (s, i, b), v in sorted(self.entries.items(),
                                                   key=lambda kv: (SCENARIO_ORDER.index(kv[0][0]),
                                                                   kv[0][2], kv[0][1]))],
        }


def load_attenuation_table(path: Optional[str] = None) -> AttenuationTable:
    """
    Load an attenuation table YAML file

    Args:
        path: Table file; the packaged example table when None

    Returns:
        Validated AttenuationTable

    Raises:
        AttenuationTableError: If the file is missing, unparsable or violates table invariants
    """
    try:
        if path is None:
            text = resources.files('handset_antenna_sim.data').joinpath(EXAMPLE_TABLE_RESOURCE).read_text(
                encoding='utf-8')
            source = f"packaged {EXAMPLE_TABLE_RESOURCE}"
        else:
            table_path = Path(path)
            if not table_path.exists():
                raise AttenuationTableError(f"Attenuation table not found: {path}")
            text = table_path.read_text(encoding='utf-8')
            source = str(path)
        content = yaml.safe_load(text)
    except yaml.YAMLError as e:
        raise AttenuationTableError(f"Error parsing attenuation table: {e}")
    if not isinstance(content, dict):
        raise AttenuationTableError("Attenuation table must be a mapping with 'bands' and 'entries'")

    table = AttenuationTable.from_dict(content)
    logger.info(f"Attenuation table loaded from {source}: {len(table.bands)} bands, {len(table.entries)} entries")
    if table.provenance == 'example' or any(b.provenance == 'example' for b in table.bands):
        logger.warning("Attenuation table carries example values; substitute normative values for standards runs")
    return table


def sample_scenario(p: ScenarioProbabilities, rng: np.random.Generator) -> BlockageScenario:
    """
    Inverse-CDF draw of one scenario in the fixed enumeration order

    Args:
        p: Scenario probabilities
        rng: Generator owned by the caller; one uniform draw is consumed

    Returns:
        Drawn scenario
    """
    u = rng.random()
    cdf = np.cumsum(p.values)
    index = int(np.searchsorted(cdf, u, side='right'))
    if index >= len(SCENARIO_ORDER):
        # round-off in the cumulative sum: fall back to the last scenario with mass
        index = max(i for i, v in enumerate(p.values) if v > 0)
    return SCENARIO_ORDER[index]


def element_attenuation_db(t: Optional[AttenuationTable], s: BlockageScenario,
                           antenna_id: int, carrier_hz: float) -> float:
    """
    Blockage attenuation of one antenna in a scenario

    FreeSpace is 0 dB for any antenna and carrier without consulting the table.

    Raises:
        BandNotCovered: If no table band contains the carrier
        AntennaNotInBand: If the band has no entry for the antenna
    """
    if s is BlockageScenario.FREE_SPACE:
        return 0.0
    if t is None:
        raise AttenuationTableError(f"Scenario {s.value} needs an attenuation table")
    band_index = t.band_index(carrier_hz)
    key = (s, int(antenna_id), band_index)
    if key not in t.entries:
        band = t.bands[band_index]
        if band.sub_1ghz:
            raise AntennaNotInBand(
                f"Antenna #{antenna_id} is not modelled below 1 GHz; only {sorted(SUB_1GHZ_IDS)} are")
        raise AntennaNotInBand(
            f"No attenuation for antenna #{antenna_id} in {s.value}, band "
            f"({band.f_low_hz / 1e9:g}, {band.f_high_hz / 1e9:g}] GHz")
    return t.entries[key]


@dataclass(frozen=True)
class ModelARegion:
    """Angular blocking region (degrees) with a uniform attenuation for all antennas"""
    center_phi: float = 0.0
    width_phi: float = 120.0
    center_theta: float = 90.0
    height_theta: float = 80.0
    attenuation_db: float = 30.0

    def __post_init__(self):
        if not 0 < self.width_phi <= 360:
            raise InvalidRange(f"Model A width_phi must lie in (0, 360], got {self.width_phi}")
        if not 0 < self.height_theta <= 180:
            raise InvalidRange(f"Model A height_theta must lie in (0, 180], got {self.height_theta}")
        if self.attenuation_db < 0:
            raise InvalidRange(f"Model A attenuation must be non-negative, got {self.attenuation_db}")

    @classmethod
    def from_dict(cls, section: Mapping[str, Any]) -> "ModelARegion":
        defaults = cls()
        return cls(
            center_phi=float(section.get('center_phi_deg', defaults.center_phi)),
            width_phi=float(section.get('width_phi_deg', defaults.width_phi)),
            center_theta=float(section.get('center_theta_deg', defaults.center_theta)),
            height_theta=float(section.get('height_theta_deg', defaults.height_theta)),
            attenuation_db=float(section.get('attenuation_db', defaults.attenuation_db)),
        )


def model_a_attenuation_array(r: ModelARegion, theta, phi) -> np.ndarray:
    """Model A attenuation over arrays of GCS directions, boundary inclusive"""
    theta = np.asarray(theta, dtype=float)
    dphi = np.abs(wrap_phi(np.asarray(phi, dtype=float) - r.center_phi))
    inside = (dphi <= r.width_phi / 2.0) & (np.abs(theta - r.center_theta) <= r.height_theta / 2.0)
    return np.where(inside, r.attenuation_db, 0.0)


def model_a_attenuation_db(r: ModelARegion, d: Direction) -> float:
    """Model A attenuation toward a GCS direction; identical for every antenna"""
    return float(model_a_attenuation_array(r, d.theta, d.phi))


def port_imbalance_draw(enabled: bool, range_db: Tuple[float, float] = DEFAULT_PORT_IMBALANCE_DB,
                        n_ports: int = 0, rng: Optional[np.random.Generator] = None) -> np.ndarray:
    """
    Randomized per-port loss

    Args:
        enabled: Draw losses when True, otherwise return zeros
        range_db: (lo, hi) bounds of the uniform draw in dB
        n_ports: Number of ports
        rng: Generator owned by the caller, required when enabled

    Returns:
        Loss per port in dB

    Raises:
        InvalidRange: If lo > hi or lo < 0
    """
    lo, hi = (float(v) for v in range_db)
    if lo > hi or lo < 0:
        raise InvalidRange(f"Port imbalance range must satisfy 0 <= lo <= hi, got ({lo}, {hi})")
    if not enabled:
        return np.zeros(n_ports)
    if rng is None:
        raise ValueError("Port imbalance draw needs a random generator when enabled")
    return rng.uniform(lo, hi, size=n_ports)
