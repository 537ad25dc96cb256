#!/usr/bin/env python3
"""
Device Layout
Reference UE geometries and their validation:
- Handheld reference device (150 x 70 mm) with eight candidate antenna locations
- CPE panel (0 x 200 x 200 mm) with configuration-supplied antennas
- Legacy dual-polarized half-wavelength array with isotropic elements
- Element override files and carrier-dependent validation

Device LCS: x' across the width, y' along the length (top of the device at +y'),
z' out of the screen, device center at the origin. Positions are millimetres.
"""

import logging
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
import yaml
from scipy.constants import c as SPEED_OF_LIGHT

from .element_pattern import PatternParams
from .errors import HandsetAntennaError
from .sphere_geom import RotationAngles, rotation_matrix

logger = logging.getLogger(__name__)

HANDSET_FORM_FACTOR_MM = (150.0, 70.0, 0.0)
CPE_FORM_FACTOR_MM = (0.0, 200.0, 200.0)
OUTLINE_TOLERANCE_MM = 1.0
SUB_1GHZ_LIMIT_HZ = 1e9
SUB_1GHZ_IDS = frozenset({4, 8})
LEGACY_PORT_COUNTS = (2, 4, 8)


def is_sub_1ghz(frequency_hz: float) -> bool:
    """True for frequencies in the lowest band, whose upper edge is 1 GHz inclusive"""
    return frequency_hz <= SUB_1GHZ_LIMIT_HZ


class LayoutError(HandsetAntennaError):
    """Layout construction or override failure"""
    pass


class InvalidPortCount(LayoutError):
    pass


class LayoutKind(str, Enum):
    HANDHELD = "handheld"
    CPE = "cpe"
    LEGACY_ARRAY = "legacy_array"


@dataclass(frozen=True)
class AntennaElement:
    """One antenna location: position, orientation (ACS -> LCS) and pattern"""
    id: int
    position_mm: Tuple[float, float, float]
    orientation: RotationAngles = field(default_factory=RotationAngles)
    pattern: PatternParams = field(default_factory=PatternParams)
    dual_polarized: bool = False

    def __post_init__(self):
        position = tuple(float(v) for v in self.position_mm)
        if len(position) != 3:
            raise LayoutError(f"Element {self.id}: position_mm needs 3 coordinates, got {self.position_mm}")
        object.__setattr__(self, 'position_mm', position)
        object.__setattr__(self, 'id', int(self.id))

    def boresight_lcs(self) -> np.ndarray:
        """Unit vector of the pattern maximum (x'' axis) in the device frame"""
        return rotation_matrix(self.orientation).matrix[:, 0].copy()


@dataclass(frozen=True)
class DeviceLayout:
    """Form factor (length, width, height) in mm plus an ordered element list"""
    form_factor: Tuple[float, float, float]
    elements: Tuple[AntennaElement, ...]
    kind: LayoutKind

    def __post_init__(self):
        object.__setattr__(self, 'elements', tuple(self.elements))
        object.__setattr__(self, 'kind', LayoutKind(self.kind))
        ids = [e.id for e in self.elements]
        if len(ids) != len(set(ids)):
            raise LayoutError(f"Duplicate antenna ids in layout: {sorted(ids)}")

    @property
    def ids(self) -> Tuple[int, ...]:
        return tuple(e.id for e in self.elements)

    def element(self, antenna_id: int) -> AntennaElement:
        for e in self.elements:
            if e.id == antenna_id:
                return e
        raise LayoutError(f"Antenna id {antenna_id} not in layout (ids: {list(self.ids)})")

    def distance_mm(self, id_a: int, id_b: int) -> float:
        a = np.array(self.element(id_a).position_mm)
        b = np.array(self.element(id_b).position_mm)
        return float(np.linalg.norm(a - b))

    def structural_problems(self) -> List[str]:
        """Geometry violations: off-outline positions, inward-facing boresights"""
        problems = []
        for e in self.elements:
            if not _on_outline(self.kind, self.form_factor, e.position_mm):
                problems.append(f"Element {e.id} at {e.position_mm} mm is off the {self.kind.value} outline")
            if self.kind is LayoutKind.HANDHELD:
                outward = np.array(e.position_mm)
                if np.linalg.norm(outward) > 0 and float(e.boresight_lcs() @ outward) <= 0:
                    problems.append(f"Element {e.id} boresight does not point away from the device center")
        return problems


def _on_outline(kind: LayoutKind, form_factor: Sequence[float], position: Sequence[float]) -> bool:
    length, width, height = form_factor
    x, y, z = position
    tol = OUTLINE_TOLERANCE_MM
    if kind is LayoutKind.HANDHELD:
        within = abs(x) <= width / 2 + tol and abs(y) <= length / 2 + tol and abs(z) <= height / 2 + tol
        on_edge = abs(abs(x) - width / 2) <= tol or abs(abs(y) - length / 2) <= tol
        return within and on_edge
    if kind is LayoutKind.CPE:
        return abs(x) <= width / 2 + tol and abs(y) <= length / 2 + tol and abs(z) <= height / 2 + tol
    return True


def _outward_element(antenna_id: int, x: float, y: float, pattern: PatternParams) -> AntennaElement:
    alpha = float(np.degrees(np.arctan2(y, x)))
    return AntennaElement(antenna_id, (x, y, 0.0), RotationAngles(alpha, 0.0, 0.0), pattern)


def reference_handset(pattern: Optional[PatternParams] = None) -> DeviceLayout:
    """
    Handheld reference device with the eight candidate antenna locations

    Corners #1 top-left, #2 top-right, #5 bottom-right, #6 bottom-left; edge
    midpoints #3 right, #7 left, #8 top, #4 bottom. Each boresight points along
    the center-to-position azimuth in the screen plane.

    Args:
        pattern: Element pattern for all locations (directive default)

    Returns:
        DeviceLayout of kind HANDHELD
    """
    pattern = pattern or PatternParams()
    length, width, _ = HANDSET_FORM_FACTOR_MM
    top, right = length / 2, width / 2
    placements = {
        1: (-right, top),
        2: (right, top),
        3: (right, 0.0),
        4: (0.0, -top),
        5: (right, -top),
        6: (-right, -top),
        7: (-right, 0.0),
        8: (0.0, top),
    }
    elements = [_outward_element(i, x, y, pattern) for i, (x, y) in placements.items()]
    return DeviceLayout(HANDSET_FORM_FACTOR_MM, tuple(elements), LayoutKind.HANDHELD)


def cpe_reference(elements: Iterable[AntennaElement] = ()) -> DeviceLayout:
    """CPE panel form factor; antennas come from configuration"""
    layout = DeviceLayout(CPE_FORM_FACTOR_MM, tuple(elements), LayoutKind.CPE)
    if not layout.elements:
        logger.warning("CPE layout has no antennas; supply them through layout.elements or a layout file")
    return layout


def legacy_halfwave_array(n_ports: int, carrier_hz: float) -> DeviceLayout:
    """
    Legacy UE array: n_ports / 2 dual-polarized isotropic positions at half-wavelength spacing

    Args:
        n_ports: Total port count, one of 2, 4, 8
        carrier_hz: Carrier frequency setting the spacing

    Returns:
        DeviceLayout of kind LEGACY_ARRAY, positions along x' centered on the origin

    Raises:
        InvalidPortCount: If n_ports is not 2, 4 or 8
    """
    if n_ports not in LEGACY_PORT_COUNTS:
        raise InvalidPortCount(f"Legacy array supports {LEGACY_PORT_COUNTS} ports, got {n_ports}")
    if carrier_hz <= 0:
        raise LayoutError(f"Carrier frequency must be positive, got {carrier_hz}")
    spacing_mm = SPEED_OF_LIGHT / (2.0 * carrier_hz) * 1e3
    n_positions = n_ports // 2
    offsets = (np.arange(n_positions) - (n_positions - 1) / 2.0) * spacing_mm
    elements = [
        AntennaElement(i + 1, (float(x), 0.0, 0.0), RotationAngles(), PatternParams.isotropic(), True)
        for i, x in enumerate(offsets)
    ]
    return DeviceLayout((0.0, float(abs(offsets[-1] - offsets[0])), 0.0), tuple(elements),
                        LayoutKind.LEGACY_ARRAY)


def element_from_dict(entry: Dict[str, Any], pattern: PatternParams,
                      base: Optional[AntennaElement] = None) -> AntennaElement:
    """
    Build an element from an override record, falling back to `base` for missing fields

    Record keys: id, position_mm, alpha_deg, beta_deg, gamma_deg, dual_polarized
    """
    if 'id' not in entry:
        raise LayoutError(f"Layout override record without 'id': {entry}")
    if base is None and 'position_mm' not in entry:
        raise LayoutError(f"New element {entry['id']} needs position_mm")
    base_orientation = base.orientation if base else RotationAngles()
    try:
        return AntennaElement(
            id=int(entry['id']),
            position_mm=tuple(entry.get('position_mm', base.position_mm if base else ())),
            orientation=RotationAngles(
                float(entry.get('alpha_deg', base_orientation.alpha)),
                float(entry.get('beta_deg', base_orientation.beta)),
                float(entry.get('gamma_deg', base_orientation.gamma)),
            ),
            pattern=base.pattern if base else pattern,
            dual_polarized=bool(entry.get('dual_polarized', base.dual_polarized if base else False)),
        )
    except (TypeError, ValueError) as e:
        raise LayoutError(f"Invalid layout override for element {entry.get('id')}: {e}")


def apply_overrides(layout: DeviceLayout, overrides: Sequence[Dict[str, Any]],
                    pattern: Optional[PatternParams] = None) -> DeviceLayout:
    """Replace elements with matching ids and append new ones"""
    if not overrides:
        return layout
    pattern = pattern or PatternParams()
    elements = {e.id: e for e in layout.elements}
    for entry in overrides:
        antenna_id = int(entry.get('id', -1))
        elements[antenna_id] = element_from_dict(entry, pattern, elements.get(antenna_id))
        logger.debug(f"Layout override applied to element {antenna_id}")
    return replace(layout, elements=tuple(elements.values()))


def load_layout_file(path: str) -> List[Dict[str, Any]]:
    """
    Read a layout override file

    The file holds either a list of element records or a mapping with an
    'elements' list, the same schema as the configuration layout section.
    """
    layout_path = Path(path)
    if not layout_path.exists():
        raise LayoutError(f"Layout file not found: {path}")
    try:
        with open(layout_path, 'r', encoding='utf-8') as f:
            content = yaml.safe_load(f)
    except yaml.YAMLError as e:
        raise LayoutError(f"Error parsing layout file {path}: {e}")
    if isinstance(content, dict):
        content = content.get('elements', [])
    if not isinstance(content, list):
        raise LayoutError(f"Layout file {path} must contain a list of elements")
    logger.info(f"Loaded {len(content)} element overrides from: {path}")
    return content


@dataclass(frozen=True)
class LayoutViolation:
    antenna_id: Optional[int]
    message: str


def validate(layout: DeviceLayout, carrier_hz: float,
             active_ids: Optional[Iterable[int]] = None) -> List[LayoutViolation]:
    """
    Check active antennas against the layout and the carrier-dependent rules

    At or below 1 GHz a handheld may only use locations #4 and #8.

    Args:
        layout: Device layout
        carrier_hz: Carrier frequency
        active_ids: Antennas in use; all layout ids when None

    Returns:
        Violations (unknown ids, sub-1 GHz ids, geometry); empty when valid
    """
    active = set(layout.ids) if active_ids is None else {int(i) for i in active_ids}
    violations = []
    for antenna_id in sorted(active - set(layout.ids)):
        violations.append(LayoutViolation(antenna_id, f"Antenna id {antenna_id} does not exist in the layout"))
    if layout.kind is LayoutKind.HANDHELD and is_sub_1ghz(carrier_hz):
        for antenna_id in sorted((active & set(layout.ids)) - SUB_1GHZ_IDS):
            violations.append(LayoutViolation(
                antenna_id,
                f"Antenna id {antenna_id} not allowed below 1 GHz; only {sorted(SUB_1GHZ_IDS)} are modelled"))
    for problem in layout.structural_problems():
        violations.append(LayoutViolation(None, problem))
    return violations
