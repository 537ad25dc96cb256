#!/usr/bin/env python3
"""
Element Pattern
Reference UE antenna element patterns evaluated in the antenna (double-prime) frame:
- Directive pattern with parabolic vertical / horizontal attenuation and a common cap
- Legacy isotropic pattern (0 dBi everywhere)
- Polarized field amplitudes with all gain in the theta component
- Pattern metrics: peak gain, half-power beamwidths, front-to-back ratio, efficiency

Boresight is (theta'' = 90, phi'' = 0).
"""

import logging
from dataclasses import dataclass, replace
from enum import Enum
from typing import Any, Dict, Tuple, Union

import numpy as np

from .errors import HandsetAntennaError
from .sphere_geom import Direction, wrap_phi

logger = logging.getLogger(__name__)

DEFAULT_QUADRATURE_STEP_DEG = 0.25
MAX_QUADRATURE_STEP_DEG = 1.0


class PatternParameterError(HandsetAntennaError):
    """Invalid pattern parameters"""
    pass


class QuadratureTooCoarse(HandsetAntennaError):
    """Raised when the efficiency quadrature step exceeds one degree"""
    pass


class PatternKind(str, Enum):
    DIRECTIVE = "directive"
    ISOTROPIC = "isotropic"


@dataclass(frozen=True)
class PatternParams:
    """Directive element pattern parameters (gains in dBi / dB, beamwidths in degrees)"""
    kind: PatternKind = PatternKind.DIRECTIVE
    g_max: float = 5.3
    theta_3db: float = 125.0
    phi_3db: float = 125.0
    sla_v: float = 22.5
    a_max: float = 22.5

    def __post_init__(self):
        try:
            object.__setattr__(self, 'kind', PatternKind(self.kind))
        except ValueError:
            raise PatternParameterError(f"Unknown pattern kind: {self.kind!r}")
        if self.theta_3db <= 0 or self.phi_3db <= 0:
            raise PatternParameterError(
                f"Beamwidths must be positive, got theta_3db={self.theta_3db}, phi_3db={self.phi_3db}")
        if self.sla_v < 0 or self.a_max < 0:
            raise PatternParameterError(
                f"Attenuation caps must be non-negative, got sla_v={self.sla_v}, a_max={self.a_max}")

    @classmethod
    def isotropic(cls) -> "PatternParams":
        return cls(kind=PatternKind.ISOTROPIC)

    @classmethod
    def from_dict(cls, section: Dict[str, Any]) -> "PatternParams":
        """Build from a configuration 'pattern' section"""
        defaults = cls()
        return cls(
            kind=section.get('kind', defaults.kind),
            g_max=float(section.get('g_max_dbi', defaults.g_max)),
            theta_3db=float(section.get('theta_3db_deg', defaults.theta_3db)),
            phi_3db=float(section.get('phi_3db_deg', defaults.phi_3db)),
            sla_v=float(section.get('sla_v_db', defaults.sla_v)),
            a_max=float(section.get('a_max_db', defaults.a_max)),
        )

    def with_kind(self, kind: PatternKind) -> "PatternParams":
        return replace(self, kind=kind)


@dataclass(frozen=True)
class FieldPair:
    """Field amplitudes along theta_hat and phi_hat; complex after combining"""
    f_theta: Union[float, complex]
    f_phi: Union[float, complex]

    @property
    def power(self) -> float:
        """Linear gain carried by the pair"""
        return float(abs(self.f_theta) ** 2 + abs(self.f_phi) ** 2)


@dataclass(frozen=True)
class PatternMetrics:
    peak_dbi: float
    hpbw_az_deg: float
    hpbw_el_deg: float
    fbr_db: float
    efficiency_db: float


def gain_db_array(p: PatternParams, theta, phi) -> np.ndarray:
    """
    Directional gain over arrays of antenna-frame directions

    Args:
        p: Pattern parameters
        theta: theta'' in degrees
        phi: phi'' in degrees, any wrapping

    Returns:
        Gain in dBi with the broadcast shape of theta and phi
    """
    theta = np.asarray(theta, dtype=float)
    phi = np.asarray(phi, dtype=float)
    if p.kind is PatternKind.ISOTROPIC:
        return np.zeros(np.broadcast(theta, phi).shape)

    phi = wrap_phi(phi)
    a_v = -np.minimum(12.0 * ((theta - 90.0) / p.theta_3db) ** 2, p.sla_v)
    a_h = -np.minimum(12.0 * (phi / p.phi_3db) ** 2, p.a_max)
    return p.g_max - np.minimum(-(a_v + a_h), p.a_max)


def gain_db(p: PatternParams, d: Direction) -> float:
    """Directional gain (dBi) at an antenna-frame direction"""
    return float(gain_db_array(p, d.theta, d.phi))


def field_pattern_array(p: PatternParams, theta, phi) -> Tuple[np.ndarray, np.ndarray]:
    """Antenna-frame field components: sqrt of the linear gain on theta'', zero on phi''"""
    f_theta = np.sqrt(10.0 ** (gain_db_array(p, theta, phi) / 10.0))
    return f_theta, np.zeros_like(f_theta)


def field_pair(p: PatternParams, d: Direction) -> FieldPair:
    """Antenna-frame polarized field at a direction"""
    f_theta, f_phi = field_pattern_array(p, d.theta, d.phi)
    return FieldPair(float(f_theta), float(f_phi))


def _half_power_width(angles: np.ndarray, gains: np.ndarray, center_index: int) -> float:
    """Width between the -3 dB crossings either side of center_index, linear interpolation"""
    threshold = gains[center_index] - 3.0
    below = gains < threshold
    if not below.any():
        return float(angles[-1] - angles[0])

    def crossing(indices) -> float:
        previous = center_index
        for i in indices:
            if below[i]:
                g0, g1 = gains[previous], gains[i]
                a0, a1 = angles[previous], angles[i]
                return a0 + (threshold - g0) * (a1 - a0) / (g1 - g0)
            previous = i
        return angles[indices[-1]] if len(indices) else angles[center_index]

    upper = crossing(range(center_index + 1, len(angles)))
    lower = crossing(range(center_index - 1, -1, -1))
    return float(upper - lower)


def _midpoint_grid(step: float) -> Tuple[np.ndarray, np.ndarray, float, float]:
    n_theta = int(np.ceil(180.0 / step))
    n_phi = int(np.ceil(360.0 / step))
    d_theta, d_phi = 180.0 / n_theta, 360.0 / n_phi
    theta = (np.arange(n_theta) + 0.5) * d_theta
    phi = -180.0 + (np.arange(n_phi) + 0.5) * d_phi
    return theta, phi, d_theta, d_phi


def efficiency_db(p: PatternParams, quadrature_step: float = DEFAULT_QUADRATURE_STEP_DEG) -> float:
    """
    Sphere-averaged linear gain in dB, midpoint quadrature with sin(theta) weights

    Raises:
        QuadratureTooCoarse: If quadrature_step exceeds one degree
    """
    _check_step(quadrature_step)
    if p.kind is PatternKind.ISOTROPIC:
        return 0.0
    theta, phi, d_theta, d_phi = _midpoint_grid(quadrature_step)
    gains = gain_db_array(p, theta[:, None], phi[None, :])
    weights = np.sin(np.radians(theta))[:, None] * np.radians(d_theta) * np.radians(d_phi)
    total = np.sum(10.0 ** (gains / 10.0) * weights)
    return float(10.0 * np.log10(total / (4.0 * np.pi)))


def _check_step(quadrature_step: float) -> None:
    if not 0 < quadrature_step <= MAX_QUADRATURE_STEP_DEG:
        raise QuadratureTooCoarse(
            f"Quadrature step must lie in (0, {MAX_QUADRATURE_STEP_DEG}] degrees, got {quadrature_step}")


def pattern_metrics(p: PatternParams, quadrature_step: float = DEFAULT_QUADRATURE_STEP_DEG) -> PatternMetrics:
    """
    Peak gain, principal-cut beamwidths, front-to-back ratio and efficiency

    Args:
        p: Pattern parameters
        quadrature_step: Grid step in degrees, at most 1

    Returns:
        PatternMetrics; beamwidths equal the full cut span when no -3 dB crossing exists

    Raises:
        QuadratureTooCoarse: If quadrature_step exceeds one degree
    """
    _check_step(quadrature_step)
    half = int(np.ceil(180.0 / quadrature_step))

    # Both cuts are symmetric about boresight and sample it exactly
    az = np.linspace(-180.0, 180.0, 2 * half + 1)
    az_gain = gain_db_array(p, 90.0, az)
    el = np.linspace(0.0, 180.0, 2 * (half // 2) + 1)
    el_gain = gain_db_array(p, el, 0.0)

    theta, phi, _, _ = _midpoint_grid(quadrature_step)
    grid_peak = float(np.max(gain_db_array(p, theta[:, None], phi[None, :])))
    peak = max(grid_peak, float(az_gain.max()), float(el_gain.max()))

    metrics = PatternMetrics(
        peak_dbi=peak,
        hpbw_az_deg=_half_power_width(az, az_gain, half),
        hpbw_el_deg=_half_power_width(el, el_gain, half // 2),
        fbr_db=float(gain_db_array(p, 90.0, 0.0) - gain_db_array(p, 90.0, 180.0)),
        efficiency_db=efficiency_db(p, quadrature_step),
    )
    logger.debug(f"Pattern metrics ({p.kind.value}, step {quadrature_step} deg): {metrics}")
    return metrics
