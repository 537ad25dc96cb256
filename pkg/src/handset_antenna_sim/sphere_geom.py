#!/usr/bin/env python3
"""
Spherical Geometry
Direction and rotation plumbing shared by the pattern, layout and field modules:
- Spherical directions tagged with their coordinate frame (ACS / LCS / GCS)
- Rotation matrices from (alpha, beta, gamma) bearing / downtilt / slant triples
- Direction transforms between frames
- The polarization basis rotation angle psi, computed by basis projection

Angles are degrees at every public interface. The array helpers accept any
broadcastable numpy shapes and are what the sweeps use; the scalar functions
wrap them.
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Tuple

import numpy as np

from .errors import HandsetAntennaError

logger = logging.getLogger(__name__)

# Directions closer than this to theta = 0 / 180 are treated as poles
POLE_TOLERANCE_DEG = 1e-9
ORTHONORMAL_TOLERANCE = 1e-10


class PoleDegenerate(HandsetAntennaError):
    """Raised when a polarization basis is requested at a pole of either frame"""
    pass


class Frame(str, Enum):
    """Coordinate frame of a direction"""
    ACS = "ACS"  # antenna, double-prime
    LCS = "LCS"  # UE local, single-prime
    GCS = "GCS"  # global, unprimed


# Frame reached by one inverse (down) or forward (up) transform step
_FRAME_BELOW = {Frame.GCS: Frame.LCS, Frame.LCS: Frame.ACS, Frame.ACS: Frame.ACS}
_FRAME_ABOVE = {Frame.ACS: Frame.LCS, Frame.LCS: Frame.GCS, Frame.GCS: Frame.GCS}


def wrap_phi(phi):
    """Wrap azimuth(s) in degrees to [-180, 180)"""
    wrapped = (np.asarray(phi, dtype=float) + 180.0) % 360.0 - 180.0
    # the modulo can round up to 360 for inputs just below -180
    return np.where(wrapped >= 180.0, wrapped - 360.0, wrapped)


def _wrap_scalar(angle: float) -> float:
    return float(wrap_phi(angle))


@dataclass(frozen=True)
class Direction:
    """A (theta, phi) direction in degrees, tagged with its frame"""
    theta: float
    phi: float
    frame: Frame = Frame.GCS

    def __post_init__(self):
        theta = float(self.theta)
        if not 0.0 <= theta <= 180.0:
            raise ValueError(f"theta must lie in [0, 180] degrees, got {theta}")
        object.__setattr__(self, 'theta', theta)
        object.__setattr__(self, 'phi', _wrap_scalar(self.phi))
        object.__setattr__(self, 'frame', Frame(self.frame))

    @property
    def at_pole(self) -> bool:
        return self.theta < POLE_TOLERANCE_DEG or self.theta > 180.0 - POLE_TOLERANCE_DEG

    def in_frame(self, frame: Frame) -> "Direction":
        """Same angles relabelled; only meaningful when the frames coincide"""
        return Direction(self.theta, self.phi, frame)


@dataclass(frozen=True)
class RotationAngles:
    """Bearing (about z), downtilt (about the new y) and slant (about the final x), degrees"""
    alpha: float = 0.0
    beta: float = 0.0
    gamma: float = 0.0

    def __post_init__(self):
        for name in ('alpha', 'beta', 'gamma'):
            object.__setattr__(self, name, _wrap_scalar(getattr(self, name)))

    def as_tuple(self) -> Tuple[float, float, float]:
        return (self.alpha, self.beta, self.gamma)


@dataclass(frozen=True, eq=False)
class Rotation:
    """Proper 3x3 rotation matrix, read-only"""
    matrix: np.ndarray = field(default_factory=lambda: np.eye(3))

    def __post_init__(self):
        m = np.array(self.matrix, dtype=float)
        if m.shape != (3, 3):
            raise ValueError(f"Rotation matrix must be 3x3, got shape {m.shape}")
        if (np.abs(m.T @ m - np.eye(3)).max() > ORTHONORMAL_TOLERANCE
                or abs(np.linalg.det(m) - 1.0) > ORTHONORMAL_TOLERANCE):
            raise ValueError("Matrix is not a proper rotation (orthonormal with det = 1)")
        m.setflags(write=False)
        object.__setattr__(self, 'matrix', m)

    def compose(self, other: "Rotation") -> "Rotation":
        """Rotation applying `other` first, then self"""
        return Rotation(self.matrix @ other.matrix)

    def inverse(self) -> "Rotation":
        return Rotation(self.matrix.T)

    def apply(self, vectors: np.ndarray) -> np.ndarray:
        """Rotate vectors laid out as (3, ...)"""
        return np.tensordot(self.matrix, np.asarray(vectors, dtype=float), axes=1)

    def __eq__(self, other):
        if not isinstance(other, Rotation):
            return NotImplemented
        return bool(np.array_equal(self.matrix, other.matrix))

    def __hash__(self):
        return hash(self.matrix.tobytes())


def spherical_basis(theta, phi) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Unit radial, theta and phi vectors for arrays of directions

    Args:
        theta: Polar angles in degrees
        phi: Azimuths in degrees

    Returns:
        (rho_hat, theta_hat, phi_hat), each shaped (3, *broadcast_shape)
    """
    t = np.radians(np.asarray(theta, dtype=float))
    p = np.radians(np.asarray(phi, dtype=float))
    t, p = np.broadcast_arrays(t, p)
    st, ct = np.sin(t), np.cos(t)
    sp, cp = np.sin(p), np.cos(p)
    rho_hat = np.stack((st * cp, st * sp, ct))
    theta_hat = np.stack((ct * cp, ct * sp, -st))
    phi_hat = np.stack((-sp, cp, np.zeros_like(cp)))
    return rho_hat, theta_hat, phi_hat


def unit_vector_and_basis(d: Direction) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Radial unit vector and the theta / phi polarization basis at a direction"""
    return spherical_basis(d.theta, d.phi)


def vector_to_angles(vectors: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """
    Polar angle and azimuth (degrees) of vectors laid out as (3, ...)

    Azimuth is reported as 0 at the poles.
    """
    v = np.asarray(vectors, dtype=float)
    rho_xy = np.hypot(v[0], v[1])
    theta = np.degrees(np.arctan2(rho_xy, v[2]))
    phi = wrap_phi(np.degrees(np.arctan2(v[1], v[0])))
    pole = (theta < POLE_TOLERANCE_DEG) | (theta > 180.0 - POLE_TOLERANCE_DEG)
    phi = np.where(pole, 0.0, phi)
    return theta, phi


def rotation_matrix(a: RotationAngles) -> Rotation:
    """
    Composite rotation R = Rz(alpha) . Ry(beta) . Rx(gamma)

    Args:
        a: Bearing, downtilt and slant angles in degrees

    Returns:
        Rotation mapping primed-frame vectors into the unprimed frame
    """
    alpha, beta, gamma = np.radians(a.as_tuple())
    sa, sb, sg = np.sin(alpha), np.sin(beta), np.sin(gamma)
    ca, cb, cg = np.cos(alpha), np.cos(beta), np.cos(gamma)
    return Rotation(np.array([
        [ca * cb, ca * sb * sg - sa * cg, ca * sb * cg + sa * sg],
        [sa * cb, sa * sb * sg + ca * cg, sa * sb * cg - ca * sg],
        [-sb, cb * sg, cb * cg],
    ]))


def angles_from_rotation(R: Rotation) -> RotationAngles:
    """
    Recover (alpha, beta, gamma) from a rotation built as Rz . Ry . Rx

    At gimbal lock (beta = +-90) gamma is reported as 0 and the whole in-plane
    turn goes into alpha.
    """
    m = R.matrix
    beta = np.degrees(np.arcsin(np.clip(-m[2, 0], -1.0, 1.0)))
    if np.hypot(m[2, 1], m[2, 2]) < 1e-12:
        alpha = np.degrees(np.arctan2(-m[0, 1], m[1, 1]))
        gamma = 0.0
    else:
        alpha = np.degrees(np.arctan2(m[1, 0], m[0, 0]))
        gamma = np.degrees(np.arctan2(m[2, 1], m[2, 2]))
    return RotationAngles(float(alpha), float(beta), float(gamma))


def transform_angles(R: Rotation, theta, phi, inverse: bool = True) -> Tuple[np.ndarray, np.ndarray]:
    """
    Array form of transform_direction

    Args:
        R: Rotation from the primed frame to the unprimed frame
        theta: Polar angles in degrees
        phi: Azimuths in degrees
        inverse: If True map unprimed -> primed (apply R transpose), else primed -> unprimed

    Returns:
        (theta, phi) arrays in the target frame
    """
    rho_hat, _, _ = spherical_basis(theta, phi)
    matrix = R.matrix.T if inverse else R.matrix
    return vector_to_angles(np.tensordot(matrix, rho_hat, axes=1))


def transform_direction(R: Rotation, d: Direction, inverse: bool = True,
                        target_frame: Optional[Frame] = None) -> Direction:
    """
    Express a direction in the frame on the other side of R

    Args:
        R: Rotation from the primed frame to the unprimed frame
        d: Direction to transform
        inverse: If True go down one frame (GCS -> LCS -> ACS), else up
        target_frame: Explicit frame tag for the result

    Returns:
        Transformed direction, azimuth 0 at the poles
    """
    theta, phi = transform_angles(R, d.theta, d.phi, inverse=inverse)
    if target_frame is None:
        target_frame = _FRAME_BELOW[d.frame] if inverse else _FRAME_ABOVE[d.frame]
    # Clip guards arctan2 round-off just outside [0, 180]
    return Direction(float(np.clip(theta, 0.0, 180.0)), float(phi), target_frame)


def polarization_rotation(R: Rotation, theta, phi) -> Tuple[np.ndarray, np.ndarray]:
    """
    Array form of polarization_angle, without the pole check

    Args:
        R: Rotation from the primed frame to the unprimed frame
        theta: Unprimed polar angles in degrees
        phi: Unprimed azimuths in degrees

    Returns:
        (cos_psi, sin_psi) arrays
    """
    _, theta_hat, phi_hat = spherical_basis(theta, phi)
    theta_p, phi_p = transform_angles(R, theta, phi, inverse=True)
    _, theta_hat_p, _ = spherical_basis(theta_p, phi_p)
    rotated = np.tensordot(R.matrix, theta_hat_p, axes=1)
    cos_psi = np.sum(theta_hat * rotated, axis=0)
    sin_psi = np.sum(phi_hat * rotated, axis=0)
    return cos_psi, sin_psi


def polarization_angle(R: Rotation, d: Direction) -> Tuple[float, float]:
    """
    Cosine and sine of the polarization rotation angle psi at a direction

    The rotated field follows
    [F_theta; F_phi] = [[cos psi, -sin psi], [sin psi, cos psi]] . [F'_theta'; F'_phi'].

    Raises:
        PoleDegenerate: If d or its primed image sits at a pole
    """
    d_primed = transform_direction(R, d, inverse=True)
    if d.at_pole or d_primed.at_pole:
        raise PoleDegenerate(
            f"Polarization basis undefined at pole: theta={d.theta}, theta'={d_primed.theta}")
    cos_psi, sin_psi = polarization_rotation(R, d.theta, d.phi)
    return float(cos_psi), float(sin_psi)


def rotate_field(cos_psi, sin_psi, f_theta, f_phi):
    """Apply the 2x2 polarization rotation to field components"""
    return (cos_psi * f_theta - sin_psi * f_phi,
            sin_psi * f_theta + cos_psi * f_phi)
