#!/usr/bin/env python3
"""
Field Synthesis
Per-port polarized receive fields of a UE in the global frame:
- Double rotation chain GCS -> LCS (UE orientation) -> ACS (element orientation)
- Element-wise blockage, per-port loss and optional Model A scaling
- Effective gain, single-ray response and coherent combining
- Dense sphere sweeps with imbalance, composite coverage and pair-combining statistics

Ports: a single-polarized element gives one port labelled by its id ("4");
a dual-polarized element gives two ports ("1a", "1b") rolled by 0 and 90 degrees.
"""

import itertools
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.constants import c as SPEED_OF_LIGHT

from .blockage_sns import (
    AttenuationTable,
    BlockageScenario,
    ModelARegion,
    element_attenuation_db,
    model_a_attenuation_array,
)
from .device_layout import AntennaElement, DeviceLayout
from .element_pattern import FieldPair, field_pattern_array
from .errors import HandsetAntennaError, InvalidArgument
from .sphere_geom import (
    Direction,
    Frame,
    PoleDegenerate,
    RotationAngles,
    polarization_rotation,
    rotate_field,
    rotation_matrix,
    spherical_basis,
    transform_angles,
    transform_direction,
)

logger = logging.getLogger(__name__)

GAIN_FLOOR_DB = -400.0
DUAL_POLARIZATION_ROLL_DEG = 90.0
STEP_TOLERANCE = 1e-9


class EmptyInput(HandsetAntennaError):
    pass


class TooFewAntennas(HandsetAntennaError):
    pass


class UnknownAntenna(HandsetAntennaError):
    pass


@dataclass(frozen=True)
class AntennaPort:
    """One field pattern of an element; dual-polarized elements carry two"""
    label: str
    element: AntennaElement
    roll_deg: float = 0.0

    @property
    def antenna_id(self) -> int:
        return self.element.id

    @property
    def orientation(self) -> RotationAngles:
        o = self.element.orientation
        return RotationAngles(o.alpha, o.beta, o.gamma + self.roll_deg)


def layout_ports(layout: DeviceLayout) -> Tuple[AntennaPort, ...]:
    """Expand layout elements into ports, in element order"""
    ports = []
    for e in layout.elements:
        if e.dual_polarized:
            ports.append(AntennaPort(f"{e.id}a", e, 0.0))
            ports.append(AntennaPort(f"{e.id}b", e, DUAL_POLARIZATION_ROLL_DEG))
        else:
            ports.append(AntennaPort(str(e.id), e, 0.0))
    return tuple(ports)


@dataclass(frozen=True)
class UeState:
    """UE layout, orientation (LCS -> GCS), blockage scenario, carrier and per-port loss"""
    layout: DeviceLayout
    ue_orientation: RotationAngles = field(default_factory=RotationAngles)
    scenario: BlockageScenario = BlockageScenario.FREE_SPACE
    carrier_hz: float = 3.5e9
    port_loss_db: Tuple[float, ...] = ()

    def __post_init__(self):
        n_ports = len(self.ports)
        losses = tuple(float(v) for v in self.port_loss_db) or (0.0,) * n_ports
        if len(losses) != n_ports:
            raise ValueError(f"Per-port loss list has {len(losses)} entries for {n_ports} ports")
        if any(v < 0 for v in losses):
            raise ValueError(f"Per-port losses must be non-negative, got {losses}")
        object.__setattr__(self, 'port_loss_db', losses)
        object.__setattr__(self, 'scenario', BlockageScenario(self.scenario))

    @property
    def ports(self) -> Tuple[AntennaPort, ...]:
        return layout_ports(self.layout)

    def port(self, antenna_id: Union[int, str], polarization: int = 0) -> Tuple[int, AntennaPort]:
        """Index and port for an antenna id (or port label); polarization picks a/b"""
        ports = self.ports
        for i, p in enumerate(ports):
            if p.label == str(antenna_id):
                return i, p
        matches = [(i, p) for i, p in enumerate(ports) if str(p.antenna_id) == str(antenna_id)]
        if not matches:
            raise UnknownAntenna(f"Antenna {antenna_id} not in layout (ports: {[p.label for p in ports]})")
        if polarization >= len(matches):
            raise UnknownAntenna(f"Antenna {antenna_id} has no polarization {polarization}")
        return matches[polarization]


def port_fields_gcs(u: UeState, port_index: int, theta, phi,
                    table: Optional[AttenuationTable] = None,
                    blocker: Optional[ModelARegion] = None) -> Tuple[np.ndarray, np.ndarray]:
    """
    GCS field components of one port over arrays of directions

    Args:
        u: UE state
        port_index: Index into u.ports
        theta: GCS polar angles in degrees
        phi: GCS azimuths in degrees
        table: Attenuation table for the SNS scenario lookup
        blocker: Optional Model A region applied on top

    Returns:
        (f_theta, f_phi) arrays, already scaled by blockage and port loss
    """
    port = u.ports[port_index]
    r_ue = rotation_matrix(u.ue_orientation)
    r_el = rotation_matrix(port.orientation)

    theta_l, phi_l = transform_angles(r_ue, theta, phi, inverse=True)
    theta_a, phi_a = transform_angles(r_el, theta_l, phi_l, inverse=True)
    f_theta, f_phi = field_pattern_array(port.element.pattern, theta_a, phi_a)

    # ACS -> LCS, then LCS -> GCS
    f_theta, f_phi = rotate_field(*polarization_rotation(r_el, theta_l, phi_l), f_theta, f_phi)
    f_theta, f_phi = rotate_field(*polarization_rotation(r_ue, theta, phi), f_theta, f_phi)

    loss_db = element_attenuation_db(table, u.scenario, port.antenna_id, u.carrier_hz)
    loss_db += u.port_loss_db[port_index]
    scale = 10.0 ** (-loss_db / 20.0)
    if blocker is not None:
        scale = scale * 10.0 ** (-model_a_attenuation_array(blocker, theta, phi) / 20.0)
    return f_theta * scale, f_phi * scale


def antenna_field_gcs(u: UeState, antenna_id: Union[int, str], d: Direction,
                      table: Optional[AttenuationTable] = None, polarization: int = 0,
                      blocker: Optional[ModelARegion] = None) -> FieldPair:
    """
    Polarized receive field of one antenna toward a GCS direction

    Args:
        u: UE state
        antenna_id: Element id or port label
        d: Direction in GCS
        table: Attenuation table (not needed for FreeSpace)
        polarization: 0 or 1 for the two ports of a dual-polarized element
        blocker: Optional Model A region

    Returns:
        FieldPair in the GCS polarization basis

    Raises:
        PoleDegenerate: If d or its LCS / ACS image sits at a pole
        BandNotCovered, AntennaNotInBand: From the attenuation lookup
    """
    index, port = u.port(antenna_id, polarization)
    d_lcs = transform_direction(rotation_matrix(u.ue_orientation), d.in_frame(Frame.GCS), inverse=True)
    d_acs = transform_direction(rotation_matrix(port.orientation), d_lcs, inverse=True)
    for label, direction in (("GCS", d), ("LCS", d_lcs), ("ACS", d_acs)):
        if direction.at_pole:
            raise PoleDegenerate(f"Direction sits at a pole of the {label} frame: theta={direction.theta}")
    f_theta, f_phi = port_fields_gcs(u, index, d.theta, d.phi, table, blocker)
    return FieldPair(float(f_theta), float(f_phi))


def effective_gain_db_array(f_theta, f_phi) -> np.ndarray:
    """10 log10(|F_theta|^2 + |F_phi|^2), floored at GAIN_FLOOR_DB"""
    power = np.abs(f_theta) ** 2 + np.abs(f_phi) ** 2
    with np.errstate(divide='ignore'):
        gain = 10.0 * np.log10(power)
    return np.maximum(gain, GAIN_FLOOR_DB)


def effective_gain_db(f: FieldPair) -> float:
    return float(effective_gain_db_array(f.f_theta, f.f_phi))


def ray_response(rx: FieldPair, coupling, tx: FieldPair, phase: float) -> complex:
    """
    Single-ray channel kernel exp(j phase) . [rx_theta, rx_phi] . M . [tx_theta, tx_phi]^T

    Args:
        rx: Receive field pair
        coupling: 2x2 complex polarization coupling matrix
        tx: Transmit field pair
        phase: Ray phase in radians
    """
    m = np.asarray(coupling, dtype=complex)
    if m.shape != (2, 2):
        raise ValueError(f"Coupling matrix must be 2x2, got shape {m.shape}")
    rx_vec = np.array([rx.f_theta, rx.f_phi], dtype=complex)
    tx_vec = np.array([tx.f_theta, tx.f_phi], dtype=complex)
    return complex(np.exp(1j * phase) * (rx_vec @ m @ tx_vec))


def _normalized_weights(weights: Sequence[complex], n: int) -> np.ndarray:
    w = np.asarray(weights, dtype=complex).reshape(-1)
    if len(w) != n:
        raise ValueError(f"Got {len(w)} weights for {n} fields")
    norm = np.sqrt(np.sum(np.abs(w) ** 2))
    if norm == 0:
        raise ValueError("Combining weights are all zero")
    return w / norm


def position_phase(positions_mm, rho_hat, carrier_hz: float) -> np.ndarray:
    """
    exp(j k r . rho_hat) per position

    Args:
        positions_mm: (n, 3) positions, same frame as rho_hat
        rho_hat: (3, ...) unit direction vectors
        carrier_hz: Carrier frequency

    Returns:
        (n, ...) complex phase factors
    """
    k = 2.0 * np.pi * carrier_hz / SPEED_OF_LIGHT
    r_m = np.asarray(positions_mm, dtype=float) * 1e-3
    return np.exp(1j * k * np.tensordot(r_m, rho_hat, axes=1))


def combine_coherent(fields: Sequence[FieldPair], weights: Sequence[complex],
                     positions_mm: Optional[Sequence[Sequence[float]]] = None,
                     direction: Optional[Direction] = None,
                     carrier_hz: Optional[float] = None) -> FieldPair:
    """
    Weighted coherent sum of port fields

    Weights are rescaled so that sum |w|^2 = 1. When positions, a direction and
    a carrier are all supplied the geometric phase exp(j k r . rho_hat) of each
    port is applied before summing.

    Raises:
        EmptyInput: If no fields are given
    """
    if len(fields) == 0:
        raise EmptyInput("Nothing to combine")
    w = _normalized_weights(weights, len(fields))
    if positions_mm is not None and direction is not None and carrier_hz:
        rho_hat, _, _ = spherical_basis(direction.theta, direction.phi)
        w = w * position_phase(positions_mm, rho_hat, carrier_hz)
    f_theta = complex(np.sum(w * np.array([f.f_theta for f in fields], dtype=complex)))
    f_phi = complex(np.sum(w * np.array([f.f_phi for f in fields], dtype=complex)))
    return FieldPair(f_theta, f_phi)


@dataclass(frozen=True, eq=False)
class GainGrid:
    """Per-port fields and gains over a full-sphere grid (theta at cell centers)"""
    theta_deg: np.ndarray
    phi_deg: np.ndarray
    theta_step: float
    phi_step: float
    labels: Tuple[str, ...]
    antenna_ids: Tuple[int, ...]
    f_theta: np.ndarray  # (n_ports, n_theta, n_phi)
    f_phi: np.ndarray
    gain_db: np.ndarray
    positions_gcs_mm: np.ndarray  # (n_ports, 3)
    carrier_hz: float

    @property
    def shape(self) -> Tuple[int, int]:
        return (len(self.theta_deg), len(self.phi_deg))

    def solid_angle_weights(self) -> np.ndarray:
        """sin(theta) weights broadcast to the grid shape"""
        w = np.sin(np.radians(self.theta_deg))[:, None]
        return np.broadcast_to(w, self.shape)

    def indices(self, active_ids: Optional[Iterable[Union[int, str]]] = None) -> List[int]:
        """Port indices for antenna ids or port labels; all ports when None"""
        if active_ids is None:
            return list(range(len(self.labels)))
        selected = []
        for item in active_ids:
            key = str(item)
            if key in self.labels:
                matches = [self.labels.index(key)]
            else:
                matches = [i for i, a in enumerate(self.antenna_ids) if str(a) == key]
            if not matches:
                raise UnknownAntenna(f"Antenna {item} not in grid (ports: {list(self.labels)})")
            selected.extend(i for i in matches if i not in selected)
        return selected

    def gain(self, label: Union[int, str]) -> np.ndarray:
        return self.gain_db[self.indices([label])[0]]


def _grid_axes(theta_step: float, phi_step: float) -> Tuple[np.ndarray, np.ndarray]:
    if theta_step <= 0 or phi_step <= 0:
        raise InvalidArgument(f"Grid steps must be positive, got {theta_step}, {phi_step}")
    n_theta = 180.0 / theta_step
    n_phi = 360.0 / phi_step
    if (abs(n_theta - round(n_theta)) > STEP_TOLERANCE
            or abs(n_phi - round(n_phi)) > STEP_TOLERANCE):
        raise InvalidArgument(f"Grid steps must divide 180 and 360 evenly, got {theta_step}, {phi_step}")
    theta = (np.arange(int(round(n_theta))) + 0.5) * theta_step
    phi = -180.0 + np.arange(int(round(n_phi))) * phi_step
    return theta, phi


def sphere_sweep(u: UeState, table: Optional[AttenuationTable] = None,
                 theta_step: float = 1.0, phi_step: float = 1.0,
                 blocker: Optional[ModelARegion] = None, n_jobs: int = 1) -> GainGrid:
    """
    Evaluate every port over the full sphere

    Theta samples sit at cell centers (step/2, 3 step/2, ...) so no sample is a
    pole; phi samples start at -180.

    Args:
        u: UE state
        table: Attenuation table
        theta_step: Polar step in degrees, must divide 180
        phi_step: Azimuth step in degrees, must divide 360
        blocker: Optional Model A region
        n_jobs: Worker threads; ports are evaluated independently

    Returns:
        GainGrid assembled in port order
    """
    theta, phi = _grid_axes(theta_step, phi_step)
    tt, pp = np.meshgrid(theta, phi, indexing='ij')
    ports = u.ports
    logger.info(f"Sphere sweep: {len(ports)} ports over {tt.size} directions")

    def evaluate(index: int):
        return port_fields_gcs(u, index, tt, pp, table, blocker)

    if n_jobs > 1:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            results = list(pool.map(evaluate, range(len(ports))))
    else:
        results = [evaluate(i) for i in range(len(ports))]

    f_theta = np.stack([r[0] for r in results]) if results else np.zeros((0,) + tt.shape)
    f_phi = np.stack([r[1] for r in results]) if results else np.zeros((0,) + tt.shape)
    r_ue = rotation_matrix(u.ue_orientation)
    positions = np.array([p.element.position_mm for p in ports], dtype=float).reshape(-1, 3)
    return GainGrid(
        theta_deg=theta,
        phi_deg=phi,
        theta_step=float(theta_step),
        phi_step=float(phi_step),
        labels=tuple(p.label for p in ports),
        antenna_ids=tuple(p.antenna_id for p in ports),
        f_theta=f_theta,
        f_phi=f_phi,
        gain_db=effective_gain_db_array(f_theta, f_phi),
        positions_gcs_mm=positions @ r_ue.matrix.T,
        carrier_hz=u.carrier_hz,
    )


@dataclass(frozen=True, eq=False)
class ImbalanceStats:
    """Per-direction best-minus-worst gain spread with solid-angle weights"""
    delta_db: np.ndarray
    weights: np.ndarray
    max_db: float

    def fraction_above(self, x_db: float) -> float:
        """sin(theta)-weighted fraction of directions where the spread exceeds x_db"""
        return float(np.sum(self.weights[self.delta_db > x_db]) / np.sum(self.weights))

    def weighted_median(self) -> float:
        order = np.argsort(self.delta_db, axis=None)
        values = self.delta_db.reshape(-1)[order]
        cumulative = np.cumsum(self.weights.reshape(-1)[order])
        return float(values[np.searchsorted(cumulative, 0.5 * cumulative[-1])])


def imbalance_stats(g: GainGrid, active_ids: Optional[Iterable[Union[int, str]]] = None) -> ImbalanceStats:
    """
    Spread between the best and worst active port at every grid direction

    Raises:
        TooFewAntennas: If fewer than two ports are active
    """
    idx = g.indices(active_ids)
    if len(idx) < 2:
        raise TooFewAntennas(f"Imbalance needs at least 2 active ports, got {len(idx)}")
    gains = g.gain_db[idx]
    delta = gains.max(axis=0) - gains.min(axis=0)
    stats = ImbalanceStats(delta, np.array(g.solid_angle_weights()), float(delta.max()))
    logger.info(f"Imbalance over {len(idx)} ports: max {stats.max_db:.2f} dB, "
                f"{100 * stats.fraction_above(10.0):.1f}% of directions above 10 dB")
    return stats


def composite_gain(g: GainGrid, active_ids: Optional[Iterable[Union[int, str]]] = None) -> np.ndarray:
    """Best-port gain per direction"""
    idx = g.indices(active_ids)
    if not idx:
        raise EmptyInput("No active ports for composite coverage")
    return g.gain_db[idx].max(axis=0)


def combined_gain_grid(g: GainGrid, active_ids: Sequence[Union[int, str]],
                       weights: Optional[Sequence[complex]] = None,
                       use_position_phase: bool = False) -> np.ndarray:
    """
    Effective gain of the weighted coherent sum of several ports over the grid

    Args:
        g: Sphere sweep
        active_ids: Ports to combine
        weights: Complex weights, equal weights when None; normalized to unit power
        use_position_phase: Apply exp(j k r . rho_hat) from the GCS port positions

    Returns:
        Combined gain in dBi, grid shaped
    """
    idx = g.indices(active_ids)
    if not idx:
        raise EmptyInput("Nothing to combine")
    w = _normalized_weights(weights if weights is not None else np.ones(len(idx)), len(idx))
    w = w.reshape(-1, 1, 1)
    if use_position_phase:
        tt, pp = np.meshgrid(g.theta_deg, g.phi_deg, indexing='ij')
        rho_hat, _, _ = spherical_basis(tt, pp)
        w = w * position_phase(g.positions_gcs_mm[idx], rho_hat, g.carrier_hz)
    f_theta = np.sum(w * g.f_theta[idx], axis=0)
    f_phi = np.sum(w * g.f_phi[idx], axis=0)
    return effective_gain_db_array(f_theta, f_phi)


@dataclass(frozen=True)
class PairCombining:
    port_a: str
    port_b: str
    peak_a_dbi: float
    peak_b_dbi: float
    combined_peak_dbi: float

    @property
    def combining_gain_db(self) -> float:
        """Combined peak relative to the better single-port peak"""
        return self.combined_peak_dbi - max(self.peak_a_dbi, self.peak_b_dbi)


def pair_combining_study(g: GainGrid, active_ids: Optional[Iterable[Union[int, str]]] = None,
                         use_position_phase: bool = False) -> List[PairCombining]:
    """Equal-weight combined peak gain for every pair of active ports"""
    idx = g.indices(active_ids)
    results = []
    for a, b in itertools.combinations(idx, 2):
        combined = combined_gain_grid(g, [g.labels[a], g.labels[b]], use_position_phase=use_position_phase)
        results.append(PairCombining(
            g.labels[a], g.labels[b],
            float(g.gain_db[a].max()), float(g.gain_db[b].max()), float(combined.max()),
        ))
    logger.info(f"Pair combining study: {len(results)} pairs")
    return results


def polarization_tilt_deg(f_theta, f_phi) -> np.ndarray:
    """Orientation of the linear polarization, atan2(F_phi, F_theta) folded into [-90, 90)"""
    tilt = np.degrees(np.arctan2(np.real(f_phi), np.real(f_theta)))
    return (tilt + 90.0) % 180.0 - 90.0
