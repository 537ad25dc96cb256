#!/usr/bin/env python3
"""
Simulation Runner
Batch studies behind the command-line subcommands:
- Seeded random streams per (replication, purpose)
- Monte-Carlo over blockage scenarios, UE orientations and port imbalance
- Pattern cuts, sphere maps, imbalance and composite coverage CDFs
- Pair combining studies and polarization orientation maps
- Self-test of the pattern, efficiency and geometry contracts

All outputs are CSV written through pandas.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
import pandas as pd
from scipy.spatial.transform import Rotation as ScipyRotation

from .blockage_sns import (
    BlockageScenario,
    port_imbalance_draw,
    sample_scenario,
)
from .config_manager import SimConfig
from .element_pattern import PatternParams, gain_db_array, pattern_metrics
from .errors import ContractViolation, HandsetAntennaError, InvalidArgument
from .field_synthesis import (
    EmptyInput,
    GainGrid,
    ImbalanceStats,
    UeState,
    composite_gain,
    effective_gain_db_array,
    imbalance_stats,
    pair_combining_study,
    polarization_tilt_deg,
    port_fields_gcs,
    sphere_sweep,
)
from .sphere_geom import (
    RotationAngles,
    polarization_rotation,
    rotate_field,
    rotation_matrix,
    transform_angles,
    wrap_phi,
)

logger = logging.getLogger(__name__)

# Purpose codes of the per-replication substreams; changing them changes every result
STREAM_PURPOSES = {'scenario': 0, 'orientation': 1, 'ports': 2, 'self_test': 3}


class OutputError(HandsetAntennaError):
    """Result file could not be written"""
    pass


class SelfTestFailure(ContractViolation):
    pass


def replication_rng(seed: int, replication: int, purpose: str) -> np.random.Generator:
    """
    Independent PCG64 stream for one (seed, replication, purpose)

    Draws depend only on these three values, so replications can run in any
    order or in parallel and still reproduce bit for bit.
    """
    entropy = [int(seed), int(replication), STREAM_PURPOSES[purpose]]
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(entropy)))


def uniform_orientation(rng: np.random.Generator) -> RotationAngles:
    """Orientation drawn uniformly over all 3D rotations"""
    alpha, beta, gamma = ScipyRotation.random(None, rng).as_euler('ZYX', degrees=True)
    return RotationAngles(float(alpha), float(beta), float(gamma))


@dataclass(frozen=True, eq=False)
class EmpiricalCdf:
    """Sorted samples with their cumulative probabilities"""
    values: np.ndarray
    probabilities: np.ndarray

    def __call__(self, x: float) -> float:
        index = int(np.searchsorted(self.values, x, side='right'))
        return 0.0 if index == 0 else float(self.probabilities[index - 1])

    def quantile(self, q: float) -> float:
        index = int(np.searchsorted(self.probabilities, q, side='left'))
        return float(self.values[min(index, len(self.values) - 1)])

    def to_frame(self, value_column: str = 'value_db') -> pd.DataFrame:
        return pd.DataFrame({value_column: self.values, 'cdf': self.probabilities})


def cdf_compute(samples: Sequence[float], weights: Optional[Sequence[float]] = None) -> EmpiricalCdf:
    """
    Empirical CDF; sample i of n (sorted) maps to i/n, ties share the higher probability

    Args:
        samples: Sample values
        weights: Optional non-negative weights (e.g. solid angle); cumulative weight replaces i/n

    Returns:
        EmpiricalCdf over all samples

    Raises:
        EmptyInput: If samples is empty
    """
    values = np.asarray(samples, dtype=float).reshape(-1)
    if values.size == 0:
        raise EmptyInput("Cannot build a CDF from no samples")
    order = np.argsort(values, kind='stable')
    values = values[order]
    n = values.size
    if weights is None:
        cumulative = np.arange(1, n + 1) / n
    else:
        w = np.asarray(weights, dtype=float).reshape(-1)[order]
        if w.size != n or np.any(w < 0) or w.sum() <= 0:
            raise ValueError("CDF weights must be non-negative, match the samples and not all be zero")
        cumulative = np.minimum(np.cumsum(w) / w.sum(), 1.0)
        cumulative[-1] = 1.0
    last_of_tie = np.searchsorted(values, values, side='right') - 1
    return EmpiricalCdf(values, cumulative[last_of_tie])


def _write_csv(frame: pd.DataFrame, out_path: str) -> int:
    path = Path(out_path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        frame.to_csv(path, index=False, encoding='utf-8', lineterminator='\n')
    except OSError as e:
        raise OutputError(f"Error writing {out_path}: {e}")
    logger.info(f"Wrote {len(frame)} rows to: {out_path}")
    return len(frame)


def _ue_state(cfg: SimConfig, scenario: BlockageScenario = BlockageScenario.FREE_SPACE) -> UeState:
    return UeState(cfg.layout, cfg.run.fixed_orientation, scenario, cfg.run.carrier_hz)


def _blocker(cfg: SimConfig):
    return cfg.blockage.model_a_region if cfg.blockage.model == 'model_a' else None


def _active_labels(grid: GainGrid, cfg: SimConfig) -> List[str]:
    return [grid.labels[i] for i in grid.indices(cfg.active_ids)]


def pattern_cut_export(cfg: SimConfig, theta_deg: float = 90.0, normalize: bool = False,
                       out_path: str = 'pattern_cut.csv', raw_only: bool = False,
                       phi_step: float = 1.0) -> int:
    """
    Azimuth cut at a fixed theta

    The reference element pattern (antenna frame) is always the gain_dbi column;
    unless raw_only, each active port follows as gain_<port>_dbi evaluated in
    GCS at the configured fixed orientation in free space.

    Args:
        cfg: Validated configuration
        theta_deg: Polar angle of the cut
        normalize: Subtract each column's peak
        out_path: CSV path
        raw_only: Emit only the reference pattern
        phi_step: Azimuth step in degrees, must divide 360

    Returns:
        Number of rows written
    """
    if not 0.0 <= theta_deg <= 180.0:
        raise InvalidArgument(f"theta must lie in [0, 180] degrees, got {theta_deg}")
    n_phi = 360.0 / phi_step if phi_step > 0 else 0.0
    if n_phi < 1.0 or abs(n_phi - round(n_phi)) > 1e-9:
        raise InvalidArgument(f"phi_step must be positive and divide 360 evenly, got {phi_step}")
    phi = -180.0 + np.arange(int(round(n_phi))) * phi_step
    columns: Dict[str, np.ndarray] = {
        'phi_deg': phi,
        'gain_dbi': gain_db_array(cfg.pattern, theta_deg, phi),
    }
    if not raw_only:
        u = _ue_state(cfg)
        labels = [p.label for p in u.ports]
        active = {str(i) for i in cfg.active_ids}
        theta = np.full_like(phi, theta_deg)
        for index, port in enumerate(u.ports):
            if port.label in active or str(port.antenna_id) in active:
                fields = port_fields_gcs(u, index, theta, phi, cfg.blockage.table, _blocker(cfg))
                columns[f"gain_{labels[index]}_dbi"] = effective_gain_db_array(*fields)
    frame = pd.DataFrame(columns)
    if normalize:
        gain_columns = [c for c in frame.columns if c != 'phi_deg']
        frame[gain_columns] = frame[gain_columns] - frame[gain_columns].max()
    return _write_csv(frame, out_path)


def sweep_for(cfg: SimConfig, scenario: BlockageScenario = BlockageScenario.FREE_SPACE,
              orientation: Optional[RotationAngles] = None) -> GainGrid:
    """Sphere sweep of the configured layout at the configured grid steps"""
    u = UeState(cfg.layout, orientation or cfg.run.fixed_orientation, scenario, cfg.run.carrier_hz)
    return sphere_sweep(u, cfg.blockage.table, cfg.run.theta_step_deg, cfg.run.phi_step_deg,
                        _blocker(cfg), cfg.run.n_jobs)


def sphere_map_export(cfg: SimConfig, out_path: str = 'sphere_map.csv',
                      scenario: BlockageScenario = BlockageScenario.FREE_SPACE) -> GainGrid:
    """Full-sphere gains per active port, composite gain and per-direction imbalance"""
    grid = sweep_for(cfg, scenario)
    tt, pp = np.meshgrid(grid.theta_deg, grid.phi_deg, indexing='ij')
    columns: Dict[str, np.ndarray] = {'theta_deg': tt.ravel(), 'phi_deg': pp.ravel()}
    labels = _active_labels(grid, cfg)
    for label in labels:
        columns[f"gain_{label}_dbi"] = grid.gain(label).ravel()
    columns['composite_dbi'] = composite_gain(grid, labels).ravel()
    if len(labels) >= 2:
        columns['imbalance_db'] = imbalance_stats(grid, labels).delta_db.ravel()
    _write_csv(pd.DataFrame(columns), out_path)
    return grid


def _summary_path(out_path: str) -> str:
    path = Path(out_path)
    return str(path.with_name(path.stem + '.summary.csv'))


def imbalance_export(cfg: SimConfig, out_path: str = 'imbalance_cdf.csv',
                     scenario: BlockageScenario = BlockageScenario.FREE_SPACE,
                     threshold_db: float = 10.0) -> ImbalanceStats:
    """
    Solid-angle-weighted CDF of the per-direction imbalance plus a summary file

    The CDF goes to out_path (imbalance_db, cdf); the summary (metric, value)
    goes to <stem>.summary.csv next to it.
    """
    grid = sweep_for(cfg, scenario)
    labels = _active_labels(grid, cfg)
    stats = imbalance_stats(grid, labels)
    weights = stats.weights.ravel()
    cdf = cdf_compute(stats.delta_db.ravel(), weights)
    _write_csv(cdf.to_frame('imbalance_db'), out_path)

    composite = composite_gain(grid, labels).ravel()
    composite_cdf = cdf_compute(composite, weights)
    summary = pd.DataFrame({
        'metric': ['n_ports', 'max_db', 'weighted_median_db', f"fraction_above_{threshold_db:g}db",
                   'composite_min_dbi', 'composite_median_dbi', 'composite_max_dbi'],
        'value': [float(len(labels)), stats.max_db, stats.weighted_median(),
                  stats.fraction_above(threshold_db), float(composite.min()), composite_cdf.quantile(0.5),
                  float(composite.max())],
    })
    _write_csv(summary, _summary_path(out_path))
    return stats


def combine_export(cfg: SimConfig, out_path: str = 'combining.csv',
                   use_position_phase: bool = False) -> pd.DataFrame:
    """Equal-weight pair combining over every pair of active ports"""
    grid = sweep_for(cfg)
    pairs = pair_combining_study(grid, _active_labels(grid, cfg), use_position_phase)
    frame = pd.DataFrame({
        'port_a': [p.port_a for p in pairs],
        'port_b': [p.port_b for p in pairs],
        'peak_a_dbi': [p.peak_a_dbi for p in pairs],
        'peak_b_dbi': [p.peak_b_dbi for p in pairs],
        'combined_peak_dbi': [p.combined_peak_dbi for p in pairs],
        'combining_gain_db': [p.combining_gain_db for p in pairs],
    })
    _write_csv(frame, out_path)
    return frame


def polarization_map_export(cfg: SimConfig, out_path: str = 'polarization_map.csv') -> int:
    """Linear polarization orientation of every active port over the grid"""
    grid = sweep_for(cfg)
    tt, pp = np.meshgrid(grid.theta_deg, grid.phi_deg, indexing='ij')
    columns: Dict[str, np.ndarray] = {'theta_deg': tt.ravel(), 'phi_deg': pp.ravel()}
    for index in grid.indices(cfg.active_ids):
        tilt = polarization_tilt_deg(grid.f_theta[index], grid.f_phi[index])
        columns[f"tilt_{grid.labels[index]}_deg"] = tilt.ravel()
    return _write_csv(pd.DataFrame(columns), out_path)


def probe_directions(step_deg: float):
    """Cell-center probe grid: theta step/2 .. 180-step/2, phi -180 .. 180-step"""
    theta = (np.arange(int(round(180.0 / step_deg))) + 0.5) * step_deg
    phi = -180.0 + np.arange(int(round(360.0 / step_deg))) * step_deg
    tt, pp = np.meshgrid(theta, phi, indexing='ij')
    return tt.ravel(), pp.ravel()


def _replication_record(cfg: SimConfig, replication: int, probe_theta: np.ndarray,
                        probe_phi: np.ndarray) -> Dict[str, Any]:
    seed = cfg.run.seed
    blockage = cfg.blockage

    if blockage.model == 'sns':
        scenario = sample_scenario(blockage.probabilities, replication_rng(seed, replication, 'scenario'))
    else:
        scenario = BlockageScenario.FREE_SPACE

    if cfg.run.orientation_distribution == 'uniform':
        orientation = uniform_orientation(replication_rng(seed, replication, 'orientation'))
    else:
        orientation = cfg.run.fixed_orientation

    n_ports = len(UeState(cfg.layout).ports)
    losses = port_imbalance_draw(blockage.port_imbalance_enabled, blockage.port_imbalance_range_db,
                                 n_ports, replication_rng(seed, replication, 'ports'))
    u = UeState(cfg.layout, orientation, scenario, cfg.run.carrier_hz, tuple(losses))

    serving = cfg.run.serving_direction
    theta = np.append(probe_theta, serving.theta)
    phi = np.append(probe_phi, serving.phi)
    active = {str(i) for i in cfg.active_ids}

    record: Dict[str, Any] = {
        'replication': replication,
        'scenario': scenario.value,
        'alpha_deg': orientation.alpha,
        'beta_deg': orientation.beta,
        'gamma_deg': orientation.gamma,
    }
    gains = []
    for index, port in enumerate(u.ports):
        if port.label not in active and str(port.antenna_id) not in active:
            continue
        gain = effective_gain_db_array(*port_fields_gcs(u, index, theta, phi, blockage.table, _blocker(cfg)))
        record[f"loss_{port.label}_db"] = float(losses[index])
        record[f"gain_{port.label}_dbi"] = float(gain[-1])
        gains.append(gain[:-1])

    weights = np.sin(np.radians(probe_theta))
    if len(gains) >= 2:
        stacked = np.stack(gains)
        delta = stacked.max(axis=0) - stacked.min(axis=0)
        stats = ImbalanceStats(delta, weights, float(delta.max()))
        record['max_imbalance_db'] = stats.max_db
        record['median_imbalance_db'] = stats.weighted_median()
        record['fraction_above_10db'] = stats.fraction_above(10.0)
    else:
        record['max_imbalance_db'] = record['median_imbalance_db'] = record['fraction_above_10db'] = 0.0
    return record


def monte_carlo_run(cfg: SimConfig) -> pd.DataFrame:
    """
    Seeded Monte-Carlo over scenarios, orientations and port imbalance

    Each replication draws its scenario, orientation and port losses from its
    own substreams and evaluates every active port toward the probe grid and
    the serving direction.

    Returns:
        One record per replication, ordered by replication index
    """
    if cfg.run.seed is None:
        raise InvalidArgument("Monte-Carlo runs need run.seed")
    probe_theta, probe_phi = probe_directions(cfg.run.probe_step_deg)
    logger.info(f"Monte-Carlo: {cfg.run.replications} replications, {probe_theta.size} probe directions, "
                f"blockage model {cfg.blockage.model}, seed {cfg.run.seed}")

    def run_one(replication: int) -> Dict[str, Any]:
        return _replication_record(cfg, replication, probe_theta, probe_phi)

    if cfg.run.n_jobs > 1:
        with ThreadPoolExecutor(max_workers=cfg.run.n_jobs) as pool:
            records = list(pool.map(run_one, range(cfg.run.replications)))
    else:
        records = [run_one(r) for r in range(cfg.run.replications)]

    frame = pd.DataFrame.from_records(records)
    counts = frame['scenario'].value_counts().to_dict()
    logger.info(f"Scenario counts: {counts}")
    return frame


def monte_carlo_export(cfg: SimConfig, out_path: str = 'blockage_mc.csv') -> pd.DataFrame:
    frame = monte_carlo_run(cfg)
    _write_csv(frame, out_path)
    return frame


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str


def _check(name: str, passed: bool, detail: str) -> CheckResult:
    level = logging.INFO if passed else logging.ERROR
    logger.log(level, f"[{'PASS' if passed else 'FAIL'}] {name}: {detail}")
    return CheckResult(name, bool(passed), detail)


def self_test(quadrature_step: float = 0.25, n_samples: int = 10_000, seed: int = 0) -> List[CheckResult]:
    """
    Pattern anchors, efficiency and geometry contracts

    Returns:
        One CheckResult per contract; callers decide how to report failures
    """
    if n_samples < 1:
        raise InvalidArgument(f"Self-test needs at least one random sample, got {n_samples}")
    results = []
    p = PatternParams()
    boresight = float(gain_db_array(p, 90.0, 0.0))
    back = float(gain_db_array(p, 90.0, 180.0))
    metrics = pattern_metrics(p, quadrature_step)
    results.append(_check("peak gain", abs(boresight - 5.3) < 1e-12, f"{boresight:.6f} dBi"))
    results.append(_check("back lobe", abs(back + 17.2) < 1e-12, f"{back:.6f} dBi"))
    results.append(_check("azimuth HPBW", abs(metrics.hpbw_az_deg - 125.0) <= 1.0, f"{metrics.hpbw_az_deg:.3f} deg"))
    results.append(_check("elevation HPBW", abs(metrics.hpbw_el_deg - 125.0) <= 1.0,
                          f"{metrics.hpbw_el_deg:.3f} deg"))
    results.append(_check("directive efficiency", abs(metrics.efficiency_db) <= 0.5,
                          f"{metrics.efficiency_db:.4f} dB"))
    iso = pattern_metrics(PatternParams.isotropic(), quadrature_step)
    results.append(_check("isotropic efficiency", iso.efficiency_db == 0.0, f"{iso.efficiency_db} dB"))

    rng = replication_rng(seed, 0, 'self_test')
    worst_round_trip = worst_orthonormal = worst_unit = worst_power = 0.0
    angles = rng.uniform(-180.0, 180.0, size=(n_samples, 3))
    theta = np.degrees(np.arccos(rng.uniform(-1.0, 1.0, size=n_samples)))
    phi = rng.uniform(-180.0, 180.0, size=n_samples)
    f_in = rng.normal(size=(2, n_samples))
    for i in range(n_samples):
        R = rotation_matrix(RotationAngles(*angles[i]))
        m = R.matrix
        worst_orthonormal = max(worst_orthonormal, float(np.abs(m.T @ m - np.eye(3)).max()))
        t_p, p_p = transform_angles(R, theta[i], phi[i], inverse=True)
        t_b, p_b = transform_angles(R, t_p, p_p, inverse=False)
        worst_round_trip = max(worst_round_trip, abs(float(t_b) - theta[i]),
                               abs(float(wrap_phi(float(p_b) - phi[i]))))
        c, s = polarization_rotation(R, theta[i], phi[i])
        worst_unit = max(worst_unit, abs(float(c * c + s * s) - 1.0))
        f_t, f_p = rotate_field(c, s, f_in[0, i], f_in[1, i])
        power_in = f_in[0, i] ** 2 + f_in[1, i] ** 2
        worst_power = max(worst_power, abs(float(f_t ** 2 + f_p ** 2) - power_in) / power_in)
    results.append(_check("direction round trip", worst_round_trip < 1e-9, f"{worst_round_trip:.2e} deg"))
    results.append(_check("orthonormality", worst_orthonormal < 1e-12, f"{worst_orthonormal:.2e}"))
    results.append(_check("polarization unitarity", worst_unit < 1e-12, f"{worst_unit:.2e}"))
    results.append(_check("power conservation", worst_power < 1e-12, f"{worst_power:.2e} relative"))
    return results
