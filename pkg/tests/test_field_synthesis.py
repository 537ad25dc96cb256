import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from handset_antenna_sim.blockage_sns import BlockageScenario, ModelARegion
from handset_antenna_sim.device_layout import (
    AntennaElement,
    DeviceLayout,
    LayoutKind,
    apply_overrides,
    legacy_halfwave_array,
)
from handset_antenna_sim.element_pattern import FieldPair, gain_db
from handset_antenna_sim.errors import InvalidArgument
from handset_antenna_sim.field_synthesis import (
    GAIN_FLOOR_DB,
    EmptyInput,
    TooFewAntennas,
    UeState,
    UnknownAntenna,
    antenna_field_gcs,
    combine_coherent,
    combined_gain_grid,
    composite_gain,
    effective_gain_db,
    imbalance_stats,
    layout_ports,
    pair_combining_study,
    polarization_tilt_deg,
    ray_response,
    sphere_sweep,
)
from handset_antenna_sim.sphere_geom import (
    Direction,
    PoleDegenerate,
    RotationAngles,
    angles_from_rotation,
    rotation_matrix,
    transform_direction,
)


def test_boresight_gain_in_free_space(handset):
    u = UeState(handset)
    assert_allclose(effective_gain_db(antenna_field_gcs(u, 3, Direction(90.0, 0.0))), 5.3, atol=1e-12)
    assert_allclose(effective_gain_db(antenna_field_gcs(u, 7, Direction(90.0, 0.0))), -17.2, atol=1e-12)
    assert_allclose(effective_gain_db(antenna_field_gcs(u, 8, Direction(90.0, 90.0))), 5.3, atol=1e-12)


def test_ue_rotation_moves_the_peak(handset):
    u = UeState(handset, RotationAngles(alpha=90.0))
    assert_allclose(effective_gain_db(antenna_field_gcs(u, 3, Direction(90.0, 90.0))), 5.3, atol=1e-12)


def test_slanted_ue_keeps_gain_but_turns_polarization(handset):
    u = UeState(handset, RotationAngles(gamma=90.0))
    # antenna 3 boresight stays on x; its theta polarization becomes phi polarization
    f = antenna_field_gcs(u, 3, Direction(90.0, 0.0))
    assert_allclose([abs(f.f_theta), abs(f.f_phi)], [0.0, np.sqrt(10 ** 0.53)], atol=1e-12)


def test_pole_directions_are_rejected(handset):
    with pytest.raises(PoleDegenerate):
        antenna_field_gcs(UeState(handset), 3, Direction(0.0, 0.0))
    tilted = UeState(handset, RotationAngles(beta=90.0))
    with pytest.raises(PoleDegenerate):
        antenna_field_gcs(tilted, 3, Direction(90.0, 0.0))


def test_unknown_antenna(handset):
    with pytest.raises(UnknownAntenna):
        antenna_field_gcs(UeState(handset), 9, Direction(90.0, 0.0))


def test_port_loss_validation(handset):
    with pytest.raises(ValueError):
        UeState(handset, port_loss_db=(1.0, 2.0))
    with pytest.raises(ValueError):
        UeState(handset, port_loss_db=(-1.0,) * 8)
    assert UeState(handset).port_loss_db == (0.0,) * 8


def test_port_loss_shifts_gain(handset):
    losses = (0.0, 0.0, 2.5, 0.0, 0.0, 0.0, 0.0, 0.0)
    u = UeState(handset, port_loss_db=losses)
    assert_allclose(effective_gain_db(antenna_field_gcs(u, 3, Direction(90.0, 0.0))), 2.8, atol=1e-12)


def test_dual_polarized_ports(handset):
    layout = apply_overrides(handset, [{'id': 4, 'dual_polarized': True}])
    labels = [p.label for p in layout_ports(layout)]
    assert labels == ['1', '2', '3', '4a', '4b', '5', '6', '7', '8']
    u = UeState(layout)
    d = Direction(90.0, -90.0)
    a = antenna_field_gcs(u, 4, d, polarization=0)
    b = antenna_field_gcs(u, 4, d, polarization=1)
    peak = np.sqrt(10 ** 0.53)
    assert_allclose([a.f_theta, a.f_phi], [peak, 0.0], atol=1e-12)
    assert_allclose([abs(b.f_theta), abs(b.f_phi)], [0.0, peak], atol=1e-12)
    assert_allclose(polarization_tilt_deg(a.f_theta, a.f_phi), 0.0, atol=1e-9)
    assert_allclose(abs(polarization_tilt_deg(b.f_theta, b.f_phi)), 90.0, atol=1e-9)
    assert antenna_field_gcs(u, '4b', d) == b


def test_effective_gain_floor():
    assert effective_gain_db(FieldPair(0.0, 0.0)) == GAIN_FLOOR_DB


def test_ray_response():
    rx = FieldPair(1.0, 0.0)
    tx = FieldPair(2.0, 0.0)
    assert_allclose(ray_response(rx, np.eye(2), tx, 0.0), 2.0)
    assert_allclose(ray_response(rx, np.eye(2), tx, np.pi / 2), 2.0j, atol=1e-15)
    # cross-polar coupling only
    assert_allclose(ray_response(rx, [[0.0, 0.0], [1.0, 0.0]], tx, 0.0), 0.0)
    with pytest.raises(ValueError):
        ray_response(rx, np.eye(3), tx, 0.0)


def test_coherent_combining_of_identical_fields():
    f = FieldPair(1.0, 0.0)
    combined = combine_coherent([f, f], [1.0, 1.0])
    assert_allclose(effective_gain_db(combined), 10 * np.log10(2.0), atol=1e-12)
    with pytest.raises(EmptyInput):
        combine_coherent([], [])
    with pytest.raises(ValueError):
        combine_coherent([f, f], [0.0, 0.0])


def test_free_space_sweep(free_space_grid):
    g = free_space_grid
    assert g.shape == (180, 360)
    assert g.labels == tuple(str(i) for i in range(1, 9))
    assert_allclose(g.gain_db.max(), 5.3, atol=0.05)
    assert_allclose(g.gain_db.min(), -17.2, atol=0.05)
    assert_allclose(g.theta_deg[[0, -1]], [0.5, 179.5])
    assert_allclose(g.phi_deg[[0, -1]], [-180.0, 179.0])


def test_free_space_imbalance(free_space_grid):
    stats = imbalance_stats(free_space_grid)
    assert_allclose(stats.max_db, 22.5, atol=0.1)
    assert stats.max_db >= 10.0
    assert 0.0 < stats.fraction_above(10.0) < 1.0
    assert stats.fraction_above(30.0) == 0.0
    assert 0.0 < stats.weighted_median() < stats.max_db
    with pytest.raises(TooFewAntennas):
        imbalance_stats(free_space_grid, [4])


def test_composite_gain_is_the_best_port(free_space_grid):
    composite = composite_gain(free_space_grid)
    assert_array_equal(composite, free_space_grid.gain_db.max(axis=0))
    assert composite.min() > -17.2
    with pytest.raises(EmptyInput):
        composite_gain(free_space_grid, [])


def test_blockage_shifts_the_blocked_antenna(handset, example_table, free_space_grid):
    blocked = sphere_sweep(UeState(handset, scenario=BlockageScenario.ONE_HAND_BROWSING), example_table)
    shift = blocked.gain(4) - free_space_grid.gain(4)
    assert_allclose(shift, -10.8, atol=1e-9)
    assert imbalance_stats(blocked).max_db > 30.0


def test_model_a_blocks_every_antenna_equally(handset, free_space_grid):
    region = ModelARegion()
    blocked = sphere_sweep(UeState(handset), blocker=region)
    shift = blocked.gain_db - free_space_grid.gain_db
    tt, pp = np.meshgrid(blocked.theta_deg, blocked.phi_deg, indexing='ij')
    inside = (np.abs(pp) <= 60.0) & (np.abs(tt - 90.0) <= 40.0)
    assert_allclose(shift[:, inside], -30.0, atol=1e-9)
    assert_allclose(shift[:, ~inside], 0.0, atol=1e-12)


def test_parallel_sweep_matches_serial(handset, free_space_grid):
    parallel = sphere_sweep(UeState(handset), n_jobs=4)
    assert_array_equal(parallel.gain_db, free_space_grid.gain_db)


def test_co_located_pair_gains_three_db(directive):
    element = AntennaElement(1, (35.0, 0.0, 0.0), RotationAngles(), directive)
    twin = AntennaElement(2, (35.0, 0.0, 0.0), RotationAngles(), directive)
    layout = DeviceLayout((150.0, 70.0, 0.0), (element, twin), LayoutKind.HANDHELD)
    g = sphere_sweep(UeState(layout), theta_step=2.0, phi_step=2.0)
    (pair,) = pair_combining_study(g, use_position_phase=True)
    assert_allclose(pair.combining_gain_db, 10 * np.log10(2.0), atol=0.01)


def test_equal_weight_pairs_on_the_handset(free_space_grid):
    pairs = pair_combining_study(free_space_grid)
    assert len(pairs) == 28
    by_ports = {(p.port_a, p.port_b): p for p in pairs}
    assert by_ports[('4', '8')].combined_peak_dbi < 8.3
    assert min(p.combined_peak_dbi for p in pairs) < 5.3


def test_half_wave_pair_with_geometric_phase():
    layout = legacy_halfwave_array(4, 3.5e9)
    g = sphere_sweep(UeState(layout, carrier_hz=3.5e9))
    combined = combined_gain_grid(g, ['1a', '2a'], use_position_phase=True)
    assert_allclose(combined.max(), 10 * np.log10(2.0), atol=0.01)
    assert combined.min() < -20.0
    # without the geometric phase the isotropic ports add in phase everywhere
    assert_allclose(combined_gain_grid(g, ['1a', '2a']), 10 * np.log10(2.0), atol=1e-12)


def _random_orientation(rng):
    return RotationAngles(*rng.uniform(-180.0, 180.0, 3))


def _random_direction(rng):
    return Direction(float(np.degrees(np.arccos(rng.uniform(-0.98, 0.98)))), float(rng.uniform(-180.0, 180.0)))


def test_full_chain_conserves_pattern_power(handset):
    rng = np.random.default_rng(2024)
    for _ in range(100):
        u = UeState(handset, _random_orientation(rng))
        d = _random_direction(rng)
        antenna_id = int(rng.integers(1, 9))
        element = handset.element(antenna_id)
        d_lcs = transform_direction(rotation_matrix(u.ue_orientation), d)
        d_acs = transform_direction(rotation_matrix(element.orientation), d_lcs)
        assert_allclose(effective_gain_db(antenna_field_gcs(u, antenna_id, d)),
                        gain_db(element.pattern, d_acs), atol=1e-9)


def test_common_rotation_leaves_gains_unchanged(handset):
    rng = np.random.default_rng(77)
    for _ in range(50):
        orientation = _random_orientation(rng)
        extra = rotation_matrix(_random_orientation(rng))
        turned = angles_from_rotation(extra.compose(rotation_matrix(orientation)))
        d = _random_direction(rng)
        d_turned = transform_direction(extra, d, inverse=False)
        for antenna_id in handset.ids:
            before = effective_gain_db(antenna_field_gcs(UeState(handset, orientation), antenna_id, d))
            after = effective_gain_db(antenna_field_gcs(UeState(handset, turned), antenna_id, d_turned))
            assert abs(before - after) < 1e-9


def test_combining_respects_the_triangle_bound():
    rng = np.random.default_rng(11)
    for n in (2, 3, 5):
        for _ in range(50):
            fields = [FieldPair(complex(*rng.normal(size=2)), complex(*rng.normal(size=2))) for _ in range(n)]
            weights = rng.normal(size=n) + 1j * rng.normal(size=n)
            w = np.abs(weights) / np.sqrt(np.sum(np.abs(weights) ** 2))
            bound = np.sum(w * np.sqrt([f.power for f in fields])) ** 2
            assert combine_coherent(fields, weights).power <= bound * (1.0 + 1e-12)


def test_sweep_rejects_bad_steps(handset):
    with pytest.raises(InvalidArgument):
        sphere_sweep(UeState(handset), theta_step=0.0)
    with pytest.raises(InvalidArgument):
        sphere_sweep(UeState(handset), phi_step=7.0)
