import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_equal

from handset_antenna_sim.element_pattern import (
    FieldPair,
    PatternKind,
    PatternParameterError,
    PatternParams,
    QuadratureTooCoarse,
    efficiency_db,
    field_pair,
    field_pattern_array,
    gain_db,
    gain_db_array,
    pattern_metrics,
)
from handset_antenna_sim.sphere_geom import Direction


def test_boresight_and_back_lobe(directive):
    assert gain_db(directive, Direction(90.0, 0.0)) == 5.3
    assert_allclose(gain_db(directive, Direction(90.0, 180.0)), -17.2, atol=1e-12)


def test_half_power_points(directive):
    assert_allclose(gain_db_array(directive, 90.0, [-62.5, 62.5]), [2.3, 2.3], atol=1e-12)
    assert_allclose(gain_db_array(directive, [27.5, 152.5], 0.0), [2.3, 2.3], atol=1e-12)


def test_vertical_attenuation_and_cap(directive):
    # 12 * (90 / 125)^2 = 6.2208 dB toward the pole
    assert_allclose(gain_db(directive, Direction(0.0, 0.0)), 5.3 - 6.2208, atol=1e-12)
    # vertical plus horizontal attenuation is capped at 22.5 dB
    assert_allclose(gain_db(directive, Direction(0.0, 180.0)), -17.2, atol=1e-12)
    grid = gain_db_array(directive, np.linspace(0, 180, 37)[:, None], np.linspace(-180, 180, 73)[None, :])
    assert grid.max() <= 5.3
    assert grid.min() >= 5.3 - 22.5 - 1e-12


def test_azimuth_wrapping(directive):
    assert_allclose(gain_db_array(directive, 90.0, [30.0, 390.0, -330.0]), gain_db(directive, Direction(90, 30)))


def test_isotropic_pattern():
    iso = PatternParams.isotropic()
    assert_equal(gain_db_array(iso, [0.0, 90.0, 180.0], [0.0, 45.0, -180.0]), [0.0, 0.0, 0.0])
    assert efficiency_db(iso) == 0.0
    assert pattern_metrics(iso).efficiency_db == 0.0


def test_field_pattern_is_theta_polarized(directive):
    f = field_pair(directive, Direction(70.0, 20.0))
    assert f.f_phi == 0.0
    assert_allclose(10 * np.log10(f.power), gain_db(directive, Direction(70.0, 20.0)), atol=1e-12)
    f_theta, f_phi = field_pattern_array(directive, [90.0, 45.0], [0.0, 100.0])
    assert_equal(f_phi, [0.0, 0.0])
    assert f_theta.shape == (2,)


def test_field_pair_power():
    assert FieldPair(3.0, 4.0).power == 25.0
    assert FieldPair(1j, 1.0).power == 2.0


def test_pattern_metrics(directive):
    m = pattern_metrics(directive, 0.25)
    assert_allclose(m.peak_dbi, 5.3, atol=1e-12)
    assert abs(m.hpbw_az_deg - 125.0) <= 1.0
    assert abs(m.hpbw_el_deg - 125.0) <= 1.0
    assert_allclose(m.fbr_db, 22.5, atol=1e-12)
    assert abs(m.efficiency_db) <= 0.5


def test_narrow_beam_metrics():
    narrow = PatternParams(theta_3db=65.0, phi_3db=65.0, g_max=8.0)
    m = pattern_metrics(narrow, 0.5)
    assert abs(m.hpbw_az_deg - 65.0) <= 1.0
    assert abs(m.hpbw_el_deg - 65.0) <= 1.0


def test_quadrature_step_limits(directive):
    with pytest.raises(QuadratureTooCoarse):
        efficiency_db(directive, 2.0)
    with pytest.raises(QuadratureTooCoarse):
        pattern_metrics(directive, 0.0)


def test_parameter_validation():
    with pytest.raises(PatternParameterError):
        PatternParams(theta_3db=-1.0)
    with pytest.raises(PatternParameterError):
        PatternParams(a_max=-3.0)
    with pytest.raises(PatternParameterError):
        PatternParams(kind="omni")


def test_from_dict_and_kind():
    p = PatternParams.from_dict({'g_max_dbi': 6.0, 'phi_3db_deg': 90, 'kind': 'directive'})
    assert (p.g_max, p.phi_3db, p.theta_3db) == (6.0, 90.0, 125.0)
    assert p.with_kind(PatternKind.ISOTROPIC).kind is PatternKind.ISOTROPIC
    assert PatternParams.from_dict({}) == PatternParams()


def test_gain_is_symmetric(directive):
    rng = np.random.default_rng(5)
    theta = rng.uniform(0.0, 180.0, 500)
    phi = rng.uniform(-180.0, 180.0, 500)
    g = gain_db_array(directive, theta, phi)
    assert_allclose(gain_db_array(directive, theta, -phi), g, atol=1e-12)
    assert_allclose(gain_db_array(directive, 180.0 - theta, phi), g, atol=1e-12)


def test_monotone_roll_off_along_principal_cuts(directive):
    offsets = np.linspace(0.0, 180.0, 721)
    azimuth_cut = gain_db_array(directive, 90.0, offsets)
    elevation_cut = gain_db_array(directive, 90.0 - offsets[offsets <= 90.0], 0.0)
    for cut in (azimuth_cut, elevation_cut):
        assert cut[0] == 5.3
        assert np.all(np.diff(cut) <= 1e-12)
    # the azimuth cut flattens once the 22.5 dB cap engages
    assert_allclose(azimuth_cut[-1], 5.3 - 22.5, atol=1e-12)
