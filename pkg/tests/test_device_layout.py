import numpy as np
import pytest
import yaml
from numpy.testing import assert_allclose
from scipy.constants import c

from handset_antenna_sim.blockage_sns import AntennaNotInBand, BlockageScenario, element_attenuation_db
from handset_antenna_sim.device_layout import (
    AntennaElement,
    InvalidPortCount,
    LayoutError,
    LayoutKind,
    apply_overrides,
    cpe_reference,
    is_sub_1ghz,
    legacy_halfwave_array,
    load_layout_file,
    reference_handset,
    validate,
)
from handset_antenna_sim.element_pattern import PatternKind
from handset_antenna_sim.sphere_geom import RotationAngles


def test_reference_handset_positions(handset):
    assert handset.kind is LayoutKind.HANDHELD
    assert handset.ids == (1, 2, 3, 4, 5, 6, 7, 8)
    assert handset.element(4).position_mm == (0.0, -75.0, 0.0)
    assert handset.element(8).position_mm == (0.0, 75.0, 0.0)
    assert handset.element(1).position_mm == (-35.0, 75.0, 0.0)
    assert_allclose(handset.distance_mm(4, 8), 150.0)
    assert_allclose(handset.distance_mm(1, 2), 70.0)


def test_reference_handset_spacings_are_irregular(handset):
    ids = handset.ids
    spacings = {round(handset.distance_mm(a, b), 6) for i, a in enumerate(ids) for b in ids[i + 1:]}
    assert len(spacings) >= 3


def test_reference_handset_boresights_point_outward(handset):
    assert_allclose(handset.element(3).boresight_lcs(), [1.0, 0.0, 0.0], atol=1e-15)
    assert_allclose(handset.element(7).boresight_lcs(), [-1.0, 0.0, 0.0], atol=1e-15)
    assert_allclose(handset.element(4).boresight_lcs(), [0.0, -1.0, 0.0], atol=1e-15)
    assert_allclose(handset.element(8).orientation.alpha, 90.0)
    assert handset.structural_problems() == []


def test_inward_boresight_is_reported(handset):
    flipped = apply_overrides(handset, [{'id': 3, 'alpha_deg': 180.0}])
    problems = flipped.structural_problems()
    assert len(problems) == 1
    assert "Element 3" in problems[0]


def test_off_outline_position_is_reported(handset):
    moved = apply_overrides(handset, [{'id': 3, 'position_mm': [10.0, 0.0, 0.0]}])
    assert any("off the handheld outline" in p for p in moved.structural_problems())


@pytest.mark.parametrize("n_ports", [2, 4, 8])
def test_legacy_array_spacing(n_ports):
    layout = legacy_halfwave_array(n_ports, 3.5e9)
    assert layout.kind is LayoutKind.LEGACY_ARRAY
    assert len(layout.elements) == n_ports // 2
    assert all(e.dual_polarized for e in layout.elements)
    assert all(e.pattern.kind is PatternKind.ISOTROPIC for e in layout.elements)
    x = np.array([e.position_mm[0] for e in layout.elements])
    assert_allclose(x.mean(), 0.0, atol=1e-12)
    if n_ports > 2:
        assert_allclose(np.diff(x), c / (2 * 3.5e9) * 1e3)


def test_legacy_array_invalid_port_count():
    with pytest.raises(InvalidPortCount):
        legacy_halfwave_array(3, 3.5e9)
    with pytest.raises(InvalidPortCount):
        legacy_halfwave_array(16, 3.5e9)


def test_cpe_layout_takes_configured_antennas():
    e = AntennaElement(1, (0.0, 0.0, 100.0), RotationAngles(0.0, -90.0, 0.0))
    layout = cpe_reference([e])
    assert layout.kind is LayoutKind.CPE
    assert layout.ids == (1,)
    assert cpe_reference().elements == ()


def test_duplicate_ids_rejected(handset):
    with pytest.raises(LayoutError):
        type(handset)(handset.form_factor, handset.elements + (handset.element(1),), handset.kind)


def test_sub_1ghz_rule(handset):
    violations = validate(handset, 0.7e9)
    assert sorted(v.antenna_id for v in violations) == [1, 2, 3, 5, 6, 7]
    assert validate(handset, 0.7e9, active_ids=[4, 8]) == []
    assert validate(handset, 3.5e9) == []


def test_one_ghz_belongs_to_the_lowest_band(handset, example_table):
    assert is_sub_1ghz(1.0e9)
    assert not is_sub_1ghz(1.0e9 + 1.0)
    assert [v.antenna_id for v in validate(handset, 1.0e9, active_ids=[1, 4])] == [1]
    assert validate(handset, 1.0e9, active_ids=[4, 8]) == []
    # layout validation and the table lookup agree at the band edge
    assert element_attenuation_db(example_table, BlockageScenario.ONE_HAND_BROWSING, 4, 1.0e9) == 8.5
    with pytest.raises(AntennaNotInBand):
        element_attenuation_db(example_table, BlockageScenario.ONE_HAND_BROWSING, 1, 1.0e9)


def test_validate_ignores_active_id_order(handset):
    expected = validate(handset, 0.7e9, active_ids=[1, 4, 2, 12])
    assert validate(handset, 0.7e9, active_ids=(12, 2, 4, 1)) == expected
    assert validate(handset, 0.7e9, active_ids=iter([2, 12, 1, 4])) == expected
    assert [v.antenna_id for v in expected] == [12, 1, 2]


def test_unknown_active_id(handset):
    violations = validate(handset, 3.5e9, active_ids=[1, 9])
    assert [v.antenna_id for v in violations] == [9]


def test_overrides_add_and_replace(handset, directive):
    layout = apply_overrides(handset, [
        {'id': 4, 'dual_polarized': True},
        {'id': 9, 'position_mm': [35.0, 40.0, 0.0]},
    ], directive)
    assert layout.element(4).dual_polarized
    assert layout.element(4).position_mm == (0.0, -75.0, 0.0)
    assert layout.ids[-1] == 9
    with pytest.raises(LayoutError):
        apply_overrides(handset, [{'id': 10}])


def test_load_layout_file(tmp_path):
    path = tmp_path / "layout.yaml"
    path.write_text(yaml.safe_dump({'elements': [{'id': 2, 'gamma_deg': 45.0}]}), encoding="utf-8")
    assert load_layout_file(str(path)) == [{'id': 2, 'gamma_deg': 45.0}]
    with pytest.raises(LayoutError):
        load_layout_file(str(tmp_path / "missing.yaml"))
