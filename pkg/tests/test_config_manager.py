from types import SimpleNamespace

import pytest
import yaml

from handset_antenna_sim.blockage_sns import BlockageScenario
from handset_antenna_sim.config_manager import (
    ConfigManager,
    DEFAULT_CONFIG,
    ParseError,
    ValidationError,
    load_config,
)
from handset_antenna_sim.device_layout import LayoutKind
from handset_antenna_sim.element_pattern import PatternKind


def test_minimal_config_applies_defaults(write_config):
    cfg = load_config(write_config("run: {seed: 1}\n"))
    assert cfg.run.seed == 1
    assert cfg.layout.kind is LayoutKind.HANDHELD
    assert cfg.layout.ids == (1, 2, 3, 4, 5, 6, 7, 8)
    assert cfg.pattern.kind is PatternKind.DIRECTIVE
    assert cfg.pattern.g_max == 5.3
    assert cfg.blockage.probabilities.values == (1.0, 0.0, 0.0, 0.0)
    assert cfg.blockage.model == 'sns'
    assert cfg.run.carrier_hz == 3.5e9
    assert cfg.active_ids == cfg.layout.ids


def test_defaults_without_a_file():
    cfg = ConfigManager().build()
    assert cfg.run.seed is None
    assert cfg.source is None
    assert cfg.blockage.table.provenance == 'example'


def test_probabilities_must_sum_to_one(write_config):
    text = """
blockage:
  scenario_probabilities: [0.5, 0.2, 0.2, 0.2]
"""
    with pytest.raises(ValidationError) as info:
        load_config(write_config(text))
    assert any("sum to 1" in v for v in info.value.violations)


def test_probabilities_replace_the_default(write_config):
    cfg = load_config(write_config("blockage:\n  scenario_probabilities: {OneHandBrowsing: 1.0}\n"))
    assert cfg.blockage.probabilities.values == (0.0, 1.0, 0.0, 0.0)


def test_table_entry_for_unknown_antenna(write_config):
    table = {
        'bands': [{'f_low_hz': 1000000000, 'f_high_hz': 8400000000}],
        'entries': [{'scenario': 'OneHandBrowsing', 'antenna_id': 9, 'band_index': 0, 'attenuation_db': 3.0}],
    }
    write_config(yaml.safe_dump(table), name="table.yaml")
    with pytest.raises(ValidationError) as info:
        load_config(write_config("blockage:\n  attenuation_table: table.yaml\n"))
    assert any("unknown antenna ids [9]" in v for v in info.value.violations)


def test_band_gap_is_reported(write_config):
    text = """
blockage:
  scenario_probabilities: {FreeSpace: 0.5, OneHandBrowsing: 0.5}
run:
  carrier_hz: 10000000000
"""
    with pytest.raises(ValidationError) as info:
        load_config(write_config(text))
    assert any("outside every table band" in v for v in info.value.violations)


def test_every_violation_is_collected(write_config):
    text = """
pattern: {theta_3db_deg: -5}
blockage: {model: pocket}
run: {replications: 0, theta_step_deg: 7}
logging: {level: LOUD}
"""
    with pytest.raises(ValidationError) as info:
        load_config(write_config(text))
    violations = info.value.violations
    assert len(violations) >= 5
    assert str(info.value).startswith("Invalid configuration")


def test_seed_is_mandatory_for_randomized_runs(write_config):
    path = write_config("run: {replications: 10}\n")
    assert load_config(path).run.seed is None
    with pytest.raises(ValidationError):
        load_config(path, require_seed=True)
    with pytest.raises(ValidationError):
        load_config(write_config("run: {seed: -3}\n"))


def test_sub_1ghz_active_antennas(write_config):
    with pytest.raises(ValidationError) as info:
        load_config(write_config("run: {carrier_hz: 700000000}\n"))
    assert any("below 1 GHz" in v for v in info.value.violations)
    cfg = load_config(write_config("run: {carrier_hz: 700000000, active_ids: [4, 8]}\n"))
    assert cfg.active_ids == (4, 8)


def test_unknown_active_id(write_config):
    with pytest.raises(ValidationError) as info:
        load_config(write_config("run: {active_ids: [1, 12]}\n"))
    assert any("12" in v for v in info.value.violations)


def test_layout_overrides_and_file(write_config):
    write_config(yaml.safe_dump([{'id': 3, 'dual_polarized': True}]), name="layout.yaml")
    text = """
layout:
  layout_file: layout.yaml
  elements:
    - {id: 4, gamma_deg: 30.0}
"""
    cfg = load_config(write_config(text))
    assert cfg.layout.element(3).dual_polarized
    assert cfg.layout.element(4).orientation.gamma == 30.0


def test_legacy_and_model_a_sections(write_config):
    text = """
layout: {kind: legacy_array, n_ports: 8}
blockage:
  model: model_a
  model_a_region: {center_phi_deg: 90.0, attenuation_db: 20.0}
run:
  orientation: {distribution: uniform}
"""
    cfg = load_config(write_config(text))
    assert cfg.layout.kind is LayoutKind.LEGACY_ARRAY
    assert len(cfg.layout.elements) == 4
    assert cfg.blockage.model == 'model_a'
    assert cfg.blockage.model_a_region.center_phi == 90.0
    assert cfg.blockage.model_a_region.attenuation_db == 20.0
    assert cfg.run.orientation_distribution == 'uniform'


def test_parse_errors(tmp_path, write_config):
    with pytest.raises(ParseError):
        ConfigManager(str(tmp_path / "missing.yaml"))
    with pytest.raises(ParseError):
        ConfigManager(write_config("run: [unclosed\n"))
    with pytest.raises(ParseError):
        ConfigManager(write_config("- just\n- a list\n"))


def test_dot_path_access_and_cli_overrides():
    config = ConfigManager()
    assert config.get('run.orientation.distribution') == 'fixed'
    assert config.get('run.missing.key', 'fallback') == 'fallback'
    config.set('run.replications', 5)
    config.update_from_args(SimpleNamespace(seed=11, carrier_hz=28e9, replications=None,
                                            active_ids=[1, 2], n_jobs=2, attenuation_table=None))
    assert config.get('run.seed') == 11
    assert config.get('run.replications') == 5
    assert config.get('run.active_ids') == [1, 2]
    assert DEFAULT_CONFIG['run']['seed'] is None


def test_save_and_reload(tmp_path):
    config = ConfigManager()
    config.set('run.seed', 99)
    config.set('blockage.scenario_probabilities', {'TwoHandBrowsing': 1.0})
    path = tmp_path / "saved.yaml"
    config.save_config(str(path))
    cfg = load_config(str(path))
    assert cfg.run.seed == 99
    assert cfg.blockage.probabilities.as_dict()[BlockageScenario.TWO_HAND_BROWSING.value] == 1.0


@pytest.mark.parametrize("text, section", [
    ("run: null\n", "run"),
    ("pattern: [5.3, 125.0]\n", "pattern"),
    ("blockage: [sns]\n", "blockage"),
    ("run: {orientation: uniform}\n", "run.orientation"),
])
def test_sections_must_be_mappings(write_config, text, section):
    with pytest.raises(ValidationError) as info:
        load_config(write_config(text))
    assert any(v.startswith(f"{section} must be a mapping") for v in info.value.violations)
