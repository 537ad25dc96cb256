"""Shared fixtures for the handset antenna simulator tests"""

import pytest

from handset_antenna_sim.blockage_sns import load_attenuation_table
from handset_antenna_sim.config_manager import ConfigManager
from handset_antenna_sim.device_layout import reference_handset
from handset_antenna_sim.element_pattern import PatternParams
from handset_antenna_sim.field_synthesis import UeState, sphere_sweep


@pytest.fixture(scope="session")
def directive():
    return PatternParams()


@pytest.fixture(scope="session")
def handset():
    return reference_handset()


@pytest.fixture(scope="session")
def example_table():
    return load_attenuation_table()


@pytest.fixture(scope="session")
def free_space_grid(handset):
    """1 degree sweep of the reference handset, identity orientation"""
    return sphere_sweep(UeState(handset))


@pytest.fixture
def write_config(tmp_path):
    """Write a YAML configuration and return its path"""
    def _write(text: str, name: str = "config.yaml") -> str:
        path = tmp_path / name
        path.write_text(text, encoding="utf-8")
        return str(path)
    return _write


@pytest.fixture
def default_config():
    return ConfigManager().build()
