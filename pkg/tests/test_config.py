"""
Tests for run configuration, presets and initial conditions
"""

import json

import numpy as np
import pytest

from esrom.config import (
    FomConfig,
    RunConfig,
    config_from_dict,
    fingerprint_of,
    load_config,
    merge_dicts,
)
from esrom.errors import ConfigError
from esrom.physics import Burgers, Euler
from esrom.presets import evaluate_initial_condition, get_preset, initial_condition_names, preset_names


def test_defaults_validate():
    """Test that the default configuration is valid"""
    cfg = RunConfig().validate()
    assert cfg.fom.periodic
    assert cfg.fom.dx == pytest.approx(0.01)
    assert cfg.rom.viscosity == "v2"


def test_unknown_keys_rejected():
    """Test that typos are configuration errors at every level"""
    with pytest.raises(ConfigError, match="k_cell"):
        config_from_dict({"fom": {"k_cell": 10}})
    with pytest.raises(ConfigError, match="fomm"):
        config_from_dict({"fomm": {}})


@pytest.mark.parametrize("section,values", [
    ("fom", {"law": "maxwell"}),
    ("fom", {"dim": 3}),
    ("fom", {"law": "burgers", "dim": 2}),
    ("fom", {"k_cells": 2}),
    ("fom", {"cfl": 0.0}),
    ("fom", {"epsilon": -1.0}),
    ("fom", {"boundary": "outflow"}),
    ("fom", {"domain": [1.0, -1.0]}),
    ("fom", {"gamma": 1.0}),
    ("basis", {"n_modes": 0}),
    ("cubature", {"cond_threshold": 0.5}),
    ("rom", {"viscosity": "v4"}),
    ("rom", {"threads": 0}),
])
def test_range_checks(section, values):
    """Test that out-of-range values are rejected"""
    with pytest.raises(ConfigError):
        config_from_dict({section: values})


@pytest.mark.parametrize("name", preset_names())
def test_presets_load(name):
    """Test that every preset builds a valid configuration"""
    cfg = load_config(preset=name)
    assert cfg.preset == name
    assert cfg.fom.k_cells >= 3


def test_unknown_preset():
    """Test that unknown presets are configuration errors"""
    with pytest.raises(ConfigError, match="unknown preset"):
        get_preset("nope")


def test_preset_copy_is_independent():
    """Test that mutating a returned preset leaves the template alone"""
    data = get_preset("euler1d-wall")
    data["fom"]["k_cells"] = 1
    assert get_preset("euler1d-wall")["fom"]["k_cells"] == 2500


def test_load_order(tmp_path):
    """Test preset < file < overrides precedence and scaling"""
    path = tmp_path / "run.json"
    path.write_text(json.dumps({"preset": "euler1d-wall", "fom": {"final_time": 0.2}}))
    cfg = load_config(path, overrides={"fom": {"epsilon": 1e-3}}, scale=0.1)
    assert cfg.fom.boundary == "wall"
    assert cfg.fom.final_time == 0.2
    assert cfg.fom.epsilon == 1e-3
    assert cfg.fom.k_cells == 250
    assert cfg.fom.domain == (-1.0, 1.0)


def test_invalid_json(tmp_path):
    """Test that malformed files are configuration errors"""
    path = tmp_path / "run.json"
    path.write_text("{not json")
    with pytest.raises(ConfigError):
        load_config(path)
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.json")


def test_scale_floor_and_sign():
    """Test that scaling keeps at least three cells and rejects nonpositive factors"""
    assert load_config(preset="euler1d-periodic", scale=1e-6).fom.k_cells == 3
    with pytest.raises(ConfigError):
        load_config(preset="euler1d-periodic", scale=0.0)


def test_merge_dicts():
    """Test recursive merging"""
    merged = merge_dicts({"fom": {"k_cells": 10, "cfl": 0.5}, "seed": 1}, {"fom": {"cfl": 0.25}})
    assert merged == {"fom": {"k_cells": 10, "cfl": 0.25}, "seed": 1}


def test_fingerprint():
    """Test that fingerprints are stable and sensitive to payload and parents"""
    a = load_config(preset="euler1d-periodic")
    b = load_config(preset="euler1d-periodic")
    assert a.fingerprint() == b.fingerprint()
    assert len(a.fingerprint()) == 64
    c = load_config(preset="euler1d-periodic", overrides={"fom": {"cfl": 0.4}})
    assert c.fingerprint() != a.fingerprint()
    assert fingerprint_of({"x": 1}) != fingerprint_of({"x": 1}, ["p"])


@pytest.mark.parametrize("name", ["euler1d_gaussian", "euler1d_wave", "constant"])
def test_initial_conditions_1d(name):
    """Test that 1D Euler initial conditions are admissible"""
    x = np.linspace(-1.0, 1.0, 50)[:, None]
    u0 = evaluate_initial_condition(name, x, Euler(dim=1))
    assert u0.shape == (50, 3)
    assert np.all(u0[:, 0] > 0.0)


@pytest.mark.parametrize("name", ["kelvin_helmholtz", "gaussian_pulse"])
def test_initial_conditions_2d(name):
    """Test the 2D Euler initial conditions"""
    g = np.linspace(-1.0, 1.0, 20)
    x = np.stack(np.meshgrid(g, g, indexing="ij"), axis=-1).reshape(-1, 2)
    u0 = evaluate_initial_condition(name, x, Euler(dim=2))
    assert u0.shape == (400, 4)


def test_kelvin_helmholtz_perturbation_is_localized():
    """Test that the vertical velocity peaks at the shear layers and stays bounded by alpha"""
    law = Euler(dim=2)
    x = np.array([[0.25, -0.5], [0.25, 0.5], [0.25, -1.0], [0.25, 0.0], [-0.25, -0.5]])
    _, vel, p = law.primitive(evaluate_initial_condition("kelvin_helmholtz", x, law, {"alpha": 0.1, "sigma": 0.1}))
    v = vel[:, 1]
    assert v[0] == pytest.approx(0.1, rel=1e-12)
    assert v[1] == pytest.approx(-0.1, rel=1e-12)
    assert abs(v[2]) <= 1e-10 and abs(v[3]) <= 1e-10
    assert v[4] == pytest.approx(-0.1, rel=1e-12)
    assert np.allclose(p, 2.5)


def test_burgers_initial_condition():
    """Test -sin(pi x)"""
    x = np.array([[-0.5], [0.0], [0.5]])
    u0 = evaluate_initial_condition("burgers_sine", x, Burgers())
    assert np.allclose(u0[:, 0], [1.0, 0.0, -1.0])


def test_initial_condition_errors():
    """Test unknown names and law mismatches"""
    x = np.zeros((4, 1))
    with pytest.raises(ConfigError):
        evaluate_initial_condition("nope", x, Euler(dim=1))
    with pytest.raises(ConfigError):
        evaluate_initial_condition("kelvin_helmholtz", x, Euler(dim=1))
    assert "constant" in initial_condition_names()


def test_fom_config_properties():
    """Test derived FOM quantities"""
    cfg = FomConfig(k_cells=50, domain=(0.0, 1.0), boundary="wall")
    assert cfg.dx == pytest.approx(0.02)
    assert not cfg.periodic
