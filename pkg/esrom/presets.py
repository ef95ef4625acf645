"""
Named experiment presets and their initial conditions.

Presets are embedded JSON templates for a RunConfig. Initial conditions are
registered by name and evaluated on grid point coordinates.
"""

import json
from typing import Callable, Dict

import numpy as np
from scipy.special import expit

from .errors import ConfigError
from .physics import ConservationLaw, Euler

_PRESETS_JSON = """
{
  "euler1d-wall": {
    "description": "1D Euler, reflective walls, Gaussian density bump that steepens into a viscous shock",
    "fom": {"law": "euler", "dim": 1, "k_cells": 2500, "domain": [-1.0, 1.0],
            "cfl": 0.75, "epsilon": 2e-4, "final_time": 0.7, "boundary": "wall",
            "snapshot_stride": 1, "initial_condition": "euler1d_gaussian"},
    "basis": {"n_modes": 25, "subsample": 10, "enrich": true},
    "rom": {"viscosity": "v2"}
  },
  "euler1d-periodic": {
    "description": "1D Euler, periodic, smooth density/velocity wave (entropy-conservation checks)",
    "fom": {"law": "euler", "dim": 1, "k_cells": 200, "domain": [-1.0, 1.0],
            "cfl": 0.5, "epsilon": 0.0, "final_time": 0.5, "boundary": "periodic",
            "snapshot_stride": 2, "initial_condition": "euler1d_wave"},
    "basis": {"n_modes": 15, "subsample": 1, "enrich": true},
    "rom": {"viscosity": "none"}
  },
  "kh2d": {
    "description": "2D Euler, periodic, smoothed Kelvin-Helmholtz instability",
    "fom": {"law": "euler", "dim": 2, "k_cells": 200, "domain": [-1.0, 1.0],
            "cfl": 0.5, "epsilon": 1e-3, "final_time": 3.0, "boundary": "periodic",
            "snapshot_stride": 10, "initial_condition": "kelvin_helmholtz",
            "ic_params": {"alpha": 0.1, "sigma": 0.1}},
    "basis": {"n_modes": 75, "subsample": 1, "enrich": true},
    "rom": {"viscosity": "v2"}
  },
  "pulse2d": {
    "description": "2D Euler, reflective walls, Gaussian pressure pulse",
    "fom": {"law": "euler", "dim": 2, "k_cells": 150, "domain": [-1.0, 1.0],
            "cfl": 0.5, "epsilon": 1e-3, "final_time": 0.3, "boundary": "wall",
            "snapshot_stride": 1, "initial_condition": "gaussian_pulse"},
    "basis": {"n_modes": 25, "subsample": 1, "enrich": true},
    "rom": {"viscosity": "v2"}
  },
  "burgers1d": {
    "description": "1D periodic Burgers, decaying stationary shock from -sin(pi x)",
    "fom": {"law": "burgers", "dim": 1, "k_cells": 400, "domain": [-1.0, 1.0],
            "cfl": 0.5, "epsilon": 2e-3, "final_time": 1.0, "boundary": "periodic",
            "snapshot_stride": 2, "initial_condition": "burgers_sine"},
    "basis": {"n_modes": 20, "subsample": 1, "enrich": false},
    "rom": {"viscosity": "v2"}
  }
}
"""

PRESETS: Dict[str, dict] = json.loads(_PRESETS_JSON)


def preset_names():
    return sorted(PRESETS)


def get_preset(name: str) -> dict:
    """Return a deep copy of a preset template"""
    if name not in PRESETS:
        raise ConfigError(
            f"unknown preset '{name}' (available: {', '.join(preset_names())})"
        )
    return json.loads(json.dumps(PRESETS[name]))


# -- initial conditions --------------------------------------------------------

InitialCondition = Callable[[np.ndarray, ConservationLaw, dict], np.ndarray]

_INITIAL_CONDITIONS: Dict[str, InitialCondition] = {}


def initial_condition(name: str):
    """Register an initial condition under ``name``"""
    def register(func: InitialCondition) -> InitialCondition:
        _INITIAL_CONDITIONS[name] = func
        return func
    return register


def _require_euler(law, dim):
    if not isinstance(law, Euler) or law.dim != dim:
        raise ConfigError(f"initial condition needs {dim}D Euler, got {law!r}")


@initial_condition("euler1d_gaussian")
def euler1d_gaussian(x, law, params):
    _require_euler(law, 1)
    bump = np.exp(-100.0 * (x[:, 0] - 0.5) ** 2)
    rho = 2.0 + 0.5 * bump
    u = 0.1 * bump
    return law.conservative(rho, u[:, None], rho ** law.gamma)


@initial_condition("euler1d_wave")
def euler1d_wave(x, law, params):
    _require_euler(law, 1)
    amp = params.get("amplitude", 0.5)
    rho = 2.0 + amp * np.sin(np.pi * x[:, 0])
    u = 0.1 * np.cos(np.pi * x[:, 0])
    return law.conservative(rho, u[:, None], rho ** law.gamma)


@initial_condition("kelvin_helmholtz")
def kelvin_helmholtz(x, law, params):
    _require_euler(law, 2)
    alpha = params.get("alpha", 0.1)
    sigma2 = params.get("sigma", 0.1) ** 2
    xs, ys = x[:, 0], x[:, 1]
    # 1/(1 + e^{-z}) written with expit so large |z| cannot overflow
    layer = expit((ys + 0.5) / sigma2) - expit((ys - 0.5) / sigma2)
    rho = 1.0 + layer
    u = layer - 0.5
    v = alpha * np.sin(2.0 * np.pi * xs) * (
        np.exp(-((ys + 0.5) ** 2) / sigma2) - np.exp(-((ys - 0.5) ** 2) / sigma2)
    )
    p = np.full_like(rho, params.get("pressure", 2.5))
    return law.conservative(rho, np.stack([u, v], axis=-1), p)


@initial_condition("gaussian_pulse")
def gaussian_pulse(x, law, params):
    _require_euler(law, 2)
    rho = 1.0 + np.exp(-50.0 * (x[:, 0] ** 2 + (x[:, 1] + 0.5) ** 2))
    vel = np.zeros((x.shape[0], 2))
    return law.conservative(rho, vel, rho ** law.gamma)


@initial_condition("burgers_sine")
def burgers_sine(x, law, params):
    return -np.sin(np.pi * x[:, :1])


@initial_condition("constant")
def constant_state(x, law, params):
    """Uniform state; params["state"] holds the conservative vector"""
    state = np.asarray(params.get("state", _default_constant(law)), dtype=np.float64)
    return np.tile(state, (x.shape[0], 1))


def _default_constant(law):
    if isinstance(law, Euler):
        return law.conservative(1.0, np.zeros(law.dim), 1.0)
    return np.ones(law.n_components)


def evaluate_initial_condition(name: str, x: np.ndarray, law, params=None) -> np.ndarray:
    """Evaluate the named initial condition on points ``x`` (n_points, dim)"""
    if name not in _INITIAL_CONDITIONS:
        raise ConfigError(
            f"unknown initial condition '{name}' "
            f"(available: {', '.join(sorted(_INITIAL_CONDITIONS))})"
        )
    u0 = _INITIAL_CONDITIONS[name](x, law, params or {})
    law.check_admissible(u0)
    return u0


def initial_condition_names():
    return sorted(_INITIAL_CONDITIONS)
