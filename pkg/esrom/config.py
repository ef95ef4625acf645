"""
Run configuration.

A run is described by one JSON document with a ``fom`` section and optional
``basis``, ``cubature`` and ``rom`` sections. Unknown keys are rejected at
every level. Presets provide complete templates that a config file or CLI
flags override.
"""

import dataclasses
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

from .errors import ConfigError
from .presets import get_preset

BOUNDARY_KINDS = ("periodic", "wall")
VISCOSITY_KINDS = ("v1", "v2", "v3", "none")
ROM_INITIAL_CONDITIONS = ("dense", "hyper")


@dataclass
class FomConfig:
    """Full-order model parameters

    Attributes:
        law: "euler" or "burgers"
        dim: 1 or 2 (square domain, k_cells per direction)
        gamma: Ratio of specific heats
        k_cells: Cells per direction
        domain: (a, b); the 2D domain is [a, b]^2
        cfl: dt = cfl * dx / max wavespeed
        epsilon: Artificial viscosity coefficient
        final_time: End time T
        boundary: "periodic" or "wall"
        snapshot_stride: Record every n-th step (the final state is always recorded)
        initial_condition: Registered initial condition name
        ic_params: Extra parameters for the initial condition
        fixed_dt: Use this dt instead of the CFL rule
        max_steps: Stop after this many steps even if T is not reached
    """
    law: str = "euler"
    dim: int = 1
    gamma: float = 1.4
    k_cells: int = 200
    domain: Tuple[float, float] = (-1.0, 1.0)
    cfl: float = 0.5
    epsilon: float = 0.0
    final_time: float = 0.5
    boundary: str = "periodic"
    snapshot_stride: int = 1
    initial_condition: str = "euler1d_wave"
    ic_params: Dict[str, Any] = field(default_factory=dict)
    fixed_dt: Optional[float] = None
    max_steps: Optional[int] = None

    @property
    def periodic(self) -> bool:
        return self.boundary == "periodic"

    @property
    def dx(self) -> float:
        return (self.domain[1] - self.domain[0]) / self.k_cells

    def validate(self):
        if self.law not in ("euler", "burgers"):
            raise ConfigError(f"fom.law must be 'euler' or 'burgers', got '{self.law}'")
        if self.dim not in (1, 2):
            raise ConfigError(f"fom.dim must be 1 or 2, got {self.dim}")
        if self.law == "burgers" and self.dim != 1:
            raise ConfigError("burgers is only available in 1D")
        if self.k_cells < 3:
            raise ConfigError(f"fom.k_cells must be >= 3, got {self.k_cells}")
        if not self.cfl > 0.0:
            raise ConfigError(f"fom.cfl must be positive, got {self.cfl}")
        if not self.epsilon >= 0.0:
            raise ConfigError(f"fom.epsilon must be >= 0, got {self.epsilon}")
        if not self.final_time >= 0.0:
            raise ConfigError(f"fom.final_time must be >= 0, got {self.final_time}")
        if self.boundary not in BOUNDARY_KINDS:
            raise ConfigError(f"fom.boundary must be one of {BOUNDARY_KINDS}")
        if self.snapshot_stride < 1:
            raise ConfigError("fom.snapshot_stride must be >= 1")
        if len(self.domain) != 2 or not self.domain[1] > self.domain[0]:
            raise ConfigError(f"fom.domain must be [a, b] with b > a, got {self.domain}")
        if not self.gamma > 1.0:
            raise ConfigError(f"fom.gamma must be > 1, got {self.gamma}")
        if self.fixed_dt is not None and not self.fixed_dt > 0.0:
            raise ConfigError("fom.fixed_dt must be positive")
        if self.max_steps is not None and self.max_steps < 0:
            raise ConfigError("fom.max_steps must be >= 0")


@dataclass
class BasisConfig:
    """POD settings: modes, snapshot subsampling, enrichment, constant mode"""
    n_modes: int = 25
    subsample: int = 10
    enrich: bool = True
    constant_mode: bool = True

    def validate(self):
        if self.n_modes < 1:
            raise ConfigError("basis.n_modes must be >= 1")
        if self.subsample < 1:
            raise ConfigError("basis.subsample must be >= 1")


@dataclass
class CubatureConfig:
    """Hyper-reduction settings

    ``tol`` defaults to the POD truncation tolerance of the basis.
    """
    tol: Optional[float] = None
    min_tol: float = 1e-10
    flip_selection: bool = False
    cond_threshold: float = 1e6
    alpha_z: float = 1e-2
    max_stabilize_rounds: int = 2
    boundary_tol: float = 5e-8

    def validate(self):
        if self.tol is not None and not self.tol > 0.0:
            raise ConfigError("cubature.tol must be positive")
        if not self.cond_threshold > 1.0:
            raise ConfigError("cubature.cond_threshold must be > 1")
        if not self.alpha_z > 0.0:
            raise ConfigError("cubature.alpha_z must be positive")
        if self.max_stabilize_rounds < 0:
            raise ConfigError("cubature.max_stabilize_rounds must be >= 0")
        if not self.boundary_tol > 0.0:
            raise ConfigError("cubature.boundary_tol must be positive")


@dataclass
class RomConfig:
    """Online ROM settings; cfl/final_time default to the FOM values"""
    viscosity: str = "v2"
    initial_condition: str = "dense"
    boundary_penalty: bool = True
    cfl: Optional[float] = None
    final_time: Optional[float] = None
    threads: int = 1

    def validate(self):
        if self.viscosity not in VISCOSITY_KINDS:
            raise ConfigError(f"rom.viscosity must be one of {VISCOSITY_KINDS}")
        if self.initial_condition not in ROM_INITIAL_CONDITIONS:
            raise ConfigError(f"rom.initial_condition must be one of {ROM_INITIAL_CONDITIONS}")
        if self.cfl is not None and not self.cfl > 0.0:
            raise ConfigError("rom.cfl must be positive")
        if self.threads < 1:
            raise ConfigError("rom.threads must be >= 1")


@dataclass
class RunConfig:
    """Complete pipeline configuration"""
    fom: FomConfig = field(default_factory=FomConfig)
    basis: BasisConfig = field(default_factory=BasisConfig)
    cubature: CubatureConfig = field(default_factory=CubatureConfig)
    rom: RomConfig = field(default_factory=RomConfig)
    preset: Optional[str] = None
    description: str = ""
    seed: int = 0
    out: str = "."

    def validate(self) -> "RunConfig":
        self.fom.validate()
        self.basis.validate()
        self.cubature.validate()
        self.rom.validate()
        return self

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["fom"]["domain"] = list(self.fom.domain)
        return d

    def fingerprint(self) -> str:
        """SHA-256 of the canonical JSON of this config"""
        return fingerprint_of(self.to_dict())


_SECTIONS = {"fom": FomConfig, "basis": BasisConfig, "cubature": CubatureConfig, "rom": RomConfig}


def _build_section(cls, data: dict, name: str):
    if not isinstance(data, dict):
        raise ConfigError(f"section '{name}' must be an object")
    known = {f.name for f in dataclasses.fields(cls)}
    unknown = sorted(set(data) - known)
    if unknown:
        raise ConfigError(f"unknown key(s) in '{name}': {', '.join(unknown)}")
    try:
        obj = cls(**data)
    except TypeError as e:
        raise ConfigError(f"invalid '{name}' section: {e}") from e
    if cls is FomConfig:
        obj.domain = tuple(float(v) for v in obj.domain)
        obj.k_cells = int(obj.k_cells)
    return obj


def config_from_dict(data: dict) -> RunConfig:
    """Build and validate a RunConfig, rejecting unknown keys"""
    if not isinstance(data, dict):
        raise ConfigError("configuration must be a JSON object")
    known = {f.name for f in dataclasses.fields(RunConfig)}
    unknown = sorted(set(data) - known)
    if unknown:
        raise ConfigError(f"unknown top-level key(s): {', '.join(unknown)}")
    kwargs = {}
    for key, value in data.items():
        if key in _SECTIONS:
            kwargs[key] = _build_section(_SECTIONS[key], value, key)
        else:
            kwargs[key] = value
    return RunConfig(**kwargs).validate()


def merge_dicts(base: dict, override: dict) -> dict:
    """Recursive dict update; nested sections are merged, not replaced"""
    out = dict(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = merge_dicts(out[key], value)
        else:
            out[key] = value
    return out


def load_config(
    path: Optional[Path] = None,
    preset: Optional[str] = None,
    overrides: Optional[dict] = None,
    scale: Optional[float] = None,
) -> RunConfig:
    """Assemble a RunConfig from a preset, a JSON file and overrides (in that order)

    Args:
        path: JSON config file
        preset: Preset name; a ``preset`` key inside the file is honored too
        overrides: Nested dict applied last (CLI flags)
        scale: Multiply k_cells by this factor (rounded, at least 3)
    """
    data: dict = {}
    file_data: dict = {}
    if path is not None:
        try:
            file_data = json.loads(Path(path).read_text())
        except FileNotFoundError as e:
            raise ConfigError(f"config file not found: {path}") from e
        except json.JSONDecodeError as e:
            raise ConfigError(f"config file {path} is not valid JSON: {e}") from e
        if not isinstance(file_data, dict):
            raise ConfigError("configuration must be a JSON object")

    preset = preset or file_data.get("preset")
    if preset:
        data = get_preset(preset)
        data["preset"] = preset
    data = merge_dicts(data, file_data)
    if overrides:
        data = merge_dicts(data, overrides)

    cfg = config_from_dict(data)
    if scale is not None:
        apply_scale(cfg, scale)
    return cfg


def apply_scale(cfg: RunConfig, scale: float) -> RunConfig:
    """Shrink or grow the grid proportionally"""
    if not scale > 0.0:
        raise ConfigError(f"--scale must be positive, got {scale}")
    cfg.fom.k_cells = max(3, int(round(cfg.fom.k_cells * scale)))
    return cfg


def fingerprint_of(payload: Any, parents: Optional[List[str]] = None) -> str:
    """SHA-256 over canonical JSON of ``payload`` and the parent fingerprints"""
    doc = {"payload": payload, "parents": list(parents or [])}
    blob = json.dumps(doc, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()
