"""
Data models for esrom.

This module contains the records passed between pipeline stages.
"""

from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np


@dataclass
class SnapshotSet:
    """Recorded full-order states

    ``states`` has shape (n_points, n_components, n_snapshots); column j of the
    stacked snapshot matrix is ``states[:, :, j].T.ravel()`` (component-major).
    """
    states: np.ndarray
    times: np.ndarray
    dim: int
    dx: float
    config: dict = field(default_factory=dict)
    fingerprint: str = ""
    steps: int = 0

    @property
    def n_points(self) -> int:
        return self.states.shape[0]

    @property
    def n_components(self) -> int:
        return self.states.shape[1]

    @property
    def n_snapshots(self) -> int:
        return self.states.shape[2]

    def state(self, j: int) -> np.ndarray:
        """Snapshot j as a (n_points, n_components) field"""
        return self.states[:, :, j]

    def final_state(self) -> np.ndarray:
        return self.states[:, :, -1]


@dataclass
class ReducedBasis:
    """POD basis shared by all solution components

    Attributes:
        v_matrix: Orthonormal modes, (n_points, n_modes)
        singular_values: Full POD spectrum of the snapshot matrix
        tol: sqrt(sum_{j>N} s_j^2 / sum_j s_j^2) for the N POD modes kept
        n_pod_modes: N, the truncation the tol refers to
        enriched: Entropy-variable snapshots were included
        constant_added: The constant vector was prepended by ensure_constant_mode
    """
    v_matrix: np.ndarray
    singular_values: np.ndarray
    tol: float
    n_pod_modes: int
    enriched: bool = False
    constant_added: bool = False
    fingerprint: str = ""
    parents: List[str] = field(default_factory=list)

    @property
    def n_modes(self) -> int:
        return self.v_matrix.shape[1]

    @property
    def n_points(self) -> int:
        return self.v_matrix.shape[0]


RULE_KINDS = ("volume", "stabilizing-merged", "viscous", "boundary")


@dataclass
class CubatureRule:
    """Index set with nonnegative weights

    For viscous rules the indices refer to rows of D (cell interfaces); for
    boundary rules they refer to entries of the boundary node list.
    """
    indices: np.ndarray
    weights: np.ndarray
    kind: str = "volume"
    residual: float = 0.0
    history: List[float] = field(default_factory=list)
    n_stabilizing: int = 0
    condition: Dict[int, float] = field(default_factory=dict)
    fingerprint: str = ""
    parents: List[str] = field(default_factory=list)

    def __post_init__(self):
        self.indices = np.asarray(self.indices, dtype=np.int64)
        self.weights = np.asarray(self.weights, dtype=np.float64)

    def __len__(self):
        return self.indices.shape[0]

    @classmethod
    def empty(cls, kind: str) -> "CubatureRule":
        return cls(np.zeros(0, dtype=np.int64), np.zeros(0), kind=kind)


@dataclass
class EntropyBalance:
    """Contributions to d/dt of the weighted total entropy

    Attributes:
        convective: Flux-differencing part plus the entropy-conservative part
            of the boundary flux (zero up to round-off)
        boundary: Lax-Friedrichs boundary penalty contribution (<= 0)
        viscous: Artificial viscosity contribution (<= 0 for v1, v2, FOM)
        scale: Magnitude used for relative checks
    """
    convective: float = 0.0
    boundary: float = 0.0
    viscous: float = 0.0
    scale: float = 1.0

    @property
    def total(self) -> float:
        return self.convective + self.boundary + self.viscous

    @property
    def viscous_dissipation(self) -> float:
        return -self.viscous


@dataclass
class StepRecord:
    """Per-step diagnostics row"""
    step: int
    time: float
    dt: float
    total_entropy: float
    balance: EntropyBalance
    conserved: np.ndarray


@dataclass
class Trajectory:
    """Time history of an integration

    ``coefficients`` holds ROM coefficients (n_modes, n_components, n_times),
    ``states`` full-order fields when recorded.
    """
    times: np.ndarray
    coefficients: Optional[np.ndarray] = None
    records: List[StepRecord] = field(default_factory=list)
    fingerprint: str = ""
    parents: List[str] = field(default_factory=list)
    config: dict = field(default_factory=dict)
