"""
esrom - Entropy-stable hyper-reduced reduced-order models

This package builds full-order flux-differencing solvers for Burgers' and the
compressible Euler equations, POD bases, empirical cubature rules and the
entropy-stable hyper-reduced Galerkin ROMs that run on them.
"""

from .config import RunConfig, load_config
from .database import ArtifactRegistry
from .errors import ConfigError, EsromError, NumericalError, PositivityError
from .fom import FullOrderModel
from .models import CubatureRule, ReducedBasis, SnapshotSet, Trajectory
from .physics import Burgers, Euler, make_law
from .rom import ReducedOrderModel, build_rom_operators

__version__ = "0.1.0"

__all__ = [
    'RunConfig',
    'load_config',
    'ArtifactRegistry',
    'EsromError',
    'ConfigError',
    'NumericalError',
    'PositivityError',
    'FullOrderModel',
    'CubatureRule',
    'ReducedBasis',
    'SnapshotSet',
    'Trajectory',
    'Burgers',
    'Euler',
    'make_law',
    'ReducedOrderModel',
    'build_rom_operators',
]
