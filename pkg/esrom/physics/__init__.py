"""
Conservation-law definitions.

Each law is a ConservationLaw subclass; ``make_law`` builds one by name.
"""

from .base import ConservationLaw, log_mean, unit_normal
from .burgers import Burgers
from .euler import Euler

LAWS = ("burgers", "euler")


def make_law(name: str, dim: int = 1, gamma: float = 1.4) -> ConservationLaw:
    """Instantiate a conservation law by name

    Args:
        name: "burgers" or "euler"
        dim: Space dimension (Burgers is 1D only)
        gamma: Ratio of specific heats (Euler only)
    """
    if name == "burgers":
        if dim != 1:
            raise ValueError("burgers is one-dimensional")
        return Burgers()
    if name == "euler":
        return Euler(dim=dim, gamma=gamma)
    raise ValueError(f"unknown conservation law '{name}' (expected one of {LAWS})")


__all__ = [
    'ConservationLaw',
    'Burgers',
    'Euler',
    'LAWS',
    'log_mean',
    'make_law',
    'unit_normal',
]
