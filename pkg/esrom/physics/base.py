"""
Base class for conservation laws.

All state arrays carry the solution components on the last axis and are
vectorized over any number of leading axes (grid points, sample pairs).
Directional quantities are stacked on a new first axis of length ``dim``.
"""

from abc import ABC, abstractmethod
from typing import Sequence

import numpy as np

from ..errors import NumericsError

# Ismail-Roe switch: use the series branch when f^2 < LOG_MEAN_SERIES_CUTOFF
LOG_MEAN_SERIES_CUTOFF = 1e-4


def log_mean(a, b):
    """Logarithmic mean (a - b) / (log a - log b), stable as a -> b.

    Args:
        a: Positive scalar or array
        b: Positive scalar or array, broadcastable against ``a``

    Returns:
        Logarithmic mean, elementwise
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if np.any(a <= 0.0) or np.any(b <= 0.0):
        raise NumericsError("log_mean requires positive arguments")

    total = a + b
    f = (a - b) / total
    u = f * f
    series = u < LOG_MEAN_SERIES_CUTOFF
    # guard the log branch against division by zero where the series applies
    f_safe = np.where(series, 0.5, f)
    big = np.log1p(2.0 * f_safe / (1.0 - f_safe)) / (2.0 * f_safe)
    small = 1.0 + u / 3.0 + u * u / 5.0 + u * u * u / 7.0
    F = np.where(series, small, big)
    return total / (2.0 * F)


class ConservationLaw(ABC):
    """A system of conservation laws du/dt + div f(u) = 0 with an entropy pair

    Subclasses provide the analytic flux, the convex entropy S with its
    variables v = dS/du and potential psi, the symmetric Jacobian du/dv, an
    entropy-conservative two-point flux and the wall mirror state.
    """

    name: str = ""
    n_components: int = 0
    dim: int = 1

    @property
    def component_names(self) -> Sequence[str]:
        return [f"u{i}" for i in range(self.n_components)]

    # -- admissibility ---------------------------------------------------------

    def check_admissible(self, u: np.ndarray) -> None:
        """Raise PositivityError if any state is inadmissible"""

    def check_entropy_admissible(self, v: np.ndarray) -> None:
        """Raise PositivityError if any entropy-variable state is outside the image of v(u)"""

    # -- analytic quantities ---------------------------------------------------

    @abstractmethod
    def flux_dir(self, u: np.ndarray, axis: int) -> np.ndarray:
        """Flux in coordinate direction ``axis``"""

    def flux(self, u: np.ndarray) -> np.ndarray:
        """All directional fluxes, shape (dim, ..., n)"""
        return np.stack([self.flux_dir(u, a) for a in range(self.dim)])

    @abstractmethod
    def entropy(self, u: np.ndarray) -> np.ndarray:
        """Convex entropy S(u), shape (...)"""

    @abstractmethod
    def entropy_variables(self, u: np.ndarray) -> np.ndarray:
        """v(u) = dS/du"""

    @abstractmethod
    def conservative_from_entropy(self, v: np.ndarray) -> np.ndarray:
        """Inverse map u(v)"""

    @abstractmethod
    def potential_dir(self, u: np.ndarray, axis: int) -> np.ndarray:
        """Entropy potential psi_i = v^T f_i - F_i"""

    def potential(self, u: np.ndarray) -> np.ndarray:
        return np.stack([self.potential_dir(u, a) for a in range(self.dim)])

    @abstractmethod
    def jacobian_dudv(self, u: np.ndarray) -> np.ndarray:
        """Symmetric positive-definite du/dv, shape (..., n, n)"""

    @abstractmethod
    def ec_flux_dir(self, u_l: np.ndarray, u_r: np.ndarray, axis: int) -> np.ndarray:
        """Entropy-conservative two-point flux in direction ``axis``"""

    def ec_flux(self, u_l: np.ndarray, u_r: np.ndarray) -> np.ndarray:
        return np.stack([self.ec_flux_dir(u_l, u_r, a) for a in range(self.dim)])

    @abstractmethod
    def mirror_state(self, u: np.ndarray, normal) -> np.ndarray:
        """Ghost state for a slip wall with outward ``normal``"""

    @abstractmethod
    def wavespeed(self, u: np.ndarray, normal) -> np.ndarray:
        """Largest characteristic speed |u.n| + c along ``normal``"""

    def max_wavespeed(self, u: np.ndarray) -> float:
        """Max over points and coordinate directions of the wavespeed"""
        lam = 0.0
        for a in range(self.dim):
            n = np.zeros(self.dim)
            n[a] = 1.0
            lam = max(lam, float(np.max(self.wavespeed(u, n))))
        return lam

    # -- boundary treatment ----------------------------------------------------

    def lax_friedrichs_penalty(
        self, u_l: np.ndarray, u_r: np.ndarray, normal
    ) -> np.ndarray:
        """Local Lax-Friedrichs penalty -(lambda/2)(u_r - u_l).

        ``u_l`` is the interior state and ``u_r`` the exterior state. The
        directional boundary flux adds ``n_i`` times this vector, so the
        contribution to the entropy balance is -(lambda/2) v^T (u_r - u_l)
        weighted by n_i^2.
        """
        lam = np.maximum(self.wavespeed(u_l, normal), self.wavespeed(u_r, normal))
        return -0.5 * lam[..., None] * (u_r - u_l)

    def boundary_flux_dir(
        self, u: np.ndarray, normal: np.ndarray, axis: int, penalty: bool = True
    ) -> np.ndarray:
        """Wall flux f_i* = f_S,i(u+, u) - n_i (lambda/2)(u+ - u)

        Args:
            u: Interior boundary states (..., n)
            normal: Outward normals, (dim,) or (..., dim)
            axis: Direction i
            penalty: Include the Lax-Friedrichs term
        """
        u_plus = self.mirror_state(u, normal)
        f = self.ec_flux_dir(u_plus, u, axis)
        if penalty:
            n_i = np.asarray(normal, dtype=np.float64)[..., axis]
            f = f + np.asarray(n_i)[..., None] * self.lax_friedrichs_penalty(
                u, u_plus, normal
            )
        return f


def unit_normal(dim: int, axis: int, sign: float = 1.0) -> np.ndarray:
    n = np.zeros(dim)
    n[axis] = sign
    return n
