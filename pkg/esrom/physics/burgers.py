"""
Inviscid Burgers' equation, u_t + (u^2/2)_x = 0.
"""

import numpy as np

from .base import ConservationLaw


class Burgers(ConservationLaw):
    """Scalar 1D Burgers with square entropy S = u^2/2 (so v = u)"""

    name = "burgers"
    n_components = 1
    dim = 1

    @property
    def component_names(self):
        return ["u"]

    def flux_dir(self, u, axis=0):
        u = np.asarray(u, dtype=np.float64)
        return 0.5 * u * u

    def entropy(self, u):
        u = np.asarray(u, dtype=np.float64)
        return 0.5 * u[..., 0] ** 2

    def entropy_variables(self, u):
        return np.array(u, dtype=np.float64, copy=True)

    def conservative_from_entropy(self, v):
        return np.array(v, dtype=np.float64, copy=True)

    def potential_dir(self, u, axis=0):
        u = np.asarray(u, dtype=np.float64)
        return u[..., 0] ** 3 / 6.0

    def jacobian_dudv(self, u):
        u = np.asarray(u, dtype=np.float64)
        return np.ones(u.shape[:-1] + (1, 1))

    def ec_flux_dir(self, u_l, u_r, axis=0):
        u_l = np.asarray(u_l, dtype=np.float64)
        u_r = np.asarray(u_r, dtype=np.float64)
        return (u_l * u_l + u_l * u_r + u_r * u_r) / 6.0

    def mirror_state(self, u, normal):
        return -np.asarray(u, dtype=np.float64)

    def wavespeed(self, u, normal):
        u = np.asarray(u, dtype=np.float64)
        n = np.asarray(normal, dtype=np.float64)[..., 0]
        return np.abs(u[..., 0] * n)
