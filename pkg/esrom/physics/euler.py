"""
Compressible Euler equations in one or two space dimensions.

Conservative variables are [rho, rho*u_1, ..., rho*u_d, E] with the ideal gas
law p = (gamma - 1)(E - rho |u|^2 / 2). The entropy is S = -rho s / (gamma - 1)
with s = log(p / rho^gamma) and potential psi_i = rho u_i.
"""

import numpy as np

from ..errors import PositivityError
from .base import ConservationLaw, log_mean


def _first_offender(bad: np.ndarray) -> int:
    """Flat index over the leading axes of the first True entry"""
    return int(np.flatnonzero(bad.ravel())[0])


class Euler(ConservationLaw):
    """Ideal-gas Euler with Chandrashekar's kinetic-energy-preserving EC flux"""

    name = "euler"

    def __init__(self, dim: int = 1, gamma: float = 1.4):
        if dim not in (1, 2):
            raise ValueError(f"Euler supports dim 1 or 2, got {dim}")
        self.dim = dim
        self.gamma = float(gamma)
        self.n_components = dim + 2

    @property
    def component_names(self):
        return ["rho"] + [f"rho_u{i + 1}" for i in range(self.dim)] + ["E"]

    def __repr__(self):
        return f"Euler(dim={self.dim}, gamma={self.gamma})"

    # -- primitive helpers -----------------------------------------------------

    def primitive(self, u):
        """Return (rho, velocity (..., dim), p) without admissibility checks"""
        u = np.asarray(u, dtype=np.float64)
        rho = u[..., 0]
        vel = u[..., 1:1 + self.dim] / rho[..., None]
        kinetic = 0.5 * rho * np.sum(vel * vel, axis=-1)
        p = (self.gamma - 1.0) * (u[..., -1] - kinetic)
        return rho, vel, p

    def conservative(self, rho, vel, p):
        """Assemble conservative states from primitives"""
        rho = np.asarray(rho, dtype=np.float64)
        vel = np.asarray(vel, dtype=np.float64)
        p = np.asarray(p, dtype=np.float64)
        mom = rho[..., None] * vel
        E = p / (self.gamma - 1.0) + 0.5 * rho * np.sum(vel * vel, axis=-1)
        return np.concatenate([rho[..., None], mom, E[..., None]], axis=-1)

    def check_admissible(self, u):
        u = np.asarray(u, dtype=np.float64)
        rho, _, p = self.primitive(u)
        for name, q in (("density", rho), ("pressure", p)):
            bad = ~(q > 0.0)
            if np.any(bad):
                i = _first_offender(bad)
                raise PositivityError(i, name, q.ravel()[i])

    def check_entropy_admissible(self, v):
        v = np.asarray(v, dtype=np.float64)
        last = v[..., -1]
        bad = ~(last < 0.0)
        if np.any(bad):
            i = _first_offender(bad)
            raise PositivityError(i, "-v_last (entropy variable)", -last.ravel()[i])

    def _checked_primitive(self, u):
        self.check_admissible(u)
        return self.primitive(u)

    # -- analytic quantities ---------------------------------------------------

    def flux_dir(self, u, axis):
        u = np.asarray(u, dtype=np.float64)
        rho, vel, p = self._checked_primitive(u)
        un = vel[..., axis]
        f = u * un[..., None]
        f[..., 1 + axis] += p
        f[..., -1] += p * un
        return f

    def _specific_entropy(self, rho, p):
        return np.log(p) - self.gamma * np.log(rho)

    def entropy(self, u):
        rho, _, p = self._checked_primitive(u)
        return -rho * self._specific_entropy(rho, p) / (self.gamma - 1.0)

    def entropy_variables(self, u):
        rho, vel, p = self._checked_primitive(u)
        g = self.gamma
        s = self._specific_entropy(rho, p)
        rho_p = rho / p
        v = np.empty(np.shape(u), dtype=np.float64)
        v[..., 0] = (g - s) / (g - 1.0) - 0.5 * rho_p * np.sum(vel * vel, axis=-1)
        v[..., 1:1 + self.dim] = rho_p[..., None] * vel
        v[..., -1] = -rho_p
        return v

    def conservative_from_entropy(self, v):
        v = np.asarray(v, dtype=np.float64)
        self.check_entropy_admissible(v)
        g = self.gamma
        vp = (g - 1.0) * v
        vm = vp[..., 1:1 + self.dim]
        vl = vp[..., -1]
        vm2 = np.sum(vm * vm, axis=-1)
        s = g - vp[..., 0] + vm2 / (2.0 * vl)
        rho_e = ((g - 1.0) / (-vl) ** g) ** (1.0 / (g - 1.0)) * np.exp(-s / (g - 1.0))
        u = np.empty(v.shape, dtype=np.float64)
        u[..., 0] = -rho_e * vl
        u[..., 1:1 + self.dim] = rho_e[..., None] * vm
        u[..., -1] = rho_e * (1.0 - vm2 / (2.0 * vl))
        return u

    def potential_dir(self, u, axis):
        u = np.asarray(u, dtype=np.float64)
        self.check_admissible(u)
        return u[..., 1 + axis].copy()

    def jacobian_dudv(self, u):
        u = np.asarray(u, dtype=np.float64)
        rho, vel, p = self._checked_primitive(u)
        g = self.gamma
        E = u[..., -1]
        mom = u[..., 1:1 + self.dim]
        H = (E + p) / rho
        a2 = g * p / rho
        d = self.dim
        n = d + 2
        A = np.empty(u.shape[:-1] + (n, n), dtype=np.float64)
        A[..., 0, 0] = rho
        A[..., 0, 1:1 + d] = mom
        A[..., 1:1 + d, 0] = mom
        A[..., 0, -1] = E
        A[..., -1, 0] = E
        A[..., 1:1 + d, 1:1 + d] = mom[..., :, None] * vel[..., None, :]
        for i in range(d):
            A[..., 1 + i, 1 + i] += p
        A[..., 1:1 + d, -1] = mom * H[..., None]
        A[..., -1, 1:1 + d] = mom * H[..., None]
        A[..., -1, -1] = rho * H * H - a2 * p / (g - 1.0)
        return A

    def ec_flux_dir(self, u_l, u_r, axis):
        rho_l, vel_l, p_l = self._checked_primitive(u_l)
        rho_r, vel_r, p_r = self._checked_primitive(u_r)
        g = self.gamma

        beta_l = 0.5 * rho_l / p_l
        beta_r = 0.5 * rho_r / p_r
        rho_log = log_mean(rho_l, rho_r)
        beta_log = log_mean(beta_l, beta_r)
        rho_avg = 0.5 * (rho_l + rho_r)
        beta_avg = 0.5 * (beta_l + beta_r)
        vel_avg = 0.5 * (vel_l + vel_r)
        vel2_avg = 0.5 * (vel_l * vel_l + vel_r * vel_r)

        p_avg = rho_avg / (2.0 * beta_avg)
        u2_avg = 2.0 * np.sum(vel_avg * vel_avg, axis=-1) - np.sum(vel2_avg, axis=-1)
        E_avg = rho_log / (2.0 * beta_log * (g - 1.0)) + 0.5 * rho_log * u2_avg

        un = vel_avg[..., axis]
        mass = rho_log * un
        f = np.empty(np.broadcast_shapes(np.shape(u_l), np.shape(u_r)), dtype=np.float64)
        f[..., 0] = mass
        f[..., 1:1 + self.dim] = mass[..., None] * vel_avg
        f[..., 1 + axis] += p_avg
        f[..., -1] = (E_avg + p_avg) * un
        return f

    def mirror_state(self, u, normal):
        u = np.asarray(u, dtype=np.float64)
        n = np.asarray(normal, dtype=np.float64)
        mom = u[..., 1:1 + self.dim]
        mn = np.sum(mom * n, axis=-1)
        out = u.copy()
        out[..., 1:1 + self.dim] = mom - 2.0 * mn[..., None] * n
        return out

    def wavespeed(self, u, normal):
        rho, vel, p = self._checked_primitive(u)
        n = np.asarray(normal, dtype=np.float64)
        return np.abs(np.sum(vel * n, axis=-1)) + np.sqrt(self.gamma * p / rho)
