"""
Full-order discrete operators.

Builds the periodic and summation-by-parts difference matrices, the
Laplacian artificial viscosity K = D^T D with its two-point difference D,
and Kronecker-product extensions to the unit-square grid.

Grid points of a 2D grid are numbered p = ix * k + iy, so ``kron(A, I)``
acts along x and ``kron(I, A)`` along y.
"""

import logging
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np
import scipy.sparse as sp

from .errors import ConfigError

logger = logging.getLogger(__name__)


def _check_cells(k: int, minimum: int = 3):
    if k < minimum:
        raise ConfigError(f"need at least {minimum} cells, got {k}")


def periodic_diff_matrix(k: int) -> np.ndarray:
    """Skew-symmetric circulant central difference: +1/2 superdiagonal, -1/2 subdiagonal"""
    _check_cells(k)
    q = np.zeros((k, k))
    i = np.arange(k)
    q[i, (i + 1) % k] = 0.5
    q[i, (i - 1) % k] = -0.5
    return q


def sbp_diff_matrix(k: int):
    """SBP difference matrix and boundary matrix

    Returns:
        (Q, B_SBP) with Q + Q^T = B_SBP = diag(-1, 0, ..., 0, 1) and Q 1 = 0
    """
    _check_cells(k)
    q = np.zeros((k, k))
    i = np.arange(k - 1)
    q[i, i + 1] = 0.5
    q[i + 1, i] = -0.5
    q[0, 0] = -0.5
    q[-1, -1] = 0.5
    b = np.zeros((k, k))
    b[0, 0] = -1.0
    b[-1, -1] = 1.0
    return q, b


def diffusion_matrices(k: int, dx: float, periodic: bool = False):
    """Two-point difference D and Laplacian K = D^T D

    D has one row per cell interface, (e_{i+1} - e_i)^T / dx. Non-periodic
    grids have k - 1 interfaces, which gives K Neumann-like ends; periodic
    grids add the wraparound interface.

    Returns:
        (K, D)
    """
    _check_cells(k, minimum=2)
    if dx <= 0.0:
        raise ConfigError(f"dx must be positive, got {dx}")
    rows = k if periodic else k - 1
    d = np.zeros((rows, k))
    r = np.arange(rows)
    d[r, r] = -1.0 / dx
    d[r, (r + 1) % k] = 1.0 / dx
    return d.T @ d, d


def kron_extend_2d(q1d: np.ndarray, dx: float, axis: int) -> np.ndarray:
    """Lift a 1D operator to the 2D tensor grid

    Args:
        q1d: Square 1D matrix
        dx: Grid spacing of the transverse direction
        axis: 1 for x (Q kron dx I), 2 for y (dx I kron Q)
    """
    q1d = np.asarray(q1d, dtype=np.float64)
    eye = dx * np.eye(q1d.shape[0])
    if axis == 1:
        return np.kron(q1d, eye)
    if axis == 2:
        return np.kron(eye, q1d)
    raise ValueError(f"axis must be 1 or 2, got {axis}")


@dataclass(frozen=True)
class BoundaryNodes:
    """Boundary quadrature of the full grid

    One entry per (point, face) pair. In 2D a corner point appears once per
    face it touches, with that face's normal.

    Attributes:
        index: Grid point index per entry
        normal: Outward unit normal per entry, shape (n_entries, dim)
        weight: Face quadrature weight per entry (1 in 1D, dx in 2D)
    """
    index: np.ndarray
    normal: np.ndarray
    weight: np.ndarray

    def __len__(self):
        return self.index.shape[0]

    def b_diag(self, axis: int) -> np.ndarray:
        """Entries n_i * w, the diagonal of the boundary matrix B^i on these entries"""
        return self.normal[:, axis] * self.weight


@dataclass
class FomOperators:
    """Full-order operators on a uniform (tensor) grid

    Sparse matrices are the working form; ``*_dense`` accessors rebuild the
    dense matrices for small grids and tests.
    """
    dim: int
    k: int
    dx: float
    periodic: bool
    q1d: np.ndarray
    b1d: Optional[np.ndarray]
    k1d: np.ndarray
    d1d: np.ndarray
    q: List[sp.csr_matrix] = field(default_factory=list)
    k_matrix: Optional[sp.csr_matrix] = None
    d_matrix: Optional[sp.csr_matrix] = None
    d_pairs: Optional[np.ndarray] = None
    boundary: Optional[BoundaryNodes] = None

    @property
    def n_points(self) -> int:
        return self.k ** self.dim

    @property
    def cell_measure(self) -> float:
        """h = dx^dim, the diagonal mass of every grid point"""
        return self.dx ** self.dim

    @property
    def face_measure(self) -> float:
        return self.dx ** (self.dim - 1)

    def q_dense(self, axis: int) -> np.ndarray:
        return self.q[axis].toarray()

    def k_dense(self) -> np.ndarray:
        return self.k_matrix.toarray()

    def d_dense(self) -> np.ndarray:
        return self.d_matrix.toarray()

    def b_sbp_dense(self, axis: int) -> np.ndarray:
        """Boundary matrix B^i = Q^i + Q^i^T on the grid (zero when periodic)"""
        b = np.zeros(self.n_points)
        if self.boundary is not None:
            np.add.at(b, self.boundary.index, self.boundary.b_diag(axis))
        return np.diag(b)

    def apply_q(self, x: np.ndarray, axis: int) -> np.ndarray:
        return self.q[axis] @ x

    def apply_qt(self, x: np.ndarray, axis: int) -> np.ndarray:
        return self.q[axis].T @ x

    def apply_k(self, x: np.ndarray) -> np.ndarray:
        return self.k_matrix @ x

    def grid_points(self, domain) -> np.ndarray:
        """Cell-centre coordinates, shape (n_points, dim)"""
        a, b = domain
        x = a + (np.arange(self.k) + 0.5) * self.dx
        if self.dim == 1:
            return x[:, None]
        gx, gy = np.meshgrid(x, x, indexing="ij")
        return np.stack([gx.ravel(), gy.ravel()], axis=-1)


def _boundary_nodes(k: int, dim: int, dx: float) -> BoundaryNodes:
    if dim == 1:
        return BoundaryNodes(
            index=np.array([0, k - 1]),
            normal=np.array([[-1.0], [1.0]]),
            weight=np.ones(2),
        )
    line = np.arange(k)
    faces = [
        (0 * k + line, (-1.0, 0.0)),          # x = a
        ((k - 1) * k + line, (1.0, 0.0)),     # x = b
        (line * k + 0, (0.0, -1.0)),          # y = a
        (line * k + (k - 1), (0.0, 1.0)),     # y = b
    ]
    index = np.concatenate([f[0] for f in faces])
    normal = np.concatenate([np.tile(f[1], (k, 1)) for f in faces])
    return BoundaryNodes(index=index, normal=normal, weight=np.full(index.shape[0], dx))


def _d_pairs(k: int, dim: int, periodic: bool) -> np.ndarray:
    """Grid index pairs (i, j) of every D row, row = (e_j - e_i)/dx"""
    rows = k if periodic else k - 1
    r = np.arange(rows)
    pairs_1d = np.stack([r, (r + 1) % k], axis=-1)
    if dim == 1:
        return pairs_1d
    line = np.arange(k)
    # kron(D, I): row (r, iy) couples (r, iy) and (r+1, iy)
    px = (pairs_1d[:, None, :] * k + line[None, :, None]).reshape(-1, 2)
    # kron(I, D): row (ix, r) couples (ix, r) and (ix, r+1)
    py = (line[:, None, None] * k + pairs_1d[None, :, :]).reshape(-1, 2)
    return np.concatenate([px, py])


def build_fom_operators(k: int, dx: float, dim: int = 1, periodic: bool = True) -> FomOperators:
    """Assemble the operator bundle for a k (x k) grid

    Args:
        k: Cells per direction
        dx: Grid spacing
        dim: 1 or 2
        periodic: Periodic (circulant) or SBP (wall) operators
    """
    if dim not in (1, 2):
        raise ConfigError(f"dim must be 1 or 2, got {dim}")
    if periodic:
        q1d, b1d = periodic_diff_matrix(k), None
    else:
        q1d, b1d = sbp_diff_matrix(k)
    k1d, d1d = diffusion_matrices(k, dx, periodic=periodic)

    q1s, k1s, d1s = sp.csr_matrix(q1d), sp.csr_matrix(k1d), sp.csr_matrix(d1d)
    if dim == 1:
        q = [q1s]
        k_matrix, d_matrix = k1s, d1s
    else:
        eye = sp.identity(k, format="csr")
        q = [sp.kron(q1s, dx * eye, format="csr"), sp.kron(dx * eye, q1s, format="csr")]
        k_matrix = (sp.kron(k1s, eye) + sp.kron(eye, k1s)).tocsr()
        d_matrix = sp.vstack([sp.kron(d1s, eye), sp.kron(eye, d1s)], format="csr")

    ops = FomOperators(
        dim=dim,
        k=k,
        dx=dx,
        periodic=periodic,
        q1d=q1d,
        b1d=b1d,
        k1d=k1d,
        d1d=d1d,
        q=q,
        k_matrix=k_matrix,
        d_matrix=d_matrix,
        d_pairs=_d_pairs(k, dim, periodic),
        boundary=None if periodic else _boundary_nodes(k, dim, dx),
    )
    logger.debug(
        "built %s operators: dim=%d k=%d dx=%.4g", "periodic" if periodic else "SBP", dim, k, dx
    )
    return ops
