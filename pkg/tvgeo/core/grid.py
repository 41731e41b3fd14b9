"""
Periodic uniform grid on the unit torus [0,1)^2.

Index convention: axis 0 (row i) is the x-axis, axis 1 (column j) is the
y-axis, and pixel (i, j) sits at the point (i/n, j/n). All indices wrap
modulo n.

The discrete gradient is the 4-fold stencil

    grad(u)[i,j] = n * ( u[i+1,j]   - u[i,j],
                         u[i,j+1]   - u[i,j],
                         u[i+1,j+1] - u[i+1,j],
                         u[i+1,j+1] - u[i,j+1] )

and the divergence is its exact negative adjoint for the unweighted
Euclidean inner products. Each partial derivative is sampled twice, so
sum ||grad u|| approximates sqrt(2) * TV(u); STENCIL_SCALE = 1/sqrt(2)
undoes that wherever a physical total variation or certificate is formed.

Inner products here are plain sums. The cell area h^2 = 1/n^2 is only
applied by the helpers that report physical quantities (l2_norm,
total_variation, inner).
"""

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

STENCIL_SCALE = 1.0 / np.sqrt(2.0)


@dataclass
class GridImage:
    values: np.ndarray   # shape: (n, n), dtype float64

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 2 or self.values.shape[0] != self.values.shape[1]:
            raise ValueError(f"GridImage needs a square 2-D array, got shape {self.values.shape}")

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def spacing(self) -> float:
        return 1.0 / self.n

    @property
    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.values)))

    def copy(self) -> 'GridImage':
        return GridImage(self.values.copy())

    @classmethod
    def zeros(cls, n: int) -> 'GridImage':
        return cls(np.zeros((n, n)))


@dataclass
class DualField:
    vectors: np.ndarray   # shape: (n, n, 4), dtype float64

    def __post_init__(self):
        self.vectors = np.asarray(self.vectors, dtype=np.float64)
        v = self.vectors
        if v.ndim != 3 or v.shape[2] != 4 or v.shape[0] != v.shape[1]:
            raise ValueError(f"DualField needs shape (n, n, 4), got {v.shape}")

    @property
    def n(self) -> int:
        return self.vectors.shape[0]

    def norms(self) -> np.ndarray:
        """Per-pixel Euclidean norm of the 4-vectors."""
        return np.sqrt(np.sum(self.vectors ** 2, axis=-1))

    def feasible(self, tol: float = 1e-12) -> bool:
        return bool(np.all(self.norms() <= 1.0 + tol))

    def copy(self) -> 'DualField':
        return DualField(self.vectors.copy())

    @classmethod
    def zeros(cls, n: int) -> 'DualField':
        return cls(np.zeros((n, n, 4)))


def grid_coords(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Pixel positions (x, y) = (i/n, j/n) as two (n, n) arrays."""
    t = np.arange(n, dtype=np.float64) / n
    return np.meshgrid(t, t, indexing='ij')


# ---------------------------------------------------------------------------
# Array kernels (shared with the solver, which works on raw arrays)
# ---------------------------------------------------------------------------

def _grad(u: np.ndarray) -> np.ndarray:
    n = u.shape[0]
    up = np.roll(u, -1, axis=0)      # u[i+1, j]
    ur = np.roll(u, -1, axis=1)      # u[i, j+1]
    ud = np.roll(up, -1, axis=1)     # u[i+1, j+1]
    return n * np.stack([up - u, ur - u, ud - up, ud - ur], axis=-1)


def _div(z: np.ndarray) -> np.ndarray:
    n = z.shape[0]
    z1, z2, z3, z4 = z[..., 0], z[..., 1], z[..., 2], z[..., 3]
    z3m = np.roll(z3, 1, axis=0)     # z3[i-1, j]
    z4m = np.roll(z4, 1, axis=1)     # z4[i, j-1]
    return n * ((z1 - np.roll(z1, 1, axis=0))
                + (z2 - np.roll(z2, 1, axis=1))
                + (z3m - np.roll(z3m, 1, axis=1))
                + (z4m - np.roll(z4m, 1, axis=0)))


# ---------------------------------------------------------------------------
# Public operators
# ---------------------------------------------------------------------------

def gradient4(u: GridImage) -> DualField:
    return DualField(_grad(u.values))


def divergence4(z: DualField) -> GridImage:
    """Negative adjoint of gradient4: <grad u, z> = -<u, div z>."""
    return GridImage(_div(z.vectors))


def certificate(z: DualField) -> GridImage:
    """The certificate v = STENCIL_SCALE * div z carried by a dual field."""
    return GridImage(STENCIL_SCALE * _div(z.vectors))


def gradient_magnitude(u: GridImage) -> GridImage:
    """Per-pixel total-variation density STENCIL_SCALE * ||grad u||."""
    g = _grad(u.values)
    return GridImage(STENCIL_SCALE * np.sqrt(np.sum(g ** 2, axis=-1)))


def total_variation(u: GridImage) -> float:
    """Discrete total variation h^2 * sum STENCIL_SCALE * ||grad u||."""
    return float(gradient_magnitude(u).values.sum()) / u.n ** 2


def l2_norm(u: GridImage) -> float:
    """Physical L^2 norm h * ||u||."""
    return float(np.sqrt(np.sum(u.values ** 2))) / u.n


def inner(a: GridImage, b: GridImage) -> float:
    """Physical L^2 inner product h^2 * <a, b>."""
    return float(np.sum(a.values * b.values)) / a.n ** 2


def shift(u: GridImage | DualField, di: int, dj: int):
    """Periodic shift: shift(u, di, dj)[i, j] = u[i - di, j - dj]."""
    if isinstance(u, DualField):
        return DualField(np.roll(u.vectors, (di, dj), axis=(0, 1)))
    return GridImage(np.roll(u.values, (di, dj), axis=(0, 1)))


def operator_matrix(n: int) -> sp.csr_matrix:
    """Sparse (4n^2 x n^2) matrix of gradient4 on row-major flattened images.

    Rows are grouped by component: all of component 1 first, then 2, 3, 4.
    """
    eye = sp.identity(n, format='csr')
    cyc = sp.csr_matrix((np.ones(n), (np.arange(n), (np.arange(n) + 1) % n)), shape=(n, n))
    s_i = sp.kron(cyc, eye, format='csr')    # u[i+1, j]
    s_j = sp.kron(eye, cyc, format='csr')    # u[i, j+1]
    s_ij = s_i @ s_j
    ident = sp.identity(n * n, format='csr')
    return (n * sp.vstack([s_i - ident, s_j - ident, s_ij - s_i, s_ij - s_j])).tocsr()


def operator_norm_sq(n: int, iters: int = 200, seed: int = 0) -> float:
    """Power-iteration estimate of ||grad||^2 on the n x n grid.

    The estimate is a Rayleigh quotient, so it never exceeds the true value
    16 n^2 (attained for even n by the checkerboard mode).
    """
    if iters < 10:
        raise ValueError(f"iters must be at least 10, got {iters}")
    rng = np.random.Generator(np.random.PCG64(seed))
    x = rng.standard_normal((n, n))
    x /= np.linalg.norm(x)
    estimate = 0.0
    for _ in range(iters):
        y = -_div(_grad(x))
        estimate = float(np.sum(x * y))
        norm = np.linalg.norm(y)
        if norm == 0.0:
            return 0.0
        x = y / norm
    bound = 16.0 * n * n
    assert estimate <= bound * (1.0 + 1e-12), f"power iteration exceeded 16n^2: {estimate} > {bound}"
    return estimate
