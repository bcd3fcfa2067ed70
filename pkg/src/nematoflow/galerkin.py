"""Finite-dimensional velocity space: L2-orthonormal sine modes.

Modes are tensor products sin(k pi x/Lx) sin(l pi y/Ly) sin(m pi z/Lz) e_a
with wavenumbers 1..m per axis and unit vectors e_a, n = 3 m^3 in total.
Midpoint quadrature at cell centers is *exactly* orthogonal for these modes
(discrete sine transform identity) as long as wavenumbers stay below the cell
count, so the Gram check is a pure floating-point identity.

Coefficient layout: reshape(m, m, m, 3) in C order; the first mode is
(k, l, m, a) = (1, 1, 1, e_x).
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError


@dataclass
class VelocityBasis:
    grid: object
    m: int
    _cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if self.m < 1:
            raise ConfigError("need at least one mode per axis")
        if any(n < 4 * self.m for n in self.grid.shape):
            raise ConfigError(
                f"grid {self.grid.shape} under-resolves m={self.m} modes; need N >= 4m")
        lx, ly, lz = self.grid.extents
        self.norm = math.sqrt(8.0 / (lx * ly * lz))
        ks = np.arange(1, self.m + 1)
        for axis in range(3):
            x = self.grid.centers(axis)
            L = self.grid.extents[axis]
            phase = np.pi * np.outer(ks, x) / L            # (m, N_axis)
            self._cache[f"S{axis}"] = np.sin(phase)
            self._cache[f"C{axis}"] = (np.pi * ks / L)[:, None] * np.cos(phase)

    @property
    def n(self):
        return 3 * self.m ** 3

    def factors(self, axis, kind="sin"):
        return self._cache[f"{'S' if kind == 'sin' else 'C'}{axis}"]


def build_basis(grid, m):
    return VelocityBasis(grid=grid, m=m)


def _coeff_grid(basis, v):
    v = np.asarray(v, dtype=float)
    if v.shape != (basis.n,):
        raise ConfigError(f"expected {basis.n} coefficients, got {v.shape}")
    return v.reshape(basis.m, basis.m, basis.m, 3)


def synthesize(basis, v, u_b=None):
    """Grid samples of sum_i v_i w_i (+ u_b evaluated at cell centers)."""
    V = _coeff_grid(basis, v)
    Sx, Sy, Sz = (basis.factors(a) for a in range(3))
    A = np.einsum("klma,ki->ilma", V, Sx)
    A = np.einsum("ilma,lj->ijma", A, Sy)
    u = basis.norm * np.einsum("ijma,mc->ijca", A, Sz)
    if u_b is not None:
        X, Y, Z = basis.grid.coords()
        u = u + u_b(X, Y, Z)
    return u


def project(basis, f):
    """L2 inner products <f, w_i> by midpoint quadrature."""
    f = np.asarray(f, dtype=float)
    Sx, Sy, Sz = (basis.factors(a) for a in range(3))
    A = np.einsum("ijca,ki->kjca", f, Sx)
    A = np.einsum("kjca,lj->klca", A, Sy)
    V = np.einsum("klca,mc->klma", A, Sz)
    return (basis.grid.cell_volume * basis.norm) * V.reshape(basis.n)


def synthesize_jacobian(basis, v):
    """Analytic J[..., a, d] = d(mode part)_a / dx_d on grid nodes."""
    V = _coeff_grid(basis, v)
    Sx, Sy, Sz = (basis.factors(a) for a in range(3))
    Cx, Cy, Cz = (basis.factors(a, "cos") for a in range(3))
    out = np.empty(basis.grid.shape + (3, 3), dtype=float)
    for d, (Fx, Fy, Fz) in enumerate([(Cx, Sy, Sz), (Sx, Cy, Sz), (Sx, Sy, Cz)]):
        A = np.einsum("klma,ki->ilma", V, Fx)
        A = np.einsum("ilma,lj->ijma", A, Fy)
        out[..., :, d] = basis.norm * np.einsum("ijma,mc->ijca", A, Fz)
    return out


def project_tensor_divergence(basis, T):
    """g_i = int T : grad(w_i) for a tensor field T[..., a, d]."""
    T = np.asarray(T, dtype=float)
    Sx, Sy, Sz = (basis.factors(a) for a in range(3))
    Cx, Cy, Cz = (basis.factors(a, "cos") for a in range(3))
    G = np.zeros((basis.m, basis.m, basis.m, 3), dtype=float)
    for d, (Fx, Fy, Fz) in enumerate([(Cx, Sy, Sz), (Sx, Cy, Sz), (Sx, Sy, Cz)]):
        A = np.einsum("ijca,ki->kjca", T[..., :, d], Fx)
        A = np.einsum("kjca,lj->klca", A, Fy)
        G += np.einsum("klca,mc->klma", A, Fz)
    return (basis.grid.cell_volume * basis.norm) * G.reshape(basis.n)


def mass_matrix(basis, rho):
    """R[i, j] = int rho w_i^x . w_j^x per scalar block (shared by e_a).

    Returned shape (m^3, m^3); the full matrix is block-diagonal with this
    block repeated for each vector component.
    """
    rho = np.asarray(rho, dtype=float)
    Sx, Sy, Sz = (basis.factors(a) for a in range(3))
    Px = np.einsum("ki,Ki->kKi", Sx, Sx)
    Py = np.einsum("lj,Lj->lLj", Sy, Sy)
    Pz = np.einsum("mc,Mc->mMc", Sz, Sz)
    A = np.einsum("ijc,kKi->kKjc", rho, Px)
    A = np.einsum("kKjc,lLj->kKlLc", A, Py)
    R = np.einsum("kKlLc,mMc->klmKLM", A, Pz)
    scale = basis.grid.cell_volume * basis.norm ** 2
    m3 = basis.m ** 3
    return scale * R.reshape(m3, m3)


def evaluate_at(basis, v, x, y, z):
    """Mode-part velocity at arbitrary points; exactly zero on the walls."""
    V = _coeff_grid(basis, v)
    pts = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float),
                              np.asarray(z, dtype=float))
    shape = pts[0].shape
    factors = []
    ks = np.arange(1, basis.m + 1)
    for axis in range(3):
        L = basis.grid.extents[axis]
        t = pts[axis].reshape(-1) / L
        s = np.sin(np.pi * np.outer(ks, t))
        s[:, (t == 0.0) | (t == 1.0)] = 0.0
        factors.append(s)
    out = np.einsum("klma,kp,lp,mp->pa", V, *factors)
    return basis.norm * out.reshape(shape + (3,))
