"""Plane-stress FEM on the regular element grid with SIMP material interpolation.

Bilinear quadrilateral elements of unit size and thickness; every grid cell
stays in the mesh, with void and non-domain cells contributing at the small
modulus floor so arbitrary sketched shapes never require remeshing. The
reduced stiffness system is solved by a direct sparse factorization and the
result is accepted only if the relative residual meets 1e-8, so the energy
identity U.F = U.K.U holds to that tolerance for every solve.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.linalg import MatrixRankWarning, splu

from .errors import DimensionMismatchError, SingularSystemError
from .grid import containing_element, nearest_node, node_id
from .model import DesignProblem, Role

RESIDUAL_TOL = 1e-8


@dataclass(frozen=True)
class MaterialParams:
    """SIMP material model: E(rho) = emin + rho^penal * (e0 - emin)."""

    e0: float = 1.0
    emin: float = 1e-9
    nu: float = 0.3
    penal: float = 3.0

    def __post_init__(self) -> None:
        if not (0.0 < self.emin < self.e0):
            raise ValueError(f"need 0 < emin < e0, got emin={self.emin}, e0={self.e0}")
        if not (0.0 <= self.nu < 0.5):
            raise ValueError(f"need 0 <= nu < 0.5, got {self.nu}")
        if self.penal < 1.0:
            raise ValueError(f"need penal >= 1, got {self.penal}")


@dataclass
class DensityField:
    """Per-element material densities in [0, 1] over the grid.

    ``rho`` is zero outside the domain; both arrays are ``[iy, ix]`` with
    iy = 0 at the bottom.
    """

    rho: np.ndarray
    domain: np.ndarray

    def __post_init__(self) -> None:
        self.rho = np.ascontiguousarray(self.rho, dtype=np.float64)
        self.domain = np.ascontiguousarray(self.domain, dtype=bool)
        if self.rho.shape != self.domain.shape:
            raise DimensionMismatchError(
                f"rho shape {self.rho.shape} != domain shape {self.domain.shape}"
            )
        if self.rho.min(initial=0.0) < 0.0 or self.rho.max(initial=0.0) > 1.0:
            raise ValueError("densities must lie in [0, 1]")
        if np.any(self.rho[~self.domain] != 0.0):
            raise ValueError("densities must be zero outside the domain")

    @property
    def shape(self) -> tuple[int, int]:
        return self.rho.shape

    def copy(self) -> "DensityField":
        return DensityField(self.rho.copy(), self.domain)

    @classmethod
    def uniform(cls, domain: np.ndarray, value: float) -> "DensityField":
        rho = np.where(domain, float(value), 0.0)
        return cls(rho, domain)


@dataclass
class FemSolution:
    """Displacements and energies from one linear solve."""

    u: np.ndarray  # (ndof,) nodal displacements
    compliance: float  # U.K.U total strain energy
    element_energy: np.ndarray  # (nely, nelx) unpenalized u_e.k0.u_e
    iterations: int
    residual: float


def element_stiffness(nu: float) -> np.ndarray:
    """8x8 stiffness of a unit-square plane-stress bilinear quad, unit modulus.

    DOF order (u, v) per node, nodes counterclockwise from the lower-left
    corner. The closed form below equals exact 2x2 Gauss integration.
    """
    if not (0.0 <= nu < 0.5):
        raise ValueError(f"need 0 <= nu < 0.5, got {nu}")
    return _element_stiffness_cached(float(nu)).copy()


@lru_cache(maxsize=8)
def _element_stiffness_cached(nu: float) -> np.ndarray:
    k = np.array(
        [
            1 / 2 - nu / 6,
            1 / 8 + nu / 8,
            -1 / 4 - nu / 12,
            -1 / 8 + 3 * nu / 8,
            -1 / 4 + nu / 12,
            -1 / 8 - nu / 8,
            nu / 6,
            1 / 8 - 3 * nu / 8,
        ]
    )
    idx = np.array(
        [
            [0, 1, 2, 3, 4, 5, 6, 7],
            [1, 0, 7, 6, 5, 4, 3, 2],
            [2, 7, 0, 5, 6, 3, 4, 1],
            [3, 6, 5, 0, 7, 2, 1, 4],
            [4, 5, 6, 7, 0, 1, 2, 3],
            [5, 4, 3, 2, 1, 0, 7, 6],
            [6, 3, 4, 1, 2, 7, 0, 5],
            [7, 2, 1, 4, 3, 6, 5, 0],
        ]
    )
    ke = k[idx] / (1 - nu**2)
    ke.setflags(write=False)
    return ke


def simp_modulus(rho, mp: MaterialParams):
    """Effective Young's modulus for density rho (scalar or array)."""
    return mp.emin + np.asarray(rho, dtype=np.float64) ** mp.penal * (mp.e0 - mp.emin)


@lru_cache(maxsize=16)
def _grid_dofs(nelx: int, nely: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Element DOF table and the coo row/col index vectors for assembly."""
    ex, ey = np.meshgrid(np.arange(nelx), np.arange(nely))  # [iy, ix] layout
    ll = ey.ravel() * (nelx + 1) + ex.ravel()
    lr = ll + 1
    ul = ll + (nelx + 1)
    ur = ul + 1
    nodes = np.column_stack([ll, lr, ur, ul])  # counterclockwise from lower-left
    edof = np.empty((nelx * nely, 8), dtype=np.int64)
    edof[:, 0::2] = 2 * nodes
    edof[:, 1::2] = 2 * nodes + 1
    ik = np.repeat(edof, 8, axis=1).ravel()
    jk = np.tile(edof, (1, 8)).ravel()
    for a in (edof, ik, jk):
        a.setflags(write=False)
    return edof, ik, jk


def _fixed_dofs(problem: DesignProblem) -> np.ndarray:
    fixed: set[int] = set()
    for fx in problem.fixings:
        ix, iy = nearest_node(fx.x, fx.y, problem.nelx, problem.nely)
        n = node_id(ix, iy, problem.nelx)
        if fx.kind in (Role.FIX_X, Role.FIX_XY):
            fixed.add(2 * n)
        if fx.kind in (Role.FIX_Y, Role.FIX_XY):
            fixed.add(2 * n + 1)
    return np.array(sorted(fixed), dtype=np.int64)


def _load_vector(problem: DesignProblem) -> np.ndarray:
    """Distribute each point load to its element's corner nodes by bilinear weights."""
    nelx, nely = problem.nelx, problem.nely
    f = np.zeros(2 * (nelx + 1) * (nely + 1))
    for ld in problem.loads:
        fx, fy = ld.force_xy()
        ex, ey = containing_element(ld.x, ld.y, nelx, nely)
        xi = min(max(ld.x, 0.0), 1.0) * nelx - ex
        eta = min(max(ld.y, 0.0), 1.0) * nely - ey
        corners = (
            (ex, ey, (1 - xi) * (1 - eta)),
            (ex + 1, ey, xi * (1 - eta)),
            (ex + 1, ey + 1, xi * eta),
            (ex, ey + 1, (1 - xi) * eta),
        )
        for ix, iy, w in corners:
            n = node_id(ix, iy, nelx)
            f[2 * n] += w * fx
            f[2 * n + 1] += w * fy
    return f


def assemble_and_solve(
    field: DensityField,
    problem: DesignProblem,
    mp: Optional[MaterialParams] = None,
) -> FemSolution:
    """Solve K(rho) U = F on the grid and return displacements and energies.

    Raises :class:`SingularSystemError` when the factorization fails or the
    relative residual exceeds 1e-8 (under-constrained problem), and
    :class:`DimensionMismatchError` when field and problem grids disagree.
    """
    mp = mp or MaterialParams()
    nelx, nely = problem.nelx, problem.nely
    if field.shape != (nely, nelx):
        raise DimensionMismatchError(
            f"field shape {field.shape} != problem grid ({nely}, {nelx})"
        )
    if not problem.fixings:
        raise SingularSystemError("problem has no fixings; the system has rigid-body modes")

    ke = _element_stiffness_cached(float(mp.nu))
    edof, ik, jk = _grid_dofs(nelx, nely)
    ndof = 2 * (nelx + 1) * (nely + 1)

    e_eff = simp_modulus(field.rho.ravel(), mp)
    sk = (ke.ravel()[None, :] * e_eff[:, None]).ravel()
    kmat = coo_matrix((sk, (ik, jk)), shape=(ndof, ndof)).tocsc()

    f = _load_vector(problem)
    fixed = _fixed_dofs(problem)
    free = np.setdiff1d(np.arange(ndof, dtype=np.int64), fixed, assume_unique=True)

    u = np.zeros(ndof)
    f_free = f[free]
    fnorm = float(np.linalg.norm(f_free))
    if fnorm > 0.0:
        k_free = kmat[free][:, free]
        with warnings.catch_warnings():
            warnings.simplefilter("error", MatrixRankWarning)
            try:
                # the stiffness matrix is structurally symmetric; MMD on A+A^T
                # orders it far better than the default COLAMD
                lu = splu(k_free, permc_spec="MMD_AT_PLUS_A")
                u_free = lu.solve(f_free)
            except (MatrixRankWarning, RuntimeError) as exc:
                raise SingularSystemError(f"sparse factorization failed: {exc}") from exc
        if not np.all(np.isfinite(u_free)):
            raise SingularSystemError("solver returned non-finite displacements")
        residual = float(np.linalg.norm(k_free @ u_free - f_free)) / fnorm
        # one step of iterative refinement recovers high-contrast systems
        if residual > RESIDUAL_TOL:
            u_free = u_free + lu.solve(f_free - k_free @ u_free)
            residual = float(np.linalg.norm(k_free @ u_free - f_free)) / fnorm
        if not np.isfinite(residual) or residual > RESIDUAL_TOL:
            raise SingularSystemError(
                f"solver residual {residual:.3e} exceeds {RESIDUAL_TOL:.0e}; "
                "the problem is likely under-constrained"
            )
        u[free] = u_free
    else:
        residual = 0.0

    ue = u[edof]
    ce = np.einsum("ij,jk,ik->i", ue, ke, ue)
    np.maximum(ce, 0.0, out=ce)  # k0 is PSD; clamp rounding noise
    compliance = float(e_eff @ ce)
    return FemSolution(
        u=u,
        compliance=compliance,
        element_energy=ce.reshape(nely, nelx),
        iterations=1,
        residual=residual,
    )


def compliance_sensitivity(
    field: DensityField,
    sol: FemSolution,
    mp: Optional[MaterialParams] = None,
) -> np.ndarray:
    """d(compliance)/d(rho_e) = -penal * rho^(penal-1) * (e0 - emin) * e_e; always <= 0."""
    mp = mp or MaterialParams()
    return -mp.penal * field.rho ** (mp.penal - 1.0) * (mp.e0 - mp.emin) * sol.element_energy
