"""SIMP compliance minimization with optimality-criteria updates.

The loop is: solve, form sensitivities, smooth them through the adjoint of
the normalized linear filter, then apply a damped OC update whose Lagrange
multiplier is found by bisection so the mean density over the active
(editable) elements hits the volume target each iteration. The single
density field is both design variable and physical density, which keeps
frozen regions bit-identical across iterations: with a mask, only masked
elements ever change and the volume target applies to the masked region.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.sparse import coo_matrix, csr_matrix, identity

from .errors import BisectionFailureError, DimensionMismatchError
from .fem import DensityField, MaterialParams, assemble_and_solve, compliance_sensitivity
from .model import DesignProblem

LAMBDA_LO = 1e-9
LAMBDA_HI = 1e9
MAX_BISECTIONS = 200


@dataclass(frozen=True)
class SolverConfig:
    """Optimizer knobs; defaults are the canonical OC settings.

    ``rho_min`` keeps updated densities slightly positive: the multiplicative
    OC step cannot regrow an exactly-zero density, so without a floor a void
    region (e.g. a masked area of a binarized prior) could never gain
    material again.
    """

    rmin: float = 2.0
    move_limit: float = 0.2
    max_iters: int = 200
    change_tol: float = 0.01
    bisection_tol: float = 1e-4
    eta: float = 0.5
    rho_min: float = 1e-3

    def __post_init__(self) -> None:
        if self.rmin < 0.0:
            raise ValueError(f"need rmin >= 0, got {self.rmin}")
        if not (0.0 < self.move_limit <= 1.0):
            raise ValueError(f"need 0 < move_limit <= 1, got {self.move_limit}")
        if not (0.0 < self.eta <= 1.0):
            raise ValueError(f"need eta in (0, 1], got {self.eta}")
        if self.max_iters < 1:
            raise ValueError(f"need max_iters >= 1, got {self.max_iters}")
        if not (0.0 <= self.rho_min < 1.0):
            raise ValueError(f"need 0 <= rho_min < 1, got {self.rho_min}")


@dataclass
class OptimizationResult:
    field: DensityField
    history: list[float] = field(default_factory=list)  # compliance per iteration
    achieved_vf: float = 0.0  # mean density over active elements
    iterations: int = 0
    converged: bool = False


class FilterOperator:
    """Row-normalized linear smoothing over domain elements.

    ``apply`` smooths a density-like field; ``adjoint`` back-propagates
    sensitivities through the same weights. Non-domain elements pass through
    unchanged, so filtering a uniform field returns it exactly.
    """

    def __init__(self, matrix: csr_matrix, shape: tuple[int, int]):
        self._h = matrix
        self._ht = matrix.T.tocsr()
        self._shape = shape

    def apply(self, values: np.ndarray) -> np.ndarray:
        return (self._h @ values.ravel()).reshape(self._shape)

    def adjoint(self, values: np.ndarray) -> np.ndarray:
        return (self._ht @ values.ravel()).reshape(self._shape)

    @property
    def matrix(self) -> csr_matrix:
        return self._h


def build_filter(problem: DesignProblem, rmin: float) -> FilterOperator:
    """Linear filter with weights max(0, rmin - center distance), rows normalized.

    Neighbors outside the domain are excluded from the averages. rmin <= 1
    leaves only the self-weight, i.e. the identity.
    """
    nelx, nely = problem.nelx, problem.nely
    n = nelx * nely
    shape = (nely, nelx)
    if rmin <= 1.0:
        return FilterOperator(identity(n, format="csr"), shape)

    dom = problem.domain.ravel()
    iy, ix = np.mgrid[0:nely, 0:nelx]
    iy, ix = iy.ravel(), ix.ravel()
    reach = int(np.ceil(rmin)) - 1

    rows, cols, vals = [], [], []
    for dy in range(-reach, reach + 1):
        for dx in range(-reach, reach + 1):
            w = rmin - float(np.hypot(dx, dy))
            if w <= 0.0:
                continue
            ok = (
                (ix + dx >= 0)
                & (ix + dx < nelx)
                & (iy + dy >= 0)
                & (iy + dy < nely)
            )
            dst = iy[ok] * nelx + ix[ok]
            src = (iy[ok] + dy) * nelx + (ix[ok] + dx)
            keep = dom[dst] & dom[src]
            rows.append(dst[keep])
            cols.append(src[keep])
            vals.append(np.full(int(keep.sum()), w))

    # identity rows for non-domain elements keep them untouched
    outside = np.nonzero(~dom)[0]
    rows.append(outside)
    cols.append(outside)
    vals.append(np.ones(outside.size))

    h = coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(n, n),
    ).tocsr()
    row_sums = np.asarray(h.sum(axis=1)).ravel()
    inv = np.where(row_sums > 0.0, 1.0 / np.maximum(row_sums, 1e-300), 0.0)
    h = csr_matrix(h.multiply(inv[:, None]))
    return FilterOperator(h, shape)


def oc_update(
    rho: DensityField,
    sens: np.ndarray,
    problem: DesignProblem,
    cfg: SolverConfig,
) -> DensityField:
    """One damped optimality-criteria step under the volume constraint.

    Bisects the Lagrange multiplier until the mean density over active
    elements is within ``bisection_tol`` of the target; per-element change is
    capped by the move limit and densities stay in [0, 1]. Elements outside
    the active set are returned bit-identical.

    When the move limit puts the target out of reach for a single step (a
    warm start far from the target volume, e.g. re-optimizing a masked
    region of a solid prior), the step saturates at maximal progress toward
    the target instead of failing; successive iterations walk the volume in
    until the constraint becomes active. Degenerate sensitivities that
    cannot move the volume toward the target at all raise
    :class:`BisectionFailureError`.
    """
    active = problem.active_elements()
    out = rho.rho.copy()
    if not active.any():
        return DensityField(out, rho.domain)

    x = rho.rho[active]
    s = np.minimum(np.asarray(sens, dtype=np.float64)[active], 0.0)
    lo_bound = np.maximum(x - cfg.move_limit, 0.0)
    hi_bound = np.minimum(x + cfg.move_limit, 1.0)
    floor = np.minimum(cfg.rho_min, hi_bound)
    target = problem.volume_fraction

    def mean_at(lam: float) -> tuple[float, np.ndarray]:
        # the multiplicative base and the output are floored at rho_min so a
        # zero density stays regrowable (0 * anything can never grow)
        with np.errstate(over="ignore"):
            cand = np.maximum(x, cfg.rho_min) * (-s / lam) ** cfg.eta
        cand = np.maximum(np.clip(cand, lo_bound, hi_bound), floor)
        return float(cand.mean()), cand

    mean_max, cand_max = mean_at(LAMBDA_LO)  # most material this step can hold
    mean_min, cand_min = mean_at(LAMBDA_HI)  # least material
    current = float(np.maximum(x, floor).mean())  # flooring alone is not progress

    if mean_max < target - cfg.bisection_tol:  # cannot add enough this step
        if mean_max <= current + cfg.bisection_tol:
            raise BisectionFailureError(
                f"densities cannot move toward volume target {target}: "
                f"best achievable mean {mean_max:.6f} from {current:.6f} (degenerate sensitivities)"
            )
        out[active] = cand_max
        return DensityField(out, rho.domain)
    if mean_min > target + cfg.bisection_tol:  # cannot remove enough this step
        if mean_min >= current - cfg.bisection_tol:
            raise BisectionFailureError(
                f"densities cannot move toward volume target {target}: "
                f"best achievable mean {mean_min:.6f} from {current:.6f} (degenerate sensitivities)"
            )
        out[active] = cand_min
        return DensityField(out, rho.domain)

    # bisect the multiplier until the bracket collapses: a sharp multiplier
    # keeps successive iterations consistent, which the volume-tolerance
    # plateau alone would not
    lo, hi = LAMBDA_LO, LAMBDA_HI
    mean_mid, cand = mean_max, cand_max
    for _ in range(MAX_BISECTIONS):
        mid = 0.5 * (lo + hi)
        mean_mid, cand = mean_at(mid)
        if mean_mid > target:
            lo = mid
        else:
            hi = mid
        if (hi - lo) / (hi + lo) < 1e-12:
            break
    if abs(mean_mid - target) > cfg.bisection_tol:
        raise BisectionFailureError(
            f"bisection stalled at mean {mean_mid:.6f} vs target {target} "
            f"(volume tol {cfg.bisection_tol})"
        )
    out[active] = cand
    return DensityField(out, rho.domain)


def default_init(problem: DesignProblem) -> DensityField:
    """Uniform target density on active elements; frozen domain stays solid."""
    rho = np.zeros((problem.nely, problem.nelx))
    active = problem.active_elements()
    rho[problem.domain] = 1.0
    rho[active] = problem.volume_fraction
    return DensityField(rho, problem.domain)


def optimize(
    problem: DesignProblem,
    cfg: Optional[SolverConfig] = None,
    mp: Optional[MaterialParams] = None,
    init: Optional[DensityField] = None,
    on_iteration: Optional[Callable[[int, DensityField, float], None]] = None,
) -> OptimizationResult:
    """Run the SIMP loop until the max density change drops below tolerance.

    ``init`` defaults to :func:`default_init`; when given it is copied, so
    the caller's field is never mutated. ``on_iteration(i, field, compliance)``
    is invoked after each update with the post-update field.
    """
    cfg = cfg or SolverConfig()
    mp = mp or MaterialParams()
    if init is not None:
        if init.shape != (problem.nely, problem.nelx):
            raise DimensionMismatchError(
                f"init shape {init.shape} != problem grid ({problem.nely}, {problem.nelx})"
            )
        current = init.copy()
    else:
        current = default_init(problem)

    active = problem.active_elements()
    if not active.any():
        sol = assemble_and_solve(current, problem, mp)
        return OptimizationResult(
            field=current, history=[sol.compliance], achieved_vf=0.0,
            iterations=0, converged=True,
        )

    filt = build_filter(problem, cfg.rmin)
    history: list[float] = []
    converged = False
    iterations = 0
    for it in range(1, cfg.max_iters + 1):
        sol = assemble_and_solve(current, problem, mp)
        history.append(sol.compliance)
        sens = compliance_sensitivity(current, sol, mp)
        sens = filt.adjoint(sens)
        updated = oc_update(current, sens, problem, cfg)
        change = float(np.max(np.abs(updated.rho[active] - current.rho[active])))
        current = updated
        iterations = it
        if on_iteration is not None:
            on_iteration(it, current, sol.compliance)
        if change < cfg.change_tol:
            converged = True
            break

    achieved = float(current.rho[active].mean())
    return OptimizationResult(
        field=current,
        history=history,
        achieved_vf=achieved,
        iterations=iterations,
        converged=converged,
    )
