"""Shared fixtures: the reference evaluation case and random problem makers."""
from __future__ import annotations

import numpy as np
import pytest

from topoforge import DesignProblem, DensityField, Fixing, Load, RasterSketch, Role

# Reference evaluation case: full square domain, vertical downward load near
# the top-right corner, pinned supports on the bottom and left edges.
EVAL_LOAD_POS = (0.98, 0.96)
EVAL_SUPPORTS = ((0.26, 0.0), (0.0, 0.62))
EVAL_VF = 0.2
EVAL_ANGLE = 270.0
BASELINE_COMPLIANCE = 63.40  # published FEA baseline for this case


def make_eval_problem(n: int = 64) -> DesignProblem:
    return DesignProblem(
        nelx=n,
        nely=n,
        domain=np.ones((n, n), dtype=bool),
        loads=(Load(*EVAL_LOAD_POS, magnitude=1.0, angle_deg=EVAL_ANGLE),),
        fixings=tuple(Fixing(x, y, Role.FIX_XY) for x, y in EVAL_SUPPORTS),
        volume_fraction=EVAL_VF,
    )


def make_eval_sketch(n: int = 64) -> RasterSketch:
    """Color-coded sketch of the evaluation case: black square, one red load
    pixel, one green pinned pixel per support."""
    px = np.zeros((n, n, 4), dtype=np.uint8)
    px[:, :] = (0, 0, 0, 255)
    lx, ly = EVAL_LOAD_POS
    px[n - 1 - min(int(ly * n), n - 1), min(int(lx * n), n - 1)] = (255, 0, 0, 255)
    for sx, sy in EVAL_SUPPORTS:
        ix = min(int(round(sx * n)), n - 1)
        iy = min(int(round(sy * n)), n - 1)
        px[n - 1 - iy, ix] = (0, 255, 0, 255)
    return RasterSketch(pixels=px)


@pytest.fixture(scope="session")
def eval_problem() -> DesignProblem:
    return make_eval_problem()


@pytest.fixture(scope="session")
def eval_sketch() -> RasterSketch:
    return make_eval_sketch()


def make_small_problem(n: int = 16, vf: float = 0.4) -> DesignProblem:
    """Fast full-domain problem shaped like the evaluation case."""
    return DesignProblem(
        nelx=n,
        nely=n,
        domain=np.ones((n, n), dtype=bool),
        loads=(Load(*EVAL_LOAD_POS, angle_deg=EVAL_ANGLE),),
        fixings=tuple(Fixing(x, y, Role.FIX_XY) for x, y in EVAL_SUPPORTS),
        volume_fraction=vf,
    )


def random_rect_domain(rng: np.random.Generator, nelx: int, nely: int) -> np.ndarray:
    """Union of 1-3 random rectangles, guaranteed non-empty."""
    domain = np.zeros((nely, nelx), dtype=bool)
    for _ in range(int(rng.integers(1, 4))):
        w = int(rng.integers(max(2, nelx // 3), nelx + 1))
        h = int(rng.integers(max(2, nely // 3), nely + 1))
        x0 = int(rng.integers(0, nelx - w + 1))
        y0 = int(rng.integers(0, nely - h + 1))
        domain[y0 : y0 + h, x0 : x0 + w] = True
    return domain


def random_problem(
    rng: np.random.Generator,
    nelx: int | None = None,
    nely: int | None = None,
    with_mask: bool | None = None,
    ensure_solvable: bool = False,
) -> DesignProblem:
    """Random valid problem whose markers are codec-representable.

    A flattened color sketch stores one role per pixel, so marker cells are
    kept pairwise distinct, load cells non-adjacent to each other, and the
    mask clear of marker cells; stacked roles cannot round-trip by design.
    ``ensure_solvable`` forces two pinned supports at distinct nodes so the
    stiffness system has no rigid-body modes.
    """
    nelx = nelx or int(rng.integers(8, 25))
    nely = nely or int(rng.integers(8, 25))
    if ensure_solvable:
        # one connected block keeps every marker on a supported component
        domain = np.zeros((nely, nelx), dtype=bool)
        w = int(rng.integers(max(4, nelx // 2), nelx + 1))
        h = int(rng.integers(max(4, nely // 2), nely + 1))
        x0 = int(rng.integers(0, nelx - w + 1))
        y0 = int(rng.integers(0, nely - h + 1))
        domain[y0 : y0 + h, x0 : x0 + w] = True
    else:
        domain = random_rect_domain(rng, nelx, nely)
    cells = np.argwhere(domain)  # (iy, ix) pairs

    taken: list[tuple[int, int]] = []

    def pick_cell(min_cheb_from: list[tuple[int, int]]) -> tuple[int, int]:
        for _ in range(200):
            iy, ix = cells[int(rng.integers(0, len(cells)))]
            if (iy, ix) in taken:
                continue
            if any(max(abs(iy - ty), abs(ix - tx)) < 2 for ty, tx in min_cheb_from):
                continue
            return int(iy), int(ix)
        raise RuntimeError("could not place a marker; domain too small")

    angle = float(rng.uniform(0.0, 360.0))
    loads = []
    load_cells: list[tuple[int, int]] = []
    for _ in range(int(rng.integers(1, 3))):
        iy, ix = pick_cell(load_cells)  # keep load clusters from merging
        taken.append((iy, ix))
        load_cells.append((iy, ix))
        x = (ix + float(rng.uniform(0.1, 0.9))) / nelx
        y = (iy + float(rng.uniform(0.1, 0.9))) / nely
        loads.append(Load(x, y, magnitude=1.0, angle_deg=angle))

    fixings = []
    n_fix = max(2, int(rng.integers(1, 4))) if ensure_solvable else int(rng.integers(1, 4))
    for i in range(n_fix):
        iy, ix = pick_cell([])
        taken.append((iy, ix))
        if ensure_solvable and i < 2:
            kind = Role.FIX_XY
        else:
            kind = (Role.FIX_X, Role.FIX_Y, Role.FIX_XY)[int(rng.integers(0, 3))]
        fixings.append(Fixing(ix / nelx, iy / nely, kind))

    mask = None
    if with_mask is None:
        with_mask = bool(rng.integers(0, 2))
    if with_mask:
        mask = random_rect_domain(rng, nelx, nely) & domain
        for iy, ix in taken:
            mask[iy, ix] = False
        # a flattened sketch must keep at least one plain material pixel
        plain = domain & ~mask
        for iy, ix in taken:
            plain[iy, ix] = False
        if not plain.any():
            iy, ix = pick_cell([])
            mask[iy, ix] = False
        if not mask.any():
            mask = None

    return DesignProblem(
        nelx=nelx,
        nely=nely,
        domain=domain,
        loads=tuple(loads),
        fixings=tuple(fixings),
        volume_fraction=float(rng.uniform(0.1, 1.0)),
        mask=mask,
    )


def random_density(rng: np.random.Generator, domain: np.ndarray, lo: float = 0.0, hi: float = 1.0) -> DensityField:
    rho = np.where(domain, rng.uniform(lo, hi, size=domain.shape), 0.0)
    return DensityField(rho, domain)
