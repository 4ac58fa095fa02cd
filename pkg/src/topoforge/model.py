"""Design-problem data model and the color-coded sketch codec.

A sketch is an RGBA raster in which brush colors carry meaning: black pixels
are material, red pixels mark load application regions, yellow/blue/green
pixels pin nodes in x / y / both directions, and azure pixels (matched on RGB
only, the brush is semi-transparent) select the editable region for masked
re-optimization. Everything else is background.

Any non-background mark implies material underneath it: constraint brushes
are drawn on top of the material layer, so a load or fixing pixel still
counts toward the design domain.

Conventions (see :mod:`topoforge.grid`): element arrays are ``[iy, ix]`` with
iy = 0 at the bottom; image row ``r`` maps to normalized
``y = 1 - (r + 0.5) / height``. Loads are reported at the centroid of each
4-connected cluster of load pixels; each fixing pixel pins the node at its
lower-left corner (the deterministic choice among the equally-near corners).
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np
from scipy import ndimage

from .errors import (
    AmbiguousPaletteError,
    NoFixingError,
    NoLoadError,
    NoMaterialError,
)
from .grid import containing_element, resample_nearest

DEFAULT_GRID = (64, 64)


class Role(enum.Enum):
    """What a brush color means."""

    MATERIAL = "material"
    LOAD = "load"
    FIX_X = "fix_x"
    FIX_Y = "fix_y"
    FIX_XY = "fix_xy"
    MASK = "mask"
    BACKGROUND = "background"


FIX_ROLES = (Role.FIX_X, Role.FIX_Y, Role.FIX_XY)


@dataclass(frozen=True)
class ColorCode:
    """One palette entry: a reference color plus a per-channel tolerance.

    A pixel matches when every compared channel deviates from the reference
    by at most ``tolerance``. Codes with ``ignore_alpha`` compare RGB only.
    """

    role: Role
    rgba: tuple[int, int, int, int]
    tolerance: int = 30
    ignore_alpha: bool = False

    def to_dict(self) -> dict:
        return {
            "role": self.role.value,
            "rgba": list(self.rgba),
            "tolerance": self.tolerance,
            "ignore_alpha": self.ignore_alpha,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ColorCode":
        return cls(
            role=Role(d["role"]),
            rgba=tuple(d["rgba"]),
            tolerance=int(d["tolerance"]),
            ignore_alpha=bool(d.get("ignore_alpha", False)),
        )


DEFAULT_PALETTE: tuple[ColorCode, ...] = (
    ColorCode(Role.MATERIAL, (0, 0, 0, 255)),
    ColorCode(Role.LOAD, (255, 0, 0, 255)),
    ColorCode(Role.FIX_X, (255, 255, 0, 255)),
    ColorCode(Role.FIX_Y, (0, 0, 255, 255)),
    ColorCode(Role.FIX_XY, (0, 255, 0, 255)),
    ColorCode(Role.MASK, (0, 127, 255, 160), ignore_alpha=True),
    ColorCode(Role.BACKGROUND, (255, 255, 255, 255)),
)


@dataclass
class RasterSketch:
    """An RGBA raster, row 0 at the top of the image."""

    pixels: np.ndarray  # (height, width, 4) uint8

    def __post_init__(self) -> None:
        px = np.asarray(self.pixels, dtype=np.uint8)
        if px.ndim != 3 or px.shape[2] != 4:
            raise ValueError(f"pixels must be (H, W, 4) RGBA, got shape {px.shape}")
        if px.shape[0] < 2 or px.shape[1] < 2:
            raise ValueError("sketch must be at least 2x2 pixels")
        self.pixels = px

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]


@dataclass(frozen=True)
class Load:
    """Point load at a normalized position (origin lower-left)."""

    x: float
    y: float
    magnitude: float = 1.0
    angle_deg: float = 270.0  # 0 = +x, counterclockwise

    def force_xy(self) -> tuple[float, float]:
        a = np.deg2rad(self.angle_deg)
        return self.magnitude * float(np.cos(a)), self.magnitude * float(np.sin(a))


@dataclass(frozen=True)
class Fixing:
    """Nodal displacement constraint at a normalized position."""

    x: float
    y: float
    kind: Role = Role.FIX_XY

    def __post_init__(self) -> None:
        if self.kind not in FIX_ROLES:
            raise ValueError(f"fixing kind must be one of {FIX_ROLES}, got {self.kind}")


@dataclass
class DesignProblem:
    """A structured topology-optimization problem on a regular element grid.

    ``domain`` marks designable material elements, ``mask`` (when present)
    the subset the optimizer may change; both are ``[iy, ix]`` bool arrays
    with iy = 0 at the bottom. Geometric validity (positions in bounds, at
    least one load and fixing, mask inside domain) is reported by
    :func:`validate_problem` rather than enforced at construction so that
    broken problems can be inspected.
    """

    nelx: int
    nely: int
    domain: np.ndarray
    loads: tuple[Load, ...]
    fixings: tuple[Fixing, ...]
    volume_fraction: float
    mask: Optional[np.ndarray] = None

    def __post_init__(self) -> None:
        self.domain = np.ascontiguousarray(self.domain, dtype=bool)
        if self.domain.shape != (self.nely, self.nelx):
            raise ValueError(
                f"domain shape {self.domain.shape} != (nely, nelx) = ({self.nely}, {self.nelx})"
            )
        if self.mask is not None:
            self.mask = np.ascontiguousarray(self.mask, dtype=bool)
            if self.mask.shape != (self.nely, self.nelx):
                raise ValueError(
                    f"mask shape {self.mask.shape} != (nely, nelx) = ({self.nely}, {self.nelx})"
                )
        if not (0.0 < self.volume_fraction <= 1.0):
            raise ValueError(f"volume_fraction must be in (0, 1], got {self.volume_fraction}")
        self.loads = tuple(self.loads)
        self.fixings = tuple(self.fixings)

    @property
    def grid(self) -> tuple[int, int]:
        return self.nelx, self.nely

    def active_elements(self) -> np.ndarray:
        """Elements the optimizer may change: domain & mask (whole domain if unmasked)."""
        if self.mask is None:
            return self.domain.copy()
        return self.domain & self.mask

    def with_generation_params(self, volume_fraction: float, load_angle_deg: float) -> "DesignProblem":
        """Copy with the text-entered parameters (vf, global load direction) applied."""
        loads = tuple(replace(ld, angle_deg=load_angle_deg) for ld in self.loads)
        return DesignProblem(
            nelx=self.nelx,
            nely=self.nely,
            domain=self.domain.copy(),
            loads=loads,
            fixings=self.fixings,
            volume_fraction=volume_fraction,
            mask=None if self.mask is None else self.mask.copy(),
        )


@dataclass(frozen=True)
class Diagnostic:
    """One finding from :func:`validate_problem`."""

    code: str
    severity: str  # "error" | "warning"
    message: str

    @property
    def is_error(self) -> bool:
        return self.severity == "error"


def check_palette(palette: Sequence[ColorCode]) -> None:
    """Raise unless the palette covers all roles with pairwise-disjoint tolerances.

    Two codes are distinguishable when some compared channel differs by more
    than the sum of their tolerances; alpha is ignored when either code does.
    """
    roles = {code.role for code in palette}
    missing = set(Role) - roles
    if missing:
        raise ValueError(f"palette is missing roles: {sorted(r.value for r in missing)}")
    for i, a in enumerate(palette):
        for b in palette[i + 1 :]:
            nchan = 3 if (a.ignore_alpha or b.ignore_alpha) else 4
            gap = max(abs(a.rgba[c] - b.rgba[c]) for c in range(nchan))
            if gap <= a.tolerance + b.tolerance:
                raise AmbiguousPaletteError(
                    f"palette colors for {a.role.value} and {b.role.value} overlap: "
                    f"max channel gap {gap} <= tolerance sum {a.tolerance + b.tolerance}"
                )


def classify_pixels(pixels: np.ndarray, palette: Sequence[ColorCode]) -> np.ndarray:
    """Assign every pixel the role of the nearest in-tolerance palette color.

    Returns an (H, W) array of indices into ``list(Role)``; pixels matching
    no code are background. With a valid palette the tolerance regions are
    disjoint, so at most one code can match; distance only breaks pathological
    ties.
    """
    role_list = list(Role)
    px = pixels.astype(np.int16)
    h, w = px.shape[:2]
    best_dist = np.full((h, w), np.inf)
    out = np.full((h, w), role_list.index(Role.BACKGROUND), dtype=np.int8)
    for code in palette:
        nchan = 3 if code.ignore_alpha else 4
        ref = np.array(code.rgba[:nchan], dtype=np.int16)
        dev = np.abs(px[:, :, :nchan] - ref)
        in_tol = (dev <= code.tolerance).all(axis=2)
        dist = (dev.astype(np.float64) ** 2).sum(axis=2)
        take = in_tol & (dist < best_dist)
        out[take] = role_list.index(code.role)
        best_dist[take] = dist[take]
    return out


def _role_plane(roles: np.ndarray, role: Role) -> np.ndarray:
    return roles == list(Role).index(role)


def parse_sketch(
    sketch: RasterSketch,
    palette: Sequence[ColorCode] = DEFAULT_PALETTE,
    *,
    volume_fraction: float,
    load_angle_deg: float,
    grid: tuple[int, int] = DEFAULT_GRID,
    load_magnitude: float = 1.0,
) -> DesignProblem:
    """Extract a :class:`DesignProblem` from a color-coded sketch.

    Sketches whose pixel dimensions differ from ``grid`` are nearest-neighbor
    resampled first, so each grid element corresponds to exactly one pixel.
    """
    check_palette(palette)
    nelx, nely = grid
    pixels = resample_nearest(sketch.pixels, (nely, nelx))
    roles = classify_pixels(pixels, palette)

    if not _role_plane(roles, Role.MATERIAL).any():
        raise NoMaterialError("sketch has no material-colored pixels")

    # Image rows run top-down; element arrays bottom-up.
    domain = np.flipud(~_role_plane(roles, Role.BACKGROUND)).copy()

    mask_img = _role_plane(roles, Role.MASK)
    mask = np.flipud(mask_img).copy() if mask_img.any() else None

    load_img = _role_plane(roles, Role.LOAD)
    if not load_img.any():
        raise NoLoadError("sketch has no load-colored pixels")
    labels, nclusters = ndimage.label(load_img)  # default structure = 4-connectivity
    loads = []
    for lab in range(1, nclusters + 1):
        rr, cc = np.nonzero(labels == lab)
        x = float(np.mean((cc + 0.5) / nelx))
        y = float(np.mean(1.0 - (rr + 0.5) / nely))
        loads.append(Load(x=x, y=y, magnitude=load_magnitude, angle_deg=load_angle_deg))
    loads.sort(key=lambda ld: (ld.x, ld.y))

    fixings: list[Fixing] = []
    seen: set[tuple[int, int, Role]] = set()
    for kind in FIX_ROLES:
        rr, cc = np.nonzero(_role_plane(roles, kind))
        for r, c in zip(rr.tolist(), cc.tolist()):
            ix, iy = int(c), int(nely - 1 - r)  # lower-left node of the pixel
            key = (ix, iy, kind)
            if key in seen:
                continue
            seen.add(key)
            fixings.append(Fixing(x=ix / nelx, y=iy / nely, kind=kind))
    if not fixings:
        raise NoFixingError("sketch has no boundary-condition pixels")
    fixings.sort(key=lambda fx: (fx.kind.value, fx.x, fx.y))

    return DesignProblem(
        nelx=nelx,
        nely=nely,
        domain=domain,
        loads=tuple(loads),
        fixings=tuple(fixings),
        volume_fraction=volume_fraction,
        mask=mask,
    )


def render_problem(
    problem: DesignProblem,
    palette: Sequence[ColorCode] = DEFAULT_PALETTE,
    size: Optional[tuple[int, int]] = None,
) -> RasterSketch:
    """Rasterize a problem back into a color-coded sketch (the inverse codec).

    Layer order: background, material, fixings, loads, mask on top (the mask
    brush always sits above everything else). Point markers are quantized to
    the pixel containing them, so parse(render(P)) recovers positions within
    one pixel. Stacked roles on one pixel are not representable: a marker
    under the mask, or two markers on the same pixel, keeps only the topmost.
    """
    check_palette(palette)
    w, h = size if size is not None else (problem.nelx, problem.nely)
    colors = {code.role: np.array(code.rgba, dtype=np.uint8) for code in palette}
    canvas = np.empty((h, w, 4), dtype=np.uint8)
    canvas[:] = colors[Role.BACKGROUND]

    domain_img = np.flipud(problem.domain)
    scaled = resample_nearest(domain_img, (h, w))
    canvas[scaled] = colors[Role.MATERIAL]

    def paint_cell(ex: int, ey: int, rgba: np.ndarray) -> None:
        # block covering element (ex, ey) at the output scale, so markers
        # survive nearest-neighbor resampling back to the grid
        c0 = min(max(int(np.floor(ex * w / problem.nelx)), 0), w - 1)
        c1 = min(max(int(np.ceil((ex + 1) * w / problem.nelx)), c0 + 1), w)
        b0 = min(max(int(np.floor(ey * h / problem.nely)), 0), h - 1)
        b1 = min(max(int(np.ceil((ey + 1) * h / problem.nely)), b0 + 1), h)
        canvas[h - b1 : h - b0, c0:c1] = rgba

    for fx in problem.fixings:
        ix = min(max(int(np.floor(fx.x * problem.nelx + 0.5)), 0), problem.nelx)
        iy = min(max(int(np.floor(fx.y * problem.nely + 0.5)), 0), problem.nely)
        paint_cell(min(ix, problem.nelx - 1), min(iy, problem.nely - 1), colors[fx.kind])

    for ld in problem.loads:
        ex, ey = containing_element(ld.x, ld.y, problem.nelx, problem.nely)
        paint_cell(ex, ey, colors[Role.LOAD])

    if problem.mask is not None and problem.mask.any():
        mask_img = np.flipud(problem.mask)
        canvas[resample_nearest(mask_img, (h, w))] = colors[Role.MASK]

    return RasterSketch(pixels=canvas)


def validate_problem(problem: DesignProblem) -> list[Diagnostic]:
    """Structural sanity checks; returns diagnostics instead of raising.

    Errors: out-of-bounds positions, mask escaping the domain, missing
    material/loads/fixings. Warnings: loads or fixings off the material,
    and domain components that carry a load but no fixing (singular risk).
    """
    diags: list[Diagnostic] = []
    nelx, nely = problem.nelx, problem.nely

    if not problem.domain.any():
        diags.append(Diagnostic("no_material", "error", "domain has no material elements"))
    if not problem.loads:
        diags.append(Diagnostic("no_load", "error", "problem has no loads"))
    if not problem.fixings:
        diags.append(Diagnostic("no_fixing", "error", "problem has no fixings"))
    if problem.mask is not None and bool((problem.mask & ~problem.domain).any()):
        diags.append(
            Diagnostic("mask_not_subset", "error", "mask marks elements outside the domain")
        )

    labels, _ = ndimage.label(problem.domain)
    loaded_components: set[int] = set()
    fixed_components: set[int] = set()

    for i, ld in enumerate(problem.loads):
        if not (0.0 <= ld.x <= 1.0 and 0.0 <= ld.y <= 1.0):
            diags.append(
                Diagnostic("out_of_bounds", "error", f"load {i} at ({ld.x}, {ld.y}) is outside [0,1]^2")
            )
            continue
        ex, ey = containing_element(ld.x, ld.y, nelx, nely)
        if not problem.domain[ey, ex]:
            diags.append(
                Diagnostic("load_outside_domain", "warning", f"load {i} sits on a void element ({ex}, {ey})")
            )
        else:
            loaded_components.add(int(labels[ey, ex]))

    for i, fx in enumerate(problem.fixings):
        if not (0.0 <= fx.x <= 1.0 and 0.0 <= fx.y <= 1.0):
            diags.append(
                Diagnostic("out_of_bounds", "error", f"fixing {i} at ({fx.x}, {fx.y}) is outside [0,1]^2")
            )
            continue
        ix = min(max(int(np.floor(fx.x * nelx + 0.5)), 0), nelx)
        iy = min(max(int(np.floor(fx.y * nely + 0.5)), 0), nely)
        touched = [
            (ex, ey)
            for ex in (ix - 1, ix)
            for ey in (iy - 1, iy)
            if 0 <= ex < nelx and 0 <= ey < nely and problem.domain[ey, ex]
        ]
        if not touched:
            diags.append(
                Diagnostic("fixing_outside_domain", "warning", f"fixing {i} touches no material element")
            )
        else:
            fixed_components.update(int(labels[ey, ex]) for ex, ey in touched)

    for comp in sorted(loaded_components - fixed_components):
        diags.append(
            Diagnostic(
                "singular_risk",
                "warning",
                f"domain component {comp} carries a load but no fixing; the solve will be near-singular",
            )
        )
    return diags
