"""Grid and coordinate conventions shared by the sketch codec and the FEM core.

The design domain is a regular grid of nelx x nely unit-square elements.
All 2D arrays over elements are indexed ``[iy, ix]`` with ``iy = 0`` at the
BOTTOM row, so array layout matches the normalized coordinate frame:
(0, 0) is the lower-left corner of the domain, (1, 1) the upper-right.
Images (PNG sketches) use row 0 = top and are flipped on the way in/out.

Nodes live on the (nelx+1) x (nely+1) lattice; node (ix, iy) has id
``iy * (nelx + 1) + ix`` and two DOFs ``(2*id, 2*id + 1)`` for (x, y).
"""
from __future__ import annotations

import numpy as np


def node_id(ix: int, iy: int, nelx: int) -> int:
    """Flat node index for lattice coordinates (ix, iy)."""
    return iy * (nelx + 1) + ix


def containing_element(x: float, y: float, nelx: int, nely: int) -> tuple[int, int]:
    """Element (ex, ey) containing the normalized point (x, y).

    Points exactly on an element border belong to the lower-left element.
    Coordinates are clamped into the domain first.
    """
    px = min(max(x, 0.0), 1.0) * nelx
    py = min(max(y, 0.0), 1.0) * nely
    ex = min(max(int(np.ceil(px)) - 1, 0), nelx - 1)
    ey = min(max(int(np.ceil(py)) - 1, 0), nely - 1)
    return ex, ey


def nearest_node(x: float, y: float, nelx: int, nely: int) -> tuple[int, int]:
    """Lattice node nearest to the normalized point (x, y); ties round up."""
    ix = min(max(int(np.floor(x * nelx + 0.5)), 0), nelx)
    iy = min(max(int(np.floor(y * nely + 0.5)), 0), nely)
    return ix, iy


def resample_nearest(arr: np.ndarray, out_hw: tuple[int, int]) -> np.ndarray:
    """Nearest-neighbor resample of a (H, W) or (H, W, C) array to (out_h, out_w)."""
    out_h, out_w = out_hw
    in_h, in_w = arr.shape[:2]
    if (in_h, in_w) == (out_h, out_w):
        return arr.copy()
    rows = np.minimum(((np.arange(out_h) + 0.5) * in_h / out_h).astype(int), in_h - 1)
    cols = np.minimum(((np.arange(out_w) + 0.5) * in_w / out_w).astype(int), in_w - 1)
    return arr[np.ix_(rows, cols)] if arr.ndim == 2 else arr[rows][:, cols]
