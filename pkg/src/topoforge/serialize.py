"""JSON schemas for problems and density fields.

Problem files:
    {"grid": {"nelx", "nely"}, "domain": RLE, "loads": [{"x", "y",
     "magnitude", "angle_deg"}], "fixings": [{"x", "y", "kind"}],
     "volume_fraction": float, "mask": RLE | null}

RLE bitmaps are ``[[start, count], ...]`` runs of true cells over the
row-major flattened element array (bottom row first, then upward).
"""
from __future__ import annotations

from typing import Optional

import numpy as np

from .fem import DensityField
from .model import DesignProblem, Fixing, Load, Role


def rle_encode(bits: np.ndarray) -> list[list[int]]:
    flat = np.asarray(bits, dtype=bool).ravel()
    if flat.size == 0:
        return []
    edges = np.flatnonzero(np.diff(flat.astype(np.int8)))
    starts = np.concatenate(([0], edges + 1))
    lengths = np.diff(np.concatenate((starts, [flat.size])))
    return [
        [int(s), int(ln)]
        for s, ln in zip(starts, lengths)
        if flat[s]
    ]


def rle_decode(runs: list[list[int]], size: int) -> np.ndarray:
    out = np.zeros(size, dtype=bool)
    for start, count in runs:
        if start < 0 or count < 0 or start + count > size:
            raise ValueError(f"RLE run ({start}, {count}) exceeds bitmap size {size}")
        out[start : start + count] = True
    return out


def problem_to_dict(problem: DesignProblem) -> dict:
    return {
        "grid": {"nelx": problem.nelx, "nely": problem.nely},
        "domain": rle_encode(problem.domain),
        "loads": [
            {"x": ld.x, "y": ld.y, "magnitude": ld.magnitude, "angle_deg": ld.angle_deg}
            for ld in problem.loads
        ],
        "fixings": [{"x": fx.x, "y": fx.y, "kind": fx.kind.value} for fx in problem.fixings],
        "volume_fraction": problem.volume_fraction,
        "mask": None if problem.mask is None else rle_encode(problem.mask),
    }


def problem_from_dict(d: dict) -> DesignProblem:
    nelx, nely = int(d["grid"]["nelx"]), int(d["grid"]["nely"])
    n = nelx * nely
    domain = rle_decode(d["domain"], n).reshape(nely, nelx)
    mask = None if d.get("mask") is None else rle_decode(d["mask"], n).reshape(nely, nelx)
    loads = tuple(
        Load(
            x=float(ld["x"]),
            y=float(ld["y"]),
            magnitude=float(ld.get("magnitude", 1.0)),
            angle_deg=float(ld["angle_deg"]),
        )
        for ld in d["loads"]
    )
    fixings = tuple(
        Fixing(x=float(fx["x"]), y=float(fx["y"]), kind=Role(fx["kind"])) for fx in d["fixings"]
    )
    return DesignProblem(
        nelx=nelx,
        nely=nely,
        domain=domain,
        loads=loads,
        fixings=fixings,
        volume_fraction=float(d["volume_fraction"]),
        mask=mask,
    )


def density_to_dict(field: DensityField) -> dict:
    nely, nelx = field.shape
    return {
        "grid": {"nelx": nelx, "nely": nely},
        "rho": [[float(v) for v in row] for row in field.rho],
        "domain": rle_encode(field.domain),
    }


def density_from_dict(d: dict) -> DensityField:
    nelx, nely = int(d["grid"]["nelx"]), int(d["grid"]["nely"])
    rho = np.asarray(d["rho"], dtype=np.float64)
    domain = rle_decode(d["domain"], nelx * nely).reshape(nely, nelx)
    return DensityField(rho, domain)
