"""Draw a problem as a color-coded sketch and read it back as structured data.

Brush semantics: black = material, red = load region, yellow/blue/green =
x / y / xy pinned nodes, azure = editable-region mask, white = background.
Loads collapse to one point load per contiguous red cluster; every fix pixel
pins its nearest grid node. This script paints a bracket-shaped part with a
load on the overhang, parses it, validates it, and renders the echo.
"""
import pathlib

import numpy as np

from topoforge import RasterSketch, parse_sketch, render_problem, validate_problem
from topoforge import pngio

OUT = pathlib.Path(__file__).parent / "output"


def main() -> None:
    OUT.mkdir(exist_ok=True)
    n = 64
    px = np.full((n, n, 4), 255, dtype=np.uint8)
    px[:, :, 3] = 255

    # L-shaped bracket: a vertical wall plus a horizontal overhang
    px[:, :16] = (0, 0, 0, 255)
    px[:20, :] = (0, 0, 0, 255)

    # 2x2 red load cluster near the tip of the overhang
    px[8:10, 58:60] = (255, 0, 0, 255)

    # pin the wall's bottom edge in both directions
    for c in range(0, 16, 3):
        px[n - 1, c] = (0, 255, 0, 255)

    sketch = RasterSketch(pixels=px)
    pathlib.Path(OUT / "bracket_sketch.png").write_bytes(pngio.sketch_to_png_bytes(sketch))

    problem = parse_sketch(sketch, volume_fraction=0.35, load_angle_deg=270.0)
    print(f"grid: {problem.nelx}x{problem.nely}")
    print(f"domain elements: {int(problem.domain.sum())}")
    for ld in problem.loads:
        print(f"load at ({ld.x:.3f}, {ld.y:.3f}), {ld.magnitude} at {ld.angle_deg} deg")
    print(f"fixings: {len(problem.fixings)} pinned nodes")

    diagnostics = validate_problem(problem)
    print(f"diagnostics: {[d.code for d in diagnostics] or 'clean'}")

    echo = render_problem(problem, size=(256, 256))
    pathlib.Path(OUT / "bracket_echo.png").write_bytes(pngio.sketch_to_png_bytes(echo))
    print(f"wrote {OUT / 'bracket_sketch.png'} and {OUT / 'bracket_echo.png'}")


if __name__ == "__main__":
    main()
