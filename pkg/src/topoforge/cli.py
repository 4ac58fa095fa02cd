"""Command-line interface: solve, evaluate, render, serve.

Configuration precedence for shared settings (output root, port, backend,
remote URL, grid, pool size): command-line flags, then TOPOFORGE_* environment
variables, then a key=value config file, then built-in defaults.

Exit codes: 0 success, 2 invalid sketch or unreadable input, 3 solver
failure, 4 remote backend failure.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from datetime import datetime
from pathlib import Path
from typing import Optional

from .errors import (
    BackendUnavailableError,
    BisectionFailureError,
    RemoteProtocolError,
    SingularSystemError,
    SketchError,
    TopoforgeError,
)
from .fem import MaterialParams
from .model import DEFAULT_GRID, parse_sketch, render_problem, validate_problem
from .pipeline import (
    GenerationParams,
    RemoteBackend,
    batch_run,
    evaluate_structure,
    format_summary_table,
)
from . import pngio
from .runs import write_run
from .serialize import problem_from_dict

EXIT_OK = 0
EXIT_INVALID_INPUT = 2
EXIT_SOLVER_FAILURE = 3
EXIT_REMOTE_FAILURE = 4

ENV_PREFIX = "TOPOFORGE_"
CONFIG_KEYS = ("out", "port", "backend", "remote_url", "grid", "pool")


def _read_config_file(path: Optional[str]) -> dict[str, str]:
    candidate = path or os.environ.get(ENV_PREFIX + "CONFIG")
    if not candidate:
        return {}
    file = Path(candidate)
    if not file.is_file():
        if path:  # explicitly requested config must exist
            raise FileNotFoundError(f"config file not found: {path}")
        return {}
    values: dict[str, str] = {}
    for line in file.read_text().splitlines():
        line = line.strip()
        if not line or line.startswith("#") or "=" not in line:
            continue
        key, _, value = line.partition("=")
        values[key.strip()] = value.strip()
    return values


def resolve_setting(key: str, flag_value, file_values: dict[str, str], default):
    """flags > TOPOFORGE_<KEY> env > config file > default."""
    if flag_value is not None:
        return flag_value
    env = os.environ.get(ENV_PREFIX + key.upper())
    if env is not None:
        return env
    if key in file_values:
        return file_values[key]
    return default


def _parse_grid(value) -> tuple[int, int]:
    if isinstance(value, tuple):
        return value
    parts = str(value).lower().split("x")
    if len(parts) != 2:
        raise ValueError(f"grid must look like 64x64, got {value!r}")
    return int(parts[0]), int(parts[1])


def _load_problem_from_sketch(args, grid: tuple[int, int]):
    data = Path(args.sketch).read_bytes()
    sketch = pngio.sketch_from_png_bytes(data)
    problem = parse_sketch(
        sketch,
        volume_fraction=args.vf,
        load_angle_deg=args.load_angle,
        grid=grid,
    )
    if getattr(args, "mask", None):
        import numpy as np

        gray = pngio.gray_from_png_bytes(Path(args.mask).read_bytes())
        from .grid import resample_nearest

        mask = resample_nearest(gray, (grid[1], grid[0])) > 0.5
        problem.mask = mask & problem.domain
    return problem, data


def cmd_solve(args) -> int:
    file_values = _read_config_file(args.config)
    backend = resolve_setting("backend", args.backend, file_values, "simp")
    remote_url = resolve_setting("remote_url", args.remote_url, file_values, None)
    out_root = Path(resolve_setting("out", args.out, file_values, "runs"))
    grid = _parse_grid(resolve_setting("grid", args.grid, file_values, DEFAULT_GRID))

    try:
        problem, sketch_bytes = _load_problem_from_sketch(args, grid)
    except (OSError, ValueError, SketchError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INVALID_INPUT

    diags = validate_problem(problem)
    for d in diags:
        print(f"{d.severity}: {d.code}: {d.message}", file=sys.stderr)
    if any(d.is_error for d in diags):
        return EXIT_INVALID_INPUT

    params = GenerationParams(
        volume_fraction=args.vf,
        load_angle_deg=args.load_angle,
        strength=args.strength,
        backend=backend,
        batch_count=args.batch,
        seed=args.seed,
    )
    remote = RemoteBackend(url=remote_url) if backend == "remote" and remote_url else None
    if backend == "remote" and remote is None:
        print("error: remote backend selected but no --remote-url configured", file=sys.stderr)
        return EXIT_REMOTE_FAILURE

    try:
        stats = batch_run(problem, params, MaterialParams(), remote=remote)
    except (BackendUnavailableError, RemoteProtocolError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_REMOTE_FAILURE
    except (SingularSystemError, BisectionFailureError, TopoforgeError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_SOLVER_FAILURE

    run_dir = out_root if args.run_name is None else out_root / args.run_name
    if run_dir == out_root:
        stamp = datetime.now().strftime("%Y%m%d-%H%M%S")
        run_dir = out_root / f"run-{stamp}"
    write_run(run_dir, problem, stats, sketch_png=sketch_bytes)
    print(format_summary_table(stats))
    print(f"run directory: {run_dir}")
    return EXIT_OK


def cmd_evaluate(args) -> int:
    grid = _parse_grid(args.grid or DEFAULT_GRID)
    try:
        problem, _ = _load_problem_from_sketch(args, grid)
        gray = pngio.gray_from_png_bytes(Path(args.structure).read_bytes())
    except (OSError, ValueError, SketchError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INVALID_INPUT
    report = evaluate_structure(gray, problem, MaterialParams(), threshold=args.threshold)
    print(json.dumps(report.to_dict(), indent=2, sort_keys=True))
    return EXIT_OK


def cmd_render(args) -> int:
    try:
        problem = problem_from_dict(json.loads(Path(args.problem).read_text()))
    except (OSError, ValueError, KeyError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INVALID_INPUT
    size = None
    if args.size:
        size = _parse_grid(args.size)
    sketch = render_problem(problem, size=size)
    Path(args.out).write_bytes(pngio.sketch_to_png_bytes(sketch))
    print(f"wrote {args.out}")
    return EXIT_OK


def cmd_serve(args) -> int:
    import uvicorn

    from .service import ServiceSettings, create_app

    file_values = _read_config_file(args.config)
    port = int(resolve_setting("port", args.port, file_values, 8080))
    out_root = Path(resolve_setting("out", args.out, file_values, "runs"))
    backend = resolve_setting("backend", args.backend, file_values, "simp")
    remote_url = resolve_setting("remote_url", args.remote_url, file_values, None)
    grid = _parse_grid(resolve_setting("grid", args.grid, file_values, DEFAULT_GRID))
    pool = resolve_setting("pool", args.pool, file_values, None)

    frontend = args.frontend
    if frontend is None:
        # repo layout: src/topoforge/cli.py -> repo root -> frontend/dist
        bundled = Path(__file__).resolve().parents[2] / "frontend" / "dist"
        frontend = bundled if bundled.is_dir() else None

    settings = ServiceSettings(
        output_root=out_root,
        grid=grid,
        backend=backend,
        remote_url=remote_url,
        pool_size=None if pool is None else int(pool),
        frontend_dir=None if frontend is None else Path(frontend),
    )
    uvicorn.run(create_app(settings), host=args.host, port=port)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="topoforge", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", help="key=value config file")

    solve = sub.add_parser("solve", help="parse a sketch, optimize, evaluate, persist a run")
    solve.add_argument("--sketch", required=True, help="input sketch PNG")
    solve.add_argument("--mask", help="optional editable-region PNG (white = editable)")
    solve.add_argument("--vf", type=float, required=True, help="target volume fraction in (0, 1]")
    solve.add_argument("--load-angle", type=float, default=270.0, help="load direction in degrees")
    solve.add_argument("--strength", type=float, default=0.7)
    solve.add_argument("--batch", type=int, default=1, help="number of generations")
    solve.add_argument("--seed", type=int, default=None)
    solve.add_argument("--backend", choices=["simp", "remote"], default=None)
    solve.add_argument("--remote-url", default=None)
    solve.add_argument("--out", default=None, help="output root directory")
    solve.add_argument("--run-name", default=None, help="run directory name under the output root")
    solve.add_argument("--grid", default=None, help="element grid, e.g. 64x64")
    add_common(solve)
    solve.set_defaults(func=cmd_solve)

    ev = sub.add_parser("evaluate", help="measure compliance and volume fraction of a structure")
    ev.add_argument("--structure", required=True, help="grayscale structure PNG (255 = solid)")
    ev.add_argument("--sketch", required=True, help="sketch PNG defining the problem")
    ev.add_argument("--mask", help="optional editable-region PNG")
    ev.add_argument("--vf", type=float, default=0.5, help="problem volume fraction (for the record)")
    ev.add_argument("--load-angle", type=float, default=270.0)
    ev.add_argument("--threshold", type=float, default=0.5)
    ev.add_argument("--grid", default=None)
    ev.set_defaults(func=cmd_evaluate)

    rn = sub.add_parser("render", help="rasterize a problem JSON into a sketch PNG")
    rn.add_argument("--problem", required=True, help="problem JSON file")
    rn.add_argument("--out", required=True, help="output PNG path")
    rn.add_argument("--size", default=None, help="output pixels, e.g. 512x512")
    rn.set_defaults(func=cmd_render)

    sv = sub.add_parser("serve", help="run the HTTP service")
    sv.add_argument("--port", type=int, default=None)
    sv.add_argument("--host", default="127.0.0.1")
    sv.add_argument("--out", default=None)
    sv.add_argument("--backend", choices=["simp", "remote"], default=None)
    sv.add_argument("--remote-url", default=None)
    sv.add_argument("--grid", default=None)
    sv.add_argument("--pool", type=int, default=None)
    sv.add_argument("--frontend", default=None, help="studio bundle directory to serve")
    add_common(sv)
    sv.set_defaults(func=cmd_serve)
    return parser


def main(argv: Optional[list[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    raise SystemExit(main())
