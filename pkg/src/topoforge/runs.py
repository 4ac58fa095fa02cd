"""Run-directory persistence shared by the CLI and the HTTP service.

A run directory is self-describing: the problem, the input sketch, every
generated structure, per-run reports, and the batch summary live next to a
manifest listing exactly the files that exist. Timestamps appear only in the
manifest, so reports, CSVs, and PNGs are byte-identical across repeated
seeded runs.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Optional

from . import pngio
from .model import DesignProblem
from .pipeline import BatchStats, write_batch_csv
from .serialize import problem_to_dict


@dataclass
class RunManifest:
    root: Path
    files: list[str] = field(default_factory=list)
    created_at: str = ""


def write_run(
    run_dir: Path,
    problem: DesignProblem,
    stats: BatchStats,
    sketch_png: Optional[bytes] = None,
) -> RunManifest:
    """Persist a completed batch under ``run_dir`` and return its manifest."""
    run_dir = Path(run_dir)
    (run_dir / "structures").mkdir(parents=True, exist_ok=True)
    files: list[str] = []

    def put_bytes(rel: str, data: bytes) -> None:
        (run_dir / rel).write_bytes(data)
        files.append(rel)

    def put_json(rel: str, payload) -> None:
        (run_dir / rel).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
        files.append(rel)

    put_json("problem.json", problem_to_dict(problem))
    if sketch_png is not None:
        put_bytes("sketch.png", sketch_png)

    reports = []
    for rec in stats.runs:
        entry: dict = {"run_id": rec.run_id, "seed": rec.seed, "error": rec.error}
        if rec.structure is not None and rec.report is not None:
            rel = f"structures/run_{rec.run_id:03d}.png"
            put_bytes(rel, pngio.density_to_png_bytes(rec.structure))
            entry.update(rec.report.to_dict())
            entry["structure"] = rel
            entry["converged"] = rec.converged
            entry["iterations"] = rec.iterations
        reports.append(entry)
    put_json("reports.json", reports)

    write_batch_csv(stats, run_dir / "summary.csv")
    files.append("summary.csv")
    put_json("summary.json", stats.summary_dict())

    manifest = RunManifest(
        root=run_dir,
        files=sorted(files),
        created_at=datetime.now(timezone.utc).isoformat(),
    )
    (run_dir / "manifest.json").write_text(
        json.dumps({"created_at": manifest.created_at, "files": manifest.files}, indent=2) + "\n"
    )
    return manifest
