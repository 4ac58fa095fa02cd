"""HTTP service: asynchronous generation jobs over a JSON API.

Submissions validate the sketch synchronously (bad requests fail fast with
a 422), then run on a worker pool; clients poll the job resource until it is
done. Each job persists a self-describing run directory under the output
root. The studio bundle, when built, is served from the same origin, and
GET /api/palette exposes the exact brush table the parser uses so client
and server can never disagree about colors.
"""
from __future__ import annotations

import base64
import binascii
import threading
import uuid
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field as dc_field
from datetime import datetime, timezone
from pathlib import Path
from typing import Literal, Optional

import numpy as np
from fastapi import FastAPI, HTTPException
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel, Field

from . import pngio
from .errors import SketchError, TopoforgeError
from .fem import DensityField, MaterialParams
from .grid import resample_nearest
from .model import DEFAULT_GRID, DEFAULT_PALETTE, DesignProblem
from .pipeline import GenerationParams, RemoteBackend, batch_run
from .runs import write_run


@dataclass
class ServiceSettings:
    output_root: Path = Path("runs")
    grid: tuple[int, int] = DEFAULT_GRID
    backend: str = "simp"
    remote_url: Optional[str] = None
    pool_size: Optional[int] = None  # None = CPU count
    frontend_dir: Optional[Path] = None


class JobRequest(BaseModel):
    sketch_png_b64: str
    mask_png_b64: Optional[str] = None
    prior_png_b64: Optional[str] = None
    volume_fraction: float = Field(gt=0.0, le=1.0)
    load_angle_deg: float
    strength: float = Field(default=0.7, ge=0.0, le=1.0)
    backend: Literal["simp", "remote"] = "simp"
    batch_count: int = Field(default=1, ge=1, le=64)
    seed: Optional[int] = None


@dataclass
class Job:
    id: str
    state: str  # queued -> running -> done | failed
    request: JobRequest
    problem: DesignProblem
    prior: Optional[DensityField]
    results: list[dict] = dc_field(default_factory=list)
    error: Optional[str] = None
    created_at: str = ""
    finished_at: Optional[str] = None


class JobStore:
    """Thread-safe in-memory job registry."""

    def __init__(self) -> None:
        self._jobs: dict[str, Job] = {}
        self._lock = threading.Lock()

    def add(self, job: Job) -> None:
        with self._lock:
            self._jobs[job.id] = job

    def get(self, job_id: str) -> Optional[Job]:
        with self._lock:
            return self._jobs.get(job_id)

    def update(self, job_id: str, **fields) -> None:
        with self._lock:
            job = self._jobs[job_id]
            for key, value in fields.items():
                setattr(job, key, value)


def _now() -> str:
    return datetime.now(timezone.utc).isoformat()


def _decode_b64(data: str, what: str) -> bytes:
    try:
        return base64.b64decode(data, validate=True)
    except (binascii.Error, ValueError) as exc:
        raise HTTPException(status_code=422, detail=f"{what} is not valid base64") from exc


def _decode_gray(data_b64: str, what: str, grid: tuple[int, int]) -> np.ndarray:
    raw = _decode_b64(data_b64, what)
    try:
        gray = pngio.gray_from_png_bytes(raw)
    except Exception as exc:
        raise HTTPException(status_code=422, detail=f"{what} is not a decodable PNG") from exc
    nelx, nely = grid
    return resample_nearest(gray, (nely, nelx))


def _build_problem(req: JobRequest, grid: tuple[int, int]) -> tuple[DesignProblem, Optional[DensityField]]:
    from .model import parse_sketch  # local import keeps module load light

    raw = _decode_b64(req.sketch_png_b64, "sketch_png_b64")
    try:
        sketch = pngio.sketch_from_png_bytes(raw)
    except Exception as exc:
        raise HTTPException(status_code=422, detail="sketch_png_b64 is not a decodable PNG") from exc
    try:
        problem = parse_sketch(
            sketch,
            volume_fraction=req.volume_fraction,
            load_angle_deg=req.load_angle_deg,
            grid=grid,
        )
    except SketchError as exc:
        raise HTTPException(status_code=422, detail=f"{type(exc).__name__}: {exc}") from exc

    if req.mask_png_b64 is not None:
        mask = _decode_gray(req.mask_png_b64, "mask_png_b64", grid) > 0.5
        problem.mask = mask & problem.domain

    prior: Optional[DensityField] = None
    if req.prior_png_b64 is not None:
        gray = _decode_gray(req.prior_png_b64, "prior_png_b64", grid)
        prior = DensityField(np.where(problem.domain, gray, 0.0), problem.domain)
    return problem, prior


def create_app(settings: Optional[ServiceSettings] = None) -> FastAPI:
    settings = settings or ServiceSettings()
    app = FastAPI(title="topoforge", version="0.1.0")
    store = JobStore()
    executor = ThreadPoolExecutor(max_workers=settings.pool_size)
    app.state.settings = settings
    app.state.jobs = store

    def run_job(job_id: str) -> None:
        job = store.get(job_id)
        assert job is not None
        store.update(job_id, state="running")
        req = job.request
        try:
            params = GenerationParams(
                volume_fraction=req.volume_fraction,
                load_angle_deg=req.load_angle_deg,
                strength=req.strength,
                backend=req.backend,
                batch_count=req.batch_count,
                seed=req.seed,
            )
            remote = None
            if req.backend == "remote":
                if settings.remote_url is None:
                    raise TopoforgeError("remote backend requested but the service has no remote URL")
                remote = RemoteBackend(url=settings.remote_url)
            stats = batch_run(
                job.problem, params, MaterialParams(), prior=job.prior, remote=remote
            )
            run_dir = settings.output_root / job_id
            write_run(
                run_dir,
                job.problem,
                stats,
                sketch_png=base64.b64decode(req.sketch_png_b64),
            )
            results = []
            for rec in stats.runs:
                if rec.structure is None or rec.report is None:
                    continue
                png = pngio.density_to_png_bytes(rec.structure)
                entry = rec.report.to_dict()
                results.append(
                    {
                        "structure_png_b64": base64.b64encode(png).decode("ascii"),
                        "compliance": entry["compliance"],
                        "vf_global_pct": entry["vf_global_pct"],
                        "vf_editable_pct": entry["vf_editable_pct"],
                        "seed": rec.seed,
                        "converged": rec.converged,
                        "iterations": rec.iterations,
                        "diagnostics": entry["diagnostics"],
                    }
                )
            store.update(job_id, state="done", results=results, finished_at=_now())
        except Exception as exc:  # noqa: BLE001 - job failures become job state
            store.update(
                job_id,
                state="failed",
                error=f"{type(exc).__name__}: {exc}",
                finished_at=_now(),
            )

    @app.get("/api/health")
    def health() -> dict:
        return {"status": "ok"}

    @app.get("/api/palette")
    def palette() -> dict:
        return {"codes": [code.to_dict() for code in DEFAULT_PALETTE]}

    @app.post("/api/jobs", status_code=202)
    def submit(req: JobRequest) -> dict:
        problem, prior = _build_problem(req, settings.grid)
        job = Job(
            id=uuid.uuid4().hex[:12],
            state="queued",
            request=req,
            problem=problem,
            prior=prior,
            created_at=_now(),
        )
        store.add(job)
        executor.submit(run_job, job.id)
        return {"job_id": job.id}

    @app.get("/api/jobs/{job_id}")
    def job_status(job_id: str) -> dict:
        job = store.get(job_id)
        if job is None:
            raise HTTPException(status_code=404, detail=f"no such job: {job_id}")
        return {
            "job_id": job.id,
            "state": job.state,
            "results": job.results,
            "error": job.error,
            "created_at": job.created_at,
            "finished_at": job.finished_at,
        }

    if settings.frontend_dir is not None and Path(settings.frontend_dir).is_dir():
        app.mount("/", StaticFiles(directory=settings.frontend_dir, html=True), name="studio")

    return app
