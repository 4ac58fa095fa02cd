"""Structure generation backends and the compliance/volume evaluation protocol.

The reference backend runs the SIMP optimizer. The ``strength`` parameter
maps to warm-start blending: starting from a prior structure, the initial
field is (1 - strength) * prior + strength * uniform(vf) on the editable
elements, so strength 0 resumes exactly at the prior and strength 1 ignores
it. Seeded runs add a +-0.05 perturbation to the initial field, which
emulates independent generations so the batch mean/std protocol can be
exercised with a deterministic backend.

The remote backend ships the rendered sketch to an external generation
service over HTTP and treats the returned grayscale PNG as the structure;
mask semantics are applied identically on both backends (non-editable
elements of the output equal the prior, or the solid domain when there is
no prior).
"""
from __future__ import annotations

import base64
import csv
import io
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence, Union

import httpx
import numpy as np
from scipy import ndimage

from .errors import (
    BackendUnavailableError,
    RemoteProtocolError,
    SingularSystemError,
    TopoforgeError,
)
from .fem import DensityField, MaterialParams, assemble_and_solve
from .grid import containing_element, resample_nearest
from .model import DesignProblem, render_problem
from .optimizer import SolverConfig, optimize
from . import pngio

INIT_JITTER = 0.05
REMOTE_TIMEOUT = 120.0


@dataclass(frozen=True)
class GenerationParams:
    """User-facing generation request: the text parameters plus batch control."""

    volume_fraction: float
    load_angle_deg: float
    strength: float = 0.7  # 0 = keep the prior, 1 = ignore it; 0.6-0.8 works best
    backend: str = "simp"
    batch_count: int = 1
    seed: Optional[int] = None

    def __post_init__(self) -> None:
        if not (0.0 < self.volume_fraction <= 1.0):
            raise ValueError(f"volume_fraction must be in (0, 1], got {self.volume_fraction}")
        if not (0.0 <= self.strength <= 1.0):
            raise ValueError(f"strength must be in [0, 1], got {self.strength}")
        if self.backend not in ("simp", "remote"):
            raise ValueError(f"backend must be 'simp' or 'remote', got {self.backend!r}")
        if self.batch_count < 1:
            raise ValueError(f"batch_count must be >= 1, got {self.batch_count}")


@dataclass
class EvaluationReport:
    """Thresholded structure plus the two reported metrics."""

    threshold: float
    binary: np.ndarray  # (nely, nelx) bool, solid elements
    vf_global: float  # solid fraction over the domain
    vf_editable: Optional[float]  # solid fraction over the mask, when present
    compliance: float  # math.inf marks a singular / no-load-path structure
    diagnostics: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "threshold": self.threshold,
            "vf_global_pct": 100.0 * self.vf_global,
            "vf_editable_pct": None if self.vf_editable is None else 100.0 * self.vf_editable,
            "compliance": None if math.isinf(self.compliance) else self.compliance,
            "diagnostics": list(self.diagnostics),
        }


@dataclass
class RunRecord:
    """One generation inside a batch."""

    run_id: int
    seed: Optional[int]
    structure: Optional[DensityField]
    report: Optional[EvaluationReport]
    converged: bool = False
    iterations: int = 0
    error: Optional[str] = None


@dataclass
class BatchStats:
    """Mean and sample standard deviation over the successful runs of a batch."""

    n: int
    compliance_mean: float
    compliance_std: float
    vf_mean_pct: float
    vf_std_pct: float
    runs: list[RunRecord] = field(default_factory=list)

    @property
    def degenerate_std(self) -> bool:
        return self.n <= 1

    def summary_dict(self) -> dict:
        return {
            "n": self.n,
            "compliance_mean": self.compliance_mean,
            "compliance_std": self.compliance_std,
            "vf_mean_pct": self.vf_mean_pct,
            "vf_std_pct": self.vf_std_pct,
        }


@dataclass(frozen=True)
class RemoteBackend:
    """Wire configuration for the HTTP generation service."""

    url: str
    timeout: float = REMOTE_TIMEOUT


def mean_and_sample_std(values: Sequence[float]) -> tuple[float, float]:
    """Mean and (n-1)-normalized standard deviation; std is 0 for a single value."""
    arr = np.asarray(values, dtype=np.float64)
    if arr.size == 0:
        raise ValueError("no values to aggregate")
    mean = float(arr.mean())
    std = float(arr.std(ddof=1)) if arr.size > 1 else 0.0
    return mean, std


def _structure_to_rho(structure: Union[DensityField, np.ndarray], problem: DesignProblem) -> np.ndarray:
    """Coerce a field or grayscale raster to a (nely, nelx) [0, 1] array."""
    if isinstance(structure, DensityField):
        rho = structure.rho
    else:
        rho = np.asarray(structure, dtype=np.float64)
        if rho.ndim != 2:
            raise ValueError(f"structure raster must be 2D, got shape {rho.shape}")
        if rho.max(initial=0.0) > 1.0:
            rho = rho / 255.0
    if rho.shape != (problem.nely, problem.nelx):
        rho = resample_nearest(rho, (problem.nely, problem.nelx))
    return np.clip(rho, 0.0, 1.0)


def _has_load_path(binary: np.ndarray, problem: DesignProblem) -> bool:
    """Whether every load sits on solid material connected to some fixing."""
    if not problem.loads or not problem.fixings:
        return False
    labels, _ = ndimage.label(binary)
    anchored: set[int] = set()
    for fx in problem.fixings:
        ix = min(max(int(np.floor(fx.x * problem.nelx + 0.5)), 0), problem.nelx)
        iy = min(max(int(np.floor(fx.y * problem.nely + 0.5)), 0), problem.nely)
        for ex in (ix - 1, ix):
            for ey in (iy - 1, iy):
                if 0 <= ex < problem.nelx and 0 <= ey < problem.nely and binary[ey, ex]:
                    anchored.add(int(labels[ey, ex]))
    for ld in problem.loads:
        ex, ey = containing_element(ld.x, ld.y, problem.nelx, problem.nely)
        if not binary[ey, ex] or int(labels[ey, ex]) not in anchored:
            return False
    return True


def evaluate_structure(
    structure: Union[DensityField, np.ndarray],
    problem: DesignProblem,
    mp: Optional[MaterialParams] = None,
    threshold: float = 0.5,
) -> EvaluationReport:
    """Binarize at the threshold and measure volume fractions and compliance.

    Solid elements get full modulus, void elements the SIMP floor. When no
    load path exists or the solve fails, compliance is reported as infinity
    with a diagnostic instead of raising.
    """
    mp = mp or MaterialParams()
    rho = _structure_to_rho(structure, problem)
    binary = (rho >= threshold) & problem.domain

    diagnostics: list[str] = []
    domain_count = int(problem.domain.sum())
    vf_global = float(binary.sum()) / domain_count if domain_count else 0.0
    vf_editable: Optional[float] = None
    if problem.mask is not None:
        mask_count = int(problem.mask.sum())
        vf_editable = float((binary & problem.mask).sum()) / mask_count if mask_count else 0.0

    compliance = math.inf
    if not _has_load_path(binary, problem):
        diagnostics.append(
            "no load path: some load is not connected to a fixing through solid elements"
        )
    else:
        bin_field = DensityField(np.where(binary, 1.0, 0.0), problem.domain)
        try:
            compliance = assemble_and_solve(bin_field, problem, mp).compliance
        except SingularSystemError as exc:
            diagnostics.append(f"singular system: {exc}")
    return EvaluationReport(
        threshold=threshold,
        binary=binary,
        vf_global=vf_global,
        vf_editable=vf_editable,
        compliance=compliance,
        diagnostics=diagnostics,
    )


def _frozen_base(problem: DesignProblem, prior: Optional[DensityField]) -> np.ndarray:
    """Values held fixed outside the editable region: the prior, else solid domain."""
    if prior is not None:
        return prior.rho
    return np.where(problem.domain, 1.0, 0.0)


def _simp_init(
    problem: DesignProblem,
    params: GenerationParams,
    prior: Optional[DensityField],
) -> DensityField:
    active = problem.active_elements()
    rho = np.where(problem.domain, _frozen_base(problem, prior), 0.0)
    if prior is not None:
        rho[active] = (1.0 - params.strength) * prior.rho[active] + (
            params.strength * params.volume_fraction
        )
    else:
        rho[active] = params.volume_fraction
    if params.seed is not None:
        rng = np.random.default_rng(params.seed)
        jitter = rng.uniform(-INIT_JITTER, INIT_JITTER, size=int(active.sum()))
        rho[active] = np.clip(rho[active] + jitter, 0.0, 1.0)
    return DensityField(rho, problem.domain)


def _generate_simp(
    problem: DesignProblem,
    params: GenerationParams,
    prior: Optional[DensityField],
    mp: MaterialParams,
    cfg: SolverConfig,
) -> tuple[DensityField, bool, int]:
    init = _simp_init(problem, params, prior)
    result = optimize(problem, cfg, mp, init=init)
    return result.field, result.converged, result.iterations


def remote_generate(
    request: dict,
    *,
    url: str,
    timeout: float = REMOTE_TIMEOUT,
) -> dict:
    """POST a generation request to {url}/v1/generate and validate the response."""
    endpoint = url.rstrip("/") + "/v1/generate"
    try:
        response = httpx.post(endpoint, json=request, timeout=timeout)
    except httpx.TimeoutException as exc:
        raise BackendUnavailableError(f"remote backend timed out after {timeout}s") from exc
    except httpx.HTTPError as exc:
        raise BackendUnavailableError(f"remote backend unreachable: {exc}") from exc
    if response.status_code != 200:
        raise BackendUnavailableError(f"remote backend returned HTTP {response.status_code}")
    try:
        payload = response.json()
    except ValueError as exc:
        raise RemoteProtocolError("remote response is not valid JSON") from exc
    if not isinstance(payload, dict) or "structure_png_b64" not in payload:
        raise RemoteProtocolError("remote response is missing 'structure_png_b64'")
    return payload


def _generate_remote(
    problem: DesignProblem,
    params: GenerationParams,
    prior: Optional[DensityField],
    remote: RemoteBackend,
) -> tuple[DensityField, bool, int]:
    sketch = render_problem(problem)
    request = {
        "sketch_png_b64": base64.b64encode(pngio.sketch_to_png_bytes(sketch)).decode("ascii"),
        "mask_png_b64": None,
        "volume_fraction": params.volume_fraction,
        "load_angle_deg": params.load_angle_deg,
        "strength": params.strength,
        "seed": params.seed,
    }
    if problem.mask is not None:
        mask_field = DensityField(np.where(problem.mask, 1.0, 0.0), np.ones_like(problem.mask))
        request["mask_png_b64"] = base64.b64encode(pngio.density_to_png_bytes(mask_field)).decode("ascii")

    payload = remote_generate(request, url=remote.url, timeout=remote.timeout)
    try:
        raw = base64.b64decode(payload["structure_png_b64"])
        gray = pngio.gray_from_png_bytes(raw)
    except Exception as exc:
        raise RemoteProtocolError(f"remote structure PNG could not be decoded: {exc}") from exc

    if gray.shape != (problem.nely, problem.nelx):
        warnings.warn(
            f"remote structure is {gray.shape[1]}x{gray.shape[0]}, "
            f"resampling to the {problem.nelx}x{problem.nely} grid",
            stacklevel=2,
        )
        gray = resample_nearest(gray, (problem.nely, problem.nelx))

    rho = np.clip(np.where(problem.domain, gray, 0.0), 0.0, 1.0)
    frozen = problem.domain & ~problem.active_elements()
    rho[frozen] = _frozen_base(problem, prior)[frozen]
    return DensityField(rho, problem.domain), True, 0


def generate(
    problem: DesignProblem,
    params: GenerationParams,
    prior: Optional[DensityField] = None,
    *,
    mp: Optional[MaterialParams] = None,
    cfg: Optional[SolverConfig] = None,
    remote: Optional[RemoteBackend] = None,
) -> DensityField:
    """Produce a structure for the problem with the selected backend."""
    field, _, _ = generate_with_info(problem, params, prior, mp=mp, cfg=cfg, remote=remote)
    return field


def generate_with_info(
    problem: DesignProblem,
    params: GenerationParams,
    prior: Optional[DensityField] = None,
    *,
    mp: Optional[MaterialParams] = None,
    cfg: Optional[SolverConfig] = None,
    remote: Optional[RemoteBackend] = None,
) -> tuple[DensityField, bool, int]:
    """Like :func:`generate` but also reports (converged, iterations)."""
    if prior is not None and prior.shape != (problem.nely, problem.nelx):
        raise ValueError(f"prior shape {prior.shape} != problem grid")
    problem = problem.with_generation_params(params.volume_fraction, params.load_angle_deg)
    if params.backend == "remote":
        if remote is None:
            raise BackendUnavailableError("remote backend selected but no remote URL configured")
        return _generate_remote(problem, params, prior, remote)
    return _generate_simp(problem, params, prior, mp or MaterialParams(), cfg or SolverConfig())


def batch_run(
    problem: DesignProblem,
    params: GenerationParams,
    mp: Optional[MaterialParams] = None,
    *,
    cfg: Optional[SolverConfig] = None,
    prior: Optional[DensityField] = None,
    remote: Optional[RemoteBackend] = None,
    seeds: Optional[Sequence[Optional[int]]] = None,
    threshold: float = 0.5,
) -> BatchStats:
    """Generate ``batch_count`` structures and aggregate their metrics.

    Runs are seeded ``seed, seed + 1, ...`` unless an explicit seed sequence
    is given. Failed runs are recorded and excluded from the statistics.
    """
    mp = mp or MaterialParams()
    problem = problem.with_generation_params(params.volume_fraction, params.load_angle_deg)
    if seeds is None:
        if params.seed is None:
            seeds = [None] * params.batch_count
        else:
            seeds = [params.seed + i for i in range(params.batch_count)]
    if len(seeds) != params.batch_count:
        raise ValueError(f"expected {params.batch_count} seeds, got {len(seeds)}")

    runs: list[RunRecord] = []
    first_error: Optional[TopoforgeError] = None
    for run_id, seed in enumerate(seeds):
        run_params = GenerationParams(
            volume_fraction=params.volume_fraction,
            load_angle_deg=params.load_angle_deg,
            strength=params.strength,
            backend=params.backend,
            batch_count=1,
            seed=seed,
        )
        try:
            structure, converged, iterations = generate_with_info(
                problem, run_params, prior, mp=mp, cfg=cfg, remote=remote
            )
            report = evaluate_structure(structure, problem, mp, threshold=threshold)
            runs.append(
                RunRecord(
                    run_id=run_id, seed=seed, structure=structure, report=report,
                    converged=converged, iterations=iterations,
                )
            )
        except TopoforgeError as exc:
            first_error = first_error or exc
            runs.append(
                RunRecord(
                    run_id=run_id, seed=seed, structure=None, report=None,
                    error=f"{type(exc).__name__}: {exc}",
                )
            )

    good = [r for r in runs if r.report is not None]
    if not good:
        assert first_error is not None
        raise first_error  # every run failed; surface the original error type

    compliance_mean, compliance_std = mean_and_sample_std([r.report.compliance for r in good])
    vf_mean, vf_std = mean_and_sample_std([100.0 * r.report.vf_global for r in good])
    return BatchStats(
        n=len(good),
        compliance_mean=compliance_mean,
        compliance_std=compliance_std,
        vf_mean_pct=vf_mean,
        vf_std_pct=vf_std,
        runs=runs,
    )


CSV_COLUMNS = ("run_id", "seed", "compliance", "vf_global_pct", "vf_editable_pct", "converged", "iterations")


def write_batch_csv(stats: BatchStats, path: Union[str, Path]) -> None:
    """Per-run report CSV; failed runs appear with empty metric cells."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_COLUMNS)
        for r in stats.runs:
            if r.report is None:
                writer.writerow([r.run_id, _cell(r.seed), "", "", "", "", ""])
                continue
            writer.writerow(
                [
                    r.run_id,
                    _cell(r.seed),
                    repr(r.report.compliance),
                    repr(100.0 * r.report.vf_global),
                    "" if r.report.vf_editable is None else repr(100.0 * r.report.vf_editable),
                    r.converged,
                    r.iterations,
                ]
            )


def _cell(value) -> str:
    return "" if value is None else str(value)


def format_summary_table(stats: BatchStats) -> str:
    return (
        f"n={stats.n}  compliance {stats.compliance_mean:.4f} ± {stats.compliance_std:.4f}  "
        f"vf {stats.vf_mean_pct:.2f}% ± {stats.vf_std_pct:.2f}%"
    )
