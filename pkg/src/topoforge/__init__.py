"""Sketch-driven 2D topology optimization.

Draw a design domain, loads, supports, and an optional editable region as a
color-coded raster sketch; this package turns it into a structured problem,
minimizes compliance with a SIMP optimizer (whole-domain or restricted to
the masked region), and measures the result's compliance and volume
fraction. A CLI and an HTTP job service wrap the same pipeline.
"""
from .errors import (
    AmbiguousPaletteError,
    BackendUnavailableError,
    BisectionFailureError,
    DimensionMismatchError,
    NoFixingError,
    NoLoadError,
    NoMaterialError,
    RemoteProtocolError,
    SingularSystemError,
    SketchError,
    TopoforgeError,
)
from .fem import (
    DensityField,
    FemSolution,
    MaterialParams,
    assemble_and_solve,
    compliance_sensitivity,
    element_stiffness,
    simp_modulus,
)
from .model import (
    DEFAULT_GRID,
    DEFAULT_PALETTE,
    ColorCode,
    DesignProblem,
    Diagnostic,
    Fixing,
    Load,
    RasterSketch,
    Role,
    parse_sketch,
    render_problem,
    validate_problem,
)
from .optimizer import (
    FilterOperator,
    OptimizationResult,
    SolverConfig,
    build_filter,
    oc_update,
    optimize,
)
from .pipeline import (
    BatchStats,
    EvaluationReport,
    GenerationParams,
    RemoteBackend,
    RunRecord,
    batch_run,
    evaluate_structure,
    generate,
    remote_generate,
)

__version__ = "0.1.0"

__all__ = [
    "AmbiguousPaletteError",
    "BackendUnavailableError",
    "BatchStats",
    "BisectionFailureError",
    "ColorCode",
    "DEFAULT_GRID",
    "DEFAULT_PALETTE",
    "DensityField",
    "DesignProblem",
    "Diagnostic",
    "DimensionMismatchError",
    "EvaluationReport",
    "FemSolution",
    "FilterOperator",
    "Fixing",
    "GenerationParams",
    "Load",
    "MaterialParams",
    "NoFixingError",
    "NoLoadError",
    "NoMaterialError",
    "OptimizationResult",
    "RasterSketch",
    "RemoteBackend",
    "RemoteProtocolError",
    "Role",
    "RunRecord",
    "SingularSystemError",
    "SketchError",
    "SolverConfig",
    "TopoforgeError",
    "assemble_and_solve",
    "batch_run",
    "build_filter",
    "compliance_sensitivity",
    "element_stiffness",
    "evaluate_structure",
    "generate",
    "oc_update",
    "optimize",
    "parse_sketch",
    "remote_generate",
    "render_problem",
    "simp_modulus",
    "validate_problem",
]
