"""Translation-invariant shearlet transform and convex multi-label segmentation."""

from .frame import (
    GridSpec,
    PartitionOfUnityViolation,
    ShearletSystem,
    SubbandIndex,
    build_spectrum,
    build_system,
    enumerate_subbands,
)
from .regularizers import build_nl_graph, grad_operator, nl_operator
from .segmentation import (
    AdmmConfig,
    CgError,
    DivergenceError,
    SolveResult,
    admm_generic,
    admm_shearlet,
    data_term,
    extract_labels,
    mislabel_rate,
)
from .transform import Coefficients, ImaginaryResidueError, forward, inverse

__version__ = "0.1.0"

__all__ = [
    "GridSpec",
    "SubbandIndex",
    "ShearletSystem",
    "PartitionOfUnityViolation",
    "ImaginaryResidueError",
    "Coefficients",
    "build_spectrum",
    "build_system",
    "enumerate_subbands",
    "forward",
    "inverse",
    "grad_operator",
    "build_nl_graph",
    "nl_operator",
    "AdmmConfig",
    "SolveResult",
    "DivergenceError",
    "CgError",
    "admm_shearlet",
    "admm_generic",
    "data_term",
    "extract_labels",
    "mislabel_rate",
    "__version__",
]
