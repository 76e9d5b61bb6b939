"""Multigrid solver for 1d nonlocal diffusion with a finite interaction radius.

The discrete operator is a symmetric Toeplitz band whose width tracks
the ratio of interaction radius to mesh spacing.  The package builds
that band in closed form and by quadrature, assembles the constrained
interior system, solves it with V-cycles under two coarsening
strategies, and measures every claimed contraction bound instead of
assuming it.
"""

from .stencil import (
    HorizonRule,
    LinearSystem,
    Problem,
    Stencil,
    assemble_system,
    boundary_vector,
    closed_form_stencil,
    constant_kernel,
    manufactured_problem,
    parse_horizon,
    quadrature_stencil,
)
from .toeplitz import (
    GeneratingFunction,
    StrideSpectrum,
    SymBandMatrix,
    SymBandToeplitz,
    dense_spectrum,
    laplacian_mixture_weights,
    stride_laplacian,
    stride_laplacian_spectrum,
)
from .multigrid import (
    DEFAULT_PARAMS,
    Hierarchy,
    Level,
    MGParams,
    SolveReport,
    build_hierarchy,
    closed_form_coarse_band,
    coarsen_band,
    default_params,
    galerkin_coarsen,
    jacobi_sweep,
    prolong_linear,
    restrict_full_weighting,
    solve,
    v_cycle,
)

__version__ = "0.1.0"

__all__ = [
    "HorizonRule",
    "LinearSystem",
    "Problem",
    "Stencil",
    "assemble_system",
    "boundary_vector",
    "closed_form_stencil",
    "constant_kernel",
    "manufactured_problem",
    "parse_horizon",
    "quadrature_stencil",
    "GeneratingFunction",
    "StrideSpectrum",
    "SymBandMatrix",
    "SymBandToeplitz",
    "dense_spectrum",
    "laplacian_mixture_weights",
    "stride_laplacian",
    "stride_laplacian_spectrum",
    "DEFAULT_PARAMS",
    "Hierarchy",
    "Level",
    "MGParams",
    "SolveReport",
    "build_hierarchy",
    "closed_form_coarse_band",
    "coarsen_band",
    "default_params",
    "galerkin_coarsen",
    "jacobi_sweep",
    "prolong_linear",
    "restrict_full_weighting",
    "solve",
    "v_cycle",
    "__version__",
]
