"""Coherent-state quantization on the plane and torus with a path-integral
Monte Carlo cross-check."""

from .errors import (
    AntiwickError,
    ConfigError,
    ExtrapolationUnstable,
    LatticeTooCoarse,
    MissingRoute,
    NonHermitianCoefficients,
    NonIntegralLevel,
    QuadratureBudgetExceeded,
)
from .geometry import (
    CharacterK,
    FourierSymbol,
    GridVector,
    PlanePoint,
    TorusGeometry,
    character_grid,
    eval_symbol,
    grid_vectors_within,
    validate_geometry,
    wrap_to_torus,
)
from .mc import (
    BridgeSpec,
    EstimatorResult,
    ExtrapolationResult,
    PathSample,
    default_steps,
    derive_seed,
    estimate_plane,
    estimate_torus,
    extrapolate_plateau,
    homotopy_phase,
    path_action,
    sample_bridge,
    sample_bridge_batch,
    stratonovich_area,
    wiener_prefactor,
)
from .plane import (
    PlaneLattice,
    SampledState,
    coherent_overlap,
    coherent_state,
    gaussian_lattice,
    inner_product,
    kernel_grid,
    plane_kernel,
    project,
    toeplitz_apply,
    translation_phase,
    weyl_phase,
)
from .torus import (
    KernelEigenBasis,
    QuadratureSpec,
    ThetaBasis,
    build_basis,
    check_group_law,
    gram_matrix,
    propagator_kernel,
    propagator_kernel_grid,
    propagator_matrix,
    propagator_series,
    symmetrize,
    toeplitz_matrix,
    torus_kernel,
    torus_kernel_grid,
    twist_phase,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
