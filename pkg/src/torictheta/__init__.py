"""Theta invariants, Bergman and theta distortion functions, equilibrium weights
and arithmetic volumes of toric models, with verification suites."""

from .bergman import (
    GramData,
    gram_matrix,
    rho,
    section_chi,
    section_h0_theta,
    sup_h0_theta_smallk,
    sup_norm,
    theta_distortion,
    volume_scan,
)
from .config import ExperimentConfig, Model, load_config, parse_config
from .equilibrium import (
    arithmetic_degree,
    biconjugate,
    envelope_weight,
    equilibrium_measure,
    equilibrium_weight,
    hodge_gap,
    legendre,
)
from .errors import (
    ComputeError,
    ConfigInvalid,
    DimensionUnsupported,
    NotPositiveDefinite,
    TailBoundFailure,
    ToricThetaError,
    VerifyFailed,
)
from .lattice import (
    EuclideanLattice,
    ThetaValue,
    covolume,
    degree,
    dual_lattice,
    h0_ar,
    h0_theta,
    h1_theta,
    log_theta,
    poisson_residual,
    random_lattice,
    second_moment,
    u_function,
)
from .polytope import LatticePolytope, SectionSpace, count_points, ehrhart_polynomial, lattice_points
from .weights import (
    Blend,
    Canonical,
    GridWeight,
    MonomialExp,
    RadialMeasure,
    Shifted,
    ToricWeight,
    bump_weight,
    fubini_study,
    ma_measure,
)

__version__ = "0.1.0"
