"""Numerical laboratory for planar phase-transition layers.

Builds double-well transition profiles, solves the stationary
semilinear equation on masked grids, and analyzes the resulting
fields: directional energy distribution at large radius, the convex
stress potential, interface misfit trajectories, and spectra of the
linearized operator.
"""

__version__ = "0.1.0"

from .errors import (
    AclabError,
    ConfigurationError,
    DegenerateFieldError,
    GeometryError,
    InconsistencyError,
    LinearSolveError,
    NonConvergenceError,
    NumericalError,
    OutOfBasinError,
    StationarityError,
)
from .field import (
    Curve,
    Field2D,
    Grid2D,
    cone_mask,
    crop,
    energy_density,
    field_from_function,
    gradient,
    grid_from_extent,
    laplacian,
    load_field_csv,
    rectangle_mask,
    save_curves_csv,
    save_field_csv,
    zero_contours,
)
from .potentials import (
    Potential,
    ValidationReport,
    evaluate,
    load_tabulated,
    make_quartic,
    make_tabulated,
    validate,
)
from .profile1d import (
    Profile1D,
    first_integral_residual,
    multilayer,
    sigma0,
    solve_profile,
)
from .solver import (
    Solution,
    constant_ansatz,
    discrete_energy,
    layer_ansatz,
    multiend_ansatz,
    residual,
    saddle_ansatz,
    solve_dirichlet,
)
from .blowdown import (
    AngularDistribution,
    Ray,
    angular_energy,
    balancing_defect,
    extract_rays,
)
from .stress import (
    PolygonSide,
    PolygonVertex,
    StressPolygon,
    StressPotential,
    hessian_fields,
    stress_polygon,
    stress_potential,
)
from .fitting import (
    DecayFit,
    Trajectory,
    column_crossings,
    decay_fit,
    fit_column,
    fit_trajectory,
    t_prime_flux,
)
from .spectral import (
    GapResult,
    exterior_min_eigenvalue,
    line_gap,
    morse_index,
    stability_margin,
    stability_operator,
)
from .report import (
    analyze_run,
    config_sha256,
    load_report,
    merge_reports,
    run,
    strip_timings,
    validate_config,
    write_report,
)
