"""Numerical toolkit for elliptic equations degenerating on a thin manifold.

Library layout:

* ``params``    -- exponent/constant algebra for the weight pair (a, n)
* ``grid``      -- reduced and full tensor grids, weighted quadrature,
                   axisymmetric lift/restrict maps
* ``solver``    -- flux-form finite-volume solves with the three thin-set
                   boundary conditions, plus smoothness diagnostics
* ``extension`` -- Poisson-kernel extension, spectral fractional
                   Laplacian, Dirichlet-to-Neumann map, energy identity
* ``analysis``  -- Hoelder-exponent fits, Dirichlet-quotient checks,
                   capacity sweeps, Hardy ratios
* ``cli``       -- the ``thinlap`` experiment runner
"""

from .errors import (
    CheckFailure,
    ConfigError,
    RangeError,
    RegimeError,
    ResolutionError,
    SolverError,
    ThinlapError,
)
from .params import (
    ProblemParams,
    Regime,
    alpha_star,
    classify_regime,
    dirichlet_sharpness_holds,
    extension_constant,
    fractional_order,
    harnack_exponent_b,
    lanczos_gamma,
    sphere_area,
)
from .grid import (
    AxiGrid,
    Field,
    FullField,
    FullGrid,
    full_weighted_l2_norm,
    interior_probe_mask,
    lift_axisymmetric,
    make_axigrid,
    make_fullgrid,
    read_field_csv,
    read_full_field_csv,
    restrict_spherical_mean,
    weighted_energy,
    weighted_l2_norm,
    write_field_csv,
    write_full_field_csv,
)
from .solver import (
    BoundaryCondition,
    LinearSystem,
    Sigma0Condition,
    SolveReport,
    angular_derivative_field,
    assemble,
    first_row_slope_ratio,
    flux_residual,
    laplacian_identity_residual,
    solve,
    solve_full,
    v_equation_residual,
)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
