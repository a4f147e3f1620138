"""Quantitative regularity and capacity diagnostics.

Four instruments:

* dyadic oscillation fits estimating a field's local Hoelder exponent
  at probe points on the thin manifold;
* the Dirichlet-quotient construction w = u / r^{2-a-n}, whose equation
  carries the superdegenerate weight r^{b+n-1} with b = 4-a-2n, together
  with its residual and regularity-cap check;
* the one-dimensional radial capacity profile of the thin set, regime
  by regime, with a closed-form cross-check;
* an empirical Hardy-ratio bound (singular-weight mass against weighted
  Dirichlet energy) for fields clamped on the outer boundary.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_banded

from .errors import CheckFailure, RegimeError, ResolutionError
from .grid import AxiGrid, Field, weighted_energy, weighted_l2_norm
from .params import ProblemParams, alpha_star, harnack_exponent_b
from .solver import flux_residual


@dataclass(frozen=True)
class HolderFit:
    """Least-squares slope of log-oscillation against log-radius.

    ``levels`` holds (radius, oscillation) pairs on strictly decreasing
    dyadic radii; ``alpha_hat`` is the fitted exponent and ``r2`` the
    usual coefficient of determination.  A field constant on every box
    is flagged instead of fitted.
    """

    center: tuple
    levels: tuple
    alpha_hat: float
    r2: float
    is_constant: bool = False


def holder_fit(field: Field, center, k_min: int, k_max: int) -> HolderFit:
    """Oscillation decay of a field on dyadic boxes centered on the thin set.

    Box k collects the cells with |x - center| <= 2^-k per x-axis and
    r <= 2^-k; oscillation is max - min over the box.  Boxes must hold
    at least 4 cells each, otherwise the grid is declared under-resolved.
    """
    if k_min > k_max:
        raise ValueError("k_min must not exceed k_max")
    grid = field.grid
    coords = grid.meshgrid()
    if np.isscalar(center):
        center = (float(center),)
    center = tuple(float(c) for c in center)
    if len(center) != grid.x_dims:
        raise ValueError(f"probe center needs {grid.x_dims} coordinates")

    radii, oscs = [], []
    for k in range(k_min, k_max + 1):
        rho = 2.0**-k
        box = coords[-1] <= rho
        for ax in range(grid.x_dims):
            box &= np.abs(coords[ax] - center[ax]) <= rho
        count = int(box.sum())
        if count < 4:
            raise ResolutionError(
                f"dyadic box k={k} (radius {rho:g}) holds only {count} cells; "
                "refine the grid or lower k_max"
            )
        vals = field.values[box]
        radii.append(rho)
        oscs.append(float(vals.max() - vals.min()))

    levels = tuple(zip(radii, oscs))
    positive = [(r, o) for r, o in levels if o > 0.0]
    if len(positive) < 2:
        return HolderFit(center=center, levels=levels, alpha_hat=math.nan, r2=1.0, is_constant=True)

    log_r = np.log([r for r, _ in positive])
    log_o = np.log([o for _, o in positive])
    design = np.vstack([log_r, np.ones_like(log_r)]).T
    coef, *_ = np.linalg.lstsq(design, log_o, rcond=None)
    pred = design @ coef
    ss_res = float(np.sum((log_o - pred) ** 2))
    ss_tot = float(np.sum((log_o - log_o.mean()) ** 2))
    r2 = 1.0 if ss_tot == 0.0 and ss_res == 0.0 else (1.0 - ss_res / ss_tot if ss_tot > 0 else 0.0)
    return HolderFit(
        center=center, levels=levels, alpha_hat=float(coef[0]), r2=r2, is_constant=False
    )


def write_holder_csv(fit: HolderFit, path) -> None:
    lines = ["k,radius,oscillation"]
    for k, (radius, osc) in enumerate(fit.levels):
        lines.append(f"{k},{radius:.17g},{osc:.17g}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def harnack_ratio(u: Field, params: ProblemParams) -> Field:
    """Quotient w = u / r^{2-a-n} against the model solution vanishing on
    the thin set.  Cell centering keeps the divisor strictly positive.
    Requires a+n < 2."""
    if params.a_plus_n >= 2:
        raise RegimeError(
            f"the quotient construction requires a+n < 2; got a+n = {params.a_plus_n:g}"
        )
    sigma = params.characteristic_exponent
    return Field(grid=u.grid, values=u.values / u.grid.rs**sigma)


def harnack_residual(w: Field, params: ProblemParams) -> float:
    """Interior flux-form residual of the quotient in its own equation.

    The quotient of a genuine solution solves the equation with weight
    r^{b+n-1}, b = 4-a-2n; since b+n > 2 the weight is superdegenerate
    and cell centering needs no special treatment.
    """
    b = harnack_exponent_b(params.a, params.n)
    return flux_residual(w, b + params.n - 1.0)


def harnack_regularity_check(
    w: Field,
    params: ProblemParams,
    center=None,
    k_min: int = 2,
    k_max: int = 5,
    enforce: bool = True,
    margin: float = 0.1,
) -> tuple[HolderFit, float]:
    """Oscillation fit of the quotient against its theoretical cap.

    The cap is min(1, alpha_star(b, n)): quotients are Hoelder up to that
    exponent and no further in general.  When ``enforce`` is set, a fitted
    exponent above cap + margin raises; manufactured smooth quotients
    (exactly linear profiles and the like) should disable enforcement.
    """
    b = harnack_exponent_b(params.a, params.n)
    cap = min(1.0, alpha_star(b, params.n))
    if center is None:
        center = (0.0,) * w.grid.x_dims
    fit = holder_fit(w, center, k_min, k_max)
    if enforce and not fit.is_constant and fit.alpha_hat > cap + margin:
        raise CheckFailure(
            f"fitted oscillation exponent {fit.alpha_hat:.3f} exceeds the "
            f"regularity cap {cap:.3f} + {margin:g}"
        )
    return fit, cap


def closed_form_capacity(a: float, n: int, eps: float) -> float:
    """Reference value 1 / integral_eps^1 t^{1-a-n} dt."""
    if not 0.0 < eps < 1.0:
        raise ValueError("eps must lie in (0, 1)")
    power = 2.0 - a - n
    if power == 0.0:
        integral = math.log(1.0 / eps)
    else:
        integral = (1.0 - eps**power) / power
    return 1.0 / integral


def capacity_profile(
    params: ProblemParams, eps_list, radial_points: int = 10000
) -> list[tuple[float, float]]:
    """Relative radial capacity cap(eps) by discrete energy minimization.

    For each eps, minimizes the discrete form of
    integral_eps^1 t^{a+n-1} (u')^2 dt over profiles with u(eps) = 1 and
    u(1) = 0 on a geometrically graded grid (conductances evaluated at
    geometric midpoints), and reports the minimum -- the capacity of the
    inner radius against the unit shell.  Regimes announce themselves in
    the eps -> 0 limit: mid-range caps stay positive, superdegenerate
    ones vanish (logarithmically at a+n = 2, like eps^{a+n-2} beyond).
    """
    w = params.a + params.n - 1.0
    results = []
    for eps in eps_list:
        if not 0.0 < eps < 1.0:
            raise ValueError(f"eps values must lie in (0, 1), got {eps:g}")
        nodes = np.geomspace(eps, 1.0, radial_points)
        mid = np.sqrt(nodes[:-1] * nodes[1:])
        cond = mid**w / np.diff(nodes)
        n_int = radial_points - 2
        # tridiagonal system for the interior profile values
        diag = cond[:-1] + cond[1:]
        lower = -cond[1:-1]
        ab = np.zeros((3, n_int))
        ab[0, 1:] = lower
        ab[1, :] = diag
        ab[2, :-1] = lower
        rhs = np.zeros(n_int)
        rhs[0] = cond[0] * 1.0
        interior = solve_banded((1, 1), ab, rhs)
        profile = np.concatenate([[1.0], interior, [0.0]])
        energy = float(np.sum(cond * np.diff(profile) ** 2))
        results.append((float(eps), energy))
    return results


def hardy_ratio(u: Field, params: ProblemParams) -> float:
    """Empirical Hardy quotient for fields clamped on the outer boundary.

    Returns [integral r^{a+n-3} u^2] / [integral r^{a+n-1} |grad u|^2]
    after zeroing the outermost cell ring (x sides and top row).  The
    numerator's weight is two powers more singular than the energy's, so
    finiteness under refinement relies on the field vanishing fast enough
    at the thin set - the regime where the quotient is meaningful.
    """
    grid = u.grid
    masked = np.array(u.values)
    for ax in range(grid.x_dims):
        sl0 = [slice(None)] * (grid.x_dims + 1)
        sl1 = [slice(None)] * (grid.x_dims + 1)
        sl0[ax] = 0
        sl1[ax] = -1
        masked[tuple(sl0)] = 0.0
        masked[tuple(sl1)] = 0.0
    masked[..., -1] = 0.0
    clamped = Field(grid=grid, values=masked)
    energy = weighted_energy(clamped, params.a + params.n - 1.0)
    if energy <= 0.0:
        raise ValueError("field has zero weighted energy after clamping")
    mass = weighted_l2_norm(clamped, params.a + params.n - 3.0) ** 2
    return mass / energy
