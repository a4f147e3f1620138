"""Flux-form finite-volume discretization of -div(r^w grad u) = 0.

The reduced equation on (x, r) carries the radial weight r^w with
w = a+n-1 for the primal problem, w = a+n+1 for the angular-derivative
field, and w = b+n-1 for the Dirichlet-quotient equation.  Face-centered
weights keep the system symmetric positive semi-definite, encode the
conormal condition as a literal zero or prescribed flux through the
r = 0 face, and never evaluate r^w at r = 0.

Boundary handling at the thin manifold (bottom face, r = 0):

* conormal-homogeneous -- zero flux; nothing is assembled.
* conormal-flux g      -- the prescribed flux enters the load vector as
  g(x) times the face area (the reduction absorbs the sphere factor, so
  g is per unit area of the thin manifold).
* dirichlet-zero       -- ghost value 0 behind the face, one-sided
  first-order difference with the face weight evaluated at r = h_r/4
  (the midpoint of the half-cell); for singular weights this is exactly
  the blow-up cap, which is reported in the solve report.

Outer boundaries are Dirichlet and eliminated into the right-hand side.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Optional

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import ConfigError, RegimeError, SolverError
from .grid import AxiGrid, Field, FullField, FullGrid, interior_probe_mask
from .params import ProblemParams, Regime


class Sigma0Condition(Enum):
    CONORMAL_HOMOGENEOUS = "conormal-homogeneous"
    CONORMAL_FLUX = "conormal-flux"
    DIRICHLET_ZERO = "dirichlet-zero"


@dataclass(frozen=True)
class BoundaryCondition:
    """Condition at the thin manifold plus outer Dirichlet data.

    ``outer`` is called with one coordinate array per axis (x..., r) at
    outer face centers; ``flux`` likewise with the x-coordinates only.
    """

    at_sigma0: Sigma0Condition
    outer: Callable[..., np.ndarray]
    flux: Optional[Callable[..., np.ndarray]] = None

    def __post_init__(self):
        if self.at_sigma0 is Sigma0Condition.CONORMAL_FLUX and self.flux is None:
            raise ConfigError("conormal-flux condition requires a flux function g")
        if self.at_sigma0 is not Sigma0Condition.CONORMAL_FLUX and self.flux is not None:
            raise ConfigError("flux function only makes sense for conormal-flux")


@dataclass
class SolveReport:
    iterations: int
    relative_residual: float
    assembled_unknowns: int
    wall_time: float
    bottom_capped: bool = False

    def to_artifact_dict(self) -> dict:
        # wall time is excluded so artifacts are byte-reproducible
        return {
            "iterations": self.iterations,
            "relative_residual": self.relative_residual,
            "assembled_unknowns": self.assembled_unknowns,
            "bottom_capped": self.bottom_capped,
        }


@dataclass
class LinearSystem:
    matrix: sp.csr_matrix
    rhs: np.ndarray
    grid: AxiGrid
    weight_exponent: float
    bc: BoundaryCondition
    bottom_capped: bool = False


def _validate_bc(weight_exponent: float, bc: BoundaryCondition) -> None:
    # For the primal problem the weight exponent is a+n-1, so the
    # mid-range 0 < a+n < 2 is -1 < w < 1 and a+n < 2 is w < 1.
    total = weight_exponent + 1.0
    if bc.at_sigma0 is Sigma0Condition.CONORMAL_FLUX and not (0.0 < total < 2.0):
        regime = "supersingular" if total <= 0 else "superdegenerate"
        raise ConfigError(
            "conormal flux data requires the mid-range regime 0 < a+n < 2; "
            f"got a+n = {total:g} ({regime}), where the thin set's weighted "
            "capacity forbids prescribing a flux"
        )
    if bc.at_sigma0 is Sigma0Condition.DIRICHLET_ZERO and total >= 2.0:
        raise ConfigError(
            "Dirichlet data on the thin set requires a+n < 2; "
            f"got a+n = {total:g} (superdegenerate, zero weighted capacity)"
        )
    if (
        bc.at_sigma0 in (Sigma0Condition.CONORMAL_HOMOGENEOUS, Sigma0Condition.CONORMAL_FLUX)
        and total <= 0.0
    ):
        raise ConfigError(
            f"conormal problems need an integrable weight (a+n > 0); got a+n = {total:g}"
        )


def assemble(axi: AxiGrid, weight_exponent: float, bc: BoundaryCondition) -> LinearSystem:
    """Assemble the symmetric flux-form system for -div(r^w grad u) = 0."""
    _validate_bc(weight_exponent, bc)
    we = float(weight_exponent)
    shape = axi.shape
    n_cells = axi.cell_count
    idx = np.arange(n_cells).reshape(shape)
    rs = axi.rs
    hx, hr = axi.hx, axi.hr
    area_x = hx ** (axi.x_dims - 1) * hr
    area_r = hx**axi.x_dims

    rows, cols, vals = [], [], []
    diag = np.zeros(n_cells)
    rhs = np.zeros(n_cells)

    def add_pairs(left, right, cond):
        li, ri, cv = left.ravel(), right.ravel(), cond.ravel()
        rows.extend((li, ri))
        cols.extend((ri, li))
        vals.extend((-cv, -cv))
        np.add.at(diag, li, cv)
        np.add.at(diag, ri, cv)

    # interior x-faces: weight at the shared cell row's radius
    w_row = rs**we
    for ax in range(axi.x_dims):
        cond = np.broadcast_to(w_row, shape).astype(float) * (area_x / hx)
        sl_l = [slice(None)] * (axi.x_dims + 1)
        sl_r = [slice(None)] * (axi.x_dims + 1)
        sl_l[ax] = slice(0, -1)
        sl_r[ax] = slice(1, None)
        add_pairs(idx[tuple(sl_l)], idx[tuple(sl_r)], cond[tuple(sl_l)])

    # interior r-faces at r = (j+1) h_r
    r_faces = rs[:-1] + hr / 2.0
    cond_r = np.broadcast_to(r_faces**we, shape[:-1] + (axi.dr_res - 1,)) * (area_r / hr)
    add_pairs(idx[..., :-1], idx[..., 1:], cond_r)

    # outer Dirichlet on the x-sides, ghost at the face center
    mesh = axi.meshgrid()
    for ax in range(axi.x_dims):
        cond = np.broadcast_to(w_row, shape).astype(float) * (area_x / (hx / 2.0))
        for side, xval in ((0, -axi.x_extent), (-1, axi.x_extent)):
            sl = [slice(None)] * (axi.x_dims + 1)
            sl[ax] = side
            sl = tuple(sl)
            cells = idx[sl].ravel()
            c = cond[sl].ravel()
            coords = [np.broadcast_to(m[sl], idx[sl].shape).ravel() for m in mesh]
            coords[ax] = np.full(cells.shape, xval)
            data = np.asarray(bc.outer(*coords), dtype=float)
            np.add.at(diag, cells, c)
            np.add.at(rhs, cells, c * data)

    # outer Dirichlet on the top face r = R
    cond_top = axi.r_extent**we * (area_r / (hr / 2.0))
    sl = (slice(None),) * axi.x_dims + (-1,)
    cells = idx[sl].ravel()
    coords = [np.broadcast_to(m[sl], idx[sl].shape).ravel() for m in mesh]
    coords[-1] = np.full(cells.shape, axi.r_extent)
    data = np.asarray(bc.outer(*coords), dtype=float)
    np.add.at(diag, cells, cond_top)
    np.add.at(rhs, cells, cond_top * data)

    # bottom face at the thin manifold
    bottom_capped = False
    sl = (slice(None),) * axi.x_dims + (0,)
    cells = idx[sl].ravel()
    if bc.at_sigma0 is Sigma0Condition.CONORMAL_FLUX:
        xcoords = [np.broadcast_to(m[sl], idx[sl].shape).ravel() for m in mesh[:-1]]
        g = np.asarray(bc.flux(*xcoords), dtype=float)
        np.add.at(rhs, cells, g * area_r)
    elif bc.at_sigma0 is Sigma0Condition.DIRICHLET_ZERO:
        # ghost value 0; face weight at r = h_r/4, the half-cell midpoint,
        # which caps the singular-weight blow-up at the face
        c_bot = (hr / 4.0) ** we * (area_r / (hr / 2.0))
        np.add.at(diag, cells, c_bot)
        bottom_capped = we < 0

    rows.append(np.arange(n_cells))
    cols.append(np.arange(n_cells))
    vals.append(diag)
    matrix = sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(n_cells, n_cells),
    ).tocsr()
    return LinearSystem(
        matrix=matrix,
        rhs=rhs,
        grid=axi,
        weight_exponent=we,
        bc=bc,
        bottom_capped=bottom_capped,
    )


def solve(system: LinearSystem, tol: float = 1e-10) -> tuple[Field, SolveReport]:
    """Diagonally preconditioned conjugate gradients on an assembled system."""
    if tol <= 0:
        raise ValueError("tolerance must be positive")
    start = time.perf_counter()
    matrix, rhs = system.matrix, system.rhs
    n = rhs.shape[0]
    rhs_norm = float(np.linalg.norm(rhs))
    if rhs_norm == 0.0:
        report = SolveReport(0, 0.0, n, time.perf_counter() - start, system.bottom_capped)
        return Field(grid=system.grid, values=np.zeros(system.grid.shape)), report

    inv_diag = 1.0 / matrix.diagonal()
    precond = spla.LinearOperator((n, n), matvec=lambda v: inv_diag * v)
    iterations = 0

    def count(_):
        nonlocal iterations
        iterations += 1

    maxiter = int(50.0 * np.sqrt(n)) + 1000
    x, info = spla.cg(
        matrix, rhs, rtol=tol, atol=0.0, maxiter=maxiter, M=precond, callback=count
    )
    residual = float(np.linalg.norm(rhs - matrix @ x) / rhs_norm)
    if info != 0 or residual > tol * 1.001:
        raise SolverError(
            f"conjugate gradients stalled after {iterations} iterations "
            f"(relative residual {residual:.3e}, target {tol:.3e})",
            best_residual=residual,
        )
    report = SolveReport(
        iterations=iterations,
        relative_residual=residual,
        assembled_unknowns=n,
        wall_time=time.perf_counter() - start,
        bottom_capped=system.bottom_capped,
    )
    return Field(grid=system.grid, values=x.reshape(system.grid.shape)), report


def solve_full(
    full: FullGrid,
    params: ProblemParams,
    outer_data: Callable[..., np.ndarray],
    tol: float = 1e-10,
) -> FullField:
    """Solve -div(|y|^a grad u) = 0 on the full grid with outer Dirichlet data.

    No condition is imposed at |y| = 0: the flux form holds across the
    thin set, which encodes the homogeneous conormal condition weakly.
    Supersingular weights are rejected (the weight is not integrable
    across the thin set, so the formulation breaks down).
    """
    if params.regime is Regime.SUPERSINGULAR:
        raise RegimeError(
            f"full-grid solves are unsupported in the supersingular regime "
            f"(a+n = {params.a_plus_n:g} <= 0)"
        )
    if full.x_dims != params.x_dims or full.y_dims != params.n:
        raise ValueError("full grid dimensions do not match the parameters")

    a = params.a
    shape = full.shape
    n_cells = full.cell_count
    idx = np.arange(n_cells).reshape(shape)
    hx, hy = full.hx, full.hy
    d = full.x_dims + full.y_dims
    mesh = full.meshgrid()
    radius = full.radius()

    rows, cols, vals = [], [], []
    diag = np.zeros(n_cells)
    rhs = np.zeros(n_cells)

    def add_pairs(left, right, cond):
        li, ri, cv = left.ravel(), right.ravel(), cond.ravel()
        rows.extend((li, ri))
        cols.extend((ri, li))
        vals.extend((-cv, -cv))
        np.add.at(diag, li, cv)
        np.add.at(diag, ri, cv)

    axis_h = [hx] * full.x_dims + [hy] * full.y_dims
    for ax in range(d):
        h = axis_h[ax]
        area = full.cell_volume / h
        sl_l = [slice(None)] * d
        sl_r = [slice(None)] * d
        sl_l[ax] = slice(0, -1)
        sl_r[ax] = slice(1, None)
        sl_l, sl_r = tuple(sl_l), tuple(sl_r)
        if ax < full.x_dims:
            w_face = radius[sl_l] ** a  # y unchanged across x-faces
        else:
            # face center: this y-coordinate at the node, others at centers
            ysq = radius**2 - mesh[ax] ** 2
            nodes = 0.5 * (mesh[ax][sl_l] + mesh[ax][sl_r])
            w_face = np.sqrt(ysq[sl_l] + nodes**2) ** a
        add_pairs(idx[sl_l], idx[sl_r], w_face * area / h)

        # outer Dirichlet at both ends of this axis
        extent = full.x_extent if ax < full.x_dims else full.y_extent
        for side, bval in ((0, -extent), (-1, extent)):
            sl = [slice(None)] * d
            sl[ax] = side
            sl = tuple(sl)
            cells = idx[sl].ravel()
            coords = [np.broadcast_to(m[sl], idx[sl].shape).ravel() for m in mesh]
            coords[ax] = np.full(cells.shape, bval)
            if ax < full.x_dims:
                w_b = (radius[sl] ** a).ravel()
            else:
                ysq = (radius[sl] ** 2 - mesh[ax][sl] ** 2).ravel()
                w_b = np.sqrt(ysq + bval**2) ** a
            c = w_b * area / (h / 2.0)
            data = np.asarray(outer_data(*coords), dtype=float)
            np.add.at(diag, cells, c)
            np.add.at(rhs, cells, c * data)

    rows.append(np.arange(n_cells))
    cols.append(np.arange(n_cells))
    vals.append(diag)
    matrix = sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(n_cells, n_cells),
    ).tocsr()

    rhs_norm = float(np.linalg.norm(rhs))
    if rhs_norm == 0.0:
        return FullField(grid=full, values=np.zeros(shape))
    inv_diag = 1.0 / matrix.diagonal()
    precond = spla.LinearOperator((n_cells, n_cells), matvec=lambda v: inv_diag * v)
    maxiter = int(50.0 * np.sqrt(n_cells)) + 1000
    x, info = spla.cg(matrix, rhs, rtol=tol, atol=0.0, maxiter=maxiter, M=precond)
    residual = float(np.linalg.norm(rhs - matrix @ x) / rhs_norm)
    if info != 0 or residual > tol * 1.001:
        raise SolverError(
            f"full-grid conjugate gradients stalled (relative residual {residual:.3e})",
            best_residual=residual,
        )
    return FullField(grid=full, values=x.reshape(shape))


def angular_derivative_field(u: Field, axi: AxiGrid | None = None) -> Field:
    """The field v = (1/r) du/dr, lifted from du . y/|y|^2.

    Centered differences on interior rows, one-sided at the first and
    last row.  For smooth axisymmetric solutions v extends smoothly to
    r = 0 and solves the same equation with the weight shifted by 2.
    """
    if axi is None:
        axi = u.grid
    elif axi != u.grid:
        raise ValueError("field is not defined on the given grid")
    vals = u.values
    hr = axi.hr
    dv = np.empty_like(vals)
    dv[..., 1:-1] = (vals[..., 2:] - vals[..., :-2]) / (2.0 * hr)
    dv[..., 0] = (vals[..., 1] - vals[..., 0]) / hr
    dv[..., -1] = (vals[..., -1] - vals[..., -2]) / hr
    return Field(grid=axi, values=dv / axi.rs)


def _second_derivative_o4(vals: np.ndarray, axis: int, h: float) -> np.ndarray:
    """Fourth-order central second difference on the 2-deep interior."""
    def sl(offset):
        s = [slice(2, -2)] * vals.ndim
        s[axis] = slice(2 + offset, vals.shape[axis] - 2 + offset or None)
        return vals[tuple(s)]

    return (
        -sl(2) + 16.0 * sl(1) - 30.0 * sl(0) + 16.0 * sl(-1) - sl(-2)
    ) / (12.0 * h**2)


def _first_derivative_o4(vals: np.ndarray, axis: int, h: float) -> np.ndarray:
    def sl(offset):
        s = [slice(2, -2)] * vals.ndim
        s[axis] = slice(2 + offset, vals.shape[axis] - 2 + offset or None)
        return vals[tuple(s)]

    return (-sl(2) + 8.0 * sl(1) - 8.0 * sl(-1) + sl(-2)) / (12.0 * h)


def laplacian_identity_residual(u: Field, v: Field, params: ProblemParams) -> float:
    """Max-norm of (-Lap u - a v) over interior probe cells.

    Lap is the full-space Laplacian acting on axisymmetric functions,
    Lap_x + d_rr + (n-1)/r d_r, evaluated with fourth-order central
    differences.  The higher-order stencil keeps the diagnostic
    independent of the flux-form kernel (a second-order stencil is
    annihilated identically by the discrete solution when a = 1-n), so
    for genuine solutions the result decays like h^2 plus solver noise.
    """
    if u.grid != v.grid:
        raise ValueError("u and v live on different grids")
    grid = u.grid
    vals = u.values
    lap = np.full(grid.shape, np.nan)
    interior = (slice(2, -2),) * (grid.x_dims + 1)
    acc = np.zeros(vals[interior].shape)
    for ax in range(grid.x_dims):
        acc += _second_derivative_o4(vals, ax, grid.hx)
    acc += _second_derivative_o4(vals, grid.x_dims, grid.hr)
    r_int = grid.rs[2:-2]
    acc += (params.n - 1) / r_int * _first_derivative_o4(vals, grid.x_dims, grid.hr)
    lap[interior] = acc

    probe = interior_probe_mask(grid)
    resid = -lap - params.a * v.values
    sel = probe & np.isfinite(lap)
    return float(np.max(np.abs(resid[sel])))


def flux_residual(field: Field, weight_exponent: float) -> float:
    """Normalized interior flux-form residual, max over probe cells.

    For each cell with a full set of neighbors, sums the face fluxes
    w_face (u_c - u_nb) A / h and divides by (cell volume) r_c^w, so the
    result approximates |div(r^w grad u)| / r^w and vanishes at second
    order for exact solutions.
    """
    grid = field.grid
    vals = field.values
    we = float(weight_exponent)
    rs = grid.rs
    hx, hr = grid.hx, grid.hr
    interior = (slice(1, -1),) * grid.x_dims + (slice(1, -1),)
    acc = np.zeros(vals[interior].shape)
    for ax in range(grid.x_dims):
        sl_c = [slice(1, -1)] * (grid.x_dims + 1)
        sl_m = list(sl_c)
        sl_p = list(sl_c)
        sl_m[ax] = slice(0, -2)
        sl_p[ax] = slice(2, None)
        w_row = np.broadcast_to(rs**we, grid.shape)[tuple(sl_c)]
        acc += (
            w_row
            * (2.0 * vals[tuple(sl_c)] - vals[tuple(sl_p)] - vals[tuple(sl_m)])
            / hx**2
        )
    sl_c = (slice(1, -1),) * grid.x_dims + (slice(1, -1),)
    sl_m = (slice(1, -1),) * grid.x_dims + (slice(0, -2),)
    sl_p = (slice(1, -1),) * grid.x_dims + (slice(2, None),)
    r_int = grid.rs[1:-1]
    w_up = (r_int + hr / 2.0) ** we
    w_dn = (r_int - hr / 2.0) ** we
    acc += (
        w_up * (vals[sl_c] - vals[sl_p]) + w_dn * (vals[sl_c] - vals[sl_m])
    ) / hr**2

    probe = interior_probe_mask(grid)[interior]
    norm = r_int**we
    return float(np.max(np.abs(acc / norm)[probe]))


def v_equation_residual(v: Field, params: ProblemParams) -> float:
    """Interior residual of v in the equation with weight shifted by 2.

    Small when v derives from a genuine axisymmetric solution; order one
    for generic fields.
    """
    return flux_residual(v, params.a + params.n + 1.0)


def first_row_slope_ratio(u: Field) -> float:
    """Diagnostic (u_1 - u_0) / h_r^2 at the central x-column.

    For smooth even-in-r profiles this converges to the second radial
    derivative at the thin manifold, so it stabilizes under refinement
    exactly when the first-row radial slope scales like r_0.
    """
    grid = u.grid
    center = (grid.dx_res // 2,) * grid.x_dims
    return float((u.values[center + (1,)] - u.values[center + (0,)]) / grid.hr**2)
