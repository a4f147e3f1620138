"""Grids, fields, weighted quadrature, and the axisymmetric lift/restrict maps.

Two grid families:

* ``AxiGrid`` -- cell-centered tensor grid on the reduced half-space
  (-X, X)^{d-n} x (0, R) in the variables (x, r), r = |y|.  Cell
  centering keeps every r strictly positive, so radial weights r^e are
  never evaluated on the thin manifold itself.
* ``FullGrid`` -- small cell-centered tensor grid on
  (-X, X)^{d-n} x (-R, R)^n in the original variables, used only to
  cross-validate the reduction (d <= 4, modest resolutions).  Even
  resolution per y-axis guarantees no cell center hits |y| = 0.

Rectangular boxes stand in for balls throughout: every check in the
package uses manufactured data or interior probes, for which the outer
geometry is irrelevant, and tensor grids keep the code simple.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from .errors import RangeError, ResolutionError

_MAX_FULL_RES = 64
_MAX_FULL_DIM = 4


def _cell_centers(extent: float, count: int, start: float) -> np.ndarray:
    h = (extent - start) / count
    return start + (np.arange(count) + 0.5) * h


@dataclass(frozen=True)
class AxiGrid:
    """Cell-centered grid on (-X, X)^{x_dims} x (0, R)."""

    x_extent: float
    r_extent: float
    dx_res: int
    dr_res: int
    x_dims: int = 1

    def __post_init__(self):
        if self.x_extent <= 0 or self.r_extent <= 0:
            raise ValueError("grid extents must be positive")
        if self.dx_res < 4 or self.dr_res < 4:
            raise ValueError("grid resolutions must be at least 4 per axis")
        if self.x_dims not in (1, 2):
            raise ValueError(f"reduced solves support 1 or 2 x-axes, got {self.x_dims}")

    @property
    def hx(self) -> float:
        return 2.0 * self.x_extent / self.dx_res

    @property
    def hr(self) -> float:
        return self.r_extent / self.dr_res

    @property
    def xs(self) -> np.ndarray:
        return _cell_centers(self.x_extent, self.dx_res, -self.x_extent)

    @property
    def rs(self) -> np.ndarray:
        return _cell_centers(self.r_extent, self.dr_res, 0.0)

    @property
    def shape(self) -> tuple:
        return (self.dx_res,) * self.x_dims + (self.dr_res,)

    @property
    def cell_count(self) -> int:
        return self.dx_res**self.x_dims * self.dr_res

    @property
    def cell_volume(self) -> float:
        return self.hx**self.x_dims * self.hr

    def meshgrid(self) -> tuple:
        """Coordinate arrays (x1[, x2], r), each of shape ``self.shape``."""
        axes = [self.xs] * self.x_dims + [self.rs]
        return tuple(np.meshgrid(*axes, indexing="ij"))


@dataclass(frozen=True)
class Field:
    """Scalar grid function on an ``AxiGrid``; values are read-only."""

    grid: AxiGrid
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.shape != self.grid.shape:
            raise ValueError(
                f"field shape {vals.shape} does not match grid shape {self.grid.shape}"
            )
        if not np.all(np.isfinite(vals)):
            raise ValueError("field values must be finite")
        vals = vals.copy()
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)


@dataclass(frozen=True)
class FullGrid:
    """Cell-centered grid on (-X, X)^{x_dims} x (-R, R)^{y_dims}."""

    x_extent: float
    y_extent: float
    dx_res: int
    dy_res: int
    x_dims: int
    y_dims: int

    def __post_init__(self):
        if self.x_extent <= 0 or self.y_extent <= 0:
            raise ValueError("grid extents must be positive")
        if self.dx_res < 4 or self.dy_res < 4:
            raise ValueError("grid resolutions must be at least 4 per axis")
        if self.dy_res % 2 != 0:
            # odd y-resolution would park a cell center on |y| = 0
            raise ValueError("y-resolution must be even")
        if self.y_dims < 2:
            raise ValueError("codimension must be at least 2")
        if self.x_dims + self.y_dims > _MAX_FULL_DIM:
            raise ValueError(f"full grids are limited to dimension {_MAX_FULL_DIM}")
        if max(self.dx_res, self.dy_res) > _MAX_FULL_RES:
            raise ValueError(f"full grids are limited to {_MAX_FULL_RES} cells per axis")

    @property
    def hx(self) -> float:
        return 2.0 * self.x_extent / self.dx_res

    @property
    def hy(self) -> float:
        return 2.0 * self.y_extent / self.dy_res

    @property
    def xs(self) -> np.ndarray:
        return _cell_centers(self.x_extent, self.dx_res, -self.x_extent)

    @property
    def ys(self) -> np.ndarray:
        return _cell_centers(self.y_extent, self.dy_res, -self.y_extent)

    @property
    def shape(self) -> tuple:
        return (self.dx_res,) * self.x_dims + (self.dy_res,) * self.y_dims

    @property
    def cell_count(self) -> int:
        return int(np.prod(self.shape))

    @property
    def cell_volume(self) -> float:
        return self.hx**self.x_dims * self.hy**self.y_dims

    def meshgrid(self) -> tuple:
        axes = [self.xs] * self.x_dims + [self.ys] * self.y_dims
        return tuple(np.meshgrid(*axes, indexing="ij"))

    def radius(self) -> np.ndarray:
        """|y| at every cell center; strictly positive by construction."""
        coords = self.meshgrid()
        ysq = sum(c**2 for c in coords[self.x_dims :])
        return np.sqrt(ysq)


@dataclass(frozen=True)
class FullField:
    """Scalar grid function on a ``FullGrid``."""

    grid: FullGrid
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.shape != self.grid.shape:
            raise ValueError(
                f"field shape {vals.shape} does not match grid shape {self.grid.shape}"
            )
        if not np.all(np.isfinite(vals)):
            raise ValueError("field values must be finite")
        vals = vals.copy()
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)


def make_axigrid(params, x_extent: float, r_extent: float, dx_res: int, dr_res: int) -> AxiGrid:
    """Reduced grid for the given parameters (x_dims = d - n)."""
    if x_extent <= 0 or r_extent <= 0:
        raise ValueError("extents must be positive")
    if dx_res < 4 or dr_res < 4:
        raise ValueError("resolutions must be at least 4")
    return AxiGrid(
        x_extent=float(x_extent),
        r_extent=float(r_extent),
        dx_res=int(dx_res),
        dr_res=int(dr_res),
        x_dims=params.x_dims,
    )


def make_fullgrid(params, x_extent: float, y_extent: float, dx_res: int, dy_res: int) -> FullGrid:
    return FullGrid(
        x_extent=float(x_extent),
        y_extent=float(y_extent),
        dx_res=int(dx_res),
        dy_res=int(dy_res),
        x_dims=params.x_dims,
        y_dims=params.n,
    )


def lift_axisymmetric(field: Field, full: FullGrid) -> FullField:
    """Lift a reduced field to the full grid via u(x, y) = u~(x, |y|).

    Values are interpolated multilinearly in (x, r).  Every target cell
    must satisfy |x| <= X and |y| <= R of the reduced grid; offending
    cells are reported.  Radii below the first cell row are handled by
    linear extrapolation, which is second-order for the even-in-r
    profiles axisymmetric solutions have.
    """
    axi = field.grid
    if axi.x_dims != full.x_dims:
        raise ValueError("x-dimension mismatch between reduced and full grids")
    coords = full.meshgrid()
    radius = full.radius()
    bad = radius > axi.r_extent
    for k in range(full.x_dims):
        bad |= np.abs(coords[k]) > axi.x_extent
    if np.any(bad):
        idx = np.argwhere(bad)
        shown = ", ".join(str(tuple(i)) for i in idx[:8])
        raise RangeError(
            f"{idx.shape[0]} full-grid cells fall outside the reduced extents "
            f"(first offenders: {shown})"
        )
    points = [axi.xs] * axi.x_dims + [axi.rs]
    interp = RegularGridInterpolator(
        points, field.values, method="linear", bounds_error=False, fill_value=None
    )
    query = np.stack([c.ravel() for c in coords[: full.x_dims]] + [radius.ravel()], axis=-1)
    lifted = interp(query).reshape(full.shape)
    return FullField(grid=full, values=lifted)


def restrict_spherical_mean(full_field: FullField, axi: AxiGrid) -> Field:
    """Average a full field over the shells |y| in [r_j - h_r/2, r_j + h_r/2).

    Inverse of the lift for axisymmetric data.  The full grid must share
    the reduced grid's x-discretization; each (x-column, shell) pair must
    catch at least one full cell, otherwise the full grid is too coarse.
    """
    full = full_field.grid
    if full.x_dims != axi.x_dims:
        raise ValueError("x-dimension mismatch between full and reduced grids")
    if full.dx_res != axi.dx_res or not np.isclose(full.x_extent, axi.x_extent):
        raise ValueError("restriction requires matching x-discretizations")

    # shell membership depends on y only
    y_axes = [full.ys] * full.y_dims
    y_mesh = np.meshgrid(*y_axes, indexing="ij")
    radius_y = np.sqrt(sum(c**2 for c in y_mesh)).ravel()
    bins = np.floor(radius_y / axi.hr).astype(int)

    x_shape = (axi.dx_res,) * axi.x_dims
    flat_vals = full_field.values.reshape(x_shape + (-1,))
    out = np.empty(x_shape + (axi.dr_res,))
    empty = []
    for j in range(axi.dr_res):
        sel = bins == j
        if not np.any(sel):
            empty.append(j)
            continue
        out[..., j] = flat_vals[..., sel].mean(axis=-1)
    if empty:
        raise ResolutionError(
            f"radial shells {empty[:8]} caught no full-grid cells; "
            "refine the full grid or coarsen the reduced r-axis"
        )
    return Field(grid=axi, values=out)


def weighted_l2_norm(field: Field, exponent: float) -> float:
    """Midpoint-rule value of (integral of r^exponent * u^2)^(1/2).

    Cell centering keeps the integrand finite for any exponent; for the
    sum to converge under refinement near r = 0 the caller needs
    exponent + 1 > 0 unless the field itself vanishes there.
    """
    r = field.grid.rs
    weighted = field.values**2 * r**exponent
    return float(np.sqrt(weighted.sum() * field.grid.cell_volume))


def weighted_energy(field: Field, exponent: float) -> float:
    """Integral of r^exponent * |grad u|^2 via differences on interior faces.

    Each interior face contributes w_face * (du/h)^2 * (cell volume) with
    the weight evaluated at the face center, matching the quadratic form
    of the flux-form discretization.
    """
    grid = field.grid
    vals = field.values
    r = grid.rs
    vol = grid.cell_volume
    total = 0.0
    # x-direction faces: face centers share the cell row's r
    for ax in range(grid.x_dims):
        diff = np.diff(vals, axis=ax) / grid.hx
        total += float((diff**2 * r**exponent).sum() * vol)
    # r-direction faces: face centers at r = (j+1) h_r
    r_faces = r[:-1] + grid.hr / 2.0
    diff = np.diff(vals, axis=-1) / grid.hr
    total += float((diff**2 * r_faces**exponent).sum() * vol)
    return total


def full_weighted_l2_norm(field: FullField, exponent: float) -> float:
    """(integral of |y|^exponent u^2)^(1/2) on a full grid, midpoint rule."""
    weighted = field.values**2 * field.grid.radius() ** exponent
    return float(np.sqrt(weighted.sum() * field.grid.cell_volume))


def interior_probe_mask(grid) -> np.ndarray:
    """Boolean mask of probe cells well inside the domain.

    Probes keep |x| <= X/2 per x-axis and, for reduced grids,
    r in [R/4, 3R/4]; for full grids, |y_k| <= R/2 per y-axis.  Used by
    every residual/agreement diagnostic so comparisons across solvers
    and refinement levels sample the same region.
    """
    if isinstance(grid, AxiGrid):
        coords = grid.meshgrid()
        mask = np.ones(grid.shape, dtype=bool)
        for k in range(grid.x_dims):
            mask &= np.abs(coords[k]) <= 0.5 * grid.x_extent
        r = coords[-1]
        mask &= (r >= 0.25 * grid.r_extent) & (r <= 0.75 * grid.r_extent)
        return mask
    if isinstance(grid, FullGrid):
        coords = grid.meshgrid()
        mask = np.ones(grid.shape, dtype=bool)
        for k in range(grid.x_dims):
            mask &= np.abs(coords[k]) <= 0.5 * grid.x_extent
        for k in range(grid.x_dims, grid.x_dims + grid.y_dims):
            mask &= np.abs(coords[k]) <= 0.5 * grid.y_extent
        return mask
    raise TypeError(f"unsupported grid type {type(grid)!r}")


def write_field_csv(field: Field, path) -> None:
    """One cell per line, header x1[,x2],r,value, 17 significant digits."""
    grid = field.grid
    coords = grid.meshgrid()
    header = ",".join(f"x{k + 1}" for k in range(grid.x_dims)) + ",r,value"
    cols = [c.ravel() for c in coords] + [field.values.ravel()]
    _write_csv(path, header, cols)


def read_field_csv(path, grid: AxiGrid) -> Field:
    data = np.loadtxt(path, delimiter=",", skiprows=1)
    vals = data[:, -1].reshape(grid.shape)
    return Field(grid=grid, values=vals)


def write_full_field_csv(field: FullField, path) -> None:
    grid = field.grid
    coords = grid.meshgrid()
    header = (
        ",".join(f"x{k + 1}" for k in range(grid.x_dims))
        + ","
        + ",".join(f"y{k + 1}" for k in range(grid.y_dims))
        + ",value"
    )
    cols = [c.ravel() for c in coords] + [field.values.ravel()]
    _write_csv(path, header, cols)


def read_full_field_csv(path, grid: FullGrid) -> FullField:
    data = np.loadtxt(path, delimiter=",", skiprows=1)
    vals = data[:, -1].reshape(grid.shape)
    return FullField(grid=grid, values=vals)


def _write_csv(path, header: str, cols) -> None:
    lines = [header]
    rows = zip(*cols)
    for row in rows:
        lines.append(",".join(f"{v:.17g}" for v in row))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
