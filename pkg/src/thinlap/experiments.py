"""Experiment pipelines behind the command-line runner.

Each pipeline consumes a validated :class:`~thinlap.config.ExperimentConfig`,
writes its delimited artifacts plus a verdict JSON into the output
directory, and returns the verdict.  Artifacts are written atomically
and contain no volatile data (timings and the like), so identical
configurations reproduce byte-identical files.
"""

from __future__ import annotations

import json
import math
import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import analysis, extension
from .config import ExperimentConfig
from .errors import CheckFailure, ConfigError
from .grid import (
    Field,
    interior_probe_mask,
    lift_axisymmetric,
    make_axigrid,
    make_fullgrid,
    write_field_csv,
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
)
from .solver import (
    BoundaryCondition,
    Sigma0Condition,
    angular_derivative_field,
    assemble,
    first_row_slope_ratio,
    laplacian_identity_residual,
    solve,
    solve_full,
    v_equation_residual,
)

SCHEMA_VERSION = 1


@dataclass
class Check:
    name: str
    passed: bool
    value: float
    threshold: float
    detail: str = ""

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "passed": bool(self.passed),
            "value": self.value,
            "threshold": self.threshold,
            "detail": self.detail,
        }


@dataclass
class Verdict:
    name: str
    kind: str
    checks: list = field(default_factory=list)
    artifacts: list = field(default_factory=list)
    extra: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def to_dict(self) -> dict:
        data = {
            "schema_version": SCHEMA_VERSION,
            "name": self.name,
            "kind": self.kind,
            "passed": self.passed,
            "checks": [c.to_dict() for c in self.checks],
            "artifacts": sorted(self.artifacts),
        }
        data.update(self.extra)
        return data


def atomic_write_text(path: Path, text: str) -> None:
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_json(path: Path, data: dict) -> None:
    atomic_write_text(Path(path), json.dumps(data, indent=2, sort_keys=True) + "\n")


def write_csv(path: Path, header: str, rows) -> None:
    lines = [header]
    for row in rows:
        cells = []
        for v in row:
            if isinstance(v, str):
                cells.append(v)
            elif isinstance(v, bool):
                cells.append("true" if v else "false")
            elif isinstance(v, (int, np.integer)):
                cells.append(str(int(v)))
            elif v is None:
                cells.append("")
            else:
                cells.append(f"{float(v):.17g}")
        lines.append(",".join(cells))
    atomic_write_text(Path(path), "\n".join(lines) + "\n")


def _finish(verdict: Verdict, out_dir: Path) -> Verdict:
    write_json(out_dir / f"{verdict.name}_verdict.json", verdict.to_dict())
    verdict.artifacts.append(f"{verdict.name}_verdict.json")
    return verdict


def run_experiment(cfg: ExperimentConfig, out_dir) -> Verdict:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    runner = {
        "exponents": run_exponents,
        "solve": run_solve,
        "extension-check": run_extension_check,
        "harnack": run_harnack,
        "capacity": run_capacity,
    }[cfg.kind]
    return runner(cfg, out_dir)


# ----------------------------------------------------------------------
# exponents


def run_exponents(cfg: ExperimentConfig, out_dir: Path) -> Verdict:
    o = cfg.options
    a_values = np.arange(o["a_min"], o["a_max"] - 1e-12, o["a_step"])
    rows = []
    equiv_violations = 0
    tested = 0
    for n in o["n_values"]:
        for a in a_values:
            a = float(a)
            regime = classify_regime(a, n)
            mid = regime is Regime.MID_RANGE
            below2 = a + n < 2
            s = fractional_order(a, n) if mid else None
            d_an = extension_constant(a, n) if mid else None
            b = harnack_exponent_b(a, n) if below2 else None
            a_star_b = alpha_star(b, n) if below2 else None
            sharp = dirichlet_sharpness_holds(a, n) if below2 else None
            rows.append(
                (a, n, regime.value, s, b, alpha_star(a, n), a_star_b, d_an, sharp)
            )
            if below2:
                tested += 1
                if sharp != (a_star_b > 2.0 - a - n):
                    equiv_violations += 1
    table = out_dir / f"{cfg.name}_table.csv"
    write_csv(
        table,
        "a,n,regime,s,b,alpha_star,alpha_star_b,extension_constant,dirichlet_sharp",
        rows,
    )
    verdict = Verdict(name=cfg.name, kind=cfg.kind, artifacts=[table.name])
    verdict.checks.append(
        Check(
            name="sharpness_flag_matches_exponent_comparison",
            passed=equiv_violations == 0,
            value=float(equiv_violations),
            threshold=0.0,
            detail=f"{tested} parameter pairs with a+n < 2 swept",
        )
    )
    min_alpha = min(row[5] for row in rows)
    verdict.checks.append(
        Check(
            name="alpha_star_positive",
            passed=min_alpha > 0.0,
            value=min_alpha,
            threshold=0.0,
            detail="regularity cap must be positive for every pair",
        )
    )
    return _finish(verdict, out_dir)


# ----------------------------------------------------------------------
# solve


def _outer_builtin(kind: str, params: ProblemParams, problem: str):
    """Returns (outer callable, exact callable or None) on (x..., r)."""
    total = params.a_plus_n
    sigma = 2.0 - total

    if kind == "constant":
        fn = lambda *coords: np.ones_like(coords[0])
        return fn, fn
    if kind == "linear-x":
        if problem == "dirichlet":
            fn = lambda *coords: coords[0] * coords[-1] ** sigma
        else:
            fn = lambda *coords: coords[0]
        return fn, fn
    if kind == "characteristic":
        fn = lambda *coords: coords[-1] ** sigma
        return fn, fn
    if kind == "quadratic-harmonic":
        # x1^2 - r^2/(a+n) satisfies the weighted equation and the
        # homogeneous conormal condition for any a+n > 0
        kappa = 1.0 / total
        fn = lambda *coords: coords[0] ** 2 - kappa * coords[-1] ** 2
        return fn, fn
    if kind == "generic-smooth":
        fn = lambda *coords: np.cos(1.3 * coords[0]) * np.exp(-0.5 * coords[-1]) + 0.2 * coords[0]
        return fn, None
    raise ConfigError(f"unknown outer data builtin {kind!r}")


def _flux_builtin(kind: str, amplitude: float, x_extent: float):
    if kind == "constant":
        return lambda *xs: np.full_like(xs[0], amplitude)
    if kind == "cosine":
        return lambda *xs: amplitude * np.cos(np.pi * xs[0] / x_extent)
    if kind == "bump":
        def bump(*xs):
            t = np.clip(xs[0] / x_extent, -0.999999, 0.999999)
            return amplitude * np.exp(-1.0 / (1.0 - t**2)) * np.e
        return bump
    raise ConfigError(f"unknown flux builtin {kind!r}")


def run_solve(cfg: ExperimentConfig, out_dir: Path) -> Verdict:
    o = cfg.options
    params = ProblemParams(d=o["d"], n=o["n"], a=o["a"])
    if o["problem"] == "reduction-equivalence":
        return _run_reduction(cfg, params, out_dir)

    sigma0 = {
        "conormal": Sigma0Condition.CONORMAL_HOMOGENEOUS,
        "conormal-flux": Sigma0Condition.CONORMAL_FLUX,
        "dirichlet": Sigma0Condition.DIRICHLET_ZERO,
    }[o["problem"]]
    outer, exact = _outer_builtin(o["outer_data"], params, o["problem"])
    flux = None
    if sigma0 is Sigma0Condition.CONORMAL_FLUX:
        amp = o["flux_amplitude"]
        if amp is None:
            amp = -(2.0 - params.a_plus_n)
        flux = _flux_builtin(o["flux_g"], amp, o["x_extent"])
        if o["flux_g"] != "constant" or o["outer_data"] != "characteristic":
            exact = None  # only the model profile has a closed form
    bc = BoundaryCondition(at_sigma0=sigma0, outer=outer, flux=flux)

    rows = []
    reports = []
    errors = []
    identity_rows = []
    last_field = None
    for level in range(o["levels"]):
        axi = make_axigrid(
            params,
            o["x_extent"],
            o["r_extent"],
            o["dx_res"] * 2**level,
            o["dr_res"] * 2**level,
        )
        system = assemble(axi, params.reduced_weight_exponent, bc)
        fld, report = solve(system, o["tol"])
        reports.append(report.to_artifact_dict())
        last_field = fld

        rel_err = None
        if exact is not None:
            coords = axi.meshgrid()
            truth = exact(*coords)
            probe = interior_probe_mask(axi)
            scale = float(np.max(np.abs(truth)))
            scale = scale if scale > 0 else 1.0
            rel_err = float(np.max(np.abs(fld.values - truth)[probe])) / scale
            errors.append(rel_err)
        rows.append((level, axi.hx, axi.hr, report.assembled_unknowns, rel_err))

        if o["check_identities"]:
            v = angular_derivative_field(fld)
            identity_rows.append(
                (
                    level,
                    axi.hr,
                    laplacian_identity_residual(fld, v, params),
                    v_equation_residual(v, params),
                    first_row_slope_ratio(fld),
                )
            )

    errors_csv = out_dir / f"{cfg.name}_errors.csv"
    write_csv(errors_csv, "level,hx,hr,unknowns,rel_error", rows)
    artifacts = [errors_csv.name]
    if o["write_field"] and last_field is not None:
        field_csv = out_dir / f"{cfg.name}_field.csv"
        write_field_csv(last_field, field_csv)
        artifacts.append(field_csv.name)
    report_json = out_dir / f"{cfg.name}_solves.json"
    write_json(report_json, {"schema_version": SCHEMA_VERSION, "solves": reports})
    artifacts.append(report_json.name)

    verdict = Verdict(name=cfg.name, kind=cfg.kind, artifacts=artifacts)
    if errors:
        verdict.checks.append(
            Check(
                name="final_level_relative_error",
                passed=errors[-1] <= o["max_rel_error"],
                value=errors[-1],
                threshold=o["max_rel_error"],
                detail="max-norm against the closed-form solution on interior probes",
            )
        )
        if o["require_decreasing"] and len(errors) > 1:
            dec = all(b < a for a, b in zip(errors, errors[1:]))
            verdict.checks.append(
                Check(
                    name="errors_strictly_decreasing",
                    passed=dec,
                    value=errors[-1],
                    threshold=errors[0],
                    detail=" -> ".join(f"{e:.3e}" for e in errors),
                )
            )
    if identity_rows:
        ident_csv = out_dir / f"{cfg.name}_identities.csv"
        write_csv(
            ident_csv,
            "level,hr,laplacian_identity_residual,v_equation_residual,first_row_slope",
            identity_rows,
        )
        verdict.artifacts.append(ident_csv.name)
        lap = [r[2] for r in identity_rows]
        veq = [r[3] for r in identity_rows]
        slopes = [r[4] for r in identity_rows]
        if len(identity_rows) > 1:
            verdict.checks.append(
                Check(
                    name="laplacian_identity_residual_decreasing",
                    passed=all(b < a for a, b in zip(lap, lap[1:])),
                    value=lap[-1],
                    threshold=lap[0],
                    detail=" -> ".join(f"{e:.3e}" for e in lap),
                )
            )
            verdict.checks.append(
                Check(
                    name="v_equation_residual_decreasing",
                    passed=all(b < a for a, b in zip(veq, veq[1:])),
                    value=veq[-1],
                    threshold=veq[0],
                    detail=" -> ".join(f"{e:.3e}" for e in veq),
                )
            )
        if len(slopes) > 1:
            drift = abs(slopes[-1] - slopes[-2]) / max(abs(slopes[-1]), 1e-300)
            verdict.checks.append(
                Check(
                    name="first_row_slope_stabilizes",
                    passed=drift <= 0.1,
                    value=drift,
                    threshold=0.1,
                    detail="relative change of (u_1-u_0)/h_r^2 across the last two levels",
                )
            )
    return _finish(verdict, out_dir)


def _run_reduction(cfg: ExperimentConfig, params: ProblemParams, out_dir: Path) -> Verdict:
    o = cfg.options
    if o["full_res"] % 4 != 0:
        raise ConfigError("field 'full_res': must be divisible by 4 for probe extraction")
    outer, exact = _outer_builtin(o["outer_data"], params, "conormal")
    if exact is None:
        raise ConfigError(
            "field 'outer_data': reduction equivalence needs a closed-form "
            "axisymmetric solution (characteristic, linear-x, quadratic-harmonic)"
        )

    def outer_full(*coords):
        xs = coords[: params.x_dims]
        radius = np.sqrt(sum(c**2 for c in coords[params.x_dims :]))
        return outer(*xs, radius)

    rows = []
    agreements = []
    for level in range(o["levels"]):
        fres = o["full_res"] * 2**level
        rres_x = o["dx_res"] * 2**level
        rres_r = o["dr_res"] * 2**level
        full = make_fullgrid(params, o["x_extent"], o["r_extent"], fres, fres)
        u_full = solve_full(full, params, outer_full, o["tol"])
        axi = make_axigrid(params, o["x_extent"], o["r_extent"], rres_x, rres_r)
        bc = BoundaryCondition(at_sigma0=Sigma0Condition.CONORMAL_HOMOGENEOUS, outer=outer)
        u_red, _ = solve(assemble(axi, params.reduced_weight_exponent, bc), o["tol"])
        # central probe block is itself a grid at half extent/resolution
        sub = make_fullgrid(
            params, 0.5 * o["x_extent"], 0.5 * o["r_extent"], fres // 2, fres // 2
        )
        lifted = lift_axisymmetric(u_red, sub)
        q = fres // 4
        block = u_full.values[tuple(slice(q, 3 * q) for _ in range(params.d))]
        scale = float(np.max(np.abs(block)))
        agreement = float(np.max(np.abs(block - lifted.values))) / (scale if scale else 1.0)
        agreements.append(agreement)
        rows.append((level, full.hx, axi.hx, u_full.grid.cell_count, agreement))

    errors_csv = out_dir / f"{cfg.name}_errors.csv"
    write_csv(errors_csv, "level,h_full,h_reduced,full_unknowns,rel_error", rows)
    verdict = Verdict(name=cfg.name, kind=cfg.kind, artifacts=[errors_csv.name])
    verdict.checks.append(
        Check(
            name="full_vs_lifted_reduced_agreement",
            passed=agreements[-1] <= o["max_rel_error"],
            value=agreements[-1],
            threshold=o["max_rel_error"],
            detail="relative max-norm over the central probe block",
        )
    )
    if len(agreements) > 1:
        verdict.checks.append(
            Check(
                name="agreement_strictly_improving",
                passed=all(b < a for a, b in zip(agreements, agreements[1:])),
                value=agreements[-1],
                threshold=agreements[0],
                detail=" -> ".join(f"{e:.3e}" for e in agreements),
            )
        )
    return _finish(verdict, out_dir)


# ----------------------------------------------------------------------
# extension-check


def run_extension_check(cfg: ExperimentConfig, out_dir: Path) -> Verdict:
    o = cfg.options
    params = ProblemParams(d=o["d"], n=o["n"], a=o["a"])
    s = params.s
    m = params.x_dims
    X = o["x_extent"]
    k = o["mode"]
    xi = k * np.pi / X
    xi_norm = xi * math.sqrt(m)  # product mode has |xi| = sqrt(m) xi
    d_an = params.extension_constant

    mass_rows = []
    worst_mass = 0.0
    for rho in (0.1, 1.0):
        mass = extension.kernel_mass(rho, params)
        mass_rows.append((rho, mass, abs(mass - 1.0)))
        worst_mass = max(worst_mass, abs(mass - 1.0))

    rows = []
    dtn_errors = []
    energy_errors = []
    closed_errors = []
    for level in range(o["levels"]):
        nx = o["dx_res"] * 2**level
        nr = o["dr_res"] * 2**level
        axi = make_axigrid(params, X, o["r_extent"], nx, nr)
        if m == 1:
            u = extension.sample_trace(lambda x: np.cos(xi * x), X, nx)
        else:
            u = extension.sample_trace(
                lambda x1, x2: np.cos(xi * x1) * np.cos(xi * x2), X, nx, x_dims=2
            )
        U = extension.extend(u, axi, params)
        est = extension.dtn(U, params)
        target = d_an * xi_norm ** (2.0 * s) * u.values
        dtn_err = float(
            np.linalg.norm(est.values - target) / np.linalg.norm(target)
        )
        dtn_errors.append(dtn_err)

        ratio = extension.extension_energy_ratio(u, params, axi)
        energy_err = abs(ratio / d_an - 1.0)
        energy_errors.append(energy_err)

        closed_err = None
        if m == 1 and abs(s - 0.5) < 1e-12:
            coords = axi.meshgrid()
            truth = np.exp(-xi * coords[-1]) * np.cos(xi * coords[0])
            closed_err = float(
                np.max(np.abs(U.field.values - truth)) / np.max(np.abs(truth))
            )
            closed_errors.append(closed_err)
        rows.append((level, nx, nr, dtn_err, ratio, energy_err, closed_err))

    table = out_dir / f"{cfg.name}_dtn.csv"
    write_csv(table, "level,dx_res,dr_res,dtn_rel_error,energy_ratio,energy_rel_error,closed_form_error", rows)
    mass_csv = out_dir / f"{cfg.name}_mass.csv"
    write_csv(mass_csv, "rho,mass,abs_error", mass_rows)

    verdict = Verdict(name=cfg.name, kind=cfg.kind, artifacts=[table.name, mass_csv.name])
    verdict.extra["extension_constant"] = d_an
    verdict.checks.append(
        Check("kernel_mass_unit", worst_mass <= o["mass_tol"], worst_mass, o["mass_tol"])
    )
    verdict.checks.append(
        Check(
            "dtn_vs_spectral_baseline",
            dtn_errors[0] <= o["dtn_tol"],
            dtn_errors[0],
            o["dtn_tol"],
            detail=f"single mode k={k}",
        )
    )
    if len(dtn_errors) > 1:
        verdict.checks.append(
            Check(
                "dtn_vs_spectral_refined",
                dtn_errors[-1] <= o["dtn_tol_refined"],
                dtn_errors[-1],
                o["dtn_tol_refined"],
            )
        )
    verdict.checks.append(
        Check(
            "energy_ratio_matches_constant",
            max(energy_errors) <= o["energy_tol"],
            max(energy_errors),
            o["energy_tol"],
            detail=f"target d = {d_an:.6g}",
        )
    )
    if closed_errors:
        verdict.checks.append(
            Check(
                "closed_form_extension",
                max(closed_errors) <= o["closed_form_tol"],
                max(closed_errors),
                o["closed_form_tol"],
                detail="exponential-profile solution at s = 1/2",
            )
        )
    return _finish(verdict, out_dir)


# ----------------------------------------------------------------------
# harnack


def multiscale_profile(roughness: float, depth: int):
    """Deterministic bounded ladder with Hoelder-type oscillation.

    Sum of cosines on a sqrt(2)-spaced frequency ladder with amplitudes
    lambda^{-roughness j}; probing at x = 0 (a common crest) yields a
    clean power-law oscillation sequence with exponent ~ roughness.
    """
    lam = math.sqrt(2.0)

    def profile(x):
        out = np.zeros_like(x)
        for j in range(depth + 1):
            out = out + lam ** (-roughness * j) * np.cos(lam**j * np.pi * x)
        return out

    return profile


def run_harnack(cfg: ExperimentConfig, out_dir: Path) -> Verdict:
    o = cfg.options
    params = ProblemParams(d=o["d"], n=o["n"], a=o["a"])
    sigma = params.characteristic_exponent
    b = harnack_exponent_b(params.a, params.n)
    cap = min(1.0, alpha_star(b, params.n))
    R = o["r_extent"]

    manufactured = o["data"] == "linear-x"
    if manufactured:
        outer = lambda x, r: x * r**sigma
    else:
        rough = multiscale_profile(o["roughness"], o["ladder_depth"])
        outer = lambda x, r: (r / R) ** sigma * rough(x)

    rows = []
    residuals = []
    roundtrips = []
    fit = None
    w = None
    for level in range(o["levels"]):
        axi = make_axigrid(
            params, o["x_extent"], R, o["dx_res"] * 2**level, o["dr_res"] * 2**level
        )
        bc = BoundaryCondition(at_sigma0=Sigma0Condition.DIRICHLET_ZERO, outer=outer)
        u, _ = solve(assemble(axi, params.reduced_weight_exponent, bc), o["tol"])
        w = analysis.harnack_ratio(u, params)
        res = analysis.harnack_residual(w, params)
        residuals.append(res)
        rebuilt = w.values * axi.rs**sigma
        scale = max(float(np.max(np.abs(u.values))), 1e-300)
        roundtrip = float(np.max(np.abs(rebuilt - u.values))) / scale
        roundtrips.append(roundtrip)
        fit, _ = analysis.harnack_regularity_check(
            w, params, k_min=o["k_min"], k_max=o["k_max"], enforce=False
        )
        rows.append((level, axi.hx, res, roundtrip, fit.alpha_hat, fit.r2))

    res_csv = out_dir / f"{cfg.name}_residuals.csv"
    write_csv(res_csv, "level,hx,quotient_residual,roundtrip,alpha_hat,r2", rows)
    holder_csv = out_dir / f"{cfg.name}_holder.csv"
    analysis.write_holder_csv(fit, holder_csv)
    ratio_csv = out_dir / f"{cfg.name}_ratio_field.csv"
    write_field_csv(w, ratio_csv)

    verdict = Verdict(
        name=cfg.name,
        kind=cfg.kind,
        artifacts=[res_csv.name, holder_csv.name, ratio_csv.name],
        extra={"cap": cap, "quotient_weight_exponent": b + params.n - 1.0},
    )
    if len(residuals) > 1:
        verdict.checks.append(
            Check(
                "quotient_residual_decreasing",
                all(y < x for x, y in zip(residuals, residuals[1:])),
                residuals[-1],
                residuals[0],
                detail=" -> ".join(f"{e:.3e}" for e in residuals),
            )
        )
    verdict.checks.append(
        Check("roundtrip_exact", max(roundtrips) <= 1e-13, max(roundtrips), 1e-13)
    )
    if not manufactured:
        verdict.checks.append(
            Check(
                "oscillation_exponent_below_cap",
                fit.alpha_hat <= cap + o["cap_margin"],
                fit.alpha_hat,
                cap + o["cap_margin"],
                detail=f"regularity cap min(1, alpha_star(b, n)) = {cap:.4f}",
            )
        )
        verdict.checks.append(
            Check("oscillation_fit_quality", fit.r2 >= o["r2_min"], fit.r2, o["r2_min"])
        )
    return _finish(verdict, out_dir)


# ----------------------------------------------------------------------
# capacity


def run_capacity(cfg: ExperimentConfig, out_dir: Path) -> Verdict:
    o = cfg.options
    a, n = o["a"], o["n"]
    regime = classify_regime(a, n)
    d_for_params = max(n, 2)
    params = ProblemParams(d=d_for_params, n=n, a=a)
    eps = np.geomspace(o["eps_max"], o["eps_min"], o["eps_count"])
    profile = analysis.capacity_profile(params, eps, o["radial_points"])
    rows = []
    rel_errors = []
    for e, cap in profile:
        ref = analysis.closed_form_capacity(a, n, e)
        rel = abs(cap / ref - 1.0)
        rel_errors.append(rel)
        rows.append((e, cap, ref, rel))
    table = out_dir / f"{cfg.name}_capacity.csv"
    write_csv(table, "eps,cap,closed_form,rel_err", rows)

    caps = np.array([cap for _, cap in profile])
    total = a + n
    if regime is Regime.MID_RANGE:
        limit_verdict = "positive-finite"
        limit_value = 2.0 - total
        rate = caps[-1] / limit_value
        rate_target, rate_ok = 1.0, abs(caps[-1] / limit_value - 1.0) <= o["rate_tol"]
    elif regime is Regime.SUPERDEGENERATE:
        limit_verdict = "vanishing"
        limit_value = 0.0
        if total == 2.0:
            # logarithmic decay: 1/cap grows like log(1/eps) with unit slope
            inv = 1.0 / caps
            logs = np.log(1.0 / eps)
            rate = float(np.polyfit(logs, inv, 1)[0])
            rate_target = 1.0
        else:
            rate = float(np.polyfit(np.log(eps), np.log(caps), 1)[0])
            rate_target = total - 2.0
        rate_ok = abs(rate / rate_target - 1.0) <= o["rate_tol"]
    else:
        # the radial surrogate stays finite for a+n <= 0; the divergence
        # verdict comes from the regime classification, not this sweep
        limit_verdict = "diverging (regime-classified; not surrogate-verified)"
        limit_value = float("inf")
        rate, rate_target, rate_ok = None, None, True

    verdict = Verdict(
        name=cfg.name,
        kind=cfg.kind,
        artifacts=[table.name],
        extra={
            "regime": regime.value,
            "limit_verdict": limit_verdict,
            "limit_value": limit_value,
            "fitted_rate": rate,
            "rate_target": rate_target,
        },
    )
    verdict.checks.append(
        Check(
            "minimizer_matches_closed_form",
            max(rel_errors) <= o["match_tol"],
            max(rel_errors),
            o["match_tol"],
        )
    )
    if rate_target is not None:
        verdict.checks.append(
            Check(
                "limit_rate",
                rate_ok,
                rate,
                rate_target,
                detail=f"{limit_verdict}; fitted against the predicted decay law",
            )
        )
    return _finish(verdict, out_dir)
