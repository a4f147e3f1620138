"""Flat key=value experiment configurations.

One experiment per file: ``kind`` selects the pipeline, the remaining
keys parametrize it.  Lines are ``key = value``; ``#`` starts a comment.
Unknown keys are rejected, every value is type-checked, and regime
preconditions are validated before any allocation, so a bad config never
gets as far as a solver.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigError
from .params import ProblemParams, Regime, classify_regime

_KINDS = ("exponents", "solve", "extension-check", "harnack", "capacity")

# key -> (type, default); None default means required
_COMMON_KEYS = {
    "kind": (str, None),
    "name": (str, None),
    "seed": (int, 0),
    "tol": (float, 1e-10),
}

_SCHEMAS = {
    "exponents": {
        "a_min": (float, -6.0),
        "a_max": (float, 2.0),
        "a_step": (float, 0.25),
        "n_values": ("int_list", [2, 3, 4, 5, 6]),
    },
    "solve": {
        "problem": (str, None),  # conormal | conormal-flux | dirichlet | reduction-equivalence
        "d": (int, None),
        "n": (int, None),
        "a": (float, None),
        "x_extent": (float, 1.0),
        "r_extent": (float, 1.0),
        "dx_res": (int, 64),
        "dr_res": (int, 64),
        "levels": (int, 1),
        "outer_data": (str, "characteristic"),
        "flux_g": (str, "constant"),
        "flux_amplitude": (float, None),
        "max_rel_error": (float, 0.05),
        "require_decreasing": (bool, False),
        "check_identities": (bool, False),
        "full_res": (int, 16),
        "write_field": (bool, True),
    },
    "extension-check": {
        "d": (int, None),
        "n": (int, None),
        "a": (float, None),
        "x_extent": (float, 1.0),
        "r_extent": (float, 1.0),
        "dx_res": (int, 256),
        "dr_res": (int, 32),
        "levels": (int, 2),
        "mode": (int, 1),
        "mass_tol": (float, 1e-6),
        "dtn_tol": (float, 0.05),
        "dtn_tol_refined": (float, 0.02),
        "energy_tol": (float, 0.05),
        "closed_form_tol": (float, 0.01),
    },
    "harnack": {
        "d": (int, None),
        "n": (int, None),
        "a": (float, None),
        "x_extent": (float, 1.0),
        "r_extent": (float, 0.03125),
        "dx_res": (int, 512),
        "dr_res": (int, 16),
        "levels": (int, 3),
        "data": (str, "rough-multiscale"),  # or linear-x
        "roughness": (float, 0.55),
        "ladder_depth": (int, 12),
        "k_min": (int, 2),
        "k_max": (int, 5),
        "cap_margin": (float, 0.1),
        "r2_min": (float, 0.95),
    },
    "capacity": {
        "n": (int, 2),
        "a": (float, None),
        "eps_min": (float, 1e-6),
        "eps_max": (float, 0.1),
        "eps_count": (int, 11),
        "radial_points": (int, 10000),
        "match_tol": (float, 1e-6),
        "rate_tol": (float, 0.05),
    },
}

_SOLVE_PROBLEMS = ("conormal", "conormal-flux", "dirichlet", "reduction-equivalence")
_OUTER_DATA = ("characteristic", "linear-x", "quadratic-harmonic", "constant", "generic-smooth")
_FLUX_BUILTINS = ("constant", "cosine", "bump")
_HARNACK_DATA = ("rough-multiscale", "linear-x")


@dataclass
class ExperimentConfig:
    kind: str
    name: str
    options: dict = field(default_factory=dict)

    def __getitem__(self, key):
        return self.options[key]

    def get(self, key, default=None):
        return self.options.get(key, default)


def _parse_value(key: str, raw: str, typ):
    try:
        if typ is str:
            return raw
        if typ is int:
            val = int(raw)
            return val
        if typ is float:
            return float(raw)
        if typ is bool:
            low = raw.lower()
            if low in ("true", "yes", "1", "on"):
                return True
            if low in ("false", "no", "0", "off"):
                return False
            raise ValueError(raw)
        if typ == "int_list":
            return [int(tok) for tok in raw.replace(",", " ").split()]
        if typ == "float_list":
            return [float(tok) for tok in raw.replace(",", " ").split()]
    except ValueError as exc:
        raise ConfigError(f"field '{key}': cannot parse {raw!r} as {typ}") from exc
    raise ConfigError(f"field '{key}': unsupported type spec {typ!r}")


def parse_config_text(text: str, default_name: str = "experiment") -> ExperimentConfig:
    pairs = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line.rstrip()!r}")
        key, _, raw = stripped.partition("=")
        key = key.strip()
        raw = raw.strip()
        if not key or not raw:
            raise ConfigError(f"line {lineno}: empty key or value")
        if key in pairs:
            raise ConfigError(f"line {lineno}: duplicate key '{key}'")
        pairs[key] = raw

    kind = pairs.get("kind")
    if kind is None:
        raise ConfigError("field 'kind': missing (one of %s)" % ", ".join(_KINDS))
    if kind not in _KINDS:
        raise ConfigError(f"field 'kind': unknown experiment kind {kind!r}")

    schema = dict(_COMMON_KEYS)
    schema.update(_SCHEMAS[kind])
    unknown = sorted(set(pairs) - set(schema))
    if unknown:
        raise ConfigError(f"unknown keys for kind '{kind}': {', '.join(unknown)}")

    options = {}
    for key, (typ, default) in schema.items():
        if key in pairs:
            options[key] = _parse_value(key, pairs[key], typ)
        elif default is not None:
            options[key] = default
        elif key in ("name",):
            options[key] = default_name
        elif key in ("flux_amplitude",):
            options[key] = None
        elif key == "kind":
            options[key] = kind
        else:
            raise ConfigError(f"field '{key}': required for kind '{kind}'")

    cfg = ExperimentConfig(kind=kind, name=options.pop("name"), options=options)
    _validate(cfg)
    return cfg


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    return parse_config_text(text, default_name=path.stem)


def _validate(cfg: ExperimentConfig) -> None:
    o = cfg.options
    if cfg.kind == "exponents":
        if o["a_step"] <= 0:
            raise ConfigError("field 'a_step': must be positive")
        if o["a_min"] >= o["a_max"]:
            raise ConfigError("field 'a_min': must be below a_max")
        if any(n < 2 for n in o["n_values"]):
            raise ConfigError("field 'n_values': codimensions must be >= 2")
        return

    if cfg.kind == "capacity":
        if not (0.0 < o["eps_min"] <= o["eps_max"] < 1.0):
            raise ConfigError("fields 'eps_min'/'eps_max': need 0 < eps_min <= eps_max < 1")
        if o["radial_points"] < 100:
            raise ConfigError("field 'radial_points': at least 100")
        classify_regime(o["a"], o["n"])  # raises on bad n
        return

    # remaining kinds carry a full (d, n, a) triple
    try:
        params = ProblemParams(d=o["d"], n=o["n"], a=o["a"])
    except Exception as exc:
        raise ConfigError(f"invalid parameter triple: {exc}") from exc

    if cfg.kind == "solve":
        if o["problem"] not in _SOLVE_PROBLEMS:
            raise ConfigError(
                f"field 'problem': unknown value {o['problem']!r} "
                f"(expected one of {', '.join(_SOLVE_PROBLEMS)})"
            )
        if o["outer_data"] not in _OUTER_DATA:
            raise ConfigError(f"field 'outer_data': unknown value {o['outer_data']!r}")
        if o["flux_g"] not in _FLUX_BUILTINS:
            raise ConfigError(f"field 'flux_g': unknown value {o['flux_g']!r}")
        if o["levels"] < 1:
            raise ConfigError("field 'levels': at least 1")
        total = params.a_plus_n
        if o["problem"] == "conormal-flux" and not (0.0 < total < 2.0):
            regime = params.regime.value
            raise ConfigError(
                "field 'problem': conormal flux data requires the mid-range "
                f"regime 0 < a+n < 2, got a+n = {total:g} ({regime}); the thin "
                "set's weighted capacity forbids flux data there"
            )
        if o["problem"] == "dirichlet" and total >= 2.0:
            raise ConfigError(
                "field 'problem': Dirichlet data on the thin set requires "
                f"a+n < 2, got a+n = {total:g} (zero weighted capacity)"
            )
        if o["problem"] in ("conormal", "conormal-flux") and total <= 0.0:
            raise ConfigError(
                f"field 'problem': conormal problems need a+n > 0, got {total:g}"
            )
        if o["problem"] == "reduction-equivalence":
            if params.regime is Regime.SUPERSINGULAR:
                raise ConfigError(
                    "field 'problem': full-grid cross-validation is unsupported "
                    "in the supersingular regime"
                )
            if params.d > 4:
                raise ConfigError("field 'd': full grids support d <= 4")
        if params.x_dims not in (1, 2):
            raise ConfigError("reduced solves support d - n in {1, 2}")
        return

    if cfg.kind == "extension-check":
        if params.regime is not Regime.MID_RANGE:
            raise ConfigError(
                "extension checks require the mid-range regime 0 < a+n < 2, "
                f"got a+n = {params.a_plus_n:g} ({params.regime.value})"
            )
        if params.d + params.a < 2.0 - 1e-12:
            raise ConfigError(
                f"extension checks need d + a >= 2, got {params.d + params.a:g}"
            )
        if params.x_dims not in (1, 2):
            raise ConfigError("extension checks support d - n in {1, 2}")
        if o["mode"] < 1:
            raise ConfigError("field 'mode': at least 1")
        return

    if cfg.kind == "harnack":
        if params.a_plus_n >= 2:
            raise ConfigError(
                "the quotient pipeline requires a+n < 2, got "
                f"a+n = {params.a_plus_n:g} ({params.regime.value})"
            )
        if o["data"] not in _HARNACK_DATA:
            raise ConfigError(f"field 'data': unknown value {o['data']!r}")
        if not (0.0 < o["roughness"] < 1.0):
            raise ConfigError("field 'roughness': must lie in (0, 1)")
        if params.x_dims != 1:
            raise ConfigError("the quotient pipeline runs on d - n = 1")
        return
