"""Experiment configuration: schema, parsing, validation and defaults."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields

from jsonschema import Draft202012Validator

EXPERIMENTS = (
    "classical",
    "pump",
    "ensemble",
    "spectrum",
    "parity-scan",
    "scaling",
    "kerr-convergence",
    "extension-convergence",
)

_INT = {"type": "integer"}
_NUM = {"type": "number"}
_INT_LIST = {"type": "array", "items": {"type": "integer", "minimum": 1}, "minItems": 1}

# key -> (json schema, default, description)
KEYS: dict[str, tuple[dict, object, str]] = {
    "experiment": ({"enum": list(EXPERIMENTS)}, None, "which study to run"),
    "n": ({**_INT, "minimum": 1, "maximum": 12}, 3, "squeezing order"),
    "model": ({"enum": ["classical", "pump"]}, "classical", "model family for spectrum and parity-scan"),
    "m": ({**_INT, "minimum": 2, "maximum": 1_000_000}, None, "sector size (classical model)"),
    "D": ({**_INT, "minimum": 2, "maximum": 10_000_000}, None, "total Fock dimension; mapped to m = ceil(D/n)"),
    "N": ({**_INT, "minimum": 1, "maximum": 100_000}, None, "initial pump photon number"),
    "alpha_sq": ({**_NUM, "exclusiveMinimum": 0, "maximum": 10_000}, None, "coherent pump mean photon number"),
    "epsilon": ({**_NUM, "exclusiveMinimum": 0, "exclusiveMaximum": 1}, 1e-8, "discarded Poisson tail mass"),
    "N_cap": ({**_INT, "minimum": 1, "maximum": 100_000}, 5000, "largest pump photon number an ensemble may use"),
    "chi": ({**_NUM, "minimum": -100, "maximum": 100}, 0.0, "Kerr coefficient of chi*(a^dag a)^2"),
    "r_max": ({**_NUM, "exclusiveMinimum": 0, "maximum": 100}, 3.0, "largest (effective) squeezing parameter"),
    "r_points": ({**_INT, "minimum": 2, "maximum": 100_000}, 301, "number of grid points"),
    "r_tilde_max": ({**_NUM, "exclusiveMinimum": 0, "maximum": 100}, None, "pump-model grid end; default r_max/sqrt(N)"),
    "sizes": (_INT_LIST, None, "sizes to sweep (m, or N for the pump model)"),
    "N_values": (_INT_LIST, None, "pump photon numbers for the scaling study"),
    "J": ({**_INT, "minimum": 1, "maximum": 1000}, 20, "low-lying eigenvalues per size"),
    "tolerance": ({**_NUM, "exclusiveMinimum": 0, "maximum": 1e-4}, 1e-10, "propagator target accuracy"),
    "krylov_max_dim": ({**_INT, "minimum": 4, "maximum": 1024}, 48, "Krylov subspace size per substep"),
    "max_substep": ({**_NUM, "exclusiveMinimum": 0}, None, "cap on |dr|*||H|| per Krylov substep"),
    "method": ({"enum": ["spectral", "krylov", "reference"]}, "spectral", "propagator"),
    "kerr_tolerance": ({**_NUM, "exclusiveMinimum": 0, "maximum": 1}, 1e-6, "adjacent-gap convergence tolerance"),
    "distribution_at": ({"type": "array", "items": _NUM}, None, "r values at which to dump photon distributions"),
    "output_dir": ({"type": "string", "minLength": 1}, "out", "output directory"),
    "workers": ({**_INT, "minimum": 1, "maximum": 256}, 1, "concurrent sweep members"),
}

# keys each experiment needs, beyond those with defaults
REQUIRED = {
    "classical": [],
    "pump": ["N"],
    "ensemble": ["alpha_sq"],
    "spectrum": [],
    "parity-scan": ["sizes"],
    "scaling": ["N_values"],
    "kerr-convergence": ["sizes"],
    "extension-convergence": ["sizes"],
}

SCHEMA = {
    "type": "object",
    "properties": {k: v[0] for k, v in KEYS.items()},
    "required": ["experiment"],
    "additionalProperties": False,
}


class ConfigError(ValueError):
    """Invalid configuration; ``errors`` lists every problem found."""

    def __init__(self, errors: list[str]):
        super().__init__("; ".join(errors))
        self.errors = errors


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    n: int = 3
    model: str = "classical"
    m: int | None = None
    D: int | None = None
    N: int | None = None
    alpha_sq: float | None = None
    epsilon: float = 1e-8
    N_cap: int = 5000
    chi: float = 0.0
    r_max: float = 3.0
    r_points: int = 301
    r_tilde_max: float | None = None
    sizes: tuple[int, ...] | None = None
    N_values: tuple[int, ...] | None = None
    J: int = 20
    tolerance: float = 1e-10
    krylov_max_dim: int = 48
    max_substep: float | None = None
    method: str = "spectral"
    kerr_tolerance: float = 1e-6
    distribution_at: tuple[float, ...] | None = None
    output_dir: str = "out"
    workers: int = 1
    extra: dict = field(default_factory=dict, compare=False, repr=False)

    def to_dict(self) -> dict:
        d = asdict(self)
        d.pop("extra")
        return {k: (list(v) if isinstance(v, tuple) else v) for k, v in d.items() if v is not None}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def replace(self, **changes) -> "ExperimentConfig":
        d = self.to_dict()
        d.update({k: v for k, v in changes.items() if v is not None})
        return from_dict(d)


def _path(error) -> str:
    parts = list(error.absolute_path)
    if error.validator == "additionalProperties":
        extra = sorted(set(error.instance) - set(KEYS))
        return "." + (extra[0] if extra else "")
    return "." + ".".join(str(p) for p in parts) if parts else "."


def validate(data) -> list[str]:
    """Every schema and cross-field violation, each as '<path>: message'."""
    if not isinstance(data, dict):
        return [".: config must be a JSON object"]
    errors = []
    for err in sorted(Draft202012Validator(SCHEMA).iter_errors(data), key=lambda e: (list(e.absolute_path), e.message)):
        if err.validator == "additionalProperties":
            for key in sorted(set(data) - set(KEYS)):
                errors.append(f".{key}: unknown key")
        else:
            errors.append(f"{_path(err)}: {err.message}")
    exp = data.get("experiment")
    if exp in REQUIRED:
        for key in REQUIRED[exp]:
            if key not in data:
                errors.append(f".{key}: required for experiment {exp!r}")
        if exp == "classical" and "m" not in data and "D" not in data:
            errors.append(".m: classical experiment needs m or D")
        if exp == "spectrum" and data.get("model", "classical") == "classical" and "m" not in data and "D" not in data:
            errors.append(".m: spectrum of the classical model needs m or D")
        if exp == "spectrum" and data.get("model") == "pump" and "N" not in data:
            errors.append(".N: spectrum of the pump model needs N")
        if "m" in data and "D" in data:
            errors.append(".D: give either m or D, not both")
        if exp == "kerr-convergence" and data.get("chi", 0) == 0:
            errors.append(".chi: kerr-convergence needs chi != 0")
        sizes = data.get("sizes")
        if isinstance(sizes, list) and all(isinstance(s, int) for s in sizes):
            if exp in ("parity-scan", "kerr-convergence"):
                if len(set(sizes)) < (4 if exp == "parity-scan" else 2):
                    errors.append(".sizes: too few distinct sizes")
                if len({s % 2 for s in sizes}) < 2:
                    errors.append(".sizes: must include both parities")
            if exp == "extension-convergence":
                if len(set(sizes)) < 4:
                    errors.append(".sizes: need at least 4 sizes")
                if len({s % 2 for s in sizes}) != 1:
                    errors.append(".sizes: must share one parity")
            if exp in ("classical", "parity-scan", "kerr-convergence", "extension-convergence") and data.get(
                "model", "classical"
            ) == "classical" and min(sizes) < 2:
                errors.append(".sizes: sector sizes must be >= 2")
        nv = data.get("N_values")
        if exp == "scaling" and isinstance(nv, list) and all(isinstance(v, int) for v in nv):
            for parity in (0, 1):
                cls = {v for v in nv if v % 2 == parity}
                if cls and len(cls) < 6:
                    errors.append(f".N_values: {'even' if parity == 0 else 'odd'} class needs at least 6 values")
    return errors


def from_dict(data: dict) -> ExperimentConfig:
    errors = validate(data)
    if errors:
        raise ConfigError(errors)
    kwargs = {}
    for f in fields(ExperimentConfig):
        if f.name in data:
            v = data[f.name]
            kwargs[f.name] = tuple(v) if isinstance(v, list) else v
    return ExperimentConfig(**kwargs)


def parse_config(text: str) -> ExperimentConfig:
    """Parse and validate a JSON experiment description.

    Raises :class:`ConfigError` listing every problem; syntax errors carry
    line and column.
    """
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError([f"syntax error at line {exc.lineno}, column {exc.colno}: {exc.msg}"]) from exc
    return from_dict(data)


def list_schema() -> str:
    """Human-readable table of every config key."""
    lines = ["squeezelab experiment config (single JSON object)", ""]
    for key, (schema, default, desc) in KEYS.items():
        if "enum" in schema:
            kind = "one of " + "|".join(schema["enum"])
            rng = ""
        else:
            kind = schema["type"]
            if kind == "array":
                kind = f"array of {schema['items']['type']}"
            bounds = []
            for name, sym in (("minimum", ">="), ("exclusiveMinimum", ">"), ("maximum", "<="), ("exclusiveMaximum", "<")):
                if name in schema:
                    bounds.append(f"{sym} {schema[name]}")
            rng = ", ".join(bounds)
        dflt = "required" if key == "experiment" else ("none" if default is None else json.dumps(default))
        lines.append(f"{key:16s} {kind:40s} default={dflt:10s} {rng:22s} {desc}")
    lines.append("")
    lines.append("experiments and their required keys:")
    for exp in EXPERIMENTS:
        req = ", ".join(REQUIRED[exp]) or "-"
        if exp == "classical":
            req = "m or D"
        lines.append(f"  {exp:24s} {req}")
    return "\n".join(lines) + "\n"
