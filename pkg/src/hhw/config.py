"""Strict JSON configuration for scenario and sweep runs.

Configs are versioned ("schema_version": 1) and unknown fields are
rejected so a typo in a parameter name cannot silently produce wrong
physics.  Validation errors always name the offending field with a dotted
path.  JSON Schema documents for these files ship under hhw/schemas/.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .errors import ConfigError
from .integrate import IntegratorSpec, KINDS
from .model import (
    WILSON_VALUES,
    MemristiveParams,
    ModelParams,
    NetworkState,
)

__all__ = [
    "SCHEMA_VERSION",
    "OUTPUT_KINDS",
    "ScenarioConfig",
    "SweepConfig",
    "load_scenario",
    "load_sweep",
    "parse_scenario",
    "parse_sweep",
]

SCHEMA_VERSION = 1
OUTPUT_KINDS = ("trajectory_csv", "gaps_csv", "report_json", "plot_svg")
SWEEP_VARIABLES = ("P", "alpha", "n")

# JSON keys for ModelParams; "lambda" maps to the lam attribute.
_BASE_PARAM_KEYS = {
    "n": "n", "a0": "a0", "a1": "a1", "a2": "a2", "g_K": "g_K",
    "E_Na": "E_Na", "E_K": "E_K", "H": "H", "lambda": "lam",
    "tau_K": "tau_K", "J": "J", "P": "P",
}
_MEM_PARAM_KEYS = ("alpha", "k", "beta", "gamma", "b")
_OPTIONAL_BASE = ("J", "P")

_INTEGRATOR_KEYS = (
    "kind", "dt", "t_end", "record_stride", "abs_tol", "rel_tol",
    "corrector_sweeps", "memory_window",
)


@dataclass
class ScenarioConfig:
    model: str  # "classical" | "memristive"
    params: ModelParams | MemristiveParams
    integrator: IntegratorSpec
    outputs: tuple[str, ...]
    output_dir: Path
    initial_state: Optional[NetworkState] = None
    initial_seed: Optional[int] = None
    initial_radius: Optional[float] = None
    raw: dict = field(default_factory=dict)

    @property
    def random_initial(self) -> bool:
        return self.initial_state is None


@dataclass
class SweepConfig:
    base: ScenarioConfig
    sweep_variable: str
    values: tuple[float, ...]
    replicates: int
    seed: int
    raw: dict = field(default_factory=dict)


def _require(obj: dict, key: str, path: str):
    if key not in obj:
        raise ConfigError("missing required field", field=f"{path}{key}")
    return obj[key]


def _reject_unknown(obj: dict, allowed, path: str):
    for key in obj:
        if key not in allowed:
            raise ConfigError("unknown field", field=f"{path}{key}")


def _as_number(value, path: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError("expected a number", field=path)
    return float(value)


def _as_int(value, path: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError("expected an integer", field=path)
    return value


def _check_schema_version(obj: dict, path: str):
    version = _require(obj, "schema_version", path)
    if version != SCHEMA_VERSION:
        raise ConfigError(
            f"unsupported schema_version {version!r} (expected {SCHEMA_VERSION})",
            field=f"{path}schema_version",
        )


def _parse_params(obj: dict, model: str, path: str):
    if not isinstance(obj, dict):
        raise ConfigError("params must be an object", field=path.rstrip("."))
    obj = dict(obj)
    preset = obj.pop("preset", None)
    merged: dict = {}
    if preset is not None:
        if preset != "wilson":
            raise ConfigError(f"unknown preset {preset!r}", field=f"{path}preset")
        for attr, value in WILSON_VALUES.items():
            json_key = "lambda" if attr == "lam" else attr
            merged[json_key] = value
        merged["J"] = WILSON_VALUES["J"]
        merged["P"] = 0.0

    allowed = set(_BASE_PARAM_KEYS)
    if model == "memristive":
        allowed |= set(_MEM_PARAM_KEYS)
    _reject_unknown(obj, allowed, path)
    merged.update(obj)

    kwargs = {}
    for json_key, attr in _BASE_PARAM_KEYS.items():
        if json_key == "n":
            kwargs["n"] = _as_int(_require(merged, "n", path), f"{path}n")
            continue
        if json_key in _OPTIONAL_BASE and json_key not in merged:
            continue
        kwargs[attr] = _as_number(_require(merged, json_key, path), f"{path}{json_key}")
    try:
        base = ModelParams(**kwargs)
    except Exception as exc:
        raise ConfigError(str(exc), field=f"{path.rstrip('.')}") from exc

    if model == "classical":
        for key in _MEM_PARAM_KEYS:
            if key in merged:
                raise ConfigError(
                    "memristive parameter not allowed in a classical config",
                    field=f"{path}{key}",
                )
        return base

    gamma_raw = _require(merged, "gamma", path)
    if isinstance(gamma_raw, (int, float)) and not isinstance(gamma_raw, bool):
        gamma = (float(gamma_raw),) * base.n
    elif isinstance(gamma_raw, list):
        gamma = tuple(_as_number(g, f"{path}gamma[{i}]") for i, g in enumerate(gamma_raw))
    else:
        raise ConfigError("gamma must be a number or a list", field=f"{path}gamma")
    try:
        return MemristiveParams(
            base=base,
            alpha=_as_number(_require(merged, "alpha", path), f"{path}alpha"),
            k=_as_number(_require(merged, "k", path), f"{path}k"),
            beta=_as_number(_require(merged, "beta", path), f"{path}beta"),
            gamma=gamma,
            b=_as_number(_require(merged, "b", path), f"{path}b"),
        )
    except ConfigError:
        raise
    except Exception as exc:
        raise ConfigError(str(exc), field=f"{path.rstrip('.')}") from exc


def _parse_integrator(obj: dict, model: str, path: str) -> IntegratorSpec:
    if not isinstance(obj, dict):
        raise ConfigError("integrator must be an object", field=path.rstrip("."))
    _reject_unknown(obj, _INTEGRATOR_KEYS, path)
    kind = _require(obj, "kind", path)
    if kind not in KINDS:
        raise ConfigError(f"unknown integrator kind {kind!r}", field=f"{path}kind")
    if model == "memristive" and kind != "caputo_pc":
        raise ConfigError(
            "the memristive model needs the caputo_pc integrator",
            field=f"{path}kind",
        )
    if model == "classical" and kind == "caputo_pc":
        raise ConfigError(
            "caputo_pc applies to the memristive model only",
            field=f"{path}kind",
        )
    # toolkit defaults: 200 ms at dt=0.01 for the classical model, 50 ms at
    # dt=0.005 for the fractional one (memory cost; mind the stability
    # budget in the README for small alpha or strong coupling)
    if model == "classical":
        default_dt, default_t_end = 0.01, 200.0
    else:
        default_dt, default_t_end = 0.005, 50.0
    kwargs = {
        "kind": kind,
        "dt": _as_number(obj.get("dt", default_dt), f"{path}dt"),
        "t_end": _as_number(obj.get("t_end", default_t_end), f"{path}t_end"),
    }
    if "record_stride" in obj:
        kwargs["record_stride"] = _as_int(obj["record_stride"], f"{path}record_stride")
    for key in ("abs_tol", "rel_tol"):
        if key in obj:
            kwargs[key] = _as_number(obj[key], f"{path}{key}")
    if "corrector_sweeps" in obj:
        kwargs["corrector_sweeps"] = _as_int(obj["corrector_sweeps"], f"{path}corrector_sweeps")
    if "memory_window" in obj and obj["memory_window"] is not None:
        kwargs["memory_window"] = _as_number(obj["memory_window"], f"{path}memory_window")
    try:
        return IntegratorSpec(**kwargs)
    except Exception as exc:
        raise ConfigError(str(exc), field=path.rstrip(".")) from exc


def _parse_initial(obj: dict, model: str, n: int, path: str):
    if not isinstance(obj, dict):
        raise ConfigError("initial must be an object", field=path.rstrip("."))
    has_state = "state" in obj
    has_random = "seed" in obj or "radius" in obj
    if has_state and has_random:
        raise ConfigError(
            "give either an explicit state or a (seed, radius) pair, not both",
            field=path.rstrip("."),
        )
    if has_state:
        _reject_unknown(obj, ("state",), path)
        state = obj["state"]
        if not isinstance(state, dict):
            raise ConfigError("state must be an object", field=f"{path}state")
        _reject_unknown(state, ("V", "R", "rho"), f"{path}state.")
        V = _require(state, "V", f"{path}state.")
        R = _require(state, "R", f"{path}state.")
        if not (isinstance(V, list) and isinstance(R, list)):
            raise ConfigError("V and R must be lists", field=f"{path}state")
        if len(V) != n or len(R) != n:
            raise ConfigError(
                f"V and R must each have n={n} entries", field=f"{path}state"
            )
        rho = state.get("rho")
        if model == "memristive":
            if rho is None:
                raise ConfigError(
                    "memristive initial state needs rho", field=f"{path}state.rho"
                )
            rho = _as_number(rho, f"{path}state.rho")
        elif rho is not None:
            raise ConfigError(
                "classical initial state must not carry rho", field=f"{path}state.rho"
            )
        ns = NetworkState(
            V=[_as_number(v, f"{path}state.V[{i}]") for i, v in enumerate(V)],
            R=[_as_number(r, f"{path}state.R[{i}]") for i, r in enumerate(R)],
            rho=rho,
        )
        return ns, None, None
    if not has_random:
        raise ConfigError(
            "initial needs either state or (seed, radius)", field=path.rstrip(".")
        )
    _reject_unknown(obj, ("seed", "radius"), path)
    seed = _as_int(_require(obj, "seed", path), f"{path}seed")
    if seed < 0:
        raise ConfigError("seed must be a nonnegative integer", field=f"{path}seed")
    radius = _as_number(_require(obj, "radius", path), f"{path}radius")
    if not radius > 0:
        raise ConfigError("radius must be > 0", field=f"{path}radius")
    return None, seed, radius


def parse_scenario(obj: dict, path: str = "") -> ScenarioConfig:
    if not isinstance(obj, dict):
        raise ConfigError("config must be a JSON object", field=path or "<root>")
    allowed = (
        "schema_version", "model", "params", "initial", "integrator",
        "outputs", "output_dir",
    )
    _reject_unknown(obj, allowed, path)
    _check_schema_version(obj, path)
    model = _require(obj, "model", path)
    if model not in ("classical", "memristive"):
        raise ConfigError(f"model must be classical or memristive, got {model!r}",
                          field=f"{path}model")
    params = _parse_params(_require(obj, "params", path), model, f"{path}params.")
    spec = _parse_integrator(_require(obj, "integrator", path), model, f"{path}integrator.")
    n = params.n if isinstance(params, ModelParams) else params.base.n
    state, seed, radius = _parse_initial(_require(obj, "initial", path), model, n, f"{path}initial.")
    outputs_raw = obj.get("outputs", [])
    if not isinstance(outputs_raw, list):
        raise ConfigError("outputs must be a list", field=f"{path}outputs")
    for i, o in enumerate(outputs_raw):
        if o not in OUTPUT_KINDS:
            raise ConfigError(f"unknown output kind {o!r}", field=f"{path}outputs[{i}]")
    output_dir = obj.get("output_dir", "out")
    if not isinstance(output_dir, str):
        raise ConfigError("output_dir must be a string", field=f"{path}output_dir")
    return ScenarioConfig(
        model=model,
        params=params,
        integrator=spec,
        outputs=tuple(dict.fromkeys(outputs_raw)),
        output_dir=Path(output_dir),
        initial_state=state,
        initial_seed=seed,
        initial_radius=radius,
        raw=obj,
    )


def parse_sweep(obj: dict) -> SweepConfig:
    if not isinstance(obj, dict):
        raise ConfigError("config must be a JSON object", field="<root>")
    allowed = ("schema_version", "base", "sweep_variable", "values", "replicates", "seed")
    _reject_unknown(obj, allowed, "")
    _check_schema_version(obj, "")
    base_obj = _require(obj, "base", "")
    base = parse_scenario(base_obj, path="base.")
    variable = _require(obj, "sweep_variable", "")
    if variable not in SWEEP_VARIABLES:
        raise ConfigError(
            f"sweep_variable must be one of {SWEEP_VARIABLES}, got {variable!r}",
            field="sweep_variable",
        )
    if variable == "alpha" and base.model != "memristive":
        raise ConfigError("an alpha sweep needs a memristive base", field="sweep_variable")
    values_raw = _require(obj, "values", "")
    if not isinstance(values_raw, list) or not values_raw:
        raise ConfigError("values must be a non-empty list", field="values")
    values = []
    for i, v in enumerate(values_raw):
        if variable == "n":
            values.append(_as_int(v, f"values[{i}]"))
        else:
            values.append(_as_number(v, f"values[{i}]"))
    replicates = obj.get("replicates", 1)
    replicates = _as_int(replicates, "replicates")
    if replicates < 1:
        raise ConfigError("replicates must be >= 1", field="replicates")
    seed = _as_int(_require(obj, "seed", ""), "seed")
    if seed < 0:
        raise ConfigError("seed must be a nonnegative integer", field="seed")
    if not base.random_initial:
        raise ConfigError(
            "sweep base must use random initial states (seed, radius)",
            field="base.initial",
        )
    return SweepConfig(
        base=base,
        sweep_variable=variable,
        values=tuple(values),
        replicates=replicates,
        seed=seed,
        raw=obj,
    )


def _load_json(path: str | Path) -> dict:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    try:
        with path.open("r", encoding="utf-8") as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc


def load_scenario(path: str | Path) -> ScenarioConfig:
    return parse_scenario(_load_json(path))


def load_sweep(path: str | Path) -> SweepConfig:
    return parse_sweep(_load_json(path))
