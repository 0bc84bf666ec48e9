"""Experiment configuration: JSON schema, validation, and canonical hashing.

One JSON file describes one experiment: a name, a pipeline, a coefficient law
(five independent marginals, or GARCH parameters), simulation sizes, optional
tolerance overrides, and free pipeline knobs under ``params``.  Every
validation failure raises :class:`ConfigInvalid` carrying a JSON-pointer to
the offending field.

The experiment identity is the SHA-256 of the canonicalized (sorted-keys,
minimal-separator) normalized config with execution-only fields — workers,
output_dir — removed, so the same experiment run with different parallelism
or into a different directory hashes identically.
"""

import hashlib
import json
import math
from dataclasses import dataclass
from typing import Any, Optional, Union

from .engine import SimConfig
from .errors import ConfigInvalid
from .garch import GarchLaw, GarchParams
from .laws import (
    ChiSqAffine,
    Constant,
    IndependentLaw,
    LogNormal,
    ParetoLomax,
    ScaledUniformPow,
)

__all__ = [
    "PIPELINES",
    "ExperimentConfig",
    "parse_config",
    "load_config",
    "apply_overrides",
    "canonical_json",
    "config_digest",
]

PIPELINES = (
    "solve_index",
    "stationarity",
    "simulate",
    "tails",
    "constants",
    "spectral",
    "garch_verify",
    "full_report",
)

_DIST_KINDS = {
    "lognormal": (LogNormal, ("mu", "sigma")),
    "scaled_uniform_pow": (ScaledUniformPow, ("scale", "power")),
    "pareto_lomax": (ParetoLomax, ("alpha", "scale")),
    "constant": (Constant, ("value",)),
    "chisq_affine": (ChiSqAffine, ("a", "b")),
}

_GARCH_REAL_FIELDS = ("alpha11", "alpha12", "alpha22", "beta11", "beta12", "beta22", "rho")

_SIM_DEFAULTS = {"burn_in": 500, "thinning": 1, "truncation_depth": 0}

# Count-valued fields keep integer JSON representation; everything else is real.
_SIM_FIELDS = ("burn_in", "n_draws", "thinning", "truncation_depth", "base_seed")


def _require(node: dict, key: str, path: str) -> Any:
    if key not in node:
        raise ConfigInvalid(f"{path}/{key}", "missing required field")
    return node[key]


def _as_real(value: Any, path: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigInvalid(path, f"expected a number, got {value!r}")
    value = float(value)
    if not math.isfinite(value):
        raise ConfigInvalid(path, "must be finite")
    return value


def _as_count(value: Any, path: str, minimum: int = 0) -> int:
    if isinstance(value, bool):
        raise ConfigInvalid(path, f"expected an integer, got {value!r}")
    if isinstance(value, float):
        if not value.is_integer():
            raise ConfigInvalid(path, f"expected an integer, got {value!r}")
        value = int(value)
    if not isinstance(value, int):
        raise ConfigInvalid(path, f"expected an integer, got {value!r}")
    if value < minimum:
        raise ConfigInvalid(path, f"must be >= {minimum}, got {value}")
    return value


def _check_object(node: Any, path: str, allowed: set, required: tuple = ()) -> None:
    if not isinstance(node, dict):
        raise ConfigInvalid(path, f"expected an object, got {type(node).__name__}")
    unknown = set(node) - allowed
    if unknown:
        raise ConfigInvalid(
            f"{path}/{sorted(unknown)[0]}",
            f"unknown field (allowed: {', '.join(sorted(allowed))})",
        )
    for key in required:
        if key not in node:
            raise ConfigInvalid(f"{path}/{key}", "missing required field")


def _parse_dist(node: Any, path: str):
    if not isinstance(node, dict):
        raise ConfigInvalid(path, f"expected an object, got {type(node).__name__}")
    if "kind" not in node:
        raise ConfigInvalid(f"{path}/kind", "missing required field")
    kind = node["kind"]
    if kind not in _DIST_KINDS:
        raise ConfigInvalid(
            f"{path}/kind",
            f"unknown kind {kind!r} (expected one of {', '.join(sorted(_DIST_KINDS))})",
        )
    cls, fields = _DIST_KINDS[kind]
    unknown = set(node) - {"kind", *fields}
    if unknown:
        raise ConfigInvalid(f"{path}/{sorted(unknown)[0]}", "unknown field")
    kwargs = {f: _as_real(_require(node, f, path), f"{path}/{f}") for f in fields}
    try:
        dist = cls(**kwargs)
    except ValueError as e:
        raise ConfigInvalid(path, str(e)) from None
    return dist, {"kind": kind, **kwargs}


def _parse_law(node: Any, path: str):
    if not isinstance(node, dict):
        raise ConfigInvalid(path, f"expected an object, got {type(node).__name__}")
    mode = _require(node, "mode", path)
    if mode == "independent":
        names = ("a1", "a2", "a4", "b1", "b2")
        _check_object(node, path, allowed={"mode", *names}, required=names)
        dists, norm = {}, {"mode": "independent"}
        for name in names:
            dists[name], norm[name] = _parse_dist(node[name], f"{path}/{name}")
        return IndependentLaw(**dists), norm
    if mode == "garch":
        allowed = {"mode", "alpha0", *_GARCH_REAL_FIELDS}
        _check_object(node, path, allowed=allowed, required=("alpha0", *_GARCH_REAL_FIELDS))
        a0 = node["alpha0"]
        if not isinstance(a0, (list, tuple)) or len(a0) != 2:
            raise ConfigInvalid(f"{path}/alpha0", "expected a pair [a01, a02]")
        kwargs = {
            "alpha0": (
                _as_real(a0[0], f"{path}/alpha0/0"),
                _as_real(a0[1], f"{path}/alpha0/1"),
            )
        }
        for f in _GARCH_REAL_FIELDS:
            kwargs[f] = _as_real(node[f], f"{path}/{f}")
        try:
            params = GarchParams(**kwargs)
        except ValueError as e:
            raise ConfigInvalid(path, str(e)) from None
        return GarchLaw(params), {"mode": "garch", **params.to_dict()}
    raise ConfigInvalid(f"{path}/mode", f"unknown mode {mode!r} (expected independent or garch)")


def _parse_sim(node: Any, path: str):
    _check_object(node, path, allowed=set(_SIM_FIELDS), required=("n_draws", "base_seed"))
    merged = {**_SIM_DEFAULTS, **node}
    counts = {f: _as_count(merged[f], f"{path}/{f}") for f in _SIM_FIELDS}
    try:
        sim = SimConfig(**counts)
    except ValueError as e:
        raise ConfigInvalid(path, str(e)) from None
    return sim, counts


def _parse_tolerances(node: Any, path: str) -> dict:
    if node is None:
        return {}
    if not isinstance(node, dict):
        raise ConfigInvalid(path, f"expected an object, got {type(node).__name__}")
    out = {}
    for key, value in node.items():
        v = _as_real(value, f"{path}/{key}")
        if v <= 0:
            raise ConfigInvalid(f"{path}/{key}", f"tolerances must be positive, got {v}")
        out[key] = v
    return out


def _parse_params(node: Any, path: str) -> dict:
    if node is None:
        return {}
    if not isinstance(node, dict):
        raise ConfigInvalid(path, f"expected an object, got {type(node).__name__}")
    out = {}
    for key, value in node.items():
        p = f"{path}/{key}"
        if isinstance(value, bool) or isinstance(value, (int, float, str)):
            out[key] = value
        elif isinstance(value, list) and all(
            isinstance(v, (int, float)) and not isinstance(v, bool) for v in value
        ):
            out[key] = list(value)
        else:
            raise ConfigInvalid(p, "params values must be scalars or numeric lists")
    return out


@dataclass(eq=False)
class ExperimentConfig:
    """One validated experiment: what to run, on which law, at what size.

    ``normalized`` is the fully-defaulted plain-dict form (the basis of
    :attr:`digest`); ``params`` carries free pipeline knobs that the schema
    does not interpret.
    """

    name: str
    pipeline: str
    law: Union[IndependentLaw, GarchLaw]
    sim: SimConfig
    tolerances: dict
    params: dict
    output_dir: str
    workers: int
    normalized: dict

    @property
    def digest(self) -> str:
        return config_digest(self.normalized)


_TOP_FIELDS = {
    "name", "pipeline", "law", "sim", "tolerances", "params", "output_dir", "workers",
}


def parse_config(obj: Any) -> ExperimentConfig:
    """Validate a decoded JSON object into an :class:`ExperimentConfig`."""
    _check_object(obj, "", allowed=_TOP_FIELDS, required=("name", "pipeline", "law", "sim"))
    name = obj["name"]
    if not isinstance(name, str) or not name:
        raise ConfigInvalid("/name", "expected a nonempty string")
    pipeline = obj["pipeline"]
    if pipeline not in PIPELINES:
        raise ConfigInvalid(
            "/pipeline", f"unknown pipeline {pipeline!r} (expected one of {', '.join(PIPELINES)})"
        )
    law, law_norm = _parse_law(obj["law"], "/law")
    if pipeline == "garch_verify" and not isinstance(law, GarchLaw):
        raise ConfigInvalid("/pipeline", "garch_verify requires a law with mode garch")
    sim, sim_norm = _parse_sim(obj["sim"], "/sim")
    tolerances = _parse_tolerances(obj.get("tolerances"), "/tolerances")
    params = _parse_params(obj.get("params"), "/params")
    output_dir = obj.get("output_dir", "out")
    if not isinstance(output_dir, str) or not output_dir:
        raise ConfigInvalid("/output_dir", "expected a nonempty string")
    workers = _as_count(obj.get("workers", 1), "/workers", minimum=1)

    normalized = {
        "name": name,
        "pipeline": pipeline,
        "law": law_norm,
        "sim": sim_norm,
        "tolerances": tolerances,
        "params": params,
    }
    return ExperimentConfig(
        name=name,
        pipeline=pipeline,
        law=law,
        sim=sim,
        tolerances=tolerances,
        params=params,
        output_dir=output_dir,
        workers=workers,
        normalized=normalized,
    )


def apply_overrides(
    obj: dict,
    seed: Optional[int] = None,
    workers: Optional[int] = None,
    out: Optional[str] = None,
) -> dict:
    """Fold CLI overrides into a decoded config object (before parsing).

    The seed lands in ``/sim/base_seed`` and therefore in the digest; workers
    and output directory are execution details and stay out of it.
    """
    if seed is not None:
        sim = obj.get("sim")
        if isinstance(sim, dict):
            sim["base_seed"] = seed
        else:
            obj["sim"] = {"base_seed": seed}
    if workers is not None:
        obj["workers"] = workers
    if out is not None:
        obj["output_dir"] = out
    return obj


def load_config(path) -> ExperimentConfig:
    """Read, decode, and validate a config file."""
    try:
        with open(path, "r", encoding="utf-8") as f:
            text = f.read()
    except OSError as e:
        raise ConfigInvalid("/", f"cannot read {path}: {e.strerror or e}") from None
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigInvalid("/", f"not valid JSON: {e}") from None
    return parse_config(obj)


def canonical_json(obj: Any) -> str:
    """Sorted-keys, minimal-separator, NaN-free JSON used for hashing."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), allow_nan=False)


def config_digest(normalized: dict) -> str:
    """SHA-256 of the canonicalized normalized config."""
    return hashlib.sha256(canonical_json(normalized).encode("utf-8")).hexdigest()
