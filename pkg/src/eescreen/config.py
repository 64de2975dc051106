"""Experiment configuration: JSON with a versioned schema.

Parse errors are reported with the JSON path of the offending field (and the
line number for syntax errors).
"""
from __future__ import annotations

import hashlib
import json
import math
import os
from dataclasses import dataclass, replace
from typing import Optional

from .design import MODES, DesignPlan, ParameterSpec, make_plan
from .exceptions import ConfigError, EEScreenError
from .models import ANALYTIC_KINDS, AnalyticModel, ExternalModelSpec
from .transforms import AFFINE, DIVIDE_BY_PRODUCT, KINDS as TRANSFORM_KINDS, TransformSpec

SCHEMA_VERSION = 1


@dataclass(frozen=True)
class ParameterEntry:
    spec: ParameterSpec
    nominal: Optional[float] = None
    unit: str = ""
    label: str = ""

    def to_dict(self) -> dict:
        d = {"name": self.spec.name, "min": self.spec.x_min, "max": self.spec.x_max, "levels": self.spec.levels}
        if self.nominal is not None:
            d["nominal"] = self.nominal
        if self.unit:
            d["unit"] = self.unit
        if self.label:
            d["label"] = self.label
        return d


@dataclass(frozen=True)
class AnalyticModelEntry:
    model: AnalyticModel
    outputs: tuple[str, ...] = ("y",)

    def to_dict(self) -> dict:
        d = self.model.to_dict()
        d["outputs"] = list(self.outputs)
        return d


@dataclass(frozen=True)
class Analysis:
    name: str
    output: str
    transforms: tuple[TransformSpec, ...] = ()
    presentations: tuple[str, ...] = ("sigma",)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "output": self.output,
            "transforms": [t.to_dict() for t in self.transforms],
            "presentations": list(self.presentations),
        }


@dataclass(frozen=True)
class ExperimentConfig:
    name: str
    parameters: tuple[ParameterEntry, ...]
    model: object  # AnalyticModelEntry or ExternalModelSpec
    mode: str
    replicates: int
    seed: int
    analyses: tuple[Analysis, ...] = ()
    standin_model: Optional[AnalyticModelEntry] = None
    description: str = ""
    negligible_rel: float = 0.01

    @property
    def parameter_specs(self) -> tuple[ParameterSpec, ...]:
        return tuple(p.spec for p in self.parameters)

    @property
    def k(self) -> int:
        return len(self.parameters)

    def with_seed(self, seed: int) -> "ExperimentConfig":
        _check_seed(seed, "design.seed")
        return replace(self, seed=int(seed))

    def to_dict(self) -> dict:
        d = {
            "schema_version": SCHEMA_VERSION,
            "name": self.name,
            "description": self.description,
            "parameters": [p.to_dict() for p in self.parameters],
            "model": self.model.to_dict(),
            "design": {"mode": self.mode, "r": self.replicates, "seed": self.seed},
            "analyses": [a.to_dict() for a in self.analyses],
            "negligible_rel": self.negligible_rel,
        }
        if self.standin_model is not None:
            d["standin_model"] = self.standin_model.to_dict()
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    def plan_hash(self) -> str:
        """Hash of everything the design depends on."""
        doc = {
            "parameters": [
                {"name": p.spec.name, "min": p.spec.x_min, "max": p.spec.x_max, "levels": p.spec.levels}
                for p in self.parameters
            ],
            "design": {"mode": self.mode, "r": self.replicates, "seed": self.seed},
        }
        return _digest(doc)

    def ledger_hash(self, model) -> str:
        """Hash of the design plus the model that produced the outputs."""
        return _digest({"plan": self.plan_hash(), "model": model.to_dict()})

    def make_plan(self) -> DesignPlan:
        return make_plan(self.parameter_specs, self.mode, self.replicates, self.seed, self.plan_hash())

    def select_model(self, standin: bool = False):
        if standin:
            if self.standin_model is None:
                raise ConfigError("standin_model", "no analytic stand-in model configured")
            return self.standin_model
        return self.model


def _digest(doc) -> str:
    blob = json.dumps(doc, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


# --- parsing -----------------------------------------------------------------

def _get(doc, key, path, kind=None, default=...):
    if not isinstance(doc, dict):
        raise ConfigError(path, "expected an object")
    if key not in doc:
        if default is ...:
            raise ConfigError(f"{path}.{key}" if path else key, "required field missing")
        return default
    value = doc[key]
    where = f"{path}.{key}" if path else key
    if kind is not None and not _is(value, kind):
        raise ConfigError(where, f"expected {kind}, got {type(value).__name__}")
    return value


def _is(value, kind):
    if kind == "number":
        return isinstance(value, (int, float)) and not isinstance(value, bool) and math.isfinite(value)
    if kind == "integer":
        return isinstance(value, int) and not isinstance(value, bool)
    if kind == "string":
        return isinstance(value, str)
    if kind == "list":
        return isinstance(value, list)
    if kind == "object":
        return isinstance(value, dict)
    raise AssertionError(kind)


def _check_seed(seed, path):
    if not _is(seed, "integer") or not 0 <= seed < 2**64:
        raise ConfigError(path, f"seed must be an integer in [0, 2**64), got {seed!r}")


def _number_list(values, path):
    if not isinstance(values, list):
        raise ConfigError(path, "expected a list of numbers")
    for n, v in enumerate(values):
        if not _is(v, "number"):
            raise ConfigError(f"{path}[{n}]", "expected a number")
    return [float(v) for v in values]


def _parse_parameter(doc, path):
    name = _get(doc, "name", path, "string")
    lo = _get(doc, "min", path, "number")
    hi = _get(doc, "max", path, "number")
    levels = _get(doc, "levels", path, "integer", 10)
    nominal = _get(doc, "nominal", path, "number", None)
    unit = _get(doc, "unit", path, "string", "")
    label = _get(doc, "label", path, "string", "")
    try:
        spec = ParameterSpec(name, float(lo), float(hi), levels)
    except (EEScreenError, ValueError) as exc:
        field_name = "levels" if "levels" in str(exc) else "min"
        raise ConfigError(f"{path}.{field_name}", str(exc)) from None
    return ParameterEntry(spec, None if nominal is None else float(nominal), unit, label)


def _parse_analytic(doc, path, k):
    kind = _get(doc, "kind", path, "string")
    if kind not in ANALYTIC_KINDS:
        raise ConfigError(f"{path}.kind", f"unknown analytic model {kind!r}; expected one of {list(ANALYTIC_KINDS)}")
    args = dict(_get(doc, "args", path, "object", {}))
    for key, value in args.items():
        where = f"{path}.args.{key}"
        if key == "a" and kind in ("linear", "product_exp"):
            args[key] = _number_list(value, where)
        elif key in ("i", "j"):
            if not _is(value, "integer"):
                raise ConfigError(where, "expected a 0-based parameter index")
        elif not _is(value, "number"):
            raise ConfigError(where, "expected a number")
    outputs = _get(doc, "outputs", path, "list", ["y"])
    if len(outputs) != 1 or not isinstance(outputs[0], str):
        raise ConfigError(f"{path}.outputs", "analytic models declare exactly one output name")
    try:
        model = AnalyticModel(kind, args)
        model.check_dimension(k)
    except ValueError as exc:
        raise ConfigError(f"{path}.args", str(exc)) from None
    return AnalyticModelEntry(model, tuple(outputs))


def _parse_external(doc, path):
    command = _get(doc, "command", path, "list")
    if not command or not all(isinstance(c, str) for c in command):
        raise ConfigError(f"{path}.command", "expected a non-empty list of strings")
    outputs = _get(doc, "outputs", path, "list")
    if not outputs or not all(isinstance(o, str) for o in outputs) or len(set(outputs)) != len(outputs):
        raise ConfigError(f"{path}.outputs", "expected a non-empty list of unique output names")
    timeout = _get(doc, "timeout_s", path, "number", 3600.0)
    parallel = _get(doc, "max_parallel", path, "integer", 1)
    batch = _get(doc, "batch_size", path, "integer", 0)
    if timeout <= 0:
        raise ConfigError(f"{path}.timeout_s", "must be positive")
    if parallel < 1:
        raise ConfigError(f"{path}.max_parallel", "must be >= 1")
    if batch < 0:
        raise ConfigError(f"{path}.batch_size", "must be >= 0")
    return ExternalModelSpec(tuple(command), tuple(outputs), float(timeout), parallel, batch)


def _parse_model(doc, path, k):
    kind = _get(doc, "type", path, "string")
    if kind == "analytic":
        return _parse_analytic(doc, path, k)
    if kind == "external":
        return _parse_external(doc, path)
    raise ConfigError(f"{path}.type", f"expected 'analytic' or 'external', got {kind!r}")


def _parse_transform(doc, path, names):
    kind = _get(doc, "kind", path, "string")
    if kind not in TRANSFORM_KINDS:
        raise ConfigError(f"{path}.kind", f"unknown transform {kind!r}; expected one of {list(TRANSFORM_KINDS)}")
    if kind == DIVIDE_BY_PRODUCT:
        params = _get(doc, "parameters", path, "list", [])
        idx = []
        for n, pname in enumerate(params):
            if pname not in names:
                raise ConfigError(f"{path}.parameters[{n}]", f"unknown parameter {pname!r}")
            idx.append(names.index(pname))
        constant = _get(doc, "constant", path, "number", 1.0)
        if constant == 0:
            raise ConfigError(f"{path}.constant", "must be nonzero")
        return TransformSpec(kind, tuple(idx), float(constant), parameter_names=tuple(params))
    if kind == AFFINE:
        return TransformSpec(
            kind, scale=float(_get(doc, "scale", path, "number", 1.0)),
            offset=float(_get(doc, "offset", path, "number", 0.0)),
        )
    return TransformSpec(kind)


def _parse_analysis(doc, path, names, outputs):
    name = _get(doc, "name", path, "string")
    output = _get(doc, "output", path, "string")
    if output not in outputs:
        raise ConfigError(f"{path}.output", f"{output!r} is not a model output {list(outputs)}")
    chain = _get(doc, "transforms", path, "list", [])
    transforms = tuple(_parse_transform(t, f"{path}.transforms[{n}]", names) for n, t in enumerate(chain))
    presentations = _get(doc, "presentations", path, "list", ["sigma"])
    for n, p in enumerate(presentations):
        if p not in ("sigma", "ratio"):
            raise ConfigError(f"{path}.presentations[{n}]", f"expected 'sigma' or 'ratio', got {p!r}")
    return Analysis(name, output, transforms, tuple(presentations))


def parse_config(doc: dict) -> ExperimentConfig:
    if not isinstance(doc, dict):
        raise ConfigError("", "config must be a JSON object")
    version = _get(doc, "schema_version", "", "integer")
    if version != SCHEMA_VERSION:
        raise ConfigError("schema_version", f"unsupported schema version {version}; expected {SCHEMA_VERSION}")
    name = _get(doc, "name", "", "string", "experiment")
    description = _get(doc, "description", "", "string", "")

    raw_params = _get(doc, "parameters", "", "list")
    if not raw_params:
        raise ConfigError("parameters", "at least one parameter is required")
    params = tuple(_parse_parameter(p, f"parameters[{n}]") for n, p in enumerate(raw_params))
    names = [p.spec.name for p in params]
    for n, pname in enumerate(names):
        if pname in names[:n]:
            raise ConfigError(f"parameters[{n}].name", f"duplicate parameter name {pname!r}")

    model = _parse_model(_get(doc, "model", "", "object"), "model", len(params))
    standin = None
    if "standin_model" in doc:
        standin = _parse_analytic(_get(doc, "standin_model", "", "object"), "standin_model", len(params))
        if _get(doc["standin_model"], "type", "standin_model", "string") != "analytic":
            raise ConfigError("standin_model.type", "stand-in model must be analytic")
        if standin.outputs[0] not in model.outputs:
            raise ConfigError("standin_model.outputs", "stand-in output must be one of the model outputs")

    design = _get(doc, "design", "", "object")
    mode = _get(design, "mode", "design", "string")
    if mode not in MODES:
        raise ConfigError("design.mode", f"expected one of {list(MODES)}, got {mode!r}")
    r = _get(design, "r", "design", "integer")
    if r < 1:
        raise ConfigError("design.r", "must be >= 1")
    seed = _get(design, "seed", "design", "integer")
    _check_seed(seed, "design.seed")
    if mode == "second_order" and len(params) < 2:
        raise ConfigError("design.mode", "second_order needs at least 2 parameters")

    outputs = model.outputs
    analyses = tuple(
        _parse_analysis(a, f"analyses[{n}]", names, outputs)
        for n, a in enumerate(_get(doc, "analyses", "", "list", []))
    )
    anames = [a.name for a in analyses]
    for n, aname in enumerate(anames):
        if aname in anames[:n]:
            raise ConfigError(f"analyses[{n}].name", f"duplicate analysis name {aname!r}")

    negligible_rel = _get(doc, "negligible_rel", "", "number", 0.01)
    if not 0 <= negligible_rel < 1:
        raise ConfigError("negligible_rel", "must be in [0, 1)")

    known = {"schema_version", "name", "description", "parameters", "model", "standin_model",
             "design", "analyses", "negligible_rel"}
    unknown = sorted(set(doc) - known)
    if unknown:
        raise ConfigError(unknown[0], "unknown field")
    return ExperimentConfig(
        name, params, model, mode, r, seed, analyses, standin, description, float(negligible_rel),
    )


def loads_config(text: str) -> ExperimentConfig:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError("", f"invalid JSON: {exc.msg} (column {exc.colno})", line=exc.lineno) from None
    return parse_config(doc)


EXAMPLES = {"experiment_a": "experiment_a.json", "experiment_b": "experiment_b.json"}


def example_config_path(name: str) -> str:
    """Path of a shipped example config (``experiment_a`` or ``experiment_b``)."""
    if name not in EXAMPLES:
        raise ConfigError("", f"unknown example config {name!r}; choose from {sorted(EXAMPLES)}")
    return os.path.join(os.path.dirname(__file__), "configs", EXAMPLES[name])


def load_config(path) -> ExperimentConfig:
    """Load a config file; ``example:<name>`` selects a shipped example."""
    path = str(path)
    if path.startswith("example:"):
        path = example_config_path(path[len("example:"):])
    with open(path, encoding="utf-8") as fh:
        return loads_config(fh.read())
