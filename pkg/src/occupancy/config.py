"""Run configuration: JSON documents validated against a published schema."""
from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from importlib import resources

import jsonschema

from .alphabet import LetterDistribution, SlowlyVaryingFn
from .errors import ConfigError
from .regime import build_model

TASKS = ("simulate", "exact", "bound", "limit", "mc", "validate")
BOUNDS = ("iid-counting-bound", "chain-exponential-bound", "regime-counting-bound",
          "shared-letter-bound", "finite-support-bound", "regular-variation-bound",
          "regular-variation-finite-sample")

_int_or_list = {"oneOf": [{"type": "integer", "minimum": 0},
                          {"type": "array", "items": {"type": "integer", "minimum": 0}, "minItems": 1}]}

_ell = {
    "type": "object",
    "properties": {"family": {"enum": ["constant", "logpow"]},
                   "c": {"type": "number", "exclusiveMinimum": 0},
                   "beta": {"type": "number"}},
    "required": ["family"],
    "additionalProperties": False,
}

_letters = {
    "oneOf": [
        {"type": "object", "properties": {"kind": {"const": "finite"},
                                          "probs": {"type": "array", "items": {"type": "number", "minimum": 0},
                                                    "minItems": 1}},
         "required": ["kind", "probs"], "additionalProperties": False},
        {"type": "object", "properties": {"kind": {"const": "uniform"},
                                          "size": {"type": "integer", "minimum": 1}},
         "required": ["kind", "size"], "additionalProperties": False},
        {"type": "object", "properties": {"kind": {"const": "zipf"},
                                          "alpha": {"type": "number", "exclusiveMinimum": 0,
                                                    "exclusiveMaximum": 1}},
         "required": ["kind", "alpha"], "additionalProperties": False},
        {"type": "object", "properties": {"kind": {"const": "geometric"},
                                          "q": {"type": "number", "exclusiveMinimum": 0,
                                                "exclusiveMaximum": 1}},
         "required": ["kind", "q"], "additionalProperties": False},
    ]
}

SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "occupancy run configuration",
    "type": "object",
    "properties": {
        "model": {
            "type": "object",
            "properties": {
                "driver": {
                    "type": "object",
                    "properties": {
                        "matrix": {"type": "array", "minItems": 1,
                                   "items": {"type": "array", "items": {"type": "number"}, "minItems": 1}},
                        "initial": {"type": "array", "items": {"type": "number", "minimum": 0}},
                        "t0": {"type": "integer", "minimum": 1},
                    },
                    "required": ["matrix"],
                    "additionalProperties": False,
                },
                "letters": {"type": "object", "patternProperties": {"^[0-9]+$": _letters},
                            "additionalProperties": False, "minProperties": 1},
            },
            "required": ["driver", "letters"],
            "additionalProperties": False,
        },
        "task": {"enum": list(TASKS)},
        "parameters": {
            "type": "object",
            "properties": {
                "n": _int_or_list,
                "r": _int_or_list,
                "eps": {"type": "number", "minimum": 0, "maximum": 1},
                "eps_grid": {"type": "array", "items": {"type": "number", "minimum": 0, "maximum": 1},
                             "minItems": 1},
                "bounds": {"type": "array", "items": {"enum": list(BOUNDS)}, "minItems": 1},
                "alpha": {"type": "number", "minimum": 0, "maximum": 1},
                "ell": _ell,
                "method": {"enum": ["dp", "enumeration", "exact", "mc"]},
                "schedule": {"type": "array", "items": {"type": "integer", "minimum": 1}, "minItems": 1},
                "band": {"type": "number", "exclusiveMinimum": 0},
                "replicas": {"type": "integer", "minimum": 100},
                "seed": {"type": "integer", "minimum": 0},
                "workers": {"type": "integer", "minimum": 1},
                "target": {"enum": ["pmf", "local-time-pmf", "count-over-local-time",
                                    "normalizer", "integral-kernel"]},
                "u": {"type": "number", "minimum": 0, "maximum": 1},
            },
            "additionalProperties": False,
        },
        "output": {
            "type": "object",
            "properties": {"path": {"type": "string"}, "format": {"enum": ["csv", "json"]}},
            "additionalProperties": False,
        },
    },
    "required": ["model", "task"],
    "additionalProperties": False,
}


@dataclass
class RunConfig:
    model: dict
    task: str
    parameters: dict = field(default_factory=dict)
    output: dict = field(default_factory=dict)
    text: str = ""

    def line_of(self, *path):
        return locate(self.text, path)

    def fail(self, message, *path):
        raise ConfigError(message, line=self.line_of(*path) if self.text else None)

    def build_model(self):
        driver = self.model["driver"]
        try:
            letters = {int(k): LetterDistribution.from_dict(v) for k, v in self.model["letters"].items()}
        except (ValueError, KeyError) as exc:
            self.fail(str(exc), "model", "letters")
        try:
            return build_model(driver["matrix"], letters, driver.get("initial"))
        except ValueError as exc:
            self.fail(str(exc), "model", "driver")

    def ell(self):
        spec = self.parameters.get("ell")
        return None if spec is None else SlowlyVaryingFn.from_dict(spec)


def locate(text, path):
    """Line (1-based) of the last key in ``path`` found by scanning forward from the
    previous one; array indices are skipped."""
    pos, line = 0, 1
    for key in path:
        if not isinstance(key, str):
            continue
        at = text.find(f'"{key}"', pos)
        if at < 0:
            break
        pos = at + 1
        line = text.count("\n", 0, at) + 1
    return line


def _unexpected_keys(err):
    known = err.schema.get("properties", {})
    patterns = err.schema.get("patternProperties", {})
    return [k for k in err.instance
            if k not in known and not any(re.search(p, k) for p in patterns)]


def parse_config(text):
    """Parse and validate a JSON config; errors carry the offending line."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(exc.msg, line=exc.lineno) from None
    validator = jsonschema.Draft202012Validator(SCHEMA)
    errors = sorted(validator.iter_errors(doc), key=lambda e: list(e.absolute_path))
    if errors:
        err = jsonschema.exceptions.best_match(errors)
        path = list(err.absolute_path)
        where = "/".join(map(str, path)) or "<root>"
        if err.validator == "additionalProperties":
            extra = _unexpected_keys(err)
            path += extra[:1]
        raise ConfigError(f"{where}: {err.message}", line=locate(text, path))
    return RunConfig(model=doc["model"], task=doc["task"], parameters=doc.get("parameters", {}),
                     output=doc.get("output", {}), text=text)


def load_config(path):
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())


def reference_config_text():
    return resources.files("occupancy").joinpath("configs/reference.json").read_text(encoding="utf-8")
