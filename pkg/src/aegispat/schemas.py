"""JSON schemas for scenario, architecture and trade-matrix files."""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any, Mapping

import jsonschema

SCHEMA_VERSION = 1


class SchemaError(ValueError):
    """Input rejected by a schema; ``pointer`` is a JSON pointer to the fault."""

    def __init__(self, pointer: str, message: str):
        super().__init__(f"{pointer or '/'}: {message}")
        self.pointer = pointer
        self.detail = message


_number = {"type": "number"}
_vector = {"type": "array", "items": _number, "minItems": 1}
_value = {"oneOf": [_number, _vector, {"type": "string"}]}
_interval = {"type": "array", "items": _number, "minItems": 2, "maxItems": 2}
_nonneg_int = {"type": "integer", "minimum": 0}
_pos_int = {"type": "integer", "minimum": 1}

_region = {
    "type": "object",
    "required": ["bounds"],
    "properties": {
        "bounds": {"type": "array", "items": _interval, "minItems": 1},
        "label": {"type": "string"},
        "error": {"type": "object"},
    },
}

_error_model = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "bias": _number,
        "noise_std": {"type": "number", "minimum": 0},
        "p_erroneous": {"type": "number", "minimum": 0, "maximum": 1},
        "error_magnitude": _number,
        "uncertainty": {"type": "number", "minimum": 0},
        "uncertainty_when_erroneous": {"type": ["number", "null"], "minimum": 0},
    },
}

_surrogate = {
    "type": "object",
    "required": ["input_dim", "reference"],
    "properties": {
        "input_dim": _pos_int,
        "reference": {
            "type": "object",
            "required": ["kind"],
            "properties": {"kind": {"enum": ["linear", "piecewise_polynomial", "lookup_grid", "identity"]}},
        },
        "regions": {
            "type": "array",
            "items": {**_region, "properties": {**_region["properties"], "error": _error_model}},
        },
        "ood": _error_model,
    },
}

_schedule = {
    "type": "object",
    "minProperties": 1,
    "maxProperties": 1,
    "properties": {
        "ticks": {"type": "array", "items": _nonneg_int},
        "interval": {"type": "array", "items": _nonneg_int, "minItems": 2, "maxItems": 2},
        "probability": {"type": "number", "minimum": 0, "maximum": 1},
    },
    "additionalProperties": False,
}

_fault = {
    "type": "object",
    "required": ["guideword", "target", "schedule"],
    "additionalProperties": False,
    "properties": {
        "guideword": {"enum": ["omission", "commission", "early", "late", "value"]},
        "target": {"type": "array", "items": {"type": "string"}, "minItems": 2, "maxItems": 2},
        "schedule": _schedule,
        "params": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"delay": _pos_int, "value": _value, "offset": {"oneOf": [_number, _vector]}},
        },
    },
}

_excursion = {
    "type": "object",
    "required": ["value"],
    "properties": {
        "ticks": {"type": "array", "items": _nonneg_int},
        "interval": {"type": "array", "items": _nonneg_int, "minItems": 2, "maxItems": 2},
        "value": _value,
    },
    "additionalProperties": False,
}

_stream = {
    "type": "object",
    "required": ["kind"],
    "properties": {
        "kind": {"enum": ["script", "uniform", "constant", "ramp", "boxes", "from_input"]},
        "values": {"type": "array", "items": _value, "minItems": 1},
        "low": {"oneOf": [_number, _vector]},
        "high": {"oneOf": [_number, _vector]},
        "value": _value,
        "start": {"oneOf": [_number, _vector]},
        "stop": {"oneOf": [_number, _vector]},
        "period": _pos_int,
        "min_size": {"type": "number", "exclusiveMinimum": 0},
        "max_size": {"type": "number", "exclusiveMinimum": 0},
        "dims": {"type": "array", "items": _nonneg_int, "minItems": 1},
        "excursions": {"type": "array", "items": _excursion},
    },
    "allOf": [
        {"if": {"properties": {"kind": {"const": "script"}}}, "then": {"required": ["values"]}},
        {"if": {"properties": {"kind": {"const": "uniform"}}}, "then": {"required": ["low", "high"]}},
        {"if": {"properties": {"kind": {"const": "constant"}}}, "then": {"required": ["value"]}},
        {"if": {"properties": {"kind": {"const": "ramp"}}}, "then": {"required": ["start", "stop", "period"]}},
        {"if": {"properties": {"kind": {"const": "boxes"}}}, "then": {"required": ["low", "high"]}},
        {"if": {"properties": {"kind": {"const": "from_input"}}}, "then": {"required": ["dims"]}},
    ],
}

_monitor = {
    "type": "object",
    "required": ["mode"],
    "additionalProperties": False,
    "properties": {
        "mode": {"enum": ["input_range", "output_validity", "odd_conformance", "ood_envelope"]},
        "ranges": {"type": "array", "items": _interval},
        "regions": {"oneOf": [{"const": "surrogate"}, {"type": "array", "items": _region}]},
        "lower": _vector,
        "upper": _vector,
        "samples": {"type": "array", "items": {"oneOf": [_number, _vector]}, "minItems": 2},
        "quantiles": _interval,
        "reference": {"type": "boolean"},
        "tolerance": {"type": "number", "minimum": 0},
        "staleness": {"type": ["integer", "null"], "minimum": 0},
    },
}

_backup = {
    "type": "object",
    "additionalProperties": False,
    "properties": {"mode": {"enum": ["equivalent", "degraded"]}, "tolerance": {"type": "number", "minimum": 0}},
}

PATTERN_KINDS = [
    "single_channel", "active_monitor", "backup_parallel", "combined", "rta",
    "value_override", "function_modification", "input_partitioning", "tmr",
]

_pattern = {
    "type": "object",
    "required": ["kind"],
    "additionalProperties": False,
    "properties": {
        "kind": {"enum": PATTERN_KINDS},
        "monitor": _monitor,
        "monitors": {"type": "array", "items": _monitor, "minItems": 1},
        "action": {"enum": ["disconnect", "flag_invalid"]},
        "p_selftest": {"type": "number", "minimum": 0, "maximum": 1},
        "latency": _nonneg_int,
        "hold_down": {"type": ["integer", "null"], "minimum": 1},
        "variant": {"enum": ["input_monitor", "output_monitor", "independent_channel"]},
        "boundary": {"enum": ["ml_only", "with_prepost", "monitor_inside"]},
        "alternatives": {"type": "array", "items": _backup, "minItems": 1},
        "decision": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["trips", "channel"],
                "additionalProperties": False,
                "properties": {
                    "trips": {"type": "array", "items": {"type": "boolean"}},
                    "channel": {"oneOf": [{"const": "primary"}, _nonneg_int]},
                },
            },
        },
        "input_assurance": {
            "type": "object",
            "required": ["clamp"],
            "additionalProperties": False,
            "properties": {"clamp": {"type": "array", "items": _interval, "minItems": 1}},
        },
        "ensemble": {
            "type": "object",
            "required": ["models", "combiner"],
            "additionalProperties": False,
            "properties": {
                "models": {"type": "integer", "minimum": 2},
                "combiner": {"enum": ["mean", "median", "vote"]},
                "spread_threshold": {"type": "number", "minimum": 0},
                "stamp_tolerance": _nonneg_int,
                "per_model_monitor": {"oneOf": [_monitor, {"type": "null"}]},
            },
        },
        "mode": {"enum": ["point", "distribution"]},
        "threshold": {"type": "number", "minimum": 0},
        "worst_case": {"oneOf": [_number, _vector]},
        "adaptive": {
            "type": "array",
            "minItems": 1,
            "items": {"type": "array", "prefixItems": [{"type": "string"}, {"type": "number", "minimum": 0}],
                      "minItems": 2, "maxItems": 2},
        },
        "distribution": {"type": "array", "items": _number, "minItems": 1},
        "quantile": {"type": "number", "minimum": 0, "maximum": 1},
        "direction": {"enum": ["lower", "upper"]},
        "training_iou": _number,
        "detector": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "iou_floor": {"type": "number", "minimum": 0, "maximum": 1},
                "jitter": {"type": "number", "minimum": 0},
                "p_negative": {"type": "number", "minimum": 0, "maximum": 1},
            },
        },
        "partitions": {"type": "array", "items": {"type": "array", "items": _region, "minItems": 1}, "minItems": 2},
        "selector": _monitor,
        "voter": {"enum": ["majority_exact", "median"]},
    },
}

_envelope = {
    "type": "object",
    "required": ["kind"],
    "additionalProperties": False,
    "properties": {
        "kind": {"enum": ["abs_deviation", "range", "box_containment"]},
        "epsilon": {"type": "number", "minimum": 0},
        "side": {"enum": ["both", "upper", "lower"]},
        "lo": _number,
        "hi": _number,
    },
    "allOf": [
        {"if": {"properties": {"kind": {"const": "abs_deviation"}}}, "then": {"required": ["epsilon"]}},
        {"if": {"properties": {"kind": {"const": "range"}}}, "then": {"required": ["lo", "hi"]}},
    ],
}

SCENARIO_SCHEMA: dict[str, Any] = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["schema_version", "seed", "horizon_ticks", "input", "surrogate", "pattern", "envelope"],
    "additionalProperties": False,
    "properties": {
        "schema_version": {"const": SCHEMA_VERSION},
        "name": {"type": "string"},
        "description": {"type": "string"},
        "seed": _nonneg_int,
        "horizon_ticks": _pos_int,
        "ticks_per_hour": _pos_int,
        "input": _stream,
        "env": _stream,
        "risk": _stream,
        "surrogate": _surrogate,
        "backup": _backup,
        "pattern": _pattern,
        "compare": {
            "type": "object",
            "propertyNames": {"enum": PATTERN_KINDS},
            "additionalProperties": {k: v for k, v in _pattern.items() if k != "required"},
        },
        "faults": {"type": "array", "items": _fault},
        "envelope": _envelope,
        "monte_carlo": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"trials": _pos_int},
        },
        "hazard_threshold": _nonneg_int,
    },
}

_element = {
    "oneOf": [
        {"enum": ["A", "B", "C", "D", "E"]},
        {
            "type": "object",
            "required": ["role", "dal"],
            "additionalProperties": False,
            "properties": {
                "role": {"enum": ["complex", "monitor", "switch", "backup", "alternative", "voter",
                                  "selector", "preprocess", "postprocess"]},
                "dal": {"enum": ["A", "B", "C", "D", "E"]},
            },
        },
    ]
}

ARCHITECTURE_SCHEMA: dict[str, Any] = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["schema_version", "root"],
    "additionalProperties": False,
    "properties": {
        "schema_version": {"const": SCHEMA_VERSION},
        "name": {"type": "string"},
        "relief_levels": _nonneg_int,
        "root": {"$ref": "#/$defs/node"},
    },
    "$defs": {
        "node": {
            "type": "object",
            "required": ["function", "allocated"],
            "additionalProperties": False,
            "properties": {
                "function": {"type": "string", "minLength": 1},
                "allocated": {"enum": ["A", "B", "C", "D", "E"]},
                "pattern": {
                    "type": "object",
                    "required": ["kind", "elements"],
                    "additionalProperties": False,
                    "properties": {
                        "kind": {"enum": PATTERN_KINDS},
                        "elements": {"type": "object", "additionalProperties": _element},
                        "options": {"type": "object"},
                        "credit_taken": {"type": "boolean"},
                        "independent": {"type": "boolean"},
                    },
                },
                "children": {"type": "array", "items": {"$ref": "#/$defs/node"}},
            },
        }
    },
}

TRADE_MATRIX_SCHEMA: dict[str, Any] = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["schema_version", "options", "attributes", "scores"],
    "additionalProperties": False,
    "properties": {
        "schema_version": {"const": SCHEMA_VERSION},
        "options": {"type": "array", "items": {"type": "string"}, "minItems": 1},
        "attributes": {
            "type": "array",
            "minItems": 1,
            "items": {
                "type": "object",
                "required": ["name", "weight"],
                "additionalProperties": False,
                "properties": {"name": {"type": "string"}, "weight": {"type": "number", "minimum": 0}},
            },
        },
        "scores": {"type": "array", "items": {"type": "array", "items": _number}},
    },
}


def _pointer(path) -> str:
    return "".join("/" + str(p).replace("~", "~0").replace("/", "~1") for p in path)


def check(data: Any, schema: Mapping[str, Any]) -> None:
    """Raise :class:`SchemaError` for the most relevant validation error."""
    validator = jsonschema.Draft202012Validator(schema)
    error = jsonschema.exceptions.best_match(validator.iter_errors(data))
    if error is not None:
        raise SchemaError(_pointer(error.absolute_path), error.message)


def load_json(path: str | Path, schema: Mapping[str, Any]) -> Any:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise SchemaError("", f"cannot read {path}: {exc.strerror or exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError("", f"invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    check(data, schema)
    return data
