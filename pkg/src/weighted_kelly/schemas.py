"""Published JSON schemas for inputs (markets, strategies, grids) and reports."""

import json
import math

import jsonschema

from .errors import SchemaError

_NUM = {"type": "number"}
_NUM_OR_NULL = {"type": ["number", "null"]}
_NUM_LIST = {"type": "array", "items": _NUM}
_MATRIX = {"type": "array", "items": _NUM_LIST, "minItems": 1}

_TERMS = {
    "type": "array",
    "minItems": 1,
    "items": {
        "type": "object",
        "required": ["coef", "powers"],
        "properties": {"coef": _NUM, "powers": {"type": "array", "items": {"type": "integer", "minimum": 0}}},
        "additionalProperties": False,
    },
}

WEIGHT = {
    "oneOf": [
        {"const": "one"},
        {"type": "object", "required": ["kind"], "additionalProperties": False,
         "properties": {"kind": {"const": "constant"}, "value": {"type": "number", "minimum": 0}}},
        {"type": "object", "required": ["kind"], "additionalProperties": False,
         "properties": {"kind": {"const": "polynomial"}, "terms": _TERMS, "coeffs": _NUM_LIST}},
        {"type": "object", "required": ["kind", "lower", "upper"], "additionalProperties": False,
         "properties": {"kind": {"const": "box"},
                        "lower": {"type": "array", "items": _NUM_OR_NULL},
                        "upper": {"type": "array", "items": _NUM_OR_NULL},
                        "value": {"type": "number", "minimum": 0}}},
    ]
}

RETURN = {
    "oneOf": [
        {"type": "object", "required": ["form", "D"], "additionalProperties": False,
         "properties": {"form": {"enum": ["eq24", "martingale"]}, "D": _NUM}},
        {"type": "object", "required": ["form", "coeffs"], "additionalProperties": False,
         "properties": {"form": {"const": "linear"}, "coeffs": _NUM_LIST}},
        {"type": "object", "required": ["form"], "additionalProperties": False,
         "properties": {"form": {"const": "polynomial"}, "terms": _TERMS, "coeffs": _NUM_LIST}},
    ]
}

MARKET = {
    "oneOf": [
        {
            "type": "object",
            "required": ["type", "outcomes", "probs"],
            "additionalProperties": False,
            "properties": {
                "type": {"const": "discrete"},
                "outcomes": {**_NUM_LIST, "minItems": 2},
                "probs": {**_NUM_LIST, "minItems": 2},
                "weights": _NUM_LIST,
                "reference": _NUM_LIST,
                "repeated_returns": {"type": "boolean"},
            },
        },
        {
            "type": "object",
            "required": ["type", "dim", "sigma", "sigma0", "return"],
            "additionalProperties": False,
            "properties": {
                "type": {"const": "gaussian"},
                "dim": {"type": "integer", "minimum": 1},
                "sigma": _MATRIX,
                "sigma0": _MATRIX,
                "weight": WEIGHT,
                "return": RETURN,
            },
        },
    ]
}

STRATEGY = {
    "oneOf": [
        {"type": "object", "required": ["kind", "D"], "additionalProperties": False,
         "properties": {"kind": {"const": "constant_fraction"}, "D": {"type": "number", "minimum": 0},
                        "allow_leverage": {"type": "boolean"}}},
        {"type": "object", "required": ["kind", "stakes"], "additionalProperties": False,
         "properties": {
             "kind": {"const": "table"},
             "default": {"type": "number", "minimum": 0},
             "stakes": {"type": "array", "items": {
                 "type": "object", "required": ["history", "fraction"], "additionalProperties": False,
                 "properties": {"history": {"type": "array", "items": {"type": "integer", "minimum": 0}},
                                "fraction": {"type": "number", "minimum": 0}}}}}},
    ]
}

GRID = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "scheme": {"enum": ["tensor", "gauss-hermite", "gaussian"]},
        "K": {"type": "integer", "minimum": 2},
        "R": {"type": "number", "exclusiveMinimum": 0},
    },
}

_ERROR = {
    "type": "object",
    "required": ["error"],
    "properties": {"error": {"type": "object", "required": ["name", "message"],
                             "properties": {"name": {"type": "string"}, "message": {"type": "string"}}}},
}

REPORTS = {
    "validate": {"type": "object", "required": ["valid", "market", "residuals"]},
    "conditions": {
        "type": "object",
        "required": ["market_kind", "orthogonality_residual", "mass_lhs", "mass_rhs", "orthogonality_passed",
                     "mass_passed", "tolerance_used", "reference_mass", "reference_normalized", "passed"],
        "properties": {"orthogonality_residual": _NUM, "mass_lhs": _NUM, "mass_rhs": _NUM,
                       "orthogonality_passed": {"type": "boolean"}, "mass_passed": {"type": "boolean"},
                       "passed": {"type": "boolean"}, "joint_kernel_residual": _NUM_OR_NULL},
    },
    "alpha": {"type": "object", "required": ["value", "method", "error_estimate"],
              "properties": {"value": _NUM, "method": {"enum": ["closed-form", "quadrature", "exact-sum",
                                                                 "monte-carlo"]},
                             "error_estimate": {"type": "number", "minimum": 0}}},
    "feasibility": {"type": "object", "required": ["feasible", "D", "max_spread", "tolerance_used"],
                    "properties": {"feasible": {"type": "boolean"}, "D": _NUM_OR_NULL,
                                   "per_outcome_D": {"type": "array", "items": _NUM_OR_NULL}}},
    "optimal": {"type": "object", "required": ["strategy", "feasibility"],
                "properties": {"strategy": STRATEGY}},
    "exact": {"type": "object",
              "required": ["expected_rate", "n", "sequences_enumerated", "supermartingale_gap", "alpha"],
              "properties": {"expected_rate": _NUM, "n": {"type": "integer"},
                             "sequences_enumerated": {"type": "integer"}}},
    "sweep": {"type": "object", "required": ["points", "argmax"],
              "properties": {"points": {"type": "array", "items": {
                  "type": "object", "required": ["D", "expected_rate", "gap"]}}}},
    "simulate": {"type": "object",
                 "required": ["paths", "n", "mean_S_n", "std_error", "alpha_times_n", "z_score", "seed",
                              "ruin_count"],
                 "properties": {"paths": {"type": "integer", "minimum": 1}, "std_error": {"type": "number",
                                                                                         "minimum": 0},
                                "z_score": _NUM_OR_NULL, "seed": {"type": "integer"}}},
    "drift-test": {"type": "object", "required": ["paths", "n", "seed", "alpha", "steps"],
                   "properties": {"steps": {"type": "array", "items": {
                       "type": "object", "required": ["step", "mean", "std_error", "z_score"]}}}},
    "gaussian-return": {"type": "object", "required": ["return", "points", "values", "growth"]},
    "trajectory": {"type": "object", "required": ["wealth", "rate", "compensator", "alpha"]},
    "error": _ERROR,
}

INPUTS = {"market": MARKET, "strategy": STRATEGY, "grid": GRID}


def validate(instance, name):
    schema = INPUTS.get(name) or REPORTS[name]
    try:
        jsonschema.validate(instance, schema)
    except jsonschema.ValidationError as exc:
        raise SchemaError(f"{name} does not match schema: {exc.message}") from None


def validate_report(instance, command):
    """Validate an emitted report (or error object) against the published schema."""
    if isinstance(instance, dict) and "error" in instance:
        validate(instance, "error")
    else:
        validate(instance, command)


def _encode(obj):
    if isinstance(obj, bool) or obj is None:
        return json.dumps(obj)
    if isinstance(obj, float):
        if not math.isfinite(obj):
            return "null"
        text = format(obj, ".17g")
        # keep floats recognisable as floats after parsing
        if not any(c in text for c in ".eE"):
            text += ".0"
        return text
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        return "{" + ", ".join(f"{json.dumps(str(k))}: {_encode(v)}" for k, v in obj.items()) + "}"
    if isinstance(obj, (list, tuple)):
        return "[" + ", ".join(_encode(v) for v in obj) + "]"
    if hasattr(obj, "tolist"):
        return _encode(obj.tolist())
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def dumps(obj) -> str:
    """JSON text with every float written to 17 significant digits."""
    return _encode(obj)
