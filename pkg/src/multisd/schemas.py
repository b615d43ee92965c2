"""JSON schemas for every report the command line emits."""
from __future__ import annotations

NUM = {"type": ["number", "null"]}
_GRID = {
    "type": "object",
    "required": ["lo", "hi", "points", "spacing"],
    "properties": {
        "lo": {"type": "number"},
        "hi": {"type": "number"},
        "points": {"type": "integer", "minimum": 2},
        "spacing": {"enum": ["log", "linear"]},
    },
}
_VERDICT = {"enum": ["member", "nonmember", "inconclusive"]}

_CONSTANT = {
    "type": "object",
    "required": ["name", "value", "reference_values", "abs_diffs"],
    "properties": {
        "name": {"type": "string"},
        "value": {"type": "number"},
        "achieving_x": NUM,
        "closed_form": NUM,
        "reference_values": {"type": "array", "items": {"type": "number"}},
        "abs_diffs": {"type": "array", "items": {"type": "number"}},
    },
}

CONSTANTS = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "constants",
    "type": "object",
    "required": ["t0", "x0", "t1", "x0_residual", "reports"],
    "properties": {
        "t0": {"type": "number"},
        "x0": {"type": "number"},
        "t1": {"type": "number"},
        "x0_residual": {"type": "number"},
        "reports": {
            "type": "object",
            "required": ["t0", "x0", "t1"],
            "additionalProperties": _CONSTANT,
        },
    },
}

MN_CERTIFICATE = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "mn_certificate",
    "type": "object",
    "required": ["order", "verdict", "failed_order", "witness", "margin", "grid", "method", "notes"],
    "properties": {
        "function": {"type": "string"},
        "params": {"type": "object"},
        "order": {"type": "integer", "minimum": 0},
        "verdict": _VERDICT,
        "failed_order": {"type": ["integer", "null"]},
        "witness": NUM,
        "margin": NUM,
        "grid": _GRID,
        "method": {"type": "string"},
        "notes": {"type": "array", "items": {"type": "string"}},
    },
}

SD_VERDICT = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "sd_verdict",
    "type": "object",
    "required": ["kind", "max_verified_n", "orders", "integrability", "sd_infinity", "notes"],
    "properties": {
        "kind": {"enum": ["subordinator", "laplace_exponent"]},
        "label": {"type": "string"},
        "max_verified_n": {"type": "integer", "minimum": -1},
        "orders": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["n", "verdict", "failed_order", "witness", "margin"],
                "properties": {
                    "n": {"type": "integer"},
                    "verdict": _VERDICT,
                    "failed_order": {"type": ["integer", "null"]},
                    "witness": NUM,
                    "margin": NUM,
                },
            },
        },
        "integrability": {"type": "array", "items": {"type": "boolean"}},
        "sd_infinity": {"anyOf": [_VERDICT, {"type": "null"}]},
        "notes": {"type": "array", "items": {"type": "string"}},
    },
}

_KS = {
    "type": "object",
    "required": ["statistic", "p_value", "n1", "n2"],
    "properties": {
        "statistic": {"type": "number", "minimum": 0, "maximum": 1},
        "p_value": {"type": "number", "minimum": 0, "maximum": 1},
        "n1": {"type": "integer"},
        "n2": {"type": "integer"},
    },
}

VERIFICATION = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "verification",
    "type": "object",
    "required": ["identity", "params", "per_lambda", "pass"],
    "properties": {
        "identity": {"type": "string"},
        "params": {"type": "object"},
        "per_lambda": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["lambda", "empirical", "se", "analytic", "z"],
                "properties": {k: NUM for k in ("lambda", "empirical", "se", "analytic", "z")},
            },
        },
        "ks": _KS,
        "pass": {"type": "boolean"},
    },
}

GRID_VALUES = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "grid_values",
    "type": "object",
    "required": ["function", "params", "grid", "columns", "rows"],
    "properties": {
        "function": {"type": "string"},
        "params": {"type": "object"},
        "grid": _GRID,
        "columns": {"type": "array", "items": {"type": "string"}},
        "rows": {"type": "array", "items": {"type": "array", "items": NUM}},
        "summary": {"type": "object"},
    },
}

SCHEMAS = {
    "constants": CONSTANTS,
    "mn_certificate": MN_CERTIFICATE,
    "sd_verdict": SD_VERDICT,
    "verification": VERIFICATION,
    "grid_values": GRID_VALUES,
}
