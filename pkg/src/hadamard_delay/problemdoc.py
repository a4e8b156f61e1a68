"""JSON problem documents: validation, normalisation, and construction.

A document fixes the full delay problem: order, delay base, horizon,
matrices, weighted initial value, history (power / constant / expression),
right-hand side (zero / expression over t and y), Lipschitz data and
evaluation policies.  ``build_problem`` returns a linear problem when the
right side does not reference the state and a semilinear one otherwise.
"""

from __future__ import annotations

import json
import math

import jsonschema
import numpy as np

from .delayed_ml import DelayedMLSpec
from .errors import DomainError
from .logquad import QuadraturePolicy
from .problems import HistorySpec, LinearDelayProblem, SemilinearProblem
from .rhs import parse_rhs
from .special import SeriesPolicy, gamma, rgamma

__all__ = ["DOCUMENT_SCHEMA", "SchemaError", "load_document", "normalize_document", "build_problem"]


class SchemaError(ValueError):
    """Document violates the schema or its cross-field constraints."""


_MATRIX = {
    "type": "array",
    "minItems": 1,
    "items": {"type": "array", "minItems": 1, "items": {"type": "number"}},
}

DOCUMENT_SCHEMA = {
    "type": "object",
    "required": ["alpha", "h", "l", "A0", "A1", "a", "history", "rhs"],
    "additionalProperties": False,
    "properties": {
        "alpha": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
        "h": {"type": "number", "exclusiveMinimum": 1},
        "l": {"type": "integer", "minimum": 1},
        "A0": _MATRIX,
        "A1": _MATRIX,
        "a": {"type": "array", "minItems": 1, "items": {"type": "number"}},
        "gamma": {"type": "number", "minimum": 0},
        "history": {
            "type": "object",
            "required": ["kind"],
            "additionalProperties": False,
            "properties": {
                "kind": {"enum": ["power", "constant", "expression"]},
                "params": {"type": "object"},
            },
        },
        "rhs": {
            "type": "object",
            "required": ["kind"],
            "additionalProperties": False,
            "properties": {
                "kind": {"enum": ["zero", "expression"]},
                "source": {
                    "anyOf": [
                        {"type": "string"},
                        {"type": "array", "items": {"type": "string"}, "minItems": 1},
                    ]
                },
            },
        },
        "lipschitz": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "L_f": {"type": "number", "minimum": 0},
                "L_2": {"type": "number", "minimum": 0},
            },
        },
        "policies": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "series": {
                    "type": "object",
                    "additionalProperties": False,
                    "properties": {
                        "rel_tol": {"type": "number", "exclusiveMinimum": 0},
                        "max_terms": {"type": "integer", "minimum": 1},
                    },
                },
                "quad": {
                    "type": "object",
                    "additionalProperties": False,
                    "properties": {
                        "nodes_per_panel": {"type": "integer", "minimum": 2},
                        "panel_count": {"type": "integer", "minimum": 1},
                    },
                },
            },
        },
    },
}


def load_document(source) -> dict:
    """Parse (from a path, file object, JSON text, or dict) and validate."""
    if isinstance(source, dict):
        doc = source
    elif hasattr(source, "read"):
        doc = json.load(source)
    else:
        text = str(source)
        if text.lstrip().startswith("{"):
            doc = json.loads(text)
        else:
            with open(text, "r", encoding="utf-8") as fh:
                doc = json.load(fh)
    try:
        jsonschema.validate(doc, DOCUMENT_SCHEMA)
    except jsonschema.ValidationError as exc:
        raise SchemaError(f"problem document invalid: {exc.message}") from exc
    return normalize_document(doc)


def normalize_document(doc: dict) -> dict:
    """Fill defaults, check cross-field consistency, fix key order."""
    A0 = np.asarray(doc["A0"], dtype=float)
    A1 = np.asarray(doc["A1"], dtype=float)
    a = np.asarray(doc["a"], dtype=float)
    n = a.shape[0]
    for name, M in (("A0", A0), ("A1", A1)):
        if M.ndim != 2 or M.shape != (n, n):
            raise SchemaError(f"{name} must be {n}x{n} to match 'a', got {M.shape}")
    alpha = float(doc["alpha"])
    gamma_w = float(doc.get("gamma", 0.0))
    if not 0.0 <= gamma_w < alpha:
        raise SchemaError(f"gamma must lie in [0, alpha), got {gamma_w} with alpha {alpha}")

    history = dict(doc["history"])
    params = dict(history.get("params", {}))
    kind = history["kind"]
    if kind == "power":
        coeff = params.get("coeff")
        if coeff is None or len(coeff) != n:
            raise SchemaError(f"power history needs 'coeff' of length {n}")
        params = {"coeff": [float(c) for c in coeff],
                  "exponent": float(params.get("exponent", alpha - 1.0))}
        if not params["exponent"] > -1.0:
            raise SchemaError("power history exponent must exceed -1")
    elif kind == "constant":
        value = params.get("value")
        if value is None or len(value) != n:
            raise SchemaError(f"constant history needs 'value' of length {n}")
        params = {"value": [float(v) for v in value]}
    else:
        source = params.get("source")
        if isinstance(source, str):
            source = [source]
        if source is None or len(source) != n:
            raise SchemaError(f"expression history needs {n} component source(s)")
        for comp in source:
            parse_rhs(comp, 0)  # only t allowed
        params = {"source": [str(x) for x in source]}

    rhs = dict(doc["rhs"])
    if rhs["kind"] == "zero":
        rhs = {"kind": "zero"}
    else:
        source = rhs.get("source")
        if isinstance(source, str):
            source = [source]
        if source is None or len(source) != n:
            raise SchemaError(f"expression rhs needs {n} component source(s)")
        exprs = [parse_rhs(comp, n) for comp in source]
        rhs = {"kind": "expression", "source": [str(x) for x in source]}
        if any(e.uses_state for e in exprs) and "lipschitz" not in doc:
            raise SchemaError("state-dependent rhs requires the 'lipschitz' field")

    lip = dict(doc.get("lipschitz", {}))
    lip = {"L_f": float(lip.get("L_f", 0.0)), "L_2": float(lip.get("L_2", 0.0))}

    pol = dict(doc.get("policies", {}))
    series = dict(pol.get("series", {}))
    quad = dict(pol.get("quad", {}))
    pol = {
        "series": {
            "rel_tol": float(series.get("rel_tol", 1e-14)),
            "max_terms": int(series.get("max_terms", 2000)),
        },
        "quad": {
            "nodes_per_panel": int(quad.get("nodes_per_panel", 32)),
            "panel_count": int(quad.get("panel_count", 8)),
        },
    }

    return {
        "alpha": alpha,
        "h": float(doc["h"]),
        "l": int(doc["l"]),
        "A0": A0.tolist(),
        "A1": A1.tolist(),
        "a": a.tolist(),
        "gamma": gamma_w,
        "history": {"kind": kind, "params": params},
        "rhs": rhs,
        "lipschitz": lip,
        "policies": pol,
    }


def _build_history(doc: dict) -> HistorySpec:
    alpha = doc["alpha"]
    h = doc["h"]
    kind = doc["history"]["kind"]
    params = doc["history"]["params"]
    if kind == "power":
        coeff = np.asarray(params["coeff"], dtype=float)
        e = params["exponent"]
        # D^alpha (ln th)^e = Gamma(e+1)/Gamma(e+1-alpha) (ln th)^(e-alpha);
        # e = alpha - 1 sits on the reciprocal-gamma zero, so snap to it
        if abs(e + 1.0 - alpha) < 1e-13:
            dcoef = 0.0
        else:
            dcoef = gamma(e + 1.0) * rgamma(e + 1.0 - alpha)
        phi = lambda t: coeff * math.log(t * h) ** e
        if dcoef == 0.0:
            deriv = lambda t: np.zeros_like(coeff)
            sing = e
        else:
            deriv = lambda t: coeff * dcoef * math.log(t * h) ** (e - alpha)
            sing = min(e - alpha, e)
        return HistorySpec(phi=phi, phi_frac_deriv=deriv, singular_exponent=sing)
    if kind == "constant":
        value = np.asarray(params["value"], dtype=float)
        rg = rgamma(1.0 - alpha)
        return HistorySpec(
            phi=lambda t: value,
            phi_frac_deriv=lambda t: value * rg * math.log(t * h) ** (-alpha),
            singular_exponent=-alpha,
        )
    exprs = [parse_rhs(src, 0) for src in params["source"]]
    phi = lambda t: np.array([e(t) for e in exprs])
    return HistorySpec(phi=phi, phi_frac_deriv=None, mode="numeric-fallback")


def build_problem(doc: dict):
    """Construct the runnable problem; semilinear iff the rhs references y."""
    doc = normalize_document(doc)
    spec = DelayedMLSpec(
        alpha=doc["alpha"],
        beta=doc["alpha"],
        h=doc["h"],
        A0=np.asarray(doc["A0"], dtype=float),
        A1=np.asarray(doc["A1"], dtype=float),
        series=SeriesPolicy(**doc["policies"]["series"]),
        quad=QuadraturePolicy(**doc["policies"]["quad"]),
    )
    n = len(doc["a"])
    history = _build_history(doc)

    forcing = None
    rhs_exprs = None
    if doc["rhs"]["kind"] == "expression":
        rhs_exprs = [parse_rhs(src, n) for src in doc["rhs"]["source"]]

    state_dep = rhs_exprs is not None and any(e.uses_state for e in rhs_exprs)
    if rhs_exprs is not None and not state_dep:
        forcing = lambda t: np.array([e(t) for e in rhs_exprs])

    linear = LinearDelayProblem(
        spec=spec,
        a=np.asarray(doc["a"], dtype=float),
        history=history,
        forcing=forcing,
        horizon_exponent=doc["l"],
    )
    if not state_dep:
        return linear

    def rhs(t, y):
        return np.array([e(t, y) for e in rhs_exprs])

    return SemilinearProblem(
        linear=linear,
        rhs=rhs,
        lipschitz=doc["lipschitz"]["L_f"],
        affine_bound=doc["lipschitz"]["L_2"],
        gamma_weight=doc["gamma"],
    )
