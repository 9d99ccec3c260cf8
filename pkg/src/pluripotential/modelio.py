"""JSON model documents.

    {"backend": "graph", "graph": {"vertices": N, "edges": [[i, j, w], ...]},
     "arithmetic": "rational" | "float", "omega": [...]}          (omega optional)
    {"backend": "toric", "toric": {"n": 1 | 2, "grid": N, "Q": [[...]]},
     "arithmetic": "rational" | "float"}

Rationals are written as "p/q" strings.
"""
from __future__ import annotations

import json

from . import arith
from .errors import ConstructionInvalid, PluriError
from .graph import GraphModel
from .model import Model
from .toric import ToricModel


class ModelParseError(PluriError):
    def __init__(self, message, line=None, column=None):
        where = f" at line {line}, column {column}" if line is not None else ""
        super().__init__(f"{message}{where}")
        self.line = line
        self.column = column


def model_from_dict(doc: dict) -> Model:
    if not isinstance(doc, dict):
        raise ModelParseError("model document must be a JSON object")
    backend = doc.get("backend")
    arithmetic = doc.get("arithmetic")
    try:
        if backend == "graph":
            exact = (arithmetic or "rational") == "rational"
            g = doc["graph"]
            edges = [(int(i), int(j), arith.parse_scalar(w)) for i, j, w in g["edges"]]
            omega = doc.get("omega")
            if omega is not None:
                omega = [arith.parse_scalar(w) for w in omega]
            return GraphModel(int(g["vertices"]), edges, exact=exact, omega=omega)
        if backend == "toric":
            exact = (arithmetic or "float") == "rational"
            t = doc["toric"]
            n = int(t["n"])
            q = [[arith.parse_scalar(x) for x in row] for row in t["Q"]]
            if not exact:
                q = [[float(x) for x in row] for row in q]
            return ToricModel(n, int(t["grid"]), q, exact=exact)
    except (KeyError, TypeError, ValueError, ZeroDivisionError) as exc:
        raise ModelParseError(f"malformed {backend} model: {exc!r}") from exc
    raise ConstructionInvalid(f"unknown backend {backend!r}")


def parse_model(text: str) -> Model:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ModelParseError(exc.msg, exc.lineno, exc.colno) from exc
    return model_from_dict(doc)


def load_model(path) -> Model:
    with open(path) as fh:
        return parse_model(fh.read())


def dump_model(model: Model) -> str:
    return json.dumps(model.to_dict(), sort_keys=True, indent=1)


def with_resolution(model: Model, grid=None, refine=0) -> Model:
    """Toric model at another grid size (grid, then refine doublings)."""
    if model.backend != "toric":
        if grid is not None or refine:
            raise ConstructionInvalid("--resolution/--refine apply to toric models only")
        return model
    size = model.N if grid is None else int(grid)
    size *= 2 ** int(refine)
    if size == model.N:
        return model
    return ToricModel(model.n, size, model.Q.tolist(), exact=model.exact)
