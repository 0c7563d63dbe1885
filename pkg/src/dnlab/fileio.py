"""JSON ingestion and emission for graphs, vertex functions and boundary forms."""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .errors import SpecError
from .graph import Tail, VertexFunction, WeightedGraph, build_graph
from .star import BoundaryForm, StarGraph


def read_json(path) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise SpecError(f"cannot read {path}: {exc.strerror}") from None
    try:
        return json.loads(text, parse_float=lambda s: float(s))
    except json.JSONDecodeError as exc:
        raise SpecError(f"{path}: invalid JSON ({exc.msg} at line {exc.lineno})") from None


def load_graph(path) -> WeightedGraph:
    return build_graph(read_json(path))


def star_from_spec(spec: dict) -> StarGraph:
    """StarGraph from a generator spec ``{"generator": "star", "N", "weights", "depth"}``."""
    gen = spec.get("generator")
    params = dict(spec.get("params", {}))
    if isinstance(gen, dict):
        params.update({k: v for k, v in gen.items() if k != "type"})
        gen = gen.get("type")
    params.update({k: v for k, v in spec.items() if k not in ("generator", "params")})
    if gen != "star":
        raise SpecError("expected a star generator spec")
    try:
        return StarGraph(
            int(params["N"]), params.get("weights", "geometric:2"), int(params["depth"]),
            params.get("measure", "summable"),
        )
    except KeyError as exc:
        raise SpecError(f"star spec is missing {exc.args[0]!r}") from None


def parse_tail(data) -> Tail:
    if data is None:
        return Tail()
    if not isinstance(data, dict) or "rule" not in data:
        raise SpecError("tail must be an object with a 'rule'")
    rule = data["rule"]
    if rule == "zero":
        return Tail()
    if rule == "constant":
        return Tail.constant(float(data["value"]))
    if rule in ("constant-per-ray", "per-ray"):
        return Tail.per_ray(float(v) for v in data["values"])
    raise SpecError(f"unknown tail rule {rule!r}")


def function_from_json(g: WeightedGraph, data: dict) -> VertexFunction:
    """``{"values": {vertex: value}, "tail": {"rule": ..., "value"/"values": ...}}``.

    Vertices not listed are 0.  A ``"default"`` entry fills every vertex of the
    truncation first.
    """
    if not isinstance(data, dict) or "values" not in data:
        raise SpecError("function file needs a 'values' object")
    vals = np.full(g.n, float(data.get("default", 0.0)))
    for v, x in data["values"].items():
        try:
            vals[g.index[str(v)]] = float(x)
        except KeyError:
            raise SpecError(f"function refers to unknown vertex {v!r}") from None
    return VertexFunction(g, vals, parse_tail(data.get("tail")))


def load_function(g: WeightedGraph, path) -> VertexFunction:
    return function_from_json(g, read_json(path))


def function_to_json(f: VertexFunction) -> dict:
    t = f.tail
    tail = {"rule": t.rule}
    if t.rule == "constant":
        tail["value"] = t.values[0]
    elif t.rule == "constant-per-ray":
        tail["values"] = list(t.values)
    return {"values": dict(zip(f.graph.labels, map(float, f.values))), "tail": tail}


def load_boundary_form(path) -> BoundaryForm:
    data = read_json(path)
    try:
        return BoundaryForm.from_json(data)
    except (KeyError, ValueError, TypeError) as exc:
        raise SpecError(f"{path}: bad boundary form ({exc})") from None


def dump(obj, path=None):
    """Write JSON with round-trip float precision to ``path`` or return the text."""
    text = json.dumps(obj, indent=2, default=_default)
    if path is None:
        return text
    Path(path).write_text(text + "\n")
    return text


def _default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.bool_):
        return bool(o)
    raise TypeError(f"not serializable: {type(o).__name__}")
