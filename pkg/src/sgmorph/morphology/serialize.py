"""JSON documents for (graph, design) pairs.

Layout::

    {"format": "sgmorph.morphology/1",
     "morphology_id": "...", "name": "...",
     "nodes": [{"parent": null, "mount": -0.5, "rest": 0.3,
                "params": [{"name": "length", "lo": 0.2, "hi": 0.6, "unit": "m"}]}, ...],
     "design": [0.41, ...]}          # optional, node-major

Floats are written with Python's shortest round-trip repr, so decoding
reproduces every value bit for bit. Edges are implicit in ``parent``.
"""

import json

from .design import Design, DesignSpace, ParamSpec
from .graph import GraphError, MorphologyGraph

FORMAT = "sgmorph.morphology/1"


class MorphologyFormatError(ValueError):
    def __init__(self, message, location):
        super().__init__(f"{location}: {message}")
        self.location = location


def to_dict(graph, params, design=None):
    doc = {
        "format": FORMAT,
        "morphology_id": graph.morphology_id,
        "name": graph.name,
        "nodes": [
            {
                "parent": graph.parents[i],
                "mount": graph.mounts[i],
                "rest": graph.rest_angles[i],
                "params": [{"name": p.name, "lo": p.lo, "hi": p.hi, "unit": p.unit} for p in params],
            }
            for i in range(graph.n_nodes)
        ],
    }
    if design is not None:
        doc["design"] = [float(v) for v in design.values]
    return doc


def dumps(graph, params, design=None, indent=None):
    return json.dumps(to_dict(graph, params, design), indent=indent)


def _need(obj, key, kind, where):
    if not isinstance(obj, dict) or key not in obj:
        raise MorphologyFormatError(f"missing field {key!r}", where)
    val = obj[key]
    if kind is float:
        if isinstance(val, bool) or not isinstance(val, (int, float)):
            raise MorphologyFormatError(f"field {key!r} must be a number", f"{where}.{key}")
        return float(val)
    if kind is not None and not isinstance(val, kind):
        raise MorphologyFormatError(f"field {key!r} has wrong type {type(val).__name__}", f"{where}.{key}")
    return val


def from_dict(doc):
    """Returns ``(graph, params, design_or_None)``."""
    if not isinstance(doc, dict):
        raise MorphologyFormatError("document must be an object", "$")
    if doc.get("format") != FORMAT:
        raise MorphologyFormatError(f"unsupported format {doc.get('format')!r}", "$.format")
    nodes = _need(doc, "nodes", list, "$")
    if not nodes:
        raise MorphologyFormatError("graph has no nodes", "$.nodes")
    parents, mounts, rests, params = [], [], [], None
    for k, node in enumerate(nodes):
        where = f"$.nodes[{k}]"
        parent = node.get("parent") if isinstance(node, dict) else None
        if parent is not None and (isinstance(parent, bool) or not isinstance(parent, int)):
            raise MorphologyFormatError("parent must be an integer or null", f"{where}.parent")
        mount = node.get("mount") if isinstance(node, dict) else None
        if mount is not None and (isinstance(mount, bool) or not isinstance(mount, (int, float))):
            raise MorphologyFormatError("mount must be a number or null", f"{where}.mount")
        rest = _need(node, "rest", float, where)
        plist = _need(node, "params", list, where)
        specs = []
        for j, p in enumerate(plist):
            pw = f"{where}.params[{j}]"
            try:
                specs.append(
                    ParamSpec(_need(p, "name", str, pw), _need(p, "lo", float, pw), _need(p, "hi", float, pw), p.get("unit", ""))
                )
            except MorphologyFormatError:
                raise
            except ValueError as exc:
                raise MorphologyFormatError(str(exc), pw) from None
        specs = tuple(specs)
        if params is None:
            params = specs
        elif specs != params:
            raise MorphologyFormatError("all nodes must share one parameter list", f"{where}.params")
        parents.append(parent)
        mounts.append(None if mount is None else float(mount))
        rests.append(rest)
    try:
        graph = MorphologyGraph(tuple(parents), tuple(mounts), tuple(rests), name=doc.get("name", ""))
    except GraphError as exc:
        raise MorphologyFormatError(str(exc), "$.nodes") from None
    if "morphology_id" in doc and doc["morphology_id"] != graph.morphology_id:
        raise MorphologyFormatError(
            f"stated id {doc['morphology_id']!r} does not match topology {graph.morphology_id!r}", "$.morphology_id"
        )
    design = None
    if "design" in doc:
        values = doc["design"]
        if not isinstance(values, list):
            raise MorphologyFormatError("design must be a list of numbers", "$.design")
        try:
            design = Design(DesignSpace(graph.n_nodes, params), values)
        except (TypeError, ValueError) as exc:
            raise MorphologyFormatError(str(exc), "$.design") from None
    return graph, params, design


def loads(text):
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise MorphologyFormatError(exc.msg, f"line {exc.lineno} column {exc.colno}") from None
    return from_dict(doc)
