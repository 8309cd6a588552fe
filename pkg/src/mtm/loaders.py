"""JSON model files: plain trace sets or route systems."""
from __future__ import annotations

import json
from pathlib import Path
from typing import Mapping

from .errors import InvalidRule, InvalidTrace, MTMError
from .modular import RouteSystem, expand_route_system, load_route_system, parse_points
from .traces import MTModel, build_trace_set, make_rule, rule_from_mapping, uniform_rule


def load_trace_model(data: Mapping, exact: bool = True) -> MTModel:
    """``{"points": [...], "traces": [[...]], "rule": "uniform" | {"weights": ...}}``.

    Points are objects ``{"id", "coords", "label"}`` or bare labels; traces
    may name points by id or label. ``weights`` is a list aligned with
    ``traces`` or a mapping from trace index to weight, normalised per start
    point.
    """
    try:
        points, lookup = parse_points(data.get("points"))
        traces = [[lookup(p) for p in t] for t in data["traces"]]
        rule = data.get("rule", "uniform")
    except (KeyError, TypeError, AttributeError) as e:
        raise InvalidTrace(f"malformed model: {e}") from None
    ts = build_trace_set(traces, points)
    if rule == "uniform":
        return MTModel(ts, uniform_rule(ts, exact), exact)
    if not isinstance(rule, Mapping) or "weights" not in rule:
        raise InvalidRule('rule must be "uniform" or {"weights": ...}')
    w = rule["weights"]
    if isinstance(w, Mapping):
        mapping = {int(k): v for k, v in w.items()}
    elif isinstance(w, list) and len(w) == len(traces):
        mapping = dict(enumerate(w))
    else:
        raise InvalidRule("weights must be a mapping or a list with one entry per trace")
    return MTModel(ts, rule_from_mapping(ts, mapping, exact), exact)


def load_model(source: str | Path | Mapping, exact: bool = True) -> tuple[MTModel, RouteSystem | None]:
    """Read a model file; route systems are expanded and also returned."""
    if isinstance(source, Mapping):
        data = source
    else:
        try:
            data = json.loads(Path(source).read_text())
        except OSError as e:
            raise MTMError(f"cannot read {source}: {e.strerror}") from None
        except json.JSONDecodeError as e:
            raise MTMError(f"{source} is not valid JSON: {e}") from None
    if not isinstance(data, Mapping):
        raise InvalidTrace("model file must hold a JSON object")
    if "routes" in data:
        rs = load_route_system(data)
        return expand_route_system(rs, exact), rs
    return load_trace_model(data, exact), None
