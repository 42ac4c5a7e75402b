"""JSON reading and writing for markets, price vectors, and allocations.

All numbers travel as exact-rational strings ("7", "5/4") or bare integers.
A float anywhere in a document is a parse error with its position; rounding
would silently break the strict-inequality margins everything here relies on.
Unknown fields are rejected so typos fail loudly instead of being ignored.
"""

import json
from fractions import Fraction

from .model import (
    Coverage,
    Explicit,
    KDemandItemDependent,
    Market,
    MarketError,
    ParseError,
    UnitDemand,
    as_rational,
    format_rational,
)


class _FloatSeen(Exception):
    def __init__(self, literal):
        self.literal = literal


def _locate(text, literal):
    idx = text.find(literal)
    if idx < 0:
        return None, None
    line = text.count("\n", 0, idx) + 1
    col = idx - (text.rfind("\n", 0, idx) + 1) + 1
    return line, col


def load_json(text):
    """json.loads that refuses floats and reports positions as ParseError."""
    def no_float(literal):
        raise _FloatSeen(literal)
    try:
        return json.loads(text, parse_float=no_float, parse_constant=no_float)
    except _FloatSeen as e:
        line, col = _locate(text, e.literal)
        raise ParseError(
            f'float literal {e.literal} is not exact; write "p/q"', line, col)
    except json.JSONDecodeError as e:
        raise ParseError(e.msg, e.lineno, e.colno)


def _rational(x, where):
    if isinstance(x, bool) or not isinstance(x, (int, str)):
        raise ParseError(f"{where}: expected an integer or a \"p/q\" string")
    try:
        return as_rational(x)
    except (MarketError, ValueError) as e:
        raise ParseError(f"{where}: {e}")


def _check_fields(obj, where, required, optional=()):
    if not isinstance(obj, dict):
        raise ParseError(f"{where}: expected an object")
    unknown = sorted(set(obj) - set(required) - set(optional))
    if unknown:
        raise ParseError(f"{where}: unknown field(s) {unknown}")
    missing = sorted(set(required) - set(obj))
    if missing:
        raise ParseError(f"{where}: missing field(s) {missing}")


def _subset_key(S) -> str:
    return " ".join(sorted(S))


def _parse_subset(key, items, where):
    names = key.split()
    bad = sorted(set(names) - set(items))
    if bad:
        raise ParseError(f"{where}: unknown item(s) {bad} in subset key {key!r}")
    return frozenset(names)


def _valuation_from_obj(obj, items, where):
    _check_fields(obj, where, ("type",),
                  ("values", "k", "interested", "weights",
                   "element_weights", "covers"))
    kind = obj.get("type")
    if kind == "unit_demand":
        _check_fields(obj, where, ("type", "values"))
        values = {b: _rational(q, f"{where}.values[{b!r}]")
                  for b, q in obj["values"].items()}
        return UnitDemand(items, values)
    if kind == "explicit":
        _check_fields(obj, where, ("type", "values"))
        table = {}
        for key, q in obj["values"].items():
            S = _parse_subset(key, items, where)
            table[S] = _rational(q, f"{where}.values[{key!r}]")
        return Explicit(items, table)
    if kind == "k_demand_item_dependent":
        _check_fields(obj, where, ("type", "k", "interested", "weights"))
        k = obj["k"]
        if isinstance(k, bool) or not isinstance(k, int):
            raise ParseError(f"{where}.k: expected an integer")
        weights = {b: _rational(q, f"{where}.weights[{b!r}]")
                   for b, q in obj["weights"].items()}
        return KDemandItemDependent(items, k, obj["interested"], weights)
    if kind == "coverage":
        _check_fields(obj, where, ("type", "element_weights", "covers"))
        weights = {e: _rational(q, f"{where}.element_weights[{e!r}]")
                   for e, q in obj["element_weights"].items()}
        covers = {b: set(es) for b, es in obj["covers"].items()}
        return Coverage(weights, covers)
    raise ParseError(f"{where}: unknown valuation type {kind!r}")


def _valuation_to_obj(v):
    if isinstance(v, UnitDemand):
        return {"type": "unit_demand",
                "values": {b: format_rational(q) for b, q in v.per_item.items()}}
    if isinstance(v, KDemandItemDependent):
        return {"type": "k_demand_item_dependent", "k": v.k,
                "interested": sorted(v.interested),
                "weights": {b: format_rational(q) for b, q in v.weights.items()}}
    if isinstance(v, Coverage):
        return {"type": "coverage",
                "element_weights": {e: format_rational(q)
                                    for e, q in v.element_weights.items()},
                "covers": {b: sorted(es) for b, es in v.covers.items()}}
    if isinstance(v, Explicit):
        return {"type": "explicit",
                "values": {_subset_key(S): format_rational(q)
                           for S, q in v.table.items() if S}}
    raise MarketError(f"cannot serialize valuation of type {type(v).__name__}")


def market_from_json(text) -> Market:
    obj = load_json(text)
    _check_fields(obj, "market", ("items", "agents"))
    items = obj["items"]
    if not isinstance(items, list) or not all(isinstance(b, str) for b in items):
        raise ParseError("market.items: expected a list of item names")
    agents = []
    for i, entry in enumerate(obj["agents"]):
        where = f"agents[{i}]"
        _check_fields(entry, where, ("name", "valuation"))
        name = entry["name"]
        if not isinstance(name, str):
            raise ParseError(f"{where}.name: expected a string")
        agents.append(
            (name, _valuation_from_obj(entry["valuation"], items,
                                       f"{where}.valuation")))
    try:
        return Market(items, agents)
    except MarketError as e:
        raise ParseError(f"market: {e}")


def market_to_json(m: Market) -> str:
    obj = {"items": list(m.items),
           "agents": [{"name": name, "valuation": _valuation_to_obj(v)}
                      for name, v in m.agents]}
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def prices_from_json(text):
    """A {"prices": {item: rational}} document as a dict of Fractions."""
    obj = load_json(text)
    _check_fields(obj, "prices file", ("prices",))
    return {b: _rational(q, f"prices[{b!r}]") for b, q in obj["prices"].items()}


def prices_to_json(prices) -> str:
    obj = {"prices": {str(b): format_rational(q) for b, q in prices.items()}}
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def allocation_from_json(text):
    """A {"allocation": {agent: [items]}} document as agent -> frozenset."""
    obj = load_json(text)
    _check_fields(obj, "allocation file", ("allocation",))
    out = {}
    for name, bundle in obj["allocation"].items():
        if not isinstance(bundle, list):
            raise ParseError(f"allocation[{name!r}]: expected a list of items")
        out[name] = frozenset(bundle)
    return out


def allocation_to_json(allocation) -> str:
    obj = {"allocation": {name: sorted(S) for name, S in allocation.items()}}
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"
