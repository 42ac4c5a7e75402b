from __future__ import annotations

from fractions import Fraction

import pytest

from postedprices.model import (
    Coverage,
    Explicit,
    KDemandItemDependent,
    Market,
    UnitDemand,
)


def F(x):
    return Fraction(x)


def fs(*items):
    return frozenset(items)


@pytest.fixture
def alice_bob_market():
    """Two unit-demand buyers, one contested item. R parametrizes nothing here:
    the fixture pins R = 5 so the optimum is 6."""
    items = ["a", "b"]
    alice = UnitDemand(items, {"a": 5, "b": 1})
    bob = UnitDemand(items, {"a": 1, "b": 1})
    return Market(items, [("alice", alice), ("bob", bob)])


@pytest.fixture
def cyclic_market():
    """Three unit-demand buyers whose interests form a cycle over three items."""
    items = ["a", "b", "c"]
    return Market(items, [
        ("alice", UnitDemand(items, {"a": 1, "b": 1})),
        ("bob", UnitDemand(items, {"b": 1, "c": 1})),
        ("carl", UnitDemand(items, {"c": 1, "a": 1})),
    ])


def coverage_valuation():
    weights = {
        "e1": Fraction(5, 4), "e5": Fraction(5, 4),
        "e2": Fraction(1, 4), "e3": Fraction(1, 4), "e4": Fraction(1, 4),
        "e6": Fraction(1, 4), "e7": Fraction(1, 4), "e8": Fraction(1, 4),
    }
    covers = {
        "a": {"e1", "e2", "e5", "e6"},
        "b": {"e1", "e2", "e3", "e4"},
        "c": {"e5", "e6", "e7", "e8"},
        "d": {"e1", "e4", "e5", "e8"},
    }
    return Coverage(weights, covers)


@pytest.fixture
def coverage_market():
    """One coverage buyer against three unit-demand buyers on items a, b, c, d."""
    items = ["a", "b", "c", "d"]
    return Market(items, [
        ("agent1", coverage_valuation()),
        ("agent2", UnitDemand(items, {"a": 2, "b": 2})),
        ("agent3", UnitDemand(items, {"a": 2, "c": 2})),
        ("agent4", UnitDemand(items, {"d": 1})),
    ])


def explicit_from_fn(items, fn):
    """Build an Explicit valuation by tabulating fn over all nonempty subsets."""
    from postedprices.model import subsets
    table = {}
    for S in subsets(items):
        if S:
            table[S] = fn(S)
    return Explicit(items, table)


@pytest.fixture
def kdemand_market():
    items = ["a", "b", "c"]
    w = {"a": 3, "b": 2, "c": 1}
    return Market(items, [
        ("x", KDemandItemDependent(items, 2, {"a", "b", "c"}, w)),
        ("y", KDemandItemDependent(items, 1, {"a", "c"}, w)),
    ])
