from __future__ import annotations

from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from postedprices.matching import item_complete_matching
from postedprices.model import InvariantViolation, Market, UnitDemand
from postedprices.pricegraph import (
    RelationGraph,
    all_pairs_shortest,
    build_relation_graph,
    detect_negative_cycle,
    dump_edges,
    find_prices,
    find_prices_detailed,
    mark_zero_cycle_edges,
    min_positive_cycle_weight,
    verify_constraints,
)


def _graph(alice_bob_market):
    matching = {"a": "alice", "b": "bob"}
    return build_relation_graph(alice_bob_market, matching)


def _cyclic_graph(cyclic_market):
    matching = {"a": "alice", "b": "bob", "c": "carl"}
    return build_relation_graph(cyclic_market, matching)


class TestBuild:
    def test_two_item_weights(self, alice_bob_market):
        g = _graph(alice_bob_market)
        assert g.edges == {("a", "b"): Fraction(4), ("b", "a"): Fraction(0)}
        assert g.owner == {"a": "alice", "b": "bob"}
        assert g.matched_value == {"a": Fraction(5), "b": Fraction(1)}

    def test_dummy_owner_rows_are_zero(self, alice_bob_market):
        g = build_relation_graph(alice_bob_market, {"a": "alice", "b": None})
        assert g.edges[("b", "a")] == 0
        assert g.edges[("a", "b")] == 4
        assert g.matched_value["b"] == 0

    def test_cyclic_weights(self, cyclic_market):
        g = _cyclic_graph(cyclic_market)
        assert g.edges == {
            ("a", "b"): Fraction(0), ("a", "c"): Fraction(1),
            ("b", "c"): Fraction(0), ("b", "a"): Fraction(1),
            ("c", "a"): Fraction(0), ("c", "b"): Fraction(1),
        }

    def test_dump_edges_is_sorted_and_stringly(self, alice_bob_market):
        g = _graph(alice_bob_market)
        assert dump_edges(g) == [("a", "b", "4"), ("b", "a", "0")]


class TestShortestPaths:
    def test_small_dag(self):
        edges = {(1, 2): Fraction(5), (2, 3): Fraction(-2), (1, 3): Fraction(4)}
        dist = all_pairs_shortest((1, 2, 3), edges)
        assert dist[1][3] == 3
        assert dist[1][2] == 5
        assert dist[2][3] == -2
        assert dist[3][1] is None
        assert dist[1][1] is None  # no cycle through 1

    def test_diagonal_holds_min_cycle(self):
        edges = {("x", "y"): Fraction(2), ("y", "x"): Fraction(-1)}
        dist = all_pairs_shortest(("x", "y"), edges)
        assert dist["x"]["x"] == 1
        assert dist["y"]["y"] == 1


class TestNegativeCycle:
    def test_none_on_fixture_graphs(self, alice_bob_market, cyclic_market):
        assert detect_negative_cycle(_graph(alice_bob_market)) is None
        assert detect_negative_cycle(_cyclic_graph(cyclic_market)) is None

    def test_certificate_is_a_real_negative_cycle(self):
        g = RelationGraph(
            ["x", "y", "z"],
            {("x", "y"): Fraction(-2), ("y", "x"): Fraction(1),
             ("y", "z"): Fraction(5), ("z", "x"): Fraction(5)})
        cycle = detect_negative_cycle(g)
        assert cycle is not None
        assert len(set(cycle)) == len(cycle) >= 2
        total = Fraction(0)
        for i, u in enumerate(cycle):
            v = cycle[(i + 1) % len(cycle)]
            assert (u, v) in g.edges
            total += g.edges[(u, v)]
        assert total < 0

    def test_mark_zero_cycles_refuses_negative_graphs(self):
        g = RelationGraph(["x", "y"], {("x", "y"): Fraction(-2), ("y", "x"): Fraction(1)})
        with pytest.raises(InvariantViolation):
            mark_zero_cycle_edges(g)


class TestZeroCyclesAndMargin:
    def test_no_zero_cycles_in_two_item_graph(self, alice_bob_market):
        g = _graph(alice_bob_market)
        assert mark_zero_cycle_edges(g) == set()
        assert min_positive_cycle_weight(g) == 4

    def test_cyclic_graph_zero_cycle_is_cut(self, cyclic_market):
        g = _cyclic_graph(cyclic_market)
        assert mark_zero_cycle_edges(g) == {("a", "b"), ("b", "c"), ("c", "a")}
        assert min_positive_cycle_weight(g) == 1

    def test_no_positive_cycle_returns_none(self):
        g = RelationGraph(["x", "y"], {("x", "y"): Fraction(0), ("y", "x"): Fraction(0)})
        assert mark_zero_cycle_edges(g) == {("x", "y"), ("y", "x")}
        assert min_positive_cycle_weight(g) is None


class TestFindPrices:
    def test_two_item_pipeline_prices(self, alice_bob_market):
        g = _graph(alice_bob_market)
        eps = Fraction(4, 3)  # delta 4 over |I| + 1 = 3
        reduced = {e: w - eps for e, w in g.edges.items()}
        prices = find_prices(g.vertices, reduced)
        assert prices == {"a": Fraction(4, 3), "b": Fraction(0)}
        assert verify_constraints(g, prices) is None

    def test_cyclic_pipeline_prices_are_zero(self, cyclic_market):
        g = _cyclic_graph(cyclic_market)
        removed = mark_zero_cycle_edges(g)
        eps = Fraction(1, 4)
        reduced = {e: w - eps for e, w in g.edges.items() if e not in removed}
        prices = find_prices(g.vertices, reduced)
        assert prices == {"a": 0, "b": 0, "c": 0}
        assert verify_constraints(g, prices, removed) is None

    def test_prices_come_from_shortest_paths(self):
        edges = {("a", "b"): Fraction(-3), ("b", "c"): Fraction(-1)}
        prices, dist = find_prices_detailed(("a", "b", "c"), edges)
        assert prices == {"a": 0, "b": 3, "c": 4}
        assert dist["a"]["c"] == -4

    def test_no_edges_means_zero_prices(self):
        assert find_prices(("a",), {}) == {"a": 0}


class TestVerifyConstraints:
    def test_detects_negative_price(self, alice_bob_market):
        g = _graph(alice_bob_market)
        msg = verify_constraints(g, {"a": Fraction(-1), "b": Fraction(0)})
        assert msg is not None and "negative price" in msg

    def test_detects_weak_edge_inequality(self, alice_bob_market):
        g = _graph(alice_bob_market)
        # p(a) - p(b) = 4 is not strictly below the weight 4
        msg = verify_constraints(g, {"a": Fraction(4), "b": Fraction(0)})
        assert msg is not None and "(a, b)" in msg

    def test_removed_edges_are_not_checked(self, alice_bob_market):
        g = _graph(alice_bob_market)
        prices = {"a": Fraction(0), "b": Fraction(0)}
        assert verify_constraints(g, prices, removed={("b", "a")}) is None
        msg = verify_constraints(g, prices)
        assert msg is not None  # the zero-weight edge (b, a) now binds

    def test_detects_price_at_matched_value(self, alice_bob_market):
        g = _graph(alice_bob_market)
        msg = verify_constraints(g, {"a": Fraction(2), "b": Fraction(1)},
                                 removed=set(g.edges))
        assert msg is not None and "matched value" in msg


small_q = st.integers(min_value=0, max_value=9).map(Fraction)
items4 = ["a", "b", "c", "d"]
names4 = ["w", "x", "y", "z"]


@st.composite
def unit_demand_markets(draw):
    n = draw(st.integers(1, 4))
    k = draw(st.integers(1, 4))
    items = items4[:k]
    agents = [(name, UnitDemand(items, {b: draw(small_q) for b in items}))
              for name in names4[:n]]
    return Market(items, agents)


@settings(max_examples=100, deadline=None)
@given(unit_demand_markets())
def test_max_matching_graph_has_no_negative_cycle(m):
    g = build_relation_graph(m, item_complete_matching(m))
    assert detect_negative_cycle(g) is None


@settings(max_examples=100, deadline=None)
@given(unit_demand_markets())
def test_margin_reduction_satisfies_all_constraints(m):
    g = build_relation_graph(m, item_complete_matching(m))
    removed = mark_zero_cycle_edges(g)
    delta = min_positive_cycle_weight(g)
    if delta is None:
        positives = sorted(v for v in g.matched_value.values() if v > 0)
        delta = positives[0] if positives else Fraction(1)
    eps = delta / (len(g.vertices) + 1)
    reduced = {e: w - eps for e, w in g.edges.items() if e not in removed}
    prices = find_prices(g.vertices, reduced)
    assert verify_constraints(g, prices, removed) is None
    # surviving cycles stay at least delta heavy in the original weights
    dist = all_pairs_shortest(g.vertices, g.edges)
    for (u, v), w in g.edges.items():
        if (u, v) not in removed and dist[v][u] is not None:
            assert w + dist[v][u] >= delta
