"""Relation graphs over unsold items and shortest-path price extraction.

For a round with unsold items I and an item-complete max matching, the
relation graph is the complete digraph on I where the edge from b to b2
weighs how much the agent matched to b prefers b over b2. Prices that charge
p(b1) - p(b2) strictly below every surviving edge weight keep every buyer's
purchase consistent with some maximum matching; they are extracted from
all-pairs shortest paths after cutting zero-weight cycles and shaving a
margin off the remaining weights.
"""

from fractions import Fraction

from .model import InvariantViolation, Market, format_rational


def vertex_key(v):
    """Total order over heterogeneous vertices (items, tuples, frozensets)."""
    if isinstance(v, frozenset):
        return (2, tuple(sorted(str(x) for x in v)))
    if isinstance(v, tuple):
        return (1, tuple(str(x) for x in v))
    return (0, (str(v),))


def edge_key(e):
    return (vertex_key(e[0]), vertex_key(e[1]))


class RelationGraph:
    """A weighted digraph over unsold items, with ownership metadata.

    Attributes:
        vertices: sorted tuple of items.
        edges: dict (u, v) -> Fraction weight, u != v.
        owner: dict item -> agent name, or None where the matching padded
            the item with a zero-value dummy owner.
        matched_value: dict item -> the owner's value for it (0 under a dummy).

    Synthetic graphs for tests may omit owner/matched_value; both default to
    dummies/zeros, which only exercises the vacuous branches of the price
    constraints.
    """

    def __init__(self, vertices, edges, owner=None, matched_value=None):
        self.vertices = tuple(sorted(vertices, key=vertex_key))
        vs = set(self.vertices)
        self.edges = {}
        for (u, v), w in edges.items():
            if u not in vs or v not in vs or u == v:
                raise ValueError(f"bad edge ({u!r}, {v!r})")
            self.edges[(u, v)] = Fraction(w)
        self.owner = dict(owner) if owner else {b: None for b in self.vertices}
        if matched_value:
            self.matched_value = {b: Fraction(q) for b, q in matched_value.items()}
        else:
            self.matched_value = {b: Fraction(0) for b in self.vertices}


def build_relation_graph(m: Market, matching) -> RelationGraph:
    """The relation graph induced by an item-complete matching.

    `matching` maps item -> agent (None for a dummy owner). The edge from b
    to b2 carries v_a(b) - v_a(b2) for a the owner of b; dummy owners value
    everything at 0, so their rows are identically zero. Vertices outside
    the market's item set act as padding worth 0 to everybody; the row of an
    agent matched to one prices every real item strictly above that agent's
    values, so walking away stays their unique best move.
    """
    vertices = sorted(matching, key=vertex_key)
    real = set(m.items)
    values = {}
    for b, a in matching.items():
        values[b] = {}
        for b2 in vertices:
            if a is None or b2 not in real:
                values[b][b2] = Fraction(0)
            else:
                values[b][b2] = m.valuation(a).value({b2})
    edges = {}
    for b in vertices:
        for b2 in vertices:
            if b != b2:
                edges[(b, b2)] = values[b][b] - values[b][b2]
    matched_value = {b: values[b][b] for b in vertices}
    return RelationGraph(vertices, edges, dict(matching), matched_value)


def all_pairs_shortest(vertices, edges):
    """Floyd-Warshall over Fractions; None stands for unreachable.

    dist[u][u] starts unreachable rather than 0, so after the run it holds
    the weight of the lightest cycle through u. With negative cycles present
    the off-diagonal values are lower bounds only; callers detect that case
    separately and treat these distances as unusable.
    """
    dist = {u: {v: None for v in vertices} for u in vertices}
    for (u, v), w in edges.items():
        if dist[u][v] is None or w < dist[u][v]:
            dist[u][v] = w
    for k in vertices:
        dk = dist[k]
        for u in vertices:
            duk = dist[u][k]
            if duk is None:
                continue
            du = dist[u]
            for v in vertices:
                if dk[v] is None:
                    continue
                cand = duk + dk[v]
                if du[v] is None or cand < du[v]:
                    du[v] = cand
    return dist


def detect_negative_cycle(g: RelationGraph):
    """A list of vertices forming a negative-weight cycle, or None.

    Bellman-Ford from a virtual source. The certificate is genuine: the
    returned vertices are pairwise distinct and their closing edge exists.
    """
    vertices = list(g.vertices)
    if not vertices:
        return None
    dist = {v: Fraction(0) for v in vertices}
    pred = {v: None for v in vertices}
    ordered = sorted(g.edges.items(), key=lambda kv: edge_key(kv[0]))
    x = None
    for _ in range(len(vertices)):
        x = None
        for (u, v), w in ordered:
            if dist[u] + w < dist[v]:
                dist[v] = dist[u] + w
                pred[v] = u
                x = v
        if x is None:
            return None
    # x is reachable from a negative cycle; walking back n steps lands on it
    for _ in range(len(vertices)):
        x = pred[x]
    cycle = [x]
    cur = pred[x]
    while cur != x:
        cycle.append(cur)
        cur = pred[cur]
    cycle.reverse()
    return cycle


def mark_zero_cycle_edges(g: RelationGraph):
    """The set of edges lying on some zero-weight cycle.

    Assumes no negative cycles (raises InvariantViolation otherwise). An edge
    (u, v) lies on a zero cycle exactly when its weight plus the shortest way
    back from v to u sums to zero.
    """
    dist = all_pairs_shortest(g.vertices, g.edges)
    for u in g.vertices:
        if dist[u][u] is not None and dist[u][u] < 0:
            raise InvariantViolation("negative cycle in relation graph")
    marked = set()
    for (u, v), w in g.edges.items():
        back = dist[v][u]
        if back is not None and w + back == 0:
            marked.add((u, v))
    return marked


def min_positive_cycle_weight(g: RelationGraph):
    """The smallest strictly positive cycle weight, or None if no cycle has one.

    Every cycle that survives zero-cycle deletion weighs at least this much:
    a surviving cycle through edge (u, v) weighs at least w(u, v) + dist(v, u),
    which is positive for surviving edges and included in the minimum here.
    """
    dist = all_pairs_shortest(g.vertices, g.edges)
    best = None
    for (u, v), w in g.edges.items():
        back = dist[v][u]
        if back is None:
            continue
        total = w + back
        if total > 0 and (best is None or total < best):
            best = total
    return best


def find_prices(vertices, edges):
    """Non-negative prices from shortest-path distances.

    Starts at zero and raises each p(b2) to the largest -d(b, b2) seen over
    all sources b. Requires the graph to have no non-positive cycles, which
    the margin reduction guarantees; then p(b1) - p(b2) <= w(b1, b2) holds
    edge by edge.
    """
    prices, _ = find_prices_detailed(vertices, edges)
    return prices


def find_prices_detailed(vertices, edges):
    """find_prices plus the distance table it used, for invariant checks."""
    dist = all_pairs_shortest(vertices, edges)
    prices = {b: Fraction(0) for b in vertices}
    for b in vertices:
        for b2 in vertices:
            d = dist[b][b2]
            if d is not None and -d > prices[b2]:
                prices[b2] = -d
    return prices, dist


def verify_constraints(g: RelationGraph, prices, removed=frozenset()):
    """Check the three price constraints; None if all hold, else a message.

    1. Every price is non-negative.
    2. For every edge not removed, p(b1) - p(b2) is strictly below the
       original edge weight.
    3. Wherever the matched owner's value is positive, the price is strictly
       below it, so that owner keeps strictly positive utility.
    """
    for b in g.vertices:
        if prices[b] < 0:
            return f"negative price: p({b}) = {format_rational(prices[b])}"
    for (b1, b2), w in sorted(g.edges.items(), key=lambda kv: edge_key(kv[0])):
        if (b1, b2) in removed:
            continue
        if prices[b1] - prices[b2] >= w:
            return (f"edge ({b1}, {b2}): p({b1}) - p({b2}) = "
                    f"{format_rational(prices[b1] - prices[b2])} "
                    f"not below weight {format_rational(w)}")
    for b in g.vertices:
        v = g.matched_value[b]
        if v > 0 and prices[b] >= v:
            return (f"item {b}: price {format_rational(prices[b])} "
                    f"not below matched value {format_rational(v)}")
    return None


def dump_edges(g: RelationGraph):
    """Deterministic edge list for debugging: (u, v, weight as a string)."""
    return [(u, v, format_rational(w))
            for (u, v), w in sorted(g.edges.items(), key=lambda kv: edge_key(kv[0]))]
