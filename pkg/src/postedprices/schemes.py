"""Pricing schemes: per-round dynamic prices and one-shot static prices.

Five schemes live here.

* dynamic_matching_prices: item prices recomputed each round from a max
  matching over what is left; welfare-preserving for unit-demand buyers.
* static_half_bundle_prices: each optimal bundle at half its owner's value;
  at least half the optimal welfare for any monotone buyers.
* gs_unique_static_prices: static item prices under which every gross
  substitutes buyer demands exactly their bundle of the unique optimum.
* sapb: speculative bundling for superadditive buyers, then prices a margin
  below owner values so each live owner uniquely demands their own bundle.
* kdemand_round: per-round bundle prices for buyers who want at most k items
  at shared item-dependent values; prices sit a rank-graded sliver below the
  raw bundle values.
"""

import heapq
from fractions import Fraction

from .matching import brute_force_optimum, item_complete_matching
from .model import (
    InvariantViolation,
    KDemandItemDependent,
    Market,
    PreconditionError,
    check_gross_substitutes,
    check_superadditive,
    check_unique_optimum,
    collection_demand,
    collection_utility,
)
from .pricegraph import (
    RelationGraph,
    all_pairs_shortest,
    build_relation_graph,
    detect_negative_cycle,
    find_prices,
    mark_zero_cycle_edges,
    min_positive_cycle_weight,
    vertex_key,
)


def _bundle_key(B):
    return tuple(sorted(str(b) for b in B))


def dynamic_matching_prices(m: Market, items=None, agents=None):
    """Item prices for one round of the dynamic unit-demand scheme.

    Builds the relation graph of an item-complete max matching over the
    remaining items and agents, cuts the edges lying on zero-weight cycles,
    shaves a safety margin off the rest, and reads prices off shortest paths.

    Buyers left unmatched still shape the prices: each one gets a worthless
    dummy item in the graph, whose row keeps every real item strictly above
    that buyer's values. Without it a buyer could tie at zero utility and
    snatch an item somebody else needs.

    Returns (prices, matching) where matching maps item -> agent or None.
    Raises InvariantViolation if the graph has a negative cycle or the final
    prices violate any of the three price constraints; neither can happen for
    a maximum matching.
    """
    matching = item_complete_matching(m, items, agents)
    names = m.agent_names if agents is None else agents
    matched = {a for a in matching.values() if a is not None}
    padded = dict(matching)
    for a in names:
        if a not in matched:
            padded[dummy_item(a)] = a
    g = build_relation_graph(m, padded)
    cycle = detect_negative_cycle(g)
    if cycle is not None:
        raise InvariantViolation(f"negative cycle in relation graph: {cycle}")
    removed = mark_zero_cycle_edges(g)
    delta = min_positive_cycle_weight(g)
    if delta is None:
        # no cycle has positive weight, so any positive margin below the
        # cheapest matched value keeps all constraints strict
        positives = sorted(v for v in g.matched_value.values() if v > 0)
        delta = positives[0] if positives else Fraction(1)
    eps = delta / (len(g.vertices) + 1)
    reduced = {e: w - eps for e, w in g.edges.items() if e not in removed}
    prices = find_prices(g.vertices, reduced)
    problem = verify_round(g, prices, removed)
    if problem is not None:
        raise InvariantViolation(problem)
    return {b: prices[b] for b in matching}, matching


def verify_round(g: RelationGraph, prices, removed):
    """Constraint check for one dynamic round; None if sound."""
    from .pricegraph import verify_constraints
    return verify_constraints(g, prices, removed)


def static_half_bundle_prices(m: Market, partition):
    """Half-of-value prices for the bundles of a partition.

    Empty bundles are skipped; each nonempty bundle B_i costs v_i(B_i) / 2.
    Returns a dict from bundle (frozenset) to price.
    """
    from .model import check_allocation
    check_allocation(m, partition)
    prices = {}
    for agent, B in partition.items():
        B = frozenset(B)
        if B:
            prices[B] = m.valuation(agent).value(B) / 2
    return prices


def dummy_item(agent):
    """The padding vertex standing for agent's option to take nothing."""
    return ("dummy", agent)


def build_exchange_graph(m: Market, opt) -> RelationGraph:
    """The exchange graph of an allocation over items plus one dummy per agent.

    Each agent's bundle is augmented with their own dummy item. For every
    agent i, every a in the augmented bundle and every non-dummy-to-dummy
    swap target b outside it, the edge (a, b) weighs how much i loses when a
    is swapped for b (dummies count as worthless). Positive cycle and
    dummy-path weights in this graph witness that the allocation is the
    strictly unique optimum.
    """
    owners = {}
    for agent, B in opt.items():
        for b in B:
            owners[b] = agent
    vertices = list(m.items) + [dummy_item(a) for a in opt]
    edges = {}
    for agent, B in opt.items():
        v = m.valuation(agent)
        B = frozenset(B)
        base = v.value(B)
        augmented = B | {dummy_item(agent)}
        for a in augmented:
            for b in vertices:
                if b in augmented or b == a:
                    continue
                a_dummy = isinstance(a, tuple)
                b_dummy = isinstance(b, tuple)
                if a_dummy and b_dummy:
                    continue
                swapped = B - {a} if not a_dummy else B
                if not b_dummy:
                    swapped = swapped | {b}
                edges[(a, b)] = base - v.value(swapped)
    return RelationGraph(vertices, edges)


def gs_unique_static_prices(m: Market):
    """Static item prices making each buyer demand exactly their optimal bundle.

    Requires every valuation to pass the gross substitutes check and the
    market to have a strictly unique welfare-maximizing allocation; raises
    PreconditionError otherwise. Returns (prices, opt). Under the returned
    prices, each agent's demand over the full item set is the single bundle
    opt[agent], and the welfare of any buying order is optimal.
    """
    for name, v in m.agents:
        if not check_gross_substitutes(v):
            raise PreconditionError(f"valuation of {name!r} is not gross substitutes")
    opt = check_unique_optimum(m)
    if opt is None:
        raise PreconditionError("market has no strictly unique optimal allocation")
    allocated = frozenset().union(*opt.values()) if opt else frozenset()
    if allocated != frozenset(m.items):
        raise InvariantViolation("unique optimum left an item unallocated")
    g = build_exchange_graph(m, opt)
    dist = all_pairs_shortest(g.vertices, g.edges)
    dummies = [v for v in g.vertices if isinstance(v, tuple)]
    cycle_weights = [dist[u][u] for u in g.vertices if dist[u][u] is not None]
    into_dummy = [dist[u][d] for d in dummies for u in g.vertices
                  if u != d and dist[u][d] is not None]
    for w in cycle_weights:
        if w <= 0:
            raise InvariantViolation("non-positive cycle in exchange graph")
    for w in into_dummy:
        if w <= 0:
            raise InvariantViolation("non-positive path into a dummy item")
    margins = [min(cycle_weights)] if cycle_weights else []
    if into_dummy:
        margins.append(min(into_dummy))
    eps = min(margins) / (len(g.vertices) + 1) if margins else Fraction(1)
    reduced = {e: w - eps for e, w in g.edges.items()}
    prices = find_prices(g.vertices, reduced)
    for d in dummies:
        if prices[d] != 0:
            raise InvariantViolation(f"dummy item priced at {prices[d]}")
    return {b: prices[b] for b in m.items}, opt


def mdf(m: Market, bundles, prices, agent) -> Fraction:
    """Minimum disimprovement factor of an agent over a bundling.

    The gap between keeping the status quo (their own bundle if they hold
    one, else nothing) and the best deviating purchase: minimized over every
    nonempty collection of live bundles other than exactly their own.
    """
    v = m.valuation(agent)
    own = frozenset(bundles.get(agent, frozenset()))
    live = sorted({frozenset(B) for B in bundles.values() if B}, key=_bundle_key)
    reference = collection_utility(v, [own], prices) if own else Fraction(0)
    best = None
    from itertools import combinations
    for r in range(1, len(live) + 1):
        for combo in combinations(live, r):
            x = frozenset(combo)
            if x == frozenset([own]):
                continue
            gap = reference - collection_utility(v, x, prices)
            if best is None or gap < best:
                best = gap
    if best is None:
        raise PreconditionError("no deviating collection exists")
    return best


def _owner_value_prices(m, bundles):
    return {frozenset(B): m.valuation(a).value(B)
            for a, B in bundles.items() if B}


class SapbResult:
    """Outcome of speculative bundling.

    Attributes:
        bundles: agent -> final bundle (empty frozenset once absorbed).
        prices: live bundle -> final price (owner value minus the margin).
        merges: how many speculative purchases happened.
        delta: the minimum disimprovement factor at exit.
        epsilon: delta over the number of agents; the uniform price cut.
    """

    def __init__(self, bundles, prices, merges, delta, epsilon):
        self.bundles = bundles
        self.prices = prices
        self.merges = merges
        self.delta = delta
        self.epsilon = epsilon


def sapb(m: Market, initial):
    """Speculative bundling: merge while anyone demands a foreign bundle.

    Starting from `initial` (a partition of items among agents), each bundle
    is priced at its owner's value. While some agent's largest demanded
    collection contains another agent's live bundle, the first such agent (in
    name order) buys that collection speculatively: their bundle becomes its
    union and the absorbed owners are left with nothing. Superadditive
    valuations make this terminate after at most n - 1 merges. On exit every
    live price drops by a uniform margin, the minimum disimprovement factor
    over the number of agents, so each live owner uniquely demands exactly
    their own bundle and absorbed agents strictly prefer leaving.

    Returns (bundles, prices): the final bundling (empty frozensets for
    absorbed agents) and the final bundle prices.
    """
    result = sapb_detailed(m, initial)
    return result.bundles, result.prices


def sapb_detailed(m: Market, initial) -> SapbResult:
    """sapb plus the merge count and margins, for invariant checking."""
    for name, v in m.agents:
        if not check_superadditive(v):
            raise PreconditionError(f"valuation of {name!r} is not superadditive")
    from .model import check_allocation
    check_allocation(m, initial)
    bundles = {a: frozenset(initial.get(a, frozenset())) for a in m.agent_names}
    seen = {tuple(sorted((a, _bundle_key(B)) for a, B in bundles.items()))}
    merges = 0
    while True:
        prices = _owner_value_prices(m, bundles)
        live = sorted(prices, key=_bundle_key)
        mover = None
        choice = None
        for a in sorted(m.agent_names):
            fam = collection_demand(m.valuation(a), live, prices)
            top = max(len(x) for x in fam)
            candidates = sorted((x for x in fam if len(x) == top),
                                key=lambda x: sorted(_bundle_key(B) for B in x))
            x = candidates[0]
            if any(B != bundles[a] for B in x):
                mover, choice = a, x
                break
        if mover is None:
            break
        merged = frozenset().union(*choice) | bundles[mover]
        for a in list(bundles):
            if bundles[a] and bundles[a] in choice and a != mover:
                bundles[a] = frozenset()
        bundles[mover] = merged
        merges += 1
        state = tuple(sorted((a, _bundle_key(B)) for a, B in bundles.items()))
        if state in seen:
            raise InvariantViolation("bundling state repeated; merging cannot settle")
        seen.add(state)
    prices = _owner_value_prices(m, bundles)
    if not prices:
        return SapbResult(bundles, prices, merges, None, None)
    gaps = []
    for a in m.agent_names:
        try:
            gaps.append(mdf(m, bundles, prices, a))
        except PreconditionError:
            pass  # sole owner of the only live bundle has nowhere to deviate
    delta = min(gaps) if gaps else Fraction(1)
    if delta <= 0:
        raise InvariantViolation("disimprovement margin is not positive at exit")
    eps = delta / len(m.agents)
    prices = {B: p - eps for B, p in prices.items()}
    return SapbResult(bundles, prices, merges, delta, eps)


class KDemandState:
    """Live bundles and remaining agents between rounds of the k-demand scheme.

    Attributes:
        market: the full market (valuations never change).
        live_bundles: frozenset of frozensets, the bundles still for sale.
        remaining_agents: frozenset of agent names yet to arrive.
    """

    def __init__(self, market, live_bundles, remaining_agents):
        self.market = market
        self.live_bundles = frozenset(frozenset(B) for B in live_bundles)
        self.remaining_agents = frozenset(remaining_agents)

    def advance(self, bought, agent):
        return KDemandState(self.market,
                            self.live_bundles - frozenset(bought),
                            self.remaining_agents - {agent})


def _kdemand_weights(m: Market):
    if not m.agents:
        raise PreconditionError("the k-demand scheme needs at least one agent")
    reference = None
    for name, v in m.agents:
        if not isinstance(v, KDemandItemDependent):
            raise PreconditionError(f"valuation of {name!r} is not k-demand item-dependent")
        if reference is None:
            reference = v.weights
        elif v.weights != reference:
            raise PreconditionError("agents disagree on the shared item weights")
    for b, w in reference.items():
        if w <= 0:
            raise PreconditionError(f"item weight of {b!r} must be positive")
    return reference


def kdemand_initial_state(m: Market) -> KDemandState:
    _kdemand_weights(m)
    return KDemandState(m, (frozenset([b]) for b in m.items), m.agent_names)


def kdemand_epsilon(m: Market) -> Fraction:
    """The price margin base: half of min(1, lightest item weight)."""
    weights = _kdemand_weights(m)
    return min(Fraction(1), min(weights.values())) / 2


def raw_value(m: Market, bundle) -> Fraction:
    """The full item-weight sum of a bundle, what a fully interested buyer sees."""
    weights = _kdemand_weights(m)
    return sum((weights[b] for b in bundle), Fraction(0))


class KDemandRound:
    """Everything one k-demand round computed, for callers that verify it.

    Attributes:
        assignment: agent -> merged bundle (possibly empty).
        prices: live bundle -> price.
        live_bundles: bundles for sale this round, after merging.
        owner: live bundle -> agent or None for leftover bundles.
        edges: surviving relation edges between live bundles.
        removed: edges deleted for lying on a cycle.
        ranks: live bundle -> topological rank, 1-based.
        epsilon: the margin base used in prices.
    """

    def __init__(self, **kw):
        self.__dict__.update(kw)


def kdemand_round(state: KDemandState):
    """One pricing round: optimal bundle assignment, relation DAG, prices.

    Returns (assignment, prices). See kdemand_round_detailed for the full
    intermediate structure.
    """
    info = kdemand_round_detailed(state)
    return info.assignment, info.prices


def kdemand_round_detailed(state: KDemandState) -> KDemandRound:
    m = state.market
    weights = _kdemand_weights(m)
    eps = kdemand_epsilon(m)
    bundles = sorted(state.live_bundles, key=_bundle_key)
    agents = sorted(state.remaining_agents)

    # best assignment of live bundles to agents: maximize welfare, then
    # prefer assignments wasting the least raw value, then first found
    owners = agents + [None]
    count = len(owners) ** len(bundles)
    if count > 10 ** 6:
        raise InvariantViolation(f"{count} bundle assignments exceed the search guard")
    best = None
    for code in range(count):
        got = {a: [] for a in agents}
        taken = set()
        c = code
        for B in bundles:
            c, r = divmod(c, len(owners))
            if owners[r] is not None:
                got[owners[r]].append(B)
                taken.add(B)
        merged = {a: frozenset().union(*Bs) if Bs else frozenset()
                  for a, Bs in got.items()}
        w = sum((m.valuation(a).value(S) for a, S in merged.items()), Fraction(0))
        waste = sum((raw_value(m, S) - m.valuation(a).value(S)
                     for a, S in merged.items()), Fraction(0))
        key = (w, -waste)
        if best is None or key > best[0]:
            best = (key, merged, taken)
    assignment, taken = (best[1], best[2]) if best is not None else ({}, set())

    assigned = {B for B in assignment.values() if B}
    leftovers = set(bundles) - taken
    live = sorted(assigned | leftovers, key=_bundle_key)
    owner = {B: None for B in live}
    for a in agents:
        if assignment[a]:
            owner[assignment[a]] = a

    # relation edges: an owned bundle points at everything its owner values
    # in full; leftover bundles have no owner and hence no out-edges
    edges = set()
    for B in live:
        a = owner[B]
        if a is None:
            continue
        for C in live:
            if C != B and m.valuation(a).value(C) == raw_value(m, C):
                edges.add((B, C))

    # cut every edge lying on a directed cycle: reachability of u from v
    reach = {u: {u} for u in live}
    changed = True
    while changed:
        changed = False
        for (u, v) in edges:
            new = reach[v] - reach[u]
            if new:
                reach[u] |= new
                changed = True
    removed = {(u, v) for (u, v) in edges if u in reach[v]}
    dag = edges - removed

    # deterministic topological ranks, smallest bundle first among the ready
    indeg = {B: 0 for B in live}
    succ = {B: [] for B in live}
    for (u, v) in dag:
        indeg[v] += 1
        succ[u].append(v)
    heap = [(_bundle_key(B), B) for B in live if indeg[B] == 0]
    heapq.heapify(heap)
    ranks = {}
    r = 1
    while heap:
        _, B = heapq.heappop(heap)
        ranks[B] = r
        r += 1
        for v in succ[B]:
            indeg[v] -= 1
            if indeg[v] == 0:
                heapq.heappush(heap, (_bundle_key(v), v))
    if len(ranks) != len(live):
        raise InvariantViolation("cycle survived edge removal")

    prices = {B: raw_value(m, B) - eps ** ranks[B] for B in live}
    return KDemandRound(assignment=assignment, prices=prices,
                        live_bundles=frozenset(live), owner=owner,
                        edges=dag, removed=removed, ranks=ranks, epsilon=eps)
