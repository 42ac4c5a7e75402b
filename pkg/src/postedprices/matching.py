"""Bipartite matching and brute-force allocation search over exact rationals.

The assignment solver is the classic O(n^3) potential-based Hungarian method,
run on Fractions so optimal matchings are exact. Brute-force enumeration over
all allocations backs it as an independent oracle and powers the uniqueness
check for small instances.
"""

from fractions import Fraction

from .model import CapacityError, Market, MarketError


def _solve_assignment(cost):
    """Minimum-cost perfect assignment on a square cost matrix of Fractions.

    Returns a list `match` with match[col] = row. Standard shortest-path
    Hungarian with row/column potentials; exact arithmetic throughout.
    """
    n = len(cost)
    if n == 0:
        return []
    big = sum((abs(c) for row in cost for c in row), Fraction(1))
    u = [Fraction(0)] * (n + 1)
    v = [Fraction(0)] * (n + 1)
    p = [0] * (n + 1)     # p[j]: row currently assigned to column j, 1-based
    way = [0] * (n + 1)
    for i in range(1, n + 1):
        p[0] = i
        j0 = 0
        minv = [big] * (n + 1)
        used = [False] * (n + 1)
        while True:
            used[j0] = True
            i0 = p[j0]
            delta = big
            j1 = 0
            for j in range(1, n + 1):
                if used[j]:
                    continue
                cur = cost[i0 - 1][j - 1] - u[i0] - v[j]
                if cur < minv[j]:
                    minv[j] = cur
                    way[j] = j0
                if minv[j] < delta:
                    delta = minv[j]
                    j1 = j
            for j in range(n + 1):
                if used[j]:
                    u[p[j]] += delta
                    v[j] -= delta
                else:
                    minv[j] -= delta
            j0 = j1
            if p[j0] == 0:
                break
        while j0:
            j1 = way[j0]
            p[j0] = p[j1]
            j0 = j1
    return p[1:]


def max_weight_matching(agents, items, weight):
    """A maximum-weight bipartite matching between agents and items.

    Args:
        agents: iterable of agent identifiers.
        items: iterable of item identifiers.
        weight: mapping or callable giving the non-negative weight of (a, b).

    Returns a set of (agent, item) pairs. Zero-weight pairs are omitted, so
    the result is the canonical minimal matching among the optima.
    """
    agents = sorted(agents)
    items = sorted(items)
    if callable(weight):
        w = lambda a, b: Fraction(weight(a, b))
    else:
        w = lambda a, b: Fraction(weight.get((a, b), 0))
    n = max(len(agents), len(items))
    # pad to square with zero-weight cells; minimize negated weights
    cost = [[Fraction(0)] * n for _ in range(n)]
    for i, a in enumerate(agents):
        for j, b in enumerate(items):
            cost[i][j] = -w(a, b)
    match = _solve_assignment(cost)
    out = set()
    for j, i in enumerate(match):
        if i - 1 < len(agents) and j < len(items):
            a, b = agents[i - 1], items[j]
            if w(a, b) > 0:
                out.add((a, b))
    return out


def item_complete_matching(m: Market, items=None, agents=None):
    """A max-weight matching in which every listed item is matched.

    Agents are padded with zero-value dummies, so items nobody values still
    get an owner slot. Returns a dict item -> agent, with None standing for a
    dummy owner. Weights are each agent's value for the singleton bundle.

    Args:
        m: the market supplying valuations.
        items: items to match (default: all of m.items).
        agents: agent names allowed to be matched (default: all agents).
    """
    items = sorted(m.items if items is None else items)
    agents = sorted(m.agent_names if agents is None else agents)
    unknown = set(items) - set(m.items)
    if unknown:
        raise MarketError(f"unknown item(s): {sorted(unknown)}")
    n = max(len(agents), len(items))
    cost = [[Fraction(0)] * n for _ in range(n)]
    for i, a in enumerate(agents):
        va = m.valuation(a)
        for j, b in enumerate(items):
            cost[i][j] = -va.value({b})
    match = _solve_assignment(cost)
    out = {}
    for j, i in enumerate(match):
        if j < len(items):
            out[items[j]] = agents[i - 1] if i - 1 < len(agents) else None
    return out


def matching_welfare(m: Market, matching) -> Fraction:
    """Total value of a matching given as item -> agent (None = unmatched)."""
    total = Fraction(0)
    for b, a in matching.items():
        if a is not None:
            total += m.valuation(a).value({b})
    return total


def brute_force_allocations(m: Market, items=None, agents=None, guard=10 ** 6):
    """Yield (allocation, welfare) for every assignment of items to agents.

    Each item independently goes to one agent or to nobody, so the stream
    covers all allocations, partial ones included. Deterministic order: items
    sorted, owner choices cycling agents in declaration order then None.
    """
    items = sorted(m.items if items is None else items)
    agents = list(m.agent_names if agents is None else agents)
    count = (len(agents) + 1) ** len(items)
    if count > guard:
        raise CapacityError(f"{count} assignments exceed the search guard")
    owners = agents + [None]
    k = len(owners)
    for code in range(count):
        bundles = {a: set() for a in agents}
        c = code
        for b in items:
            c, r = divmod(c, k)
            if owners[r] is not None:
                bundles[owners[r]].add(b)
        allocation = {a: frozenset(S) for a, S in bundles.items()}
        w = sum((m.valuation(a).value(S) for a, S in allocation.items()), Fraction(0))
        yield allocation, w


def brute_force_optimum(m: Market, items=None, agents=None, guard=10 ** 6):
    """The welfare-maximizing allocation by exhaustive search.

    Returns (allocation, welfare). Ties go to the assignment generated first,
    which makes the result deterministic and lexicographically minimal in the
    enumeration order of brute_force_allocations.
    """
    best = None
    best_w = None
    for allocation, w in brute_force_allocations(m, items, agents, guard):
        if best_w is None or w > best_w:
            best, best_w = allocation, w
    return best, best_w
