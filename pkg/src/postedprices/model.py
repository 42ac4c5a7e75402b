"""Market model: exact rational scalars, valuations, demand, and welfare.

Everything is computed over `fractions.Fraction`. The pricing machinery in the
rest of the package separates ties by arbitrarily small rational margins, so
any rounding would change which bundles maximize a buyer's utility; floats are
rejected at the boundary instead of silently converted.
"""

import re
from fractions import Fraction
from itertools import combinations


DEMAND_GUARD = 20       # max items for exhaustive demand enumeration
VALIDATOR_GUARD = 12    # max items for the valuation-class validators
SEARCH_GUARD = 10 ** 6  # max assignments for brute-force allocation search


class MarketError(ValueError):
    """Malformed instance data: unknown identifiers, bad tables, bad numbers."""


class PreconditionError(ValueError):
    """A scheme or operation was handed an instance outside its contract."""


class CapacityError(RuntimeError):
    """An exhaustive search would exceed its configured guard."""


class ParseError(ValueError):
    """Input text or a document does not parse.

    Carries 1-based line and column when the position is known, so command
    line tools can point at the offending spot.
    """

    def __init__(self, message, line=None, column=None):
        at = ""
        if line is not None:
            at = f"line {line}: " if column is None else f"line {line}, column {column}: "
        super().__init__(at + message)
        self.line = line
        self.column = column


class InvariantViolation(RuntimeError):
    """An internal hard assertion failed; indicates a bug, not bad input."""


def as_rational(x) -> Fraction:
    """Coerce x to an exact Fraction.

    Accepts int, Fraction, and strings of the form "p" or "p/q". Floats and
    bools are rejected: exactness is load-bearing everywhere in this package.
    """
    if isinstance(x, Fraction):
        return x
    if isinstance(x, bool):
        raise MarketError("expected a rational number, got a bool")
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        s = x.strip()
        # decimal notation is rejected on purpose: "0.1" is not 1/10 to a float
        # author, and silently accepting it would invite rounding bugs upstream
        if not re.fullmatch(r"[+-]?\d+(/\d+)?", s):
            raise MarketError(f"not a 'p' or 'p/q' rational literal: {x!r}")
        try:
            return Fraction(s)
        except ZeroDivisionError as exc:
            raise MarketError(f"zero denominator: {x!r}") from exc
    raise MarketError(f"expected int, Fraction or 'p/q' string, got {type(x).__name__}")


def format_rational(q) -> str:
    q = Fraction(q)
    if q.denominator == 1:
        return str(q.numerator)
    return f"{q.numerator}/{q.denominator}"


def subsets(items):
    """All subsets of `items` as frozensets, smallest first, deterministic."""
    pool = sorted(items)
    for r in range(len(pool) + 1):
        for combo in combinations(pool, r):
            yield frozenset(combo)


class Valuation:
    """Base class. A valuation knows its item universe and maps bundles to values.

    Subclasses implement _value(bundle) for validated frozenset inputs and are
    normalized (value of the empty set is 0) and monotone non-decreasing.
    """

    def __init__(self, items):
        self.items = frozenset(items)

    def value(self, bundle) -> Fraction:
        bundle = frozenset(bundle)
        unknown = bundle - self.items
        if unknown:
            raise MarketError(f"unknown item(s): {sorted(unknown)}")
        if not bundle:
            return Fraction(0)
        return self._value(bundle)

    def _value(self, bundle):
        raise NotImplementedError


class UnitDemand(Valuation):
    """Unit-demand valuation: a bundle is worth its single best item.

    Items missing from `per_item` are worth 0, so partial value tables over a
    larger item universe are fine.
    """

    def __init__(self, items, per_item):
        super().__init__(items)
        self.per_item = {}
        for b, q in per_item.items():
            if b not in self.items:
                raise MarketError(f"unknown item in value table: {b!r}")
            q = as_rational(q)
            if q < 0:
                raise MarketError(f"negative value for item {b!r}")
            self.per_item[b] = q

    def item_value(self, b) -> Fraction:
        if b not in self.items:
            raise MarketError(f"unknown item: {b!r}")
        return self.per_item.get(b, Fraction(0))

    def _value(self, bundle):
        return max(self.per_item.get(b, Fraction(0)) for b in bundle)


class Explicit(Valuation):
    """A valuation given as a complete table over the nonempty subsets.

    The constructor validates completeness, non-negativity and monotonicity
    rather than repairing anything; malformed tables fail fast.
    """

    def __init__(self, items, table):
        super().__init__(items)
        self.table = {}
        for S, q in table.items():
            S = frozenset(S)
            if not S <= self.items:
                raise MarketError(f"table key is not a subset of the items: {sorted(S)}")
            if not S:
                if as_rational(q) != 0:
                    raise MarketError("the empty set must have value 0")
                continue
            self.table[S] = as_rational(q)
        for S in subsets(self.items):
            if not S:
                continue
            if S not in self.table:
                raise MarketError(f"value table is missing subset {sorted(S)}")
            # monotone: dropping any single item may not increase the value
            for b in S:
                smaller = self.table.get(S - {b}, Fraction(0))
                if self.table[S] < smaller:
                    raise MarketError(
                        f"not monotone: value{sorted(S)} < value{sorted(S - {b})}")
        for S, q in self.table.items():
            if q < 0:
                raise MarketError(f"negative value for {sorted(S)}")

    def _value(self, bundle):
        return self.table[bundle]


class KDemandItemDependent(Valuation):
    """Benefit from at most k items; each interested item is worth the shared w.

    `weights` is the market-wide item weight function (every agent sharing it
    must agree on it); `interested` lists the items this agent values at w(b)
    rather than 0. A bundle is worth the sum of its k heaviest interested items.
    """

    def __init__(self, items, k, interested, weights):
        super().__init__(items)
        if not isinstance(k, int) or isinstance(k, bool) or k < 1:
            raise MarketError(f"k must be a positive integer, got {k!r}")
        self.k = k
        self.interested = frozenset(interested)
        if not self.interested <= self.items:
            raise MarketError("interested set contains unknown items")
        self.weights = {}
        for b in self.items:
            if b not in weights:
                raise MarketError(f"weight function is missing item {b!r}")
            q = as_rational(weights[b])
            if q < 0:
                raise MarketError(f"negative weight for item {b!r}")
            self.weights[b] = q

    def _value(self, bundle):
        ws = sorted((self.weights[b] for b in bundle & self.interested), reverse=True)
        return sum(ws[: self.k], Fraction(0))


class Coverage(Valuation):
    """Coverage valuation: a bundle is worth the total weight it covers.

    `covers` maps every item to a set of ground elements; `element_weights`
    assigns each element a non-negative weight. The value of a bundle is the
    weight of the union of its items' cover sets.
    """

    def __init__(self, element_weights, covers):
        super().__init__(covers.keys())
        self.element_weights = {e: as_rational(q) for e, q in element_weights.items()}
        for e, q in self.element_weights.items():
            if q < 0:
                raise MarketError(f"negative weight for element {e!r}")
        self.covers = {}
        for b, es in covers.items():
            es = frozenset(es)
            unknown = es - set(self.element_weights)
            if unknown:
                raise MarketError(f"item {b!r} covers unknown element(s): {sorted(unknown)}")
            self.covers[b] = es

    def _value(self, bundle):
        covered = frozenset().union(*(self.covers[b] for b in bundle))
        return sum((self.element_weights[e] for e in covered), Fraction(0))


def build_coverage_valuation(weights, covers) -> Coverage:
    """Build a coverage valuation from element weights and item cover sets."""
    return Coverage(weights, covers)


class Market:
    """A set of items together with named agents and their valuations.

    Attributes:
        items   Tuple of item identifiers, in declaration order.
        agents  Tuple of (name, Valuation) pairs, in declaration order.
    """

    def __init__(self, items, agents):
        self.items = tuple(items)
        if len(set(self.items)) != len(self.items):
            raise MarketError("duplicate item identifiers")
        self.agents = tuple((name, v) for name, v in agents)
        names = [name for name, _ in self.agents]
        if len(set(names)) != len(names):
            raise MarketError("duplicate agent identifiers")
        universe = frozenset(self.items)
        for name, v in self.agents:
            if v.items != universe:
                raise MarketError(
                    f"valuation of agent {name!r} is not defined over the market items")
        self._by_name = dict(self.agents)

    @property
    def agent_names(self):
        return tuple(name for name, _ in self.agents)

    def valuation(self, name) -> Valuation:
        try:
            return self._by_name[name]
        except KeyError:
            raise MarketError(f"unknown agent: {name!r}") from None


def value(v: Valuation, bundle) -> Fraction:
    return v.value(bundle)


def marginal(v: Valuation, addition, base) -> Fraction:
    """The marginal value of `addition` on top of `base`: v(A ∪ B) - v(B)."""
    return v.value(frozenset(addition) | frozenset(base)) - v.value(base)


def utility(v: Valuation, bundle, prices) -> Fraction:
    """Quasi-linear utility: v(bundle) minus the sum of the items' prices."""
    bundle = frozenset(bundle)
    total = v.value(bundle)
    for b in bundle:
        if b not in prices:
            raise MarketError(f"item {b!r} has no price")
        total -= prices[b]
    return total


def demand_sets(v: Valuation, available, prices, guard=DEMAND_GUARD):
    """The full argmax family of v(S) - p(S) over subsets of `available`.

    Returns a set of frozensets. The empty set is a member exactly when the
    maximum utility is 0, which it is whenever nothing is strictly profitable;
    the maximum is never negative since the empty set is always feasible.
    """
    available = frozenset(available)
    if len(available) > guard:
        raise CapacityError(f"demand enumeration over {len(available)} items exceeds the guard")
    best = None
    family = set()
    for S in subsets(available):
        u = utility(v, S, prices)
        if best is None or u > best:
            best = u
            family = {S}
        elif u == best:
            family.add(S)
    return family


def collection_utility(v: Valuation, collection, bundle_prices) -> Fraction:
    """Utility of buying a collection of bundles: v(union) minus bundle prices."""
    union = frozenset()
    total_price = Fraction(0)
    for B in collection:
        B = frozenset(B)
        if B not in bundle_prices:
            raise MarketError(f"bundle {sorted(B)} has no price")
        union |= B
        total_price += bundle_prices[B]
    return v.value(union) - total_price


def collection_demand(v: Valuation, bundles, bundle_prices, guard=DEMAND_GUARD):
    """The argmax family over collections of the given bundles.

    Each member is a frozenset of bundles (themselves frozensets). The empty
    collection participates, so the family contains it exactly when the
    maximum utility is 0.
    """
    pool = sorted(set(frozenset(B) for B in bundles), key=sorted)
    if len(pool) > guard:
        raise CapacityError(f"demand enumeration over {len(pool)} bundles exceeds the guard")
    best = None
    family = set()
    for r in range(len(pool) + 1):
        for combo in combinations(pool, r):
            x = frozenset(combo)
            u = collection_utility(v, x, bundle_prices)
            if best is None or u > best:
                best = u
                family = {x}
            elif u == best:
                family.add(x)
    return family


def check_allocation(m: Market, allocation):
    """Validate an allocation dict agent -> item set against the market."""
    seen = set()
    universe = frozenset(m.items)
    names = set(m.agent_names)
    for agent, bundle in allocation.items():
        if agent not in names:
            raise MarketError(f"unknown agent in allocation: {agent!r}")
        bundle = frozenset(bundle)
        if not bundle <= universe:
            raise MarketError(f"allocation for {agent!r} contains unknown items")
        if bundle & seen:
            raise MarketError(f"allocation overlaps on {sorted(bundle & seen)}")
        seen |= bundle


def welfare(m: Market, allocation) -> Fraction:
    """Social welfare of an allocation: the sum of agents' values for their bundles."""
    check_allocation(m, allocation)
    return sum((m.valuation(a).value(S) for a, S in allocation.items()), Fraction(0))


def check_superadditive(v: Valuation, guard=VALIDATOR_GUARD) -> bool:
    """True iff v(A ∪ B) >= v(A) + v(B) for all disjoint A, B."""
    items = sorted(v.items)
    if len(items) > guard:
        raise CapacityError(f"superadditivity check over {len(items)} items exceeds the guard")
    # every item goes to A, to B, or to neither
    for A, B in _ternary_splits(items):
        if v.value(A | B) < v.value(A) + v.value(B):
            return False
    return True


def _ternary_splits(items):
    """All (A, B) pairs of disjoint subsets of items, both possibly empty."""
    n = len(items)
    for code in range(3 ** n):
        A, B = set(), set()
        c = code
        for b in items:
            c, r = divmod(c, 3)
            if r == 1:
                A.add(b)
            elif r == 2:
                B.add(b)
        yield frozenset(A), frozenset(B)


def check_gross_substitutes(v: Valuation, guard=VALIDATOR_GUARD) -> bool:
    """True iff v is submodular and satisfies the triple exchange condition.

    The triple condition: for every S and distinct b1, b2, b3 outside S,
    v(S+b1+b2) + v(S+b3) <= max(v(S+b1) + v(S+b2+b3), v(S+b2) + v(S+b1+b3)).
    Together with submodularity this characterizes gross substitutes.
    """
    items = sorted(v.items)
    if len(items) > guard:
        raise CapacityError(f"GS check over {len(items)} items exceeds the guard")
    for S in subsets(items):
        rest = [b for b in items if b not in S]
        vS = v.value(S)
        for b1, b2 in combinations(rest, 2):
            if v.value(S | {b1, b2}) + vS > v.value(S | {b1}) + v.value(S | {b2}):
                return False
        for b1, b2, b3 in combinations(rest, 3):
            for x, y, z in ((b1, b2, b3), (b1, b3, b2), (b2, b3, b1)):
                lhs = v.value(S | {x, y}) + v.value(S | {z})
                rhs = max(v.value(S | {x}) + v.value(S | {y, z}),
                          v.value(S | {y}) + v.value(S | {x, z}))
                if lhs > rhs:
                    return False
    return True


def local_sets(A, items):
    """Sets differing from A by at most one added and one removed item."""
    A = frozenset(A)
    out = []
    inside = sorted(A)
    outside = sorted(set(items) - A)
    for a in inside:
        out.append(A - {a})
    for b in outside:
        out.append(A | {b})
    for a in inside:
        for b in outside:
            out.append((A - {a}) | {b})
    return [S for S in out if S != A]


def check_local_improvement(v: Valuation, prices, A, guard=DEMAND_GUARD):
    """Return a local set strictly improving on A, or None.

    None means A is already in the demand correspondence over all items, or
    (for valuations without the local-improvement property) that no single
    swap/add/drop helps even though A is not demanded.
    """
    A = frozenset(A)
    family = demand_sets(v, v.items, prices, guard=guard)
    if A in family:
        return None
    uA = utility(v, A, prices)
    for B in sorted(local_sets(A, v.items), key=lambda S: (len(S), sorted(S))):
        if utility(v, B, prices) > uA:
            return B
    return None


def check_unique_optimum(m: Market, guard=SEARCH_GUARD):
    """The welfare-maximizing allocation if it is strictly unique, else None.

    Compares against every allocation, including partial ones. For monotone
    valuations a unique optimum necessarily allocates every item: an item left
    out could be added to any bundle without lowering welfare, creating a tie.
    """
    from .matching import brute_force_allocations
    best = None
    best_w = None
    tied = False
    for allocation, w in brute_force_allocations(m, guard=guard):
        if best_w is None or w > best_w:
            best, best_w, tied = allocation, w, False
        elif w == best_w:
            tied = True
    if best is None or tied:
        return None
    return best
