"""Sequential-arrival simulation under adversarial orders and tie-breaking.

Buyers arrive one at a time, see the current prices, and buy some member of
their demand correspondence; the adversary controls both who arrives next and
which demanded choice they take. Because prices are a pure function of what
is left, the game over all n! orders and all tie-breaks collapses to a DP
over (remaining sale units, remaining agents) states, which adversarial_worst
explores exhaustively while checking each scheme's round invariants on every
branch.
"""

import os
from fractions import Fraction
from itertools import permutations

from .matching import brute_force_optimum, item_complete_matching, matching_welfare
from .model import (
    CapacityError,
    InvariantViolation,
    Market,
    MarketError,
    PreconditionError,
    UnitDemand,
    collection_demand,
    collection_utility,
    demand_sets,
    utility,
)
from .pricegraph import vertex_key
from .schemes import (
    KDemandState,
    dynamic_matching_prices,
    gs_unique_static_prices,
    kdemand_initial_state,
    kdemand_round_detailed,
    raw_value,
    sapb_detailed,
    static_half_bundle_prices,
)

NODE_GUARD_ENV = "POSTEDPRICES_NODE_GUARD"


def _node_guard():
    return int(os.environ.get(NODE_GUARD_ENV, str(10 ** 6)))


def choice_key(choice):
    """Deterministic total order over demand choices of any shape."""
    return (len(choice), tuple(sorted(vertex_key(e) for e in choice)))


class TraceRound:
    """One arrival: who came, what was on offer, what they took.

    `prices` covers exactly the units on sale that round, `family` is the
    full demand correspondence the buyer chose from, `chosen` its member that
    was bought (possibly empty), `paid` the money spent and `value` the
    buyer's value for the purchase.
    """

    def __init__(self, agent, prices, family, chosen, paid, value):
        self.agent = agent
        self.prices = dict(prices)
        self.family = frozenset(family)
        self.chosen = frozenset(chosen)
        self.paid = Fraction(paid)
        self.value = Fraction(value)


class Trace:
    """A full run: scheme name, arrival order, per-round records, welfare."""

    def __init__(self, scheme, order, rounds, welfare):
        self.scheme = scheme
        self.order = tuple(order)
        self.rounds = list(rounds)
        self.welfare = Fraction(welfare)

    @property
    def revenue(self):
        return sum((r.paid for r in self.rounds), Fraction(0))


class Scheme:
    """Adapter between a pricing scheme and the arrival simulation.

    A scheme names its sale units (items or bundles), prices a state, lists a
    buyer's demand choices, and optionally asserts per-round and
    per-transition invariants. States are (frozenset of units, frozenset of
    remaining agents).
    """

    name = "scheme"

    def __init__(self, m: Market):
        self.m = m

    def initial_units(self):
        raise NotImplementedError

    def round(self, units, agents):
        """Return (prices, sale_units, info) for the state."""
        raise NotImplementedError

    def family(self, prices, sale, agent, info):
        raise NotImplementedError

    def choice_value(self, agent, choice) -> Fraction:
        raise NotImplementedError

    def choice_paid(self, prices, choice) -> Fraction:
        return sum((prices[u] for u in choice), Fraction(0))

    def check_round(self, units, agents, prices, sale, info):
        pass

    def check_transition(self, agents, prices, sale, info, agent, choice):
        pass


class DynamicMatchingScheme(Scheme):
    """Per-round matching-based item prices; buyers take one item or nothing."""

    name = "dynamic-matching"

    def __init__(self, m):
        super().__init__(m)
        for name, v in m.agents:
            if not isinstance(v, UnitDemand):
                raise PreconditionError(
                    f"the dynamic matching scheme needs unit-demand buyers; "
                    f"{name!r} is not")
        self._opt_memo = {}

    def initial_units(self):
        return frozenset(self.m.items)

    def round(self, units, agents):
        prices, matching = dynamic_matching_prices(self.m, units, agents)
        return prices, units, matching

    def family(self, prices, sale, agent, info):
        v = self.m.valuation(agent)
        best = Fraction(0)
        for b in sale:
            u = v.value({b}) - prices[b]
            if u > best:
                best = u
        out = set()
        if best == 0:
            out.add(frozenset())
        for b in sale:
            if v.value({b}) - prices[b] == best:
                out.add(frozenset([b]))
        return out

    def choice_value(self, agent, choice):
        return self.m.valuation(agent).value(choice)

    def _opt(self, units, agents):
        key = (units, agents)
        if key not in self._opt_memo:
            matching = item_complete_matching(self.m, units, agents)
            self._opt_memo[key] = matching_welfare(self.m, matching)
        return self._opt_memo[key]

    def check_transition(self, agents, prices, sale, info, agent, choice):
        # welfare preservation: what the buyer takes plus the optimum of the
        # rest must equal the optimum before the purchase, on every branch
        before = self._opt(sale, agents)
        after = self._opt(sale - choice, agents - {agent})
        gained = self.choice_value(agent, choice)
        if before != gained + after:
            raise InvariantViolation(
                f"welfare not preserved: {agent} takes {sorted(choice)} "
                f"worth {gained}, optimum drops {before} -> {after}")


class StaticItemScheme(Scheme):
    """Fixed item prices, no recomputation; for baselines and counterexamples.

    semantics="single" restricts buyers to one item or nothing (unit-demand
    markets); semantics="subset" lets a buyer take any subset of what is left.
    """

    name = "static-items"

    def __init__(self, m, prices, semantics="subset"):
        super().__init__(m)
        if semantics not in ("single", "subset"):
            raise MarketError(f"unknown demand semantics: {semantics!r}")
        self.semantics = semantics
        self.prices = {b: Fraction(p) for b, p in prices.items()}
        missing = set(m.items) - set(self.prices)
        if missing:
            raise MarketError(f"missing price for item(s): {sorted(missing)}")
        if semantics == "single":
            for name, v in m.agents:
                if not isinstance(v, UnitDemand):
                    raise PreconditionError(
                        f"single-item semantics needs unit-demand buyers; "
                        f"{name!r} is not")

    def initial_units(self):
        return frozenset(self.m.items)

    def round(self, units, agents):
        return self.prices, units, None

    def family(self, prices, sale, agent, info):
        v = self.m.valuation(agent)
        if self.semantics == "subset":
            return demand_sets(v, sale, prices)
        best = Fraction(0)
        for b in sale:
            u = v.value({b}) - prices[b]
            if u > best:
                best = u
        out = set()
        if best == 0:
            out.add(frozenset())
        for b in sale:
            if v.value({b}) - prices[b] == best:
                out.add(frozenset([b]))
        return out

    def choice_value(self, agent, choice):
        return self.m.valuation(agent).value(choice)


class GsUniqueScheme(Scheme):
    """Static item prices under which demand is exactly the optimal bundle."""

    name = "gs-unique"

    def __init__(self, m):
        super().__init__(m)
        self.prices, self.opt = gs_unique_static_prices(m)

    def initial_units(self):
        return frozenset(self.m.items)

    def round(self, units, agents):
        return self.prices, units, None

    def family(self, prices, sale, agent, info):
        fam = demand_sets(self.m.valuation(agent), sale, prices)
        expected = frozenset(self.opt[agent])
        if fam != {expected}:
            raise InvariantViolation(
                f"{agent} should demand exactly {sorted(expected)}, "
                f"got {sorted(sorted(S) for S in fam)}")
        return fam

    def choice_value(self, agent, choice):
        return self.m.valuation(agent).value(choice)


class BundleScheme(Scheme):
    """Shared machinery for schemes that sell predefined bundles."""

    def __init__(self, m, bundles, prices):
        super().__init__(m)
        self.bundles = frozenset(frozenset(B) for B in bundles)
        self.prices = dict(prices)

    def initial_units(self):
        return self.bundles

    def round(self, units, agents):
        return self.prices, units, None

    def family(self, prices, sale, agent, info):
        return collection_demand(self.m.valuation(agent), sale, prices)

    def choice_value(self, agent, choice):
        union = frozenset().union(*choice) if choice else frozenset()
        return self.m.valuation(agent).value(union)


class StaticHalfScheme(BundleScheme):
    """Optimal-partition bundles at half their owners' values."""

    name = "static-half"

    def __init__(self, m, partition=None):
        if partition is None:
            partition, _ = brute_force_optimum(m)
        prices = static_half_bundle_prices(m, partition)
        super().__init__(m, prices.keys(), prices)
        self.partition = {a: frozenset(B) for a, B in partition.items()}


class SapbScheme(BundleScheme):
    """Bundles after speculative merging, a margin below owner values."""

    name = "sapb"

    def __init__(self, m, initial=None):
        if initial is None:
            initial, _ = brute_force_optimum(m)
        result = sapb_detailed(m, initial)
        super().__init__(m, result.prices.keys(), result.prices)
        self.final_bundles = dict(result.bundles)
        self.result = result

    def family(self, prices, sale, agent, info):
        fam = collection_demand(self.m.valuation(agent), sale, prices)
        own = self.final_bundles.get(agent, frozenset())
        expected = frozenset([own]) if own else frozenset()
        if fam != {expected}:
            raise InvariantViolation(
                f"{agent} should uniquely demand "
                f"{sorted(sorted(B) for B in expected)}, got {len(fam)} choices")
        return fam


class KDemandScheme(Scheme):
    """Per-round merged bundles priced a rank-graded sliver below raw value."""

    name = "kdemand"

    def __init__(self, m):
        super().__init__(m)
        self._initial = kdemand_initial_state(m)

    def initial_units(self):
        return self._initial.live_bundles

    def round(self, units, agents):
        info = kdemand_round_detailed(KDemandState(self.m, units, agents))
        return info.prices, info.live_bundles, info

    def family(self, prices, sale, agent, info):
        return collection_demand(self.m.valuation(agent), sale, prices)

    def choice_value(self, agent, choice):
        union = frozenset().union(*choice) if choice else frozenset()
        return self.m.valuation(agent).value(union)

    def check_round(self, units, agents, prices, sale, info):
        # along every surviving relation edge the owner strictly prefers
        # their own bundle to the target
        for (B, C) in info.edges:
            a = info.owner[B]
            if a is None:
                continue
            v = self.m.valuation(a)
            mine = v.value(B) - prices[B]
            theirs = v.value(C) - prices[C]
            if mine <= theirs:
                raise InvariantViolation(
                    f"relation edge not respected: {a} weakly prefers "
                    f"{sorted(C)} over own {sorted(B)}")

    def check_transition(self, agents, prices, sale, info, agent, choice):
        # a buyer only ever picks their assigned bundle or bundles they
        # value in full
        assigned = info.assignment.get(agent, frozenset())
        v = self.m.valuation(agent)
        for C in choice:
            if C != assigned and v.value(C) != raw_value(self.m, C):
                raise InvariantViolation(
                    f"{agent} bought {sorted(C)} below its raw value")


SCHEMES = {
    "dynamic-matching": DynamicMatchingScheme,
    "static-half": StaticHalfScheme,
    "gs-unique": GsUniqueScheme,
    "sapb": SapbScheme,
    "kdemand": KDemandScheme,
}


def make_scheme(name, m: Market, **options) -> Scheme:
    if name not in SCHEMES:
        raise MarketError(f"unknown scheme: {name!r}")
    return SCHEMES[name](m, **options)


def adversarial_worst(m: Market, scheme, checks=True):
    """The minimum welfare over every arrival order and every tie-break.

    `scheme` is a Scheme instance or a registry name. Returns
    (welfare, trace) where the trace is the lexicographically first witness
    run attaining the minimum. Scheme invariants are asserted on every
    explored branch unless checks=False.
    """
    if isinstance(scheme, str):
        scheme = make_scheme(scheme, m)
    guard = _node_guard()
    memo = {}
    agents0 = frozenset(m.agent_names)

    def worst(units, agents):
        key = (units, agents)
        if key in memo:
            return memo[key][0]
        if len(memo) >= guard:
            raise CapacityError(f"state count exceeded the node guard ({guard})")
        if not agents:
            memo[key] = (Fraction(0), None)
            return Fraction(0)
        prices, sale, info = scheme.round(units, agents)
        if checks:
            scheme.check_round(units, agents, prices, sale, info)
        best = None
        pick = None
        for a in sorted(agents):
            fam = scheme.family(prices, sale, a, info)
            for choice in sorted(fam, key=choice_key):
                if checks:
                    scheme.check_transition(agents, prices, sale, info, a, choice)
                gained = scheme.choice_value(a, choice)
                total = gained + worst(sale - choice, agents - {a})
                if best is None or total < best:
                    best, pick = total, (a, choice)
        memo[key] = (best, pick)
        return best

    value = worst(scheme.initial_units(), agents0)
    trace = _reconstruct(m, scheme, memo)
    soundness = verify_trace(m, scheme, trace)
    if soundness is not None:
        raise InvariantViolation(f"witness trace failed re-verification: {soundness}")
    return value, trace


def _reconstruct(m, scheme, memo):
    units = scheme.initial_units()
    agents = frozenset(m.agent_names)
    rounds = []
    order = []
    welfare = Fraction(0)
    while agents:
        _, pick = memo[(units, agents)]
        a, choice = pick
        prices, sale, info = scheme.round(units, agents)
        fam = scheme.family(prices, sale, a, info)
        gained = scheme.choice_value(a, choice)
        paid = scheme.choice_paid(prices, choice)
        offered = {u: prices[u] for u in sale}
        rounds.append(TraceRound(a, offered, fam, choice, paid, gained))
        order.append(a)
        welfare += gained
        units, agents = sale - choice, agents - {a}
    return Trace(scheme.name, order, rounds, welfare)


def run_order(m: Market, scheme, order, tie_break="first", script=None):
    """Simulate one fixed arrival order.

    tie_break picks the demanded choice each round: "first" takes the
    canonical smallest, "adversarial" minimizes final welfare over the
    remaining rounds, and "scripted" follows `script`, a list with one choice
    per round that must be a member of the buyer's demand family.
    """
    if isinstance(scheme, str):
        scheme = make_scheme(scheme, m)
    order = list(order)
    if sorted(order) != sorted(m.agent_names):
        raise MarketError("order must list every agent exactly once")
    if tie_break == "scripted":
        if script is None or len(script) != len(order):
            raise MarketError("scripted tie-break needs one choice per round")
    elif tie_break not in ("first", "adversarial"):
        raise MarketError(f"unknown tie-break policy: {tie_break!r}")

    picks = None
    if tie_break == "adversarial":
        picks = _adversarial_picks(m, scheme, order)

    units = scheme.initial_units()
    rounds = []
    welfare = Fraction(0)
    agents = frozenset(m.agent_names)
    for idx, a in enumerate(order):
        prices, sale, info = scheme.round(units, agents)
        fam = scheme.family(prices, sale, a, info)
        ordered = sorted(fam, key=choice_key)
        if tie_break == "first":
            choice = ordered[0]
        elif tie_break == "adversarial":
            choice = picks[(units, idx)]
        else:
            choice = frozenset(script[idx])
            if choice not in fam:
                raise PreconditionError(
                    f"scripted choice {idx} is not in the demand family of {a}")
        gained = scheme.choice_value(a, choice)
        paid = scheme.choice_paid(prices, choice)
        rounds.append(TraceRound(a, {u: prices[u] for u in sale}, fam, choice,
                                 paid, gained))
        welfare += gained
        units, agents = sale - choice, agents - {a}
    return Trace(scheme.name, order, rounds, welfare)


def _adversarial_picks(m, scheme, order):
    memo = {}
    picks = {}

    def worst(units, idx):
        if idx == len(order):
            return Fraction(0)
        key = (units, idx)
        if key in memo:
            return memo[key]
        a = order[idx]
        agents = frozenset(order[idx:])
        prices, sale, info = scheme.round(units, agents)
        fam = scheme.family(prices, sale, a, info)
        best = None
        for choice in sorted(fam, key=choice_key):
            total = scheme.choice_value(a, choice) + worst(sale - choice, idx + 1)
            if best is None or total < best:
                best = total
                picks[key] = choice
        memo[key] = best
        return best

    worst(scheme.initial_units(), 0)
    return picks


def worst_over_orders(m: Market, scheme, tie_break="adversarial"):
    """Explicit enumeration over every arrival order; worst (welfare, trace).

    Exhaustive and factorial; meant for small fixtures and as an independent
    cross-check of adversarial_worst.
    """
    if isinstance(scheme, str):
        scheme = make_scheme(scheme, m)
    best = None
    witness = None
    for perm in permutations(sorted(m.agent_names)):
        trace = run_order(m, scheme, perm, tie_break=tie_break)
        if best is None or trace.welfare < best:
            best, witness = trace.welfare, trace
    return best, witness


def verify_trace(m: Market, scheme, trace: Trace):
    """Replay a trace against freshly computed offers; None if it is sound."""
    if isinstance(scheme, str):
        scheme = make_scheme(scheme, m)
    units = scheme.initial_units()
    agents = frozenset(m.agent_names)
    welfare = Fraction(0)
    for idx, r in enumerate(trace.rounds):
        if r.agent not in agents:
            return f"round {idx}: {r.agent!r} already departed or unknown"
        prices, sale, info = scheme.round(units, agents)
        offered = {u: prices[u] for u in sale}
        if offered != r.prices:
            return f"round {idx}: recorded prices do not match recomputed ones"
        fam = scheme.family(prices, sale, r.agent, info)
        if r.chosen not in fam:
            return f"round {idx}: chosen set is not in the demand family"
        if fam != r.family:
            return f"round {idx}: recorded demand family does not match"
        if r.paid != scheme.choice_paid(prices, r.chosen):
            return f"round {idx}: recorded payment is wrong"
        if r.value != scheme.choice_value(r.agent, r.chosen):
            return f"round {idx}: recorded value is wrong"
        welfare += r.value
        units, agents = sale - r.chosen, agents - {r.agent}
    if welfare != trace.welfare:
        return "total welfare does not match the rounds"
    return None


def walrasian_check(m: Market, prices, allocation):
    """Is (prices, allocation) a Walrasian equilibrium? None, or a reason not.

    Every agent's bundle must lie in their demand over all items at the given
    prices, and every unallocated item must be priced at zero.
    """
    from .model import check_allocation
    check_allocation(m, allocation)
    prices = {b: Fraction(p) for b, p in prices.items()}
    missing = set(m.items) - set(prices)
    if missing:
        raise MarketError(f"missing price for item(s): {sorted(missing)}")
    for a in sorted(m.agent_names):
        S = frozenset(allocation.get(a, frozenset()))
        fam = demand_sets(m.valuation(a), m.items, prices)
        if S not in fam:
            return f"bundle of {a} is not demanded at these prices"
    allocated = frozenset().union(*[frozenset(S) for S in allocation.values()]) \
        if allocation else frozenset()
    for b in sorted(set(m.items) - allocated):
        if prices[b] != 0:
            return f"unallocated item {b} has nonzero price"
    return None
