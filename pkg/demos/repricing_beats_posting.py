"""Why one round of posted prices is not enough.

Two tiny markets where any fixed item prices admit an arrival order (or an
unlucky tie-break) that loses welfare, while recomputing prices after every
sale holds every order and every tie-break at the optimum.

Run: python3 demos/repricing_beats_posting.py
"""

from postedprices.matching import brute_force_optimum
from postedprices.model import Market, UnitDemand, format_rational
from postedprices.simulate import DynamicMatchingScheme, StaticItemScheme, adversarial_worst


def show(title, m, scheme):
    worst, trace = adversarial_worst(m, scheme)
    _, opt = brute_force_optimum(m)
    print(f"  {title}: worst welfare {format_rational(worst)}"
          f" (optimum {format_rational(opt)})")
    for r in trace.rounds:
        prices = ", ".join(f"{b}={format_rational(p)}" for b, p in sorted(r.prices.items()))
        took = " ".join(sorted(r.chosen)) or "nothing"
        print(f"    prices [{prices}]  ->  {r.agent} takes {took}")
    return worst


alice_bob = Market(["a", "b"], [
    ("alice", UnitDemand(["a", "b"], {"a": 5, "b": 1})),
    ("bob", UnitDemand(["a", "b"], {"a": 1, "b": 1})),
])

print("Market 1: alice values a=5 b=1, bob values a=1 b=1. Optimum is 6.")
print()
print("Static prices (4, 0) look safe: alice nets 1 on either item, bob only")
print("wants b. But alice is indifferent, and if she grabs b first, bob is")
print("priced out of a and welfare collapses:")
show("static (4, 0)", alice_bob, StaticItemScheme(alice_bob, {"a": 4, "b": 0}, semantics="single"))
print()
print("Repricing after each sale steers every branch to the optimum. The")
print("first round prices a at 4/3: alice strictly prefers a, bob strictly")
print("prefers b, and no order or tie-break can go wrong:")
show("dynamic", alice_bob, DynamicMatchingScheme(alice_bob))
print()

cyclic = Market(["a", "b", "c"], [
    ("alice", UnitDemand(["a", "b", "c"], {"a": 1, "b": 1})),
    ("bob", UnitDemand(["a", "b", "c"], {"b": 1, "c": 1})),
    ("carl", UnitDemand(["a", "b", "c"], {"c": 1, "a": 1})),
])

print("Market 2: three buyers, each happy with either of two items, arranged")
print("in a cycle. Every positive price scares somebody off, so the best")
print("static prices are all zero, and then ties can still burn an item:")
show("static all-zero", cyclic, StaticItemScheme(cyclic, {"a": 0, "b": 0, "c": 0}, semantics="single"))
print()
print("Zero prices are fine for the dynamic scheme because it never needs to")
print("forbid anything here: whatever the first buyer takes, repricing")
print("re-matches the remaining two buyers to the remaining two items:")
show("dynamic", cyclic, DynamicMatchingScheme(cyclic))
