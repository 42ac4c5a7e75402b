"""Speculative bundling in action.

With super-additive buyers, posting each bundle at its owner's value invites
speculation: a buyer who values the union more than the parts buys a rival's
bundle outright. The scheme leans into that: it simulates the speculation
until nobody wants a foreign bundle, then shaves a uniform margin off every
price so each surviving owner strictly demands exactly their own bundle.

Run: python3 demos/merging_speculators.py
"""

from fractions import Fraction
from importlib import resources

from postedprices.model import format_rational
from postedprices.serialize import market_from_json
from postedprices.simulate import SapbScheme, adversarial_worst


def load(name):
    text = (resources.files("postedprices") / "data" / name).read_text()
    return market_from_json(text)


def run(title, m, initial):
    start = sum((m.valuation(a).value(B) for a, B in initial.items()), Fraction(0))
    print(f"{title}: start from the split worth {format_rational(start)}")
    for a in sorted(initial):
        print(f"  {a} owns {{{' '.join(sorted(initial[a]))}}}"
              f" worth {format_rational(m.valuation(a).value(initial[a]))}")
    scheme = SapbScheme(m, initial)
    r = scheme.result
    print(f"  speculative merges: {r.merges}")
    for a in sorted(r.bundles):
        B = r.bundles[a]
        if B:
            print(f"  {a} ends up owning {{{' '.join(sorted(B))}}}"
                  f" priced {format_rational(r.prices[B])}"
                  f" (margin {format_rational(r.epsilon)} below value)")
        else:
            print(f"  {a} was bought out and leaves empty-handed")
    worst, _ = adversarial_worst(m, scheme)
    print(f"  worst welfare over all orders and tie-breaks: {format_rational(worst)}")
    print()


split = {"x": frozenset(["a"]), "y": frozenset(["b"])}

print("Two super-additive buyers and two items, one per buyer to start. In")
print("the first market the synergy bonus is small, so each buyer keeps")
print("their own bundle and only the margin moves the prices:")
print()
run("stable market", load("market_sapb_stable.json"), split)

print("Raising x's synergy bonus makes x value {a b} above the sum of both")
print("owners' parts, so x buys out y during the simulation. The union goes")
print("on sale as a single bundle that only x wants; y strictly prefers to")
print("walk away, whoever arrives first:")
print()
run("merging market", load("market_sapb_merging.json"), split)
