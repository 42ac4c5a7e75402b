"""A market that no item prices can save, dynamic or not.

Four items, one coverage buyer and three unit-demand buyers. The market has
Walrasian prices, a unique optimal allocation, and still: whatever item
prices are posted, some first arrival caps welfare strictly below the
optimum. The culprit is a short list of conditions the first round would
have to satisfy, and the list is infeasible. Bundle prices at half value
sidestep the whole problem and guarantee half the optimum.

Run: python3 demos/coverage_needs_bundles.py
"""

from fractions import Fraction as F

from postedprices.feasibility import coverage_condition_system, feasible
from postedprices.model import format_rational
from postedprices.serialize import market_from_json
from postedprices.simulate import StaticHalfScheme, adversarial_worst, walrasian_check
from postedprices.model import check_unique_optimum, welfare

from importlib import resources


def bundled(name):
    return (resources.files("postedprices") / "data" / name).read_text()


m = market_from_json(bundled("market_coverage4.json"))

opt = check_unique_optimum(m)
print("The optimum is unique and worth", format_rational(welfare(m, opt)), "-")
for a in sorted(opt):
    print(f"  {a} gets {' '.join(sorted(opt[a])) or 'nothing'}")
print()

unit = {b: F(1) for b in m.items}
problem = walrasian_check(m, unit, opt)
print("All-ones prices support it as a Walrasian equilibrium:",
      "yes" if problem is None else problem)
print()

print("For a pricing scheme to reach 8 regardless of who arrives first, the")
print("first-round prices would have to satisfy all of these at once:")
system = coverage_condition_system()
for c in system.constraints:
    for line in sorted(c.origins):
        print("   ", line)
verdict = feasible(system)
print("Feasible?", "yes" if verdict.feasible else "no")
print("The elimination ends in the contradiction:", verdict.contradiction.render())
print("The first two conditions squeeze p(a) strictly below 1, the last")
print("three force it strictly above. No such prices exist, so every item")
print("pricing scheme, static or dynamic, loses welfare on some arrival.")
print()

scheme = StaticHalfScheme(m)
print("Selling the optimal bundles at half their value instead:")
for B, p in sorted(scheme.prices.items(), key=lambda e: sorted(e[0])):
    print(f"  bundle {{{' '.join(sorted(B))}}} at {format_rational(p)}")
worst, _ = adversarial_worst(m, scheme)
print("Worst case over all orders and tie-breaks:", format_rational(worst),
      f"(guarantee: at least {format_rational(F(welfare(m, opt), 2))})")
