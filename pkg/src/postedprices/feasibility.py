"""Exact feasibility of strict and weak linear inequalities.

Fourier-Motzkin elimination over Fractions. Each derived constraint remembers
which input lines it descends from, so an infeasible system comes with a
certificate naming the original inequalities that clash, and a feasible one
comes with a sample point found by back substitution.

The bundled systems encode the impossibility arguments for static item prices
in the four-buyer matching market and for first-arrival optimality in the
four-item coverage market.
"""

import re
from fractions import Fraction
from importlib import resources

from .model import InvariantViolation, ParseError, PreconditionError, as_rational


class Constraint:
    """A single inequality: sum of coeffs[v] * v  (< or <=)  bound."""

    __slots__ = ("coeffs", "strict", "bound", "origins")

    def __init__(self, coeffs, strict, bound, origins=()):
        self.coeffs = {v: Fraction(c) for v, c in coeffs.items() if c != 0}
        self.strict = bool(strict)
        self.bound = Fraction(bound)
        self.origins = frozenset(origins) or frozenset([self.render()])

    def render(self) -> str:
        parts = []
        for v in sorted(self.coeffs):
            c = self.coeffs[v]
            sign = "-" if c < 0 else "+"
            mag = abs(c)
            term = v if mag == 1 else f"{mag}*{v}"
            if not parts and sign == "+":
                parts.append(term)
            else:
                parts.append(f"{sign} {term}" if parts else f"-{term}")
        lhs = " ".join(parts) if parts else "0"
        rel = "<" if self.strict else "<="
        return f"{lhs} {rel} {self.bound}"

    def __repr__(self):
        return f"Constraint({self.render()!r})"

    def __eq__(self, other):
        if not isinstance(other, Constraint):
            return NotImplemented
        return (self.coeffs, self.strict, self.bound) == (
            other.coeffs, other.strict, other.bound)

    def __hash__(self):
        return hash((frozenset(self.coeffs.items()), self.strict, self.bound))

    def satisfied_by(self, point) -> bool:
        lhs = sum((c * point[v] for v, c in self.coeffs.items()), Fraction(0))
        return lhs < self.bound if self.strict else lhs <= self.bound


class LinearSystem:
    """An ordered conjunction of Constraints over named variables."""

    def __init__(self, constraints, variables=()):
        self.constraints = tuple(constraints)
        names = set(variables)
        for c in self.constraints:
            names.update(c.coeffs)
        self.variables = tuple(sorted(names))

    def __repr__(self):
        return f"LinearSystem({len(self.constraints)} constraints, vars {list(self.variables)})"

    def __eq__(self, other):
        if not isinstance(other, LinearSystem):
            return NotImplemented
        return (self.constraints, self.variables) == (other.constraints, other.variables)

    def render(self) -> str:
        return "\n".join(c.render() for c in self.constraints)

    def satisfied_by(self, point) -> bool:
        return all(c.satisfied_by(point) for c in self.constraints)


class Verdict:
    """Outcome of feasible(): a sample point, or a contradiction with roots.

    When feasible, `sample` maps every variable to a Fraction satisfying the
    system. When not, `contradiction` is the variable-free constraint the
    elimination arrived at and `certificate` lists the original inequalities
    it was combined from.
    """

    def __init__(self, feasible, sample=None, contradiction=None):
        self.feasible = feasible
        self.sample = sample
        self.contradiction = contradiction

    @property
    def certificate(self):
        if self.contradiction is None:
            return None
        return tuple(sorted(self.contradiction.origins))

    def __repr__(self):
        if self.feasible:
            return f"Verdict(feasible, sample={self.sample})"
        return f"Verdict(infeasible, {self.contradiction.render()!r})"


def eliminate(sys: LinearSystem, var) -> LinearSystem:
    """Project the system onto the other variables, Fourier-Motzkin style.

    Every lower bound on var is paired with every upper bound; a combined
    constraint is strict when either parent is. The projection has exactly
    the solutions that extend to a solution of the input.
    """
    if var not in sys.variables:
        raise PreconditionError(f"variable {var!r} does not occur in the system")
    kept, uppers, lowers = [], [], []
    for c in sys.constraints:
        coef = c.coeffs.get(var, Fraction(0))
        if coef > 0:
            uppers.append((coef, c))
        elif coef < 0:
            lowers.append((coef, c))
        else:
            kept.append(c)
    for cu, u in uppers:
        for cl, l in lowers:
            # scale by -cl > 0 and cu > 0 so var cancels
            coeffs = {}
            for v in set(u.coeffs) | set(l.coeffs):
                if v == var:
                    continue
                coeffs[v] = -cl * u.coeffs.get(v, 0) + cu * l.coeffs.get(v, 0)
            kept.append(Constraint(
                coeffs, u.strict or l.strict,
                -cl * u.bound + cu * l.bound,
                u.origins | l.origins))
    remaining = tuple(v for v in sys.variables if v != var)
    return LinearSystem(kept, remaining)


def _bounds_on(sys: LinearSystem, var, point):
    """(low, hi) for var once the already-chosen values in point are fixed.

    Each is None or (value, strict) where strict means the bound itself is
    excluded.
    """
    low = hi = None
    for c in sys.constraints:
        coef = c.coeffs.get(var, Fraction(0))
        if coef == 0:
            continue
        rest = sum((cc * point[v] for v, cc in c.coeffs.items() if v != var),
                   Fraction(0))
        limit = (c.bound - rest) / coef
        if coef > 0:
            if hi is None or limit < hi[0] or (limit == hi[0] and c.strict):
                hi = (limit, c.strict)
        else:
            if low is None or limit > low[0] or (limit == low[0] and c.strict):
                low = (limit, c.strict)
    return low, hi


def feasible(sys: LinearSystem) -> Verdict:
    """Decide the system exactly.

    Eliminates variables in sorted order; the variable-free residue either
    exposes a contradiction or certifies feasibility, in which case a sample
    point is rebuilt by walking the eliminations backwards. The sample is
    re-checked against every input constraint before it is returned.
    """
    stages = [sys]
    order = list(sys.variables)
    for var in order:
        stages.append(eliminate(stages[-1], var))
    for c in stages[-1].constraints:
        bad = c.bound < 0 or (c.strict and c.bound == 0)
        if bad:
            return Verdict(False, contradiction=c)
    point = {}
    for var, stage in zip(reversed(order), reversed(stages[:-1])):
        low, hi = _bounds_on(stage, var, point)
        if low is None and hi is None:
            point[var] = Fraction(0)
        elif hi is None:
            point[var] = low[0] + 1
        elif low is None:
            point[var] = hi[0] - 1
        elif low[0] == hi[0]:
            point[var] = low[0]
        else:
            point[var] = (low[0] + hi[0]) / 2
    for c in sys.constraints:
        if not c.satisfied_by(point):
            raise InvariantViolation(
                f"back substitution produced a bad sample: {c.render()} "
                f"fails at {point}")
    return Verdict(True, sample=point)


_TOKEN = re.compile(
    r"(?P<num>\d+(?:/\d+)?)"
    r"|(?P<var>[A-Za-z_][A-Za-z0-9_]*(?:\([A-Za-z0-9_, ]*\))?)"
    r"|(?P<rel><=|>=|<|>)"
    r"|(?P<op>[+*-])"
    r"|(?P<ws>\s+)")


def _tokenize(text, lineno):
    pos = 0
    out = []
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}",
                             lineno, pos + 1)
        if m.lastgroup != "ws":
            out.append((m.lastgroup, m.group(), pos + 1))
        pos = m.end()
    return out


def _parse_side(tokens, lineno):
    """Sum of signed terms -> (coeffs dict, constant)."""
    coeffs = {}
    const = Fraction(0)
    sign = Fraction(1)
    expect_term = True
    i = 0
    while i < len(tokens):
        kind, text, col = tokens[i]
        if expect_term:
            if kind == "op" and text in "+-":
                # unary sign
                if text == "-":
                    sign = -sign
                i += 1
                continue
            if kind == "num":
                value = as_rational(text)
                # optional "* var" or juxtaposed var
                if i + 1 < len(tokens) and tokens[i + 1][0] == "op" and tokens[i + 1][1] == "*":
                    if i + 2 >= len(tokens) or tokens[i + 2][0] != "var":
                        raise ParseError("expected a variable after '*'",
                                         lineno, col)
                    v = tokens[i + 2][1]
                    coeffs[v] = coeffs.get(v, Fraction(0)) + sign * value
                    i += 3
                elif i + 1 < len(tokens) and tokens[i + 1][0] == "var":
                    v = tokens[i + 1][1]
                    coeffs[v] = coeffs.get(v, Fraction(0)) + sign * value
                    i += 2
                else:
                    const += sign * value
                    i += 1
            elif kind == "var":
                coeffs[text] = coeffs.get(text, Fraction(0)) + sign
                i += 1
            else:
                raise ParseError(f"expected a term, found {text!r}", lineno, col)
            sign = Fraction(1)
            expect_term = False
        else:
            if kind == "op" and text in "+-":
                sign = Fraction(1) if text == "+" else Fraction(-1)
                expect_term = True
                i += 1
            else:
                raise ParseError(f"expected '+' or '-', found {text!r}",
                                 lineno, col)
    if expect_term:
        raise ParseError("dangling sign or empty expression", lineno)
    return coeffs, const


def parse_constraint(line, lineno=None) -> Constraint:
    """One inequality like "6 - p(a) > 12 - p(b)" as a canonical Constraint."""
    tokens = _tokenize(line, lineno)
    rels = [i for i, t in enumerate(tokens) if t[0] == "rel"]
    if not rels:
        raise ParseError("no relation (<, <=, >, >=) in constraint", lineno)
    if len(rels) > 1:
        raise ParseError("more than one relation in constraint",
                         lineno, tokens[rels[1]][2])
    left = tokens[:rels[0]]
    right = tokens[rels[0] + 1:]
    rel = tokens[rels[0]][1]
    lc, lk = _parse_side(left, lineno)
    rc, rk = _parse_side(right, lineno)
    if rel in (">", ">="):
        lc, lk, rc, rk = rc, rk, lc, lk
    coeffs = dict(lc)
    for v, c in rc.items():
        coeffs[v] = coeffs.get(v, Fraction(0)) - c
    bound = rk - lk
    return Constraint(coeffs, rel in ("<", ">"), bound, [line.strip()])


def parse_system(text) -> LinearSystem:
    """A system from line-oriented text; # starts a comment."""
    constraints = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        constraints.append(parse_constraint(line, lineno))
    return LinearSystem(constraints)


def _bundled_system(name) -> LinearSystem:
    text = (resources.files("postedprices") / "data" / name).read_text()
    return parse_system(text)


def coverage_condition_system() -> LinearSystem:
    """The five price conditions the coverage market imposes on an optimal
    first round; provably contradictory (they squeeze p(a) both below and
    above 1)."""
    return _bundled_system("system_coverage_conditions.txt")


def static_example_systems():
    """The two singleton-demand systems for static prices in the four-buyer
    matching market; each is a cyclic chain of strict inequalities and hence
    infeasible."""
    return [_bundled_system("system_static_case1.txt"),
            _bundled_system("system_static_case2.txt")]
