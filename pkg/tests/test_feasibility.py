from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from postedprices.feasibility import (
    Constraint,
    LinearSystem,
    coverage_condition_system,
    eliminate,
    feasible,
    parse_constraint,
    parse_system,
    static_example_systems,
)
from postedprices.model import ParseError, PreconditionError

F = Fraction


class TestParsing:
    def test_canonical_form(self):
        c = parse_constraint("6 - p(a) > 12 - p(b)")
        # rearranged so larger-utility side is the strict upper bound
        assert c.coeffs == {"p(a)": F(1), "p(b)": F(-1)}
        assert c.bound == F(-6)
        assert c.strict

    def test_weak_and_coefficients(self):
        c = parse_constraint("2*x + 1/2 y <= 3/4")
        assert c.coeffs == {"x": F(2), "y": F(1, 2)}
        assert not c.strict
        assert c.bound == F(3, 4)

    def test_unary_minus_and_constants(self):
        c = parse_constraint("-x - 1 < 2")
        assert c.coeffs == {"x": F(-1)}
        assert c.bound == F(3)

    def test_comments_and_blanks(self):
        s = parse_system("# header\n\nx < 1  # trailing\n")
        assert len(s.constraints) == 1
        assert s.variables == ("x",)

    def test_float_rejected_with_position(self):
        with pytest.raises(ParseError) as e:
            parse_system("x < 1.5")
        assert e.value.line == 1
        assert e.value.column == 6

    def test_missing_relation(self):
        with pytest.raises(ParseError, match="no relation"):
            parse_system("x + 1")

    def test_double_relation(self):
        with pytest.raises(ParseError, match="more than one"):
            parse_constraint("0 < x < 1")

    def test_garbage_token(self):
        with pytest.raises(ParseError, match="unexpected character"):
            parse_constraint("x @ y < 1")

    def test_render_round_trip(self):
        s = parse_system("6 - p(a) > 12 - p(b)\n2*x - y <= 1/3")
        assert parse_system(s.render()) == s


class TestEliminate:
    def test_opposed_strict_bounds_collapse(self):
        s = parse_system("x < 1\nx > 1")
        e = eliminate(s, "x")
        assert [c.render() for c in e.constraints] == ["0 < 0"]

    def test_chained_upper_bound(self):
        s = parse_system("x < y\ny < 2")
        e = eliminate(s, "y")
        assert [c.render() for c in e.constraints] == ["x < 2"]

    def test_strictness_is_inherited(self):
        s = parse_system("x <= y\ny <= 2")
        assert not eliminate(s, "y").constraints[0].strict
        s = parse_system("x < y\ny <= 2")
        assert eliminate(s, "y").constraints[0].strict

    def test_origins_accumulate(self):
        s = parse_system("x < y\ny < 2")
        e = eliminate(s, "y")
        assert e.constraints[0].origins == {"x < y", "y < 2"}

    def test_absent_variable(self):
        with pytest.raises(PreconditionError):
            eliminate(parse_system("x < 1"), "z")


class TestCoverageConditions:
    def test_shape(self):
        s = coverage_condition_system()
        assert len(s.constraints) == 5
        assert s.variables == ("p(a)", "p(b)", "p(c)", "p(d)")

    def test_unit_prices_fail_the_first_condition(self):
        s = coverage_condition_system()
        p1 = {v: F(1) for v in s.variables}
        assert not s.constraints[0].satisfied_by(p1)

    def test_hand_elimination_squeezes_one_variable(self):
        s = coverage_condition_system()
        for var in ("p(d)", "p(b)", "p(c)"):
            s = eliminate(s, var)
        assert s.variables == ("p(a)",)
        point_low = {"p(a)": F(1, 2)}
        point_high = {"p(a)": F(2)}
        assert not s.satisfied_by(point_low)
        assert not s.satisfied_by(point_high)

    def test_infeasible_with_full_certificate(self):
        v = feasible(coverage_condition_system())
        assert not v.feasible
        assert v.certificate == (
            "p(a) < p(d)",
            "p(b) + p(c) - p(a) > 1",
            "p(b) < p(a)",
            "p(c) < p(a)",
            "p(d) < 1",
        )


class TestStaticExampleSystems:
    def test_both_infeasible(self):
        for s in static_example_systems():
            v = feasible(s)
            assert not v.feasible
            assert len(v.certificate) == 3

    def test_all_weak_variant_collapses_to_equalities(self):
        # with every inequality weakened the chain closes into equalities,
        # so the system becomes satisfiable
        case1, _ = static_example_systems()
        weak = LinearSystem(
            [Constraint(c.coeffs, False, c.bound) for c in case1.constraints])
        v = feasible(weak)
        assert v.feasible
        p = v.sample
        assert p["p(b)"] == p["p(c)"] == p["p(a)"] + 6

    def test_any_single_strict_restores_infeasibility(self):
        case1, _ = static_example_systems()
        for keep in range(3):
            mixed = LinearSystem(
                [Constraint(c.coeffs, i == keep, c.bound)
                 for i, c in enumerate(case1.constraints)])
            assert not feasible(mixed).feasible

    def test_dropping_any_constraint_restores_feasibility(self):
        case1, _ = static_example_systems()
        for drop in range(3):
            rest = [c for i, c in enumerate(case1.constraints) if i != drop]
            assert feasible(LinearSystem(rest)).feasible


class TestFeasible:
    def test_empty_system(self):
        v = feasible(LinearSystem([]))
        assert v.feasible
        assert v.sample == {}

    def test_declared_but_unconstrained_variables(self):
        v = feasible(LinearSystem([], variables=["x", "y"]))
        assert v.sample == {"x": F(0), "y": F(0)}

    def test_single_upper_bound(self):
        v = feasible(parse_system("x < 1"))
        assert v.feasible
        assert v.sample["x"] < 1

    def test_pinned_variable(self):
        v = feasible(parse_system("x <= 3\nx >= 3"))
        assert v.sample == {"x": F(3)}

    def test_constant_contradiction(self):
        v = feasible(parse_system("1 < 0"))
        assert not v.feasible
        assert v.certificate == ("1 < 0",)


names = ["x", "y", "z"]
coeff = st.integers(-3, 3)


@st.composite
def systems(draw):
    nvars = draw(st.integers(1, 3))
    vs = names[:nvars]
    rows = draw(st.lists(st.tuples(
        st.lists(coeff, min_size=nvars, max_size=nvars),
        st.booleans(),
        st.integers(-4, 4)), min_size=1, max_size=5))
    return LinearSystem(
        [Constraint(dict(zip(vs, cs)), strict, b) for cs, strict, b in rows],
        variables=vs)


def grid_points(variables):
    pts = [dict()]
    values = [F(n, 2) for n in range(-4, 5)]
    for v in variables:
        pts = [dict(p, **{v: val}) for p in pts for val in values]
    return pts


@settings(max_examples=150, deadline=None)
@given(systems())
def test_grid_agreement(s):
    v = feasible(s)
    witnesses = [p for p in grid_points(s.variables) if s.satisfied_by(p)]
    if witnesses:
        assert v.feasible
    if not v.feasible:
        assert not witnesses


@settings(max_examples=100, deadline=None)
@given(systems())
def test_elimination_preserves_feasibility(s):
    reduced = eliminate(s, s.variables[0])
    assert feasible(s).feasible == feasible(reduced).feasible
    v = feasible(s)
    if v.feasible:
        shadow = {k: v.sample[k] for k in reduced.variables}
        assert reduced.satisfied_by(shadow)
