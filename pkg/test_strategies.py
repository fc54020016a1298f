#!/usr/bin/env python3
"""
Test Search Strategies
Strategy naming, plans, divisor enumeration and small end-to-end searches
"""

import sys
import tempfile
import time
from pathlib import Path

from rich.console import Console
from rich.table import Table
from sympy import QQ

from core.arith import RatFun, gen_index, ode_ring, same_function
from core.errors import Inapplicable
from core.odemodel import parse_expression, parse_ode
from core.runlog import RunLogger
from core.strategies import (
    AnalysisReport, NotFound, PrefilterResult, SigmaResult, StrategyKind, StrategyPlan,
    StrategySpec, SymmetrySearch, constraints_imply, monic_divisors, parse_side_condition,
    substitute_constraints,
)
from core.verify import verify_sigma

CONFIG = {"logging": {"to_file": False}, "budget": {"timeout": 120}}
KAMKE_78 = "y'' = -(y-1)*y'/x"
KAMKE_169 = "y'' = -y'*(x*y'-y)/(y*x)"
KAMKE_183 = "y'' = (x^2*y'^2+x^2-y^2)/(2*x^2*y)"
KAMKE_41_VARIANT = "y'' = -(x^2*y^3-3*x^2*y*y'+y^2-y')/x^2"
TWO_ODE_1 = "y'' = -(x*y*y'-2*x*y'^2+y*y'-y'^2-y+2*y')/(x*y-1)"
TWO_ODE_2 = ("y'' = (x^2*y^2+x^2*y*y'-2*y'^2*x*y-x*y'^3+y'^4-x^2*y'+x*y^2-y*y'^2-y*x)"
             "/(2*y'*(y*x-y'^2-x))")
WORKED_EXAMPLE = "y'' = (y'-1)*(x^4*y'+2*x^3*y-x^2*y+y')/((x^2*y-1)*x^2)"
HELMHOLTZ = "y'' = a*y' + b*y - c*y^2"


def _raises(error, fn, *args):
    try:
        fn(*args)
    except error:
        return
    raise AssertionError(f"{fn.__name__}{args} did not raise {error.__name__}")


def test_strategy_names():
    spec = StrategySpec.from_name("q-u-n:y'", 5)
    assert spec.kind is StrategyKind.Q_EQUALS_UN
    assert spec.u == "z"
    assert spec.label == "q-u-n:z"
    assert StrategySpec.from_name("base", 4).degrees == (1, 4)
    for bad in ("q-u-n", "q-u-n:w", "base:x", "bogus"):
        _raises(ValueError, StrategySpec.from_name, bad)


def test_default_plan_ends_with_base():
    plan = StrategyPlan.default(parse_ode(KAMKE_169))
    labels = plan.labels()
    assert labels[0] == "seed-monomials"
    assert labels[-1] == "base"
    assert "n-of-x" not in labels
    assert "n-of-x" in StrategyPlan.default(parse_ode(KAMKE_78)).labels()


def test_plan_validation():
    base = StrategySpec(StrategyKind.BASE)
    _raises(ValueError, StrategyPlan, [base, base])
    _raises(ValueError, StrategyPlan, [StrategySpec(StrategyKind.Q_DIVIDES_N)])
    _raises(ValueError, StrategyPlan, [StrategySpec(StrategyKind.BASE, (0, 3))])
    assert StrategyPlan([StrategySpec(StrategyKind.Q_DIVIDES_N), base]).labels() == ["q-div-n", "base"]


def test_monic_divisors():
    R = ode_ring()
    x, y, z = R.gens
    divisors = monic_divisors(x ** 4 * y - x ** 2)
    assert divisors == [R.one, x, x ** 2, x ** 2 * y - 1, x ** 3 * y - x, x ** 4 * y - x ** 2]
    assert monic_divisors(x ** 4 * y - x ** 2, limit=3) == [R.one, x, x ** 4 * y - x ** 2]
    assert monic_divisors(R.one) == [R.one]

    Ra = ode_ring(("a",))
    xa, a = Ra.gens[0], Ra.gens[3]
    assert monic_divisors(a * xa) == [Ra.one, xa]


def test_side_conditions():
    R = ode_ring(("a", "b", "c"))
    a, b, c = R.gens[3:]
    assert parse_side_condition("c != 0", R) == RatFun.from_poly(c)
    assert parse_side_condition("c", R) == RatFun.from_poly(c)
    assert parse_side_condition("a != b", R) == RatFun.from_poly(a - b)
    _raises(ValueError, parse_side_condition, "0", R)
    _raises(ValueError, parse_side_condition, "a != a", R)


def test_constraints():
    R = ode_ring(("a", "b"))
    a, b = R.gens[3:]
    two_a = ("b", RatFun.from_poly(2 * a))
    point = [("a", RatFun.constant(R, 1)), ("b", RatFun.constant(R, 2))]
    f = substitute_constraints(RatFun.from_poly(a + b), [two_a])
    assert f == RatFun.from_poly(3 * a)
    assert constraints_imply([two_a], [two_a], R)
    assert constraints_imply(point, [two_a], R)
    assert not constraints_imply([two_a], point, R)


def test_q_divides_n_finds_kamke_78():
    ode = parse_ode(KAMKE_78)
    outcome = SymmetrySearch(CONFIG).solve(ode, strategy="q-div-n")
    assert isinstance(outcome, SigmaResult)
    assert outcome.strategy == "q-div-n"
    assert outcome.verified
    assert same_function(outcome.sigma, parse_expression("(y-2)/x", ode.ring))
    assert outcome.to_json()["sigma"] == outcome.sigma.render()


def test_base_degree_one_finds_kamke_169():
    ode = parse_ode(KAMKE_169)
    outcome = SymmetrySearch(CONFIG).solve(ode, strategy="base", max_degree=1)
    assert isinstance(outcome, SigmaResult)
    assert outcome.degree == 1
    assert verify_sigma(outcome.sigma, ode).ok


def test_inapplicable_shapes():
    search = SymmetrySearch(CONFIG)
    _raises(Inapplicable, search.solve, parse_ode(KAMKE_169), "n-of-x")
    _raises(Inapplicable, search.solve, parse_ode("y'' = y'^2 + x*y"), "common-factor")


def test_bad_arguments():
    search = SymmetrySearch(CONFIG)
    _raises(ValueError, search.solve, parse_ode(KAMKE_78), "base", 0)
    _raises(ValueError, search.solve, parse_ode(KAMKE_78), "nonsense")
    _raises(ValueError, search.analyze, parse_ode(KAMKE_78))
    _raises(ValueError, search.analyze, parse_ode("y'' = a*y"), (), "q-div-n")


def test_not_found_json():
    result = NotFound("base", (1, 3), 7, False, 0.5, [1, 2])
    data = result.to_json()
    assert data["status"] == "NotFound"
    assert data["degrees"] == [1, 3]
    assert data["trivial_degrees"] == [1, 2]


def _same(outcome, expected, ode):
    assert isinstance(outcome, SigmaResult), outcome
    assert outcome.verified
    assert same_function(outcome.sigma, parse_expression(expected, ode.ring)), outcome.sigma.render()


def test_base_finds_worked_example_at_degree_three():
    ode = parse_ode(WORKED_EXAMPLE)
    started = time.monotonic()
    outcome = SymmetrySearch(CONFIG).solve(ode, strategy="base", max_degree=3)
    _same(outcome, "-x^2*(y'-1)/(x^2*y-1)", ode)
    assert outcome.degree == 3
    assert time.monotonic() - started < 60


def test_monomial_seed_finds_kamke_183():
    ode = parse_ode(KAMKE_183)
    outcome = SymmetrySearch(CONFIG).solve(ode, strategy="seed-monomials")
    _same(outcome, "(x^2*y'^2+x^2-y^2)/(-2*x*y*(x*y'-y))", ode)


def test_q_divides_n_finds_two_ode_1():
    ode = parse_ode(TWO_ODE_1)
    _same(SymmetrySearch(CONFIG).solve(ode, strategy="q-div-n"), "-(x*y'-1)/(x*y-1)", ode)


def test_q_equals_yp_n_finds_two_ode_2():
    ode = parse_ode(TWO_ODE_2)
    outcome = SymmetrySearch(CONFIG).solve(ode, strategy="q-u-n:y'")
    assert isinstance(outcome, SigmaResult)
    assert outcome.strategy == "q-u-n:z"
    assert verify_sigma(outcome.sigma, ode).ok


def test_n_of_x_finds_kamke_41_variant():
    ode = parse_ode(KAMKE_41_VARIANT)
    outcome = SymmetrySearch(CONFIG).solve(ode, strategy="n-of-x", max_degree=2)
    assert isinstance(outcome, SigmaResult)
    assert outcome.strategy == "n-of-x"
    assert verify_sigma(outcome.sigma, ode).ok


def test_prefilter_reduces_coefficients():
    search = SymmetrySearch(CONFIG)
    _raises(Inapplicable, search.run_prefilter_11, parse_ode(WORKED_EXAMPLE), 3)
    result = search.run_prefilter_11(parse_ode("y'' = (y'+1)/(x*y*y')"), 1)
    assert isinstance(result, PrefilterResult)
    assert result.symbols_before == 8
    assert result.symbols_after < result.symbols_before
    assert result.p.terms and result.q.terms


def test_helmholtz_analysis_branches():
    ode = parse_ode(HELMHOLTZ)
    R = ode.ring
    a, b = R.gens[3], R.gens[4]
    report = SymmetrySearch(CONFIG).analyze(ode, nonzero=["c != 0"], max_degree=1)
    assert isinstance(report, AnalysisReport)
    relations = set()
    for branch in report.constrained:
        assert branch.verified
        for name, value in branch.constraints:
            relations.add((R.gens[gen_index(R, name)] * value.den - value.num).monic())
    assert (b - QQ(6, 25) * a ** 2).monic() in relations
    assert (b + QQ(6, 25) * a ** 2).monic() in relations


def test_unit_stiffness_analysis_is_unresolved():
    ode = parse_ode("y'' = a*y' + y - c*y^2")
    report = SymmetrySearch(CONFIG).analyze(ode, nonzero=["c != 0"], max_degree=1)
    assert isinstance(report, AnalysisReport)
    a = ode.ring.gens[3]
    relations = [parse_expression(r.partition("=")[0], ode.ring).num.monic()
                 for u in report.unresolved for r in u.relations]
    assert a ** 2 - QQ(25, 6) in relations


def test_capped_divisor_scan_is_not_exhaustive():
    ode = parse_ode("y'' = y'/(x*y*(x+1))")
    for limit, exhaustive in ((2, False), (32, True)):
        search = SymmetrySearch({**CONFIG, "search": {"max_divisors": limit}})
        search.attempt = lambda *args, **kwargs: None
        outcome = search.run_q_divides_n(ode)
        assert isinstance(outcome, NotFound)
        assert outcome.exhaustive is exhaustive


def test_slice_narrows_the_deadline():
    search = SymmetrySearch(CONFIG)
    search._deadline = time.monotonic() + 100
    outer = search._deadline
    with search._slice(0.3):
        assert search._deadline <= time.monotonic() + 30
    assert search._deadline == outer
    with search._slice(1.0):
        assert search._deadline == outer


def test_discarded_branches_are_logged():
    with tempfile.TemporaryDirectory() as tmp:
        logger = RunLogger({"logging": {"log_dir": tmp, "to_file": True}}, quiet=True)
        SymmetrySearch(CONFIG, logger)._log_discarded("base", 3, 2)
        text = Path(logger.log_file).read_text(encoding="utf-8")
    assert "discarded" in text
    assert "branches: 2" in text


def main() -> int:
    console = Console()
    tests = [(name, fn) for name, fn in globals().items() if name.startswith("test_") and callable(fn)]
    table = Table(title="Search Strategies")
    table.add_column("Test", style="cyan")
    table.add_column("Result")
    table.add_column("Detail", style="dim")
    failed = 0
    for name, fn in tests:
        try:
            fn()
            table.add_row(name, "[green]PASS[/green]", "")
        except Exception as e:
            failed += 1
            table.add_row(name, "[red]FAIL[/red]", f"{type(e).__name__}: {e}")
    console.print(table)
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
