#!/usr/bin/env python3
"""
Test Algebraic Solver
Branching elimination over QQ with parameters held generic or solved for
"""

import sys
import time

from rich.console import Console
from rich.table import Table
from sympy import QQ
from sympy.polys.orderings import grevlex
from sympy.polys.rings import ring

from core.algsolve import (
    SolveBudget, SolveMode, UnresolvedAlgebraic, _Branch, _Solver, assignment_residuals,
    groebner_basis, propagate_linear, solve_system,
)
from core.arith import RatFun, render_poly
from core.detsys import AlgSystem, SymbolKind, UnknownSym
from core.errors import BudgetExhausted, Inconsistent


def _system(names, equations_of, params=()):
    R, *gens = ring(",".join(list(names) + list(params)), QQ, grevlex)
    unknowns = tuple(UnknownSym(n, SymbolKind.A, i) for i, n in enumerate(names))
    return AlgSystem(R, equations_of(*gens), unknowns, tuple(params))


def test_linear_system():
    system = _system(["a0", "a1"], lambda a0, a1: [a0 + a1 - 9, a0 - 2 * a1])
    (a,) = solve_system(system)
    R = system.ring
    assert a.values["a0"] == RatFun.constant(R, 6)
    assert a.values["a1"] == RatFun.constant(R, 3)
    assert not a.unresolved
    assert all(r.is_zero() for r in assignment_residuals(system, a))


def test_inconsistent_system_has_no_branch():
    system = _system(["a0"], lambda a0: [a0 - 1, a0 - 2])
    assert solve_system(system) == []


def test_trivial_solution_is_dropped():
    system = _system(["a0", "a1"], lambda a0, a1: [a0 + a1, a0 - a1])
    assert solve_system(system) == []


def test_free_symbol_lifted_to_one():
    system = _system(["a0", "a1"], lambda a0, a1: [a0 - a1])
    (a,) = solve_system(system)
    R = system.ring
    assert a.free == ("a1",)
    assert a.values["a0"] == RatFun.constant(R, 1)
    scaled = a.with_free({"a1": 2})
    assert scaled.values["a0"] == RatFun.constant(R, 2)


def test_pivots_fix_the_gauge():
    system = _system(["a0", "a1"], lambda a0, a1: [a0 - a1])
    results = solve_system(system, pivots=("a0", "a1"), max_branches=1)
    assert len(results) == 1
    assert results[0].values["a1"] == RatFun.constant(system.ring, 1)


def test_irrational_root_reported_unresolved():
    system = _system(["a0"], lambda a0: [a0 ** 2 - 2])
    (a,) = solve_system(system)
    assert a.unresolved
    assert [render_poly(r) for r in a.relations] == ["a0^2 - 2"]
    assert UnresolvedAlgebraic.from_assignment(a).relations == ("a0^2 - 2 = 0",)


def test_factorizable_equation_splits():
    system = _system(["a0", "a1"], lambda a0, a1: [(a0 - 1) * (a0 - 2), a1 - a0])
    results = solve_system(system)
    found = sorted(int(a.values["a1"].num.LC) for a in results)
    assert found == [1, 2]
    assert all(a.values["a1"].is_polynomial() and a.values["a1"].num.is_ground for a in results)


def test_analysis_mode_solves_for_parameters():
    system = _system(["a0"], lambda a0, b: [a0 - 1, (b - 2) * a0], params=("b",))
    (a,) = solve_system(system, mode=SolveMode.ANALYSIS)
    R = system.ring
    assert a.values == {"a0": RatFun.constant(R, 1)}
    assert len(a.constraints) == 1
    name, value = a.constraints[0]
    assert name == "b" and value == RatFun.constant(R, 2)
    assert a.to_json()["constraints"] == ["b = 2"]


def test_parametric_mode_keeps_parameters_generic():
    system = _system(["a0"], lambda a0, b: [a0 - 1, (b - 2) * a0], params=("b",))
    assert solve_system(system, mode=SolveMode.PARAMETRIC) == []


def test_propagate_linear_is_strict():
    system = _system(["a0", "a1", "a2"], lambda a0, a1, a2: [a0 - 2 * a1, a1 * a2 - 1])
    reduced, partial = propagate_linear(system)
    a0, a1, a2 = system.ring.gens
    assert reduced.equations == [a1 * a2 - 1]
    assert partial.values["a0"] == RatFun.from_poly(2 * a1)
    assert partial.free == ("a1", "a2")


def test_propagate_linear_inconsistent():
    system = _system(["a0"], lambda a0: [a0 - 1, a0 - 2])
    try:
        propagate_linear(system)
    except Inconsistent:
        pass
    else:
        raise AssertionError("inconsistent system accepted")


def test_budget_validation():
    for bad in ({"max_case_splits": 0}, {"max_groebner_basis_size": -1}, {"timeout": 0}):
        try:
            SolveBudget(**bad)
        except ValueError:
            continue
        raise AssertionError(f"accepted {bad}")
    budget = SolveBudget.from_config({"budget": {"timeout": 5, "max_case_splits": 10}})
    assert budget.timeout == 5
    assert budget.max_case_splits == 10
    assert budget.max_groebner_basis_size == 400


def test_budgeted_groebner_basis():
    R, x, y = ring("x,y", QQ, grevlex)
    G = groebner_basis([x + y - 3, x - y - 1], "lex")
    assert sorted(render_poly(g.monic()) for g in G) == ["x - 2", "y - 1"]
    try:
        groebner_basis([x ** 2 - y, x * y - 1], "grevlex", SolveBudget(max_groebner_basis_size=2))
    except BudgetExhausted as e:
        assert "basis_size" in e.progress
    else:
        raise AssertionError("basis size limit was ignored")


def test_expired_deadline():
    system = _system(["a0"], lambda a0: [a0 ** 2 - 2])
    try:
        solve_system(system, deadline=time.monotonic() - 1)
    except BudgetExhausted as e:
        assert "case_splits" in e.progress
    else:
        raise AssertionError("expired deadline was ignored")


def test_analysis_solves_unknowns_before_parameters():
    system = _system(["u", "w"], lambda u, w, a, b: [a + u * w, b - u ** 2 * w ** 2], params=("a", "b"))
    a = system.ring.gens[2]
    results = solve_system(system, mode=SolveMode.ANALYSIS)
    generic = [r for r in results if [name for name, _ in r.constraints] == ["b"]]
    assert generic, [r.to_json() for r in results]
    assert generic[0].constraints[0][1] == RatFun.from_poly(a ** 2)
    assert generic[0].values["u"] == RatFun.from_poly(-a)


def test_deadline_keeps_found_branches():
    system = _system(["a0", "a1"], lambda a0, a1: [a0 - a1])
    a0, a1 = system.ring.gens
    solver = _Solver(system, SolveMode.NON_PARAMETRIC, SolveBudget(timeout=None), None, None)
    finish = solver.finish

    def finish_then_expire(br):
        found = finish(br)
        solver.meter.deadline = time.monotonic() - 1
        return found

    solver.finish = finish_then_expire
    roots = [_Branch([a0 - a1, a0 - 1]), _Branch([a0 - a1, a0, a1 - 1])]
    (found,) = solver.run(roots, None)
    assert found.values["a1"] == RatFun.constant(system.ring, 1)
    assert solver.abandoned == 1


def test_deadline_checked_while_stripping():
    system = _system(["a0", "a1"], lambda a0, a1: [])
    a0, a1 = system.ring.gens
    solver = _Solver(system, SolveMode.NON_PARAMETRIC, SolveBudget(timeout=None), time.monotonic() - 1, None)
    try:
        solver.strip(a0 ** 3 * a1, [a0])
    except BudgetExhausted:
        pass
    else:
        raise AssertionError("strip ignored an expired deadline")


def main() -> int:
    console = Console()
    tests = [(name, fn) for name, fn in globals().items() if name.startswith("test_") and callable(fn)]
    table = Table(title="Algebraic Solver")
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
