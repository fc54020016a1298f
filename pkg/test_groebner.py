#!/usr/bin/env python3
"""
Test Groebner Bases
Buchberger's algorithm checked against sympy's own implementation
"""

import sys
import time

import numpy as np
from rich.console import Console
from rich.table import Table
from sympy import QQ
from sympy.polys.groebnertools import groebner as reference_groebner
from sympy.polys.orderings import grevlex
from sympy.polys.rings import ring

from core.arith import render_poly
from core.errors import BudgetExhausted
from core.groebner import buchberger, groebner_basis, is_unit_ideal, normal_form


def _rendered(basis):
    return {render_poly(g.monic()) for g in basis}


def _random_system(rng, R):
    polys = []
    for _ in range(int(rng.integers(2, 4))):
        f = R.zero
        for _ in range(int(rng.integers(1, 4))):
            exps = tuple(int(e) for e in rng.integers(0, 3, size=R.ngens))
            if sum(exps) > 2:
                exps = tuple(min(e, 1) for e in exps)
            f += int(rng.integers(-3, 4)) * R.from_dict({exps: QQ(1)})
        if f:
            polys.append(f)
    return polys


def test_matches_reference_on_random_systems():
    R, *_ = ring("u,v,w", QQ, grevlex)
    rng = np.random.default_rng(2024)
    checked = 0
    for _ in range(50):
        F = _random_system(rng, R)
        if not F:
            continue
        assert _rendered(buchberger(F)) == _rendered(reference_groebner(F, R)), [str(f) for f in F]
        checked += 1
    assert checked >= 40


def test_unit_ideal():
    R, x, y = ring("x,y", QQ, grevlex)
    G = buchberger([x - 1, x - 2])
    assert G == [R.one]
    assert is_unit_ideal(G)
    assert is_unit_ideal(buchberger([x * y - 1, x, y + 3]))
    assert not is_unit_ideal(buchberger([x * y - 1]))
    assert buchberger([]) == []
    assert buchberger([R.zero]) == []


def test_lex_basis_triangularizes():
    R, x, y = ring("x,y", QQ, grevlex)
    G = groebner_basis([x + y - 3, x - y - 1], "lex")
    assert _rendered(G) == {"x - 2", "y - 1"}


def test_normal_form():
    R, x, y = ring("x,y", QQ, grevlex)
    G = buchberger([x ** 2 - y])
    assert normal_form(x ** 3, G) == x * y
    assert not normal_form((x ** 2 - y) * (x + y), G)
    assert normal_form(x, []) == x


def test_deadline_raises_budget_exhausted():
    R, x, y = ring("x,y", QQ, grevlex)
    try:
        buchberger([x ** 2 - y, x * y - 1], deadline=time.monotonic() - 1)
    except BudgetExhausted as e:
        assert "basis_size" in e.progress
    else:
        raise AssertionError("expired deadline was ignored")


def main() -> int:
    console = Console()
    tests = [(name, fn) for name, fn in globals().items() if name.startswith("test_") and callable(fn)]
    table = Table(title="Groebner Bases")
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
