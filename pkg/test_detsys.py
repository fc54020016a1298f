#!/usr/bin/env python3
"""
Test Determining Systems
Candidate polynomials, the cleared determining identity and its coefficient equations
"""

import sys

import numpy as np
from rich.console import Console
from rich.table import Table

from core.arith import monomial, xyz_degree
from core.detsys import (
    GenPoly, SymbolKind, SymbolTable, build_determining_identity, extract_system,
    generic_poly, linear_system, seeded_poly, unknown_rings,
)
from core.odemodel import parse_ode

WORKED_EXAMPLE = "y'' = (y'-1)*(x^4*y'+2*x^3*y-x^2*y+y')/((x^2*y-1)*x^2)"
SMALL_ODE = "y'' = (y'^2 + x*y)/(x*y' + 1)"
KAMKE_78 = "y'' = -(y-1)*y'/x"


def test_symbol_names():
    table = SymbolTable()
    names = [table.fresh(k).name for k in (SymbolKind.A, SymbolKind.A, SymbolKind.B, SymbolKind.C)]
    assert names == ["a0", "a1", "b0", "c0"]
    assert table.symbols[1].index == 1


def test_generic_poly_shapes():
    R0 = parse_ode(SMALL_ODE).ring
    x, y, z = R0.gens
    table = SymbolTable()
    assert len(generic_poly(R0, table, SymbolKind.A, 2).terms) == 10
    assert len(generic_poly(R0, table, SymbolKind.B, 1, variables=("x", "y")).terms) == 3
    g = generic_poly(R0, SymbolTable(), SymbolKind.B, 1, factor=x * z + 1)
    assert g.degree() == 3
    assert all(b.rem(x * z + 1) == 0 for _, b in g.terms)
    assert g.is_homogeneous() and not g.is_fixed()
    assert GenPoly.of(x).is_fixed()


def test_seeded_poly_deduplicates():
    R0 = parse_ode(SMALL_ODE).ring
    p = seeded_poly(R0, SymbolTable(), SymbolKind.A, [(1, 0, 0), (0, 0, 1), (1, 0, 0)])
    assert len(p.terms) == 2
    assert [s.name for s in p.symbols()] == ["a0", "a1"]


def test_identity_vanishes_for_a_symmetry():
    # p = p0 + a0 with p0/q a known symmetry: nothing survives at a0 = 0
    ode = parse_ode(WORKED_EXAMPLE)
    x, y, z = ode.ring.gens
    q = GenPoly.of(x ** 2 * y - 1)

    def shifted(p0):
        table = SymbolTable()
        return GenPoly(p0, [(table.fresh(SymbolKind.A), ode.ring.one)])

    system = extract_system(build_determining_identity(ode, shifted(-x ** 2 * z + x ** 2), q))
    assert system.equations
    assert all(m[0] > 0 for eq in system.equations for m in eq.itermonoms())
    system = extract_system(build_determining_identity(ode, shifted(ode.ring.one), q))
    assert any(m[0] == 0 for eq in system.equations for m in eq.itermonoms())


def test_generic_identity_at_a_known_symmetry():
    ode = parse_ode(KAMKE_78)
    table = SymbolTable()
    p = seeded_poly(ode.ring, table, SymbolKind.A, [(0, 1, 0), (0, 0, 0)])
    q = seeded_poly(ode.ring, table, SymbolKind.B, [(1, 0, 0)])
    system = extract_system(build_determining_identity(ode, p, q))
    assert [str(s) for s in system.ring.symbols] == ["a0", "a1", "b0"]
    # sigma = (y - 2)/x
    assert all(eq(1, -2, 1) == 0 for eq in system.equations)
    assert any(eq(1, -1, 1) != 0 for eq in system.equations)


def test_common_factor_scales_identity():
    ode = parse_ode(SMALL_ODE)
    R0 = ode.ring
    rng = np.random.default_rng(11)
    table = SymbolTable()
    p = generic_poly(R0, table, SymbolKind.A, 1)
    q = generic_poly(R0, table, SymbolKind.B, 1)
    base = build_determining_identity(ode, p, q)
    R1 = base.poly.ring
    for _ in range(100):
        g = R0.zero
        for _ in range(3):
            exps = tuple(int(e) for e in rng.integers(0, 2, size=3))
            g += int(rng.integers(1, 5)) * monomial(R0, exps)
        scaled = build_determining_identity(ode, p.times(g), q.times(g))
        assert scaled.poly.ring == R1
        assert scaled.poly == base.poly * g.set_ring(R1) ** 2


def test_system_is_quadratic_and_homogeneous():
    ode = parse_ode(SMALL_ODE)
    table = SymbolTable()
    p = generic_poly(ode.ring, table, SymbolKind.A, 1)
    q = generic_poly(ode.ring, table, SymbolKind.B, 1)
    system = extract_system(build_determining_identity(ode, p, q))
    assert system.size[1] == 8
    assert system.size[0] > 0
    for eq in system.equations:
        assert all(sum(m) == 2 for m in eq.itermonoms()), str(eq)


def test_linear_system_coefficients():
    table = SymbolTable()
    a0, a1 = table.fresh(SymbolKind.A), table.fresh(SymbolKind.A)
    R1, Ru = unknown_rings(("a0", "a1"), ())
    x, y, z, u0, u1 = R1.gens
    system = linear_system((u0 - 1) * x + (u0 + u1) * y, (a0, a1), ())
    v0, v1 = Ru.gens
    assert system.ring == Ru
    assert set(system.equations) == {v0 - 1, v0 + v1}
    assert system.kind_of("a1") is SymbolKind.A
    assert system.kind_of("k") is SymbolKind.PARAM
    assert system.dump().startswith("# 2 equations in 2 unknowns")


def test_parameters_follow_unknowns():
    ode = parse_ode("y'' = a*y' + b*y - c*y^2")
    table = SymbolTable()
    p = generic_poly(ode.ring, table, SymbolKind.A, 2)
    q = generic_poly(ode.ring, table, SymbolKind.B, 1)
    identity = build_determining_identity(ode, p, q)
    names = [str(s) for s in identity.ring_u.symbols]
    assert names[-3:] == ["a", "b", "c"]
    assert names[:2] == ["a0", "a1"]
    assert xyz_degree(identity.poly) >= 0


def main() -> int:
    console = Console()
    tests = [(name, fn) for name, fn in globals().items() if name.startswith("test_") and callable(fn)]
    table = Table(title="Determining Systems")
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
