#!/usr/bin/env python3
"""
Test Verification
Exact checks of sigma, nu, first integrals and integrating factors
"""

import sys

from rich.console import Console
from rich.table import Table
from sympy import QQ

from core.arith import ratfun_normalize
from core.errors import NotDarbouxRepresentable
from core.odemodel import parse_expression, parse_ode
from core.verify import (
    SymmetryRepr, mu_log_derivative, numeric_spotcheck, parse_darboux, residual_summary,
    verify_first_integral, verify_mu, verify_nu, verify_sigma,
)

# (phi, sigma, nu) rows of the Kamke table
KAMKE_ROWS = {
    "kamke-78": ("y'' = -(y-1)*y'/x", "(y-2)/x", "-x*y'"),
    "kamke-97": ("y'' = -(-y'*x^3-2*x*y*y'+4*y^2)/x^4", "-2*y/x^3", "-x*y'+2*y"),
    "kamke-133": ("y'' = -y'*(y'-1)/(x+y)", "y'*(y'-1)/((x+y)*(1+y'))", "-1-y'"),
    "kamke-183": ("y'' = (x^2*y'^2+x^2-y^2)/(2*x^2*y)", "(x^2*y'^2+x^2-y^2)/(-2*x*y*(x*y'-y))", "y-x*y'"),
    "kamke-206": ("y'' = y'*(y'*y*a^2-x^2*y*y'-a^2*x+x*y^2)/(-a^4+a^2*x^2+a^2*y^2-x^2*y^2)",
                  "y*y'/(a^2-y^2)", "(a^2-y^2)^(1/2)"),
}

WORKED_EXAMPLE = "y'' = (y'-1)*(x^4*y'+2*x^3*y-x^2*y+y')/((x^2*y-1)*x^2)"
WORKED_SIGMA = "-x^2*(y'-1)/(x^2*y-1)"

HELMHOLTZ = "y'' = a*y' + b*y - c*y^2"
HELMHOLTZ_BRANCHES = [
    ("6/25*a^2",
     "(12*a^4-200*a^2*c*y+625*c^2*y^2-250*a*c*y')/(5*(12*a^3-50*a*c*y+125*c*y'))",
     "(72*a^4*y-600*a^2*c*y^2+1250*c^2*y^3+360*a^3*y'-1500*a*c*y*y'+1875*c*y'^2)*exp(-6/5*a*x)"),
    ("-6/25*a^2",
     "(4*a^2*y+25*c*y^2-10*a*y')/(-5*(2*a*y-5*y'))",
     "(12*a^2*y^2+50*c*y^3-60*a*y*y'+75*y'^2)*exp(-6/5*a*x)"),
]


def test_kamke_sigmas():
    for name, (phi, sigma, _) in KAMKE_ROWS.items():
        ode = parse_ode(phi)
        assert verify_sigma(parse_expression(sigma, ode.ring), ode).ok, name


def test_kamke_nus():
    for name, (phi, sigma, nu) in KAMKE_ROWS.items():
        ode = parse_ode(phi)
        assert verify_nu(parse_darboux(nu, ode.ring), parse_expression(sigma, ode.ring), ode), name


def test_wrong_sigma_rejected():
    ode = parse_ode(KAMKE_ROWS["kamke-78"][0])
    check = verify_sigma(parse_expression("y/x", ode.ring), ode)
    assert not check.ok
    assert not check.residual.is_zero()
    assert residual_summary(check) == check.residual.render()
    assert residual_summary(check, limit=3).endswith(" ...")
    assert residual_summary(verify_sigma(parse_expression("(y-2)/x", ode.ring), ode)) is None


def test_first_integrals():
    cases = [
        (WORKED_EXAMPLE, "exp(1/x)*(x^2*y-y')*(y'-1)^(-1)"),
        ("y'' = -(x*y*y'-2*x*y'^2+y*y'-y'^2-y+2*y')/(x*y-1)", "exp(-x)*(y-y')/(x*y'-1)"),
        ("y'' = -(x^2*y*y'-x^2*y'^2-x*y^3-x*y^2*y'-x*y'^2+y^3+y^2*y'+2*y*y'^2-y'^2)/(y*(x^2-y))",
         "(x*y'-y^2)*exp(x)/(x*y-y')"),
    ]
    for phi, fi in cases:
        ode = parse_ode(phi)
        assert verify_first_integral(parse_darboux(fi, ode.ring), ode), fi
    ode = parse_ode(WORKED_EXAMPLE)
    assert not verify_first_integral(parse_darboux("x*y", ode.ring), ode)


def test_helmholtz_branches():
    ode = parse_ode(HELMHOLTZ)
    for b_value, sigma, fi in HELMHOLTZ_BRANCHES:
        special = ode.specialize({"b": parse_expression(b_value, ode.ring)})
        assert special.params == ("a", "c")
        assert verify_sigma(parse_expression(sigma, special.ring), special).ok, b_value
        assert verify_first_integral(parse_darboux(fi, special.ring), special), b_value


def test_sigma_modulo_parameter_relation():
    ode = parse_ode(HELMHOLTZ)
    a, b = ode.ring.gens[3:5]
    sigma = parse_expression(HELMHOLTZ_BRANCHES[1][1], ode.ring)
    assert not verify_sigma(sigma, ode).ok
    assert verify_sigma(sigma, ode, [25 * b + 6 * a ** 2]).ok
    assert not verify_sigma(sigma, ode, [b - 1]).ok


def test_integrating_factor():
    ode = parse_ode(KAMKE_ROWS["kamke-78"][0])
    sigma = parse_expression("(y-2)/x", ode.ring)
    x = ode.ring.gens[0]
    assert mu_log_derivative(sigma, ode) == ratfun_normalize(ode.ring.one, x)
    assert verify_mu(parse_darboux("x", ode.ring), sigma, ode)
    assert not verify_mu(parse_darboux("y", ode.ring), sigma, ode)


def test_numeric_spotcheck():
    ode = parse_ode(WORKED_EXAMPLE)
    assert numeric_spotcheck(parse_expression(WORKED_SIGMA, ode.ring), ode)
    assert not numeric_spotcheck(parse_expression("1", ode.ring), ode)
    try:
        numeric_spotcheck(parse_expression("1", ode.ring), ode, trials=0)
    except ValueError:
        pass
    else:
        raise AssertionError("trials=0 accepted")


def test_parse_darboux_forms():
    ode = parse_ode(WORKED_EXAMPLE)
    R = ode.ring
    f = parse_darboux("exp(1/x)*(x^2*y-y')*(y'-1)^(-1)", R)
    assert f.R == parse_expression("1/x", R)
    assert sorted(c for _, c in f.factors) == [QQ(-1), QQ(1)]
    assert f.render() == "exp((1)/(x)) * (x^2*y - y') * (y' - 1)^(-1)"
    assert (f * f.power(-1)).render() == "1"

    g = parse_darboux("(a^2-y^2)^(1/2)", parse_ode(KAMKE_ROWS["kamke-206"][0]).ring)
    assert g.exponent_lcm() == 2

    total = parse_darboux("x + y", R)
    assert len(total.factors) == 1 and total.R.is_zero()


def test_parse_darboux_rejects():
    R = parse_ode(WORKED_EXAMPLE).ring
    for text in ("sin(x)*y", "exp(x) + y", "exp(exp(x))"):
        try:
            parse_darboux(text, R)
        except NotDarbouxRepresentable:
            continue
        raise AssertionError(f"accepted {text}")


def test_symmetry_rendering():
    R = parse_ode(WORKED_EXAMPLE).ring
    rep = SymmetryRepr(parse_expression("-1/x", R))
    assert rep.render() == "exp(-Intx((-1)/(x)))*(D[y] - ((-1)/(x))*D[y'])"
    assert "D_x[nu]" in rep.evolutionary()


def main() -> int:
    console = Console()
    tests = [(name, fn) for name, fn in globals().items() if name.startswith("test_") and callable(fn)]
    table = Table(title="Verification")
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
