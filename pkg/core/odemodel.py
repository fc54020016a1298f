"""
ODE Model
Parse rational second-order ODEs y'' = M/N, expose the Cartan field D_x and
the degree data that drives candidate sizes
"""

import re
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from typing import Dict, List, Optional, Sequence, Tuple

from sympy.polys.rings import PolyRing

from core.arith import (
    Poly, RatFun, ode_ring, poly_gcd, ratfun_normalize, render_poly,
    ring_params, xyz_degree, depends_on,
)
from core.errors import ExpressionSyntaxError, NotRational, ZeroDenominator

RESERVED = {"x", "y", "z", "exp"}
COEFFICIENT_NAME = re.compile(r"^[abc]\d+$")

TOKEN_SPEC = [
    ("YPP", r"y''"),
    ("YP", r"y'"),
    ("NUMBER", r"\d+"),
    ("IDENT", r"[A-Za-z_][A-Za-z0-9_]*"),
    ("POW", r"\*\*|\^"),
    ("OP", r"[-+*/()=]"),
    ("SKIP", r"\s+"),
    ("BAD", r"."),
]
TOKEN_RE = re.compile("|".join(f"(?P<{name}>{pattern})" for name, pattern in TOKEN_SPEC))


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    pos: int


def tokenize(text: str) -> List[Token]:
    tokens = []
    for match in TOKEN_RE.finditer(text):
        kind = match.lastgroup
        if kind == "SKIP":
            continue
        if kind == "BAD":
            raise ExpressionSyntaxError(f"unexpected character {match.group()!r}", text, match.start())
        tokens.append(Token(kind, match.group(), match.start()))
    tokens.append(Token("END", "", len(text)))
    return tokens


def collect_params(tokens: Sequence[Token], text: str = "") -> Tuple[str, ...]:
    """Identifiers other than x, y, z, y', sorted; function calls are refused"""
    found = set()
    for i, tok in enumerate(tokens):
        if tok.kind != "IDENT":
            continue
        if tokens[i + 1].text == "(":
            raise NotRational(f"function call {tok.text}(...) is not a rational expression")
        if tok.text in RESERVED:
            continue
        if COEFFICIENT_NAME.match(tok.text):
            raise ExpressionSyntaxError(
                f"parameter name {tok.text!r} clashes with candidate coefficient names", text, tok.pos)
        found.add(tok.text)
    return tuple(sorted(found))


class _Fraction:
    """Unreduced num/den pair used while parsing"""

    __slots__ = ("num", "den")

    def __init__(self, num: Poly, den: Poly):
        self.num = num
        self.den = den

    def add(self, other: "_Fraction", sign: int = 1) -> "_Fraction":
        if self.den == other.den:
            return _Fraction(self.num + sign * other.num, self.den)
        return _Fraction(self.num * other.den + sign * other.num * self.den, self.den * other.den)

    def mul(self, other: "_Fraction") -> "_Fraction":
        return _Fraction(self.num * other.num, self.den * other.den)

    def div(self, other: "_Fraction") -> "_Fraction":
        return _Fraction(self.num * other.den, self.den * other.num)


class ExpressionParser:
    """
    Recursive descent over the grammar

        expr   := term (('+' | '-') term)*
        term   := unary (('*' | '/') unary)*
        unary  := ('+' | '-') unary | power
        power  := atom (('^' | '**') exponent)?
        atom   := NUMBER | IDENT | "y'" | '(' expr ')'

    evaluated directly into polynomial fractions of the given ring
    """

    def __init__(self, text: str, R: PolyRing, tokens: Optional[List[Token]] = None):
        self.text = text
        self.ring = R
        self.tokens = tokens if tokens is not None else tokenize(text)
        self.i = 0
        self.names = {str(s): g for s, g in zip(R.symbols, R.gens)}

    def peek(self) -> Token:
        return self.tokens[self.i]

    def advance(self) -> Token:
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, text: str) -> Token:
        tok = self.advance()
        if tok.text != text:
            raise self.error(f"expected {text!r}", tok)
        return tok

    def error(self, message: str, tok: Token) -> ExpressionSyntaxError:
        shown = tok.text or "end of input"
        return ExpressionSyntaxError(f"{message}, found {shown!r}", self.text, tok.pos)

    def parse_to_end(self) -> _Fraction:
        value = self.expr()
        if self.peek().kind != "END":
            raise self.error("unexpected trailing input", self.peek())
        return value

    def expr(self) -> _Fraction:
        value = self.term()
        while self.peek().text in ("+", "-"):
            sign = 1 if self.advance().text == "+" else -1
            value = value.add(self.term(), sign)
        return value

    def term(self) -> _Fraction:
        value = self.unary()
        while self.peek().text in ("*", "/"):
            op = self.advance()
            rhs = self.unary()
            if op.text == "*":
                value = value.mul(rhs)
            else:
                if not rhs.num:
                    raise ZeroDenominator(f"division by zero at column {op.pos + 1}")
                value = value.div(rhs)
        return value

    def unary(self) -> _Fraction:
        tok = self.peek()
        if tok.text == "-":
            self.advance()
            inner = self.unary()
            return _Fraction(-inner.num, inner.den)
        if tok.text == "+":
            self.advance()
            return self.unary()
        return self.power()

    def power(self) -> _Fraction:
        base = self.atom()
        if self.peek().kind != "POW":
            return base
        self.advance()
        n = self.exponent()
        return _Fraction(base.num ** n, base.den ** n)

    def exponent(self) -> int:
        tok = self.peek()
        if tok.text == "(":
            self.advance()
            n = self.exponent()
            self.expect(")")
            return n
        if tok.text == "-":
            raise self.error("negative exponents are not allowed", tok)
        if tok.kind == "NUMBER":
            self.advance()
            return int(tok.text)
        if tok.kind in ("IDENT", "YP"):
            raise NotRational(f"symbolic exponent {tok.text!r} at column {tok.pos + 1}")
        raise self.error("expected a non-negative integer exponent", tok)

    def atom(self) -> _Fraction:
        R = self.ring
        tok = self.advance()
        if tok.kind == "NUMBER":
            return _Fraction(R.ground_new(int(tok.text)), R.one)
        if tok.kind == "YP":
            return _Fraction(self.names["z"], R.one)
        if tok.kind == "IDENT":
            if self.peek().text == "(":
                raise NotRational(f"function call {tok.text}(...) is not a rational expression")
            if tok.text not in self.names:
                raise self.error("unknown symbol", tok)
            return _Fraction(self.names[tok.text], R.one)
        if tok.text == "(":
            value = self.expr()
            self.expect(")")
            return value
        raise self.error("expected a number, symbol or '('", tok)


def parse_fraction(text: str, R: Optional[PolyRing] = None) -> Tuple[Poly, Poly]:
    """Unreduced (numerator, denominator) of an expression"""
    tokens = tokenize(text)
    if R is None:
        R = ode_ring(collect_params(tokens, text))
    else:
        collect_params(tokens, text)
    value = ExpressionParser(text, R, tokens).parse_to_end()
    if not value.den:
        raise ZeroDenominator("expression has a zero denominator")
    return value.num, value.den


def parse_expression(text: str, R: Optional[PolyRing] = None) -> RatFun:
    """Parse an expression in the ODE grammar into a normalized RatFun"""
    num, den = parse_fraction(text, R)
    return ratfun_normalize(num, den)


# ---------------------------------------------------------------------------
# The ODE
# ---------------------------------------------------------------------------

class BoundKind(Enum):
    """Relation between deg p and deg q allowed by the degree theorem"""
    BALANCED = "Balanced"
    EXCESS = "Excess"


@dataclass(frozen=True)
class DegreeReport:
    deg_M: int
    deg_N: int
    kind: BoundKind
    offset: int = 0

    def p_degree(self, q_degree: int) -> int:
        """Largest admissible deg p for a q of the given degree"""
        return q_degree + self.offset

    def full_bound(self) -> int:
        """deg p bound when q = N"""
        if self.kind is BoundKind.BALANCED:
            return self.deg_N
        return self.deg_M - 1


@dataclass(frozen=True)
class Ode2:
    """y'' = M/N over QQ[x, y, z, *params]"""
    M: Poly
    N: Poly
    params: Tuple[str, ...] = ()
    deg_M: int = field(init=False)
    deg_N: int = field(init=False)

    def __post_init__(self):
        if not self.N:
            raise ZeroDenominator("ODE with zero denominator")
        object.__setattr__(self, "deg_M", xyz_degree(self.M))
        object.__setattr__(self, "deg_N", xyz_degree(self.N))

    @property
    def ring(self) -> PolyRing:
        return self.N.ring

    @cached_property
    def phi(self) -> RatFun:
        return ratfun_normalize(self.M, self.N)

    @cached_property
    def phi_y(self) -> RatFun:
        return self.phi.diff("y")

    @cached_property
    def phi_z(self) -> RatFun:
        return self.phi.diff("z")

    def render(self) -> str:
        if self.N == self.ring.one:
            return f"y'' = {render_poly(self.M)}"
        return f"y'' = ({render_poly(self.M)})/({render_poly(self.N)})"

    def to_json(self) -> Dict:
        return {"M": render_poly(self.M), "N": render_poly(self.N), "params": list(self.params)}

    @classmethod
    def from_json(cls, data: Dict) -> "Ode2":
        R = ode_ring(tuple(data.get("params", [])))
        M = parse_expression(data["M"], R)
        N = parse_expression(data["N"], R)
        if not M.is_polynomial() or not N.is_polynomial():
            raise NotRational("M and N must be polynomials")
        return make_ode(M.num, N.num)

    def specialize(self, values: Dict[str, RatFun]) -> "Ode2":
        """Substitute parameter values and drop those parameters from the ring"""
        phi = self.phi
        for name, value in values.items():
            phi = phi.substitute(name, value)
        keep = tuple(p for p in self.params if p not in values)
        R = ode_ring(keep)
        return make_ode(phi.num.set_ring(R), phi.den.set_ring(R))

    def trivial_symmetry_hint(self) -> Optional[str]:
        """Name the obvious point symmetry when phi misses x or y"""
        if not (depends_on(self.M, "x") or depends_on(self.N, "x")):
            return "phi does not depend on x: d/dx is a symmetry"
        if not (depends_on(self.M, "y") or depends_on(self.N, "y")):
            return "phi does not depend on y: d/dy is a symmetry"
        return None


def _involves_params(p: Poly) -> bool:
    return any(any(m[3:]) for m in p.itermonoms())


def make_ode(num: Poly, den: Poly) -> Ode2:
    """
    Build a normalized Ode2 from a fraction

    Without parameters M and N are made coprime. With parameters only the
    parameter-free factors of gcd(M, N) are cancelled, so that no
    parameter degeneracy is divided away.
    """
    if not den:
        raise ZeroDenominator("ODE with zero denominator")
    R = den.ring
    params = ring_params(R)
    g = poly_gcd(num, den) if num else den.monic()
    if params and g != R.one:
        _, factors = g.factor_list()
        kept = R.one
        for f, k in factors:
            if not _involves_params(f):
                kept *= f ** k
        g = kept
    if g != R.one:
        num = num.exquo(g)
        den = den.exquo(g)
    lc = den.LC
    if lc != 1:
        num = num.quo_ground(lc)
        den = den.quo_ground(lc)
    return Ode2(M=num, N=den, params=params)


def parse_ode(text: str) -> Ode2:
    """
    Parse "y'' = <expr>" (the left-hand side may be omitted)

    Raises ExpressionSyntaxError, NotRational or ZeroDenominator.
    """
    tokens = tokenize(text)
    if tokens[0].kind == "YPP":
        if tokens[1].text != "=":
            raise ExpressionSyntaxError("expected '=' after y''", text, tokens[1].pos)
        tokens = tokens[2:]
    for tok in tokens:
        if tok.kind == "YPP" or tok.text == "=":
            raise ExpressionSyntaxError(f"unexpected {tok.text!r}", text, tok.pos)
    params = collect_params(tokens, text)
    R = ode_ring(params)
    value = ExpressionParser(text, R, tokens).parse_to_end()
    if not value.den:
        raise ZeroDenominator("right-hand side has a zero denominator")
    return make_ode(value.num, value.den)


def apply_Dx(f: RatFun, ode: Ode2) -> RatFun:
    """D_x f = f_x + y' f_y + (M/N) f_y'"""
    z = RatFun.from_poly(ode.ring.gens[2])
    return f.diff("x") + z * f.diff("y") + ode.phi * f.diff("z")


def degree_report(ode: Ode2) -> DegreeReport:
    if ode.deg_M <= ode.deg_N + 1:
        return DegreeReport(ode.deg_M, ode.deg_N, BoundKind.BALANCED, 0)
    return DegreeReport(ode.deg_M, ode.deg_N, BoundKind.EXCESS, ode.deg_M - ode.deg_N - 1)
