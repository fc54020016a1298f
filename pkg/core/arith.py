"""
Exact Polynomial Algebra
Sparse multivariate polynomials and rational functions over the ODE variables

Polynomials are sympy ``PolyElement`` values living in QQ[x, y, z, *params]
under graded reverse lexicographic order with x > y > z. The symbol z stands
for y' everywhere. ODE parameters, when present, are extra generators placed
after z; every degree notion used by the search (deg_M, deg_N, candidate
degrees, supports) only counts the x, y, z exponents.
"""

from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from typing import Optional, Sequence, Set, Tuple, Union

from sympy import QQ, ZZ
from sympy.polys.orderings import grevlex
from sympy.polys.rings import PolyElement, PolyRing, ring

from core.errors import ZeroDenominator

Poly = PolyElement
Rat = type(QQ(1))
Mono = Tuple[int, int, int]

ODE_VARS = ("x", "y", "z")
VAR_INDEX = {"x": 0, "y": 1, "z": 2, "y'": 2}


class PolyOp(Enum):
    """Ring operations exposed through poly_arith"""
    ADD = "add"
    SUB = "sub"
    MUL = "mul"


def rat(numerator: int, denominator: int = 1) -> Rat:
    """Exact rational constant in lowest terms with positive denominator"""
    if denominator == 0:
        raise ZeroDenominator("rational constant with zero denominator")
    return QQ(numerator, denominator)


def ode_ring(params: Sequence[str] = ()) -> PolyRing:
    """QQ[x, y, z, *params] with the global grevlex order"""
    return _ode_ring(tuple(params))


@lru_cache(maxsize=None)
def _ode_ring(params: Tuple[str, ...]) -> PolyRing:
    R, *_ = ring(list(ODE_VARS) + list(params), QQ, grevlex)
    return R


def ring_params(R: PolyRing) -> Tuple[str, ...]:
    """Names of the generators after x, y, z"""
    return tuple(str(s) for s in R.symbols[3:])


def gen_index(R: PolyRing, name: str) -> int:
    """Position of the generator printed as name (PolyRing.index only matches Symbols)"""
    for i, s in enumerate(R.symbols):
        if str(s) == name:
            return i
    raise ValueError(f"no generator named {name}")


def var_index(v: Union[str, int]) -> int:
    if isinstance(v, int):
        return v
    try:
        return VAR_INDEX[v]
    except KeyError:
        raise ValueError(f"unknown ODE variable: {v}")


# ---------------------------------------------------------------------------
# Polynomial operations
# ---------------------------------------------------------------------------

def poly_arith(a: Poly, b: Poly, op: PolyOp) -> Poly:
    """Exact sum, difference or product of two polynomials of one ring"""
    if a.ring != b.ring:
        raise ValueError("operands live in different rings")
    if op is PolyOp.ADD:
        return a + b
    if op is PolyOp.SUB:
        return a - b
    if op is PolyOp.MUL:
        return a * b
    raise ValueError(f"unsupported operation: {op}")


def poly_partial(p: Poly, v: Union[str, int]) -> Poly:
    """Formal partial derivative with respect to x, y or z (y')"""
    return p.diff(p.ring.gens[var_index(v)])


def poly_gcd(a: Poly, b: Poly) -> Poly:
    """
    Monic greatest common divisor over QQ

    Denominators are cleared and the gcd is taken over ZZ with the recursive
    content / primitive-part subresultant PRS, then moved back and made monic.
    gcd(a, 0) is the monic associate of a; gcd(0, 0) is 0.
    """
    R = a.ring
    if not a and not b:
        return R.zero
    if not b:
        return a.monic()
    if not a:
        return b.monic()
    if a.is_ground or b.is_ground:
        return R.one

    Rz = R.clone(domain=ZZ)
    _, a_int = a.clear_denoms()
    _, b_int = b.clear_denoms()
    h, _, _ = Rz.dmp_rr_prs_gcd(a_int.set_ring(Rz), b_int.set_ring(Rz))
    return h.set_ring(R).monic()


def poly_divides(a: Poly, b: Poly) -> Tuple[bool, Optional[Poly]]:
    """True and b / a when a divides b exactly, else (False, None)"""
    if not a:
        raise ZeroDenominator("divisibility test by the zero polynomial")
    if not b:
        return True, a.ring.zero
    q, r = b.div(a)
    if r:
        return False, None
    return True, q


def xyz_monomial(m: Tuple[int, ...]) -> Mono:
    return (m[0], m[1], m[2])


def xyz_degree(p: Poly) -> int:
    """Total degree in x, y, z only; -1 for the zero polynomial"""
    if not p:
        return -1
    return max(m[0] + m[1] + m[2] for m in p.itermonoms())


def xyz_support(p: Poly) -> Set[Mono]:
    """Monomials of (x, y, z) carrying a nonzero coefficient"""
    return {xyz_monomial(m) for m in p.itermonoms()}


def depends_on(p: Poly, v: Union[str, int]) -> bool:
    i = var_index(v)
    return any(m[i] for m in p.itermonoms())


def is_param_only(p: Poly) -> bool:
    """True when p involves none of x, y, z"""
    return all(m[0] == 0 and m[1] == 0 and m[2] == 0 for m in p.itermonoms())


def monomial(R: PolyRing, exps: Mono) -> Poly:
    padded = tuple(exps) + (0,) * (R.ngens - len(exps))
    return R.from_dict({padded: QQ(1)})


def monomials_up_to(degree: int, variables: Sequence[str] = ODE_VARS) -> list:
    """
    Every (x, y, z) exponent triple of total degree <= degree in the given
    variables, ascending by degree and descending in grevlex within a degree
    """
    idx = [var_index(v) for v in variables]
    result = []
    for d in range(degree + 1):
        layer = []
        for combo in _compositions(d, len(idx)):
            exps = [0, 0, 0]
            for i, e in zip(idx, combo):
                exps[i] = e
            layer.append(tuple(exps))
        layer.sort(key=lambda m: (m[0] + m[1] + m[2], tuple(-e for e in reversed(m))), reverse=True)
        result.extend(layer)
    return result


def _compositions(total: int, parts: int):
    if parts == 0:
        if total == 0:
            yield ()
        return
    if parts == 1:
        yield (total,)
        return
    for first in range(total, -1, -1):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


def lift(p: Poly, R: PolyRing) -> Poly:
    """Move p into a ring with (a superset of) its generators"""
    return p.set_ring(R)


# ---------------------------------------------------------------------------
# Rendering
# ---------------------------------------------------------------------------

def _symbol_name(name: str) -> str:
    return "y'" if name == "z" else name


def render_rat(c: Rat) -> str:
    if c.denominator == 1:
        return str(c.numerator)
    return f"{c.numerator}/{c.denominator}"


def render_poly(p: Poly) -> str:
    """Text in the expression grammar, terms in the global monomial order"""
    if not p:
        return "0"
    names = [_symbol_name(str(s)) for s in p.ring.symbols]
    pieces = []
    for exps, coeff in p.terms():
        factors = []
        for name, e in zip(names, exps):
            if e == 1:
                factors.append(name)
            elif e > 1:
                factors.append(f"{name}^{e}")
        negative = coeff < 0
        mag = -coeff if negative else coeff
        if not factors:
            body = render_rat(mag)
        elif mag == 1:
            body = "*".join(factors)
        else:
            body = render_rat(mag) + "*" + "*".join(factors)
        if not pieces:
            pieces.append(("-" if negative else "") + body)
        else:
            pieces.append((" - " if negative else " + ") + body)
    return "".join(pieces)


# ---------------------------------------------------------------------------
# Rational functions
# ---------------------------------------------------------------------------

Operand = Union["RatFun", Poly, int, Rat]


@dataclass(frozen=True)
class RatFun:
    """
    Coprime ratio num / den with a monic denominator

    Always build through ratfun_normalize (or the helpers below) so that
    equal rational functions have identical fields.
    """
    num: Poly
    den: Poly

    @property
    def ring(self) -> PolyRing:
        return self.num.ring

    @classmethod
    def from_poly(cls, p: Poly) -> "RatFun":
        return cls(p, p.ring.one)

    @classmethod
    def constant(cls, R: PolyRing, c) -> "RatFun":
        return cls(R.ground_new(QQ.convert(c)), R.one)

    def is_zero(self) -> bool:
        return not self.num

    def is_polynomial(self) -> bool:
        return self.den == self.ring.one

    def _coerce(self, other: Operand) -> "RatFun":
        if isinstance(other, RatFun):
            if other.ring != self.ring:
                raise ValueError("rational functions live in different rings")
            return other
        if isinstance(other, PolyElement):
            if other.ring != self.ring:
                raise ValueError("polynomial lives in a different ring")
            return RatFun.from_poly(other)
        return RatFun.constant(self.ring, other)

    def __add__(self, other: Operand) -> "RatFun":
        o = self._coerce(other)
        if self.den == o.den:
            return ratfun_normalize(self.num + o.num, self.den)
        return ratfun_normalize(self.num * o.den + o.num * self.den, self.den * o.den)

    __radd__ = __add__

    def __neg__(self) -> "RatFun":
        return RatFun(-self.num, self.den)

    def __sub__(self, other: Operand) -> "RatFun":
        return self + (-self._coerce(other))

    def __rsub__(self, other: Operand) -> "RatFun":
        return self._coerce(other) - self

    def __mul__(self, other: Operand) -> "RatFun":
        o = self._coerce(other)
        if self.is_zero() or o.is_zero():
            return RatFun.from_poly(self.ring.zero)
        return ratfun_normalize(self.num * o.num, self.den * o.den)

    __rmul__ = __mul__

    def __truediv__(self, other: Operand) -> "RatFun":
        o = self._coerce(other)
        if o.is_zero():
            raise ZeroDenominator("division by the zero rational function")
        return ratfun_normalize(self.num * o.den, self.den * o.num)

    def __rtruediv__(self, other: Operand) -> "RatFun":
        return self._coerce(other) / self

    def __pow__(self, n: int) -> "RatFun":
        if n >= 0:
            return RatFun(self.num ** n, self.den ** n) if n else RatFun.constant(self.ring, 1)
        if self.is_zero():
            raise ZeroDenominator("negative power of zero")
        return ratfun_normalize(self.den ** (-n), self.num ** (-n))

    def diff(self, v: Union[str, int]) -> "RatFun":
        """Quotient-rule partial derivative"""
        gen = self.ring.gens[var_index(v)]
        dn = self.num.diff(gen)
        if self.is_polynomial():
            return RatFun.from_poly(dn)
        dd = self.den.diff(gen)
        return ratfun_normalize(dn * self.den - self.num * dd, self.den ** 2)

    def evaluate(self, point: Sequence[Rat]) -> Rat:
        """Exact value at a full point (x, y, z, *params)"""
        d = self.den(*point)
        if not d:
            raise ZeroDenominator("denominator vanishes at the evaluation point")
        return QQ.convert(self.num(*point)) / QQ.convert(d)

    def substitute(self, name: str, value: "RatFun") -> "RatFun":
        """Replace one generator by a rational function of the same ring"""
        return substitute_poly(self.num, name, value) / substitute_poly(self.den, name, value)

    def lift(self, R: PolyRing) -> "RatFun":
        return ratfun_normalize(self.num.set_ring(R), self.den.set_ring(R))

    def render(self) -> str:
        if self.is_polynomial():
            return render_poly(self.num)
        return f"({render_poly(self.num)})/({render_poly(self.den)})"

    def __str__(self):
        return self.render()


def ratfun_normalize(num: Poly, den: Poly) -> RatFun:
    """Cancel the gcd and scale so the denominator is monic"""
    if not den:
        raise ZeroDenominator("rational function with zero denominator")
    R = den.ring
    if not num:
        return RatFun(R.zero, R.one)
    g = poly_gcd(num, den)
    if g != R.one:
        num = num.exquo(g)
        den = den.exquo(g)
    lc = den.LC
    if lc != 1:
        num = num.quo_ground(lc)
        den = den.quo_ground(lc)
    return RatFun(num, den)


def substitute_poly(p: Poly, name: str, value: RatFun) -> RatFun:
    """Horner evaluation of p in one generator at a rational function"""
    R = p.ring
    gen = R.gens[gen_index(R, name)]
    degree = p.degree(gen)
    if degree <= 0:
        return RatFun.from_poly(p)
    result = RatFun.from_poly(R.zero)
    for k in range(degree, -1, -1):
        result = result * value + RatFun.from_poly(p.coeff_wrt(gen, k))
    return result


def same_function(f: RatFun, g: RatFun) -> bool:
    """Cross-multiplication equality, independent of normalization"""
    return f.num * g.den == g.num * f.den
