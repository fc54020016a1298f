"""
Verification
Exact checks of sigma against its determining PDE, of symmetry coefficients
and first integrals in Darboux form, and of the integrating-factor relation

Everything here is recomputed from the ODE with RatFun arithmetic; nothing
is taken from the determining system that produced a candidate.
"""

from dataclasses import dataclass
from math import lcm
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np
from sympy import QQ
from sympy.polys.rings import PolyRing

from core.arith import Poly, Rat, RatFun, render_poly, render_rat
from core.errors import (
    ExpressionSyntaxError, NotDarbouxRepresentable, NotRational, ZeroDenominator,
)
from core.odemodel import Ode2, Token, apply_Dx, parse_expression, tokenize
from core import groebner as gb

SPOTCHECK_REDRAWS = 50


# ---------------------------------------------------------------------------
# Darboux functions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DarbouxFunction:
    """F = exp(R) * prod f_i^c_i with rational R, polynomial f_i and rational c_i"""
    R: RatFun
    factors: Tuple[Tuple[Poly, Rat], ...] = ()

    @property
    def ring(self) -> PolyRing:
        return self.R.ring

    @classmethod
    def build(cls, R: RatFun, factors: Iterable[Tuple[Poly, Rat]]) -> "DarbouxFunction":
        """Merge equal bases, drop constants and zero exponents"""
        merged: List[Tuple[Poly, Rat]] = []
        for f, c in factors:
            if not f:
                raise ZeroDenominator("zero base in a Darboux product")
            if f.is_ground or c == 0:
                continue
            f = f.monic()
            for k, (g, e) in enumerate(merged):
                if g == f:
                    merged[k] = (g, e + c)
                    break
            else:
                merged.append((f, QQ.convert(c)))
        return cls(R, tuple((f, c) for f, c in merged if c != 0))

    def exponent_lcm(self) -> int:
        """Smallest k with every k*c_i an integer"""
        k = 1
        for _, c in self.factors:
            k = lcm(k, int(c.denominator))
        return k

    def __mul__(self, other: "DarbouxFunction") -> "DarbouxFunction":
        return DarbouxFunction.build(self.R + other.R, self.factors + other.factors)

    def power(self, k: Rat) -> "DarbouxFunction":
        k = QQ.convert(k)
        return DarbouxFunction.build(self.R * k, [(f, c * k) for f, c in self.factors])

    def log_derivative(self, ode: Ode2) -> RatFun:
        """D_x F / F = D_x R + sum c_i D_x f_i / f_i"""
        total = apply_Dx(self.R, ode)
        for f, c in self.factors:
            base = RatFun.from_poly(f)
            total = total + apply_Dx(base, ode) / base * c
        return total

    def scaled_log_derivative(self, ode: Ode2) -> Tuple[int, RatFun]:
        """(k, D_x(F^k)/F^k) for the exponent lcm k, so every power is an integer"""
        k = self.exponent_lcm()
        return k, self.power(k).log_derivative(ode)

    def render(self) -> str:
        pieces = []
        if not self.R.is_zero():
            pieces.append(f"exp({self.R.render()})")
        for f, c in self.factors:
            base = f"({render_poly(f)})"
            pieces.append(base if c == 1 else f"{base}^({render_rat(c)})")
        return " * ".join(pieces) or "1"

    def __str__(self):
        return self.render()


def _segments(tokens: Sequence[Token]) -> List[Tuple[int, List[Token]]]:
    """Split at top-level '*' and '/' into (sign, tokens) pieces"""
    out, current, sign, depth = [], [], 1, 0
    for tok in tokens:
        if tok.kind == "END":
            break
        if tok.text == "(":
            depth += 1
        elif tok.text == ")":
            depth -= 1
        if depth == 0 and tok.kind == "OP" and tok.text in ("*", "/"):
            out.append((sign, current))
            current, sign = [], (1 if tok.text == "*" else -1)
            continue
        current.append(tok)
    out.append((sign, current))
    return out


def _has_top_level_sum(tokens: Sequence[Token]) -> bool:
    depth, prev = 0, None
    for tok in tokens:
        if tok.text == "(":
            depth += 1
        elif tok.text == ")":
            depth -= 1
        elif depth == 0 and tok.text in ("+", "-") and prev is not None:
            if not (prev.kind == "POW" or prev.text in ("*", "/", "(")):
                return True
        prev = tok
    return False


def _matching_paren(tokens: Sequence[Token], start: int) -> int:
    depth = 0
    for k in range(start, len(tokens)):
        if tokens[k].text == "(":
            depth += 1
        elif tokens[k].text == ")":
            depth -= 1
            if depth == 0:
                return k
    raise ExpressionSyntaxError("unbalanced parenthesis", "", tokens[start].pos)


def _rational_exponent(tokens: Sequence[Token], text: str) -> Rat:
    """Parse ( -? NUMBER (/ NUMBER)? ) with optional parentheses"""
    toks = list(tokens)
    if toks and toks[0].text == "(":
        if toks[-1].text != ")":
            raise ExpressionSyntaxError("unbalanced exponent", text, toks[0].pos)
        toks = toks[1:-1]
    sign = 1
    if toks and toks[0].text in ("-", "+"):
        sign = -1 if toks[0].text == "-" else 1
        toks = toks[1:]
    if len(toks) == 1 and toks[0].kind == "NUMBER":
        return QQ(sign * int(toks[0].text))
    if len(toks) == 3 and toks[0].kind == "NUMBER" and toks[1].text == "/" and toks[2].kind == "NUMBER":
        if int(toks[2].text) == 0:
            raise ZeroDenominator("exponent with zero denominator")
        return QQ(sign * int(toks[0].text), int(toks[2].text))
    pos = tokens[0].pos if tokens else len(text)
    raise NotDarbouxRepresentable(f"exponent at column {pos + 1} is not a rational constant")


def _piece(text: str, R: PolyRing) -> RatFun:
    try:
        return parse_expression(text, R)
    except NotRational as exc:
        raise NotDarbouxRepresentable(str(exc)) from exc


def parse_darboux(text: str, R: PolyRing) -> DarbouxFunction:
    """
    Read `exp(R) * f1^c1 * ... * fk^ck` (factors in any order, '/' allowed)

    Bases are expressions of the ODE grammar; a rational base contributes its
    numerator to the power c and its denominator to the power -c. Additive
    combinations of transcendental terms raise NotDarbouxRepresentable.
    """
    tokens = tokenize(text)
    for i, tok in enumerate(tokens):
        if tok.kind == "IDENT" and tokens[i + 1].text == "(" and tok.text != "exp":
            raise NotDarbouxRepresentable(f"{tok.text}(...) has no Darboux form")
    body = tokens[:-1]
    if not body:
        raise ExpressionSyntaxError("empty expression", text, 0)

    if _has_top_level_sum(body):
        if any(t.text == "exp" for t in body):
            raise NotDarbouxRepresentable("sums involving exp(...) have no Darboux form")
        g = _piece(text, R)
        return DarbouxFunction.build(RatFun.from_poly(R.zero), [(g.num, QQ(1)), (g.den, QQ(-1))])

    exponent = RatFun.from_poly(R.zero)
    factors: List[Tuple[Poly, Rat]] = []
    for sign, seg in _segments(tokens):
        while seg and seg[0].text in ("-", "+"):
            seg = seg[1:]
        if not seg:
            raise ExpressionSyntaxError("missing factor", text, len(text))

        power_at = None
        depth = 0
        for k, tok in enumerate(seg):
            if tok.text == "(":
                depth += 1
            elif tok.text == ")":
                depth -= 1
            elif depth == 0 and tok.kind == "POW":
                power_at = k
                break
        c = QQ(sign)
        base = seg
        if power_at is not None:
            c = c * _rational_exponent(seg[power_at + 1:], text)
            base = seg[:power_at]
        if not base:
            raise ExpressionSyntaxError("missing base", text, seg[0].pos)

        if base[0].kind == "IDENT" and base[0].text == "exp":
            if len(base) < 3 or base[1].text != "(" or _matching_paren(base, 1) != len(base) - 1:
                raise NotDarbouxRepresentable("exp(...) must stand alone as a factor")
            arg = text[base[2].pos:base[-1].pos]
            exponent = exponent + _piece(arg, R) * c
            continue
        if any(t.text == "exp" for t in base):
            raise NotDarbouxRepresentable("nested exp(...) has no Darboux form")
        base_text = text[base[0].pos:base[-1].pos + len(base[-1].text)]
        g = _piece(base_text, R)
        if g.is_zero():
            raise ZeroDenominator("zero factor in a Darboux product")
        factors.append((g.num, c))
        factors.append((g.den, -c))
    return DarbouxFunction.build(exponent, factors)


# ---------------------------------------------------------------------------
# Checks
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SigmaCheck:
    ok: bool
    residual: RatFun

    def __bool__(self):
        return self.ok


def sigma_residual(sigma: RatFun, ode: Ode2) -> RatFun:
    """D_x sigma - sigma^2 - phi_z sigma + phi_y"""
    return apply_Dx(sigma, ode) - sigma * sigma - ode.phi_z * sigma + ode.phi_y


def verify_sigma(sigma: RatFun, ode: Ode2, relations: Sequence[Poly] = ()) -> SigmaCheck:
    """
    Exact check of the determining PDE

    With relations (parameter-only polynomials of the ODE ring) the residual
    numerator only has to vanish modulo their ideal.
    """
    residual = sigma_residual(sigma, ode)
    if residual.is_zero():
        return SigmaCheck(True, residual)
    if relations:
        G = gb.buchberger([r.set_ring(ode.ring) for r in relations])
        if not gb.is_unit_ideal(G) and not gb.normal_form(residual.num, G):
            return SigmaCheck(True, residual)
    return SigmaCheck(False, residual)


def verify_nu(nu: DarbouxFunction, sigma: RatFun, ode: Ode2) -> bool:
    """sigma = -D_x nu / nu"""
    k, lhs = nu.scaled_log_derivative(ode)
    return (lhs + sigma * k).is_zero()


def verify_first_integral(first_integral: DarbouxFunction, ode: Ode2) -> bool:
    _, lhs = first_integral.scaled_log_derivative(ode)
    return lhs.is_zero()


def mu_log_derivative(sigma: RatFun, ode: Ode2) -> RatFun:
    """D_x mu / mu = -sigma - phi_z for an integrating factor paired with sigma"""
    return -sigma - ode.phi_z


def verify_mu(mu: DarbouxFunction, sigma: RatFun, ode: Ode2) -> bool:
    k, lhs = mu.scaled_log_derivative(ode)
    return (lhs - mu_log_derivative(sigma, ode) * k).is_zero()


def _draw(rng: np.random.Generator, bound: int) -> Rat:
    num = int(rng.integers(-bound, bound + 1))
    den = int(rng.integers(1, bound + 1))
    return QQ(num, den)


def numeric_spotcheck(sigma: RatFun, ode: Ode2, trials: int = 5, seed: int = 20240611,
                      bound: int = 10 ** 6) -> bool:
    """
    Evaluate the sigma residual at seeded random rational points

    False proves the residual is nonzero. True is only supporting evidence.
    Points where q or N vanish are redrawn.
    """
    if trials < 1:
        raise ValueError("trials must be at least 1")
    R = ode.ring
    x, y, z = R.gens[:3]
    p, q, M, N = sigma.num, sigma.den, ode.M, ode.N
    parts = {name: (f, f.diff(x), f.diff(y), f.diff(z)) for name, f in
             (("p", p), ("q", q), ("M", M), ("N", N))}
    rng = np.random.default_rng(seed)

    checked, draws = 0, 0
    while checked < trials and draws < trials * SPOTCHECK_REDRAWS:
        draws += 1
        point = [_draw(rng, bound) for _ in range(R.ngens)]
        vals = {name: [QQ.convert(f(*point)) for f in fs] for name, fs in parts.items()}
        P, Px, Py, Pz = vals["p"]
        Q, Qx, Qy, Qz = vals["q"]
        Mv, Mx, My, Mz = vals["M"]
        Nv, Nx, Ny, Nz = vals["N"]
        if not Q or not Nv:
            continue
        s = P / Q
        sx, sy, sz = ((Pd * Q - P * Qd) / (Q * Q) for Pd, Qd in ((Px, Qx), (Py, Qy), (Pz, Qz)))
        phi = Mv / Nv
        phi_y = (My * Nv - Mv * Ny) / (Nv * Nv)
        phi_z = (Mz * Nv - Mv * Nz) / (Nv * Nv)
        residual = sx + point[2] * sy + phi * sz - s * s - phi_z * s + phi_y
        if residual:
            return False
        checked += 1
    return True


# ---------------------------------------------------------------------------
# Rendering
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SymmetryRepr:
    """The nonlocal symmetry exp(-Intx(sigma)) (D[y] - sigma D[y']) carried by sigma"""
    sigma: RatFun

    def render(self) -> str:
        s = self.sigma.render()
        return f"exp(-Intx({s}))*(D[y] - ({s})*D[y'])"

    def evolutionary(self) -> str:
        s = self.sigma.render()
        return f"nu*D[y] + D_x[nu]*D[y'] with nu = exp(-Intx({s})), D_x[nu] = -({s})*nu"

    def __str__(self):
        return self.render()


def residual_summary(check: SigmaCheck, limit: int = 200) -> Optional[str]:
    """Residual text for failure messages, shortened past limit characters"""
    if check.ok:
        return None
    text = check.residual.render()
    return text if len(text) <= limit else text[:limit] + " ..."
