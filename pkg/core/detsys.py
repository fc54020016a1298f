"""
Determining System
Candidate polynomials with unknown coefficients, the polynomial identity a
rational symmetry p/q must satisfy, and its coefficient equations
"""

from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

from sympy import QQ
from sympy.polys.orderings import grevlex
from sympy.polys.rings import PolyRing, ring

from core.arith import (
    ODE_VARS, Mono, Poly, gen_index, monomial, monomials_up_to, render_poly,
    xyz_degree, xyz_monomial,
)
from core.odemodel import Ode2


class SymbolKind(Enum):
    A = "a"          # coefficients of p
    B = "b"          # coefficients of q
    C = "c"          # auxiliary coefficients
    PARAM = "param"  # ODE parameters


@dataclass(frozen=True)
class UnknownSym:
    name: str
    kind: SymbolKind
    index: int


class SymbolTable:
    """Hands out a0, a1, ..., b0, ..., c0, ... in creation order"""

    def __init__(self):
        self.counters = {SymbolKind.A: 0, SymbolKind.B: 0, SymbolKind.C: 0}
        self.symbols: List[UnknownSym] = []

    def fresh(self, kind: SymbolKind) -> UnknownSym:
        index = self.counters[kind]
        self.counters[kind] += 1
        sym = UnknownSym(f"{kind.value}{index}", kind, index)
        self.symbols.append(sym)
        return sym


@dataclass
class GenPoly:
    """
    fixed + sum(sym_k * basis_k) with fixed and basis_k in QQ[x, y, z, *params]

    Covers a generic polynomial of given degree, a known factor times a
    generic polynomial, a fully fixed polynomial and monomial-seeded shapes.
    """
    fixed: Poly
    terms: List[Tuple[UnknownSym, Poly]] = field(default_factory=list)

    @property
    def ring(self) -> PolyRing:
        return self.fixed.ring

    @classmethod
    def of(cls, p: Poly) -> "GenPoly":
        return cls(fixed=p, terms=[])

    def symbols(self) -> List[UnknownSym]:
        seen, out = set(), []
        for sym, _ in self.terms:
            if sym.name not in seen:
                seen.add(sym.name)
                out.append(sym)
        return out

    def is_fixed(self) -> bool:
        return not self.terms

    def is_homogeneous(self) -> bool:
        """No fixed part: scaling every unknown scales the polynomial"""
        return not self.fixed

    def degree(self) -> int:
        return max([xyz_degree(self.fixed)] + [xyz_degree(b) for _, b in self.terms])

    def times(self, f: Poly) -> "GenPoly":
        return GenPoly(self.fixed * f, [(s, b * f) for s, b in self.terms])

    def to_ring(self, R1: PolyRing) -> Poly:
        result = self.fixed.set_ring(R1)
        for sym, basis in self.terms:
            result += R1.gens[gen_index(R1, sym.name)] * basis.set_ring(R1)
        return result

    def render(self) -> str:
        pieces = [render_poly(self.fixed)] if self.fixed else []
        pieces += [f"{sym.name}*({render_poly(b)})" for sym, b in self.terms]
        return " + ".join(pieces) or "0"


def generic_poly(R0: PolyRing, table: SymbolTable, kind: SymbolKind, degree: int,
                 variables: Sequence[str] = ODE_VARS, factor: Optional[Poly] = None) -> GenPoly:
    """factor * (generic polynomial of the given degree in the chosen variables)"""
    f = factor if factor is not None else R0.one
    terms = [(table.fresh(kind), monomial(R0, m) * f) for m in monomials_up_to(degree, variables)]
    return GenPoly(R0.zero, terms)


def seeded_poly(R0: PolyRing, table: SymbolTable, kind: SymbolKind, support: Iterable[Mono]) -> GenPoly:
    """Generic combination of the given (x, y, z) monomials"""
    ordered = sorted(set(support), key=lambda m: (sum(m), m), reverse=True)
    return GenPoly(R0.zero, [(table.fresh(kind), monomial(R0, m)) for m in ordered])


# ---------------------------------------------------------------------------
# Rings carrying the unknowns
# ---------------------------------------------------------------------------

@lru_cache(maxsize=64)
def unknown_rings(unknowns: Tuple[str, ...], params: Tuple[str, ...]) -> Tuple[PolyRing, PolyRing]:
    """
    (R1, Ru): QQ[x, y, z, *unknowns, *params] for building identities and
    QQ[*unknowns, *params] for their coefficient equations
    """
    R1, *_ = ring(list(ODE_VARS) + list(unknowns) + list(params), QQ, grevlex)
    Ru, *_ = ring(list(unknowns) + list(params), QQ, grevlex)
    return R1, Ru


def coefficient_equations(poly: Poly, Ru: PolyRing) -> Dict[Mono, Poly]:
    """Split a polynomial of R1 by its (x, y, z) monomials into polynomials of Ru"""
    buckets: Dict[Mono, Dict] = {}
    for m, c in poly.iterterms():
        buckets.setdefault(xyz_monomial(m), {})[m[3:]] = c
    return {m: Ru.from_dict(d) for m, d in buckets.items()}


@dataclass
class DeterminingIdentity:
    """E(x, y, z; unknowns) = 0 with sigma = p/q a symmetry iff E vanishes"""
    poly: Poly
    unknowns: Tuple[UnknownSym, ...]
    params: Tuple[str, ...]
    ring_u: PolyRing

    def coefficients(self) -> Dict[Mono, Poly]:
        return coefficient_equations(self.poly, self.ring_u)


@dataclass
class AlgSystem:
    """Polynomial equations over QQ in the unknowns (parameters as extra generators)"""
    ring: PolyRing
    equations: List[Poly]
    unknowns: Tuple[UnknownSym, ...]
    params: Tuple[str, ...] = ()

    @property
    def size(self) -> Tuple[int, int]:
        return len(self.equations), len(self.unknowns)

    def kind_of(self, name: str) -> SymbolKind:
        for sym in self.unknowns:
            if sym.name == name:
                return sym.kind
        return SymbolKind.PARAM

    def dump(self) -> str:
        header = f"# {len(self.equations)} equations in {len(self.unknowns)} unknowns"
        if self.params:
            header += f", parameters {', '.join(self.params)}"
        lines = [header]
        lines += [f"{render_poly(eq)} = 0" for eq in self.equations]
        return "\n".join(lines)


def collect_unknowns(*polys: GenPoly) -> Tuple[UnknownSym, ...]:
    seen, out = set(), []
    for g in polys:
        for sym in g.symbols():
            if sym.name not in seen:
                seen.add(sym.name)
                out.append(sym)
    return tuple(out)


def build_determining_identity(ode: Ode2, p: GenPoly, q: GenPoly,
                               extra: Sequence[UnknownSym] = ()) -> DeterminingIdentity:
    """
    Clear denominators in  D_x sigma - sigma^2 - phi_z sigma + phi_y  for
    sigma = p/q, phi = M/N. The result equals -q^2 N^2 times that expression:

        N^2 (p^2 - q D0 p + p D0 q)
      + N (p q M_z - q^2 M_y - q p_z M + p q_z M)
      + M (q^2 N_y - p q N_z)

    with D0 = d/dx + y' d/dy.
    """
    unknowns = collect_unknowns(p, q)
    names = [s.name for s in unknowns]
    for sym in extra:
        if sym.name not in names:
            unknowns += (sym,)
            names.append(sym.name)
    params = ode.params
    R1, Ru = unknown_rings(tuple(names), params)
    x, y, z = R1.gens[:3]

    M = ode.M.set_ring(R1)
    N = ode.N.set_ring(R1)
    P = p.to_ring(R1)
    Q = q.to_ring(R1)

    def d0(f):
        return f.diff(x) + z * f.diff(y)

    E = N ** 2 * (P ** 2 - Q * d0(P) + P * d0(Q))
    E += N * (P * Q * M.diff(z) - Q ** 2 * M.diff(y) - Q * P.diff(z) * M + P * Q.diff(z) * M)
    E += M * (Q ** 2 * N.diff(y) - P * Q * N.diff(z))
    return DeterminingIdentity(E, unknowns, params, Ru)


def extract_system(identity: DeterminingIdentity) -> AlgSystem:
    """One equation per (x, y, z) monomial of the identity, in a stable order"""
    coeffs = identity.coefficients()
    ordered = sorted(coeffs.items(), key=lambda kv: (-sum(kv[0]), kv[0]))
    equations = [eq for _, eq in ordered if eq]
    return AlgSystem(identity.ring_u, equations, identity.unknowns, identity.params)


def linear_system(poly: Poly, unknowns: Tuple[UnknownSym, ...], params: Tuple[str, ...]) -> AlgSystem:
    """Coefficient equations of an R1 polynomial that is linear in the unknowns"""
    _, Ru = unknown_rings(tuple(s.name for s in unknowns), params)
    coeffs = coefficient_equations(poly, Ru)
    ordered = sorted(coeffs.items(), key=lambda kv: (-sum(kv[0]), kv[0]))
    return AlgSystem(Ru, [eq for _, eq in ordered if eq], unknowns, params)
