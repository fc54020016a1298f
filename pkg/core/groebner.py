"""
Groebner Bases
Buchberger's algorithm with Gebauer-Moeller pair elimination and the normal
selection strategy, over sympy polynomial rings
"""

import time
from typing import Callable, List, Optional, Sequence, Set, Tuple

from sympy.polys.orderings import grevlex, lex
from sympy.polys.rings import PolyRing

from core.arith import Poly
from core.errors import BudgetExhausted

Pair = Tuple[int, int]

ORDERS = {"grevlex": grevlex, "lex": lex}


def spoly(f: Poly, g: Poly, lmf=None, lmg=None) -> Poly:
    """S-polynomial of monic f and g"""
    R = f.ring
    lmf = f.LM if lmf is None else lmf
    lmg = g.LM if lmg is None else lmg
    lcm = R.monomial_lcm(lmf, lmg)
    return f.mul_monom(R.monomial_div(lcm, lmf)) - g.mul_monom(R.monomial_div(lcm, lmg))


def select(G: List[Poly], P: Set[Pair]) -> Pair:
    """Pair whose lcm of leading monomials is smallest"""
    R = G[0].ring
    return min(P, key=lambda p: (R.order(R.monomial_lcm(G[p[0]].LM, G[p[1]].LM)), p))


def update(G: List[Poly], P: Set[Pair], f: Poly, lmG: List) -> Tuple[List[Poly], Set[Pair]]:
    """Add f to G, pruning old pairs and new pairs by the Gebauer-Moeller criteria"""
    R = f.ring
    lcm, mul, div = R.monomial_lcm, R.monomial_mul, R.monomial_div
    lmf = f.LM

    P = {p for p in P
         if not div(lcm(lmG[p[0]], lmG[p[1]]), lmf)
         or lcm(lmG[p[0]], lmG[p[1]]) == lcm(lmG[p[0]], lmf)
         or lcm(lmG[p[0]], lmG[p[1]]) == lcm(lmG[p[1]], lmf)}

    by_lcm = {}
    for i in range(len(G)):
        by_lcm.setdefault(lcm(lmG[i], lmf), []).append(i)
    minimal = []
    for L in sorted(by_lcm, key=R.order):
        if all(not div(L, L_) for L_ in minimal):
            minimal.append(L)
    new = set()
    for L in minimal:
        # coprime leading monomials reduce to zero
        if not any(lcm(lmG[i], lmf) == mul(lmG[i], lmf) for i in by_lcm[L]):
            new.add((min(by_lcm[L]), len(G)))
    return G + [f], P | new


def minimalize(G: Sequence[Poly]) -> List[Poly]:
    if not G:
        return []
    R = G[0].ring
    out = []
    for f in sorted(G, key=lambda h: R.order(h.LM)):
        if all(not R.monomial_div(f.LM, g.LM) for g in out):
            out.append(f)
    return out


def interreduce(G: Sequence[Poly]) -> List[Poly]:
    """Reduced basis from a minimal one"""
    out = []
    for i, g in enumerate(G):
        others = list(G[:i]) + list(G[i + 1:])
        r = g.rem(others) if others else g
        out.append(r.monic())
    R = G[0].ring if G else None
    return sorted(out, key=lambda h: R.order(h.LM), reverse=True)


def buchberger(F: Sequence[Poly], max_size: Optional[int] = None,
               deadline: Optional[float] = None,
               on_step: Optional[Callable[[int], None]] = None) -> List[Poly]:
    """
    Reduced Groebner basis of the ideal generated by F in F's ring and order

    Stops early with [1] once a nonzero constant appears. Raises
    BudgetExhausted when the basis outgrows max_size or the deadline passes.
    """
    F = [f for f in F if f]
    if not F:
        return []
    R = F[0].ring
    for f in F:
        if f.is_ground:
            return [R.one]

    G: List[Poly] = []
    lmG: List = []
    P: Set[Pair] = set()
    for f in F:
        f = f.monic()
        G, P = update(G, P, f, lmG)
        lmG.append(f.LM)

    steps = 0
    while P:
        if deadline is not None and time.monotonic() > deadline:
            raise BudgetExhausted("groebner basis timed out", {"basis_size": len(G), "pairs": len(P)})
        i, j = select(G, P)
        P.remove((i, j))
        r = spoly(G[i], G[j], lmG[i], lmG[j]).rem(G)
        steps += 1
        if on_step is not None:
            on_step(steps)
        if not r:
            continue
        if r.is_ground:
            return [R.one]
        r = r.monic()
        G, P = update(G, P, r, lmG)
        lmG.append(r.LM)
        if max_size is not None and len(G) > max_size:
            raise BudgetExhausted("groebner basis grew past its size limit", {"basis_size": len(G)})

    return interreduce(minimalize(G))


def with_order(F: Sequence[Poly], order: str) -> List[Poly]:
    """Move polynomials into the same ring under another monomial order"""
    if not F:
        return []
    R: PolyRing = F[0].ring.clone(order=ORDERS[order])
    return [f.set_ring(R) for f in F]


def groebner_basis(F: Sequence[Poly], order: str = "grevlex", max_size: Optional[int] = None,
                   deadline: Optional[float] = None) -> List[Poly]:
    """Reduced basis under the named order, returned in that order's ring"""
    return buchberger(with_order(F, order), max_size=max_size, deadline=deadline)


def is_unit_ideal(G: Sequence[Poly]) -> bool:
    return len(G) == 1 and G[0].is_ground and bool(G[0])


def normal_form(f: Poly, G: Sequence[Poly]) -> Poly:
    """Remainder of f modulo a Groebner basis, in G's ring"""
    if not G:
        return f
    g = f.set_ring(G[0].ring)
    return g.rem(list(G)) if g else g
