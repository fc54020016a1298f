"""
Algebraic Solver
Exact solution of coefficient systems over QQ: propagation, case splitting
and a Groebner fallback, explored depth first

All work happens in QQ[unknowns, params]. In NON_PARAMETRIC mode there are
no parameters. In PARAMETRIC mode the parameters stay generic: the system is
effectively solved over QQ(params) and any nonzero parameter-only polynomial
counts as a unit. In ANALYSIS mode the parameters are solved for as well and
every branch reports the parameter constraints it needs.
"""

import time
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Tuple

from sympy.polys.rings import PolyRing

from core.arith import Poly, RatFun, gen_index, poly_divides, poly_gcd, ratfun_normalize, render_poly
from core.detsys import AlgSystem, SymbolKind
from core.errors import BudgetExhausted, Inconsistent, ZeroDenominator
from core import groebner as gb

FACTOR_MAX_TERMS = 40
FACTOR_CANDIDATES = 6
DEFAULT_PRIORITY = {SymbolKind.A: 0, SymbolKind.B: 0, SymbolKind.C: 1, SymbolKind.PARAM: 2}


class SolveMode(Enum):
    NON_PARAMETRIC = "NonParametric"
    PARAMETRIC = "Parametric"
    ANALYSIS = "Analysis"


@dataclass
class SolveBudget:
    max_case_splits: int = 20000
    max_groebner_basis_size: int = 400
    timeout: Optional[float] = 60.0

    def __post_init__(self):
        if self.max_case_splits <= 0 or self.max_groebner_basis_size <= 0:
            raise ValueError("budget limits must be positive")
        if self.timeout is not None and self.timeout <= 0:
            raise ValueError("budget timeout must be positive")

    @classmethod
    def from_config(cls, config: Dict) -> "SolveBudget":
        section = config.get("budget", {})
        return cls(
            max_case_splits=int(section.get("max_case_splits", 20000)),
            max_groebner_basis_size=int(section.get("max_groebner_basis_size", 400)),
            timeout=section.get("timeout", 60.0),
        )

    def deadline(self) -> Optional[float]:
        if self.timeout is None:
            return None
        return time.monotonic() + float(self.timeout)


@dataclass
class Assignment:
    """
    One solution branch

    values maps every eliminated or fixed symbol to a rational function of
    the symbols left symbolic (free parameters). In ANALYSIS mode solved
    parameters appear in constraints, and relations holds parameter-only
    polynomials that must vanish as well. An unresolved branch needs an
    algebraic extension of QQ and carries no usable values.
    """
    values: Dict[str, RatFun]
    free: Tuple[str, ...] = ()
    constraints: Tuple[Tuple[str, RatFun], ...] = ()
    relations: Tuple[Poly, ...] = ()
    assumptions: Tuple[Poly, ...] = ()
    unresolved: bool = False
    resolver: Optional[Callable[[Dict[str, int]], Optional["Assignment"]]] = field(
        default=None, compare=False, repr=False)

    def value(self, name: str) -> Optional[RatFun]:
        return self.values.get(name)

    def with_free(self, choice: Dict[str, int]) -> Optional["Assignment"]:
        """
        The same branch with its free symbols set to the given constants
        (unnamed free symbols become 0); None if a side condition fails
        """
        if self.resolver is None:
            return None
        return self.resolver(choice)

    def to_json(self) -> Dict:
        return {
            "values": {k: v.render() for k, v in sorted(self.values.items()) if not v.is_zero()},
            "free": list(self.free),
            "constraints": [f"{name} = {value.render()}" for name, value in self.constraints],
            "relations": [f"{render_poly(r)} = 0" for r in self.relations],
            "assumptions": [f"{render_poly(a)} != 0" for a in self.assumptions],
            "unresolved": self.unresolved,
        }


@dataclass(frozen=True)
class UnresolvedAlgebraic:
    """A branch whose defining relations have no rational solution to report"""
    relations: Tuple[str, ...]
    constraints: Tuple[str, ...] = ()

    @classmethod
    def from_assignment(cls, a: Assignment) -> "UnresolvedAlgebraic":
        return cls(
            relations=tuple(f"{render_poly(r)} = 0" for r in a.relations),
            constraints=tuple(f"{name} = {value.render()}" for name, value in a.constraints),
        )


Elimination = Tuple[int, Poly, Poly]


@dataclass
class _Branch:
    equations: List[Poly]
    eliminations: List[Elimination] = field(default_factory=list)
    nonzero: List[Poly] = field(default_factory=list)
    hold: bool = False

    def copy(self) -> "_Branch":
        return _Branch(list(self.equations), list(self.eliminations), list(self.nonzero), self.hold)


class _Meter:
    def __init__(self, budget: SolveBudget, deadline: Optional[float]):
        self.budget = budget
        self.deadline = deadline if deadline is not None else budget.deadline()
        self.splits = 0
        self.groebner_runs = 0
        self.branches = 0

    def expired(self) -> bool:
        return self.deadline is not None and time.monotonic() > self.deadline

    def check(self):
        if self.expired():
            raise BudgetExhausted("solve timed out", self.progress())

    def split(self):
        self.splits += 1
        if self.splits > self.budget.max_case_splits:
            raise BudgetExhausted("case split limit reached", self.progress())

    def progress(self) -> Dict:
        return {"case_splits": self.splits, "groebner_runs": self.groebner_runs, "branches": self.branches}


class _Solver:
    def __init__(self, system: AlgSystem, mode: SolveMode, budget: SolveBudget,
                 deadline: Optional[float], priority: Optional[Dict[SymbolKind, int]]):
        self.system = system
        self.R: PolyRing = system.ring
        self.mode = mode
        self.meter = _Meter(budget, deadline)
        self.budget = budget
        n_unknowns = len(system.unknowns)
        self.kinds = [s.kind for s in system.unknowns] + [SymbolKind.PARAM] * (self.R.ngens - n_unknowns)
        if mode is SolveMode.ANALYSIS:
            self.solvable = list(range(self.R.ngens))
        else:
            self.solvable = list(range(n_unknowns))
        self.solvable_set = set(self.solvable)
        self.generic = [i for i in range(self.R.ngens) if i not in self.solvable_set]
        rank = priority or DEFAULT_PRIORITY
        self.rank = [rank.get(k, 0) for k in self.kinds]
        self.incomplete = False
        self.abandoned = 0
        self._factor_cache: Dict[Poly, List[Tuple[Poly, int]]] = {}

    # -- structure helpers ---------------------------------------------------

    def support(self, f: Poly) -> List[int]:
        """Solvable generators that occur in f"""
        if not f:
            return []
        degs = f.degrees()
        return [i for i in self.solvable if degs[i] > 0]

    def is_ground(self, f: Poly) -> bool:
        return not self.support(f)

    def masked(self, m: Tuple[int, ...]) -> Tuple[int, ...]:
        return tuple(m[i] for i in self.solvable)

    def generic_content(self, f: Poly) -> Poly:
        """gcd of the parameter-only coefficients of f in PARAMETRIC mode"""
        if not self.generic:
            return self.R.one
        groups: Dict[Tuple[int, ...], Dict] = {}
        for m, c in f.iterterms():
            key = self.masked(m)
            residual = tuple(0 if i in self.solvable_set else e for i, e in enumerate(m))
            groups.setdefault(key, {})[residual] = c
        g = self.R.zero
        for d in groups.values():
            g = poly_gcd(g, self.R.from_dict(d))
            if g == self.R.one:
                break
        return g

    def strip(self, f: Poly, nonzero: Sequence[Poly]) -> Poly:
        """Remove factors known not to vanish and normalize"""
        if not f:
            return f
        content = self.generic_content(f)
        if content and not content.is_ground:
            f = f.exquo(content)
        if nonzero:
            degs = f.degrees()
            for g in nonzero:
                gd = g.degrees()
                if any(e > degs[i] for i, e in enumerate(gd)):
                    continue
                while True:
                    self.meter.check()
                    ok, q = poly_divides(g, f)
                    if not ok:
                        break
                    f = q
                    if f.is_ground:
                        break
                    degs = f.degrees()
                    if any(e > degs[i] for i, e in enumerate(gd)):
                        break
        return f.monic()

    def known_nonzero(self, c: Poly, nonzero: Sequence[Poly]) -> bool:
        if not c:
            return False
        if self.is_ground(c):
            return True
        return self.is_ground(self.strip(c, nonzero))

    def targets(self, br: _Branch) -> List[int]:
        """Symbols that may be solved for; a held branch solves its unknowns before any parameter"""
        if not br.hold:
            return self.solvable
        unknowns = [i for i in self.solvable if self.kinds[i] is not SymbolKind.PARAM]
        used = set()
        for f in br.equations:
            used.update(self.support(f))
        if any(i in used for i in unknowns):
            return unknowns
        return self.solvable

    # -- substitution --------------------------------------------------------

    def substitute(self, f: Poly, i: int, num: Poly, den: Poly) -> Poly:
        """f with generator i replaced by num/den, scaled by a power of den"""
        d = f.degree(i)
        if d <= 0:
            return f
        if not num and den == self.R.one:
            return f.subs(self.R.gens[i], 0)
        if den.is_ground:
            return f.compose(self.R.gens[i], num.quo_ground(den.LC))
        num_pows = [self.R.one]
        den_pows = [self.R.one]
        for _ in range(d):
            num_pows.append(num_pows[-1] * num)
            den_pows.append(den_pows[-1] * den)
        result = self.R.zero
        for k in range(d + 1):
            part = f.coeff_wrt(i, k)
            if part:
                result += part * num_pows[k] * den_pows[d - k]
        return result

    def apply(self, br: _Branch, i: int, num: Poly, den: Poly) -> bool:
        """Record gen_i = num/den and push it through the branch"""
        br.eliminations.append((i, num, den))
        br.equations = [self.substitute(f, i, num, den) for f in br.equations]
        kept = []
        for h in br.nonzero:
            h2 = self.substitute(h, i, num, den)
            if not h2:
                return False
            if not self.is_ground(h2):
                kept.append(h2)
        br.nonzero = kept
        return True

    # -- propagation ---------------------------------------------------------

    def normalize(self, br: _Branch) -> bool:
        eqs, seen = [], set()
        for f in br.equations:
            self.meter.check()
            f = self.strip(f, br.nonzero)
            if not f:
                continue
            if self.is_ground(f):
                return False
            if f in seen:
                continue
            seen.add(f)
            eqs.append(f)
        br.equations = sorted(eqs, key=lambda g: (len(g), g.LM))
        return True

    def zero_symbols(self, br: _Branch) -> List[int]:
        """Symbols forced to vanish by single-monomial equations"""
        out = set()
        for f in br.equations:
            monos = {self.masked(m) for m in f.itermonoms()}
            if len(monos) != 1:
                continue
            (mono,) = monos
            used = [self.solvable[k] for k, e in enumerate(mono) if e]
            if len(used) == 1:
                out.add(used[0])
        return sorted(out)

    def pick_linear(self, br: _Branch, strict: bool = False) -> Optional[Tuple[int, Poly, Poly]]:
        best, best_key = None, None
        targets = self.targets(br)
        for f in br.equations:
            if strict and any(sum(self.masked(m)) > 1 for m in f.itermonoms()):
                continue
            degs = f.degrees()
            for i in targets:
                if degs[i] != 1:
                    continue
                c = f.coeff_wrt(i, 1)
                if not self.known_nonzero(c, br.nonzero):
                    continue
                key = (0 if c.is_ground else 1, self.rank[i], len(f), i)
                if best_key is None or key < best_key:
                    best_key = key
                    best = (i, c, f.coeff_wrt(i, 0))
            if best_key is not None and best_key[0] == 0 and len(f) <= 2:
                break
        return best

    def propagate(self, br: _Branch, strict: bool = False) -> bool:
        while True:
            self.meter.check()
            if not self.normalize(br):
                return False
            zeros = self.zero_symbols(br)
            if zeros:
                for i in zeros:
                    if not self.apply(br, i, self.R.zero, self.R.one):
                        return False
                continue
            pick = self.pick_linear(br, strict)
            if pick is None:
                return True
            i, c, r = pick
            if not self.apply(br, i, -r, c):
                return False

    # -- splitting -----------------------------------------------------------

    def compact(self, polys: Sequence[Poly]) -> Tuple[PolyRing, List[Poly], List[int]]:
        """Move polynomials into the subring of the generators they use"""
        used = set()
        for f in polys:
            if f:
                used.update(i for i, e in enumerate(f.degrees()) if e > 0)
        idx = sorted(used)
        if not idx:
            return self.R, list(polys), idx
        S = self.R.clone(symbols=[self.R.symbols[i] for i in idx])
        return S, [f.set_ring(S) for f in polys], idx

    def factor(self, f: Poly) -> List[Tuple[Poly, int]]:
        if f in self._factor_cache:
            return self._factor_cache[f]
        S, (g,), _ = self.compact([f])
        _, factors = g.factor_list()
        out = [(h.set_ring(self.R).monic(), k) for h, k in factors]
        out = [(h, k) for h, k in out if not self.is_ground(h)]
        self._factor_cache[f] = out
        return out

    def split_monomial(self, br: _Branch) -> Optional[List[_Branch]]:
        for f in br.equations:
            mins = tuple(map(min, zip(*f.itermonoms())))
            common = [i for i in self.solvable if mins[i] > 0]
            if not common:
                continue
            i = min(common, key=lambda j: (self.rank[j], j))
            zero = br.copy()
            if not self.apply(zero, i, self.R.zero, self.R.one):
                zero = None
            nonzero = br.copy()
            nonzero.nonzero.append(self.R.gens[i])
            return [b for b in (zero, nonzero) if b is not None]
        return None

    def split_factors(self, br: _Branch) -> Optional[List[_Branch]]:
        tried = 0
        for f in br.equations:
            if len(f) > FACTOR_MAX_TERMS or tried >= FACTOR_CANDIDATES:
                break
            if sum(f.degrees()) < 2:
                continue
            tried += 1
            self.meter.check()
            factors = self.factor(f)
            if len(factors) == 1 and factors[0][1] == 1:
                continue
            if not factors:
                continue
            children = []
            previous: List[Poly] = []
            for h, _ in factors:
                child = br.copy()
                child.equations = [g for g in child.equations if g != f] + [h]
                child.nonzero.extend(previous)
                children.append(child)
                previous.append(h)
            return children
        return None

    def split_coefficient(self, br: _Branch) -> Optional[List[_Branch]]:
        best = None
        targets = self.targets(br)
        for f in br.equations:
            self.meter.check()
            degs = f.degrees()
            for i in targets:
                if degs[i] != 1:
                    continue
                c = self.strip(f.coeff_wrt(i, 1), br.nonzero)
                if c.is_ground:
                    continue
                key = (len(c), self.rank[i], len(f), i)
                if best is None or key < best[0]:
                    best = (key, c)
        if best is None:
            return None
        c = best[1]
        nonzero = br.copy()
        if len(c) <= FACTOR_MAX_TERMS:
            nonzero.nonzero.extend(h for h, _ in self.factor(c))
        else:
            nonzero.nonzero.append(c)
        vanishing = br.copy()
        vanishing.equations.append(c)
        return [nonzero, vanishing]

    def linear_relation(self, basis: Sequence[Poly], nonzero: Sequence[Poly]) -> bool:
        for g in basis:
            degs = g.degrees()
            for i in self.solvable:
                if degs[i] == 1 and self.known_nonzero(g.coeff_wrt(i, 1), nonzero):
                    return True
        return False

    def split_groebner(self, br: _Branch, results: List[Assignment]) -> List[_Branch]:
        reopened = self.regauge(br)
        if reopened is not None:
            return [reopened]
        self.meter.groebner_runs += 1
        size = self.budget.max_groebner_basis_size
        S, eqs, _ = self.compact(br.equations)
        basis = gb.buchberger(eqs, max_size=size, deadline=self.meter.deadline)
        if gb.is_unit_ideal(basis):
            return []
        basis = [g.set_ring(self.R) for g in basis]
        if any(self.is_ground(g) for g in basis):
            return []
        if self.linear_relation(basis, br.nonzero) and set(basis) != set(br.equations):
            child = br.copy()
            child.equations = basis
            return [child]

        self.meter.check()
        lex_eqs = gb.with_order(eqs, "lex")
        lex_basis = gb.buchberger(lex_eqs, max_size=size, deadline=self.meter.deadline)
        if gb.is_unit_ideal(lex_basis):
            return []
        lex_basis = [g.set_ring(self.R) for g in lex_basis]

        for g in reversed(lex_basis):
            sup = self.support(g)
            if len(sup) != 1:
                continue
            children = []
            for h, _ in self.factor(g):
                if h.degree(sup[0]) >= 2:
                    relations = [h] + [p for p in lex_basis if p != g and self.is_param_relation(p)]
                    results.append(self.unresolved(br, relations))
                    continue
                child = br.copy()
                child.equations = lex_basis + [h]
                children.append(child)
            return children

        for g in reversed(lex_basis):
            if len(g) > FACTOR_MAX_TERMS:
                continue
            self.meter.check()
            factors = self.factor(g)
            if len(factors) > 1 or (factors and factors[0][1] > 1):
                children = []
                previous: List[Poly] = []
                for h, _ in factors:
                    child = br.copy()
                    child.equations = [p for p in lex_basis if p != g] + [h]
                    child.nonzero.extend(previous)
                    children.append(child)
                    previous.append(h)
                return children

        used = set()
        for g in lex_basis:
            used.update(self.support(g))
        candidates = [i for i in used if self.kinds[i] is not SymbolKind.PARAM]
        if not candidates:
            relations = [g for g in lex_basis if self.is_param_relation(g)]
            finished = self.finish_with_relations(br, relations)
            if finished is not None:
                results.append(finished)
            return []
        v = max(candidates)
        children = []
        for value in (0, 1):
            child = br.copy()
            child.equations = list(lex_basis)
            if self.apply(child, v, self.R.ground_new(value), self.R.one):
                children.append(child)
        return children

    def is_param_relation(self, g: Poly) -> bool:
        sup = self.support(g)
        return bool(sup) and all(self.kinds[i] is SymbolKind.PARAM for i in sup)

    def split(self, br: _Branch, results: List[Assignment]) -> List[_Branch]:
        for method in (self.split_monomial, self.split_factors, self.split_coefficient):
            children = method(br)
            if children is not None:
                return children
        return self.split_groebner(br, results)

    # -- results -------------------------------------------------------------

    def evaluate(self, f: Poly, values: Dict[int, RatFun]) -> RatFun:
        """f with the given generators replaced, over a common denominator"""
        R = self.R
        degs = f.degrees() if f else (0,) * R.ngens
        idx = [i for i in values if degs[i] > 0]
        if not idx:
            return RatFun(f, R.one) if f else RatFun(R.zero, R.one)
        num_pows = {i: [R.one] for i in idx}
        den_pows = {i: [R.one] for i in idx}
        for i in idx:
            for _ in range(degs[i]):
                num_pows[i].append(num_pows[i][-1] * values[i].num)
                den_pows[i].append(den_pows[i][-1] * values[i].den)
        total = R.zero
        for m, c in f.iterterms():
            rest = tuple(0 if i in values else e for i, e in enumerate(m))
            term = R.from_dict({rest: c})
            for i in idx:
                term *= num_pows[i][m[i]] * den_pows[i][degs[i] - m[i]]
            total += term
        den = R.one
        for i in idx:
            den *= den_pows[i][degs[i]]
        return ratfun_normalize(total, den)

    def back_substitute(self, eliminations: Sequence[Elimination],
                        chosen: Dict[int, RatFun]) -> Dict[int, RatFun]:
        values = dict(chosen)
        for i, num, den in reversed(eliminations):
            n = self.evaluate(num, values)
            d = self.evaluate(den, values)
            values[i] = n / d
        return values

    def name(self, i: int) -> str:
        return str(self.R.symbols[i])

    def package(self, br: _Branch, values: Dict[int, RatFun], free: List[int],
                relations: Sequence[Poly] = (), unresolved: bool = False) -> Assignment:
        unknown_values = {self.name(i): v for i, v in values.items() if self.kinds[i] is not SymbolKind.PARAM}
        constraints = tuple((self.name(i), values[i]) for i, _, _ in br.eliminations
                            if self.kinds[i] is SymbolKind.PARAM and i in values)
        return Assignment(
            values=unknown_values,
            free=tuple(self.name(i) for i in free),
            constraints=constraints,
            relations=tuple(relations),
            assumptions=tuple(br.nonzero),
            unresolved=unresolved,
        )

    def regauge(self, br: _Branch) -> Optional[_Branch]:
        """
        Reopen an ANALYSIS branch whose parameters were solved through
        unknowns that are still free

        Fixing such an unknown later would pin the parameters to numbers.
        The child keeps those parameter values as equations and is held, so
        the unknowns get solved in terms of the parameters instead.
        """
        if self.mode is not SolveMode.ANALYSIS or br.hold:
            return None
        eliminated = {i for i, _, _ in br.eliminations}
        open_unknowns = {i for i in self.solvable if i not in eliminated and self.kinds[i] is not SymbolKind.PARAM}
        if not open_unknowns:
            return None
        try:
            values = self.back_substitute(br.eliminations, {})
        except ZeroDenominator:
            return None
        tied = [i for i, _, _ in br.eliminations if self.kinds[i] is SymbolKind.PARAM
                and open_unknowns.intersection(self.support(values[i].num) + self.support(values[i].den))]
        if not tied:
            return None
        child = br.copy()
        child.hold = True
        child.eliminations = [e for e in br.eliminations if e[0] not in tied]
        for i in tied:
            v = values[i]
            child.equations.append(v.den * self.R.gens[i] - v.num)
            if not self.is_ground(v.den):
                child.nonzero.append(v.den)
        return child

    def unresolved(self, br: _Branch, relations: Sequence[Poly]) -> Assignment:
        eliminated = {i for i, _, _ in br.eliminations}
        try:
            values = self.back_substitute(br.eliminations, {})
        except ZeroDenominator:
            values = {}
        free = [i for i in self.solvable if i not in eliminated and self.kinds[i] is not SymbolKind.PARAM]
        a = self.package(br, values, free, relations, unresolved=True)
        a.values.clear()
        return a

    def finish_with_relations(self, br: _Branch, relations: Sequence[Poly]) -> Optional[Assignment]:
        """Branch whose remaining equations only constrain the parameters"""
        for r in relations:
            sup = self.support(r)
            if len(sup) == 1 and r.degree(sup[0]) >= 2 and len(self.factor(r)) == 1:
                return self.unresolved(br, relations)
        done = br.copy()
        done.equations = []
        a = self.finish(done)
        if a is None:
            return None
        return Assignment(a.values, a.free, a.constraints, tuple(relations), a.assumptions)

    def finish(self, br: _Branch) -> Optional[Assignment]:
        self.meter.branches += 1
        eliminated = {i for i, _, _ in br.eliminations}
        free = [i for i in self.solvable if i not in eliminated and self.kinds[i] is not SymbolKind.PARAM]
        default = {self.name(i): 0 for i in free}
        for h in br.nonzero:
            for i in self.support(h):
                if i in free:
                    default[self.name(i)] = 1
        frozen = br.copy()

        def resolver(choice: Dict[str, int]) -> Optional[Assignment]:
            return self.resolve(frozen, free, choice, resolver)

        a = resolver(default)
        # all-zero defaults give the trivial solution; lift one free symbol to 1
        for i in free:
            if a is not None:
                break
            a = resolver({**default, self.name(i): 1})
        return a

    def resolve(self, br: _Branch, free: List[int], choice: Dict[str, int],
                resolver: Callable) -> Optional[Assignment]:
        R = self.R
        chosen = {i: RatFun.constant(R, choice.get(self.name(i), 0)) for i in free}
        try:
            values = self.back_substitute(br.eliminations, chosen)
            if any(self.evaluate(h, values).is_zero() for h in br.nonzero):
                return None
        except ZeroDenominator:
            return None
        unknown_values = [v for i, v in values.items() if self.kinds[i] is not SymbolKind.PARAM]
        if all(v.is_zero() for v in unknown_values):
            return None
        a = self.package(br, values, free)
        a.resolver = resolver
        return a

    # -- driver --------------------------------------------------------------

    def run(self, roots: List[_Branch], max_branches: Optional[int]) -> List[Assignment]:
        results: List[Assignment] = []
        stack = list(reversed(roots))

        def enough() -> bool:
            return max_branches is not None and sum(not r.unresolved for r in results) >= max_branches

        while stack and not enough():
            br = stack.pop()
            try:
                self.meter.check()
                alive = self.propagate(br)
            except BudgetExhausted:
                if results:
                    self.abandoned = len(stack) + 1
                    break
                raise
            if not alive:
                continue
            if not br.equations:
                reopened = self.regauge(br)
                if reopened is not None:
                    stack.append(reopened)
                    continue
                a = self.finish(br)
                if a is not None:
                    results.append(a)
                continue
            try:
                self.meter.split()
                children = self.split(br, results)
            except BudgetExhausted:
                if self.meter.expired() or self.meter.splits > self.budget.max_case_splits:
                    if results:
                        self.abandoned = len(stack) + 1
                        break
                    raise
                self.incomplete = True
                continue
            stack.extend(reversed(children))
        if not results and self.incomplete:
            raise BudgetExhausted("groebner basis size limit reached in every open branch", self.meter.progress())
        return results


def _root(solver: _Solver, system: AlgSystem, nonzero: Iterable[Poly]) -> _Branch:
    return _Branch(equations=[f for f in system.equations if f], nonzero=[h for h in nonzero if not solver.is_ground(h)])


def solve_system(system: AlgSystem, budget: Optional[SolveBudget] = None,
                 mode: SolveMode = SolveMode.NON_PARAMETRIC, *,
                 pivots: Sequence[str] = (), nonzero: Sequence[Poly] = (),
                 max_branches: Optional[int] = None, deadline: Optional[float] = None,
                 priority: Optional[Dict[SymbolKind, int]] = None) -> List[Assignment]:
    """
    Solution branches of the system, depth first

    pivots names the symbols used to fix the projective gauge of a
    homogeneous system: branch k forces the earlier pivots to 0 and pivot k
    to 1. nonzero lists side conditions in the system's ring. An empty
    result means no solution was found; BudgetExhausted is raised only when
    nothing was found and part of the search was cut off.
    """
    budget = budget or SolveBudget()
    solver = _Solver(system, mode, budget, deadline, priority)
    R = system.ring
    base = _root(solver, system, nonzero)
    if not pivots:
        roots = [base]
    else:
        roots = []
        for k, name in enumerate(pivots):
            branch = base.copy()
            branch.equations = branch.equations + [R.gens[gen_index(R, p)] for p in pivots[:k]]
            branch.equations.append(R.gens[gen_index(R, name)] - 1)
            roots.append(branch)
    return solver.run(roots, max_branches)


def propagate_linear(system: AlgSystem, mode: SolveMode = SolveMode.NON_PARAMETRIC,
                     priority: Optional[Dict[SymbolKind, int]] = None,
                     budget: Optional[SolveBudget] = None) -> Tuple[AlgSystem, Assignment]:
    """
    Zero-forcing monomials and linear equations only, to a fixed point

    Returns the remaining equations and the eliminated symbols expressed in
    the symbols that are left. Raises Inconsistent on a nonzero constant.
    """
    solver = _Solver(system, mode, budget or SolveBudget(timeout=None), None, priority)
    br = _root(solver, system, ())
    if not solver.propagate(br, strict=True):
        raise Inconsistent("linear propagation reached a nonzero constant")
    values = solver.back_substitute(br.eliminations, {})
    eliminated = {i for i, _, _ in br.eliminations}
    free = [i for i in solver.solvable if i not in eliminated]
    reduced = AlgSystem(system.ring, br.equations, system.unknowns, system.params)
    return reduced, solver.package(br, values, free)


def groebner_basis(eqs: Sequence[Poly], order: str = "grevlex",
                   budget: Optional[SolveBudget] = None) -> List[Poly]:
    """Reduced Groebner basis under 'grevlex' or 'lex' (elimination) order"""
    budget = budget or SolveBudget(timeout=None)
    return gb.groebner_basis(eqs, order, max_size=budget.max_groebner_basis_size, deadline=budget.deadline())


def assignment_residuals(system: AlgSystem, assignment: Assignment) -> List[RatFun]:
    """Every equation of the system evaluated at the assignment"""
    solver = _Solver(system, SolveMode.ANALYSIS, SolveBudget(timeout=None), None, None)
    R = system.ring
    values = {gen_index(R, name): v for name, v in assignment.values.items()}
    values.update({gen_index(R, name): v for name, v in assignment.constraints})
    return [solver.evaluate(f, values) for f in system.equations]
