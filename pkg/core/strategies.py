"""
Search Strategies
Candidate shapes for sigma = p/q and the scheduler that tries them cheapest
first, emitting the first sigma that verifies exactly
"""

import itertools
import time
from contextlib import contextmanager
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, Iterator, List, Optional, Sequence, Tuple, Union

from sympy.polys.rings import PolyRing

from core.algsolve import (
    Assignment, SolveBudget, SolveMode, UnresolvedAlgebraic, propagate_linear, solve_system,
)
from core.arith import (
    Poly, RatFun, depends_on, gen_index, is_param_only, poly_gcd, ratfun_normalize, render_poly,
    same_function, xyz_degree, xyz_support,
)
from core.detsys import (
    GenPoly, SymbolKind, SymbolTable, build_determining_identity, collect_unknowns,
    extract_system, generic_poly, linear_system, seeded_poly, unknown_rings,
)
from core.errors import BudgetExhausted, Inapplicable, Inconsistent, ZeroDenominator
from core.odemodel import Ode2, degree_report, parse_expression
from core.runlog import RunLogger
from core.verify import numeric_spotcheck, verify_sigma

PREFILTER_PRIORITY = {SymbolKind.A: 0, SymbolKind.B: 0, SymbolKind.C: 1, SymbolKind.PARAM: 2}
BRANCHES_PER_ATTEMPT = 2


class StrategyKind(Enum):
    """Search shapes, valued by their CLI identifiers"""
    MONOMIAL_SEED = "seed-monomials"
    Q_DIVIDES_N = "q-div-n"
    Q_EQUALS_UN = "q-u-n"
    COMMON_FACTOR = "common-factor"
    N_OF_X = "n-of-x"
    BASE = "base"


@dataclass(frozen=True)
class StrategySpec:
    kind: StrategyKind
    degrees: Tuple[int, int] = (1, 7)
    u: Optional[str] = None

    @property
    def label(self) -> str:
        if self.kind is StrategyKind.Q_EQUALS_UN:
            return f"{self.kind.value}:{self.u}"
        return self.kind.value

    @classmethod
    def from_name(cls, name: str, n_max: int = 7) -> "StrategySpec":
        """Parse a CLI identifier such as base, q-div-n or q-u-n:z"""
        kind_name, _, u = name.partition(":")
        try:
            kind = StrategyKind(kind_name)
        except ValueError:
            raise ValueError(f"unknown strategy: {name}")
        if kind is StrategyKind.Q_EQUALS_UN:
            u = {"y'": "z"}.get(u, u)
            if u not in ("x", "y", "z"):
                raise ValueError("q-u-n needs a multiplier: q-u-n:x, q-u-n:y or q-u-n:z")
            return cls(kind, (1, n_max), u)
        if u:
            raise ValueError(f"strategy {kind_name} takes no argument")
        return cls(kind, (1, n_max))


@dataclass
class StrategyPlan:
    """Ordered strategies; Base appears exactly once and last"""
    specs: List[StrategySpec]

    def __post_init__(self):
        bases = [s for s in self.specs if s.kind is StrategyKind.BASE]
        if len(bases) != 1 or self.specs[-1].kind is not StrategyKind.BASE:
            raise ValueError("a strategy plan ends with exactly one base strategy")
        for s in self.specs:
            lo, hi = s.degrees
            if lo < 1 or hi < lo:
                raise ValueError(f"bad degree range {s.degrees} for {s.label}")

    @classmethod
    def default(cls, ode: Ode2, n_max: int = 7) -> "StrategyPlan":
        rng = (1, n_max)
        specs = [
            StrategySpec(StrategyKind.MONOMIAL_SEED, rng),
            StrategySpec(StrategyKind.Q_DIVIDES_N, rng),
            StrategySpec(StrategyKind.Q_EQUALS_UN, rng, "z"),
            StrategySpec(StrategyKind.Q_EQUALS_UN, rng, "x"),
            StrategySpec(StrategyKind.Q_EQUALS_UN, rng, "y"),
            StrategySpec(StrategyKind.COMMON_FACTOR, rng),
        ]
        if not (depends_on(ode.N, "y") or depends_on(ode.N, "z")):
            specs.append(StrategySpec(StrategyKind.N_OF_X, rng))
        specs.append(StrategySpec(StrategyKind.BASE, rng))
        return cls(specs)

    def labels(self) -> List[str]:
        return [s.label for s in self.specs]


# ---------------------------------------------------------------------------
# Outcomes
# ---------------------------------------------------------------------------

@dataclass
class SigmaResult:
    sigma: RatFun
    strategy: str
    assignment: Assignment
    elapsed: float
    verified: bool
    degree: int
    p: Poly
    q: Poly
    attempts: int = 1

    def to_json(self) -> Dict:
        return {
            "sigma": self.sigma.render(),
            "strategy": self.strategy,
            "degree": self.degree,
            "p": render_poly(self.p),
            "q": render_poly(self.q),
            "elapsed": round(self.elapsed, 4),
            "verified": self.verified,
            "attempts": self.attempts,
            "assignment": self.assignment.to_json(),
        }


@dataclass
class NotFound:
    """No sigma of the searched shapes; exhaustive means the shapes were fully solved"""
    strategy: str
    degrees: Tuple[int, int]
    attempts: int
    exhaustive: bool
    elapsed: float = 0.0
    trivial_degrees: List[int] = field(default_factory=list)

    def to_json(self) -> Dict:
        return {
            "status": "NotFound",
            "strategy": self.strategy,
            "degrees": list(self.degrees),
            "attempts": self.attempts,
            "exhaustive": self.exhaustive,
            "elapsed": round(self.elapsed, 4),
            "trivial_degrees": self.trivial_degrees,
        }


Outcome = Union[SigmaResult, NotFound]


@dataclass
class PrefilterResult:
    """Linear reduction of p_c and q_c through N | q N_y - p N_z"""
    assignment: Assignment
    p: GenPoly
    q: GenPoly
    symbols_before: int
    symbols_after: int


@dataclass
class AnalysisBranch:
    sigma: RatFun
    constraints: Tuple[Tuple[str, RatFun], ...] = ()
    relations: Tuple[Poly, ...] = ()
    verified: bool = False

    @property
    def constrained(self) -> bool:
        return bool(self.constraints or self.relations)

    def key(self) -> Tuple:
        return (
            tuple(f"{n} = {v.render()}" for n, v in self.constraints),
            tuple(render_poly(r) for r in self.relations),
            self.sigma.render(),
        )

    def to_json(self) -> Dict:
        return {
            "constraints": [f"{n} = {v.render()}" for n, v in self.constraints],
            "relations": [f"{render_poly(r)} = 0" for r in self.relations],
            "sigma": self.sigma.render(),
            "verified": self.verified,
        }


@dataclass
class AnalysisReport:
    degree: int
    unconstrained: List[AnalysisBranch]
    constrained: List[AnalysisBranch]
    unresolved: List[UnresolvedAlgebraic]
    elapsed: float

    def to_json(self) -> Dict:
        return {
            "degree": self.degree,
            "unconstrained": [b.to_json() for b in self.unconstrained],
            "constrained": [b.to_json() for b in self.constrained],
            "unresolved": [{"relations": list(u.relations), "constraints": list(u.constraints)}
                           for u in self.unresolved],
            "elapsed": round(self.elapsed, 4),
        }


@dataclass
class _Tally:
    attempts: int = 0
    incomplete: bool = False
    trivial_degrees: List[int] = field(default_factory=list)


# ---------------------------------------------------------------------------
# Helpers
# ---------------------------------------------------------------------------

def monic_divisors(N: Poly, limit: Optional[int] = None) -> List[Poly]:
    """
    Monic divisors of N built from its irreducible factors, by degree

    Parameter-only factors are skipped. 1 comes first and the full product
    last; past limit the list keeps its first entries and the full product.
    """
    R = N.ring
    if not N or xyz_degree(N) <= 0:
        return [R.one]
    _, factors = N.factor_list()
    factors = [(f.monic(), k) for f, k in factors if not is_param_only(f)]
    products = []
    for exps in itertools.product(*[range(k + 1) for _, k in factors]):
        d = R.one
        for (f, _), e in zip(factors, exps):
            d *= f ** e
        products.append(d)
    full = products[-1]
    rest = sorted((d for d in products if d != full), key=lambda d: (xyz_degree(d), render_poly(d)))
    if limit is not None and len(rest) + 1 > limit:
        rest = rest[:max(limit - 1, 1)]
    return rest + [full]


def sigma_from(p: GenPoly, q: GenPoly, a: Assignment, R0: PolyRing) -> Tuple[Optional[RatFun], RatFun, RatFun]:
    """(sigma, p, q) as rational functions over the ODE ring; sigma is None if p or q is zero"""
    def value(gp: GenPoly) -> RatFun:
        total = RatFun.from_poly(gp.fixed)
        for sym, basis in gp.terms:
            v = a.values.get(sym.name)
            if v is None or v.is_zero():
                continue
            v0 = ratfun_normalize(v.num.set_ring(R0), v.den.set_ring(R0))
            total = total + v0 * RatFun.from_poly(basis)
        return total

    pv, qv = value(p), value(q)
    if pv.is_zero() or qv.is_zero():
        return None, pv, qv
    return pv / qv, pv, qv


def parse_side_condition(text: str, R0: PolyRing) -> RatFun:
    """'c', 'c != 0' or 'a != b' as the expression required not to vanish"""
    lhs, sep, rhs = text.partition("!=")
    expr = parse_expression(lhs.strip(), R0)
    if sep and rhs.strip():
        expr = expr - parse_expression(rhs.strip(), R0)
    if expr.is_zero():
        raise ValueError(f"side condition {text!r} can never hold")
    return expr


def substitute_constraints(f: RatFun, constraints: Sequence[Tuple[str, RatFun]]) -> RatFun:
    for name, value in constraints:
        if name in [str(s) for s in f.ring.symbols]:
            f = f.substitute(name, value)
    return f


def constraints_imply(stronger: Sequence[Tuple[str, RatFun]], weaker: Sequence[Tuple[str, RatFun]],
                      R0: PolyRing) -> bool:
    """Every constraint in weaker holds once the constraints in stronger are imposed"""
    for name, value in weaker:
        lhs = substitute_constraints(RatFun.from_poly(R0.gens[gen_index(R0, name)]), stronger)
        rhs = substitute_constraints(value, stronger)
        if not same_function(lhs, rhs):
            return False
    return True


# ---------------------------------------------------------------------------
# The search
# ---------------------------------------------------------------------------

class SymmetrySearch:
    """Run candidate shapes for sigma = p/q against one ODE at a time"""

    def __init__(self, config: Dict, logger: Optional[RunLogger] = None):
        """
        Initialize the search

        Args:
            config: Configuration dictionary with search, budget and verify sections
            logger: Where attempt lines go (a quiet logger if omitted)
        """
        self.config = config
        self.search_config = config.get('search', {})
        self.verify_config = config.get('verify', {})
        self.budget = SolveBudget.from_config(config)
        self.logger = logger or RunLogger(config, quiet=True)
        self.max_divisors = int(self.search_config.get('max_divisors', 32))
        self.strategy_share = float(self.search_config.get('strategy_share', 0.3))
        self.seed_q_degrees = list(self.search_config.get('seed_q_degrees', [1, 2]))
        self.common_factor_degrees = list(self.search_config.get('common_factor_degrees', [1, 2]))
        self.use_prefilter = bool(self.search_config.get('prefilter', True))
        self.use_cofactor = bool(self.search_config.get('cofactor_premultiply', True))
        self._deadline: Optional[float] = None
        self._ode_label = ""

    # -- timing --------------------------------------------------------------

    @contextmanager
    def _clock(self) -> Iterator[None]:
        outer = self._deadline is None
        if outer:
            self._deadline = self.budget.deadline() or float("inf")
        try:
            yield
        finally:
            if outer:
                self._deadline = None

    @contextmanager
    def _slice(self, share: float) -> Iterator[None]:
        """Narrow the running deadline to a share of the time left"""
        outer = self._deadline
        if outer is not None and outer != float("inf") and share < 1:
            now = time.monotonic()
            self._deadline = min(outer, now + share * max(outer - now, 0.0))
        try:
            yield
        finally:
            self._deadline = outer

    def _expired(self) -> bool:
        return self._deadline is not None and time.monotonic() > self._deadline

    def _check_time(self, label: str, tally: _Tally):
        if self._expired():
            raise BudgetExhausted(f"timed out during {label}", {"strategy": label, "attempts": tally.attempts})

    # -- one attempt ---------------------------------------------------------

    def attempt(self, ode: Ode2, p: GenPoly, q: GenPoly, label: str, degree: int,
                tally: _Tally) -> Optional[SigmaResult]:
        """Solve the determining system of one candidate shape and verify what comes back"""
        self._check_time(label, tally)
        if (not p.terms and not p.fixed) or (not q.terms and not q.fixed):
            return None
        started = time.monotonic()
        tally.attempts += 1
        R0 = ode.ring

        if p.is_fixed() and q.is_fixed():
            sigma = ratfun_normalize(p.fixed, q.fixed)
            ok = bool(verify_sigma(sigma, ode))
            self._log_attempt(label, degree, 0, 0, "found" if ok else "none", started)
            if not ok:
                return None
            empty = Assignment(values={})
            return SigmaResult(sigma, label, empty, time.monotonic() - started, True, degree, p.fixed, q.fixed)

        system = extract_system(build_determining_identity(ode, p, q))
        n_eqs, n_unknowns = system.size
        pivots = []
        if not q.is_fixed() and q.is_homogeneous() and p.is_homogeneous():
            ranked = sorted(q.terms, key=lambda t: -xyz_degree(t[1]))
            pivots = [sym.name for sym, _ in ranked]
        mode = SolveMode.PARAMETRIC if ode.params else SolveMode.NON_PARAMETRIC

        try:
            branches = solve_system(system, self.budget, mode, pivots=pivots,
                                    max_branches=BRANCHES_PER_ATTEMPT, deadline=self._deadline)
        except BudgetExhausted:
            tally.incomplete = True
            self._log_attempt(label, degree, n_unknowns, n_eqs, "budget", started)
            if self._expired():
                raise
            return None

        usable = [a for a in branches if not a.unresolved]
        for k, a in enumerate(usable):
            if self._expired():
                self._log_discarded(label, degree, len(usable) - k)
                self._log_attempt(label, degree, n_unknowns, n_eqs, "budget", started)
                self._check_time(label, tally)
            result = self._accept(ode, p, q, a, label, degree, started)
            if result is not None:
                self._log_attempt(label, degree, n_unknowns, n_eqs, "found", started)
                return result
        self._log_attempt(label, degree, n_unknowns, n_eqs, "none", started)
        return None

    def _accept(self, ode: Ode2, p: GenPoly, q: GenPoly, a: Assignment, label: str,
                degree: int, started: float) -> Optional[SigmaResult]:
        candidates = [a]
        if a.free:
            for name in a.free:
                alt = a.with_free({name: 1})
                if alt is not None:
                    candidates.append(alt)
        for cand in candidates:
            sigma, pv, qv = sigma_from(p, q, cand, ode.ring)
            if sigma is None or sigma.is_zero():
                continue
            if not self.spotcheck(sigma, ode):
                continue
            if not verify_sigma(sigma, ode):
                continue
            return SigmaResult(sigma, label, cand, time.monotonic() - started, True, degree, sigma.num, sigma.den)
        return None

    def spotcheck(self, sigma: RatFun, ode: Ode2) -> bool:
        return numeric_spotcheck(
            sigma, ode,
            trials=int(self.verify_config.get('spotcheck_trials', 5)),
            seed=int(self.verify_config.get('seed', 20240611)),
            bound=int(self.verify_config.get('coordinate_bound', 10 ** 6)),
        )

    def _log_attempt(self, label: str, degree: int, unknowns: int, equations: int,
                     outcome: str, started: float):
        elapsed = time.monotonic() - started
        self.logger.detail(f"  {label:<16} degree {degree:<2} {unknowns:>4} unknowns "
                           f"{equations:>5} equations  {outcome:<6} {elapsed:.2f}s")
        self.logger.event("attempt", ode=self._ode_label, strategy=label, degree=degree,
                          unknowns=unknowns, equations=equations, outcome=outcome,
                          elapsed=f"{elapsed:.3f}")

    def _log_discarded(self, label: str, degree: int, count: int):
        self.logger.detail(f"  {label:<16} degree {degree:<2} deadline reached, {count} unverified branches dropped")
        self.logger.event("discarded", ode=self._ode_label, strategy=label, degree=degree, branches=count)

    def _finish(self, label: str, degrees: Tuple[int, int], tally: _Tally, exhaustive: bool,
                started: float) -> NotFound:
        if tally.incomplete:
            raise BudgetExhausted(f"{label} could not finish within budget",
                                  {"strategy": label, "attempts": tally.attempts})
        return NotFound(label, degrees, tally.attempts, exhaustive, time.monotonic() - started,
                        list(tally.trivial_degrees))

    # -- entry points --------------------------------------------------------

    def solve(self, ode: Ode2, strategy: str = "auto", max_degree: Optional[int] = None) -> Outcome:
        """Run the named strategy (auto by default) on one ODE"""
        n_max = int(max_degree if max_degree is not None else self.search_config.get('max_degree', 7))
        if n_max < 1:
            raise ValueError("max degree must be at least 1")
        self._ode_label = ode.render()
        if strategy == "auto":
            return self.run_auto(ode, n_max)
        return self.run_spec(ode, StrategySpec.from_name(strategy, n_max))

    def run_spec(self, ode: Ode2, spec: StrategySpec) -> Outcome:
        kind = spec.kind
        if kind is StrategyKind.BASE:
            return self.run_asymm(ode, spec.degrees[1], spec.degrees[0])
        if kind is StrategyKind.Q_DIVIDES_N:
            return self.run_q_divides_n(ode)
        if kind is StrategyKind.Q_EQUALS_UN:
            return self.run_q_equals_uN(ode, spec.u or "z")
        if kind is StrategyKind.N_OF_X:
            return self.run_n_of_x(ode, spec.degrees[1])
        if kind is StrategyKind.COMMON_FACTOR:
            return self.run_common_factor(ode)
        if kind is StrategyKind.MONOMIAL_SEED:
            return self.run_monomial_seed(ode)
        raise ValueError(f"unhandled strategy {kind}")

    def run_auto(self, ode: Ode2, n_max: int = 7) -> Outcome:
        """Try the default plan in order and return the first verified sigma"""
        started = time.monotonic()
        plan = StrategyPlan.default(ode, n_max)
        hint = ode.trivial_symmetry_hint()
        if hint:
            self.logger.detail(f"note: {hint}")
        attempts, incomplete = 0, False
        timings: Dict[str, float] = {}
        with self._clock():
            for spec in plan.specs:
                t0 = time.monotonic()
                share = 1.0 if spec.kind is StrategyKind.BASE else self.strategy_share
                try:
                    with self._slice(share):
                        outcome = self.run_spec(ode, spec)
                except Inapplicable as e:
                    self.logger.detail(f"  {spec.label}: skipped ({e})")
                    continue
                except BudgetExhausted as e:
                    incomplete = True
                    attempts += int(e.progress.get("attempts", 0))
                    if self._expired():
                        e.progress["timings"] = timings
                        raise
                    continue
                finally:
                    timings[spec.label] = round(time.monotonic() - t0, 4)
                if isinstance(outcome, SigmaResult):
                    outcome.attempts += attempts
                    outcome.elapsed = time.monotonic() - started
                    self.logger.event("solved", ode=self._ode_label, strategy=outcome.strategy,
                                      sigma=outcome.sigma.render(), elapsed=f"{outcome.elapsed:.3f}")
                    return outcome
                attempts += outcome.attempts
        if incomplete:
            raise BudgetExhausted("no sigma found and some strategies ran out of budget",
                                  {"attempts": attempts, "timings": timings})
        self.logger.event("not_found", ode=self._ode_label, attempts=attempts)
        return NotFound("auto", (1, n_max), attempts, False, time.monotonic() - started)

    # -- base degree loop ----------------------------------------------------

    def run_asymm(self, ode: Ode2, n_max: int = 7, n_min: int = 1) -> Outcome:
        """
        Generic p_c, q_c of growing degree n (q of degree n, p of degree n
        plus the excess offset), with the prefilter and cofactor variants first
        """
        label = StrategyKind.BASE.value
        started = time.monotonic()
        tally = _Tally()
        report = degree_report(ode)
        R0 = ode.ring
        N_y, N_z = ode.N.diff(R0.gens[1]), ode.N.diff(R0.gens[2])
        cofactor = None
        if self.use_cofactor and not N_y and N_z:
            cf = ode.N.exquo(poly_gcd(ode.N, N_z))
            if xyz_degree(cf) > 0:
                cofactor = cf

        with self._clock():
            for n in range(n_min, n_max + 1):
                dp = report.p_degree(n)
                before = tally.incomplete
                tally.incomplete = False

                if self.use_prefilter and N_y and N_z:
                    try:
                        pre = self.run_prefilter_11(ode, n)
                        found = self.attempt(ode, pre.p, pre.q, f"{label}[prefilter]", n, tally)
                        if found:
                            return self._done(found, started, tally)
                    except (Inapplicable, Inconsistent):
                        pass

                if cofactor is not None and dp >= xyz_degree(cofactor):
                    table = SymbolTable()
                    p = generic_poly(R0, table, SymbolKind.A, dp - xyz_degree(cofactor), factor=cofactor)
                    q = generic_poly(R0, table, SymbolKind.B, n)
                    found = self.attempt(ode, p, q, f"{label}[cofactor]", n, tally)
                    if found:
                        return self._done(found, started, tally)

                table = SymbolTable()
                p = generic_poly(R0, table, SymbolKind.A, dp)
                q = generic_poly(R0, table, SymbolKind.B, n)
                found = self.attempt(ode, p, q, label, n, tally)
                if found:
                    return self._done(found, started, tally)
                if not tally.incomplete:
                    tally.trivial_degrees.append(n)
                    self.logger.detail(f"  degree {n}: only the trivial solution")
                tally.incomplete = tally.incomplete or before
        return self._finish(label, (n_min, n_max), tally, False, started)

    def _done(self, found: SigmaResult, started: float, tally: _Tally) -> SigmaResult:
        found.elapsed = time.monotonic() - started
        found.attempts = tally.attempts
        return found

    def run_prefilter_11(self, ode: Ode2, n: int) -> PrefilterResult:
        """
        Reduce p_c, q_c of degree n through the linear condition
        q N_y - p N_z - N P = 0 with a generic cofactor P

        The eliminated coefficients become linear combinations of the ones
        left free; p_c and q_c are rebuilt over those.
        """
        R0 = ode.ring
        N = ode.N
        N_y, N_z = N.diff(R0.gens[1]), N.diff(R0.gens[2])
        if not N_y or not N_z:
            raise Inapplicable("the prefilter needs N to depend on y and y'")
        report = degree_report(ode)
        dp, dq = report.p_degree(n), n
        table = SymbolTable()
        p = generic_poly(R0, table, SymbolKind.A, dp)
        q = generic_poly(R0, table, SymbolKind.B, dq)
        P = generic_poly(R0, table, SymbolKind.C, max(dp, dq))
        unknowns = collect_unknowns(p, q, P)
        names = tuple(s.name for s in unknowns)
        R1, Ru = unknown_rings(names, ode.params)
        poly = q.to_ring(R1) * N_y.set_ring(R1) - p.to_ring(R1) * N_z.set_ring(R1) - N.set_ring(R1) * P.to_ring(R1)
        system = linear_system(poly, unknowns, ode.params)
        mode = SolveMode.PARAMETRIC if ode.params else SolveMode.NON_PARAMETRIC
        reduced, partial = propagate_linear(system, mode, PREFILTER_PRIORITY)
        if reduced.equations:
            raise Inapplicable("the prefilter system did not reduce to a substitution")

        free = [s for s in unknowns if s.name in partial.free]

        def reexpress(gp: GenPoly) -> GenPoly:
            parts: Dict[str, List[Tuple[Poly, Poly, Poly]]] = {}
            for sym, basis in gp.terms:
                v = partial.values.get(sym.name)
                if v is None:
                    parts.setdefault(sym.name, []).append((Ru.one, Ru.one, basis))
                    continue
                for s in free:
                    c = v.num.coeff_wrt(gen_index(Ru, s.name), 1)
                    if c:
                        parts.setdefault(s.name, []).append((c, v.den, basis))
            terms = []
            for s in free:
                entries = parts.get(s.name)
                if not entries:
                    continue
                L = Ru.one
                for _, d, _ in entries:
                    L = L * d.exquo(poly_gcd(L, d))
                total = R0.zero
                for c, d, basis in entries:
                    total += (c * L.exquo(d)).set_ring(R0) * basis
                if total:
                    terms.append((s, total))
            return GenPoly(R0.zero, terms)

        p2, q2 = reexpress(p), reexpress(q)
        if not p2.terms or not q2.terms:
            raise Inapplicable("the prefilter leaves p or q empty")
        after = len(collect_unknowns(p2, q2))
        self.logger.detail(f"  prefilter degree {n}: {len(p.terms) + len(q.terms)} -> {after} coefficients")
        return PrefilterResult(partial, p2, q2, len(p.terms) + len(q.terms), after)

    # -- shapes with q tied to N ---------------------------------------------

    def run_q_divides_n(self, ode: Ode2) -> Outcome:
        """
        q ranges over the monic divisors of N, p generic up to the bound for
        q = N lowered by deg N - deg q; exhaustive within those bounds unless
        max_divisors cut the divisor list short
        """
        label = StrategyKind.Q_DIVIDES_N.value
        started = time.monotonic()
        tally = _Tally()
        bound = degree_report(ode).full_bound()
        R0 = ode.ring
        divisors = monic_divisors(ode.N)
        exhaustive = len(divisors) <= self.max_divisors
        if not exhaustive:
            divisors = monic_divisors(ode.N, self.max_divisors)
        with self._clock():
            for f in divisors:
                dp = bound - (ode.deg_N - xyz_degree(f))
                if dp < 0:
                    continue
                p = generic_poly(R0, SymbolTable(), SymbolKind.A, dp)
                found = self.attempt(ode, p, GenPoly.of(f), label, xyz_degree(f), tally)
                if found:
                    return self._done(found, started, tally)
        return self._finish(label, (bound, bound), tally, exhaustive, started)

    def run_q_equals_uN(self, ode: Ode2, u: str) -> Outcome:
        """q = u N fixed with u one of x, y, y'; p generic up to the q = N bound plus one"""
        label = f"{StrategyKind.Q_EQUALS_UN.value}:{u}"
        started = time.monotonic()
        tally = _Tally()
        R0 = ode.ring
        gen = R0.gens[{"x": 0, "y": 1, "z": 2, "y'": 2}[u]]
        dp = degree_report(ode).full_bound() + 1
        with self._clock():
            p = generic_poly(R0, SymbolTable(), SymbolKind.A, dp)
            found = self.attempt(ode, p, GenPoly.of(gen * ode.N), label, xyz_degree(ode.N) + 1, tally)
            if found:
                return self._done(found, started, tally)
        return self._finish(label, (dp, dp), tally, True, started)

    def run_n_of_x(self, ode: Ode2, n_max: int = 7) -> Outcome:
        """Base loop with q_c free of y' when N is a function of x alone"""
        if depends_on(ode.N, "y") or depends_on(ode.N, "z"):
            raise Inapplicable("N depends on y or y'")
        label = StrategyKind.N_OF_X.value
        started = time.monotonic()
        tally = _Tally()
        report = degree_report(ode)
        R0 = ode.ring
        with self._clock():
            for n in range(1, n_max + 1):
                table = SymbolTable()
                p = generic_poly(R0, table, SymbolKind.A, report.p_degree(n))
                q = generic_poly(R0, table, SymbolKind.B, n, variables=("x", "y"))
                found = self.attempt(ode, p, q, label, n, tally)
                if found:
                    return self._done(found, started, tally)
        return self._finish(label, (1, n_max), tally, False, started)

    def run_common_factor(self, ode: Ode2) -> Outcome:
        """q = f * generic(d) for nontrivial divisors f of N"""
        label = StrategyKind.COMMON_FACTOR.value
        started = time.monotonic()
        tally = _Tally()
        report = degree_report(ode)
        R0 = ode.ring
        divisors = [f for f in monic_divisors(ode.N, self.max_divisors) if xyz_degree(f) > 0]
        if not divisors:
            raise Inapplicable("N has no nontrivial divisor")
        with self._clock():
            for f in divisors:
                for d in self.common_factor_degrees:
                    table = SymbolTable()
                    dq = xyz_degree(f) + d
                    p = generic_poly(R0, table, SymbolKind.A, report.p_degree(dq))
                    q = generic_poly(R0, table, SymbolKind.B, d, factor=f)
                    found = self.attempt(ode, p, q, label, dq, tally)
                    if found:
                        return self._done(found, started, tally)
        degrees = (min(self.common_factor_degrees, default=1), max(self.common_factor_degrees, default=1))
        return self._finish(label, degrees, tally, False, started)

    def run_monomial_seed(self, ode: Ode2) -> Outcome:
        """
        p_c on exactly the monomials of M, then of M_z; q_c is N, a proper
        divisor of N times a generic factor, or generic of low degree
        """
        label = StrategyKind.MONOMIAL_SEED.value
        started = time.monotonic()
        tally = _Tally()
        R0 = ode.ring
        M_z = ode.M.diff(R0.gens[2])
        supports = []
        for s in (xyz_support(ode.M), xyz_support(M_z)):
            if s and s not in supports:
                supports.append(s)
        if not supports:
            raise Inapplicable("M has no monomials to seed from")
        proper = [f for f in monic_divisors(ode.N, self.max_divisors)[:-1] if xyz_degree(f) > 0]

        with self._clock():
            for support in supports:
                shapes: List[Tuple[int, Optional[Poly], int]] = [(xyz_degree(ode.N), ode.N, -1)]
                shapes += [(xyz_degree(f) + d, f, d) for f in proper for d in self.seed_q_degrees]
                shapes += [(d, None, d) for d in self.seed_q_degrees]
                for degree, f, d in shapes:
                    table = SymbolTable()
                    p = seeded_poly(R0, table, SymbolKind.A, support)
                    if d < 0:
                        q = GenPoly.of(f)
                    else:
                        q = generic_poly(R0, table, SymbolKind.B, d, factor=f)
                    found = self.attempt(ode, p, q, label, degree, tally)
                    if found:
                        return self._done(found, started, tally)
        return self._finish(label, (1, max(self.seed_q_degrees, default=1)), tally, False, started)

    # -- parametric analysis -------------------------------------------------

    def analyze(self, ode: Ode2, nonzero: Sequence[str] = (), strategy: str = "base",
                max_degree: Optional[int] = None) -> Union[AnalysisReport, NotFound]:
        """
        Solve for the candidate coefficients and the parameters together

        Degrees grow until some branch appears. Branches without constraints
        are reported as unconstrained; constrained branches that specialise
        an unconstrained or a more general constrained sigma are dropped.
        """
        if not ode.params:
            raise ValueError("analysis needs an ODE with parameters")
        if strategy not in (StrategyKind.BASE.value, StrategyKind.N_OF_X.value):
            raise ValueError("analysis runs with the base or n-of-x shapes")
        if strategy == StrategyKind.N_OF_X.value and (depends_on(ode.N, "y") or depends_on(ode.N, "z")):
            raise Inapplicable("N depends on y or y'")
        n_max = int(max_degree if max_degree is not None else self.search_config.get('max_degree', 7))
        if n_max < 1:
            raise ValueError("max degree must be at least 1")
        self._ode_label = ode.render()
        started = time.monotonic()
        report = degree_report(ode)
        R0 = ode.ring
        side = [parse_side_condition(text, R0) for text in nonzero]
        tally = _Tally()
        label = f"analyze:{strategy}"

        with self._clock():
            for n in range(1, n_max + 1):
                self._check_time(label, tally)
                table = SymbolTable()
                p = generic_poly(R0, table, SymbolKind.A, report.p_degree(n))
                variables = ("x", "y") if strategy == StrategyKind.N_OF_X.value else ("x", "y", "z")
                q = generic_poly(R0, table, SymbolKind.B, n, variables=variables)
                system = extract_system(build_determining_identity(ode, p, q))
                Ru = system.ring
                side_u = [s.num.set_ring(Ru) for s in side if not s.is_zero()]
                pivots = [sym.name for sym, _ in sorted(q.terms, key=lambda t: -xyz_degree(t[1]))]
                t0 = time.monotonic()
                tally.attempts += 1
                try:
                    branches = solve_system(system, self.budget, SolveMode.ANALYSIS, pivots=pivots,
                                            nonzero=side_u, deadline=self._deadline)
                except BudgetExhausted:
                    self._log_attempt(label, n, len(system.unknowns), len(system.equations), "budget", t0)
                    raise
                outcome = self._classify(ode, p, q, branches, n, started)
                self._log_attempt(label, n, len(system.unknowns), len(system.equations),
                                  "found" if outcome else "none", t0)
                if outcome:
                    return outcome
        return NotFound(label, (1, n_max), tally.attempts, False, time.monotonic() - started)

    def _classify(self, ode: Ode2, p: GenPoly, q: GenPoly, branches: Sequence[Assignment],
                  degree: int, started: float) -> Optional[AnalysisReport]:
        R0 = ode.ring
        found: List[AnalysisBranch] = []
        unresolved: Dict[Tuple, UnresolvedAlgebraic] = {}
        for a in branches:
            if a.unresolved:
                u = UnresolvedAlgebraic.from_assignment(a)
                unresolved[(u.relations, u.constraints)] = u
                continue
            branch = self._branch(ode, p, q, a, R0)
            if branch is not None:
                found.append(branch)

        unique: Dict[Tuple, AnalysisBranch] = {}
        for b in found:
            unique.setdefault(b.key(), b)
        free = [b for b in unique.values() if not b.constrained]
        constrained = [b for b in unique.values() if b.constrained]

        def subsumed(b: AnalysisBranch) -> bool:
            for u in free:
                if same_function(substitute_constraints(u.sigma, b.constraints), b.sigma):
                    return True
            for other in constrained:
                if other is b or other.relations or b.relations:
                    continue
                if len(other.constraints) >= len(b.constraints):
                    continue
                if constraints_imply(b.constraints, other.constraints, R0) and same_function(
                        substitute_constraints(other.sigma, b.constraints), b.sigma):
                    return True
            return False

        kept = [b for b in constrained if not subsumed(b)]
        if not free and not kept and not unresolved:
            return None
        return AnalysisReport(
            degree=degree,
            unconstrained=sorted(free, key=AnalysisBranch.key),
            constrained=sorted(kept, key=AnalysisBranch.key),
            unresolved=[unresolved[k] for k in sorted(unresolved)],
            elapsed=time.monotonic() - started,
        )

    def _branch(self, ode: Ode2, p: GenPoly, q: GenPoly, a: Assignment,
                R0: PolyRing) -> Optional[AnalysisBranch]:
        constraints = tuple(
            (name, ratfun_normalize(v.num.set_ring(R0), v.den.set_ring(R0))) for name, v in a.constraints)
        relations = tuple(r.set_ring(R0) for r in a.relations)
        candidates = [a] + [alt for alt in (a.with_free({name: 1}) for name in a.free) if alt is not None]
        for cand in candidates:
            sigma, _, _ = sigma_from(p, q, cand, R0)
            if sigma is None or sigma.is_zero():
                continue
            try:
                sigma = substitute_constraints(sigma, constraints)
            except ZeroDenominator:
                continue
            verified = self._verify_branch(ode, sigma, constraints, relations)
            return AnalysisBranch(sigma, constraints, relations, verified)
        return None

    def _verify_branch(self, ode: Ode2, sigma: RatFun, constraints: Sequence[Tuple[str, RatFun]],
                       relations: Sequence[Poly]) -> bool:
        try:
            special = ode.specialize(dict(constraints)) if constraints else ode
            Rs = special.ring
            s = ratfun_normalize(sigma.num.set_ring(Rs), sigma.den.set_ring(Rs))
            rels = [r.set_ring(Rs) for r in relations]
            return bool(verify_sigma(s, special, rels))
        except (ZeroDenominator, ValueError, KeyError):
            return False
