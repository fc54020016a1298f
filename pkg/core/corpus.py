"""
Corpus Runner
Load regression corpora of ODEs with known symmetries, run the search on
every entry and collect a status report
"""

import copy
import fnmatch
import json
import re
import time
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import dataclass, field
from datetime import datetime
from enum import Enum
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Tuple

import pandas as pd
from rich.progress import BarColumn, Progress, TextColumn, TimeElapsedColumn
from sympy.polys.rings import PolyRing

from core import groebner as gb
from core.arith import Poly, RatFun, gen_index, ratfun_normalize, same_function
from core.errors import BudgetExhausted, CorpusFormatError, SymseekError
from core.odemodel import Ode2, parse_expression, parse_ode
from core.runlog import RunLogger
from core.strategies import (
    AnalysisBranch, AnalysisReport, SigmaResult, SymmetrySearch, substitute_constraints,
)
from core.verify import parse_darboux, verify_first_integral, verify_nu, verify_sigma

ENTRY_FIELDS = {
    "id", "phi", "expected_sigma", "expected_nu", "params", "side_conditions", "notes",
    "role", "mode", "strategy", "max_degree", "expected_branches", "expected_unresolved",
    "first_integrals",
}
MODES = ("search", "analysis")
ROLES = ("table", "extra")


class EntryStatus(Enum):
    MATCH = "Match"
    VERIFIED_DIFFERENT = "VerifiedDifferent"
    NOT_FOUND = "NotFound"
    ERROR = "Error"


# ---------------------------------------------------------------------------
# Entries
# ---------------------------------------------------------------------------

def parse_constraint(text: str, R: PolyRing) -> Tuple[str, RatFun]:
    """'b = 6/25*a^2' as (name, value)"""
    name, sep, value = text.partition("=")
    name = name.strip()
    if not sep or not value.strip():
        raise CorpusFormatError(f"constraint {text!r} is not of the form 'param = expr'")
    if name not in [str(s) for s in R.symbols[3:]]:
        raise CorpusFormatError(f"constraint {text!r} does not name a parameter")
    return name, parse_expression(value.strip(), R)


def constraint_ideal(constraints: Iterable[Tuple[str, RatFun]], relations: Iterable[Poly],
                     R: PolyRing) -> List[Poly]:
    """Groebner basis of the ideal cut out by name = value constraints and relations"""
    gens = []
    for name, value in constraints:
        gens.append(R.gens[gen_index(R, name)] * value.den.set_ring(R) - value.num.set_ring(R))
    gens += [r.set_ring(R) for r in relations]
    return gb.buchberger(gens)


def same_ideal(F: List[Poly], G: List[Poly]) -> bool:
    return (all(not gb.normal_form(f, G) for f in F)
            and all(not gb.normal_form(g, F) for g in G))


@dataclass
class CorpusEntry:
    id: str
    phi: str
    expected_sigma: Optional[str] = None
    expected_nu: Optional[str] = None
    params: List[str] = field(default_factory=list)
    side_conditions: List[str] = field(default_factory=list)
    notes: str = ""
    role: str = "table"
    mode: str = "search"
    strategy: Optional[str] = None
    max_degree: Optional[int] = None
    expected_branches: List[Dict] = field(default_factory=list)
    expected_unresolved: List[str] = field(default_factory=list)
    first_integrals: List[str] = field(default_factory=list)

    @classmethod
    def from_json(cls, data: Dict, where: str = "") -> "CorpusEntry":
        """
        Validate one JSON object

        Raises CorpusFormatError on missing or unknown fields and on values
        of the wrong kind. Expressions are only parsed later, by check().
        """
        if not isinstance(data, dict):
            raise CorpusFormatError(f"{where}: entry must be an object")
        unknown = set(data) - ENTRY_FIELDS
        if unknown:
            raise CorpusFormatError(f"{where}: unknown fields {sorted(unknown)}")
        for key in ("id", "phi"):
            if not isinstance(data.get(key), str) or not data[key].strip():
                raise CorpusFormatError(f"{where}: field {key!r} must be a non-empty string")
        for key in ("params", "side_conditions", "expected_unresolved", "first_integrals"):
            value = data.get(key, [])
            if not isinstance(value, list) or not all(isinstance(v, str) for v in value):
                raise CorpusFormatError(f"{data['id']}: field {key!r} must be a list of strings")
        if data.get("mode", "search") not in MODES:
            raise CorpusFormatError(f"{data['id']}: mode must be one of {MODES}")
        if data.get("role", "table") not in ROLES:
            raise CorpusFormatError(f"{data['id']}: role must be one of {ROLES}")
        max_degree = data.get("max_degree")
        if max_degree is not None and (not isinstance(max_degree, int) or max_degree < 1):
            raise CorpusFormatError(f"{data['id']}: max_degree must be a positive integer")
        branches = data.get("expected_branches", [])
        if not isinstance(branches, list) or not all(
                isinstance(b, dict) and isinstance(b.get("sigma"), str)
                and isinstance(b.get("constraints", []), list) for b in branches):
            raise CorpusFormatError(
                f"{data['id']}: expected_branches must hold objects with 'constraints' and 'sigma'")
        return cls(
            id=data["id"],
            phi=data["phi"],
            expected_sigma=data.get("expected_sigma"),
            expected_nu=data.get("expected_nu"),
            params=list(data.get("params", [])),
            side_conditions=list(data.get("side_conditions", [])),
            notes=data.get("notes", ""),
            role=data.get("role", "table"),
            mode=data.get("mode", "search"),
            strategy=data.get("strategy"),
            max_degree=max_degree,
            expected_branches=[dict(b) for b in branches],
            expected_unresolved=list(data.get("expected_unresolved", [])),
            first_integrals=list(data.get("first_integrals", [])),
        )

    def to_json(self) -> Dict:
        data = {"id": self.id, "phi": self.phi}
        optional = {
            "expected_sigma": self.expected_sigma,
            "expected_nu": self.expected_nu,
            "params": self.params,
            "side_conditions": self.side_conditions,
            "notes": self.notes,
            "strategy": self.strategy,
            "max_degree": self.max_degree,
            "expected_branches": self.expected_branches,
            "expected_unresolved": self.expected_unresolved,
            "first_integrals": self.first_integrals,
        }
        data.update({k: v for k, v in optional.items() if v})
        if self.role != "table":
            data["role"] = self.role
        if self.mode != "search":
            data["mode"] = self.mode
        return data

    def ode(self) -> Ode2:
        return parse_ode(self.phi)

    def sigma(self, ode: Optional[Ode2] = None) -> Optional[RatFun]:
        if not self.expected_sigma:
            return None
        ode = ode or self.ode()
        return parse_expression(self.expected_sigma, ode.ring)

    def branch_expectations(self, R: PolyRing) -> List[Tuple[List[Tuple[str, RatFun]], RatFun]]:
        out = []
        for b in self.expected_branches:
            constraints = [parse_constraint(c, R) for c in b.get("constraints", [])]
            out.append((constraints, parse_expression(b["sigma"], R)))
        return out

    def check(self) -> List[str]:
        """
        Self-consistency of the stored data

        Returns the problems found: expected sigma, nu and first integrals
        must verify against phi, declared params must match the ones used.
        """
        problems = []
        try:
            ode = self.ode()
        except SymseekError as e:
            return [f"phi does not parse: {e}"]
        if set(self.params) != set(ode.params):
            problems.append(f"declared params {sorted(self.params)} but phi uses {list(ode.params)}")

        sigma = None
        try:
            sigma = self.sigma(ode)
            if sigma is not None and not verify_sigma(sigma, ode):
                problems.append("expected sigma does not satisfy the determining equation")
        except SymseekError as e:
            problems.append(f"expected sigma does not parse: {e}")
            sigma = None

        if self.expected_nu:
            try:
                nu = parse_darboux(self.expected_nu, ode.ring)
                if sigma is not None and not verify_nu(nu, sigma, ode):
                    problems.append("expected nu does not give the expected sigma")
            except SymseekError as e:
                problems.append(f"expected nu is not usable: {e}")

        for text in self.first_integrals:
            try:
                if not verify_first_integral(parse_darboux(text, ode.ring), ode):
                    problems.append(f"first integral {text!r} is not conserved")
            except SymseekError as e:
                problems.append(f"first integral {text!r} is not usable: {e}")

        try:
            for constraints, branch_sigma in self.branch_expectations(ode.ring):
                special = ode.specialize(dict(constraints))
                Rs = special.ring
                branch_sigma = substitute_constraints(branch_sigma, constraints)
                s = ratfun_normalize(branch_sigma.num.set_ring(Rs), branch_sigma.den.set_ring(Rs))
                if not verify_sigma(s, special):
                    problems.append(f"expected branch {constraints_text(constraints)} does not verify")
        except (SymseekError, ValueError) as e:
            problems.append(f"expected branch is not usable: {e}")
        return problems


def constraints_text(constraints: Iterable[Tuple[str, RatFun]]) -> str:
    return ", ".join(f"{name} = {value.render()}" for name, value in constraints) or "(none)"


def natural_key(entry_id: str) -> Tuple:
    """'kamke-90' sorts before 'kamke-156'"""
    return tuple(int(part) if part.isdigit() else part for part in re.split(r"(\d+)", entry_id))


def load_corpus(path, pattern: Optional[str] = None) -> List[CorpusEntry]:
    """
    Read a JSON array of entries, optionally keeping ids that match a glob

    Raises CorpusFormatError for unreadable files, bad JSON, malformed
    entries and duplicate ids.
    """
    path = Path(path)
    try:
        with open(path, 'r', encoding='utf-8') as f:
            data = json.load(f)
    except FileNotFoundError:
        raise CorpusFormatError(f"corpus file {path} not found")
    except (OSError, json.JSONDecodeError) as e:
        raise CorpusFormatError(f"cannot read corpus {path}: {e}")
    if not isinstance(data, list):
        raise CorpusFormatError(f"{path}: a corpus is a JSON array of entries")

    entries = []
    seen = set()
    for i, item in enumerate(data):
        entry = CorpusEntry.from_json(item, where=f"{path.name}[{i}]")
        if entry.id in seen:
            raise CorpusFormatError(f"{path.name}: duplicate entry id {entry.id!r}")
        seen.add(entry.id)
        entries.append(entry)
    if pattern:
        entries = [e for e in entries if fnmatch.fnmatchcase(e.id, pattern)]
    return entries


# ---------------------------------------------------------------------------
# Reports
# ---------------------------------------------------------------------------

@dataclass
class EntryReport:
    id: str
    status: EntryStatus
    strategy: Optional[str] = None
    elapsed: float = 0.0
    sigma: Optional[str] = None
    verified: Optional[bool] = None
    message: str = ""
    role: str = "table"
    problems: List[str] = field(default_factory=list)
    branches: List[Dict] = field(default_factory=list)

    def to_json(self) -> Dict:
        return {
            "id": self.id,
            "status": self.status.value,
            "strategy": self.strategy,
            "elapsed": round(self.elapsed, 4),
            "sigma": self.sigma,
            "verified": self.verified,
            "message": self.message,
            "role": self.role,
            "problems": list(self.problems),
            "branches": list(self.branches),
        }

    @classmethod
    def from_json(cls, data: Dict) -> "EntryReport":
        return cls(
            id=data["id"],
            status=EntryStatus(data["status"]),
            strategy=data.get("strategy"),
            elapsed=float(data.get("elapsed", 0.0)),
            sigma=data.get("sigma"),
            verified=data.get("verified"),
            message=data.get("message", ""),
            role=data.get("role", "table"),
            problems=list(data.get("problems", [])),
            branches=list(data.get("branches", [])),
        )


@dataclass
class RunReport:
    corpus: str
    entries: List[EntryReport]
    created: str = field(default_factory=lambda: datetime.now().isoformat(timespec='seconds'))

    def to_json(self) -> Dict:
        return {
            "corpus": self.corpus,
            "created": self.created,
            "summary": self.summary(),
            "entries": [e.to_json() for e in self.entries],
        }

    @classmethod
    def from_json(cls, data: Dict) -> "RunReport":
        return cls(
            corpus=data["corpus"],
            entries=[EntryReport.from_json(e) for e in data.get("entries", [])],
            created=data.get("created", ""),
        )

    def to_frame(self) -> pd.DataFrame:
        columns = ["id", "status", "strategy", "elapsed", "sigma", "verified", "role"]
        rows = [{**e.to_json(), "status": e.status.value} for e in self.entries]
        return pd.DataFrame(rows, columns=columns)

    def summary(self) -> Dict[str, int]:
        """Entry count per status, every status listed"""
        counts = self.to_frame()["status"].value_counts()
        return {s.value: int(counts.get(s.value, 0)) for s in EntryStatus}

    def timing(self) -> Dict[str, float]:
        df = self.to_frame()
        if df.empty:
            return {"total": 0.0, "mean": 0.0, "max": 0.0}
        return {
            "total": float(df["elapsed"].sum()),
            "mean": float(df["elapsed"].mean()),
            "max": float(df["elapsed"].max()),
        }

    @property
    def exit_code(self) -> int:
        """1 if any entry errored, else 3 if any was not found, else 0"""
        statuses = {e.status for e in self.entries}
        if EntryStatus.ERROR in statuses:
            return 1
        if EntryStatus.NOT_FOUND in statuses:
            return 3
        return 0


# ---------------------------------------------------------------------------
# Running entries
# ---------------------------------------------------------------------------

def entry_config(config: Dict) -> Dict:
    """Copy of config whose budget timeout is the per-entry timeout"""
    cfg = copy.deepcopy(config)
    timeout = cfg.get('corpus', {}).get('entry_timeout')
    if timeout is not None:
        cfg.setdefault('budget', {})['timeout'] = timeout
    return cfg


def _run_search(entry: CorpusEntry, ode: Ode2, search: SymmetrySearch, report: EntryReport):
    outcome = search.solve(ode, entry.strategy or search.search_config.get('strategy', 'auto'),
                           entry.max_degree)
    report.strategy = outcome.strategy
    if not isinstance(outcome, SigmaResult):
        report.status = EntryStatus.NOT_FOUND
        scope = "exhaustive" if outcome.exhaustive else "partial"
        report.message = f"no sigma up to degree {outcome.degrees[1]} ({scope} search)"
        return
    report.sigma = outcome.sigma.render()
    report.verified = bool(verify_sigma(outcome.sigma, ode))
    expected = entry.sigma(ode)
    if not report.verified:
        report.status = EntryStatus.ERROR
        report.message = "found sigma fails verification"
    elif expected is not None and same_function(outcome.sigma, expected):
        report.status = EntryStatus.MATCH
    else:
        report.status = EntryStatus.VERIFIED_DIFFERENT
        if expected is None:
            report.message = "no expected sigma to compare with"


def branch_matches(constraints: List[Tuple[str, RatFun]], sigma: RatFun, branch: AnalysisBranch,
                   R: PolyRing) -> bool:
    """An expected (constraints, sigma) pair describes the reported branch"""
    expected = constraint_ideal(constraints, (), R)
    found = constraint_ideal(branch.constraints, branch.relations, R)
    if not same_ideal(expected, found):
        return False
    diff = sigma - branch.sigma
    return not gb.normal_form(diff.num, expected)


def _relation_poly(text: str, R: PolyRing) -> Optional[Poly]:
    """Monic form of a relation; None when it mentions anything besides the ODE's parameters"""
    lhs, _, rhs = text.partition("=")
    try:
        value = parse_expression(lhs.strip(), R)
        if rhs.strip():
            value = value - parse_expression(rhs.strip(), R)
    except SymseekError:
        return None
    return value.num.monic() if value.num else value.num


def _run_analysis(entry: CorpusEntry, ode: Ode2, search: SymmetrySearch, report: EntryReport):
    outcome = search.analyze(ode, nonzero=entry.side_conditions, strategy=entry.strategy or "base",
                             max_degree=entry.max_degree)
    report.strategy = f"analyze:{entry.strategy or 'base'}"
    if not isinstance(outcome, AnalysisReport):
        report.status = EntryStatus.NOT_FOUND
        report.message = f"no branch up to degree {outcome.degrees[1]}"
        return

    R = ode.ring
    branches = outcome.unconstrained + outcome.constrained
    report.branches = [b.to_json() for b in branches]
    report.branches += [{"unresolved": list(u.relations), "constraints": list(u.constraints)}
                        for u in outcome.unresolved]
    report.verified = all(b.verified for b in branches)

    missing = []
    for constraints, sigma in entry.branch_expectations(R):
        if not any(branch_matches(constraints, sigma, b, R) for b in branches):
            missing.append(constraints_text(constraints))
    reported = [_relation_poly(r, R) for u in outcome.unresolved for r in u.relations]
    for text in entry.expected_unresolved:
        expected = _relation_poly(text, R)
        if expected is None or expected not in reported:
            missing.append(f"unresolved {text}")

    if not missing:
        report.status = EntryStatus.MATCH
    elif branches and report.verified:
        report.status = EntryStatus.VERIFIED_DIFFERENT
        report.message = "expected but not reported: " + "; ".join(missing)
    else:
        report.status = EntryStatus.NOT_FOUND
        report.message = "expected but not reported: " + "; ".join(missing)


def run_entry(data: Dict, config: Dict) -> EntryReport:
    """
    Run one entry from its JSON form

    Module level so that worker processes can pickle it. Budget exhaustion
    is reported as NotFound. An entry whose stored data fails its own
    consistency check, or any other failure, is an Error.
    """
    entry = CorpusEntry.from_json(data)
    cfg = entry_config(config)
    report = EntryReport(entry.id, EntryStatus.ERROR, role=entry.role)
    started = time.monotonic()
    logger = RunLogger(cfg, quiet=True)
    try:
        report.problems = entry.check()
        ode = entry.ode()
        search = SymmetrySearch(cfg, logger)
        if report.problems:
            report.message = "inconsistent entry: " + "; ".join(report.problems)
        elif entry.mode == "analysis":
            _run_analysis(entry, ode, search, report)
        else:
            _run_search(entry, ode, search, report)
    except BudgetExhausted as e:
        report.status = EntryStatus.NOT_FOUND
        report.message = f"budget exhausted: {e}"
    except Exception as e:
        report.status = EntryStatus.ERROR
        report.message = f"{type(e).__name__}: {e}"
    report.elapsed = time.monotonic() - started
    logger.event("corpus_entry", id=entry.id, status=report.status.value,
                 strategy=report.strategy or "-", elapsed=f"{report.elapsed:.3f}")
    return report


class CorpusRunner:
    """Run a corpus in-process or across a worker pool"""

    def __init__(self, config: Dict, logger: Optional[RunLogger] = None):
        """
        Initialize the runner

        Args:
            config: Configuration dictionary with a 'corpus' section
            logger: Console and log file channel
        """
        self.config = config
        self.corpus_config = config.get('corpus', {})
        self.logger = logger or RunLogger(config)

    def run(self, entries: List[CorpusEntry], name: str = "", jobs: Optional[int] = None,
            show_progress: bool = True) -> RunReport:
        jobs = int(jobs or self.corpus_config.get('jobs', 1))
        if jobs < 1:
            raise ValueError("jobs must be at least 1")
        payloads = [e.to_json() for e in entries]
        results: List[EntryReport] = []

        progress = Progress(
            TextColumn("[cyan]{task.description}"),
            BarColumn(),
            TextColumn("{task.completed}/{task.total}"),
            TimeElapsedColumn(),
            console=self.logger.console,
            disable=not show_progress,
        )
        self.logger.event("corpus_start", corpus=name, entries=len(entries), jobs=jobs)
        with progress:
            task = progress.add_task(name or "corpus", total=len(payloads))
            if jobs == 1 or len(payloads) <= 1:
                for data in payloads:
                    progress.update(task, description=data["id"])
                    results.append(run_entry(data, self.config))
                    progress.advance(task)
            else:
                with ProcessPoolExecutor(max_workers=jobs) as pool:
                    futures = {pool.submit(run_entry, data, self.config): data["id"] for data in payloads}
                    for future in as_completed(futures):
                        try:
                            results.append(future.result())
                        except Exception as e:
                            results.append(EntryReport(futures[future], EntryStatus.ERROR,
                                                       message=f"worker failed: {e}"))
                        progress.advance(task)

        results.sort(key=lambda r: natural_key(r.id))
        report = RunReport(name, results)
        self.logger.event("corpus_done", corpus=name, **report.summary())
        return report
