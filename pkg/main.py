#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
symseek - Main CLI
Lie symmetries of rational second-order ODEs through sigma = p/q

Usage:
    python main.py solve "y'' = (y'-1)*(x^4*y'+2*x^3*y-x^2*y+y')/((x^2*y-1)*x^2)"
    python main.py verify sigma "y'' = -y'*(y'-1)/(x+y)" "y'*(y'-1)/((x+y)*(1+y'))"
    python main.py corpus data/kamke.json --jobs 4
    python main.py analyze "y'' = a*y' + b*y - c*y^2" --params a,b,c --nonzero c
"""

import argparse
import io
import json
import os
import sys
from pathlib import Path
from typing import Dict, List, Optional

import yaml

# Fix Windows encoding issues
if sys.platform == "win32":
    sys.stdout = io.TextIOWrapper(sys.stdout.buffer, encoding='utf-8', errors='replace')
    sys.stderr = io.TextIOWrapper(sys.stderr.buffer, encoding='utf-8', errors='replace')

from rich import box
from rich.console import Console
from rich.markup import escape
from rich.panel import Panel
from rich.table import Table

from core.corpus import CorpusRunner, EntryStatus, RunReport, load_corpus
from core.errors import (
    BudgetExhausted, CorpusFormatError, ExpressionSyntaxError, Inapplicable,
    NotDarbouxRepresentable, NotRational, SymseekError, ZeroDenominator,
)
from core.odemodel import Ode2, degree_report, parse_expression, parse_ode
from core.runlog import RunLogger
from core.strategies import AnalysisBranch, AnalysisReport, SigmaResult, SymmetrySearch
from core.verify import (
    SymmetryRepr, mu_log_derivative, parse_darboux, residual_summary, verify_first_integral,
    verify_mu, verify_nu, verify_sigma,
)

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_BUDGET = 2
EXIT_NOT_FOUND = 3

STATUS_STYLES = {
    EntryStatus.MATCH: "bold green",
    EntryStatus.VERIFIED_DIFFERENT: "green",
    EntryStatus.NOT_FOUND: "yellow",
    EntryStatus.ERROR: "bold red",
}


def split_list(values: Optional[List[str]]) -> List[str]:
    """['a,b', 'c'] -> ['a', 'b', 'c']"""
    out = []
    for value in values or []:
        out += [v.strip() for v in value.split(",") if v.strip()]
    return out


class SymseekApp:
    """Configuration, logging and the four commands"""

    def __init__(self, config_path: str = "config.yaml", quiet: bool = False):
        """
        Initialize the application

        Args:
            config_path: Path to configuration file
            quiet: Suppress progress and status messages on stderr
        """
        self.config = self._load_config(config_path)
        self._apply_environment()
        self.console = Console()
        self.quiet = quiet
        self.logger = RunLogger(self.config, quiet=quiet)

    def _load_config(self, config_path: str) -> Dict:
        """Load configuration from YAML file, merged over the defaults"""
        config = self._default_config()
        try:
            with open(config_path, 'r', encoding='utf-8') as f:
                user = yaml.safe_load(f) or {}
        except FileNotFoundError:
            print(f"warning: config file not found: {config_path}, using defaults", file=sys.stderr)
            return config
        except Exception as e:
            print(f"warning: error loading config: {e}, using defaults", file=sys.stderr)
            return config
        if not isinstance(user, dict):
            print(f"warning: {config_path} is not a mapping, using defaults", file=sys.stderr)
            return config
        for section, values in user.items():
            if isinstance(values, dict) and isinstance(config.get(section), dict):
                config[section].update(values)
            else:
                config[section] = values
        return config

    def _default_config(self) -> Dict:
        """Return default configuration"""
        return {
            'search': {
                'max_degree': 7,
                'strategy': 'auto',
                'seed_q_degrees': [1, 2],
                'common_factor_degrees': [1, 2],
                'max_divisors': 32,
                'strategy_share': 0.3,
                'prefilter': True,
                'cofactor_premultiply': True,
            },
            'budget': {
                'timeout': 60,
                'max_case_splits': 20000,
                'max_groebner_basis_size': 400,
            },
            'verify': {
                'spotcheck_trials': 5,
                'seed': 20240611,
                'coordinate_bound': 10 ** 6,
            },
            'corpus': {
                'jobs': 1,
                'entry_timeout': 60,
                'data_dir': 'data',
            },
            'logging': {
                'log_dir': 'logs',
                'to_file': True,
                'verbose': False,
            },
        }

    def _apply_environment(self):
        value = os.environ.get("SYMSEEK_TIMEOUT")
        if not value:
            return
        try:
            timeout = float(value)
            if timeout <= 0:
                raise ValueError
        except ValueError:
            print(f"warning: ignoring SYMSEEK_TIMEOUT={value!r}, not a positive number", file=sys.stderr)
            return
        self.config['budget']['timeout'] = timeout

    def apply_overrides(self, args: argparse.Namespace):
        """CLI flags win over config.yaml and the environment"""
        if getattr(args, 'timeout', None) is not None:
            if args.timeout <= 0:
                raise ValueError("--timeout must be positive")
            self.config['budget']['timeout'] = args.timeout
            self.config['corpus']['entry_timeout'] = args.timeout
        if getattr(args, 'max_degree', None) is not None:
            self.config['search']['max_degree'] = args.max_degree
        if getattr(args, 'verbose', False):
            self.config['logging']['verbose'] = True
        if getattr(args, 'no_log', False):
            self.config['logging']['to_file'] = False
        self.logger = RunLogger(self.config, quiet=self.quiet)

    # -- input ---------------------------------------------------------------

    def read_ode(self, args: argparse.Namespace) -> Ode2:
        if getattr(args, 'file', None):
            text = Path(args.file).read_text(encoding='utf-8').strip()
        elif getattr(args, 'ode', None):
            text = args.ode
        else:
            raise ValueError("give an ODE inline or with --file")
        ode = parse_ode(text)
        hint = ode.trivial_symmetry_hint()
        if hint:
            self.logger.warn(hint)
        report = degree_report(ode)
        self.logger.detail(f"{ode.render()}  (deg M = {report.deg_M}, deg N = {report.deg_N}, "
                           f"{report.kind.value})")
        return ode

    def emit_json(self, data: Dict):
        print(json.dumps(data, indent=2))

    # -- solve ---------------------------------------------------------------

    def cmd_solve(self, args: argparse.Namespace) -> int:
        """
        Search for sigma on one ODE

        With --params the parameters are solved for as well and the command
        behaves like analyze.
        """
        if args.params:
            return self.cmd_analyze(args)
        ode = self.read_ode(args)
        search = SymmetrySearch(self.config, self.logger)
        strategy = args.strategy or self.config['search'].get('strategy', 'auto')
        outcome = search.solve(ode, strategy, args.max_degree)

        if not isinstance(outcome, SigmaResult):
            self.logger.event("solve", ode=ode.render(), status="NotFound", strategy=outcome.strategy)
            if args.format == "json":
                self.emit_json({"ode": ode.to_json(), **outcome.to_json()})
            else:
                scope = "exhaustive" if outcome.exhaustive else "partial"
                self.console.print(f"[yellow]No sigma found[/yellow] ({outcome.strategy}, degrees "
                                   f"{outcome.degrees[0]}..{outcome.degrees[1]}, {scope}, "
                                   f"{outcome.attempts} attempts, {outcome.elapsed:.2f}s)")
                if outcome.trivial_degrees:
                    self.console.print(f"[dim]only the trivial solution at degrees "
                                       f"{outcome.trivial_degrees}[/dim]")
            return EXIT_NOT_FOUND

        self.logger.event("solve", ode=ode.render(), status="found", strategy=outcome.strategy,
                          elapsed=f"{outcome.elapsed:.3f}")
        mu = mu_log_derivative(outcome.sigma, ode)
        symmetry = SymmetryRepr(outcome.sigma)
        if args.format == "json":
            self.emit_json({
                "ode": ode.to_json(),
                "status": "found",
                **outcome.to_json(),
                "symmetry": symmetry.render(),
                "mu_log_derivative": mu.render(),
            })
            return EXIT_OK

        table = Table(box=box.SIMPLE, show_header=False)
        table.add_column("field", style="cyan bold")
        table.add_column("value")
        table.add_row("ODE", ode.render())
        table.add_row("sigma", f"[bold green]{outcome.sigma.render()}[/bold green]")
        table.add_row("symmetry", escape(symmetry.render()))
        table.add_row("evolutionary", escape(symmetry.evolutionary()))
        table.add_row("D_x mu / mu", mu.render())
        table.add_row("strategy", f"{outcome.strategy} (degree {outcome.degree})")
        table.add_row("verified", "yes" if outcome.verified else "[red]no[/red]")
        table.add_row("time", f"{outcome.elapsed:.3f}s, {outcome.attempts} attempts")
        self.console.print(Panel(table, title="symseek solve", border_style="green"))
        return EXIT_OK

    # -- analyze -------------------------------------------------------------

    def cmd_analyze(self, args: argparse.Namespace) -> int:
        ode = self.read_ode(args)
        declared = split_list(args.params)
        if declared and set(declared) != set(ode.params):
            raise ValueError(f"--params {','.join(declared)} does not match the ODE parameters "
                             f"{','.join(ode.params) or '(none)'}")
        nonzero = split_list(args.nonzero)
        strategy = args.strategy if args.strategy in ("base", "n-of-x") else "base"
        search = SymmetrySearch(self.config, self.logger)
        outcome = search.analyze(ode, nonzero=nonzero, strategy=strategy, max_degree=args.max_degree)

        if not isinstance(outcome, AnalysisReport):
            self.logger.event("analyze", ode=ode.render(), status="NotFound")
            if args.format == "json":
                self.emit_json({"ode": ode.to_json(), **outcome.to_json()})
            else:
                self.console.print(f"[yellow]No branch found[/yellow] up to degree {outcome.degrees[1]}")
            return EXIT_NOT_FOUND

        self.logger.event("analyze", ode=ode.render(), status="found", degree=outcome.degree,
                          branches=len(outcome.unconstrained) + len(outcome.constrained),
                          unresolved=len(outcome.unresolved))
        if args.format == "json":
            self.emit_json({"ode": ode.to_json(), "status": "found", **outcome.to_json()})
            return EXIT_OK

        self.console.print(f"[bold cyan]{ode.render()}[/bold cyan]  degree {outcome.degree}, "
                           f"{outcome.elapsed:.2f}s")
        for title, branches, style in (("unconstrained", outcome.unconstrained, "blue"),
                                       ("constrained", outcome.constrained, "green")):
            for b in branches:
                self.console.print(self._branch_panel(b, title, style))
        for u in outcome.unresolved:
            body = "\n".join(u.relations)
            if u.constraints:
                body += "\nwith " + ", ".join(u.constraints)
            self.console.print(Panel(body, title="unresolved: needs an algebraic extension",
                                     border_style="yellow"))
        return EXIT_OK

    def _branch_panel(self, b: AnalysisBranch, title: str, style: str) -> Panel:
        table = Table(box=None, show_header=False)
        table.add_column("field", style="cyan")
        table.add_column("value")
        data = b.to_json()
        if data["constraints"]:
            table.add_row("constraints", ", ".join(data["constraints"]))
        if data["relations"]:
            table.add_row("relations", ", ".join(data["relations"]))
        table.add_row("sigma", f"[bold]{data['sigma']}[/bold]")
        table.add_row("symmetry", escape(SymmetryRepr(b.sigma).render()))
        table.add_row("verified", "yes" if b.verified else "[red]no[/red]")
        return Panel(table, title=title, border_style=style)

    # -- verify --------------------------------------------------------------

    def cmd_verify(self, args: argparse.Namespace) -> int:
        ode = parse_ode(args.ode)
        R = ode.ring
        kind = args.kind
        if kind == "sigma":
            sigma = parse_expression(args.expr, R)
            check = verify_sigma(sigma, ode)
            ok = bool(check)
            detail = None if ok else f"residual: {residual_summary(check)}"
        elif kind == "fi":
            ok = verify_first_integral(parse_darboux(args.expr, R), ode)
            detail = None if ok else "D_x of the expression does not vanish"
        else:
            if not args.sigma:
                raise ValueError(f"verify {kind} needs --sigma")
            sigma = parse_expression(args.sigma, R)
            darboux = parse_darboux(args.expr, R)
            if kind == "nu":
                ok = verify_nu(darboux, sigma, ode)
                detail = None if ok else "-D_x(nu)/nu differs from sigma"
            else:
                ok = verify_mu(darboux, sigma, ode)
                detail = None if ok else f"D_x(mu)/mu differs from {mu_log_derivative(sigma, ode).render()}"

        self.logger.event("verify", kind=kind, ode=ode.render(), ok=ok)
        if args.format == "json":
            self.emit_json({"kind": kind, "ode": ode.to_json(), "verified": ok, "detail": detail})
        elif ok:
            self.console.print(f"[bold green]verified[/bold green] {kind}")
        else:
            self.console.print(f"[bold red]not verified[/bold red] {kind}: {detail}")
        return EXIT_OK if ok else EXIT_INPUT

    # -- corpus --------------------------------------------------------------

    def resolve_corpus(self, name: str) -> Path:
        """A path, or a bundled corpus name such as 'kamke'"""
        path = Path(name)
        if path.exists():
            return path
        bundled = Path(self.config['corpus'].get('data_dir', 'data')) / f"{path.stem}.json"
        return bundled if bundled.exists() else path

    def cmd_corpus(self, args: argparse.Namespace) -> int:
        path = self.resolve_corpus(args.corpus)
        entries = load_corpus(path, args.filter)
        jobs = args.jobs or int(self.config['corpus'].get('jobs', 1))
        self.logger.info(f"[cyan]{path}[/cyan]: {len(entries)} entries, {jobs} job(s)")
        runner = CorpusRunner(self.config, self.logger)
        report = runner.run(entries, name=path.stem, jobs=jobs,
                            show_progress=not self.quiet and args.format != "json")

        if args.output:
            with open(args.output, 'w', encoding='utf-8') as f:
                json.dump(report.to_json(), f, indent=2)
            self.logger.info(f"report written to {args.output}")
        if args.format == "json":
            self.emit_json(report.to_json())
        else:
            self.console.print(self.corpus_table(report))
            summary = report.summary()
            timing = report.timing()
            self.console.print("  ".join(f"{k}: {v}" for k, v in summary.items())
                               + f"  | total {timing['total']:.1f}s, max {timing['max']:.1f}s")
            for entry in report.entries:
                for problem in entry.problems:
                    self.logger.warn(f"{entry.id}: {problem}")
        return report.exit_code

    def corpus_table(self, report: RunReport) -> Table:
        table = Table(title=f"symseek corpus: {report.corpus}", box=box.ROUNDED)
        table.add_column("Entry", style="cyan bold")
        table.add_column("Status")
        table.add_column("Strategy")
        table.add_column("Time", justify="right")
        table.add_column("sigma / message", overflow="fold")
        for e in report.entries:
            style = STATUS_STYLES[e.status]
            text = e.sigma or e.message or "-"
            if e.status is EntryStatus.VERIFIED_DIFFERENT and e.message:
                text = f"{text} ({e.message})"
            table.add_row(e.id, f"[{style}]{e.status.value}[/{style}]", e.strategy or "-",
                          f"{e.elapsed:.2f}s", text)
        return table


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="symseek",
        description="symseek - Lie symmetries of rational second-order ODEs",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  python main.py solve "y'' = -y'*(y'-1)/(x+y)"
  python main.py solve --file ode.txt --strategy base --max-degree 3 --format json
  python main.py verify fi "y'' = (y'-1)*(x^4*y'+2*x^3*y-x^2*y+y')/((x^2*y-1)*x^2)" \\
      "exp(1/x)*(x^2*y-y')*(y'-1)^(-1)"
  python main.py corpus kamke --jobs 4
  python main.py analyze "y'' = a*y' + b*y - c*y^2" --params a,b,c --nonzero c

Exit codes: 0 found/verified, 1 input or corpus error, 2 budget exhausted, 3 not found
Environment: SYMSEEK_TIMEOUT sets the default per-ODE timeout in seconds
        """
    )
    parser.add_argument('--config', '-c', default='config.yaml',
                        help='Path to configuration file (default: config.yaml)')
    parser.add_argument('--verbose', '-v', action='store_true', help='Show per-attempt lines')
    parser.add_argument('--quiet', '-q', action='store_true', help='No status output on stderr')
    parser.add_argument('--no-log', action='store_true', help='Do not write the dated log file')

    sub = parser.add_subparsers(dest='command', required=True)

    def add_search_flags(p: argparse.ArgumentParser):
        p.add_argument('ode', nargs='?', help="ODE as \"y'' = expr\" or just expr")
        p.add_argument('--file', '-f', help='Read the ODE from a file')
        p.add_argument('--max-degree', '-n', type=int, help='Largest candidate degree (default 7)')
        p.add_argument('--timeout', '-t', type=float, help='Seconds per ODE (default 60)')
        p.add_argument('--params', action='append',
                       help='Parameters to solve for, comma separated (analysis mode)')
        p.add_argument('--nonzero', action='append',
                       help="Side conditions such as 'c' or 'a != b', comma separated")
        p.add_argument('--format', choices=['text', 'json'], default='text')

    solve = sub.add_parser('solve', help='Find sigma for one ODE')
    add_search_flags(solve)
    solve.add_argument('--strategy', '-s',
                       help="auto, base, q-div-n, q-u-n:x|y|y', n-of-x, common-factor, seed-monomials")

    analyze = sub.add_parser('analyze', help='Parametric analysis: solve for the parameters too')
    add_search_flags(analyze)
    analyze.add_argument('--strategy', '-s', choices=['base', 'n-of-x'], default='base')

    verify = sub.add_parser('verify', help='Check sigma, nu, a first integral or an integrating factor')
    verify.add_argument('kind', choices=['sigma', 'nu', 'fi', 'mu'])
    verify.add_argument('ode', help="ODE as \"y'' = expr\"")
    verify.add_argument('expr', help='sigma, or a Darboux product exp(R)*f1^c1*...')
    verify.add_argument('--sigma', help='sigma to check nu or mu against')
    verify.add_argument('--format', choices=['text', 'json'], default='text')

    corpus = sub.add_parser('corpus', help='Run a regression corpus')
    corpus.add_argument('corpus', help='Corpus JSON file or bundled name (kamke, nonlocal, oscillators)')
    corpus.add_argument('--jobs', '-j', type=int, help='Worker processes (default 1)')
    corpus.add_argument('--filter', help="Entry id glob, e.g. 'kamke-1*'")
    corpus.add_argument('--timeout', '-t', type=float, help='Seconds per entry (default 60)')
    corpus.add_argument('--output', '-o', help='Also write the JSON report to this file')
    corpus.add_argument('--format', choices=['text', 'json'], default='text')
    return parser


def run(argv: Optional[List[str]] = None) -> int:
    """Parse arguments, run one command and map the outcome to an exit code"""
    args = build_parser().parse_args(argv)
    err = Console(stderr=True)
    try:
        app = SymseekApp(config_path=args.config, quiet=args.quiet)
        app.apply_overrides(args)
        command = {
            'solve': app.cmd_solve,
            'analyze': app.cmd_analyze,
            'verify': app.cmd_verify,
            'corpus': app.cmd_corpus,
        }[args.command]
        return command(args)
    except ExpressionSyntaxError as e:
        err.print(f"[red]Syntax error:[/red] {escape(str(e))}", highlight=False, markup=True)
        err.print(e.caret(), highlight=False, markup=False)
        return EXIT_INPUT
    except (NotRational, ZeroDenominator, NotDarbouxRepresentable, CorpusFormatError, Inapplicable) as e:
        err.print(f"[red]{type(e).__name__}:[/red] {escape(str(e))}", highlight=False)
        return EXIT_INPUT
    except BudgetExhausted as e:
        err.print(f"[yellow]Budget exhausted:[/yellow] {escape(str(e))}", highlight=False)
        if e.progress:
            err.print(f"[dim]{escape(str(e.progress))}[/dim]", highlight=False)
        return EXIT_BUDGET
    except (SymseekError, ValueError, OSError) as e:
        err.print(f"[red]Error:[/red] {escape(str(e))}", highlight=False)
        return EXIT_INPUT
    except KeyboardInterrupt:
        err.print("\n[bold yellow]Stopped by user[/bold yellow]")
        return EXIT_INPUT
    except Exception as e:
        err.print(f"[bold red]Error:[/bold red] {type(e).__name__}: {escape(str(e))}", highlight=False)
        return EXIT_INPUT


def main():
    """Main entry point"""
    sys.exit(run())


if __name__ == "__main__":
    main()
