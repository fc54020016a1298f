#!/usr/bin/env python3
"""
Test Command Line
Exit codes of solve, verify and corpus through main.run
"""

import json
import sys
import tempfile
from pathlib import Path

from rich.console import Console
from rich.table import Table

from main import EXIT_INPUT, EXIT_NOT_FOUND, EXIT_OK, run

CONFIG_PATH = str(Path(__file__).parent / "config.yaml")
KAMKE_78 = "y'' = -(y-1)*y'/x"
KAMKE_133 = "y'' = -y'*(y'-1)/(x+y)"
WORKED_EXAMPLE = "y'' = (y'-1)*(x^4*y'+2*x^3*y-x^2*y+y')/((x^2*y-1)*x^2)"


def _run(*argv):
    return run(["--config", CONFIG_PATH, "--no-log", "-q", *argv])


def test_verify_sigma():
    assert _run("verify", "sigma", KAMKE_133, "y'*(y'-1)/((x+y)*(1+y'))") == EXIT_OK
    assert _run("verify", "sigma", KAMKE_133, "1") == EXIT_INPUT


def test_verify_first_integral():
    assert _run("verify", "fi", WORKED_EXAMPLE, "exp(1/x)*(x^2*y-y')*(y'-1)^(-1)") == EXIT_OK


def test_verify_nu_needs_sigma():
    assert _run("verify", "nu", KAMKE_78, "-x*y'", "--sigma", "(y-2)/x") == EXIT_OK
    assert _run("verify", "nu", KAMKE_78, "-x*y'") == EXIT_INPUT


def test_input_errors():
    assert _run("solve", "y'' = sin(x)") == EXIT_INPUT
    assert _run("solve", "y'' = x + * y") == EXIT_INPUT
    assert _run("solve") == EXIT_INPUT
    assert _run("solve", KAMKE_78, "--timeout", "-1") == EXIT_INPUT


def test_solve_exit_codes():
    assert _run("solve", "-s", "q-div-n", "y'' = y^2 + x") == EXIT_NOT_FOUND
    assert _run("solve", "-s", "q-div-n", KAMKE_78, "--format", "json") == EXIT_OK


def test_corpus_exit_codes():
    with tempfile.TemporaryDirectory() as tmp:
        empty = Path(tmp) / "empty.json"
        empty.write_text("[]", encoding="utf-8")
        assert _run("corpus", str(empty)) == EXIT_OK

        broken = Path(tmp) / "broken.json"
        broken.write_text('[{"id": "a"}]', encoding="utf-8")
        assert _run("corpus", str(broken)) == EXIT_INPUT

        mini = Path(tmp) / "mini.json"
        mini.write_text(json.dumps([{"id": "kamke-78", "phi": KAMKE_78, "expected_sigma": "(y-2)/x",
                                     "strategy": "q-div-n"}]), encoding="utf-8")
        output = Path(tmp) / "report.json"
        assert _run("corpus", str(mini), "--output", str(output)) == EXIT_OK
        report = json.loads(output.read_text(encoding="utf-8"))
        assert report["summary"]["Match"] == 1

        wrong = Path(tmp) / "wrong.json"
        wrong.write_text(json.dumps([{"id": "kamke-78", "phi": KAMKE_78, "expected_sigma": "(y-3)/x",
                                      "strategy": "q-div-n"}]), encoding="utf-8")
        assert _run("corpus", str(wrong)) == EXIT_INPUT


def main() -> int:
    console = Console()
    tests = [(name, fn) for name, fn in globals().items() if name.startswith("test_") and callable(fn)]
    table = Table(title="Command Line")
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
