"""
Run Logger
Console messages through rich and one-line events appended to a dated log file
"""

from datetime import datetime
from pathlib import Path
from typing import Dict, Optional

from rich.console import Console


class RunLogger:
    """Human-facing console output plus persistent event lines"""

    def __init__(self, config: Dict, console: Optional[Console] = None, quiet: bool = False):
        """
        Initialize the logger

        Args:
            config: Configuration dictionary with a 'logging' section
            console: Console to write to (stderr console by default)
            quiet: Suppress every console message, keep file events
        """
        section = config.get('logging', {})
        self.log_dir = Path(section.get('log_dir', 'logs'))
        self.to_file = bool(section.get('to_file', True))
        self.verbose = bool(section.get('verbose', False))
        self.console = console or Console(stderr=True, quiet=quiet)
        self._file_failed = False

    @property
    def log_file(self) -> Path:
        return self.log_dir / f"symseek_{datetime.now().strftime('%Y%m%d')}.log"

    def info(self, message: str, style: Optional[str] = None):
        self.console.print(message, style=style)

    def detail(self, message: str):
        """Console message shown only in verbose mode"""
        if self.verbose:
            self.console.print(message, style="dim")

    def warn(self, message: str):
        self.console.print(f"[yellow]warning:[/yellow] {message}")

    def event(self, kind: str, /, **fields):
        """
        Append "[timestamp] kind | key: value | ..." to today's log file

        A failing write is reported once and never raised.
        """
        if not self.to_file or self._file_failed:
            return
        parts = [f"[{datetime.now().isoformat(timespec='seconds')}] {kind}"]
        parts += [f"{key}: {value}" for key, value in fields.items()]
        try:
            self.log_dir.mkdir(parents=True, exist_ok=True)
            with open(self.log_file, 'a', encoding='utf-8') as f:
                f.write(" | ".join(parts) + "\n")
        except OSError as e:
            self._file_failed = True
            self.console.print(f"[yellow]Failed to write log file {self.log_file}: {e}[/yellow]")
