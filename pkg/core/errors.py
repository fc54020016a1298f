"""
Error types shared by the symseek modules
"""

from typing import Dict, Optional


class SymseekError(Exception):
    """Base class for every error raised by symseek"""


class ExpressionSyntaxError(SymseekError):
    """Malformed expression text, annotated with the offending position"""

    def __init__(self, message: str, text: str = "", position: int = 0):
        self.text = text
        self.position = position
        super().__init__(message)

    def caret(self) -> str:
        """Two-line rendering pointing at the bad character"""
        return f"{self.text}\n{' ' * self.position}^"

    def __str__(self):
        base = super().__str__()
        if self.text:
            return f"{base} (at column {self.position + 1})"
        return base


class NotRational(SymseekError):
    """Input uses something other than +, -, *, / and integer powers"""


class ZeroDenominator(SymseekError, ZeroDivisionError):
    """A rational function was built with a zero denominator"""


class Inconsistent(SymseekError):
    """An algebraic system reduced to a nonzero constant equation"""


class BudgetExhausted(SymseekError):
    """A search or solve ran out of time, case splits or basis size"""

    def __init__(self, message: str, progress: Optional[Dict] = None):
        self.progress = dict(progress or {})
        super().__init__(message)


class Inapplicable(SymseekError):
    """A strategy was asked to run on an ODE outside its preconditions"""


class NotDarbouxRepresentable(SymseekError):
    """An expression cannot be cast to exp(R) * prod f_i^c_i"""


class CorpusFormatError(SymseekError):
    """A corpus file is not a JSON array of well-formed entries"""
