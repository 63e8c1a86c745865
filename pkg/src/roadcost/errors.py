"""Exception types shared across the package."""

from __future__ import annotations


class ConvergenceError(RuntimeError):
    """An iterative solve did not reach its tolerance within the iteration cap."""

    def __init__(self, message: str, residual: float, iterations: int):
        super().__init__(f"{message} (residual={residual:.3e} after {iterations} iterations)")
        self.residual = residual
        self.iterations = iterations


class LoadError(Exception):
    """A dataset file failed validation.

    ``code`` is a stable machine-readable identifier:
    ``malformed-row``, ``unknown-edge``, ``bad-schedule``, ``bad-trip``,
    ``missing-cost``. ``problems`` lists every violating row as
    ``"<file>:<line>: <reason>"``.
    """

    def __init__(self, code: str, problems: list[str]):
        self.code = code
        self.problems = list(problems)
        head = "; ".join(self.problems[:5])
        more = f" (+{len(self.problems) - 5} more)" if len(self.problems) > 5 else ""
        super().__init__(f"[{code}] {head}{more}")


class GenerationError(RuntimeError):
    """The synthetic generator could not satisfy its spec (e.g. coverage target)."""
