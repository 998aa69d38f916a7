"""Exception hierarchy shared across the package.

The CLI maps these onto exit codes: input problems are exit 1, panels
that are structurally valid but mathematically unusable (zero rows or
columns) are exit 2, and solver non-convergence is exit 3.
"""

from __future__ import annotations


class PanelRankError(Exception):
    """Base class for all errors raised by this package."""


class InputError(PanelRankError):
    """Malformed or inconsistent input: files, rosters, maps, config."""


class DegeneratePanelError(PanelRankError):
    """A panel row or column sums to zero, so the scores are undefined.

    ``entities`` / ``categories`` name the offending ids.
    """

    def __init__(self, message: str, entities: tuple[str, ...] = (),
                 categories: tuple[str, ...] = ()) -> None:
        super().__init__(message)
        self.entities = entities
        self.categories = categories


class NonConvergenceError(PanelRankError):
    """An iterative solver did not reach its tolerance within max_steps.

    Carries the last iterate so callers that opt in can still use it.
    """

    def __init__(self, message: str, steps: int, residual: float,
                 eigenvalue: float | None = None, vector=None) -> None:
        super().__init__(message)
        self.steps = steps
        self.residual = residual
        self.eigenvalue = eigenvalue
        self.vector = vector
