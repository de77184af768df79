"""One exception family for the whole package.

Every refusal names the invariant it protects, so the CLI can print it and telemetry can
count it. `invariant` is a short snake_case token (`mgf_domain`, `delta_range`, ...);
`detail` is the human sentence.

- `DomainError`: the caller asked for something outside the model. Raised before any
  computation. CLI exit code 2.
- `ConvergenceError`: the numerics could not meet the requested tolerance. Carries the
  partial quadrature result when there is one. CLI exit code 3.

Quadrature itself never raises on non-convergence: it returns a `QuadResult` with
`converged=False`. The statistic layer decides that a non-converged value is an error.
"""

from __future__ import annotations

from typing import Any


class GtrError(Exception):
    """Base refusal. `invariant` is what the CLI prints and telemetry records."""

    exit_code = 1

    def __init__(self, invariant: str, detail: str) -> None:
        super().__init__(f"{invariant}: {detail}")
        self.invariant = invariant
        self.detail = detail


class DomainError(GtrError, ValueError):
    exit_code = 2


class ConvergenceError(GtrError, ArithmeticError):
    exit_code = 3

    def __init__(self, invariant: str, detail: str, partial: Any = None) -> None:
        super().__init__(invariant, detail)
        self.partial = partial
