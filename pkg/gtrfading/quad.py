"""Deterministic numerical integration.

Three rules, one result type:

- `integrate_finite`: QUADPACK adaptive Gauss–Kronrod (`scipy.integrate.quad`) on [a, b].
- `integrate_periodic`: trapezoid over one full period [0, 2π] with point doubling from
  N = 32. Every phase average in `models` is an integral of an entire 2π-periodic
  function, where the trapezoid converges spectrally.
- `integrate_semi_infinite`: [a, ∞). With a known exponential decay rate, doubling
  panels are integrated until the envelope bound `|f(T)| / rate` falls under a tenth
  of both `abs_tol` and `rel_tol` times the running value; otherwise QUADPACK's
  transformed infinite-range rule. A logarithmic singularity at `a` is removed by the
  substitution `s = a + e^u` on the first panel.

None of these raise on non-convergence. They return `QuadResult(converged=False)` with
the best value and error estimate found, and the caller decides.
"""

from __future__ import annotations

import math
import warnings
from collections.abc import Callable
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .errors import ConvergenceError, DomainError

Integrand = Callable[[float], float]

TWO_PI = 2.0 * math.pi
PERIODIC_START_POINTS = 32
PERIODIC_MIN_POINTS = 64
_QUADPACK_EVALS_PER_INTERVAL = 21
_MAX_PANELS = 64
# QUADPACK rejects relative tolerances below 50 machine epsilons; tighter specs still
# decide convergence in `_finish`
_QUADPACK_MIN_EPSREL = 50.0 * float(np.finfo(float).eps)


@dataclass(frozen=True)
class QuadSpec:
    rel_tol: float = 1e-10
    abs_tol: float = 1e-12
    max_evals: int = 200_000

    def __post_init__(self) -> None:
        if not self.rel_tol > 0:
            raise DomainError("quad_spec", f"rel_tol={self.rel_tol!r} must be > 0")
        if not self.abs_tol >= 0:
            raise DomainError("quad_spec", f"abs_tol={self.abs_tol!r} must be >= 0")
        if self.max_evals < 15:
            raise DomainError("quad_spec", f"max_evals={self.max_evals} must be >= 15")

    def tolerance(self, value: float) -> float:
        return max(self.abs_tol, self.rel_tol * abs(value))


@dataclass(frozen=True)
class QuadResult:
    value: float
    error_estimate: float
    evals: int
    converged: bool

    def require(self, what: str) -> float:
        """The value, or `ConvergenceError` naming the quantity that failed."""
        if not self.converged:
            raise ConvergenceError(
                "quadrature_convergence",
                f"{what}: value {self.value:.6g} with error estimate {self.error_estimate:.3g} "
                f"after {self.evals} evaluations",
                partial=self,
            )
        return self.value


def _finish(value: float, error: float, evals: int, ok: bool, spec: QuadSpec) -> QuadResult:
    ok = ok and math.isfinite(value) and math.isfinite(error) and error <= spec.tolerance(value)
    return QuadResult(value=float(value), error_estimate=float(abs(error)), evals=int(evals), converged=ok)


def _quadpack(f: Integrand, a: float, b: float, spec: QuadSpec, evals_left: int | None = None) -> QuadResult:
    budget = spec.max_evals if evals_left is None else evals_left
    limit = max(1, budget // _QUADPACK_EVALS_PER_INTERVAL)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        out = integrate.quad(
            f, a, b, epsabs=spec.abs_tol, epsrel=max(spec.rel_tol, _QUADPACK_MIN_EPSREL), limit=limit, full_output=1
        )
    value, error, info = out[0], out[1], out[2]
    failed = len(out) > 3
    evals = int(info.get("neval", 0)) if isinstance(info, dict) else 0
    return _finish(value, error, max(evals, 1), not failed and evals <= budget, spec)


def integrate_finite(f: Integrand, a: float, b: float, spec: QuadSpec = QuadSpec()) -> QuadResult:
    if not (math.isfinite(a) and math.isfinite(b)):
        raise DomainError("finite_interval", f"integrate_finite: [{a}, {b}] is not finite")
    if not a < b:
        raise DomainError("interval_order", f"integrate_finite: need a < b, got [{a}, {b}]")
    return _quadpack(f, a, b, spec)


def evaluate_on_grid(f: Callable, x: np.ndarray) -> np.ndarray:
    """f over a whole grid in one call when it vectorizes, point by point otherwise.

    A scalar return from a vectorized call (a constant integrand) is broadcast.
    """
    try:
        y = np.asarray(f(x), dtype=float)
    except (TypeError, ValueError):
        y = None
    if y is not None:
        if y.shape == x.shape:
            return y
        if y.ndim == 0:
            return np.full(x.shape, float(y))
    return np.array([float(f(float(t))) for t in x])


def integrate_periodic(f: Callable, spec: QuadSpec = QuadSpec()) -> QuadResult:
    """Integral of a 2π-periodic f over [0, 2π].

    The error estimate is |I_2N - I_N|. Nodes are reused across doublings, so each step
    costs only the N new midpoints.
    """
    n = PERIODIC_START_POINTS
    total = float(np.sum(evaluate_on_grid(f, TWO_PI * np.arange(n) / n)))
    evals = n
    previous = TWO_PI * total / n
    while True:
        midpoints = TWO_PI * (np.arange(n) + 0.5) / n
        total += float(np.sum(evaluate_on_grid(f, midpoints)))
        evals += n
        n *= 2
        current = TWO_PI * total / n
        error = abs(current - previous)
        if not math.isfinite(current):
            return QuadResult(value=current, error_estimate=math.inf, evals=evals, converged=False)
        if n >= PERIODIC_MIN_POINTS and error <= spec.tolerance(current):
            return _finish(current, error, evals, True, spec)
        if evals + n > spec.max_evals:
            return _finish(current, error, evals, False, spec)
        previous = current


def _tail_negligible(tail: float, value: float, spec: QuadSpec) -> bool:
    # relative as well as absolute: a tiny integral still needs rel_tol digits
    return tail == 0.0 or tail < min(spec.abs_tol, spec.rel_tol * abs(value)) / 10.0


def integrate_semi_infinite(
    f: Integrand,
    a: float,
    spec: QuadSpec = QuadSpec(),
    *,
    decay_rate: float | None = None,
    log_singular: bool = False,
) -> QuadResult:
    """Integral of f over [a, ∞).

    `decay_rate` is the rate of a known envelope `|f(t)| <~ C e^{-rate t}`. Without one the
    whole range goes to QUADPACK's infinite-interval rule.
    """
    if not math.isfinite(a):
        raise DomainError("finite_interval", f"integrate_semi_infinite: start {a} is not finite")
    if decay_rate is not None and not decay_rate > 0:
        raise DomainError("decay_rate", f"decay_rate={decay_rate!r} must be > 0")

    if decay_rate is None and not log_singular:
        return _quadpack(f, a, math.inf, spec)

    width = 1.0 if decay_rate is None else 1.0 / decay_rate
    hi = a + width
    if log_singular:

        def substituted(u: float) -> float:
            t = math.exp(u)
            # e^u underflowed: the weight is zero whatever f(a) is
            return 0.0 if t == 0.0 else f(a + t) * t

        first = _quadpack(substituted, -math.inf, math.log(width), spec)
    else:
        first = _quadpack(f, a, hi, spec)
    value, error, evals, ok = first.value, first.error_estimate, first.evals, first.converged

    if decay_rate is None:
        rest = _quadpack(f, hi, math.inf, spec, spec.max_evals - evals)
        return _finish(value + rest.value, error + rest.error_estimate, evals + rest.evals, ok and rest.converged, spec)

    tail = math.inf
    for _ in range(_MAX_PANELS):
        tail = abs(float(f(hi))) / decay_rate
        if _tail_negligible(tail, value, spec):
            break
        if evals >= spec.max_evals:
            break
        lo, width = hi, 2.0 * width
        hi = lo + width
        panel = _quadpack(f, lo, hi, spec, spec.max_evals - evals)
        value += panel.value
        error += panel.error_estimate
        evals += panel.evals
        ok = ok and panel.converged
    truncated = _tail_negligible(tail, value, spec)
    return _finish(value, error + tail, evals, ok and truncated, spec)
