"""Special-function kernel for the two-ray closed forms.

Every function here accepts a scalar or a numpy array and returns the same shape (a
Python float for scalar input), so the phase-average integrands in `models` can evaluate
a whole quadrature grid in one call.

Bessel functions are only exposed in exponentially scaled form. Every closed form that
multiplies `exp(-x) * I0(x)` is rearranged to use the scaled value, which keeps
K well beyond 700 representable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any

import numpy as np
from numpy.typing import ArrayLike
from scipy import special

from .errors import ConvergenceError, DomainError

EULER_GAMMA = 0.57721566490153286061

MARCUM_TERM_CUTOFF = 1e-15
MARCUM_MAX_TERMS = 200_000
_MARCUM_FIRST_CHUNK = 16
_MARCUM_MAX_CHUNK = 512


@dataclass(frozen=True)
class SpecFunResult:
    value: float
    converged: bool
    terms_or_evals: int

    def __post_init__(self) -> None:
        if self.terms_or_evals < 1:
            raise DomainError("specfun_result", f"terms_or_evals={self.terms_or_evals} must be >= 1")
        if self.converged and not math.isfinite(self.value):
            raise DomainError("specfun_result", f"converged result is not finite: {self.value!r}")


def _checked(name: str, x: ArrayLike) -> np.ndarray:
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise DomainError("finite_argument", f"{name}: argument is not finite")
    return arr


def _out(value: np.ndarray) -> Any:
    return float(value) if np.ndim(value) == 0 else value


def bessel_i0_scaled(x: ArrayLike) -> Any:
    """I0(x) * exp(-|x|)."""
    return _out(special.i0e(_checked("bessel_i0_scaled", x)))


def bessel_i1_scaled(x: ArrayLike) -> Any:
    """I1(x) * exp(-|x|). Odd in x."""
    return _out(special.i1e(_checked("bessel_i1_scaled", x)))


def bessel_ratio_i1_i0(x: ArrayLike) -> Any:
    """I1(x)/I0(x), the mean resultant length of a von Mises law with concentration x."""
    arr = _checked("bessel_ratio_i1_i0", x)
    return _out(special.i1e(arr) / special.i0e(arr))


def _bessel_series(ratio: np.ndarray, x: np.ndarray, start: int) -> tuple[np.ndarray, int, bool]:
    """Sum_{k >= start} ratio^k * ive(k, x) over flat arrays, 0 <= ratio <= 1.

    Terms are non-increasing in k, so the block is done once its last term falls under
    the cutoff relative to the running sum.
    """
    total = np.zeros_like(x)
    active = np.ones(x.shape, dtype=bool)
    k = start
    chunk = _MARCUM_FIRST_CHUNK
    while active.any():
        if k - start >= MARCUM_MAX_TERMS:
            return total, k - start, False
        ks = np.arange(k, k + chunk, dtype=float)
        r = ratio[active][:, None]
        with np.errstate(under="ignore"):
            block = np.power(r, ks) * special.ive(ks, x[active][:, None])
        sums = total[active] + block.sum(axis=1)
        total[active] = sums
        done = block[:, -1] <= MARCUM_TERM_CUTOFF * sums
        idx = np.flatnonzero(active)
        active[idx[done]] = False
        k += chunk
        chunk = min(2 * chunk, _MARCUM_MAX_CHUNK)
    return total, k - start, True


def _marcum_pair(a: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, np.ndarray, int, bool]:
    """(Q1, 1 - Q1), each computed from the series in which it is the small quantity."""
    a, b = np.broadcast_arrays(a, b)
    shape = a.shape
    a = a.ravel().astype(float)
    b = b.ravel().astype(float)
    q = np.empty_like(a)
    p = np.empty_like(a)
    x = a * b
    scale = np.exp(-0.5 * (a - b) ** 2)
    terms = 1
    converged = True

    upper = b > a
    if upper.any():
        s, n, ok = _bessel_series(a[upper] / b[upper], x[upper], 0)
        q[upper] = np.clip(scale[upper] * s, 0.0, 1.0)
        p[upper] = 1.0 - q[upper]
        terms, converged = max(terms, n), converged and ok

    lower = ~upper
    if lower.any():
        al, bl = a[lower], b[lower]
        ratio = np.divide(bl, al, out=np.zeros_like(al), where=al > 0)
        s, n, ok = _bessel_series(ratio, x[lower], 1)
        p[lower] = np.clip(scale[lower] * s, 0.0, 1.0)
        q[lower] = 1.0 - p[lower]
        terms, converged = max(terms, n), converged and ok

    # Rayleigh: exact, and 1 - e^{-b²/2} without cancellation near b = 0
    zero = a == 0.0
    if zero.any():
        q[zero] = np.exp(-0.5 * b[zero] ** 2)
        p[zero] = -np.expm1(-0.5 * b[zero] ** 2)

    return q.reshape(shape), p.reshape(shape), terms, converged


def _marcum_args(name: str, a: ArrayLike, b: ArrayLike) -> tuple[np.ndarray, np.ndarray]:
    aa, bb = _checked(name, a), _checked(name, b)
    if np.any(aa < 0) or np.any(bb < 0):
        raise DomainError("marcum_nonnegative", f"{name}: arguments must be >= 0")
    return aa, bb


def marcum_q1(a: ArrayLike, b: ArrayLike) -> Any:
    """First-order Marcum Q function Q1(a, b), in [0, 1], non-increasing in b."""
    aa, bb = _marcum_args("marcum_q1", a, b)
    q, _, terms, ok = _marcum_pair(aa, bb)
    if not ok:
        raise ConvergenceError("marcum_series", f"series did not reach {MARCUM_TERM_CUTOFF:g} in {terms} terms")
    return _out(q)


def marcum_p1(a: ArrayLike, b: ArrayLike) -> Any:
    """1 - Q1(a, b) without cancellation: the Rician cdf, accurate in the deep-fade tail."""
    aa, bb = _marcum_args("marcum_p1", a, b)
    _, p, terms, ok = _marcum_pair(aa, bb)
    if not ok:
        raise ConvergenceError("marcum_series", f"series did not reach {MARCUM_TERM_CUTOFF:g} in {terms} terms")
    return _out(p)


def marcum_q1_detailed(a: float, b: float) -> SpecFunResult:
    aa, bb = _marcum_args("marcum_q1", a, b)
    if aa.ndim or bb.ndim:
        raise DomainError("scalar_argument", "marcum_q1_detailed takes scalars")
    q, _, terms, ok = _marcum_pair(aa, bb)
    return SpecFunResult(value=float(q), converged=ok, terms_or_evals=terms)


def gamma_upper_zero(x: ArrayLike) -> Any:
    """Upper incomplete gamma Gamma(0, x) = E1(x) = -Ei(-x), for x > 0."""
    arr = _checked("gamma_upper_zero", x)
    if np.any(arr <= 0):
        raise DomainError("positive_argument", "gamma_upper_zero: x must be > 0")
    return _out(special.exp1(arr))


def e1_plus_log(x: ArrayLike) -> Any:
    """Gamma(0, x) + log x, including its limit -EULER_GAMMA at x = 0.

    Below 1 the power series -gamma_e - sum_k (-x)^k / (k k!) is summed directly; the
    naive sum cancels two large terms as x -> 0.
    """
    arr = _checked("e1_plus_log", x)
    if np.any(arr < 0):
        raise DomainError("nonnegative_argument", "e1_plus_log: x must be >= 0")
    out = np.empty_like(arr)
    small = arr < 1.0
    if np.any(small):
        xs = arr[small]
        acc = np.zeros_like(xs)
        term = np.ones_like(xs)
        for k in range(1, 40):
            term = term * (-xs) / k
            acc += term / k
        out[small] = -EULER_GAMMA - acc
    big = ~small
    if np.any(big):
        out[big] = special.exp1(arr[big]) + np.log(arr[big])
    return _out(out)


def laguerre(k: int, z: ArrayLike) -> Any:
    """Laguerre polynomial L_k(z) = 1F1(-k; 1; z), by the three-term recurrence."""
    if isinstance(k, bool) or int(k) != k or k < 0:
        raise DomainError("laguerre_order", f"laguerre: order {k!r} must be a non-negative integer")
    return _out(special.eval_laguerre(int(k), _checked("laguerre", z)))


def erfc(x: ArrayLike) -> Any:
    return _out(special.erfc(_checked("erfc", x)))


def erfc_scaled(x: ArrayLike) -> Any:
    """exp(x^2) * erfc(x)."""
    return _out(special.erfcx(_checked("erfc_scaled", x)))


def sinc_pi(p: ArrayLike) -> Any:
    """sin(pi p) / (pi p), with value 1 at p = 0."""
    return _out(np.sinc(_checked("sinc_pi", p)))
