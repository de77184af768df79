"""The GTR fading family: parameters, the phase-average operator, channel statistics.

Conditioned on the phase difference α between the two specular rays, a GTR channel is
Rician with LOS parameter

    K̄(α) = K (1 + Δ cos α)

while the diffuse power, and therefore (1 + K)/γ̄, stays fixed. Every statistic here is
a Rician statistic averaged over α (`phase_average`). K̄ is never substituted for K in
the (1 + K)/γ̄ factor; `ChannelModel` carries (K, Δ, γ̄, N0) and derives σ from them so
there is exactly one place that factor comes from.

## Phase distributions

- `Uniform` is the classical GTR-U model.
- `TruncatedUniform(p, phi)` is uniform on [π(1 - p) + φ, π(1 + p) + φ] (GTR-T).
- `VonMises(eta, centered_at_pi)` has density e^{η cos(α - c)} / (2π I0(η)) with c = π
  or 0 (GTR-V).

`Uniform ≡ TruncatedUniform(1, 0) ≡ VonMises(0)` hold as pdf identities.

Closed forms are returned where they exist (`Method.CLOSED_FORM`, zero error estimate).
Everything else is `Method.QUADRATURE` with the quadrature error estimate. Passing
`closed_form=False` forces the quadrature path, which is how the closed forms are tested.
"""

from __future__ import annotations

import math
from collections.abc import Callable
from dataclasses import dataclass, field, replace
from enum import StrEnum
from typing import Any

import numpy as np
from numpy.typing import ArrayLike
from scipy import special

from . import specfun
from .errors import DomainError
from .quad import QuadResult, QuadSpec, integrate_finite, integrate_periodic

TWO_PI = 2.0 * math.pi


# --- phase distributions -------------------------------------------------------------


@dataclass(frozen=True)
class Uniform:
    kind = "uniform"

    def pdf(self, alpha: ArrayLike) -> Any:
        return np.full(np.shape(alpha), 1.0 / TWO_PI) if np.ndim(alpha) else 1.0 / TWO_PI

    def describe(self) -> str:
        return "uniform"


@dataclass(frozen=True)
class TruncatedUniform:
    p: float
    phi: float = 0.0
    kind = "truncated"

    def __post_init__(self) -> None:
        if not (math.isfinite(self.p) and 0.0 < self.p <= 1.0):
            raise DomainError("truncation_range", f"p={self.p!r} must be in (0, 1]")
        if not (math.isfinite(self.phi) and -math.pi < self.phi < math.pi):
            raise DomainError("truncation_offset", f"phi={self.phi!r} must be in (-pi, pi)")

    @property
    def support(self) -> tuple[float, float]:
        return (math.pi * (1.0 - self.p) + self.phi, math.pi * (1.0 + self.p) + self.phi)

    @property
    def is_full(self) -> bool:
        return self.p == 1.0

    def pdf(self, alpha: ArrayLike) -> Any:
        lo, _ = self.support
        a = np.asarray(alpha, dtype=float)
        inside = np.mod(a - lo, TWO_PI) <= TWO_PI * self.p
        out = np.where(inside, 1.0 / (TWO_PI * self.p), 0.0)
        return float(out) if out.ndim == 0 else out

    def describe(self) -> str:
        return f"trunc:p={self.p:g},phi={self.phi:g}"


@dataclass(frozen=True)
class VonMises:
    eta: float
    centered_at_pi: bool = True
    kind = "vonmises"

    def __post_init__(self) -> None:
        if not (math.isfinite(self.eta) and self.eta >= 0.0):
            raise DomainError("concentration_range", f"eta={self.eta!r} must be finite and >= 0")

    @property
    def center(self) -> float:
        return math.pi if self.centered_at_pi else 0.0

    @property
    def sign(self) -> float:
        """Sign of E[cos α]: -1 when concentrated at π."""
        return -1.0 if self.centered_at_pi else 1.0

    def pdf(self, alpha: ArrayLike) -> Any:
        a = np.asarray(alpha, dtype=float)
        out = np.exp(self.eta * (np.cos(a - self.center) - 1.0)) / (TWO_PI * special.i0e(self.eta))
        return float(out) if out.ndim == 0 else out

    def describe(self) -> str:
        return f"vm:eta={self.eta:g},center={'pi' if self.centered_at_pi else '0'}"


PhaseDistribution = Uniform | TruncatedUniform | VonMises


def parse_phase(text: str) -> PhaseDistribution:
    """`uniform`, `trunc:p=0.2[,phi=0]`, `vm:eta=3[,center=pi|0]`."""
    head, _, rest = text.strip().partition(":")
    head = head.lower()
    fields: dict[str, str] = {}
    for item in filter(None, (s.strip() for s in rest.split(","))):
        key, sep, value = item.partition("=")
        if not sep:
            raise DomainError("phase_syntax", f"{text!r}: expected key=value, got {item!r}")
        fields[key.strip().lower()] = value.strip()

    def number(key: str, default: float | None = None) -> float:
        if key not in fields:
            if default is None:
                raise DomainError("phase_syntax", f"{text!r}: missing {key}=")
            return default
        try:
            return float(fields.pop(key))
        except ValueError as e:
            raise DomainError("phase_syntax", f"{text!r}: {key} is not a number") from e

    phase: PhaseDistribution
    if head in ("uniform", "u"):
        phase = Uniform()
    elif head in ("trunc", "truncated", "t"):
        phase = TruncatedUniform(p=number("p"), phi=number("phi", 0.0))
    elif head in ("vm", "vonmises", "v"):
        center = fields.pop("center", "pi").lower()
        if center not in ("pi", "0"):
            raise DomainError("phase_syntax", f"{text!r}: center must be pi or 0")
        phase = VonMises(eta=number("eta"), centered_at_pi=center == "pi")
    else:
        raise DomainError("phase_syntax", f"unknown phase distribution {head!r}; expected uniform|trunc|vm")
    if fields:
        raise DomainError("phase_syntax", f"{text!r}: unexpected field(s) {sorted(fields)}")
    return phase


# --- parameter objects -----------------------------------------------------------------


@dataclass(frozen=True)
class ChannelModel:
    """K: LOS-to-diffuse power ratio; delta: LOS balance 2V1V2/(V1²+V2²); gamma_bar:
    average SNR (linear); n0: noise spectral density scale."""

    K: float
    delta: float
    gamma_bar: float
    phase: PhaseDistribution = field(default_factory=Uniform)
    n0: float = 1.0

    def __post_init__(self) -> None:
        if not (math.isfinite(self.K) and self.K >= 0.0):
            raise DomainError("K_range", f"K={self.K!r} must be finite and >= 0")
        if not (math.isfinite(self.delta) and 0.0 <= self.delta <= 1.0):
            raise DomainError("delta_range", f"delta={self.delta!r} must be in [0, 1]")
        if not (math.isfinite(self.gamma_bar) and self.gamma_bar > 0.0):
            raise DomainError("gamma_bar_range", f"gamma_bar={self.gamma_bar!r} must be finite and > 0")
        if not (math.isfinite(self.n0) and self.n0 > 0.0):
            raise DomainError("n0_range", f"n0={self.n0!r} must be finite and > 0")

    @property
    def sigma2(self) -> float:
        return self.gamma_bar * self.n0 / (2.0 * (1.0 + self.K))

    @property
    def sigma(self) -> float:
        return math.sqrt(self.sigma2)

    @property
    def p_r(self) -> float:
        """Mean received power 2σ²(1 + K) = γ̄ N0."""
        return self.gamma_bar * self.n0

    @property
    def v1(self) -> float:
        return self.sigma * math.sqrt(self.K) * (math.sqrt(1.0 + self.delta) + math.sqrt(1.0 - self.delta)) / math.sqrt(2.0)

    @property
    def v2(self) -> float:
        return self.sigma * math.sqrt(self.K) * (math.sqrt(1.0 + self.delta) - math.sqrt(1.0 - self.delta)) / math.sqrt(2.0)

    @property
    def is_rician(self) -> bool:
        """Δ = 0 or K = 0: the phase difference has no effect."""
        return self.delta == 0.0 or self.K == 0.0

    def with_(self, **changes: Any) -> ChannelModel:
        return replace(self, **changes)


@dataclass(frozen=True)
class MobilityConfig:
    f_d: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.f_d) and self.f_d > 0.0):
            raise DomainError("doppler_range", f"f_d={self.f_d!r} must be finite and > 0")


class Method(StrEnum):
    CLOSED_FORM = "closed-form"
    QUADRATURE = "quadrature"


@dataclass(frozen=True)
class Statistic:
    value: float
    method: Method
    error_estimate: float = 0.0

    def __post_init__(self) -> None:
        if self.error_estimate < 0:
            raise DomainError("statistic", f"error_estimate={self.error_estimate!r} must be >= 0")
        if self.method is Method.CLOSED_FORM and self.error_estimate != 0.0:
            raise DomainError("statistic", "a closed-form statistic carries no error estimate")

    @classmethod
    def closed(cls, value: float) -> Statistic:
        return cls(float(value), Method.CLOSED_FORM, 0.0)

    @classmethod
    def from_quad(cls, result: QuadResult, what: str, scale: float = 1.0) -> Statistic:
        value = result.require(what)
        return cls(float(value * scale), Method.QUADRATURE, float(abs(scale) * result.error_estimate))

    def scaled(self, factor: float) -> Statistic:
        return Statistic(self.value * factor, self.method, abs(factor) * self.error_estimate)


# --- the phase-average operator --------------------------------------------------------


def k_bar(model: ChannelModel, alpha: ArrayLike) -> Any:
    """Equivalent Rician LOS parameter K(1 + Δ cos α)."""
    out = model.K * (1.0 + model.delta * np.cos(np.asarray(alpha, dtype=float)))
    # rounding can push K(1 - cos π) a hair below zero
    out = np.maximum(out, 0.0)
    return float(out) if np.ndim(out) == 0 else out


def phase_average(
    model: ChannelModel,
    h: Callable[[Any], Any],
    spec: QuadSpec = QuadSpec(),
    what: str = "phase average",
) -> Statistic:
    """∫ h(α) f_α(α) dα over the model's phase distribution.

    `h` may be vectorized over a numpy array of α; the periodic rule then evaluates a
    whole grid per call.
    """
    phase = model.phase
    if isinstance(phase, Uniform) or (isinstance(phase, TruncatedUniform) and phase.is_full):
        return Statistic.from_quad(integrate_periodic(h, spec), what, 1.0 / TWO_PI)
    if isinstance(phase, TruncatedUniform):
        lo, hi = phase.support
        scalar_h = lambda a: float(np.asarray(h(a), dtype=float))  # noqa: E731
        return Statistic.from_quad(integrate_finite(scalar_h, lo, hi, spec), what, 1.0 / (TWO_PI * phase.p))
    if phase.eta == 0.0:
        return Statistic.from_quad(integrate_periodic(h, spec), what, 1.0 / TWO_PI)
    weight = phase.pdf

    def weighted(alpha: Any) -> Any:
        return np.asarray(h(alpha), dtype=float) * weight(alpha)

    return Statistic.from_quad(integrate_periodic(weighted, spec), what)


# --- Rician building blocks ------------------------------------------------------------


def _nonnegative(name: str, x: ArrayLike) -> np.ndarray:
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)) or np.any(arr < 0):
        raise DomainError(f"{name}_range", f"{name} must be finite and >= 0")
    return arr


def rician_envelope_pdf(r: ArrayLike, K: ArrayLike, sigma: float) -> Any:
    """(r/σ²) exp(-r²/2σ² - K) I0((r/σ)√(2K)), vectorized over r and K."""
    rr = _nonnegative("r", r)
    kk = _nonnegative("K", K)
    if not (math.isfinite(sigma) and sigma > 0):
        raise DomainError("sigma_range", f"sigma={sigma!r} must be > 0")
    u = rr / sigma
    b = np.sqrt(2.0 * kk)
    out = (u / sigma) * np.exp(-0.5 * (u - b) ** 2) * special.i0e(u * b)
    return float(out) if np.ndim(out) == 0 else out


def rician_snr_pdf(gamma: float, K_bar: ArrayLike, K: float, gamma_bar: float) -> Any:
    """Rician SNR pdf with LOS parameter K̄ and the fixed factor (1 + K)/γ̄."""
    c = (1.0 + K) / gamma_bar
    kb = _nonnegative("K", K_bar)
    x = math.sqrt(c * gamma)
    out = c * np.exp(-((x - np.sqrt(kb)) ** 2)) * special.i0e(2.0 * x * np.sqrt(kb))
    return float(out) if np.ndim(out) == 0 else out


def check_mgf_domain(s: float, model: ChannelModel) -> None:
    if not math.isfinite(s):
        raise DomainError("mgf_domain", f"s={s!r} is not finite")
    if s * model.gamma_bar >= 1.0 + model.K:
        raise DomainError(
            "mgf_domain", f"s*gamma_bar = {s * model.gamma_bar:g} must be < 1 + K = {1.0 + model.K:g}"
        )


def rician_mgf(s: float, K_bar: ArrayLike, K: float, gamma_bar: float) -> Any:
    """((1+K)/(1+K-sγ̄)) exp(K̄sγ̄/(1+K-sγ̄)), vectorized over K̄."""
    d = 1.0 + K - s * gamma_bar
    out = ((1.0 + K) / d) * np.exp(np.asarray(K_bar, dtype=float) * s * gamma_bar / d)
    return float(out) if np.ndim(out) == 0 else out


def rician_mgf_derivative(s: float, K_bar: ArrayLike, K: float, gamma_bar: float) -> Any:
    d = 1.0 + K - s * gamma_bar
    kb = np.asarray(K_bar, dtype=float)
    out = ((1.0 + K) * gamma_bar / d**2) * np.exp(kb * s * gamma_bar / d) * (1.0 + kb * (1.0 + K) / d)
    return float(out) if np.ndim(out) == 0 else out


# --- channel statistics ----------------------------------------------------------------


def envelope_pdf(r: float, model: ChannelModel, spec: QuadSpec = QuadSpec(), closed_form: bool = True) -> Statistic:
    _nonnegative("r", r)
    sigma = model.sigma
    if closed_form and model.is_rician:
        return Statistic.closed(rician_envelope_pdf(r, model.K, sigma))
    return phase_average(model, lambda a: rician_envelope_pdf(r, k_bar(model, a), sigma), spec, "envelope pdf")


def envelope_pdf_two_ray_form(r: float, model: ChannelModel, spec: QuadSpec = QuadSpec()) -> Statistic:
    """GTR-U envelope pdf in its classical single-integral form.

        (r/σ²) exp(-r²/2σ² - K) (1/π) ∫₀^π exp(KΔ cos θ) I0((r/σ)√(2K(1 - Δ cos θ))) dθ

    Independent of `phase_average`, so it serves as a change-of-variables check.
    """
    if not isinstance(model.phase, Uniform):
        raise DomainError("uniform_phase", "the two-ray single-integral form holds for uniform phase only")
    _nonnegative("r", r)
    u = r / model.sigma
    K, delta = model.K, model.delta

    def integrand(theta: float) -> float:
        b = math.sqrt(max(2.0 * K * (1.0 - delta * math.cos(theta)), 0.0))
        return (u / model.sigma) * math.exp(-0.5 * (u - b) ** 2) * float(special.i0e(u * b))

    return Statistic.from_quad(integrate_finite(integrand, 0.0, math.pi, spec), "two-ray envelope pdf", 1.0 / math.pi)


def snr_pdf(gamma: float, model: ChannelModel, spec: QuadSpec = QuadSpec(), closed_form: bool = True) -> Statistic:
    _nonnegative("gamma", gamma)
    K, gb = model.K, model.gamma_bar
    if closed_form and model.is_rician:
        return Statistic.closed(rician_snr_pdf(gamma, K, K, gb))
    return phase_average(model, lambda a: rician_snr_pdf(gamma, k_bar(model, a), K, gb), spec, "snr pdf")


def envelope_cdf(r: float, model: ChannelModel, spec: QuadSpec = QuadSpec(), closed_form: bool = True) -> Statistic:
    """1 - E_α[Q1(√(2K̄(α)), r/σ)], evaluated as E_α[1 - Q1] to keep the deep tail."""
    _nonnegative("r", r)
    b = r / model.sigma
    if closed_form and model.is_rician:
        return Statistic.closed(specfun.marcum_p1(math.sqrt(2.0 * model.K), b))
    stat = phase_average(
        model, lambda a: specfun.marcum_p1(np.sqrt(2.0 * np.asarray(k_bar(model, a))), b), spec, "envelope cdf"
    )
    return replace(stat, value=min(max(stat.value, 0.0), 1.0))


def _scaled_i0_ratio_exponent(z: float) -> tuple[float, float]:
    """I0(z) = ive(0, z) * exp(|z|); returns (ive, |z|)."""
    return float(special.i0e(z)), abs(z)


def mgf(s: float, model: ChannelModel, spec: QuadSpec = QuadSpec(), closed_form: bool = True) -> Statistic:
    """E[e^{sγ}] for sγ̄ < 1 + K."""
    check_mgf_domain(s, model)
    K, gb, delta = model.K, model.gamma_bar, model.delta
    d = 1.0 + K - s * gb
    phase = model.phase
    if closed_form and (model.is_rician or isinstance(phase, Uniform) or (isinstance(phase, VonMises) and phase.eta == 0.0)):
        z = K * s * gb * delta / d
        i0, absz = _scaled_i0_ratio_exponent(z)
        return Statistic.closed(((1.0 + K) / d) * math.exp(K * s * gb / d + absz) * i0)
    if closed_form and isinstance(phase, VonMises):
        b = K * s * gb * delta / d
        z = phase.eta - b if phase.centered_at_pi else -phase.eta - b
        i0, absz = _scaled_i0_ratio_exponent(z)
        log_scale = K * s * gb / d + absz - phase.eta
        return Statistic.closed(((1.0 + K) / d) * math.exp(log_scale) * i0 / float(special.i0e(phase.eta)))
    return phase_average(model, lambda a: rician_mgf(s, k_bar(model, a), K, gb), spec, "mgf")


def moment(k: int, model: ChannelModel, spec: QuadSpec = QuadSpec(), closed_form: bool = True) -> Statistic:
    """E[γ^k] = (k! γ̄^k / (1+K)^k) E_α[L_k(-K̄(α))]."""
    if isinstance(k, bool) or int(k) != k or k < 1:
        raise DomainError("moment_order", f"moment order {k!r} must be an integer >= 1")
    k = int(k)
    K, gb, delta = model.K, model.gamma_bar, model.delta
    scale = math.factorial(k) * (gb / (1.0 + K)) ** k
    if closed_form and isinstance(model.phase, Uniform):
        if k == 1:
            return Statistic.closed(gb)
        if k == 2:
            return Statistic.closed((gb / (1.0 + K)) ** 2 * (2.0 + 4.0 * K + K**2 * (1.0 + delta**2 / 2.0)))
    if closed_form and model.is_rician:
        return Statistic.closed(scale * specfun.laguerre(k, -K))
    return phase_average(model, lambda a: specfun.laguerre(k, -np.asarray(k_bar(model, a))), spec, f"moment {k}").scaled(scale)


def _mean_cos(phase: PhaseDistribution) -> float | None:
    """E[cos α] where a closed form applies."""
    if isinstance(phase, Uniform):
        return 0.0
    if isinstance(phase, VonMises):
        return phase.sign * specfun.bessel_ratio_i1_i0(phase.eta)
    if phase.phi == 0.0:
        return -specfun.sinc_pi(phase.p)
    return None


def mean_snr(model: ChannelModel, spec: QuadSpec = QuadSpec()) -> Statistic:
    """E[γ] = γ̄ (1 + Δ K/(K+1) E[cos α])."""
    mean_cos = _mean_cos(model.phase)
    if mean_cos is None:
        return moment(1, model, spec, closed_form=False)
    return Statistic.closed(model.gamma_bar * (1.0 + model.delta * model.K / (model.K + 1.0) * mean_cos))


def amount_of_fading(model: ChannelModel, spec: QuadSpec = QuadSpec()) -> Statistic:
    """Var(γ) / E[γ]²."""
    K, delta = model.K, model.delta
    if isinstance(model.phase, Uniform):
        return Statistic.closed((2.0 + 4.0 * K + K**2 * delta**2) / (2.0 * (1.0 + K) ** 2))
    m1 = moment(1, model, spec)
    m2 = moment(2, model, spec)
    value = (m2.value - m1.value**2) / m1.value**2
    error = m2.error_estimate / m1.value**2 + 2.0 * m2.value * m1.error_estimate / m1.value**3
    if m1.method is Method.CLOSED_FORM and m2.method is Method.CLOSED_FORM:
        return Statistic.closed(value)
    return Statistic(value, Method.QUADRATURE, error)


def _positive_threshold(r_th: float) -> None:
    if not (math.isfinite(r_th) and r_th > 0):
        raise DomainError("threshold_range", f"r_th={r_th!r} must be finite and > 0")


def level_crossing_rate(r_th: float, model: ChannelModel, mob: MobilityConfig, spec: QuadSpec = QuadSpec()) -> Statistic:
    """Downward crossings per second: √(π/2) √(P̄r/(K+1)) f_d f_R(r_th).

    Assumes Doppler-free LOS rays and isotropic 2-D diffuse scattering.
    """
    _positive_threshold(r_th)
    factor = math.sqrt(math.pi / 2.0) * math.sqrt(model.p_r / (model.K + 1.0)) * mob.f_d
    return envelope_pdf(r_th, model, spec).scaled(factor)


def average_outage_duration(r_th: float, model: ChannelModel, mob: MobilityConfig, spec: QuadSpec = QuadSpec()) -> Statistic:
    """Seconds spent below r_th per fade: F_R(r_th) / LCR(r_th)."""
    _positive_threshold(r_th)
    lcr = level_crossing_rate(r_th, model, mob, spec)
    if not lcr.value > 0.0:
        raise DomainError("nonzero_crossing_rate", f"envelope pdf vanishes at r_th={r_th:g}; outage duration undefined")
    cdf = envelope_cdf(r_th, model, spec)
    value = cdf.value / lcr.value
    if cdf.method is Method.CLOSED_FORM and lcr.method is Method.CLOSED_FORM:
        return Statistic.closed(value)
    error = cdf.error_estimate / lcr.value + cdf.value * lcr.error_estimate / lcr.value**2
    return Statistic(value, Method.QUADRATURE, error)
