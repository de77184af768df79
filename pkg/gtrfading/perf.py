"""System performance through the MGF: symbol error probability, DBPSK, ergodic capacity.

Every metric here is a functional of the SNR moment generating function from `models`.
Maximal ratio combining over independent branches multiplies branch MGFs, and the
derivative of that product (`link_mgf_derivative`) drives the capacity integral.

SEP rows use the auxiliary integral

    I_β[g] = (1/π) ∫₀^β g(θ) dθ

evaluated by `quad.integrate_finite`.

The high-SNR capacity intercepts (`capacity_high_snr`) come from the derivative of the
n-th SNR moment at n = 0:

- the Rician row is `rician_moment_derivative`
- the GTR row adds log((1 + √(1 - Δ²))/2) and replaces Γ(0, K) with `j_integral`

Their difference is the asymptotic capacity loss δ_C (`capacity_loss`).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import StrEnum
from typing import Any

import numpy as np
from numpy.polynomial.legendre import leggauss
from numpy.typing import ArrayLike
from scipy import special

from . import specfun
from .errors import DomainError
from .models import (
    ChannelModel,
    Method,
    Statistic,
    Uniform,
    check_mgf_domain,
    k_bar,
    mean_snr,
    mgf,
    phase_average,
    rician_mgf_derivative,
)
from .quad import QuadSpec, integrate_finite, integrate_semi_infinite

LOG2E = 1.0 / math.log(2.0)
SLOPE_NU = 0.1 * math.log(10.0) * LOG2E

AWGN_QUADRATURE_NODES = 128
_AWGN_ROWS_PER_CHUNK = 4096
# J integrand decay at or above this rate gets exponential panels; below it QAGI
_J_PANEL_RATE = 0.5


# --- modulations -----------------------------------------------------------------------


class Family(StrEnum):
    MPSK = "mpsk"
    MQAM = "mqam"
    MDPSK = "mdpsk"
    MFSK = "mfsk"


_ALIASES = {
    "bpsk": (Family.MPSK, 2),
    "qpsk": (Family.MPSK, 4),
    "dbpsk": (Family.MDPSK, 2),
    "dqpsk": (Family.MDPSK, 4),
    "bfsk": (Family.MFSK, 2),
}


@dataclass(frozen=True)
class Modulation:
    family: Family
    M: int

    def __post_init__(self) -> None:
        M = self.M
        if isinstance(M, bool) or not isinstance(M, int) or M < 2:
            raise DomainError("constellation_size", f"{self.family}: M={M!r} must be an integer >= 2")
        if self.family is Family.MQAM:
            root = math.isqrt(M)
            if root * root != M or M < 4:
                raise DomainError("constellation_size", f"mqam: M={M} must be a perfect square >= 4")
        elif M & (M - 1):
            raise DomainError("constellation_size", f"{self.family}: M={M} must be a power of two")

    @property
    def max_sep(self) -> float:
        """SEP with no signal, (M - 1)/M."""
        return (self.M - 1) / self.M

    def describe(self) -> str:
        return f"{self.M}-{self.family.value[1:].upper()}"


def parse_modulation(text: str) -> Modulation:
    """`bpsk`, `qpsk`, `dbpsk`, `16qam`, `mpsk:8`, `mqam:64`, ..."""
    raw = text.strip().lower()
    if raw in _ALIASES:
        family, M = _ALIASES[raw]
        return Modulation(family, M)
    head, sep, size = raw.partition(":")
    if not sep:
        for family in Family:
            suffix = family.value[1:]
            if raw.endswith(suffix) and raw[: -len(suffix)].isdigit():
                head, size = family.value, raw[: -len(suffix)]
                break
        else:
            raise DomainError("modulation_syntax", f"unknown modulation {text!r}; try 16qam, qpsk or mpsk:8")
    try:
        family = Family(head)
        M = int(size)
    except ValueError as e:
        raise DomainError("modulation_syntax", f"unknown modulation {text!r}; try 16qam, qpsk or mpsk:8") from e
    return Modulation(family, M)


@dataclass(frozen=True)
class LinkConfig:
    """MRC over independent branches."""

    branches: tuple[ChannelModel, ...]

    def __post_init__(self) -> None:
        if len(self.branches) < 1:
            raise DomainError("branch_count", "a link needs at least one branch")

    @classmethod
    def iid(cls, model: ChannelModel, L: int = 1) -> LinkConfig:
        if isinstance(L, bool) or int(L) != L or L < 1:
            raise DomainError("branch_count", f"L={L!r} must be an integer >= 1")
        return cls(tuple([model] * int(L)))

    @property
    def L(self) -> int:
        return len(self.branches)

    @property
    def gamma_bar(self) -> float:
        return sum(b.gamma_bar for b in self.branches)


# --- AWGN conditional SEP --------------------------------------------------------------


def _legendre_rule(beta: float) -> tuple[np.ndarray, np.ndarray]:
    x, w = leggauss(AWGN_QUADRATURE_NODES)
    return 0.5 * beta * (x + 1.0), 0.5 * beta * w


def _awgn_integral(exponent: np.ndarray, beta: float, gamma: np.ndarray) -> np.ndarray:
    """(1/π) ∫₀^β exp(-γ e(θ)) dθ for each γ, with e(θ) sampled at the Legendre nodes."""
    _, w = _legendre_rule(beta)
    out = np.empty_like(gamma)
    for start in range(0, gamma.size, _AWGN_ROWS_PER_CHUNK):
        g = gamma[start : start + _AWGN_ROWS_PER_CHUNK, None]
        out[start : start + _AWGN_ROWS_PER_CHUNK] = np.exp(-g * exponent[None, :]) @ w / math.pi
    return out


def _q(x: np.ndarray) -> np.ndarray:
    """Gaussian tail Q(√(2x)) = ½ erfc(√x)."""
    return 0.5 * special.erfc(np.sqrt(x))


def awgn_sep(mod: Modulation, gamma: ArrayLike, closed_form: bool = True) -> Any:
    """SEP of `mod` on an AWGN channel at SNR γ, vectorized over γ.

    Closed forms cover BPSK, QPSK, M-QAM, DBPSK and M-FSK; the other rows (and any row
    with `closed_form=False`) integrate the conditional integrand with a fixed
    Gauss-Legendre rule.
    """
    g = np.asarray(gamma, dtype=float)
    if not np.all(np.isfinite(g)) or np.any(g < 0):
        raise DomainError("gamma_range", "awgn_sep: gamma must be finite and >= 0")
    flat = g.ravel()
    M = mod.M
    fam = mod.family

    if fam is Family.MFSK:
        out = np.zeros_like(flat)
        for m in range(1, M):
            out += (-1.0) ** (m + 1) * special.comb(M - 1, m) / (m + 1) * np.exp(-m * flat / (m + 1))
    elif fam is Family.MQAM:
        gq = 3.0 / (2.0 * (M - 1))
        c = 1.0 - 1.0 / math.sqrt(M)
        if closed_form:
            q = _q(gq * flat)
            out = 4.0 * c * q - 4.0 * c * c * q * q
        else:
            theta, _ = _legendre_rule(math.pi / 2)
            i_half = _awgn_integral(gq / np.sin(theta) ** 2, math.pi / 2, flat)
            theta, _ = _legendre_rule(math.pi / 4)
            i_quarter = _awgn_integral(gq / np.sin(theta) ** 2, math.pi / 4, flat)
            out = 4.0 * c * i_half - 4.0 * c * c * i_quarter
    elif fam is Family.MPSK:
        if closed_form and M == 2:
            out = _q(flat)
        elif closed_form and M == 4:
            q = _q(flat / 2.0)
            out = 2.0 * q - q * q
        else:
            beta = (M - 1) * math.pi / M
            theta, _ = _legendre_rule(beta)
            out = _awgn_integral(math.sin(math.pi / M) ** 2 / np.sin(theta) ** 2, beta, flat)
    else:
        if closed_form and M == 2:
            out = 0.5 * np.exp(-flat)
        else:
            beta = (M - 1) * math.pi / M
            theta, _ = _legendre_rule(beta)
            exponent = math.sin(math.pi / M) ** 2 / (1.0 + math.cos(math.pi / M) * np.cos(theta))
            out = _awgn_integral(exponent, beta, flat)

    out = np.clip(out, 0.0, mod.max_sep).reshape(g.shape)
    return float(out) if out.ndim == 0 else out


# --- MGF-based SEP ---------------------------------------------------------------------


def link_mgf(s: float, link: LinkConfig, spec: QuadSpec = QuadSpec()) -> float:
    """MGF of the MRC output SNR: the product of branch MGFs."""
    value = 1.0
    for branch in link.branches:
        value *= mgf(s, branch, spec).value
    return value


def _aux_integral(g: Any, beta: float, spec: QuadSpec, what: str) -> Statistic:
    return Statistic.from_quad(integrate_finite(g, 0.0, beta, spec), what, 1.0 / math.pi)


def sep(mod: Modulation, link: LinkConfig, spec: QuadSpec = QuadSpec()) -> Statistic:
    """Average SEP of `mod` over the MRC link."""
    M = mod.M
    fam = mod.family
    if fam is Family.MFSK:
        if link.L != 1:
            raise DomainError("mfsk_single_branch", f"M-FSK SEP is defined for a single branch, got L={link.L}")
        branch = link.branches[0]
        total = error = 0.0
        closed = True
        for m in range(1, M):
            stat = mgf(-m / (m + 1.0), branch, spec)
            closed = closed and stat.method is Method.CLOSED_FORM
            weight = float(special.comb(M - 1, m)) / (m + 1)
            total += (-1.0) ** (m + 1) * weight * stat.value
            error += weight * stat.error_estimate
        total = min(max(total, 0.0), mod.max_sep)
        return Statistic.closed(total) if closed else Statistic(total, Method.QUADRATURE, error)

    def coherent(scale: float) -> Any:
        def integrand(theta: float) -> float:
            sin2 = math.sin(theta) ** 2
            if sin2 == 0.0:
                return 0.0
            return link_mgf(-scale / sin2, link, spec)

        return integrand

    if fam is Family.MPSK:
        result = _aux_integral(coherent(math.sin(math.pi / M) ** 2), (M - 1) * math.pi / M, spec, "mpsk sep")
    elif fam is Family.MQAM:
        gq = 3.0 / (2.0 * (M - 1))
        c = 1.0 - 1.0 / math.sqrt(M)
        half = _aux_integral(coherent(gq), math.pi / 2, spec, "mqam sep")
        quarter = _aux_integral(coherent(gq), math.pi / 4, spec, "mqam sep")
        value = 4.0 * c * half.value - 4.0 * c * c * quarter.value
        error = 4.0 * c * half.error_estimate + 4.0 * c * c * quarter.error_estimate
        result = Statistic(value, Method.QUADRATURE, error)
    else:
        s2 = math.sin(math.pi / M) ** 2
        cm = math.cos(math.pi / M)
        result = _aux_integral(
            lambda theta: link_mgf(-s2 / (1.0 + cm * math.cos(theta)), link, spec),
            (M - 1) * math.pi / M,
            spec,
            "mdpsk sep",
        )
    return Statistic(min(max(result.value, 0.0), mod.max_sep), result.method, result.error_estimate)


# --- DBPSK -----------------------------------------------------------------------------


def _require_uniform(model: ChannelModel, what: str) -> None:
    if not isinstance(model.phase, Uniform):
        raise DomainError("uniform_phase", f"{what} holds for uniform phase only; use sep() otherwise")


def ber_dbpsk_closed_form(model: ChannelModel) -> float:
    """½ ((1+K)/(1+K+γ̄)) exp(-Kγ̄/(1+K+γ̄)) I0(KΔγ̄/(1+K+γ̄)), i.e. ½ M(-1)."""
    _require_uniform(model, "the DBPSK closed form")
    K, gb, delta = model.K, model.gamma_bar, model.delta
    d = 1.0 + K + gb
    z = K * gb * delta / d
    return 0.5 * ((1.0 + K) / d) * math.exp(-K * gb * (1.0 - delta) / d) * float(special.i0e(z))


def ber_dbpsk_hyper_rayleigh(model: ChannelModel) -> float:
    """Two-ray limit K → ∞: ½ e^{-γ̄} I0(Δγ̄)."""
    gb, delta = model.gamma_bar, model.delta
    return 0.5 * math.exp(-gb * (1.0 - delta)) * float(special.i0e(delta * gb))


def ber_dbpsk_high_snr(model: ChannelModel) -> float:
    """γ̄ → ∞ asymptote ½ (1/(1 + γ̄/(K+1))) e^{-K} I0(ΔK)."""
    K, gb, delta = model.K, model.gamma_bar, model.delta
    return 0.5 / (1.0 + gb / (K + 1.0)) * math.exp(-K * (1.0 - delta)) * float(special.i0e(delta * K))


# --- MGF derivative and capacity ------------------------------------------------------


def mgf_derivative(s: float, model: ChannelModel, spec: QuadSpec = QuadSpec(), closed_form: bool = True) -> Statistic:
    """dM/ds.

    For uniform phase:

        (1+K)γ̄/D² e^{Ksγ̄/D} [ I0(z)(1 + K(1+K)/D) + (KΔ(1+K)/D) I1(z) ]

    with D = 1 + K - sγ̄ and z = KΔsγ̄/D. Other phase laws average the Rician
    derivative over α.
    """
    check_mgf_domain(s, model)
    K, gb, delta = model.K, model.gamma_bar, model.delta
    d = 1.0 + K - s * gb
    if closed_form and (model.is_rician or isinstance(model.phase, Uniform)):
        z = K * s * gb * delta / d
        bracket = float(special.i0e(z)) * (1.0 + K * (1.0 + K) / d) + (K * delta * (1.0 + K) / d) * float(special.i1e(z))
        return Statistic.closed(((1.0 + K) * gb / d**2) * math.exp(K * s * gb / d + abs(z)) * bracket)
    return phase_average(model, lambda a: rician_mgf_derivative(s, k_bar(model, a), K, gb), spec, "mgf derivative")


def link_mgf_derivative(s: float, link: LinkConfig, spec: QuadSpec = QuadSpec()) -> float:
    """Product rule over branches: Σ_l M'_l(s) Π_{j≠l} M_j(s)."""
    values = [mgf(s, b, spec).value for b in link.branches]
    derivs = [mgf_derivative(s, b, spec).value for b in link.branches]
    total = 0.0
    for l, deriv in enumerate(derivs):
        others = math.prod(v for j, v in enumerate(values) if j != l)
        total += deriv * others
    return total


def capacity_ora(link: LinkConfig, spec: QuadSpec = QuadSpec()) -> Statistic:
    """Ergodic capacity with receiver CSI, bps/Hz: log₂e ∫₀^∞ Γ(0, s) M'(-s) ds."""

    def integrand(s: float) -> float:
        return float(specfun.gamma_upper_zero(s)) * link_mgf_derivative(-s, link, spec)

    result = integrate_semi_infinite(integrand, 0.0, spec, decay_rate=1.0, log_singular=True)
    return Statistic.from_quad(result, "ergodic capacity", LOG2E)


def capacity_low_snr(link: LinkConfig) -> float:
    """Low-SNR slope: log₂e Σ E[γ_l]. Equals γ̄ log₂e for uniform-phase branches."""
    return LOG2E * sum(mean_snr(b).value for b in link.branches)


class CapacityRegime(StrEnum):
    RICE = "rice"
    GTR = "gtr"
    GTR_APPROX = "gtr-approx"
    GTR_DELTA1 = "gtr-delta1"


@dataclass(frozen=True)
class AsymptoticCapacity:
    """C ≈ ν γ̄[dB] + μ as γ̄ → ∞."""

    slope_nu: float
    intercept_mu: float
    regime: CapacityRegime

    def at(self, snr_db: ArrayLike) -> Any:
        out = self.slope_nu * np.asarray(snr_db, dtype=float) + self.intercept_mu
        return float(out) if np.ndim(out) == 0 else out


def _check_K_delta(K: float, delta: float, *, K_positive: bool) -> None:
    if not math.isfinite(K) or K < 0 or (K_positive and K == 0):
        raise DomainError("K_range", f"K={K!r} must be finite and {'> 0' if K_positive else '>= 0'}")
    if not (math.isfinite(delta) and 0.0 <= delta <= 1.0):
        raise DomainError("delta_range", f"delta={delta!r} must be in [0, 1]")


def rician_moment_derivative(K: float, gamma_bar: float) -> float:
    """d/dn E[γ^n] at n = 0 for Rician fading: Γ(0,K) + log K + log(γ̄/(K+1))."""
    _check_K_delta(K, 0.0, K_positive=False)
    if not (math.isfinite(gamma_bar) and gamma_bar > 0):
        raise DomainError("gamma_bar_range", f"gamma_bar={gamma_bar!r} must be finite and > 0")
    return float(specfun.e1_plus_log(K)) + math.log(gamma_bar / (K + 1.0))


def log_cos_average(delta: float) -> float:
    """(1/2π) ∫₀^{2π} log(1 + Δ cos θ) dθ = log((1 + √(1 - Δ²))/2)."""
    _check_K_delta(0.0, delta, K_positive=False)
    return math.log((1.0 + math.sqrt(1.0 - delta * delta)) / 2.0)


def j_integral(K: float, delta: float, spec: QuadSpec = QuadSpec()) -> Statistic:
    """𝒥(K, Δ) = ∫₁^∞ (e^{-tK}/t) I0(tKΔ) dt; Γ(0, K) at Δ = 0."""
    _check_K_delta(K, delta, K_positive=True)
    if delta == 0.0:
        return Statistic.closed(specfun.gamma_upper_zero(K))
    rate = K * (1.0 - delta)

    def integrand(t: float) -> float:
        return math.exp(-t * rate) * float(special.i0e(t * K * delta)) / t

    decay = rate if rate >= _J_PANEL_RATE else None
    return Statistic.from_quad(integrate_semi_infinite(integrand, 1.0, spec, decay_rate=decay), "J integral")


def j_integral_hankel(K: float, delta: float) -> float:
    """Large-KΔ form of 𝒥 from the leading Hankel term of I0.

    √(2/π) e^{-c} [1/√(KΔ) - √(π(1/Δ - 1)) erfcx(√c)] with c = K(1 - Δ); √(2/(πK)) at
    Δ = 1. Accurate to about 1/(8KΔ) relative.
    """
    _check_K_delta(K, delta, K_positive=True)
    if delta == 0.0:
        raise DomainError("delta_range", "the large-K*delta form needs delta > 0")
    if delta == 1.0:
        return math.sqrt(2.0 / (math.pi * K))
    c = K * (1.0 - delta)
    bracket = 1.0 / math.sqrt(K * delta) - math.sqrt(math.pi * (1.0 / delta - 1.0)) * float(specfun.erfc_scaled(math.sqrt(c)))
    return math.sqrt(2.0 / math.pi) * math.exp(-c) * bracket


def capacity_loss_detailed(K: float, delta: float, spec: QuadSpec = QuadSpec(), approximate: bool = False) -> Statistic:
    """δ_C = log₂e {Γ(0,K) - log((1 + √(1-Δ²))/2) - 𝒥(K,Δ)}, in bps/Hz.

    `approximate` swaps 𝒥 for its large-KΔ form, which makes the result closed-form.
    """
    _check_K_delta(K, delta, K_positive=True)
    if delta == 0.0:
        return Statistic.closed(0.0)
    j = Statistic.closed(j_integral_hankel(K, delta)) if approximate else j_integral(K, delta, spec)
    value = LOG2E * (float(specfun.gamma_upper_zero(K)) - log_cos_average(delta) - j.value)
    return Statistic(value, j.method, LOG2E * j.error_estimate)


def capacity_loss(K: float, delta: float, spec: QuadSpec = QuadSpec(), approximate: bool = False) -> float:
    return capacity_loss_detailed(K, delta, spec, approximate).value


def capacity_loss_limit(delta: float) -> float:
    """δ_C as K → ∞: 1 - log₂(1 + √(1 - Δ²))."""
    _check_K_delta(0.0, delta, K_positive=False)
    return 1.0 - math.log2(1.0 + math.sqrt(1.0 - delta * delta))


def capacity_high_snr(model: ChannelModel, regime: CapacityRegime, spec: QuadSpec = QuadSpec()) -> AsymptoticCapacity:
    """High-SNR asymptote of `capacity_ora` for a single uniform-phase branch."""
    _require_uniform(model, "the high-SNR capacity asymptote")
    regime = CapacityRegime(regime)
    K, delta = model.K, model.delta
    # μ for the Rician row; log γ̄ is carried by the slope term
    mu_rice = LOG2E * (float(specfun.e1_plus_log(K)) - math.log(K + 1.0))
    if regime is CapacityRegime.RICE:
        return AsymptoticCapacity(SLOPE_NU, mu_rice, regime)
    if regime is CapacityRegime.GTR_DELTA1:
        if delta != 1.0:
            raise DomainError("regime_mismatch", f"gtr-delta1 needs delta = 1, got {delta:g}")
        if K == 0.0:
            raise DomainError("K_range", "gtr-delta1 needs K > 0")
        mu = LOG2E * (math.log(K / (K + 1.0)) - math.log(2.0) + math.sqrt(2.0 / (math.pi * K)))
        return AsymptoticCapacity(SLOPE_NU, mu, regime)
    if K == 0.0 or delta == 0.0:
        if regime is CapacityRegime.GTR_APPROX:
            raise DomainError("regime_mismatch", "gtr-approx needs K*delta > 0")
        return AsymptoticCapacity(SLOPE_NU, mu_rice, regime)
    loss = capacity_loss(K, delta, spec, approximate=regime is CapacityRegime.GTR_APPROX)
    return AsymptoticCapacity(SLOPE_NU, mu_rice - loss, regime)
