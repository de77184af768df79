"""Monte Carlo oracle for the analytic statistics.

Samples the physical two-ray-plus-diffuse model directly:

    V_r = V1 e^{jφ1} + V2 e^{j(φ1 + α)} + X + jY

with φ1 ~ U(0, 2π), α drawn from the model's phase distribution and X, Y ~ N(0, σ²).
Nothing here calls the phase-average operator, so agreement with `models` and `perf` is
a real check.

## Reproducibility

Worker w draws from `Generator(Philox(SeedSequence(seed, spawn_key=(w,))))`, a
counter-based stream owned by that worker alone. Samples are split evenly across
workers (the first `n % workers` take one extra), each worker draws in fixed blocks,
and per-worker accumulators are merged in worker order. The result depends on
`(seed, workers, n_samples)` only, never on thread scheduling. Normals come from
numpy's ziggurat sampler, which is part of the `Generator` contract for a fixed bit
generator.

SEP is estimated by conditional averaging: `awgn_sep(mod, γ)` over sampled SNRs, not
bit-level modem simulation.
"""

from __future__ import annotations

import math
from collections.abc import Callable, Iterator
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .config import SEED_LIMIT
from .errors import DomainError
from .models import ChannelModel, PhaseDistribution, TruncatedUniform, Uniform, VonMises
from .perf import LOG2E, Family, LinkConfig, Modulation, awgn_sep

BLOCK_SIZE = 1 << 16
KS_POINTS = 5000
VON_MISES_SMALL_ETA = 1e-5
TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class SimConfig:
    n_samples: int
    seed: int
    workers: int = 1

    def __post_init__(self) -> None:
        if isinstance(self.n_samples, bool) or not isinstance(self.n_samples, int) or self.n_samples < 1:
            raise DomainError("sample_count", f"n_samples={self.n_samples!r} must be an integer >= 1")
        if isinstance(self.seed, bool) or not isinstance(self.seed, int) or not 0 <= self.seed < SEED_LIMIT:
            raise DomainError("seed_range", f"seed={self.seed!r} must be an unsigned 64-bit integer")
        if isinstance(self.workers, bool) or not isinstance(self.workers, int) or self.workers < 1:
            raise DomainError("worker_count", f"workers={self.workers!r} must be an integer >= 1")


@dataclass
class RunningMoments:
    """Count, mean and centered sum of squares; merged with Chan's pairwise update."""

    n: int = 0
    mean: float = 0.0
    m2: float = 0.0

    def add(self, values: np.ndarray) -> None:
        if values.size == 0:
            return
        block = RunningMoments(int(values.size), float(values.mean()), float(((values - values.mean()) ** 2).sum()))
        self.merge(block)

    def merge(self, other: RunningMoments) -> None:
        if other.n == 0:
            return
        n = self.n + other.n
        delta = other.mean - self.mean
        self.mean += delta * other.n / n
        self.m2 += other.m2 + delta * delta * self.n * other.n / n
        self.n = n

    @property
    def variance(self) -> float:
        return self.m2 / (self.n - 1) if self.n > 1 else 0.0

    @property
    def std_error(self) -> float:
        return math.sqrt(self.variance / self.n) if self.n else 0.0


@dataclass(frozen=True)
class EmpiricalSummary:
    """Envelope sample summary. `raw_moments` holds E[r²], E[r³], E[r⁴]."""

    mean: float
    raw_moments: tuple[float, float, float]
    ecdf: np.ndarray = field(repr=False)
    n: int = 0

    def __post_init__(self) -> None:
        if self.ecdf.size != self.n:
            raise DomainError("summary_size", f"ecdf holds {self.ecdf.size} samples, n={self.n}")
        if self.n > 1 and np.any(np.diff(self.ecdf) < 0):
            raise DomainError("summary_order", "ecdf must be sorted")

    def cdf_at(self, r: float) -> float:
        return float(np.searchsorted(self.ecdf, r, side="right")) / self.n


@dataclass(frozen=True)
class MonteCarloEstimate:
    estimate: float
    std_error: float
    n: int


# --- streams -------------------------------------------------------------------------


def worker_rng(seed: int, worker: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(worker,))))


def split_samples(n: int, workers: int) -> list[int]:
    base, extra = divmod(n, workers)
    return [base + (1 if w < extra else 0) for w in range(workers)]


def _blocks(n: int) -> Iterator[int]:
    done = 0
    while done < n:
        size = min(BLOCK_SIZE, n - done)
        yield size
        done += size


def _run_workers(cfg: SimConfig, job: Callable[[np.random.Generator, int], object]) -> list:
    shares = split_samples(cfg.n_samples, cfg.workers)
    if cfg.workers == 1:
        return [job(worker_rng(cfg.seed, 0), shares[0])]
    with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
        return list(pool.map(lambda w: job(worker_rng(cfg.seed, w), shares[w]), range(cfg.workers)))


# --- samplers ------------------------------------------------------------------------


def sample_von_mises(eta: float, center: float, rng: np.random.Generator, n: int | None = None) -> np.ndarray | float:
    """Best-Fisher rejection sampler on [0, 2π); η = 0 is uniform."""
    if not (math.isfinite(eta) and eta >= 0.0):
        raise DomainError("concentration_range", f"eta={eta!r} must be finite and >= 0")
    size = 1 if n is None else n
    if eta == 0.0:
        out = rng.uniform(0.0, TWO_PI, size)
        return float(out[0]) if n is None else out

    if eta < VON_MISES_SMALL_ETA:
        r = 1.0 / eta + eta
    else:
        tau = 1.0 + math.sqrt(1.0 + 4.0 * eta * eta)
        rho = (tau - math.sqrt(2.0 * tau)) / (2.0 * eta)
        r = (1.0 + rho * rho) / (2.0 * rho)

    out = np.empty(size)
    filled = 0
    while filled < size:
        need = size - filled
        u1 = rng.random(need)
        u2 = rng.random(need)
        u3 = rng.random(need)
        z = np.cos(math.pi * u1)
        f = np.clip((1.0 + r * z) / (r + z), -1.0, 1.0)
        c = eta * (r - f)
        with np.errstate(divide="ignore", invalid="ignore"):
            accept = (c * (2.0 - c) - u2 > 0.0) | (np.log(c / u2) + 1.0 - c >= 0.0)
        theta = np.sign(u3[accept] - 0.5) * np.arccos(f[accept])
        take = theta.size
        out[filled : filled + take] = theta
        filled += take
    out = np.mod(out + center, TWO_PI)
    return float(out[0]) if n is None else out


def sample_phase(phase: PhaseDistribution, rng: np.random.Generator, n: int) -> np.ndarray:
    if isinstance(phase, Uniform):
        return rng.uniform(0.0, TWO_PI, n)
    if isinstance(phase, TruncatedUniform):
        lo, _ = phase.support
        return lo + TWO_PI * phase.p * rng.random(n)
    if isinstance(phase, VonMises):
        return np.asarray(sample_von_mises(phase.eta, phase.center, rng, n))
    raise DomainError("phase_kind", f"no sampler for {phase!r}")


def sample_envelope_block(model: ChannelModel, rng: np.random.Generator, n: int) -> np.ndarray:
    """n envelope draws. Draw order per block: φ1, α, X, Y."""
    phi1 = rng.uniform(0.0, TWO_PI, n)
    alpha = sample_phase(model.phase, rng, n)
    x = rng.normal(0.0, model.sigma, n)
    y = rng.normal(0.0, model.sigma, n)
    v1, v2 = model.v1, model.v2
    re = v1 * np.cos(phi1) + v2 * np.cos(phi1 + alpha) + x
    im = v1 * np.sin(phi1) + v2 * np.sin(phi1 + alpha) + y
    return np.hypot(re, im)


def sample_snr(model: ChannelModel, rng: np.random.Generator, n: int) -> np.ndarray:
    """Instantaneous SNR γ = r²/N0."""
    return sample_envelope_block(model, rng, n) ** 2 / model.n0


# --- estimators ----------------------------------------------------------------------


def sample_envelope(model: ChannelModel, cfg: SimConfig) -> EmpiricalSummary:
    def job(rng: np.random.Generator, n: int) -> tuple[np.ndarray, np.ndarray]:
        parts = [sample_envelope_block(model, rng, size) for size in _blocks(n)]
        r = np.concatenate(parts) if parts else np.empty(0)
        sums = np.array([r.sum(), (r**2).sum(), (r**3).sum(), (r**4).sum()]) if r.size else np.zeros(4)
        return r, sums

    results = _run_workers(cfg, job)
    n = cfg.n_samples
    # per-power weighted means, merged in worker order
    sums = np.zeros(4)
    for _, s in results:
        sums += s
    means = sums / n
    ecdf = np.sort(np.concatenate([r for r, _ in results]))
    return EmpiricalSummary(
        mean=float(means[0]),
        raw_moments=(float(means[1]), float(means[2]), float(means[3])),
        ecdf=ecdf,
        n=n,
    )


def _link_snr(link: LinkConfig, rng: np.random.Generator, n: int) -> np.ndarray:
    """MRC output SNR: the sum of independent branch draws, branch by branch."""
    total = np.zeros(n)
    for branch in link.branches:
        total += sample_snr(branch, rng, n)
    return total


def _estimate(link: LinkConfig, cfg: SimConfig, metric: Callable[[np.ndarray], np.ndarray]) -> MonteCarloEstimate:
    def job(rng: np.random.Generator, n: int) -> RunningMoments:
        acc = RunningMoments()
        for size in _blocks(n):
            acc.add(metric(_link_snr(link, rng, size)))
        return acc

    merged = RunningMoments()
    for acc in _run_workers(cfg, job):
        merged.merge(acc)
    return MonteCarloEstimate(estimate=merged.mean, std_error=merged.std_error, n=merged.n)


def mc_sep(mod: Modulation, link: LinkConfig, cfg: SimConfig) -> MonteCarloEstimate:
    if mod.family is Family.MFSK and link.L != 1:
        raise DomainError("mfsk_single_branch", f"M-FSK SEP is defined for a single branch, got L={link.L}")
    return _estimate(link, cfg, lambda gamma: np.asarray(awgn_sep(mod, gamma)))


def mc_capacity(link: LinkConfig, cfg: SimConfig) -> MonteCarloEstimate:
    """E[log₂(1 + γ)] in bps/Hz."""
    return _estimate(link, cfg, lambda gamma: LOG2E * np.log1p(gamma))


def mc_mean_snr(link: LinkConfig, cfg: SimConfig) -> MonteCarloEstimate:
    return _estimate(link, cfg, lambda gamma: gamma)


def ks_distance(summary: EmpiricalSummary, cdf: Callable[[float], float], points: int = KS_POINTS) -> float:
    """Upper bound on sup |F_n - F| from up to `points` evenly spaced order statistics.

    With n <= points every order statistic is evaluated and the value is exact. Otherwise
    the skipped order statistics between two evaluated ones can add at most the index
    gap over n, and that gap is included, so the result never understates the distance.
    """
    n = summary.n
    idx = np.unique(np.linspace(0, n - 1, min(points, n)).round().astype(int))
    f = np.array([cdf(float(summary.ecdf[i])) for i in idx])
    above = (idx + 1) / n - f
    below = f - idx / n
    worst = max(float(above.max()), float(below.max()))
    if idx.size > 1:
        # F and F_n are monotone: between evaluated i < j the deviation is bounded by
        # the larger of the adjacent one-sided gaps plus (j - i - 1)/n
        skipped = (np.diff(idx) - 1) / n
        worst = max(worst, float(np.max(np.maximum(above[:-1], below[1:]) + skipped)))
    return min(worst, 1.0)
