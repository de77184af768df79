"""Long-running Monte Carlo acceptance checks against the analytic side.

The unit tests cover the closed forms and quadrature with small fixed-seed runs. This
script runs the full-size oracles (10^6 envelope samples, 10^7 SEP and capacity samples)
and exits non-zero listing every check that drifted.

    python scripts/check_acceptance.py --workers 8
    python scripts/check_acceptance.py --quick        # 1/100 of the samples
"""
from __future__ import annotations

import argparse
import math
import time
from collections.abc import Callable

from gtrfading import mcsim
from gtrfading.config import DEFAULT_SEED, parse_seed
from gtrfading.models import ChannelModel, PhaseDistribution, TruncatedUniform, Uniform, VonMises, envelope_cdf
from gtrfading.perf import LinkConfig, capacity_ora, parse_modulation, sep
from gtrfading.sweep import db_to_linear

KS_BOUND = 0.002
SEP_SIGMAS = 3.0
CAPACITY_BOUND = 0.01


def _envelope_cases() -> list[tuple[str, ChannelModel]]:
    cases: list[tuple[float, float, PhaseDistribution]] = [
        (0.0, 0.0, Uniform()),
        (10.0, 1.0, Uniform()),
        (100.0, 0.5, Uniform()),
        (10.0, 1.0, TruncatedUniform(0.3)),
        (10.0, 1.0, VonMises(3.0)),
    ]
    return [
        (f"K={K:g} delta={delta:g} {phase.describe()}", ChannelModel(K=K, delta=delta, gamma_bar=1.0, phase=phase))
        for K, delta, phase in cases
    ]


def check_envelope(n: int, seed: int, workers: int) -> list[str]:
    errors: list[str] = []
    for label, model in _envelope_cases():
        summary = mcsim.sample_envelope(model, mcsim.SimConfig(n_samples=n, seed=seed, workers=workers))
        distance = mcsim.ks_distance(summary, lambda r, model=model: envelope_cdf(r, model).value)
        # the fixed bound is sized for 10^6 samples; smaller runs get the matching 99% band
        bound = max(KS_BOUND, 1.63 / math.sqrt(n))
        if distance > bound:
            errors.append(f"envelope {label}: KS distance {distance:.5f} > {bound:.5f}")
    return errors


def _sep_cases() -> list[tuple[str, str, LinkConfig]]:
    cases = [("dbpsk", 10.0, 1.0, 10.0, 1)]
    cases += [("16qam", 10.0, delta, snr_db, L) for delta in (0.15, 1.0) for snr_db in (10.0, 20.0) for L in (1, 2)]
    return [
        (f"{mod} K={K:g} delta={delta:g} snr={snr_db:g}dB L={L}", mod,
         LinkConfig.iid(ChannelModel(K=K, delta=delta, gamma_bar=db_to_linear(snr_db)), L))
        for mod, K, delta, snr_db, L in cases
    ]


def check_sep(n: int, seed: int, workers: int) -> list[str]:
    errors: list[str] = []
    for label, mod_name, link in _sep_cases():
        mod = parse_modulation(mod_name)
        est = mcsim.mc_sep(mod, link, mcsim.SimConfig(n_samples=n, seed=seed, workers=workers))
        analytic = sep(mod, link).value
        if abs(est.estimate - analytic) > SEP_SIGMAS * est.std_error:
            errors.append(
                f"sep {label}: MC {est.estimate:.6g} ± {est.std_error:.2g} vs analytic {analytic:.6g}"
            )
    return errors


def check_capacity(n: int, seed: int, workers: int) -> list[str]:
    errors: list[str] = []
    for delta in (0.15, 1.0):
        for L in (1, 4):
            link = LinkConfig.iid(ChannelModel(K=10.0, delta=delta, gamma_bar=10.0), L)
            est = mcsim.mc_capacity(link, mcsim.SimConfig(n_samples=n, seed=seed, workers=workers))
            analytic = capacity_ora(link).value
            if abs(est.estimate - analytic) > CAPACITY_BOUND:
                errors.append(f"capacity delta={delta:g} L={L}: MC {est.estimate:.5f} vs analytic {analytic:.5f}")
    return errors


CHECKS: dict[str, tuple[Callable[[int, int, int], list[str]], int]] = {
    "envelope": (check_envelope, 1_000_000),
    "sep": (check_sep, 10_000_000),
    "capacity": (check_capacity, 10_000_000),
}


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--only", choices=list(CHECKS), action="append")
    parser.add_argument("--seed", default=str(DEFAULT_SEED))
    parser.add_argument("--workers", type=int, default=1)
    parser.add_argument("--quick", action="store_true", help="run 1/100 of the samples")
    args = parser.parse_args()
    seed = parse_seed(args.seed)

    errors: list[str] = []
    for name in args.only or list(CHECKS):
        check, samples = CHECKS[name]
        n = samples // 100 if args.quick else samples
        started = time.monotonic()
        found = check(n, seed, args.workers)
        print(f"{name}: {'ok' if not found else f'{len(found)} drifted'} (n={n}, {time.monotonic() - started:.1f}s)")
        errors.extend(found)
    if errors:
        raise SystemExit("\n".join(errors))
    print("acceptance: clean")


if __name__ == "__main__":
    main()
