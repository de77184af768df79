"""CLI dispatcher for gtrfading.

Usage:
    gtrfading stats --quantity cdf --phase trunc:p=0.2 --K-db 40 --delta 1 --sweep r_norm:0.01:1:100:log
    gtrfading stats --quantity aof --K 0 --delta 0
    gtrfading sep --modulation 16qam --K 10 --delta 1 --branches 2 --sweep snr_db:0:40:41
    gtrfading capacity --K 10 --delta 1 --sweep snr_db:10:40:31 --asymptote gtr
    gtrfading capacity --loss --K-db 40 --delta 1
    gtrfading mc sep --modulation dbpsk --K 10 --delta 1 --snr-db 10 --samples 1000000 --workers 4
    gtrfading figure qam-sep --out-dir figures/

Data goes to stdout (or --out); one status line per command goes to stderr. Exit codes:
0 success, 2 invalid parameters, 3 numerical non-convergence.
"""

from __future__ import annotations

import argparse
import math
import sys
import time
from collections.abc import Callable
from pathlib import Path
from typing import Any

from . import config as config_mod
from . import figures as figures_mod
from . import mcsim, models, perf, telemetry
from .errors import ConvergenceError, DomainError, GtrError
from .models import ChannelModel, MobilityConfig, Statistic
from .output import RunManifest, report_document, table_document, write_csv, write_json
from .quad import QuadSpec
from .sweep import SweepSpec, SweepVariable, db_to_linear, parse_sweep

PROG = "gtrfading"

DEFAULT_K = 10.0
DEFAULT_DELTA = 0.5
DEFAULT_SNR_DB = 10.0
DEFAULT_SAMPLES = 1_000_000

# dests that name the same model parameter; at most one per pair may be given
EXCLUSIVE = (("K", "K_db"), ("snr_db", "gamma_bar"))

QUANTITIES = ("pdf", "cdf", "snr-pdf", "mgf", "moment", "aof", "lcr", "aod", "mean-snr")
# quantities evaluated at an envelope radius r = r_norm * sqrt(Pr)
ENVELOPE_QUANTITIES = {"pdf", "cdf", "lcr", "aod"}


# --- argument helpers ------------------------------------------------------------------


def _finite(text: str) -> float:
    try:
        value = float(text)
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"{text!r} is not a number") from e
    if not math.isfinite(value):
        raise argparse.ArgumentTypeError(f"{text!r} is not finite")
    return value


def _positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"{text!r} is not an integer") from e
    if value < 1:
        raise argparse.ArgumentTypeError(f"{value} must be >= 1")
    return value


def _model_from_args(args: argparse.Namespace) -> ChannelModel:
    for a, b in EXCLUSIVE:
        if getattr(args, a, None) is not None and getattr(args, b, None) is not None:
            raise DomainError("flag_conflict", f"--{a.replace('_', '-')} and --{b.replace('_', '-')} are exclusive")
    if args.K is not None:
        K = args.K
    elif args.K_db is not None:
        K = db_to_linear(args.K_db)
    else:
        K = DEFAULT_K
    if args.gamma_bar is not None:
        gamma_bar = args.gamma_bar
    else:
        gamma_bar = db_to_linear(args.snr_db if args.snr_db is not None else DEFAULT_SNR_DB)
    return ChannelModel(
        K=K, delta=args.delta, gamma_bar=gamma_bar, phase=models.parse_phase(args.phase), n0=args.n0
    )


def _model_parameters(model: ChannelModel, branches: int) -> dict[str, Any]:
    return {
        "K": model.K,
        "delta": model.delta,
        "gamma_bar": model.gamma_bar,
        "phase": model.phase.describe(),
        "n0": model.n0,
        "branches": branches,
    }


def _run_parameters(args: argparse.Namespace, model: ChannelModel) -> dict[str, Any]:
    raw = {
        k: (str(v) if isinstance(v, Path) else v)
        for k, v in vars(args).items()
        if k not in ("func", "config") and v is not None
    }
    return {"flags": raw, "model": _model_parameters(model, getattr(args, "branches", 1))}


def _spec(args: argparse.Namespace) -> QuadSpec:
    return QuadSpec(rel_tol=args.rel_tol, abs_tol=args.abs_tol)


def _sweep(args: argparse.Namespace) -> SweepSpec | None:
    return parse_sweep(args.sweep) if args.sweep else None


def _row(x: float, stat: Statistic, **extra: float) -> dict[str, Any]:
    row: dict[str, Any] = {
        "x": float(x),
        "value": float(stat.value),
        "method": stat.method.value,
        "error_estimate": float(stat.error_estimate),
    }
    row.update({k: float(v) for k, v in extra.items()})
    return row


def _snr_db(model: ChannelModel) -> float:
    return 10.0 * math.log10(model.gamma_bar)


def _emit_table(args: argparse.Namespace, command: str, columns: list[str], rows: list[dict], manifest: RunManifest) -> str:
    if args.format == "json":
        return write_json(table_document(command, columns, rows, manifest), args.out)
    return write_csv(columns, rows, manifest, args.out)


def _status(command: str, message: str, ref: str) -> None:
    print(f"[{command}] {message} -> {'stdout' if ref == '-' else ref}", file=sys.stderr)


# --- commands --------------------------------------------------------------------------


def _stat_at(quantity: str, model: ChannelModel, args: argparse.Namespace, sweep: SweepSpec | None, x: float, spec: QuadSpec) -> Statistic:
    on_r = sweep is not None and sweep.variable is SweepVariable.R_NORM
    r_norm = x if on_r else args.r_norm
    r = r_norm * math.sqrt(model.p_r)
    mob = MobilityConfig(args.fd)
    if on_r and quantity not in ENVELOPE_QUANTITIES and quantity != "snr-pdf":
        raise DomainError("sweep_variable", f"--quantity {quantity} does not depend on r_norm")
    if quantity == "pdf":
        return models.envelope_pdf(r, model, spec)
    if quantity == "cdf":
        return models.envelope_cdf(r, model, spec)
    if quantity == "lcr":
        return models.level_crossing_rate(r, model, mob, spec)
    if quantity == "aod":
        return models.average_outage_duration(r, model, mob, spec)
    if quantity == "snr-pdf":
        gamma = r_norm**2 * model.gamma_bar if on_r else args.gamma
        return models.snr_pdf(gamma, model, spec)
    if quantity == "mgf":
        return models.mgf(args.s, model, spec)
    if quantity == "moment":
        return models.moment(args.k, model, spec)
    if quantity == "aof":
        return models.amount_of_fading(model, spec)
    return models.mean_snr(model, spec)


def _default_x(quantity: str, model: ChannelModel, args: argparse.Namespace) -> float:
    if quantity in ENVELOPE_QUANTITIES:
        return args.r_norm
    return {"snr-pdf": args.gamma, "mgf": args.s, "moment": float(args.k)}.get(quantity, _snr_db(model))


def cmd_stats(args: argparse.Namespace) -> tuple[str, str]:
    base = _model_from_args(args)
    sweep = _sweep(args)
    spec = _spec(args)
    manifest = RunManifest.start("stats", _run_parameters(args, base))
    rows = []
    xs = sweep.values() if sweep else [_default_x(args.quantity, base, args)]
    for x in xs:
        model = sweep.apply(base, x) if sweep else base
        rows.append(_row(x, _stat_at(args.quantity, model, args, sweep, x, spec)))
    ref = _emit_table(args, "stats", ["x", "value", "method", "error_estimate"], rows, manifest)
    return f"{args.quantity}: {len(rows)} rows", ref


def _link_at(base: ChannelModel, sweep: SweepSpec | None, x: float, L: int) -> perf.LinkConfig:
    if sweep is not None and sweep.variable is SweepVariable.R_NORM:
        raise DomainError("sweep_variable", "r_norm is not a link parameter")
    model = sweep.apply(base, x) if sweep else base
    return perf.LinkConfig.iid(model, L)


def cmd_sep(args: argparse.Namespace) -> tuple[str, str]:
    base = _model_from_args(args)
    mod = perf.parse_modulation(args.modulation)
    sweep = _sweep(args)
    spec = _spec(args)
    manifest = RunManifest.start("sep", {**_run_parameters(args, base), "modulation": mod.describe()})
    rows = []
    for x in sweep.values() if sweep else [_snr_db(base)]:
        link = _link_at(base, sweep, x, args.branches)
        rows.append(_row(x, perf.sep(mod, link, spec)))
    ref = _emit_table(args, "sep", ["x", "value", "method", "error_estimate"], rows, manifest)
    return f"{mod.describe()} L={args.branches}: {len(rows)} rows", ref


def cmd_capacity(args: argparse.Namespace) -> tuple[str, str]:
    base = _model_from_args(args)
    sweep = _sweep(args)
    spec = _spec(args)
    if args.loss and args.asymptote:
        raise DomainError("flag_conflict", "--loss and --asymptote are exclusive")
    if args.asymptote and args.asymptote != "low" and args.branches != 1:
        raise DomainError("branch_count", "high-SNR asymptotes are single-branch")
    manifest = RunManifest.start("capacity", _run_parameters(args, base))
    columns = ["x", "value", "method", "error_estimate"]
    if args.asymptote:
        columns.append("asymptote")
    if args.loss:
        columns += ["approx", "limit"]
    if sweep:
        xs = list(sweep.values())
    elif args.loss:
        xs = [10.0 * math.log10(base.K) if base.K > 0 else -math.inf]
    else:
        xs = [_snr_db(base)]
    rows = []
    for x in xs:
        link = _link_at(base, sweep, x, args.branches)
        model = link.branches[0]
        if args.loss:
            stat = perf.capacity_loss_detailed(model.K, model.delta, spec)
            approx = perf.capacity_loss(model.K, model.delta, spec, approximate=True)
            rows.append(_row(x, stat, approx=approx, limit=perf.capacity_loss_limit(model.delta)))
            continue
        stat = perf.capacity_ora(link, spec)
        if args.asymptote == "low":
            rows.append(_row(x, stat, asymptote=perf.capacity_low_snr(link)))
        elif args.asymptote:
            asym = perf.capacity_high_snr(model, perf.CapacityRegime(args.asymptote), spec)
            rows.append(_row(x, stat, asymptote=asym.at(_snr_db(model))))
        else:
            rows.append(_row(x, stat))
    ref = _emit_table(args, "capacity", columns, rows, manifest)
    what = "capacity loss" if args.loss else f"capacity L={args.branches}"
    return f"{what}: {len(rows)} rows", ref


def _z(estimate: float, std_error: float, analytic: float) -> float | None:
    return (estimate - analytic) / std_error if std_error > 0 else None


def cmd_mc(args: argparse.Namespace) -> tuple[str, str]:
    model = _model_from_args(args)
    seed = config_mod.parse_seed(args.seed) if args.seed is not None else config_mod.default_seed()
    cfg = mcsim.SimConfig(n_samples=args.samples, seed=seed, workers=args.workers)
    spec = _spec(args)
    params = _run_parameters(args, model)
    link = perf.LinkConfig.iid(model, args.branches)
    result: dict[str, Any]
    if args.kind == "envelope":
        if args.branches != 1:
            raise DomainError("branch_count", "mc envelope samples a single branch")
        summary = mcsim.sample_envelope(model, cfg)
        power = summary.raw_moments[0]
        std_error = math.sqrt(max(summary.raw_moments[2] - power**2, 0.0) / summary.n)
        analytic = model.n0 * models.mean_snr(model, spec).value
        ks = mcsim.ks_distance(summary, lambda r: models.envelope_cdf(r, model, spec).value)
        result = {
            "quantity": "mean_power",
            "estimate": power,
            "std_error": std_error,
            "analytic": analytic,
            "ks_distance": ks,
            "ks_critical": 1.63 / math.sqrt(summary.n),
            "mean_envelope": summary.mean,
        }
    elif args.kind == "sep":
        mod = perf.parse_modulation(args.modulation)
        params["modulation"] = mod.describe()
        est = mcsim.mc_sep(mod, link, cfg)
        result = {"quantity": "sep", "estimate": est.estimate, "std_error": est.std_error, "analytic": perf.sep(mod, link, spec).value}
    else:
        est = mcsim.mc_capacity(link, cfg)
        result = {
            "quantity": "capacity",
            "estimate": est.estimate,
            "std_error": est.std_error,
            "analytic": perf.capacity_ora(link, spec).value,
        }
    result.update(
        z_score=_z(result["estimate"], result["std_error"], result["analytic"]),
        n=cfg.n_samples,
        workers=cfg.workers,
    )
    doc = report_document(args.kind, result, RunManifest.start(f"mc {args.kind}", params, seed))
    ref = write_json(doc, args.out)
    return f"{args.kind}: estimate={result['estimate']:.6g} z={result['z_score']}", ref


def cmd_figure(args: argparse.Namespace) -> tuple[str, str]:
    opts = figures_mod.FigureOptions(k_infinity=args.k_infinity, spec=_spec(args))
    name = figures_mod.resolve_figure_name(args.name)
    manifest = RunManifest.start(f"figure {args.name}", {"name": name, "k_infinity": args.k_infinity})
    fig = figures_mod.build_figure(name, opts)
    paths = figures_mod.write_figure(fig, args.out_dir, manifest)
    return f"{name}: {len(fig.rows)} rows", str(paths[0])


# --- parser ----------------------------------------------------------------------------


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, help="flat key = value file; flags given here win")
    p.add_argument("--rel-tol", type=_finite, default=QuadSpec.rel_tol)
    p.add_argument("--abs-tol", type=_finite, default=QuadSpec.abs_tol)


def _model_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--K", type=_finite, help=f"LOS-to-diffuse power ratio (linear; default {DEFAULT_K:g})")
    p.add_argument("--K-db", type=_finite, help="K in dB")
    p.add_argument("--delta", type=_finite, default=DEFAULT_DELTA)
    p.add_argument("--snr-db", type=_finite, help=f"average SNR in dB (default {DEFAULT_SNR_DB:g})")
    p.add_argument("--gamma-bar", type=_finite, help="average SNR, linear")
    p.add_argument("--phase", default="uniform", help="uniform | trunc:p=..[,phi=..] | vm:eta=..[,center=pi|0]")
    p.add_argument("--n0", type=_finite, default=1.0)
    p.add_argument("--branches", type=_positive_int, default=1, help="MRC branches (i.i.d.)")


def _table_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--sweep", help="var:start:stop:points[:log], var in snr_db|K_db|delta|p|eta|r_norm")
    p.add_argument("--format", choices=["csv", "json"], default="csv")
    p.add_argument("--out", type=Path)


def build_parser() -> tuple[argparse.ArgumentParser, dict[str, argparse.ArgumentParser]]:
    p = argparse.ArgumentParser(prog=PROG, description="Generalized Two-Ray fading numerics")
    sub = p.add_subparsers(dest="cmd", required=True)
    subparsers: dict[str, argparse.ArgumentParser] = {}

    pst = sub.add_parser("stats", help="channel statistics (pdf, cdf, MGF, moments, AOF, LCR, AOD)")
    _common(pst)
    _model_flags(pst)
    _table_flags(pst)
    pst.add_argument("--quantity", required=True, choices=QUANTITIES)
    pst.add_argument("--r-norm", type=_finite, default=1.0, help="r / sqrt(Pr)")
    pst.add_argument("--gamma", type=_finite, default=1.0, help="SNR point for snr-pdf")
    pst.add_argument("--s", type=_finite, default=-1.0, help="MGF argument")
    pst.add_argument("--k", type=_positive_int, default=1, help="moment order")
    pst.add_argument("--fd", type=_finite, default=100.0, help="maximum Doppler frequency, Hz")
    pst.set_defaults(func=cmd_stats)
    subparsers["stats"] = pst

    psp = sub.add_parser("sep", help="symbol error probability with MRC")
    _common(psp)
    _model_flags(psp)
    _table_flags(psp)
    psp.add_argument("--modulation", default="16qam", help="bpsk|qpsk|dbpsk|16qam|mpsk:8|mdpsk:4|mfsk:4 ...")
    psp.set_defaults(func=cmd_sep)
    subparsers["sep"] = psp

    pca = sub.add_parser("capacity", help="ergodic capacity, asymptotes, capacity loss")
    _common(pca)
    _model_flags(pca)
    _table_flags(pca)
    pca.add_argument("--asymptote", choices=["low", *(r.value for r in perf.CapacityRegime)])
    pca.add_argument("--loss", action="store_true", help="asymptotic capacity loss against Rician fading")
    pca.set_defaults(func=cmd_capacity)
    subparsers["capacity"] = pca

    pmc = sub.add_parser("mc", help="Monte Carlo validation run (JSON report)")
    _common(pmc)
    _model_flags(pmc)
    pmc.add_argument("kind", choices=["envelope", "sep", "capacity"])
    pmc.add_argument("--samples", type=_positive_int, default=DEFAULT_SAMPLES)
    pmc.add_argument("--seed", help=f"unsigned 64-bit seed (default ${config_mod.SEED_ENV} or {config_mod.DEFAULT_SEED})")
    pmc.add_argument("--workers", type=_positive_int, default=1)
    pmc.add_argument("--modulation", default="16qam")
    pmc.add_argument("--out", type=Path)
    pmc.set_defaults(func=cmd_mc)
    subparsers["mc"] = pmc

    pfg = sub.add_parser("figure", help="write figure data, gnuplot script and manifest")
    _common(pfg)
    pfg.add_argument("name", choices=[*figures_mod.FIGURES, *figures_mod.FIGURE_ALIASES])
    pfg.add_argument("--k-infinity", type=_finite, default=figures_mod.DEFAULT_K_INFINITY)
    pfg.add_argument("--out-dir", type=Path, default=Path("."))
    pfg.set_defaults(func=cmd_figure)
    subparsers["figure"] = pfg

    return p, subparsers


# --- config files ----------------------------------------------------------------------


def _config_path(argv: list[str]) -> str | None:
    for i, token in enumerate(argv):
        if token == "--config" and i + 1 < len(argv):
            return argv[i + 1]
        if token.startswith("--config="):
            return token.split("=", 1)[1]
    return None


def _cli_dests(parser: argparse.ArgumentParser, argv: list[str]) -> set[str]:
    by_option = {opt: a.dest for a in parser._actions for opt in a.option_strings}
    return {by_option[t.split("=", 1)[0]] for t in argv if t.split("=", 1)[0] in by_option}


def apply_config(argv: list[str], subparsers: dict[str, argparse.ArgumentParser]) -> list[str]:
    """argv with the config file's entries inserted right after the subcommand.

    Inserted first, so any flag repeated on the command line wins. An entry whose
    exclusive partner is on the command line is dropped.
    """
    path = _config_path(argv)
    if path is None or not argv or argv[0] not in subparsers:
        return argv
    parser = subparsers[argv[0]]
    entries = config_mod.load_config(path)
    actions = {a.dest: a for a in parser._actions if a.option_strings}
    given = _cli_dests(parser, argv[1:])
    partners = {a: b for pair in EXCLUSIVE for a, b in (pair, pair[::-1])}
    tokens: list[str] = []
    for key, value in entries.items():
        action = actions.get(key)
        if action is None or key in ("config", "help"):
            raise DomainError("config_key", f"{path}: unknown key {key!r} for `{argv[0]}`")
        if partners.get(key) in given:
            continue
        option = action.option_strings[-1]
        if isinstance(action, argparse._StoreTrueAction):
            if config_mod.parse_bool(value):
                tokens.append(option)
        else:
            tokens.append(f"{option}={value}")
    return [argv[0], *tokens, *argv[1:]]


# --- entry point -----------------------------------------------------------------------


def _layer(cmd: str) -> telemetry.Layer:
    return {"mc": "mcsim", "figure": "figures"}.get(cmd, "cli")  # type: ignore[return-value]


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser, subparsers = build_parser()
    cmd = argv[0] if argv and argv[0] in subparsers else "-"
    started = time.monotonic()
    try:
        args = parser.parse_args(apply_config(argv, subparsers))
        command: Callable[[argparse.Namespace], tuple[str, str]] = args.func
        reason, ref = command(args)
    except SystemExit as e:
        # argparse usage errors (exit 2) and --help (exit 0)
        if e.code:
            telemetry.emit_failure(_layer(cmd), cmd, "usage", extra={"exit_code": e.code})
        raise
    except GtrError as e:
        print(f"{PROG}: {e.invariant}: {e.detail}", file=sys.stderr)
        emit = telemetry.emit_nonconverged if isinstance(e, ConvergenceError) else telemetry.emit_failure
        emit(_layer(cmd), cmd, f"{e.invariant}: {e.detail}", extra={"elapsed_s": round(time.monotonic() - started, 3)})
        return e.exit_code
    _status(cmd, reason, ref)
    telemetry.emit_success(_layer(cmd), cmd, reason, ref, extra={"elapsed_s": round(time.monotonic() - started, 3)})
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
