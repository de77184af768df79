"""Figure-data recipes.

Each recipe computes one family of curves and returns a `FigureData`; `write_figure`
puts `<name>.csv`, `<name>.gp` (a gnuplot script that plots every column against the
first) and `<name>.manifest.json` into the output directory. Nothing is rendered here.

"K → ∞" curves are computed at a finite `k_infinity` (default 1e4), which is recorded
in the manifest.
"""

from __future__ import annotations

import math
from collections.abc import Callable
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from .errors import DomainError
from .models import ChannelModel, PhaseDistribution, TruncatedUniform, Uniform, VonMises, envelope_cdf
from .output import RunManifest, render_csv, write_manifest
from .perf import (
    CapacityRegime,
    Family,
    LinkConfig,
    Modulation,
    capacity_high_snr,
    capacity_loss,
    capacity_loss_limit,
    capacity_low_snr,
    capacity_ora,
    sep,
)
from .quad import QuadSpec
from .serialize import hash_bytes
from .sweep import db_to_linear

DEFAULT_K_INFINITY = 1e4


@dataclass(frozen=True)
class FigureOptions:
    k_infinity: float = DEFAULT_K_INFINITY
    spec: QuadSpec = QuadSpec()

    def __post_init__(self) -> None:
        if not (math.isfinite(self.k_infinity) and self.k_infinity > 0):
            raise DomainError("K_range", f"k_infinity={self.k_infinity!r} must be finite and > 0")


@dataclass(frozen=True)
class FigureData:
    name: str
    title: str
    xlabel: str
    ylabel: str
    columns: list[str]
    rows: list[dict[str, float]]
    log_x: bool = False
    log_y: bool = False
    parameters: dict[str, Any] = field(default_factory=dict)

    def csv(self) -> str:
        return render_csv(self.columns, self.rows)

    def gnuplot(self) -> str:
        lines = [
            f"# {self.title}",
            "set datafile separator ','",
            "set key autotitle columnhead",
            f"set xlabel '{self.xlabel}'",
            f"set ylabel '{self.ylabel}'",
        ]
        if self.log_x:
            lines.append("set logscale x")
        if self.log_y:
            lines.append("set logscale y")
        lines.append(f"plot for [i=2:{len(self.columns)}] '{self.name}.csv' using 1:i with lines")
        return "\n".join(lines) + "\n"


def _rows(x: np.ndarray, curves: dict[str, Callable[[float], float]], x_name: str) -> tuple[list[str], list[dict[str, float]]]:
    columns = [x_name, *curves]
    rows = []
    for xv in x:
        row = {x_name: float(xv)}
        for name, curve in curves.items():
            row[name] = float(curve(float(xv)))
        rows.append(row)
    return columns, rows


def _cdf_curve(phase: PhaseDistribution, K: float, delta: float, spec: QuadSpec) -> Callable[[float], float]:
    # γ̄ = N0 = 1, so r/√P̄r is r itself
    model = ChannelModel(K=K, delta=delta, gamma_bar=1.0, phase=phase)
    return lambda r: envelope_cdf(r, model, spec).value


_R_NORM = np.geomspace(1e-2, 2.0, 60)


def _reference_curves(opts: FigureOptions) -> dict[str, Callable[[float], float]]:
    """Rayleigh, Rician at K = k_infinity and Two-Ray (K = k_infinity, Δ = 1)."""
    return {
        "rayleigh": _cdf_curve(Uniform(), 0.0, 0.0, opts.spec),
        "rician": _cdf_curve(Uniform(), opts.k_infinity, 0.0, opts.spec),
        "two-ray": _cdf_curve(Uniform(), opts.k_infinity, 1.0, opts.spec),
    }


def truncated_cdf(opts: FigureOptions) -> FigureData:
    curves = _reference_curves(opts)
    for p in (1.0, 0.5, 0.2, 0.1):
        curves[f"p={p:g}"] = _cdf_curve(TruncatedUniform(p), opts.k_infinity, 1.0, opts.spec)
    columns, rows = _rows(_R_NORM, curves, "r_norm")
    return FigureData(
        "truncated-cdf", "Envelope cdf, truncated-uniform phase, delta = 1", "r / sqrt(Pr)", "cdf",
        columns, rows, log_x=True, log_y=True, parameters={"K": opts.k_infinity, "delta": 1.0},
    )


def vonmises_cdf(opts: FigureOptions) -> FigureData:
    curves = _reference_curves(opts)
    for eta in (0.0, 2.0, 5.0, 10.0):
        curves[f"eta={eta:g}"] = _cdf_curve(VonMises(eta), opts.k_infinity, 1.0, opts.spec)
    columns, rows = _rows(_R_NORM, curves, "r_norm")
    return FigureData(
        "vonmises-cdf", "Envelope cdf, von Mises phase centered at pi, delta = 1", "r / sqrt(Pr)", "cdf",
        columns, rows, log_x=True, log_y=True, parameters={"K": opts.k_infinity, "delta": 1.0},
    )


_SNR_DB = np.linspace(0.0, 40.0, 41)
_QAM16 = Modulation(Family.MQAM, 16)


def _link(K: float, delta: float, snr_db: float, L: int = 1) -> LinkConfig:
    return LinkConfig.iid(ChannelModel(K=K, delta=delta, gamma_bar=db_to_linear(snr_db)), L)


def qam_sep(opts: FigureOptions) -> FigureData:
    curves: dict[str, Callable[[float], float]] = {
        "rayleigh": lambda x: sep(_QAM16, _link(0.0, 0.0, x), opts.spec).value,
    }
    for K in (10.0, 100.0):
        for delta in (0.15, 1.0):
            curves[f"K={K:g} delta={delta:g}"] = (
                lambda x, K=K, delta=delta: sep(_QAM16, _link(K, delta, x), opts.spec).value
            )
    columns, rows = _rows(_SNR_DB, curves, "snr_db")
    return FigureData("qam-sep", "16-QAM SEP", "average SNR (dB)", "SEP", columns, rows, log_y=True)


def qam_sep_mrc(opts: FigureOptions) -> FigureData:
    curves: dict[str, Callable[[float], float]] = {}
    for delta in (0.15, 1.0):
        for L in (1, 2, 4):
            curves[f"delta={delta:g} L={L}"] = (
                lambda x, delta=delta, L=L: sep(_QAM16, _link(10.0, delta, x, L), opts.spec).value
            )
    columns, rows = _rows(_SNR_DB, curves, "snr_db")
    return FigureData(
        "qam-sep-mrc", "16-QAM SEP with MRC, K = 10", "average SNR per branch (dB)", "SEP",
        columns, rows, log_y=True, parameters={"K": 10.0},
    )


def capacity_mrc(opts: FigureOptions) -> FigureData:
    curves: dict[str, Callable[[float], float]] = {}
    for delta in (0.15, 1.0):
        for L in (1, 2, 4):
            curves[f"delta={delta:g} L={L}"] = (
                lambda x, delta=delta, L=L: capacity_ora(_link(10.0, delta, x, L), opts.spec).value
            )
    columns, rows = _rows(_SNR_DB, curves, "snr_db")
    return FigureData(
        "capacity-mrc", "Ergodic capacity with MRC, K = 10", "average SNR per branch (dB)", "bps/Hz",
        columns, rows, parameters={"K": 10.0},
    )


def capacity_low(opts: FigureOptions) -> FigureData:
    curves: dict[str, Callable[[float], float]] = {}
    for delta in (0.15, 1.0):
        curves[f"delta={delta:g}"] = lambda x, delta=delta: capacity_ora(_link(10.0, delta, x), opts.spec).value
    curves["low_snr"] = lambda x: capacity_low_snr(_link(10.0, 1.0, x))
    columns, rows = _rows(np.linspace(-30.0, 0.0, 31), curves, "snr_db")
    return FigureData(
        "capacity-low-snr", "Ergodic capacity at low SNR, K = 10", "average SNR (dB)", "bps/Hz",
        columns, rows, log_y=True, parameters={"K": 10.0},
    )


def capacity_high(opts: FigureOptions) -> FigureData:
    curves: dict[str, Callable[[float], float]] = {}
    for delta in (0.15, 0.5, 1.0):
        model = ChannelModel(K=10.0, delta=delta, gamma_bar=1.0)
        asymptote = capacity_high_snr(model, CapacityRegime.GTR, opts.spec)
        curves[f"delta={delta:g}"] = lambda x, delta=delta: capacity_ora(_link(10.0, delta, x), opts.spec).value
        curves[f"delta={delta:g} asymptote"] = asymptote.at
    columns, rows = _rows(np.linspace(10.0, 40.0, 31), curves, "snr_db")
    return FigureData(
        "capacity-high-snr", "Ergodic capacity at high SNR, K = 10", "average SNR (dB)", "bps/Hz",
        columns, rows, parameters={"K": 10.0},
    )


def capacity_loss_figure(opts: FigureOptions) -> FigureData:
    curves: dict[str, Callable[[float], float]] = {}
    for delta in (0.25, 0.5, 0.9, 1.0):
        curves[f"delta={delta:g}"] = lambda x, delta=delta: capacity_loss(db_to_linear(x), delta, opts.spec)
        curves[f"delta={delta:g} approx"] = lambda x, delta=delta: capacity_loss(
            db_to_linear(x), delta, opts.spec, approximate=True
        )
        curves[f"delta={delta:g} limit"] = lambda x, delta=delta: capacity_loss_limit(delta)
    columns, rows = _rows(np.linspace(0.0, 40.0, 41), curves, "K_db")
    return FigureData(
        "capacity-loss", "Asymptotic capacity loss relative to Rician fading", "K (dB)", "bps/Hz", columns, rows
    )


FIGURES: dict[str, Callable[[FigureOptions], FigureData]] = {
    "truncated-cdf": truncated_cdf,
    "vonmises-cdf": vonmises_cdf,
    "qam-sep": qam_sep,
    "qam-sep-mrc": qam_sep_mrc,
    "capacity-mrc": capacity_mrc,
    "capacity-low-snr": capacity_low,
    "capacity-high-snr": capacity_high,
    "capacity-loss": capacity_loss_figure,
}

# numbered ids of the original figure set
FIGURE_ALIASES: dict[str, str] = {
    "1a": "truncated-cdf",
    "1": "vonmises-cdf",
    "3": "qam-sep",
    "4": "qam-sep-mrc",
    "5": "capacity-mrc",
    "6": "capacity-low-snr",
    "7": "capacity-high-snr",
    "8": "capacity-loss",
}


def resolve_figure_name(name: str) -> str:
    resolved = FIGURE_ALIASES.get(name, name)
    if resolved not in FIGURES:
        known = "|".join([*FIGURES, *FIGURE_ALIASES])
        raise DomainError("figure_name", f"unknown figure {name!r}; expected one of {known}")
    return resolved


def build_figure(name: str, opts: FigureOptions = FigureOptions()) -> FigureData:
    return FIGURES[resolve_figure_name(name)](opts)


def write_figure(fig: FigureData, out_dir: Path, manifest: RunManifest) -> list[Path]:
    """Write csv, gnuplot script and manifest; returns the three paths."""
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = out_dir / f"{fig.name}.csv"
    gp_path = out_dir / f"{fig.name}.gp"
    manifest_path = out_dir / f"{fig.name}.manifest.json"
    text = fig.csv()
    csv_path.write_text(text, encoding="utf-8", newline="")
    gp_path.write_text(fig.gnuplot(), encoding="utf-8")
    write_manifest(manifest.finish(hash_bytes(text.encode("utf-8"))), manifest_path)
    return [csv_path, gp_path, manifest_path]
