"""Parameter sweeps: `--sweep var:start:stop:points[:log]`."""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import StrEnum

import numpy as np

from .errors import DomainError
from .models import ChannelModel, TruncatedUniform, VonMises


class SweepVariable(StrEnum):
    SNR_DB = "snr_db"
    K_DB = "K_db"
    DELTA = "delta"
    P = "p"
    ETA = "eta"
    R_NORM = "r_norm"


class Scale(StrEnum):
    LINEAR = "linear"
    LOG = "log"


def db_to_linear(x: float) -> float:
    return 10.0 ** (x / 10.0)


@dataclass(frozen=True)
class SweepSpec:
    variable: SweepVariable
    start: float
    stop: float
    points: int
    scale: Scale = Scale.LINEAR

    def __post_init__(self) -> None:
        if not (math.isfinite(self.start) and math.isfinite(self.stop) and self.start < self.stop):
            raise DomainError("sweep_range", f"sweep {self.variable}: need finite start < stop, got {self.start}:{self.stop}")
        if self.points < 2:
            raise DomainError("sweep_points", f"sweep {self.variable}: points={self.points} must be >= 2")
        if self.scale is Scale.LOG and self.start <= 0:
            raise DomainError("sweep_range", f"sweep {self.variable}: a log sweep needs start > 0")

    def values(self) -> np.ndarray:
        if self.scale is Scale.LOG:
            return np.geomspace(self.start, self.stop, self.points)
        return np.linspace(self.start, self.stop, self.points)

    def apply(self, model: ChannelModel, x: float) -> ChannelModel:
        """The model at sweep point x. `r_norm` moves the evaluation point, not the model."""
        v = self.variable
        if v is SweepVariable.SNR_DB:
            return model.with_(gamma_bar=db_to_linear(x))
        if v is SweepVariable.K_DB:
            return model.with_(K=db_to_linear(x))
        if v is SweepVariable.DELTA:
            return model.with_(delta=x)
        if v is SweepVariable.P:
            phi = model.phase.phi if isinstance(model.phase, TruncatedUniform) else 0.0
            return model.with_(phase=TruncatedUniform(p=x, phi=phi))
        if v is SweepVariable.ETA:
            centered = model.phase.centered_at_pi if isinstance(model.phase, VonMises) else True
            return model.with_(phase=VonMises(eta=x, centered_at_pi=centered))
        return model


def parse_sweep(text: str) -> SweepSpec:
    parts = text.strip().split(":")
    if len(parts) not in (4, 5):
        raise DomainError("sweep_syntax", f"{text!r}: expected var:start:stop:points[:log]")
    try:
        variable = SweepVariable(parts[0])
    except ValueError as e:
        allowed = "|".join(v.value for v in SweepVariable)
        raise DomainError("sweep_syntax", f"{text!r}: variable must be one of {allowed}") from e
    try:
        start, stop = float(parts[1]), float(parts[2])
        points = int(parts[3])
    except ValueError as e:
        raise DomainError("sweep_syntax", f"{text!r}: start/stop must be numbers and points an integer") from e
    scale = Scale.LINEAR
    if len(parts) == 5:
        try:
            scale = Scale(parts[4])
        except ValueError as e:
            raise DomainError("sweep_syntax", f"{text!r}: scale must be linear or log") from e
    return SweepSpec(variable, start, stop, points, scale)
