"""Grid evaluation of the stationary response and of the linear loss law."""
from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import astuple, dataclass, fields
from typing import Optional, Sequence

from .core import AtomParams, DomainError, linear_response, steady_state

AXES = ("log10_scaled_intensity", "beta")

SWEEP_HEADER = (
    "axis_value",
    "x",
    "amplitude_ratio",
    "coherent_fraction",
    "noise_fraction",
    "sigma_z",
    "sigma_minus_mag",
)
BETA_HEADER = ("beta", "gamma_loss", "linear_ratio")


class UsageError(ValueError):
    """Raised when a sweep is called with the wrong kind of grid."""


@dataclass(frozen=True)
class Grid:
    """Uniform grid in the coordinate named by ``axis``.

    On the intensity axis the coordinate is ``log10(4 |b_in|^2 / big_gamma)``.
    """

    axis: str
    min: float
    max: float
    points: int

    def __post_init__(self) -> None:
        if self.axis not in AXES:
            raise UsageError(f"unknown grid axis {self.axis!r}; expected one of {AXES}")
        if not (math.isfinite(self.min) and math.isfinite(self.max)):
            raise DomainError("grid bounds must be finite")
        if not self.min < self.max:
            raise DomainError(f"grid needs min < max, got [{self.min}, {self.max}]")
        if int(self.points) != self.points or self.points < 2:
            raise DomainError(f"grid needs at least 2 points, got {self.points!r}")

    @classmethod
    def intensity(cls, lo: float = -2.0, hi: float = 2.0, points: int = 201) -> "Grid":
        return cls("log10_scaled_intensity", lo, hi, points)

    @classmethod
    def beta(cls, lo: float, hi: float, points: int) -> "Grid":
        return cls("beta", lo, hi, points)

    def values(self) -> list[float]:
        n = self.points - 1
        span = self.max - self.min
        return [self.min + span * i / n if i < n else self.max for i in range(n + 1)]


@dataclass(frozen=True)
class SweepRow:
    axis_value: float
    x: float
    amplitude_ratio: float
    coherent_fraction: float
    noise_fraction: float
    sigma_z: float
    sigma_minus_mag: float


@dataclass(frozen=True)
class BetaRow:
    beta: float
    gamma_loss: float
    linear_ratio: float


def _row(params: AtomParams, axis_value: float) -> SweepRow:
    x = 10.0**axis_value / 4.0
    intensity = x * params.big_gamma
    sol = steady_state(params, math.sqrt(intensity))
    return SweepRow(
        axis_value=axis_value,
        x=x,
        amplitude_ratio=sol.amplitude_ratio,
        coherent_fraction=abs(sol.b_out) ** 2 / intensity,
        noise_fraction=sol.p_noise / intensity,
        sigma_z=sol.state.sigma_z,
        sigma_minus_mag=abs(sol.state.sigma_minus),
    )


def response_sweep(
    params: AtomParams, grid: Grid, workers: Optional[int] = None
) -> list[SweepRow]:
    """Stationary response at every point of a log-intensity grid.

    Rows come back in grid order whatever ``workers`` is.
    """
    if grid.axis != "log10_scaled_intensity":
        raise UsageError(f"response_sweep needs a log10_scaled_intensity grid, got {grid.axis!r}")
    values = grid.values()
    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(lambda v: _row(params, v), values))
    return [_row(params, v) for v in values]


def beta_sweep(grid: Grid, big_gamma: float = 1.0) -> list[BetaRow]:
    """Weak-drive reflection 1 - 2*beta along a grid of cavity emission fractions."""
    if grid.axis != "beta":
        raise UsageError(f"beta_sweep needs a beta grid, got {grid.axis!r}")
    if not (0.0 < grid.min and grid.max <= 1.0):
        raise DomainError(f"beta must lie in (0, 1], got [{grid.min}, {grid.max}]")
    rows = []
    for beta in grid.values():
        params = AtomParams.from_beta(beta, big_gamma)
        rows.append(BetaRow(beta, params.gamma_loss, linear_response(params)))
    return rows


def rows_to_csv(rows: Sequence, header: Optional[Sequence[str]] = None) -> str:
    if header is None:
        header = [f.name for f in fields(rows[0])] if rows else list(SWEEP_HEADER)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([repr(float(v)) for v in astuple(row)])
    return buf.getvalue()


def rows_to_json(rows: Sequence) -> str:
    return json.dumps([{f.name: getattr(r, f.name) for f in fields(r)} for r in rows],
                      indent=1)
