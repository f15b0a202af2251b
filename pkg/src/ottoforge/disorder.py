"""Quenched disorder in the system-bath coupling: exact ensemble averages.

The coupling perturbation d is drawn from the three-point distribution
{+delta, 0, -delta} with weights {(1-p)/2, p, (1-p)/2} and stays frozen for
a whole realization.  Averages enumerate the support exactly; nothing is
sampled.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, replace

from .engine import EngineSpec, ideal_efficiency, initial_state, run_cycle

MODES = ("shared", "independent")


@dataclass(frozen=True)
class DisorderDistribution:
    """Three-point coupling-perturbation distribution.

    mode 'shared' draws one d applied to both isochores (3 realizations);
    'independent' draws the hot and cold strokes separately (9 realizations).
    """

    delta: float
    p: float
    mode: str = "shared"

    def __post_init__(self):
        if not 0.0 <= self.delta < 1.0:
            raise ValueError(f"need 0 <= delta < 1, got {self.delta}")
        if not 0.0 <= self.p < 1.0:
            raise ValueError(f"need 0 <= p < 1, got {self.p}")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")

    def support(self) -> list[tuple[float, float]]:
        """(d, weight) pairs; the center weight is 1 minus the wing weights."""
        wing = (1.0 - self.p) / 2.0
        return [(self.delta, wing), (0.0, 1.0 - 2.0 * wing), (-self.delta, wing)]


def enumerate_realizations(dist: DisorderDistribution) -> list[tuple[float, float, float]]:
    """All (d_hot, d_cold, probability) triples, descending by (d_hot, d_cold)."""
    support = dist.support()
    if dist.mode == "shared":
        rows = [(d, d, w) for d, w in support]
    else:
        rows = [(dh, dc, wh * wc) for dh, wh in support for dc, wc in support]
    return sorted(rows, key=lambda row: (row[0], row[1]), reverse=True)


@dataclass(frozen=True)
class DisorderedResult:
    """Exact disorder average: per-realization cycle records and their mean eta."""

    realizations: list
    eta_dis: float


def disorder_averaged_efficiency(
    spec: EngineSpec, dist: DisorderDistribution
) -> DisorderedResult:
    """First-cycle efficiency averaged exactly over coupling realizations.

    Each realization runs one full cycle from the spec's preparation state
    with the bath couplings scaled by (1 + d)^2.  Realizations with q1 <= 0
    are kept but propagate NaN into the average with a warning.
    """
    rho0 = initial_state(spec)
    realizations = []
    for d_hot, d_cold, prob in enumerate_realizations(dist):
        record = run_cycle(rho0, spec, disorder_hot=d_hot, disorder_cold=d_cold)
        realizations.append((d_hot, d_cold, prob, record))
        if not record.is_engine:
            warnings.warn(
                f"realization (d_hot={d_hot:g}, d_cold={d_cold:g}) has q1 <= 0; "
                "its efficiency is undefined",
                stacklevel=2,
            )
    eta_dis = sum(prob * record.eta for _, _, prob, record in realizations)
    return DisorderedResult(realizations, eta_dis)


def averaged_efficiency_vs_time(
    spec: EngineSpec, dist: DisorderDistribution, t_grid
) -> list[tuple[float, float]]:
    """(stroke duration, disorder-averaged efficiency) table over a grid."""
    return [
        (float(t), disorder_averaged_efficiency(replace(spec, stroke_time=float(t)), dist).eta_dis)
        for t in t_grid
    ]


def find_t_s(
    spec: EngineSpec,
    dist: DisorderDistribution,
    tolerance: float = 2.5e-4,
    grid_step: float = 0.05,
    t_max: float = 100.0,
) -> float | None:
    """Smallest grid stroke duration whose averaged efficiency is ideal.

    Scans t = grid_step, 2*grid_step, ... up to t_max and returns the first
    t with |eta_dis(t) - eta_ideal| <= tolerance, or None when the scan cap
    is reached without success.
    """
    if tolerance <= 0:
        raise ValueError(f"tolerance must be positive, got {tolerance}")
    if grid_step <= 0:
        raise ValueError(f"grid_step must be positive, got {grid_step}")
    target = ideal_efficiency(spec)
    k = 1
    while True:
        t = k * grid_step
        if t > t_max * (1.0 + 1e-12):
            return None
        result = disorder_averaged_efficiency(replace(spec, stroke_time=t), dist)
        if abs(result.eta_dis - target) <= tolerance:
            return t
        k += 1
