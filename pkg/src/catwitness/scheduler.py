"""Variance profiles and variance-optimal phase schedules."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from catwitness.kernels import squeezed_frame
from catwitness.simulator import PhaseSchedule, QuadratureRecords

REFINE = 512
MIN_PER_BIN = 30


class UnderpopulatedBinError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class VarianceProfile:
    """Per-phase kernel variance ``V_f(theta)`` on a grid in ``[0, pi)``."""

    grid: np.ndarray
    vf: np.ndarray

    def __post_init__(self):
        g = np.asarray(self.grid, dtype=float)
        v = np.asarray(self.vf, dtype=float)
        if g.shape != v.shape or g.ndim != 1 or g.size == 0:
            raise ValueError("grid and vf must be 1-d arrays of equal length")
        if np.any(np.diff(g) <= 0) or g[0] < 0 or g[-1] >= np.pi:
            raise ValueError("grid must be strictly increasing within [0, pi)")
        if np.any(v < 0) or not np.all(np.isfinite(v)):
            raise ValueError("variances must be finite and nonnegative")
        object.__setattr__(self, "grid", g)
        object.__setattr__(self, "vf", v)

    def __call__(self, theta) -> np.ndarray:
        """Periodic piecewise-linear interpolation, floored at zero."""
        return np.maximum(np.interp(theta, self.grid, self.vf, period=np.pi), 0.0)

    def refined(self, n: int = REFINE) -> tuple[np.ndarray, np.ndarray]:
        t = np.arange(n) * np.pi / n
        return t, self(t)


def _periodic_mean(values: np.ndarray) -> float:
    # trapezoid rule on a periodic grid is the plain mean
    return float(np.mean(values))


def empirical_variance_profile(records: QuadratureRecords, kernel, bins: int) -> VarianceProfile:
    """Sample variance of kernel values in ``bins`` phase cells centred on ``k pi / bins``."""
    recs = records.folded()
    width = np.pi / bins
    idx = np.floor(recs.theta / width + 0.5).astype(int) % bins
    vals = np.asarray(kernel(recs.xprime, recs.theta), dtype=float)
    vf = np.empty(bins)
    for b in range(bins):
        sel = vals[idx == b]
        if sel.size < MIN_PER_BIN:
            raise UnderpopulatedBinError(
                f"phase bin {b} (theta={b * width:.6g}) holds {sel.size} records, need {MIN_PER_BIN}"
            )
        vf[b] = np.var(sel, ddof=1)
    return VarianceProfile(np.arange(bins) * width, vf)


def optimal_density(profile: VarianceProfile, total: float):
    """``m_opt(theta) = M sqrt(V_f(theta)) / int sqrt(V_f)`` as a callable."""
    _, v = profile.refined()
    norm = np.pi * _periodic_mean(np.sqrt(v))
    if norm <= 0:
        raise ValueError("variance profile is identically zero; optimal schedule undefined")
    return lambda theta: total * np.sqrt(profile(theta)) / norm


def optimal_schedule(profile: VarianceProfile, total: int, bins: int | None = None) -> PhaseSchedule:
    """Stratified schedule with counts proportional to ``sqrt(V_f)``."""
    bins = bins or profile.grid.size
    dens = optimal_density(profile, total)
    width = np.pi / bins
    theta = np.arange(bins) * width
    per_cell = max(REFINE // bins, 8)
    offsets = (np.arange(per_cell) + 0.5) / per_cell - 0.5
    masses = np.array([np.mean(dens(t + offsets * width)) * width for t in theta])
    return PhaseSchedule.from_masses(theta, masses, total, density=dens(theta))


def predicted_variances(profile: VarianceProfile, total: int) -> tuple[float, float]:
    """Minimal variance under the optimal density and variance under uniform sampling."""
    _, v = profile.refined()
    v_min = _periodic_mean(np.sqrt(v)) ** 2 / total
    v_c = _periodic_mean(v) / total
    return v_min, v_c


def squeezed_thermal_density(theta, r: float, total: float):
    a = squeezed_frame(theta, r, 1.0).a
    return total / (np.pi * a * a)


def squeezed_thermal_schedule(r: float, total: int, bins: int = 64) -> PhaseSchedule:
    """Optimal schedule ``M / (pi a^2)`` for squeezed thermal-like states.

    Cell masses are exact: ``int dtheta / a^2`` is the increment of the
    effective phase ``vartheta``.
    """
    if total <= 0:
        raise ValueError("total must be positive")
    width = np.pi / bins
    theta = np.arange(bins) * width
    edges = np.arange(bins + 1) * width - 0.5 * width
    vt = np.arctan2(np.exp(-r) * np.sin(edges), np.exp(r) * np.cos(edges))
    vt = np.unwrap(vt)
    masses = np.diff(vt)
    return PhaseSchedule.from_masses(theta, masses, total, density=squeezed_thermal_density(theta, r, total))
