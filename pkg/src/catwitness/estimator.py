"""Fidelity estimates and witnesses from homodyne records."""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from catwitness.simulator import PhaseSchedule, QuadratureRecords

DEFAULT_SIGNIFICANCE = 5.0
THREADS_ENV = "CATWITNESS_THREADS"
CHUNK = 65536


class WitnessMisuseError(ValueError):
    """Witness evaluated with an estimate of the wrong kind."""


class DataQualityError(ValueError):
    pass


@dataclass(frozen=True)
class Accumulator:
    """Count, mean and centered sum of squares; merges exactly (Chan et al.)."""

    count: int = 0
    mean: float = 0.0
    m2: float = 0.0

    @classmethod
    def of(cls, values: np.ndarray) -> "Accumulator":
        if values.size == 0:
            return cls()
        mean = float(np.mean(values))
        return cls(values.size, mean, float(np.sum((values - mean) ** 2)))

    def merge(self, other: "Accumulator") -> "Accumulator":
        if other.count == 0:
            return self
        if self.count == 0:
            return other
        n = self.count + other.count
        delta = other.mean - self.mean
        mean = self.mean + delta * other.count / n
        m2 = self.m2 + other.m2 + delta * delta * self.count * other.count / n
        return Accumulator(n, mean, m2)

    @property
    def stderr(self) -> float:
        if self.count < 2:
            return float("inf")
        return float(np.sqrt(self.m2 / (self.count - 1) / self.count))


@dataclass(frozen=True)
class Estimate:
    value: float
    stderr: float
    count: int
    weighting: str = "homogeneous"
    label: str = ""
    parity: str | None = None
    contributions: np.ndarray | None = field(default=None, repr=False, compare=False)

    def as_dict(self) -> dict:
        return {
            "kernel": self.label,
            "value": self.value,
            "stderr": self.stderr,
            "count": self.count,
            "weighting": self.weighting,
        }


@dataclass(frozen=True)
class WitnessVerdict:
    quantity: str
    passed: bool
    margin_sigma: float
    bound: float
    value: float
    significance: float = DEFAULT_SIGNIFICANCE

    def as_dict(self) -> dict:
        return {
            "quantity": self.quantity,
            "passed": self.passed,
            "margin_sigma": self.margin_sigma,
            "bound": self.bound,
            "value": self.value,
            "significance": self.significance,
        }


def default_workers() -> int:
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "1")))
    except ValueError:
        return 1


def _prepare(records: QuadratureRecords, schedule: PhaseSchedule | None):
    if len(records) == 0:
        raise ValueError("cannot estimate from an empty record set")
    recs = records.folded()
    if schedule is None or schedule.kind == "grid":
        weights = None
    else:
        weights = schedule.weight_lookup(recs.theta)
    return recs, weights


def contributions(kernel, records: QuadratureRecords, schedule: PhaseSchedule | None = None,
                  part: str = "value") -> np.ndarray:
    """Per-record contributions ``K(x', theta)`` times the importance weight."""
    recs, weights = _prepare(records, schedule)
    fn = kernel if part == "value" else kernel.null
    vals = np.asarray(fn(recs.xprime, recs.theta), dtype=float)
    if weights is not None:
        vals = vals * weights
    return vals


def accumulate(values: np.ndarray, workers: int | None = None, chunk: int = CHUNK) -> Accumulator:
    """Partitioned accumulation; partial results merge in chunk order."""
    parts = [values[i : i + chunk] for i in range(0, values.size, chunk)] or [values]
    workers = workers or default_workers()
    if workers > 1 and len(parts) > 1:
        with ThreadPoolExecutor(workers) as pool:
            partials = list(pool.map(Accumulator.of, parts))
    else:
        partials = [Accumulator.of(p) for p in parts]
    acc = Accumulator()
    for p in partials:
        acc = acc.merge(p)
    return acc


def estimate(kernel, records: QuadratureRecords, schedule: PhaseSchedule | None = None,
             workers: int | None = None) -> Estimate:
    """Average a kernel over homodyne records.

    Records are folded onto ``[0, pi)`` first. With a density schedule each
    contribution is weighted by ``M / (pi m(theta))`` so the estimate still
    targets the phase average with uniform weight ``1/pi``.
    """
    vals = contributions(kernel, records, schedule)
    if not np.all(np.isfinite(vals)):
        raise ValueError("kernel produced non-finite contributions")
    acc = accumulate(vals, workers)
    weighting = "density-weighted" if schedule is not None and schedule.kind == "density" else "homogeneous"
    return Estimate(
        value=acc.mean,
        stderr=acc.stderr,
        count=acc.count,
        weighting=weighting,
        label=getattr(kernel, "label", ""),
        parity=getattr(kernel, "parity", None),
        contributions=vals,
    )


def witness_negativity(f_minus: Estimate, significance: float = DEFAULT_SIGNIFICANCE) -> WitnessVerdict:
    """Certify ``W(0, 0) < 0`` from the fidelity with an odd-parity target."""
    if f_minus.parity != "odd":
        raise WitnessMisuseError(
            f"negativity witness needs an odd-parity target kernel, got {f_minus.label or 'unlabelled'}"
        )
    bound = (1.0 - 2.0 * f_minus.value) / np.pi
    margin = (f_minus.value - 0.5) / f_minus.stderr
    return WitnessVerdict("negativity", bool(margin > significance), float(margin), float(bound),
                          f_minus.value, significance)


def qng_threshold(nbar):
    """Fidelity threshold ``1/2 - exp(-2 nbar (nbar + 1)) / 2``."""
    return 0.5 - 0.5 * np.exp(-2.0 * nbar * (nbar + 1.0))


def witness_qng(f_minus: Estimate, nbar: Estimate,
                significance: float = DEFAULT_SIGNIFICANCE) -> WitnessVerdict:
    """Quantum non-Gaussianity from the odd-target fidelity and the mean photon number.

    The threshold ``T(nbar)`` inherits the photon-number uncertainty to first
    order through ``dT/dnbar``; the two standard errors add in quadrature.
    """
    if f_minus.parity != "odd":
        raise WitnessMisuseError("quantum non-Gaussianity witness needs an odd-parity target kernel")
    if nbar.value < -3.0 * nbar.stderr:
        raise DataQualityError(
            f"mean photon estimate {nbar.value:.4g} is negative by more than 3 sigma"
        )
    n = max(nbar.value, 0.0)
    thr = float(qng_threshold(n))
    slope = (2.0 * n + 1.0) * np.exp(-2.0 * n * (n + 1.0))
    se = float(np.hypot(f_minus.stderr, slope * nbar.stderr))
    margin = (f_minus.value - thr) / se
    return WitnessVerdict("quantum-non-gaussianity", bool(margin > significance), float(margin),
                          thr, f_minus.value, significance)


def null_diagnostic(records: QuadratureRecords, kernel, schedule: PhaseSchedule | None = None) -> float:
    """z-score of the kernel's null-function average (should be ``O(1)``)."""
    if kernel.null(np.zeros(1), np.zeros(1)) is None:
        raise ValueError(f"kernel {getattr(kernel, 'label', kernel)!r} exposes no null component")
    vals = contributions(kernel, records, schedule, part="null")
    if not np.any(vals):
        return 0.0
    acc = accumulate(vals)
    return float(acc.mean / acc.stderr)
