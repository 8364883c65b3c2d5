"""Monte Carlo homodyne detection of exact state models."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar

from catwitness.specfun import hermite_functions
from catwitness.states import FockDensityMatrix

MIN_ACCEPTANCE = 1e-4


class EnvelopeError(RuntimeError):
    """Rejection-sampling envelope fails to dominate or accepts too rarely."""


def fold_phase(theta, xprime):
    """Map phases onto ``[0, pi)`` using ``x_{theta+pi} = -x_theta``."""
    theta = np.asarray(theta, dtype=float)
    xprime = np.asarray(xprime, dtype=float)
    t = np.mod(theta, 2.0 * np.pi)
    flip = t >= np.pi
    t = np.where(flip, t - np.pi, t)
    # mod can round up to exactly pi for inputs just below 2 pi
    t = np.where(t >= np.pi, 0.0, t)
    x = np.where(flip, -xprime, xprime)
    if t.ndim == 0:
        return float(t), float(x)
    return t, x


@dataclass(frozen=True, eq=False)
class QuadratureRecords:
    """Homodyne outcomes: phase ``theta`` and measured quadrature ``xprime``."""

    theta: np.ndarray
    xprime: np.ndarray

    def __post_init__(self):
        th = np.atleast_1d(np.asarray(self.theta, dtype=float))
        xp = np.atleast_1d(np.asarray(self.xprime, dtype=float))
        if th.shape != xp.shape or th.ndim != 1:
            raise ValueError("theta and xprime must be 1-d arrays of equal length")
        if not (np.all(np.isfinite(th)) and np.all(np.isfinite(xp))):
            raise ValueError("records contain non-finite values")
        object.__setattr__(self, "theta", th)
        object.__setattr__(self, "xprime", xp)

    def __len__(self) -> int:
        return self.theta.size

    def folded(self) -> "QuadratureRecords":
        t, x = fold_phase(self.theta, self.xprime)
        return QuadratureRecords(t, x)

    def __add__(self, other: "QuadratureRecords") -> "QuadratureRecords":
        return QuadratureRecords(
            np.concatenate([self.theta, other.theta]),
            np.concatenate([self.xprime, other.xprime]),
        )


def _cell_widths(theta: np.ndarray) -> np.ndarray:
    """Widths of the periodic (period pi) Voronoi cells around each phase."""
    if theta.size == 1:
        return np.array([np.pi])
    order = np.argsort(theta)
    t = theta[order]
    gaps = np.diff(np.concatenate([t, [t[0] + np.pi]]))
    widths_sorted = 0.5 * (gaps + np.roll(gaps, 1))
    out = np.empty_like(widths_sorted)
    out[order] = widths_sorted
    return out


@dataclass(frozen=True, eq=False)
class PhaseSchedule:
    """Number of quadrature samples per local-oscillator phase.

    ``kind`` is ``"grid"`` for equal counts on equidistant phases and
    ``"density"`` for counts that follow a sampling density ``m(theta)``.
    The realized density at each phase is its count divided by the width of
    the phase cell it represents.
    """

    theta: np.ndarray
    counts: np.ndarray
    kind: str = "grid"
    target_density: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        th = np.atleast_1d(np.asarray(self.theta, dtype=float))
        c = np.atleast_1d(np.asarray(self.counts)).astype(np.int64)
        if th.shape != c.shape:
            raise ValueError("theta and counts must have equal length")
        if np.any(c < 0) or c.sum() <= 0:
            raise ValueError("counts must be nonnegative with a positive total")
        if np.any(th < 0) or np.any(th >= np.pi):
            raise ValueError("schedule phases must lie in [0, pi)")
        if np.unique(th).size != th.size:
            raise ValueError("schedule phases must be distinct")
        if self.kind not in ("grid", "density"):
            raise ValueError(f"unknown schedule kind {self.kind!r}")
        object.__setattr__(self, "theta", th)
        object.__setattr__(self, "counts", c)

    @classmethod
    def uniform(cls, total: int, bins: int = 90) -> "PhaseSchedule":
        """Equidistant phases ``k pi / bins`` with counts as equal as possible."""
        if total <= 0 or bins <= 0:
            raise ValueError("total and bins must be positive")
        base, extra = divmod(int(total), bins)
        counts = np.full(bins, base)
        # spread the remainder evenly over the circle
        counts[np.floor(np.arange(extra) * bins / max(extra, 1)).astype(int)] += 1
        return cls(np.arange(bins) * np.pi / bins, counts, "grid")

    @classmethod
    def from_masses(cls, theta, masses, total: int, density=None) -> "PhaseSchedule":
        """Stratify ``total`` samples proportionally to ``masses`` (largest remainder)."""
        masses = np.asarray(masses, dtype=float)
        if np.any(masses < 0) or masses.sum() <= 0:
            raise ValueError("masses must be nonnegative and not all zero")
        quota = total * masses / masses.sum()
        counts = np.floor(quota).astype(np.int64)
        short = int(total - counts.sum())
        if short:
            order = np.argsort(-(quota - counts), kind="stable")
            counts[order[:short]] += 1
        return cls(theta, counts, "density", density)

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    @property
    def widths(self) -> np.ndarray:
        return _cell_widths(self.theta)

    def density(self) -> np.ndarray:
        """Realized sampling density ``m(theta)`` at each scheduled phase."""
        return self.counts / self.widths

    def weight_lookup(self, theta: np.ndarray, atol: float = 1e-9) -> np.ndarray:
        """Importance weights ``M / (pi m(theta))`` for recorded phases."""
        order = np.argsort(self.theta)
        t_sorted = self.theta[order]
        pos = np.searchsorted(t_sorted, theta)
        lo = np.clip(pos - 1, 0, t_sorted.size - 1)
        hi = np.clip(pos, 0, t_sorted.size - 1)
        pick = np.where(np.abs(t_sorted[hi] - theta) < np.abs(t_sorted[lo] - theta), hi, lo)
        dist = np.abs(t_sorted[pick] - theta)
        # phases near pi belong to the cell of phase 0
        wrap = np.abs(theta - np.pi - t_sorted[0])
        pick = np.where(wrap < dist, 0, pick)
        dist = np.minimum(dist, wrap)
        if np.any(dist > atol):
            bad = theta[np.argmax(dist)]
            raise ValueError(f"recorded phase {bad:.12g} is not part of the schedule")
        m = self.density()[order][pick]
        if np.any(m <= 0):
            bad = theta[np.argmax(m <= 0)]
            raise ValueError(f"schedule density is zero at recorded phase {bad:.12g}")
        return self.total / (np.pi * m)


class HomodyneSampler:
    """Rejection sampler for ideal quadrature values of a fixed state.

    The proposal is a two-component Gaussian mixture per phase: a core at the
    quadrature mean with 1.2 times the quadrature variance (at least 1/2),
    and a 5% wide component whose variance covers the classical turning
    point of the highest populated Fock level. The wide part dominates the
    ``poly(x) exp(-x**2)`` tails left by Fock truncation, which a core sized
    for a strongly squeezed quadrature cannot. The envelope constant comes
    from a grid search refined by bounded 1-d maximization.
    """

    WIDE_WEIGHT = 0.05
    CHUNK = 200_000

    def __init__(self, rho: FockDensityMatrix):
        self.rho = rho
        self._lam, self._vec = rho.spectral
        self._dim = rho.support
        self._setup: dict[float, tuple] = {}

    def pdf(self, theta: float, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        psi = hermite_functions(self._dim - 1, x.ravel())
        ph = np.exp(1j * theta * np.arange(self._dim))
        u = (self._vec.conj().T * ph) @ psi
        out = self._lam @ (u.real**2 + u.imag**2)
        return out.reshape(x.shape)

    def _proposal_pdf(self, x, mu, sigma, wide):
        core = np.exp(-0.5 * ((x - mu) / sigma) ** 2) / (sigma * np.sqrt(2 * np.pi))
        tail = np.exp(-0.5 * (x / wide) ** 2) / (wide * np.sqrt(2 * np.pi))
        return (1.0 - self.WIDE_WEIGHT) * core + self.WIDE_WEIGHT * tail

    def _proposal(self, theta: float):
        if theta in self._setup:
            return self._setup[theta]
        mu, var = self.rho.quadrature_moments(theta)
        sigma = np.sqrt(1.2 * max(var, 0.5))
        wide = np.sqrt(0.6 * (2 * self._dim + 1) + mu * mu)
        g = lambda x: self._proposal_pdf(x, mu, sigma, wide)  # noqa: E731
        half = max(10 * sigma, 4 * wide) + 4
        grid = np.linspace(mu - half, mu + half, 20001)
        ratio = self.pdf(theta, grid) / g(grid)
        k = int(np.argmax(ratio))
        h = grid[1] - grid[0]
        res = minimize_scalar(
            lambda x: -self.pdf(theta, x) / g(x),
            bounds=(grid[k] - h, grid[k] + h),
            method="bounded",
            options={"xatol": 1e-10},
        )
        c = 1.02 * max(ratio[k], -res.fun)
        if 1.0 / c < MIN_ACCEPTANCE:
            raise EnvelopeError(f"acceptance rate {1 / c:.2e} below {MIN_ACCEPTANCE} at theta={theta}")
        self._setup[theta] = (mu, sigma, wide, c)
        return self._setup[theta]

    def sample(self, theta: float, n: int, rng: np.random.Generator) -> np.ndarray:
        mu, sigma, wide, c = self._proposal(theta)
        out = []
        have = 0
        while have < n:
            m = min(int(1.2 * c * (n - have)) + 16, self.CHUNK)
            pick_wide = rng.random(m) < self.WIDE_WEIGHT
            x = np.where(pick_wide, rng.normal(0.0, wide, m), rng.normal(mu, sigma, m))
            ratio = self.pdf(theta, x) / (c * self._proposal_pdf(x, mu, sigma, wide))
            if np.any(ratio > 1.0):
                raise EnvelopeError(f"envelope violated at theta={theta} (ratio {ratio.max():.4f})")
            acc = x[rng.random(m) < ratio]
            out.append(acc[: n - have])
            have += min(acc.size, n - have)
        return np.concatenate(out) if out else np.empty(0)


def _bin_rngs(seed: int, bins: int) -> list[np.random.Generator]:
    return [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(bins)]


def sample_batches(
    rho: FockDensityMatrix,
    schedule: PhaseSchedule,
    eta: float,
    seed: int,
    n_batches: int,
    sampler: HomodyneSampler | None = None,
) -> list[QuadratureRecords]:
    """``n_batches`` independent record sets, each following ``schedule`` exactly."""
    if not 0.0 < eta <= 1.0:
        raise ValueError(f"efficiency must lie in (0, 1], got {eta}")
    sampler = sampler or HomodyneSampler(rho)
    rngs = _bin_rngs(seed, schedule.theta.size)
    per_bin = []
    for theta, count, rng in zip(schedule.theta, schedule.counts, rngs):
        n = int(count) * n_batches
        x = sampler.sample(float(theta), n, rng)
        if eta < 1.0:
            x = np.sqrt(eta) * x + np.sqrt(1.0 - eta) * rng.normal(0.0, np.sqrt(0.5), n)
        per_bin.append(x.reshape(n_batches, int(count)))
    out = []
    for b in range(n_batches):
        out.append(
            QuadratureRecords(
                np.repeat(schedule.theta, schedule.counts),
                np.concatenate([blk[b] for blk in per_bin]),
            )
        )
    return out


def sample_records(
    rho: FockDensityMatrix,
    schedule: PhaseSchedule,
    eta: float,
    seed: int,
    sampler: HomodyneSampler | None = None,
) -> QuadratureRecords:
    """Simulate homodyne records ``x' = sqrt(eta) x + sqrt(1 - eta) x_vac``.

    Each scheduled phase draws from its own child seed stream, so the output
    is reproducible from ``seed`` and independent of evaluation order.
    """
    return sample_batches(rho, schedule, eta, seed, 1, sampler)[0]
