"""Exact single-mode state models used as ground truth.

Density matrices live in a truncated Fock basis. Quadratures follow the
``[x, p] = i`` convention, so the vacuum quadrature variance is 1/2 and the
squeezer ``U(r) = exp(r (a^dag^2 - a^2) / 2)`` multiplies the x-quadrature
by ``exp(r)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.linalg import expm

from catwitness.specfun import (
    DEFAULT_FOCK_CUTOFF,
    CutoffError,
    hermite_functions,
    hermite_polynomials,
)

TRUNCATION_TOL = 1e-10
# Entries below this magnitude are dropped when evaluating quadrature densities.
SUPPORT_FLOOR = 1e-20
# Extra Fock levels carried while exponentiating the squeeze generator; the
# truncated generator is only trusted well below its top row.
SQUEEZE_PADDING = 48


@dataclass(frozen=True)
class CatSpec:
    """Cat-like state ``(|alpha> + exp(i phi)|-alpha>) / sqrt(2 N)``."""

    alpha: complex
    phi: float

    def __post_init__(self):
        if self.normalization <= 1e-12:
            raise ValueError(
                f"cat normalization {self.normalization:.3g} degenerates for "
                f"alpha={self.alpha}, phi={self.phi}"
            )

    @property
    def normalization(self) -> float:
        cos_phi = np.cos(self.phi)
        # (1 + cos phi) + cos phi * expm1 keeps the odd-cat limit accurate
        return float((1.0 + cos_phi) + cos_phi * np.expm1(-2.0 * abs(self.alpha) ** 2))


@dataclass(frozen=True)
class SqueezedFockSpec:
    n: int
    r: float

    def __post_init__(self):
        if self.n < 0:
            raise ValueError(f"Fock index must be nonnegative, got {self.n}")
        if not np.isfinite(self.r):
            raise ValueError("squeezing constant must be finite")


@dataclass(frozen=True)
class SqueezedThermalSpec:
    """``U(r) rho_T U^dag(r)`` with ``rho_T`` diagonal in the Fock basis."""

    r: float
    weights: tuple[float, ...]

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if np.any(w < 0):
            raise ValueError("thermal weights must be nonnegative")
        if abs(w.sum() - 1.0) > 1e-10:
            raise ValueError(f"thermal weights sum to {w.sum():.12f}, not 1")

    @classmethod
    def thermal(cls, r: float, nbar: float, tol: float = 1e-13) -> "SqueezedThermalSpec":
        """Geometric (thermal) weights for mean photon number ``nbar``, renormalized
        after dropping the tail below ``tol``."""
        if nbar < 0:
            raise ValueError("nbar must be nonnegative")
        if nbar == 0:
            return cls(r, (1.0,))
        q = nbar / (1.0 + nbar)
        nmax = int(np.ceil(np.log(tol) / np.log(q)))
        w = (1.0 - q) * q ** np.arange(nmax + 1)
        return cls(r, tuple(w / w.sum()))


@dataclass(frozen=True, eq=False)
class FockDensityMatrix:
    """Validated density matrix in a truncated Fock basis."""

    entries: np.ndarray = field(repr=False)

    def __post_init__(self):
        rho = np.array(self.entries, dtype=complex)
        if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
            raise ValueError(f"density matrix must be square, got shape {rho.shape}")
        if not np.all(np.isfinite(rho)):
            raise ValueError("density matrix has non-finite entries")
        if np.max(np.abs(rho - rho.conj().T), initial=0.0) > 1e-12:
            raise ValueError("density matrix is not Hermitian")
        tr = np.trace(rho).real
        if abs(tr - 1.0) > 1e-8:
            raise ValueError(f"density matrix trace {tr:.12f} deviates from 1")
        rho = 0.5 * (rho + rho.conj().T)
        if np.linalg.eigvalsh(rho)[0] < -1e-10:
            raise ValueError("density matrix is not positive semidefinite")
        rho.setflags(write=False)
        object.__setattr__(self, "entries", rho)

    @classmethod
    def from_vector(cls, psi) -> "FockDensityMatrix":
        psi = np.asarray(psi, dtype=complex)
        return cls(np.outer(psi, psi.conj()))

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    @property
    def diagonal(self) -> np.ndarray:
        return self.entries.diagonal().real

    @cached_property
    def support(self) -> int:
        """Number of leading Fock levels carrying all nonzero entries."""
        mags = np.abs(self.entries).max(axis=0)
        nz = np.nonzero(mags > SUPPORT_FLOOR)[0]
        return int(nz[-1]) + 1 if nz.size else 1

    @cached_property
    def spectral(self) -> tuple[np.ndarray, np.ndarray]:
        """Eigenpairs of the supported block with non-negligible weight."""
        d = self.support
        lam, vec = np.linalg.eigh(self.entries[:d, :d])
        keep = lam > 1e-14 * lam.max()
        return lam[keep], vec[:, keep]

    @property
    def purity(self) -> float:
        return float(np.vdot(self.entries, self.entries).real)

    def padded(self, dim: int) -> np.ndarray:
        out = np.zeros((dim, dim), dtype=complex)
        k = min(dim, self.dim)
        out[:k, :k] = self.entries[:k, :k]
        return out

    def quadrature_moments(self, theta: float) -> tuple[float, float]:
        """Mean and variance of ``x_theta`` for the ideal (lossless) state."""
        d = self.support + 2
        rho = self.padded(d)
        a = np.diag(np.sqrt(np.arange(1, d)), 1)
        xt = (a * np.exp(-1j * theta) + a.T * np.exp(1j * theta)) / np.sqrt(2.0)
        mean = np.trace(rho @ xt).real
        second = np.trace(rho @ xt @ xt).real
        return float(mean), float(max(second - mean * mean, 0.0))


def _coherent_amplitudes(alpha: complex, dim: int) -> np.ndarray:
    c = np.empty(dim, dtype=complex)
    c[0] = np.exp(-0.5 * abs(alpha) ** 2)
    for n in range(1, dim):
        c[n] = c[n - 1] * alpha / np.sqrt(n)
    return c


def cat_vector(spec: CatSpec, cutoff: int = DEFAULT_FOCK_CUTOFF) -> np.ndarray:
    n = np.arange(cutoff)
    coh = _coherent_amplitudes(complex(spec.alpha), cutoff)
    phase = np.exp(1j * spec.phi)
    if abs(phase.imag) < 1e-15:
        # exact parity for phi at multiples of pi
        phase = np.sign(phase.real)
    psi = coh * (1.0 + phase * (-1.0) ** n) / np.sqrt(2.0 * spec.normalization)
    norm = np.vdot(psi, psi).real
    if norm < 1.0 - TRUNCATION_TOL:
        raise CutoffError(
            f"cutoff {cutoff} keeps only {norm:.12f} of the cat state norm; increase it"
        )
    return psi


def cat_density_matrix(spec: CatSpec, cutoff: int = DEFAULT_FOCK_CUTOFF) -> FockDensityMatrix:
    return FockDensityMatrix.from_vector(cat_vector(spec, cutoff))


def squeeze_unitary(r: float, dim: int) -> np.ndarray:
    """``U(r)`` restricted to the first ``dim`` levels (computed in a larger space)."""
    big = dim + SQUEEZE_PADDING
    a = np.diag(np.sqrt(np.arange(1, big)), 1)
    gen = 0.5 * r * (a.T @ a.T - a @ a)
    return expm(gen)[:dim, :dim]


def _squeezed_columns(r: float, ns, cutoff: int, weights=None) -> np.ndarray:
    ns = list(ns)
    if max(ns) >= cutoff:
        raise CutoffError(f"Fock index {max(ns)} does not fit below cutoff {cutoff}")
    u = squeeze_unitary(r, cutoff)
    cols = u[:, ns]
    norms = np.sum(np.abs(cols) ** 2, axis=0)
    # for mixtures the kept trace is what matters
    kept = np.min(norms) if weights is None else float(np.dot(weights, norms))
    if kept < 1.0 - TRUNCATION_TOL:
        raise CutoffError(
            f"cutoff {cutoff} truncates the squeezed state (kept norm {kept:.12f})"
        )
    return cols


def squeezed_fock_vector(spec: SqueezedFockSpec, cutoff: int = DEFAULT_FOCK_CUTOFF) -> np.ndarray:
    return _squeezed_columns(spec.r, [spec.n], cutoff)[:, 0].astype(complex)


def squeezed_fock_density_matrix(
    spec: SqueezedFockSpec, cutoff: int = DEFAULT_FOCK_CUTOFF
) -> FockDensityMatrix:
    return FockDensityMatrix.from_vector(squeezed_fock_vector(spec, cutoff))


def squeezed_thermal_density_matrix(
    spec: SqueezedThermalSpec, cutoff: int = DEFAULT_FOCK_CUTOFF
) -> FockDensityMatrix:
    w = np.asarray(spec.weights)
    cols = _squeezed_columns(spec.r, range(len(w)), cutoff, w)
    rho = (cols * w) @ cols.conj().T
    return FockDensityMatrix(rho)


def fock_density_matrix(n: int, cutoff: int = DEFAULT_FOCK_CUTOFF) -> FockDensityMatrix:
    if n < 0:
        raise ValueError(f"Fock index must be non-negative, got {n}")
    if n >= cutoff:
        raise CutoffError(f"Fock index {n} does not fit below cutoff {cutoff}")
    psi = np.zeros(cutoff, dtype=complex)
    psi[n] = 1.0
    return FockDensityMatrix.from_vector(psi)


def coherent_density_matrix(alpha: complex, cutoff: int = DEFAULT_FOCK_CUTOFF) -> FockDensityMatrix:
    psi = _coherent_amplitudes(complex(alpha), cutoff)
    if np.vdot(psi, psi).real < 1.0 - TRUNCATION_TOL:
        raise CutoffError(f"cutoff {cutoff} truncates the coherent state")
    return FockDensityMatrix.from_vector(psi)


def _rotated(rho: np.ndarray, theta: float) -> np.ndarray:
    ph = np.exp(1j * theta * np.arange(rho.shape[0]))
    return rho * np.outer(ph.conj(), ph)


def quadrature_pdf(rho: FockDensityMatrix, theta, eta: float, x):
    """Probability density of the measured quadrature ``x' = sqrt(eta) x_theta + sqrt(1-eta) x_vac``.

    ``theta`` may be a scalar or an array broadcastable against ``x``. For
    ``eta < 1`` the convolution with the vacuum noise is done by Gauss-Hermite
    quadrature, which is exact here because the ideal density is a polynomial
    times ``exp(-x**2)`` for any state of finite Fock support.
    """
    if not 0.0 < eta <= 1.0:
        raise ValueError(f"efficiency must lie in (0, 1], got {eta}")
    theta, x = np.broadcast_arrays(np.asarray(theta, dtype=float), np.asarray(x, dtype=float))
    d = rho.support
    lam, vec = rho.spectral
    shape = x.shape
    th = theta.ravel()
    xs = x.ravel()
    ph = np.exp(1j * np.outer(np.arange(d), th))  # (d, N)
    vh = vec.conj().T

    def quad_form(h):
        u = vh @ (h * ph)
        return lam @ (u.real**2 + u.imag**2)

    if eta == 1.0:
        out = quad_form(hermite_functions(d - 1, xs))
    else:
        nodes, weights = np.polynomial.hermite.hermgauss(d + 4)
        acc = np.zeros(xs.size)
        for t, wt in zip(nodes, weights):
            xin = np.sqrt(eta) * xs + np.sqrt(1.0 - eta) * t
            acc += wt * quad_form(hermite_polynomials(d - 1, xin))
        out = acc * np.exp(-xs * xs) / np.sqrt(np.pi)
    return out.reshape(shape)[()] if shape else float(out[0])


def lund_fidelity(alpha: float, r):
    """Fidelity of ``U(r)|1>`` with the odd coherent state of amplitude ``alpha``."""
    alpha = float(abs(alpha))
    if alpha <= 0.0:
        raise ValueError("alpha must be positive; the odd cat is undefined at alpha = 0")
    r = np.asarray(r, dtype=float)
    a2 = alpha * alpha
    out = 2.0 * a2 * np.exp(-a2 * (1.0 - np.tanh(r))) / (np.cosh(r) ** 3 * -np.expm1(-2.0 * a2))
    return out[()] if out.ndim == 0 else out


_GOLDEN = (np.sqrt(5.0) - 1.0) / 2.0


def optimize_squeezing(alpha: float, lo: float = 0.0, hi: float = 3.0, tol: float = 1e-6) -> float:
    """Squeezing that maximizes :func:`lund_fidelity` (golden-section search)."""
    if not 0.0 < alpha <= 5.0:
        raise ValueError(f"alpha must lie in (0, 5], got {alpha}")
    f = lambda r: lund_fidelity(alpha, r)  # noqa: E731
    c = hi - _GOLDEN * (hi - lo)
    d = lo + _GOLDEN * (hi - lo)
    fc, fd = f(c), f(d)
    while hi - lo > tol:
        if fc > fd:
            hi, d, fd = d, c, fc
            c = hi - _GOLDEN * (hi - lo)
            fc = f(c)
        else:
            lo, c, fc = c, d, fd
            d = lo + _GOLDEN * (hi - lo)
            fd = f(d)
    return 0.5 * (lo + hi)


def wigner_origin(rho: FockDensityMatrix) -> float:
    """Wigner function at the phase-space origin, ``<(-1)^n> / pi``."""
    p = rho.diagonal
    return float(np.sum(p * (-1.0) ** np.arange(p.size)) / np.pi)


def mean_photon(rho: FockDensityMatrix) -> float:
    p = rho.diagonal
    return float(np.sum(np.arange(p.size) * p))


def fidelity_oracle(rho: FockDensityMatrix, psi: FockDensityMatrix) -> float:
    """``Tr[rho psi]`` for a pure target ``psi``."""
    if rho.dim != psi.dim:
        raise ValueError(f"dimension mismatch: {rho.dim} vs {psi.dim}")
    if abs(psi.purity - 1.0) > 1e-8:
        raise ValueError("target state must be pure")
    return float(np.vdot(psi.entries, rho.entries).real)
