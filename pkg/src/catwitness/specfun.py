"""Special functions behind the sampling kernels.

Everything here works on numpy arrays as well as scalars. The scaled
imaginary error function is never formed as ``exp(-z**2) * erfi(z)``: erfi
overflows around ``|z| ~ 27`` long before the product does.
"""

from __future__ import annotations

import numpy as np
from scipy import special

TWO_OVER_SQRT_PI = 2.0 / np.sqrt(np.pi)
DEFAULT_FOCK_CUTOFF = 64


class CutoffError(ValueError):
    """Requested Fock index lies beyond the configured truncation."""


def dawson(y):
    """Dawson function ``D(y) = exp(-y**2) * int_0^y exp(t**2) dt``.

    Real input only. ``D`` is odd and behaves like ``1/(2y)`` for large
    ``|y|``, so ``2*y*D(y)`` stays bounded where ``sqrt(pi)*y*exp(-y**2)*erfi(y)``
    would overflow.
    """
    y = np.asarray(y, dtype=float)
    out = special.dawsn(y)
    return out[()] if out.ndim == 0 else out


def erfi_scaled(z):
    """Return ``exp(-z**2) * erfi(z)`` for complex ``z``.

    Uses the identity ``exp(-z**2) erfi(z) = (2/sqrt(pi)) D(z)`` with the
    analytic continuation of Dawson's function, which is what
    ``-1j * (w(z) - exp(-z**2))`` reduces to without the cancellation near
    ``z = 0``. On the real axis this is exactly ``(2/sqrt(pi)) * dawson``.
    """
    z = np.asarray(z, dtype=complex)
    out = TWO_OVER_SQRT_PI * special.dawsn(z)
    return out[()] if out.ndim == 0 else out


def hermite_functions(nmax: int, x) -> np.ndarray:
    """Oscillator eigenfunctions ``psi_0 .. psi_nmax`` at ``x``.

    Returns an array of shape ``(nmax + 1,) + x.shape``. Convention: vacuum
    quadrature variance 1/2, ``psi_0(x) = pi**-0.25 * exp(-x**2 / 2)``.
    """
    x = np.asarray(x, dtype=float)
    out = np.empty((nmax + 1,) + x.shape)
    out[0] = np.pi ** -0.25 * np.exp(-0.5 * x * x)
    if nmax >= 1:
        out[1] = np.sqrt(2.0) * x * out[0]
    for n in range(2, nmax + 1):
        out[n] = np.sqrt(2.0 / n) * x * out[n - 1] - np.sqrt((n - 1) / n) * out[n - 2]
    return out


def hermite_polynomials(nmax: int, x) -> np.ndarray:
    """Like :func:`hermite_functions` but without the Gaussian factor.

    ``hermite_polynomials(n, x)[k] * exp(-x**2/2) == hermite_functions(n, x)[k]``.
    Used where the Gaussian is handled analytically (lossy quadrature pdfs).
    """
    x = np.asarray(x, dtype=float)
    out = np.empty((nmax + 1,) + x.shape)
    out[0] = np.pi ** -0.25
    if nmax >= 1:
        out[1] = np.sqrt(2.0) * x * out[0]
    for n in range(2, nmax + 1):
        out[n] = np.sqrt(2.0 / n) * x * out[n - 1] - np.sqrt((n - 1) / n) * out[n - 2]
    return out


def oscillator_eigenfunction(n: int, x, cutoff: int = DEFAULT_FOCK_CUTOFF):
    """Normalized eigenfunction ``psi_n(x)`` of the harmonic oscillator."""
    if n < 0:
        raise ValueError(f"Fock index must be nonnegative, got {n}")
    if n > cutoff:
        raise CutoffError(f"Fock index {n} exceeds the oracle cutoff {cutoff}")
    out = hermite_functions(n, x)[n]
    return out[()] if out.ndim == 0 else out
