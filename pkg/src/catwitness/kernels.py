"""Sampling functions whose averages over homodyne data give fidelities.

All kernels take the measured quadrature ``xprime`` and the local-oscillator
phase ``theta`` (arrays broadcast) and compensate for detection efficiency
``eta`` analytically. Averages are taken over ``theta`` in ``[0, pi)`` with
weight ``1/pi``; every kernel obeys ``K(x, theta) = K(-x, theta + pi)`` so
records from ``[pi, 2 pi)`` can be folded.

Loss compensation has two equivalent readings. The closed forms below insert
``eta`` directly into the argument ``y`` and the prefactor. Equivalently, for
the Husimi-based kernels one rescales ``x' -> x' / sqrt(2 eta - 1)``, inflates
the amplitude ``alpha -> sqrt(eta / (2 eta - 1)) alpha``, evaluates the
``eta = 1`` kernel and multiplies by ``eta / (2 eta - 1)``.

Besides the usable (real) kernel value, the derivation through the
quadrature characteristic function produces an imaginary companion
``sqrt(pi) y exp(-y**2)`` per Husimi term. It is a null function: its
average over the full phase circle vanishes for every state, and over
``[0, pi)`` for states with definite photon-number parity. The ``null``
methods return it for data-sanity checks.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from catwitness.specfun import dawson, erfi_scaled
from catwitness.states import CatSpec

SQRT_PI = np.sqrt(np.pi)
THRESHOLD_GUARD = 1e-10


class ThresholdError(ValueError):
    """Detection efficiency at or below the loss-compensation limit."""

    def __init__(self, eta: float, threshold: float, what: str):
        self.eta = eta
        self.threshold = threshold
        super().__init__(
            f"{what} needs detection efficiency eta > {threshold:.6g} "
            f"(lower bound on the detection efficiency), got eta={eta:.6g}"
        )


class UnsupportedOrderError(ValueError):
    """Squeezed-Fock sampling functions exist here only for n = 0 and n = 1."""


class KernelEvaluation(NamedTuple):
    value: np.ndarray
    imag: np.ndarray


class SqueezedFrame(NamedTuple):
    theta: np.ndarray
    vartheta: np.ndarray
    a: np.ndarray
    s: np.ndarray


def _check_eta_range(eta: float) -> None:
    if not 0.0 < eta <= 1.0:
        raise ValueError(f"efficiency must lie in (0, 1], got {eta}")


def husimi_threshold() -> float:
    return 0.5


def squeezed_threshold(r: float) -> float:
    return 1.0 / (1.0 + np.exp(-2.0 * abs(r)))


def check_husimi_eta(eta: float) -> None:
    _check_eta_range(eta)
    if eta <= 0.5 + THRESHOLD_GUARD:
        raise ThresholdError(eta, 0.5, "loss-compensated Husimi kernel")


def check_squeezed_eta(eta: float, r: float) -> None:
    _check_eta_range(eta)
    thr = squeezed_threshold(r)
    if eta <= thr + THRESHOLD_GUARD:
        raise ThresholdError(eta, thr, f"squeezed kernel (r={r:g})")


def _r_of_y(y):
    # 1 - sqrt(pi) y exp(-y^2) erfi(y), without forming erfi
    return 1.0 - SQRT_PI * y * erfi_scaled(y)


def _null_of_y(y):
    return SQRT_PI * y * np.exp(-y * y)


def _null_second_derivative(y):
    return SQRT_PI * (4.0 * y**3 - 6.0 * y) * np.exp(-y * y)


# Beyond ASYMPTOTIC_X the closed forms lose about x^2 ulps to cancellation,
# so both pattern functions switch to the series of 2 x D(x) in 1/x^2.
ASYMPTOTIC_X = 7.0
_ASYMPTOTIC_TERMS = 48
# c_k = (2k - 1)!! / 2^(k + 1), the coefficients of x D(x) in powers of 1/x^2
_DAWSON_SERIES = np.cumprod(np.concatenate([[0.5], (2.0 * np.arange(1, _ASYMPTOTIC_TERMS + 1) - 1.0) / 2.0]))
_F0_SERIES = -4.0 * _DAWSON_SERIES[1:]
_F1_SERIES = -4.0 * _DAWSON_SERIES[1:] * (2.0 * np.arange(1, _ASYMPTOTIC_TERMS + 1) - 1.0)


def _asymptotic(coeffs, x):
    w = 1.0 / (x * x)
    acc = np.zeros_like(w)
    for c in coeffs[::-1]:
        acc = (acc + c) * w
    return acc


def _pattern(x, closed, coeffs):
    x = np.asarray(x, dtype=float)
    far = np.abs(x) > ASYMPTOTIC_X
    if not np.any(far):
        return closed(x)
    with np.errstate(invalid="ignore", over="ignore"):
        near = closed(np.where(far, 0.0, x))
    return np.where(far, _asymptotic(coeffs, np.where(far, x, 1.0)), near)


def pattern_f0(x):
    """Vacuum-probability pattern function ``f_0(x) = 2 - 4 x D(x)``."""
    return _pattern(x, lambda v: 2.0 - 4.0 * v * dawson(v), _F0_SERIES)


def pattern_f1(x):
    """Single-photon pattern function ``2(2x^2 - 1) + 8x(1 - x^2) D(x)``."""
    return _pattern(x, lambda v: 2.0 * (2.0 * v * v - 1.0) + 8.0 * v * (1.0 - v * v) * dawson(v), _F1_SERIES)


def _husimi_y(xprime, theta, eta, alpha, alphastar):
    xt = np.sqrt(eta / 2.0) * (alpha * np.exp(-1j * theta) + alphastar * np.exp(1j * theta))
    return (xprime - xt) / np.sqrt(2.0 * eta - 1.0)


def _husimi_complex(xprime, theta, eta, alpha, alphastar):
    y = _husimi_y(np.asarray(xprime, float), np.asarray(theta, float), eta, alpha, alphastar)
    pref = (2.0 / np.pi) * eta / (2.0 * eta - 1.0)
    return pref * _r_of_y(y), pref * _null_of_y(y)


def kernel_SQ(xprime, theta, eta: float, alpha: complex, alphastar: complex | None = None):
    """Loss-compensated sampling function for the Husimi function ``Q(alpha, alpha*)``.

    ``alpha`` and ``alphastar`` are independent complex parameters (the
    default ``alphastar`` is the complex conjugate). The value is real for a
    conjugate pair; otherwise ``imag`` carries the imaginary part of the
    analytic continuation.
    """
    check_husimi_eta(eta)
    if alphastar is None:
        alphastar = np.conj(alpha)
    val, _ = _husimi_complex(xprime, theta, eta, complex(alpha), complex(alphastar))
    return KernelEvaluation(np.real(val), np.imag(val))


def null_SQ(xprime, theta, eta: float, alpha: complex, alphastar: complex | None = None):
    """Null-function companion of :func:`kernel_SQ` (complex for non-conjugate pairs)."""
    check_husimi_eta(eta)
    if alphastar is None:
        alphastar = np.conj(alpha)
    return _husimi_complex(xprime, theta, eta, complex(alpha), complex(alphastar))[1]


def _cat_terms(xprime, theta, eta, cat: CatSpec, part: int):
    a = complex(cat.alpha)
    ac = a.conjugate()
    pref = np.pi / (2.0 * cat.normalization)
    direct = (
        _husimi_complex(xprime, theta, eta, a, ac)[part]
        + _husimi_complex(xprime, theta, eta, -a, -ac)[part]
    )
    # S_Q(alpha, -alpha*) is the complex conjugate of S_Q(-alpha, alpha*)
    cross = _husimi_complex(xprime, theta, eta, -a, ac)[part]
    interference = 2.0 * np.real(np.exp(1j * cat.phi) * cross)
    return pref * (np.real(direct) + np.exp(-2.0 * abs(a) ** 2) * interference)


def kernel_SF(xprime, theta, eta: float, cat: CatSpec):
    """Sampling function for the fidelity with the cat-like state ``cat``."""
    check_husimi_eta(eta)
    return _cat_terms(xprime, theta, eta, cat, 0)


def null_SF(xprime, theta, eta: float, cat: CatSpec):
    check_husimi_eta(eta)
    return _cat_terms(xprime, theta, eta, cat, 1)


def squeezed_frame(theta, r: float, eta: float) -> SqueezedFrame:
    """Effective phase, scale factor and loss factor of the squeezed frame."""
    check_squeezed_eta(eta, r)
    theta = np.asarray(theta, dtype=float)
    c, s_ = np.cos(theta), np.sin(theta)
    a2 = np.exp(2.0 * r) * c * c + np.exp(-2.0 * r) * s_ * s_
    vartheta = np.arctan2(np.exp(-r) * s_, np.exp(r) * c)
    s = (eta * (a2 + 1.0) - 1.0) / (eta * a2)
    return SqueezedFrame(theta, vartheta, np.sqrt(a2), s)


def _squeezed_husimi_complex(xprime, theta, eta, alpha, alphastar, r):
    fr = squeezed_frame(theta, r, eta)
    xt = (alpha * np.exp(-1j * fr.vartheta) + alphastar * np.exp(1j * fr.vartheta)) / np.sqrt(2.0)
    y = (np.asarray(xprime, float) / (fr.a * np.sqrt(eta)) - xt) / np.sqrt(fr.s)
    pref = 2.0 / (np.pi * fr.a**2 * fr.s)
    return pref * _r_of_y(y), pref * _null_of_y(y)


def kernel_SQ_squeezed(
    xprime, theta, eta: float, alpha: complex, alphastar: complex | None, r: float
):
    """Sampling function for the Husimi function of ``U^dag(r) rho U(r)``."""
    if alphastar is None:
        alphastar = np.conj(alpha)
    val, _ = _squeezed_husimi_complex(xprime, theta, eta, complex(alpha), complex(alphastar), r)
    return KernelEvaluation(np.real(val), np.imag(val))


def null_SQ_squeezed(xprime, theta, eta: float, alpha: complex, alphastar: complex | None, r: float):
    if alphastar is None:
        alphastar = np.conj(alpha)
    return _squeezed_husimi_complex(xprime, theta, eta, complex(alpha), complex(alphastar), r)[1]


def _fsq_argument(xprime, theta, eta, r):
    fr = squeezed_frame(theta, r, eta)
    a2 = fr.a**2
    x = np.asarray(xprime, float) / np.sqrt(eta * (a2 + 1.0) - 1.0)
    return x, a2, fr.s


def _check_order(n: int) -> None:
    if n not in (0, 1):
        raise UnsupportedOrderError(
            f"squeezed-Fock sampling functions are available for n in {{0, 1}} only, got n={n}"
        )


def kernel_fsq(n: int, xprime, theta, eta: float, r: float):
    """Sampling function for ``p_n(r) = <n|U^dag(r) rho U(r)|n>``, ``n`` in {0, 1}."""
    _check_order(n)
    x, a2, s = _fsq_argument(xprime, theta, eta, r)
    f0 = pattern_f0(x)
    if n == 0:
        return f0 / (a2 * s)
    return (pattern_f1(x) - (1.0 - s) * f0) / (a2 * s * s)


def null_fsq(n: int, xprime, theta, eta: float, r: float):
    """Null companion of :func:`kernel_fsq`, obtained from the same generating
    function applied to the null part of the squeezed Husimi kernel."""
    _check_order(n)
    x, a2, s = _fsq_argument(xprime, theta, eta, r)
    pref = 2.0 / (a2 * s)
    if n == 0:
        return pref * _null_of_y(x)
    return pref * (_null_of_y(x) + _null_second_derivative(x) / (2.0 * s))


def kernel_mean_photon(xprime, eta: float):
    """Sampling function ``((x')^2 - 1/2) / eta`` for the mean photon number."""
    _check_eta_range(eta)
    xprime = np.asarray(xprime, dtype=float)
    return (xprime * xprime - 0.5) / eta


# Callable kernel objects used by the estimator, scheduler and CLI. Threshold
# checks run once at construction.


def _fmt_amplitude(alpha) -> str:
    a = complex(alpha)
    return f"{a.real:g}" if a.imag == 0.0 else f"{a:g}"


@dataclass(frozen=True)
class CatKernel:
    alpha: complex
    phi: float
    eta: float = 1.0

    def __post_init__(self):
        check_husimi_eta(self.eta)
        object.__setattr__(self, "cat", CatSpec(self.alpha, self.phi))

    @property
    def parity(self) -> str | None:
        c = np.cos(self.phi)
        if np.isclose(c, -1.0, atol=1e-12):
            return "odd"
        if np.isclose(c, 1.0, atol=1e-12):
            return "even"
        return None

    @property
    def label(self) -> str:
        return f"cat(alpha={_fmt_amplitude(self.alpha)}, phi={self.phi:g})"

    def __call__(self, xprime, theta):
        return kernel_SF(xprime, theta, self.eta, self.cat)

    def null(self, xprime, theta):
        return null_SF(xprime, theta, self.eta, self.cat)


@dataclass(frozen=True)
class SqueezedFockKernel:
    n: int
    r: float
    eta: float = 1.0

    def __post_init__(self):
        _check_order(self.n)
        check_squeezed_eta(self.eta, self.r)

    @property
    def parity(self) -> str:
        return "odd" if self.n % 2 else "even"

    @property
    def label(self) -> str:
        return f"squeezed-fock(n={self.n}, r={self.r:g})"

    def __call__(self, xprime, theta):
        return kernel_fsq(self.n, xprime, theta, self.eta, self.r)

    def null(self, xprime, theta):
        return null_fsq(self.n, xprime, theta, self.eta, self.r)


@dataclass(frozen=True)
class HusimiKernel:
    """``pi``-scaled Husimi kernel: its average is ``<alpha|U^dag rho U|alpha>``."""

    alpha: complex
    eta: float = 1.0
    r: float = 0.0

    def __post_init__(self):
        if self.r == 0.0:
            check_husimi_eta(self.eta)
        else:
            check_squeezed_eta(self.eta, self.r)

    parity = None

    @property
    def label(self) -> str:
        return f"husimi(alpha={_fmt_amplitude(self.alpha)}, r={self.r:g})"

    def _complex(self, xprime, theta):
        a = complex(self.alpha)
        if self.r == 0.0:
            return _husimi_complex(xprime, theta, self.eta, a, a.conjugate())
        return _squeezed_husimi_complex(xprime, theta, self.eta, a, a.conjugate(), self.r)

    def __call__(self, xprime, theta):
        return np.pi * np.real(self._complex(xprime, theta)[0])

    def null(self, xprime, theta):
        return np.pi * np.real(self._complex(xprime, theta)[1])


@dataclass(frozen=True)
class MeanPhotonKernel:
    eta: float = 1.0

    def __post_init__(self):
        _check_eta_range(self.eta)

    parity = None
    label = "mean-photon"

    def __call__(self, xprime, theta):
        return kernel_mean_photon(xprime, self.eta) + 0.0 * np.asarray(theta, float)

    def null(self, xprime, theta):
        return None
