"""Special functions behind the SL and DRD characteristic functions.

Everything here accepts complex arrays and broadcasts like numpy ufuncs.
Two kernels matter for pricing:

* the one-parameter Mittag-Leffler function ``E_beta(z)`` (SL clock),
* Kummer's confluent hypergeometric function ``1F1(a, b; z)`` (DRD clock).

Both are evaluated by a Taylor series accumulated in extended precision
(``np.longdouble``) on a disc where the cancellation loss is bounded, and by
their algebraic large-argument expansions outside of it. Along the Lewis
contour the arguments satisfy ``Re(-z) > 0``, so the expansions never have to
cross a Stokes line there.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import special as sc

__all__ = [
    "ConvergenceError",
    "EvalPolicy",
    "DEFAULT_POLICY",
    "mittag_leffler",
    "kummer_1f1",
    "mittag_leffler_algebraic",
    "kummer_1f1_algebraic",
    "mittag_leffler_three",
    "lambert_w0",
    "reciprocal_gamma",
    "gauss_legendre",
]


class ConvergenceError(ArithmeticError):
    """A series ran out of terms before meeting the requested tolerance."""


@dataclass(frozen=True)
class EvalPolicy:
    """Regime selection and accuracy controls for the series evaluators.

    ``series_radius`` is the switch point on ``|z|`` between the Taylor series
    and the large-argument expansion. When left as ``None`` it adapts to the
    order: ``|z| <= scaled_radius ** beta`` for Mittag-Leffler (the Taylor
    terms peak near ``exp(|z|**(1/beta))``) and ``|z| <= scaled_radius`` for
    Kummer's function.

    With the default radius the two regimes meet where the Taylor rounding
    error (extended precision times ``exp(|z|**(1/beta))``) equals the
    truncation error of the expansion (about ``exp(-|z|**(1/beta))``); the
    worst case is a few times ``1e-10``, which is what ``abs_tol`` defaults to
    promising.
    """

    series_radius: float | None = None
    asymptotic_terms: int = 200
    abs_tol: float = 1e-9
    max_terms: int = 4000
    scaled_radius: float = 20.0

    def __post_init__(self):
        if self.series_radius is not None and self.series_radius <= 0:
            raise ValueError("series_radius must be positive")
        if self.abs_tol <= 0:
            raise ValueError("abs_tol must be positive")
        if self.asymptotic_terms < 1:
            raise ValueError("asymptotic_terms must be >= 1")
        if self.max_terms < self.asymptotic_terms:
            raise ValueError("max_terms must be >= asymptotic_terms")
        if self.scaled_radius <= 0:
            raise ValueError("scaled_radius must be positive")

    def ml_radius(self, beta: float) -> float:
        if self.series_radius is not None:
            return self.series_radius
        return self.scaled_radius ** beta

    def kummer_radius(self) -> float:
        if self.series_radius is not None:
            return self.series_radius
        return self.scaled_radius


DEFAULT_POLICY = EvalPolicy()

_LD = np.longdouble
_CLD = np.clongdouble
_LD_EPS = float(np.finfo(np.longdouble).eps)


_PI_LD = _LD("3.141592653589793238462643383279502884")
_HALF_LOG_2PI = np.log(2 * _PI_LD) / 2
# B_{2n} / (2n (2n - 1)) for the Stirling series
_STIRLING = [
    _LD(num) / _LD(den)
    for num, den in [
        (1, 12), (-1, 360), (1, 1260), (-1, 1680), (1, 1188),
        (-691, 360360), (1, 156), (-3617, 122400),
    ]
]


def _lgamma_ld(x: np.ndarray) -> np.ndarray:
    """log Gamma(x) for x > 0 in extended precision (shift to x >= 20, then Stirling)."""
    y = np.array(x, dtype=_LD, copy=True)
    shift = np.zeros_like(y)
    while True:
        low = y < 20
        if not low.any():
            break
        shift[low] += np.log(y[low])
        y[low] += 1
    inv = 1 / y
    inv2 = inv * inv
    series = np.zeros_like(y)
    for c in reversed(_STIRLING):
        series = series * inv2 + c
    return (y - _LD(0.5)) * np.log(y) - y + _HALF_LOG_2PI + series * inv - shift


def _rgamma_ld(x: np.ndarray) -> np.ndarray:
    return np.exp(-_lgamma_ld(x))


@lru_cache(maxsize=512)
def _ml_taylor_coeffs(beta: float, n: int) -> np.ndarray:
    """1/Gamma(beta*k + 1), k < n, in extended precision."""
    return _rgamma_ld(_LD(beta) * np.arange(n, dtype=_LD) + 1)


@lru_cache(maxsize=512)
def _prabhakar_coeffs(a: float, b: float, c: float, n: int) -> np.ndarray:
    """(c)_k / (k! Gamma(a k + b)), k < n, in extended precision."""
    k = np.arange(n, dtype=_LD)
    ratio = np.ones(n, dtype=_LD)
    ratio[1:] = (_LD(c) + k[:-1]) / (k[:-1] + 1)
    return np.cumprod(ratio) * _rgamma_ld(_LD(a) * k + _LD(b))


@lru_cache(maxsize=512)
def _kummer_coeffs(a: float, b: float, n: int) -> np.ndarray:
    """(a)_k / ((b)_k k!), k < n, in extended precision."""
    k = np.arange(n - 1, dtype=_LD)
    ratio = np.ones(n, dtype=_LD)
    ratio[1:] = (_LD(a) + k) / ((_LD(b) + k) * (k + 1))
    return np.cumprod(ratio)


def _taylor(coeffs_for, z: np.ndarray, tol: float, max_terms: int) -> np.ndarray:
    """Sum ``sum_k c_k z^k`` in extended precision.

    ``coeffs_for(n)`` returns the first ``n`` coefficients. The term table is
    built by a cumulative product in ``np.clongdouble`` and reduced with
    numpy's pairwise summation, so rounding grows like ``log n`` rather than
    ``n``. The table is doubled until the trailing terms are negligible at
    the working precision for every entry.
    """
    if z.size == 0:
        return z.astype(complex)
    zl = z.astype(_CLD).reshape(-1, 1)
    n = 32
    while True:
        c = coeffs_for(n)
        powers = np.empty((zl.shape[0], n), dtype=_CLD)
        powers[:, 0] = 1
        powers[:, 1:] = zl
        np.cumprod(powers, axis=1, out=powers)
        terms = powers * c
        s = terms.sum(axis=1)
        tail = np.abs(terms[:, -4:]).max(axis=1)
        if np.all(tail <= _LD_EPS * np.maximum(np.abs(s), _LD(tol))):
            return s.astype(complex).reshape(z.shape)
        if n >= max_terms:
            raise ConvergenceError(f"Taylor series did not converge within {max_terms} terms")
        n = min(2 * n, max_terms)


def _asymptotic_sum(term_ratio, first, tol: float, max_terms: int) -> np.ndarray:
    """Sum an asymptotic series up to its smallest term (optimal truncation).

    ``term_ratio(s)`` gives t_{s+1}/t_s (array); ``first`` is t_0.
    """
    total = first.copy()
    term = first.copy()
    active = np.ones(first.shape, dtype=bool)
    prev_mag = np.abs(first)
    for s in range(max_terms):
        if not active.any():
            break
        nxt = term * term_ratio(s)
        mag = np.abs(nxt)
        # stop once terms start growing or become negligible
        grow = mag >= prev_mag
        tiny = mag <= np.minimum(tol * 1e-4, 1e-17 * np.abs(total))
        upd = active & ~grow
        total = np.where(upd, total + nxt, total)
        term = np.where(upd, nxt, term)
        prev_mag = np.where(upd, mag, prev_mag)
        active = upd & ~tiny
    return total


def mittag_leffler(beta: float, z, policy: EvalPolicy = DEFAULT_POLICY):
    """One-parameter Mittag-Leffler function ``E_beta(z) = sum z^k / Gamma(beta k + 1)``.

    Parameters
    ----------
    beta : float
        Order, ``0 < beta <= 1``.
    z : complex or array_like
        Argument(s).
    policy : EvalPolicy
        Regime switch and tolerances.

    Returns
    -------
    complex or ndarray
        ``E_beta(z)`` with the shape of ``z``.

    Notes
    -----
    For ``|z|`` beyond the series radius::

        E_beta(z) = [|arg z| < beta*pi] exp(z**(1/beta)) / beta
                    - sum_{k>=1} z**(-k) / Gamma(1 - beta k)

    The residue term is exponentially small near ``|arg z| = beta*pi``, so the
    hard switch costs at most ``exp(-|z|**(1/beta))``.
    """
    beta = float(beta)
    if not 0.0 < beta <= 1.0:
        raise ValueError(f"beta must lie in (0, 1], got {beta}")
    z = np.asarray(z, dtype=complex)
    scalar = z.ndim == 0
    z = np.atleast_1d(z)
    if beta == 1.0:
        out = np.exp(z)
        return out[0] if scalar else out

    out = np.empty(z.shape, dtype=complex)
    az = np.abs(z)
    inner = az <= policy.ml_radius(beta)
    if inner.any():
        out[inner] = _taylor(
            lambda n: _ml_taylor_coeffs(beta, n), z[inner], policy.abs_tol, policy.max_terms
        )
    outer = ~inner
    if outer.any():
        zo = z[outer]
        total = _ml_algebraic(beta, zo, policy)
        resid = np.abs(np.angle(zo)) < beta * np.pi
        if resid.any():
            zr = zo[resid]
            total[resid] += np.exp(zr ** (1.0 / beta)) / beta
        out[outer] = total
    return out[0] if scalar else out


def _ml_algebraic(beta: float, zo: np.ndarray, policy: EvalPolicy) -> np.ndarray:
    zinv = 1.0 / zo
    log_az = np.log(np.abs(zo))
    # t_k = -z^{-k} / Gamma(1 - beta k). The coefficients oscillate and
    # vanish when beta*k is an integer, so truncation is decided on the
    # envelope |1/Gamma(1 - beta k)| <= Gamma(beta k) / pi instead.
    total = np.zeros(zo.shape, dtype=complex)
    p = np.ones(zo.shape, dtype=complex)
    prev = np.full(zo.shape, np.inf)
    active = np.ones(zo.shape, dtype=bool)
    log_tol = np.log(policy.abs_tol * 1e-4)
    for k in range(1, policy.asymptotic_terms + 1):
        p = p * zinv
        env = sc.gammaln(beta * k) - np.log(np.pi) - k * log_az
        upd = active & (env <= prev)
        total = np.where(upd, total - sc.rgamma(1.0 - beta * k) * p, total)
        prev = np.where(upd, env, prev)
        active = upd & (env > log_tol)
        if not active.any():
            break
    return total


def mittag_leffler_algebraic(beta: float, z, policy: EvalPolicy = DEFAULT_POLICY):
    """Power-law branch ``-sum_{k>=1} z^-k / Gamma(1 - beta k)`` of ``E_beta(z)``.

    Meaningful for large ``|z|`` only, where ``E_beta`` is this branch plus an
    exponential residue term. Pricing uses it to split tails by frequency.
    """
    z = np.asarray(z, dtype=complex)
    if beta == 1.0:
        return np.zeros(z.shape, dtype=complex)
    out = _ml_algebraic(float(beta), np.atleast_1d(z), policy)
    return out[0] if z.ndim == 0 else out


def _kummer_asymptotic(a: float, b: float, z: np.ndarray, policy: EvalPolicy, exp_branch: bool = True) -> np.ndarray:
    # 1F1 = Gamma(b) [ (-z)^{-a}/Gamma(b-a) 2F0(a, a-b+1; -1/z)
    #                 + e^z z^{a-b}/Gamma(a) 2F0(b-a, 1-a; 1/z) ]
    out = np.zeros(z.shape, dtype=complex)
    rb_a = sc.rgamma(b - a)
    if rb_a != 0.0:
        lead = (-z) ** (-a) * rb_a
        w = -1.0 / z
        out += _asymptotic_sum(
            lambda s: (a + s) * (a - b + 1 + s) / (s + 1) * w,
            lead, policy.abs_tol, policy.asymptotic_terms,
        )
    ra = sc.rgamma(a) if exp_branch else 0.0
    if ra != 0.0:
        with np.errstate(over="raise"):
            try:
                lead = np.exp(z) * z ** (a - b) * ra
            except FloatingPointError as exc:
                raise OverflowError("1F1 argument exceeds the representable range") from exc
        w = 1.0 / z
        out += _asymptotic_sum(
            lambda s: (b - a + s) * (1 - a + s) / (s + 1) * w,
            lead, policy.abs_tol, policy.asymptotic_terms,
        )
    return out * sc.gamma(b)


def kummer_1f1(a: float, b: float, z, policy: EvalPolicy = DEFAULT_POLICY):
    """Confluent hypergeometric function ``1F1(a, b; z)``.

    Negative real parts are routed through Kummer's transformation
    ``1F1(a, b; z) = e^z 1F1(b - a, b; -z)`` so the Taylor terms do not
    alternate along the negative axis.
    """
    a = float(a)
    b = float(b)
    if b <= 0 and b == np.floor(b):
        raise ValueError("b must not be a non-positive integer")
    z = np.asarray(z, dtype=complex)
    scalar = z.ndim == 0
    z = np.atleast_1d(z)
    if np.any(z.real > 700.0):
        raise OverflowError("1F1 argument exceeds the representable range")
    out = np.empty(z.shape, dtype=complex)
    inner = np.abs(z) <= policy.kummer_radius()
    if a == b:
        out = np.exp(z)
        return out[0] if scalar else out
    neg = inner & (z.real < 0)
    pos = inner & ~neg
    if pos.any():
        out[pos] = _taylor(lambda n: _kummer_coeffs(a, b, n), z[pos], policy.abs_tol, policy.max_terms)
    if neg.any():
        zn = z[neg]
        out[neg] = np.exp(zn) * _taylor(
            lambda n: _kummer_coeffs(b - a, b, n), -zn, policy.abs_tol, policy.max_terms
        )
    outer = ~inner
    if outer.any():
        out[outer] = _kummer_asymptotic(a, b, z[outer], policy)
    return out[0] if scalar else out


def kummer_1f1_algebraic(a: float, b: float, z, policy: EvalPolicy = DEFAULT_POLICY):
    """Power-law branch ``Gamma(b) (-z)^-a / Gamma(b - a) 2F0(a, a-b+1; -1/z)`` of ``1F1``."""
    z = np.asarray(z, dtype=complex)
    out = _kummer_asymptotic(float(a), float(b), np.atleast_1d(z), policy, exp_branch=False)
    return out[0] if z.ndim == 0 else out


def mittag_leffler_three(a: float, b: float, c: float, z, policy: EvalPolicy = DEFAULT_POLICY):
    """Three-parameter (Prabhakar) Mittag-Leffler function.

    ``E_{a,b,c}(z) = sum_k (c)_k z^k / (k! Gamma(a k + b))``

    ``E_{a,1,1}`` is ``E_a`` and ``E_{1,1,c}`` is ``1F1(c, 1; .)``; both are
    delegated to their dedicated evaluators. Other parameter triples are
    summed by the Taylor series only, inside the policy's series radius.
    """
    a, b, c = float(a), float(b), float(c)
    if a <= 0 or b <= 0 or c <= 0:
        raise ValueError("a, b, c must be positive")
    if b == 1.0 and c == 1.0 and a <= 1.0:
        return mittag_leffler(a, z, policy)
    if a == 1.0 and b == 1.0:
        return kummer_1f1(c, 1.0, z, policy)
    z = np.asarray(z, dtype=complex)
    scalar = z.ndim == 0
    z = np.atleast_1d(z)
    radius = policy.series_radius if policy.series_radius is not None else policy.scaled_radius ** min(a, 1.0)
    if np.any(np.abs(z) > radius):
        raise ConvergenceError(
            "general three-parameter Mittag-Leffler is only summed inside the series radius"
        )
    out = _taylor(lambda n: _prabhakar_coeffs(a, b, c, n), z, policy.abs_tol, policy.max_terms)
    return out[0] if scalar else out


def lambert_w0(x: float) -> float:
    """Principal branch of the Lambert W function on ``[-1/e, inf)``."""
    x = float(x)
    if x < -np.exp(-1.0) - 1e-15:
        raise ValueError(f"lambert_w0 is real only for x >= -1/e, got {x}")
    x = max(x, -np.exp(-1.0))
    return float(sc.lambertw(x, 0).real)


def reciprocal_gamma(x):
    """``1/Gamma(x)``; exactly zero at the poles 0, -1, -2, ..."""
    return sc.rgamma(x)


def gauss_legendre(n: int, a: float, b: float) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes and weights mapped to ``[a, b]``."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if not a < b:
        raise ValueError("need a < b")
    x, w = np.polynomial.legendre.leggauss(n)
    half = 0.5 * (b - a)
    return half * x + 0.5 * (a + b), half * w
