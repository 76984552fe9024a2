"""Fourier pricing of European Calls, Puts and Digitals on the Lewis contour.

Everything is reduced to the forward-normalised problem ``S0 = 1, r = 0`` with
log-strike ``k = log(K / (S0 e^{rT}))``.  For a contour ``Im z = gamma`` in
``(0, 1)`` the normalised Call is::

    C(k) = 1 - (1/2 pi) Int e^{(iu + 1 - gamma) k} Phi_T(u + i gamma) / (z (z - i)) du

(``gamma = 1/2`` gives the familiar ``u^2 + 1/4`` denominator) and the
distribution function used for Digitals is::

    Q(Y_T >= k) = (1/2 pi) Int i e^{i z k} Phi_T(z) / z du,   z = u + i gamma.

Both integrands are Hermitian in ``u`` so only the half line is integrated.

Quadrature
----------
The default rule integrates ``[0, U]`` with Gauss-Legendre panels on a
quadratically graded mesh and adds an analytic tail.  Anomalous models decay
only algebraically (``Phi ~ (T psi)^-beta`` for DRD), so the tail is not
negligible: beyond ``U`` the characteristic function is split into its
power-law branch (frequency ``k``) and the remainder (frequency ``k - mu T``,
``mu`` the driver drift), each fitted by ``c u^-p`` and integrated in closed
form through the generalised exponential integral ``E_p``.

``QuadratureConfig.coarse()`` is the coarse global rule: 50 Gauss-Legendre
nodes on ``[0, 200]`` (the mirrored rule on ``[-200, 200]``), no tail.  It is
off by about ``2e-3 S0`` and is kept only for comparison.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from functools import lru_cache

import numpy as np
from scipy import special as sc

from . import special
from .anomalous import AnomalousModel, char_function
from .levy import StripError

__all__ = [
    "QuadratureError",
    "MarketSetup",
    "OptionSpec",
    "QuadratureConfig",
    "SkewEstimate",
    "price_call",
    "price_put",
    "price_digital",
    "price_lewis",
    "call_prices",
    "digital_prices",
    "bs_price",
    "bs_vega",
    "bs_digital",
    "implied_vol",
    "skew",
    "surface",
    "write_surface_csv",
]

SQRT2PI = math.sqrt(2 * math.pi)


class QuadratureError(ArithmeticError):
    """The Fourier integral did not converge to the requested tolerance."""


@dataclass(frozen=True)
class MarketSetup:
    spot: float = 1.0
    rate: float = 0.0

    def __post_init__(self):
        if not self.spot > 0:
            raise ValueError("spot must be positive")
        if self.rate < 0:
            raise ValueError("rate must be non-negative")

    def forward(self, T: float) -> float:
        return self.spot * math.exp(self.rate * T)

    def discount(self, T: float) -> float:
        return math.exp(-self.rate * T)


@dataclass(frozen=True)
class OptionSpec:
    kind: str
    strike: float
    maturity: float

    def __post_init__(self):
        if self.kind not in ("call", "put", "digital"):
            raise ValueError(f"kind must be call, put or digital, got {self.kind!r}")
        if not self.strike > 0:
            raise ValueError("strike must be positive")
        if not self.maturity > 0:
            raise ValueError("maturity must be positive")


@dataclass(frozen=True)
class QuadratureConfig:
    """Lewis-integral discretisation.

    truncation
        End ``U`` of the integrated range ``[0, U]`` (``[-U, U]`` for the
        ``coarse`` rule).  ``None`` picks it from the decay of ``Phi``.
    nodes
        Gauss-Legendre nodes per panel.
    contour
        ``gamma = Im z`` of the Call contour.
    panels
        Minimum number of panels; more are added when the strikes oscillate
        faster than the panels can resolve.
    tail
        Add the analytic tail beyond ``U``.
    rule
        ``"graded"`` or ``"coarse"`` (one global panel on ``[0, U]``, no tail).
    digital_contour
        ``gamma`` used for the distribution-function inversion.
    """

    truncation: float | None = None
    nodes: int = 48
    contour: float = 0.5
    panels: int = 24
    tail: bool = True
    rule: str = "graded"
    digital_contour: float = 0.25

    def __post_init__(self):
        if self.truncation is not None and not self.truncation > 0:
            raise ValueError("truncation must be positive")
        if self.nodes < 1 or self.panels < 1:
            raise ValueError("nodes and panels must be at least 1")
        if self.rule not in ("graded", "coarse"):
            raise ValueError(f"unknown rule {self.rule!r}")
        for g in (self.contour, self.digital_contour):
            if not 0 < g < 1:
                raise ValueError("contours must lie in (0, 1)")

    @classmethod
    def coarse(cls) -> "QuadratureConfig":
        return cls(truncation=200.0, nodes=50, panels=1, tail=False, rule="coarse")

    @classmethod
    def fast(cls) -> "QuadratureConfig":
        """Cheaper rule for calibration loops (about 1e-6 relative)."""
        return cls(truncation=400.0, nodes=24, panels=10)

    def refined(self) -> "QuadratureConfig":
        return replace(self, nodes=2 * self.nodes, panels=2 * self.panels)


# ---------------------------------------------------------------------------
# generalised exponential integral

def _expm1c(x):
    small = np.abs(x) < 1e-5
    return np.where(small, x * (1 + x / 2 + x * x / 6), np.exp(np.where(small, 0, x)) - 1)


def _log1pc(x: complex) -> complex:
    if abs(x) < 1e-3:
        return x - x * x / 2 + x ** 3 / 3 - x ** 4 / 4
    return complex(np.log(1 + x))


_ZETA = sc.zeta(np.arange(2, 40))


def _lgamma1p(e: complex) -> complex:
    """``log Gamma(1 + e)`` without forming ``1 + e`` for small ``e``."""
    if abs(e) > 0.2:
        return complex(sc.loggamma(1 + e))
    k = np.arange(2, 40)
    return complex(-np.euler_gamma * e + np.sum((-e) ** k * _ZETA / k))


def _expint_series(p: complex, w: np.ndarray) -> np.ndarray:
    # E_p(w) = w^{p-1} Gamma(1-p) - sum_n (-w)^n / (n! (1 - p + n)); the pole
    # pair at n = p - 1 is combined analytically so integer p is harmless.
    m = int(round(p.real - 1))
    logw = np.log(w)
    out = np.zeros(w.shape, dtype=complex)
    term = np.ones(w.shape, dtype=complex)
    for n in range(60):
        if n > 0:
            term = term * (-w) / n
        if n != m:
            out -= term / (1 - p + n)
    if m >= 0:
        eps = 1 - p + m
        if abs(eps) < 1e-12:
            eps = 1e-12
        L = _lgamma1p(eps) - eps * logw - sum(_log1pc(-eps / j) for j in range(1, m + 1))
        out += (-w) ** m / math.factorial(m) * _expm1c(L) / eps
    else:
        out += np.exp((p - 1) * logw) * sc.gamma(1 - p)
    return out


def _expint_cf(p: complex, w: np.ndarray) -> np.ndarray:
    # modified Lentz evaluation of the continued fraction for E_p
    tiny = 1e-300
    b = w + p
    c = np.full(w.shape, 1 / tiny, dtype=complex)
    d = 1 / b
    h = d.copy()
    for i in range(1, 5000):
        an = -i * (p - 1 + i)
        b = b + 2
        d = 1 / (an * d + b)
        c = b + an / c
        delta = c * d
        h = h * delta
        if np.all(np.abs(delta - 1) < 1e-16):
            break
    return h * np.exp(-w)


def expint_p(p: complex, w) -> np.ndarray:
    """``E_p(w) = Int_1^inf e^{-w t} t^{-p} dt`` for ``Re w >= 0``."""
    w = np.atleast_1d(np.asarray(w, dtype=complex))
    out = np.empty(w.shape, dtype=complex)
    zero = w == 0
    if zero.any():
        if not p.real > 1:
            raise QuadratureError("tail integral diverges (decay exponent <= 1)")
        out[zero] = 1 / (p - 1)
    # the continued fraction converges fast once |w + p| is large
    big = ~zero & ((np.abs(w) >= 1) | (p.real > 20))
    if big.any():
        out[big] = _expint_cf(p, w[big])
    sm = ~zero & ~big
    if sm.any():
        out[sm] = _expint_series(p, w[sm])
    return out


# ---------------------------------------------------------------------------
# the integrals

@lru_cache(maxsize=64)
def _mesh(U: float, panels: int, nodes: int):
    edges = U * (np.arange(panels + 1) / panels) ** 2
    x, w = np.polynomial.legendre.leggauss(nodes)
    a, b = edges[:-1, None], edges[1:, None]
    u = (0.5 * (b - a) * x + 0.5 * (b + a)).ravel()
    wt = (0.5 * (b - a) * w).ravel()
    return u, wt


def _check_contour(model: AnomalousModel, gamma: float):
    lo, hi = model.levy.strip()
    if not lo < gamma < hi:
        raise StripError(f"contour Im z = {gamma} outside the strip ({lo}, {hi})")


def _auto_truncation(model: AnomalousModel, T: float, gamma: float) -> float:
    lev = model.levy
    U = 1500.0
    while U < 1e5:
        z = U + 1j * gamma
        re_now = float(np.real(lev.exponent(z) - 1j * lev.drift * z))
        re_next = float(np.real(lev.exponent(2 * z) - 2j * lev.drift * z))
        fast_decay = T * re_now > 45
        power_like = re_next < 1.3 * re_now
        if model.is_levy:
            ok = fast_decay or power_like
        else:
            w = abs(complex(lev.exponent(z))) * (T if model.kind == "drd" else T ** model.beta)
            ok = (fast_decay or power_like) and w > 40
        if ok:
            break
        U *= 2
    return U


def _split(model: AnomalousModel, z, T: float):
    """``(Phi, power-law branch)`` at ``z``; the branch is zero for Levy models."""
    phi = char_function(model, z, T)
    if model.is_levy:
        return phi, np.zeros_like(phi)
    psi = model.levy.exponent(z)
    if model.kind == "sl":
        alg = special.mittag_leffler_algebraic(model.beta, -psi * T ** model.beta)
    else:
        alg = special.kummer_1f1_algebraic(model.beta, 1.0, -T * psi)
    return phi, alg


def _fourier(model: AnomalousModel, T: float, k: np.ndarray, quad: QuadratureConfig, payoff: str) -> np.ndarray:
    """Half-line integral ``Int_0^inf G(u) du`` for every log-strike in ``k``.

    ``G = e^{iuk} c(k) Phi(z) rho(z)`` with ``rho = 1/(z(z-i))``, ``c = e^{(1-gamma)k}``
    for Calls and ``rho = i/z``, ``c = e^{-gamma k}`` for the distribution function.
    """
    gamma = quad.contour if payoff == "call" else quad.digital_contour
    _check_contour(model, gamma)
    if payoff == "call":
        rho = lambda z: 1.0 / (z * (z - 1j))
        ck = np.exp((1 - gamma) * k)
    else:
        rho = lambda z: 1j / z
        ck = np.exp(-gamma * k)

    if quad.rule == "coarse":
        # Gauss-Legendre on [0, U]; by Hermitian symmetry this is the
        # symmetric rule on [-U, U] with mirrored nodes
        U = quad.truncation or 200.0
        u, wt = special.gauss_legendre(quad.nodes, 0.0, U)
        z = u + 1j * gamma
        g = char_function(model, z, T) * rho(z) * wt
        return (np.exp(1j * np.outer(k, u)) @ g) * ck

    U = quad.truncation or _auto_truncation(model, T, gamma)
    mu = model.levy.drift
    omega = float(np.max(np.abs(k))) + abs(mu) * T
    # a panel of width W carries ~omega W / 2 radians per node pair
    panels = max(quad.panels, int(math.ceil(2 * U * omega / max(quad.nodes - 16, 8))))
    u, wt = _mesh(float(U), panels, quad.nodes)
    z = u + 1j * gamma
    g = char_function(model, z, T) * rho(z) * wt
    body = np.exp(1j * np.outer(k, u)) @ g
    total = body
    if quad.tail:
        total = total + _tail(model, T, k, U, gamma, rho, mu)
    return total * ck


def _tail(model, T, k, U, gamma, rho, mu):
    # log q(u) ~ log q(U) - p s - (c/2) s^2 with s = log(u/U); the curvature
    # term is integrated to first order through d^2 E_p / dp^2.
    r = 1.1
    ls = math.log(r)
    uu = U * r ** np.arange(3)
    z = uu + 1j * gamma
    phi, alg = _split(model, z, T)
    out = np.zeros(k.shape, dtype=complex)
    for comp, nu in ((alg, 0.0), (phi - alg, -mu * T)):
        q = comp * rho(z) * np.exp(-1j * nu * uu)
        if abs(q[0]) * U < 1e-17 or np.any(q == 0):
            continue
        d1, d2 = np.log(q[1] / q[0]), np.log(q[2] / q[1])
        c = complex(-(d2 - d1) / ls ** 2)
        p = complex(-(d1 + 0.5 * c * ls ** 2) / ls)
        w = -1j * (k + nu) * U
        e0 = expint_p(p, w)
        if abs(c) > 1e-14:
            h = 1e-3
            e2 = (expint_p(p + h, w) - 2 * e0 + expint_p(p - h, w)) / h ** 2
            e0 = e0 - 0.5 * c * e2
        out += q[0] * U * e0
    return out


def _norm_calls(model, T, k, quad):
    return 1.0 - _fourier(model, T, k, quad, "call").real / math.pi


def _norm_digitals(model, T, k, quad):
    return _fourier(model, T, k, quad, "digital").real / math.pi


def _verified(fn, model, T, k, quad, verify: bool, tol: float):
    out = fn(model, T, k, quad)
    if verify:
        fine = fn(model, T, k, quad.refined())
        gap = float(np.max(np.abs(fine - out)))
        if gap > tol:
            raise QuadratureError(f"panel refinement changed the result by {gap:.3g} (> {tol:.3g})")
    return out


def call_prices(model: AnomalousModel, strikes, T: float, mkt: MarketSetup = MarketSetup(),
                quad: QuadratureConfig = QuadratureConfig(), verify: bool = False, tol: float = 1e-7):
    """Call prices for a batch of strikes sharing one maturity (one CF evaluation)."""
    K = np.atleast_1d(np.asarray(strikes, dtype=float))
    if np.any(K <= 0) or not T > 0:
        raise ValueError("strikes and maturity must be positive")
    k = np.log(K / mkt.forward(T))
    return mkt.spot * _verified(_norm_calls, model, T, k, quad, verify, tol)


def digital_prices(model: AnomalousModel, strikes, T: float, mkt: MarketSetup = MarketSetup(),
                   quad: QuadratureConfig = QuadratureConfig(), verify: bool = False, tol: float = 1e-7):
    """Cash-or-nothing Digital prices ``e^{-rT} Q(S_T >= K)`` for a batch of strikes."""
    K = np.atleast_1d(np.asarray(strikes, dtype=float))
    if np.any(K <= 0) or not T > 0:
        raise ValueError("strikes and maturity must be positive")
    k = np.log(K / mkt.forward(T))
    return mkt.discount(T) * _verified(_norm_digitals, model, T, k, quad, verify, tol)


def price_call(model, opt: OptionSpec, mkt: MarketSetup = MarketSetup(), quad: QuadratureConfig = QuadratureConfig(),
               verify: bool = False) -> float:
    return float(call_prices(model, opt.strike, opt.maturity, mkt, quad, verify)[0])


def price_put(model, opt: OptionSpec, mkt: MarketSetup = MarketSetup(), quad: QuadratureConfig = QuadratureConfig(),
              verify: bool = False) -> float:
    c = price_call(model, opt, mkt, quad, verify)
    return c - mkt.spot + opt.strike * mkt.discount(opt.maturity)


def price_digital(model, opt: OptionSpec, mkt: MarketSetup = MarketSetup(), quad: QuadratureConfig = QuadratureConfig(),
                  verify: bool = False) -> float:
    return float(digital_prices(model, opt.strike, opt.maturity, mkt, quad, verify)[0])


def price_lewis(model: AnomalousModel, payoff_transform, T: float, mkt: MarketSetup = MarketSetup(),
                gamma: float = 0.5, truncation: float = 2000.0, panels: int = 64, nodes: int = 48) -> float:
    """Generic contour price ``e^{-rT}/(2 pi) Int f_hat(z) Phi_T(z) du`` on ``Im z = gamma``.

    ``payoff_transform(z)`` is the transform ``Int e^{izy} f(y) dy`` of the
    payoff written in ``y = log(S_T / F)``; ``gamma`` must lie where both the
    transform and ``Phi_T`` exist.  Payoffs are in units of the forward, so
    the price is ``e^{-rT} F`` times the normalised integral.  No tail
    correction is applied.
    """
    _check_contour(model, gamma)
    edges = truncation * np.linspace(-1, 1, panels + 1) ** 3
    x, w = np.polynomial.legendre.leggauss(nodes)
    a, b = edges[:-1, None], edges[1:, None]
    u = (0.5 * (b - a) * x + 0.5 * (b + a)).ravel()
    wt = (0.5 * (b - a) * w).ravel()
    z = u + 1j * gamma
    val = np.sum(wt * payoff_transform(z) * char_function(model, z, T)) / (2 * math.pi)
    return mkt.discount(T) * mkt.forward(T) * float(val.real)


# ---------------------------------------------------------------------------
# Black-Scholes

def _d1(K, T, sigma, mkt):
    return (math.log(mkt.forward(T) / K) + 0.5 * sigma * sigma * T) / (sigma * math.sqrt(T))


def bs_price(K: float, T: float, sigma: float, mkt: MarketSetup = MarketSetup(), kind: str = "call") -> float:
    """Black-Scholes price; ``sigma = 0`` gives the discounted intrinsic value."""
    F, D = mkt.forward(T), mkt.discount(T)
    if sigma <= 0:
        c = D * max(F - K, 0.0)
    else:
        d1 = _d1(K, T, sigma, mkt)
        d2 = d1 - sigma * math.sqrt(T)
        c = D * (F * sc.ndtr(d1) - K * sc.ndtr(d2))
    if kind == "call":
        return c
    if kind == "put":
        return c - mkt.spot + K * D
    raise ValueError(f"unknown kind {kind!r}")


def bs_vega(K: float, T: float, sigma: float, mkt: MarketSetup = MarketSetup()) -> float:
    if sigma <= 0:
        return 0.0
    d1 = _d1(K, T, sigma, mkt)
    return mkt.spot * math.sqrt(T) * math.exp(-0.5 * d1 * d1) / SQRT2PI


def bs_digital(K: float, T: float, sigma: float, mkt: MarketSetup = MarketSetup()) -> float:
    d2 = _d1(K, T, sigma, mkt) - sigma * math.sqrt(T)
    return mkt.discount(T) * float(sc.ndtr(d2))


def implied_vol(price: float, opt: OptionSpec, mkt: MarketSetup = MarketSetup(), tol: float = 1e-10) -> float:
    """Black-Scholes volatility reproducing ``price`` (Call or Put).

    Vega-Newton steps inside a bisection bracket that starts at ``[1e-8, 5]``
    and is widened geometrically when needed.
    """
    K, T = opt.strike, opt.maturity
    if opt.kind == "put":
        price = price + mkt.spot - K * mkt.discount(T)
    elif opt.kind != "call":
        raise ValueError("implied_vol needs a call or put")
    lower = max(0.0, mkt.spot - K * mkt.discount(T))
    eps = tol * mkt.spot
    if price < lower - eps or price > mkt.spot + eps:
        raise ValueError(f"price {price} outside the no-arbitrage bounds [{lower}, {mkt.spot}]")
    if price <= lower + eps:
        return 0.0
    if price >= mkt.spot - eps * 1e-3:
        raise ValueError("price at the upper bound has no finite implied volatility")
    lo, hi = 1e-8, 5.0
    while bs_price(K, T, hi, mkt) < price:
        lo, hi = hi, 2 * hi
        if hi > 1e4:
            raise ValueError("implied volatility bracket could not be found")
    sig = 0.5 * (lo + hi)
    for _ in range(200):
        diff = bs_price(K, T, sig, mkt) - price
        if abs(diff) <= eps:
            return sig
        if diff > 0:
            hi = sig
        else:
            lo = sig
        v = bs_vega(K, T, sig, mkt)
        step = sig - diff / v if v > 0 else None
        sig = step if step is not None and lo < step < hi else 0.5 * (lo + hi)
        if hi - lo < 1e-15 * hi:
            return sig
    return sig


# ---------------------------------------------------------------------------
# skew and surfaces

@dataclass(frozen=True)
class SkewEstimate:
    """``dsigma/dK`` by the chain rule and by finite differences of implied vols."""

    value: float
    finite_difference: float
    sigma: float
    digital: float

    @property
    def relative_gap(self) -> float:
        return abs(self.value - self.finite_difference) / max(abs(self.value), 1e-300)


def skew(model, K: float, T: float, mkt: MarketSetup = MarketSetup(), quad: QuadratureConfig = QuadratureConfig(),
         rel_step: float = 1e-4, tol: float | None = None) -> SkewEstimate:
    """Implied-volatility skew ``dsigma/dK``.

    The chain-rule value ``(N(d2) - Q(S_T >= K)) / (K n(d2) sqrt T)`` is
    returned together with a central difference of implied vols.  With
    ``tol`` set, a relative gap above it raises :class:`QuadratureError`.
    """
    h = rel_step * K
    strikes = np.array([K - h, K, K + h])
    calls = call_prices(model, strikes, T, mkt, quad)
    vols = [implied_vol(float(c), OptionSpec("call", s, T), mkt, tol=1e-14) for c, s in zip(calls, strikes)]
    fd = (vols[2] - vols[0]) / (2 * h)
    sig = vols[1]
    q = float(digital_prices(model, K, T, mkt, quad)[0]) / mkt.discount(T)
    z = sig * math.sqrt(T)
    d2 = _d1(K, T, sig, mkt) - z
    n2 = math.exp(-0.5 * d2 * d2) / SQRT2PI
    value = (float(sc.ndtr(d2)) - q) / (K * n2 * math.sqrt(T))
    est = SkewEstimate(value, fd, sig, q)
    if tol is not None and est.relative_gap > tol:
        raise QuadratureError(f"skew estimates disagree: {value} vs {fd}")
    return est


def _threads(threads: int | None) -> int:
    if threads is None:
        threads = int(os.environ.get("ANOMDIFF_THREADS", "1"))
    return max(1, threads)


def surface(model, strikes, maturities, mkt: MarketSetup = MarketSetup(), quad: QuadratureConfig = QuadratureConfig(),
            threads: int | None = None):
    """Call prices and implied vols on a grid; rows are maturities.

    Returns ``(prices, vols)``, each of shape ``(len(maturities), len(strikes))``.
    Points whose price has no implied volatility hold ``nan``.
    """
    K = np.asarray(strikes, dtype=float)
    Ts = np.asarray(maturities, dtype=float)

    def row(T):
        c = call_prices(model, K, float(T), mkt, quad)
        iv = np.empty_like(c)
        for j, (ci, ki) in enumerate(zip(c, K)):
            try:
                iv[j] = implied_vol(float(ci), OptionSpec("call", float(ki), float(T)), mkt)
            except ValueError:
                iv[j] = np.nan
        return c, iv

    n = _threads(threads)
    if n > 1:
        with ThreadPoolExecutor(n) as ex:
            rows = list(ex.map(row, Ts))
    else:
        rows = [row(T) for T in Ts]
    prices = np.array([r[0] for r in rows])
    vols = np.array([r[1] for r in rows])
    return prices, vols


def write_surface_csv(path, strikes, maturities, prices, vols):
    """CSV with header ``K,T,price,iv``, maturity-major then ascending strike."""
    order = np.argsort(strikes)
    with open(path, "w") as fh:
        fh.write("K,T,price,iv\n")
        for i in np.argsort(maturities, kind="stable"):
            for j in order:
                fh.write(f"{float(strikes[j])!r},{float(maturities[i])!r},{prices[i, j]:.17g},{vols[i, j]:.17g}\n")
