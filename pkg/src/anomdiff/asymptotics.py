"""Large- and small-maturity expansions for SL and DRD prices, implied vols and skews.

Everything here works under the normalisation ``S0 = 1, r = 0``; strikes are
in those units (``K`` is moneyness against spot).

Long maturities.  Along the Lewis line ``z = u + i/2`` the kernels behave like

* DRD: ``1F1(beta, 1; -T psi) ~ (T psi)^-beta / Gamma(1-beta) + e^{-T psi} (T psi)^{beta-1} / Gamma(beta)``
* SL:  ``E_beta(-psi T^beta) ~ T^-beta / (Gamma(1-beta) psi)``

so call prices approach 1 like ``T^-beta`` with the constants

    C1 = (1/2pi) int e^{(iu+1/2) log K} / ((u^2 + 1/4) psi(u + i/2)^beta) du     (DRD)
    C2 = (1/2pi) int e^{(iu+1/2) log K} / ((u^2 + 1/4) psi(u + i/2)) du          (SL)

plus, for DRD, a saddle-point term ``c_beta e^{-T psi(i/2)} / (Gamma(beta) T^{3/2-beta})``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate
from scipy import special as sc

from .anomalous import AnomalousModel
from .pricing import (
    MarketSetup,
    OptionSpec,
    QuadratureConfig,
    call_prices,
    digital_prices,
    implied_vol,
)

__all__ = [
    "ExpansionResult",
    "LongTermVol",
    "expansion_constant",
    "saddle_constant",
    "call_expansion_drd",
    "call_expansion_sl",
    "iv_longterm",
    "skew_longterm",
    "skew_shortterm_atm",
    "digital_shorttime_factor",
]

_UNIT = MarketSetup(1.0, 0.0)


@dataclass(frozen=True)
class ExpansionResult:
    """``value = 1 + leading_term + correction``."""

    value: float
    leading_term: float
    correction: float
    regime: str


@dataclass(frozen=True)
class LongTermVol:
    lambert: float
    log_form: float
    constant: float
    M: float


def _check_compensated(model: AnomalousModel):
    if abs(model.levy.exponent(1j, check=False)) > 1e-10:
        raise ValueError("the driver must be martingale-compensated (psi(i) = 0)")


def _lewis_line_integral(g, logK: float) -> float:
    """``(1/2pi) int_R e^{(iu+1/2) logK} g(u) du`` for ``g(-u) = conj g(u)``."""
    re = lambda u: g(u).real
    im = lambda u: g(u).imag
    if logK == 0.0:
        val = integrate.quad(re, 0.0, np.inf, limit=400, epsabs=1e-13, epsrel=1e-11)[0]
    else:
        w = abs(logK)
        c = integrate.quad(re, 0.0, np.inf, weight="cos", wvar=w, limlst=200)[0]
        s = integrate.quad(im, 0.0, np.inf, weight="sin", wvar=w, limlst=200)[0]
        val = c - math.copysign(1.0, logK) * s
    return math.exp(0.5 * logK) * val / math.pi


def expansion_constant(model: AnomalousModel, K: float = 1.0, power: float | None = None) -> float:
    """``C1`` (DRD, ``power = beta``) or ``C2`` (SL, ``power = 1``)."""
    if K <= 0:
        raise ValueError("K must be positive")
    if power is None:
        power = model.beta if model.kind == "drd" else 1.0
    psi = model.levy.exponent

    def g(u):
        z = complex(u, 0.5)
        return 1.0 / ((u * u + 0.25) * complex(psi(z, check=False)) ** power)

    return _lewis_line_integral(g, math.log(K))


def saddle_constant(model: AnomalousModel, K: float = 1.0) -> float:
    """``c_beta = 4 sqrt(K) / (psi(i/2)^(1-beta) sqrt(2 pi psi''(i/2)))``."""
    p0 = float(np.real(model.levy.exponent(0.5j, check=False)))
    p2 = float(np.real(model.levy.exponent_d2(0.5j)))
    return 4.0 * math.sqrt(K) / (p0 ** (1.0 - model.beta) * math.sqrt(2.0 * math.pi * p2))


def call_expansion_drd(model: AnomalousModel, K: float, T: float) -> ExpansionResult:
    if model.kind != "drd" and not model.is_levy:
        raise ValueError("call_expansion_drd needs a DRD (or beta = 1) model")
    _check_compensated(model)
    b = model.beta
    lead = 0.0
    if b != 1.0:
        lead = -expansion_constant(model, K, b) / (sc.gamma(1.0 - b) * T ** b)
    p0 = float(np.real(model.levy.exponent(0.5j, check=False)))
    corr = -saddle_constant(model, K) / sc.gamma(b) * math.exp(-T * p0) / T ** (1.5 - b)
    return ExpansionResult(1.0 + lead + corr, lead, corr, "large_T")


def call_expansion_sl(model: AnomalousModel, K: float, T: float) -> ExpansionResult:
    # breaks down as beta -> 1 (Gamma(1 - beta) blows up and the exponential part is lost)
    if model.kind != "sl" or model.beta >= 1.0:
        raise ValueError("call_expansion_sl needs an SL model with beta < 1")
    _check_compensated(model)
    b = model.beta
    lead = -expansion_constant(model, K, 1.0) / (sc.gamma(1.0 - b) * T ** b)
    return ExpansionResult(1.0 + lead, lead, 0.0, "large_T")


def iv_longterm(model: AnomalousModel, K: float, T: float, constant: float | None = None) -> LongTermVol:
    """Leading-order implied vol for large ``T``.

    Matching ``1 - C_BS ~ 4 sqrt(K) e^{-sigma^2 T/8} / (sigma sqrt(2 pi T))`` with
    ``C T^-beta / Gamma(1-beta)`` gives ``z e^z = M^2 T^(2 beta)`` for ``z = sigma^2 T / 4``.
    """
    if not 0.0 < model.beta < 1.0 or model.kind not in ("sl", "drd"):
        raise ValueError("iv_longterm needs an SL or DRD model with beta < 1")
    b = model.beta
    C = expansion_constant(model, K) if constant is None else constant
    if C <= 0:
        raise ValueError("expansion constant must be positive")
    M = math.sqrt(2.0 * K) * sc.gamma(1.0 - b) / (C * math.sqrt(math.pi))
    w = M * M * T ** (2.0 * b)
    z = float(np.real(sc.lambertw(w, 0)))
    lam = 2.0 * math.sqrt(z / T)
    lg = math.log(w)
    log_form = 2.0 * math.sqrt(lg / T) if lg > 0 else math.nan
    return LongTermVol(lam, log_form, C, M)


def skew_longterm(model: AnomalousModel, K: float, T: float, form: str = "corrected",
                  quad: QuadratureConfig = QuadratureConfig(), sigma: float | None = None) -> float:
    """Large-``T`` skew ``S(K, T)`` with ``sigma`` from :func:`iv_longterm` unless given.

    ``form="corrected"`` expands ``N(d2) / (sqrt T n(d1))``, the exact chain-rule
    numerator; ``form="printed"`` expands ``N(-d1)`` instead.  They agree at ``K = 1``.
    """
    if form not in ("corrected", "printed"):
        raise ValueError("form must be 'corrected' or 'printed'")
    if sigma is None:
        sigma = iv_longterm(model, K, T).lambert
    z = sigma * math.sqrt(T)
    lk = math.log(K)
    if form == "corrected":
        first = 2.0 / (K * T * sigma) * (1.0 - (2.0 * lk + 4.0) / z ** 2)
    else:
        first = 2.0 / (T * sigma) * (1.0 + (2.0 * lk - 4.0) / z ** 2)
    q = float(digital_prices(model, [K], T, _UNIT, quad)[0])
    d1 = -lk / z + 0.5 * z
    return first - q / (math.sqrt(T) * math.exp(-0.5 * d1 * d1) / math.sqrt(2.0 * math.pi))


def skew_shortterm_atm(model: AnomalousModel, T: float, quad: QuadratureConfig = QuadratureConfig()) -> float:
    """Small-``T`` ATM skew ``sqrt(2 pi / T) [1/2 - Q(S_T >= 1) - sigma sqrt(T) / (2 sqrt(2 pi))]``."""
    c = float(call_prices(model, [1.0], T, _UNIT, quad)[0])
    sigma = implied_vol(c, OptionSpec("call", 1.0, T), _UNIT)
    q = float(digital_prices(model, [1.0], T, _UNIT, quad)[0])
    r = math.sqrt(2.0 * math.pi)
    return r / math.sqrt(T) * (0.5 - q - sigma * math.sqrt(T) / (2.0 * r))


def digital_shorttime_factor(beta: float, eps: float) -> float:
    """``E[B^eps]`` for ``B ~ Beta(beta, 1 - beta)``: ``Gamma(beta+eps) / (Gamma(beta) Gamma(1+eps))``."""
    if not 0.0 < beta <= 1.0:
        raise ValueError("beta must lie in (0, 1]")
    if not 0.0 <= eps <= 0.5:
        raise ValueError("eps must lie in [0, 1/2]")
    return math.exp(sc.gammaln(beta + eps) - sc.gammaln(beta) - sc.gammaln(1.0 + eps))
