"""SL and DRD time-changed Levy models.

Both models run a Levy driver ``X`` on a random clock:

* ``sl``  - the inverse stable subordinator ``H_t``; ``Phi_t(z) = E_beta(-psi(z) t^beta)``
* ``drd`` - the last renewal epoch ``L^H_t``, distributed as ``t * Beta(beta, 1 - beta)``;
  ``Phi_t(z) = 1F1(beta, 1; -t psi(z))``
* ``levy`` - the deterministic clock, ``Phi_t(z) = exp(-t psi(z))``

Characteristic functions follow the convention of :mod:`anomdiff.levy`,
``Phi_t(z) = E[exp(-i z Y_t)]``.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np
from scipy import special as sc

from . import special
from .levy import Cumulants, LevyModel, levy_from_dict

__all__ = [
    "KINDS",
    "AnomalousModel",
    "TimeChangeCumulants",
    "YCumulants",
    "char_function",
    "flt_value",
    "timechanged_cumulants",
    "beta_clock_cumulants",
    "sl_clock_cumulants",
    "drd_cumulants",
    "drd_moment_limits",
    "model_from_dict",
    "model_from_json",
]

KINDS = ("levy", "sl", "drd")


@dataclass(frozen=True)
class AnomalousModel:
    levy: LevyModel
    beta: float = 1.0
    kind: str = "drd"

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}, got {self.kind!r}")
        if not 0.0 < self.beta <= 1.0:
            raise ValueError("beta must lie in (0, 1]")
        if self.kind == "levy" and self.beta != 1.0:
            raise ValueError("kind 'levy' requires beta = 1")

    @property
    def is_levy(self) -> bool:
        return self.kind == "levy" or self.beta == 1.0

    def char_function(self, z, t, policy=special.DEFAULT_POLICY):
        return char_function(self, z, t, policy)

    def cumulants(self, t: float) -> "YCumulants":
        k = self.levy.cumulants()
        if self.is_levy:
            return timechanged_cumulants(k, TimeChangeCumulants(t, 0.0, 0.0, 0.0))
        if self.kind == "drd":
            return drd_cumulants(self, t)
        return timechanged_cumulants(k, sl_clock_cumulants(self.beta, t))

    def to_dict(self) -> dict:
        return {"kind": self.kind, "beta": self.beta, "levy": self.levy.to_dict()}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


@dataclass(frozen=True)
class TimeChangeCumulants:
    """Cumulants ``tau_1..tau_4`` of the clock at a fixed horizon."""

    t1: float
    t2: float
    t3: float
    t4: float

    def __iter__(self):
        return iter((self.t1, self.t2, self.t3, self.t4))


@dataclass(frozen=True)
class YCumulants:
    k1Y: float
    k2Y: float
    k3Y: float
    k4Y: float
    skew: float
    kurt: float


def char_function(model: AnomalousModel, z, t, policy=special.DEFAULT_POLICY):
    """``Phi_t(z) = E[exp(-i z Y_t)]``; arrays in ``z`` and ``t`` broadcast."""
    z = np.asarray(z, dtype=complex)
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("t must be non-negative")
    psi = model.levy.exponent(z)
    z, t, psi = np.broadcast_arrays(z, t, psi)
    out = np.ones(z.shape, dtype=complex)
    live = t > 0
    if not np.any(live):
        return out[()] if out.ndim == 0 else out
    p, tt = psi[live], t[live]
    if model.is_levy:
        out[live] = np.exp(-tt * p)
    elif model.kind == "sl":
        out[live] = special.mittag_leffler(model.beta, -p * tt ** model.beta, policy)
    else:
        out[live] = special.kummer_1f1(model.beta, 1.0, -tt * p, policy)
    return out[()] if out.ndim == 0 else out


def flt_value(model: AnomalousModel, z, s):
    """Laplace transform in ``t`` of ``Phi_t(z)``, evaluated at ``s``.

    For the DRD model, conditioning on the clock gives the joint exponent
    ``(s + psi(z))^beta`` of the pair ``(X_L, L)``.
    """
    s = np.asarray(s, dtype=complex)
    if np.any(s.real <= 0):
        raise ValueError("Re(s) must be positive")
    psi = model.levy.exponent(z)
    b = model.beta
    if model.is_levy:
        return 1.0 / (s + psi)
    if model.kind == "sl":
        return s ** (b - 1) / (s ** b + psi)
    return s ** (b - 1) / (s + psi) ** b


def timechanged_cumulants(k: Cumulants, tau: TimeChangeCumulants) -> YCumulants:
    """Cumulants of ``X`` run on an independent clock with cumulants ``tau``."""
    k1, k2, k3, k4 = k
    t1, t2, t3, t4 = tau
    y1 = t1 * k1
    y2 = t1 * k2 + k1 ** 2 * t2
    y3 = t1 * k3 + 3 * k1 * k2 * t2 + k1 ** 3 * t3
    y4 = (3 * k2 ** 2 + 4 * k1 * k3) * t2 + 6 * k1 ** 2 * k2 * t3 + k4 * t1 + k1 ** 4 * t4
    return _ycum(y1, y2, y3, y4)


def _ycum(y1, y2, y3, y4) -> YCumulants:
    skew = kurt = math.nan
    if y2 > 0:
        d3, d4 = y2 * math.sqrt(y2), y2 * y2
        if d3 > 0:
            skew = y3 / d3
        if d4 > 0:
            kurt = y4 / d4
    return YCumulants(y1, y2, y3, y4, skew, kurt)


def beta_clock_cumulants(beta: float, t: float) -> TimeChangeCumulants:
    """Cumulants of ``t * Beta(beta, 1 - beta)``, the DRD clock."""
    if not 0 < beta <= 1:
        raise ValueError("beta must lie in (0, 1]")
    if t < 0:
        raise ValueError("t must be non-negative")
    b, c = beta, 1 - beta
    return TimeChangeCumulants(
        b * t,
        0.5 * c * b * t ** 2,
        -c * b * (2 * b - 1) * t ** 3 / 3,
        b / 8 * c * (2 - 11 * c * b) * t ** 4,
    )


def sl_clock_cumulants(beta: float, t: float) -> TimeChangeCumulants:
    """Cumulants of the inverse stable clock, from ``E[H_t^n] = t^(beta n) n! / Gamma(beta n + 1)``."""
    if not 0 < beta <= 1:
        raise ValueError("beta must lie in (0, 1]")
    if t < 0:
        raise ValueError("t must be non-negative")
    m1, m2, m3, m4 = (t ** (beta * n) * math.factorial(n) * sc.rgamma(beta * n + 1) for n in (1, 2, 3, 4))
    c2 = m2 - m1 ** 2
    c3 = m3 - 3 * m1 * m2 + 2 * m1 ** 3
    c4 = m4 - 4 * m1 * m3 - 3 * m2 ** 2 + 12 * m1 ** 2 * m2 - 6 * m1 ** 4
    return TimeChangeCumulants(m1, c2, c3, c4)


def drd_cumulants(model: AnomalousModel, t: float) -> YCumulants:
    """Cumulants of ``Y_t`` in the DRD model as explicit polynomials in ``t``."""
    if model.kind != "drd":
        raise ValueError("drd_cumulants needs a model of kind 'drd'")
    k1, k2, k3, k4 = model.levy.cumulants()
    b = model.beta
    c = 1 - b
    y1 = b * k1 * t
    y2 = b * k2 * t + k1 ** 2 / 2 * c * b * t ** 2
    y3 = b * k3 * t + 1.5 * k1 * k2 * c * b * t ** 2 - k1 ** 3 / 3 * c * b * (2 * b - 1) * t ** 3
    y4 = (
        b * k4 * t
        + (4 * k1 * k3 + 3 * k2 ** 2) / 2 * b * c * t ** 2
        - 2 * c * b * (2 * b - 1) * k1 ** 2 * k2 * t ** 3
        + k1 ** 4 / 8 * c * b * (2 - 11 * b * c) * t ** 4
    )
    return _ycum(y1, y2, y3, y4)


def drd_moment_limits(beta: float, k: Cumulants) -> tuple[float, float, float, float]:
    """Large- and small-time limits of DRD skewness and excess kurtosis.

    Returns ``(skew_inf, kurt_inf, skew_short, kurt_short)`` where the short-time
    entries are the limits of ``sqrt(t) Skew(Y_t)`` and ``t Kurt(Y_t)``.
    """
    if not 0 < beta < 1:
        raise ValueError("beta must lie in (0, 1)")
    if not k.k2 > 0:
        raise ValueError("k2 must be positive")
    bc = beta * (1 - beta)
    skew_inf = 2 * math.sqrt(2) / 3 * (1 - 2 * beta) / math.sqrt(bc) * float(np.sign(k.k1))
    kurt_inf = 1 / bc - 5.5
    return (
        skew_inf,
        kurt_inf,
        k.k3 / math.sqrt(beta * k.k2 ** 3),
        k.k4 / (beta * k.k2 ** 2),
    )


def model_from_dict(doc: dict) -> AnomalousModel:
    for key in ("kind", "levy"):
        if key not in doc:
            raise ValueError(f"model document is missing field {key!r}")
    kind = doc["kind"]
    if kind not in KINDS:
        raise ValueError(f"field 'kind': unknown value {kind!r}")
    beta = doc.get("beta", 1.0)
    if kind != "levy" and "beta" not in doc:
        raise ValueError("field 'beta' is required for kinds 'sl' and 'drd'")
    try:
        beta = float(beta)
    except (TypeError, ValueError):
        raise ValueError("field 'beta' must be a number") from None
    return AnomalousModel(levy_from_dict(doc["levy"]), beta, kind)


def model_from_json(text: str) -> AnomalousModel:
    return model_from_dict(json.loads(text))
