"""Parametric Levy drivers.

Sign convention, used everywhere in the package::

    E[exp(-i z X_t)] = exp(-t psi(z))

so ``psi(0) = 0``, and ``Im(z) = v`` probes the exponential moment
``E[exp(v X)]``. The martingale condition for ``exp(X)`` is ``psi(i) = 0`` and
the Lewis pricing line ``Im(z) = 1/2`` sits inside the strip ``0 <= Im(z) <= 1``.

Closed forms (``drift`` is the linear term ``i*drift*z``):

========  ==================================================================
bm        ``sigma^2 z^2 / 2``
vg        ``log(1 + i theta kappa z + sigma^2 kappa z^2 / 2) / kappa``
nig       ``(sqrt(1 + sigma^2 kappa z^2 + 2 i theta kappa z) - 1) / kappa``
cgmy      ``-C Gamma(-Y) [(M + i z)^Y - M^Y + (G - i z)^Y - G^Y]``
mjd       ``sigma^2 z^2 / 2 + lam (1 - exp(-i m z - delta^2 z^2 / 2))``
========  ==================================================================

VG and NIG use the Cont-Tankov ``(kappa, sigma, theta)`` parametrisation: a
Brownian motion with drift ``theta`` and volatility ``sigma`` run on a Gamma
(resp. inverse Gaussian) clock with unit mean rate and variance rate ``kappa``.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, fields, replace

import numpy as np
from scipy import special as sc

__all__ = [
    "StripError",
    "Cumulants",
    "LevyModel",
    "BrownianMotion",
    "VarianceGamma",
    "NormalInverseGaussian",
    "CGMY",
    "MertonJumpDiffusion",
    "char_exponent",
    "risk_neutral_compensate",
    "cumulants",
    "levy_from_dict",
    "levy_from_json",
]


class StripError(ValueError):
    """Argument outside the strip where the exponent is analytic."""


@dataclass(frozen=True)
class Cumulants:
    k1: float
    k2: float
    k3: float
    k4: float

    def __iter__(self):
        return iter((self.k1, self.k2, self.k3, self.k4))


@dataclass(frozen=True)
class LevyModel:
    """Base class; concrete drivers add their parameters and ``drift``."""

    variant = "base"

    def _exponent(self, z):
        raise NotImplementedError

    def exponent(self, z, check: bool = True):
        """Characteristic exponent ``psi(z)``, including the drift term."""
        z = np.asarray(z, dtype=complex)
        if check:
            lo, hi = self.strip()
            v = z.imag
            if np.any(v <= lo) or np.any(v >= hi):
                raise StripError(f"Im(z) must lie in ({lo}, {hi}) for {self.variant}")
        return self._exponent(z) + 1j * self.drift * z

    def exponent_d2(self, z):
        """Second derivative ``psi''(z)``; the drift does not contribute."""
        raise NotImplementedError

    def strip(self) -> tuple[float, float]:
        """Open interval of ``Im(z)`` on which the exponent is analytic."""
        return (-np.inf, np.inf)

    def martingale_drift(self) -> float:
        """Drift that makes ``exp(X)`` a martingale, i.e. ``psi(i) = 0``."""
        # psi(i) = psi_0(i) - drift
        return complex(self._exponent(np.complex128(1j))).real

    def compensated(self) -> "LevyModel":
        lo, hi = self.strip()
        if not hi > 1.0:
            raise ValueError(f"{self.variant}: E[exp(X)] is infinite, cannot compensate")
        return replace(self, drift=self.martingale_drift())

    def is_compensated(self, tol: float = 1e-12) -> bool:
        return abs(self.exponent(1j, check=False)) <= tol

    def subordinator_cumulants(self) -> tuple[float, float, float, float]:
        raise NotImplementedError

    def cumulants(self) -> Cumulants:
        # subordinated Brownian motion: K_X(u) = K_clock(theta u + sigma^2 u^2 / 2)
        c1, c2, c3, c4 = self.subordinator_cumulants()
        th, s2 = self.theta, self.sigma ** 2
        return Cumulants(
            k1=c1 * th + self.drift,
            k2=c2 * th ** 2 + c1 * s2,
            k3=c3 * th ** 3 + 3 * c2 * th * s2,
            k4=c4 * th ** 4 + 6 * c3 * th ** 2 * s2 + 3 * c2 * s2 ** 2,
        )

    def params(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    def to_dict(self) -> dict:
        return {"variant": self.variant, "params": self.params()}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


@dataclass(frozen=True)
class BrownianMotion(LevyModel):
    sigma: float
    drift: float = 0.0
    variant = "bm"

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError("sigma must be positive")

    def _exponent(self, z):
        return 0.5 * self.sigma ** 2 * z * z

    def exponent_d2(self, z):
        return np.full(np.shape(z), self.sigma ** 2, dtype=complex)

    def cumulants(self) -> Cumulants:
        return Cumulants(self.drift, self.sigma ** 2, 0.0, 0.0)


@dataclass(frozen=True)
class VarianceGamma(LevyModel):
    kappa: float
    sigma: float
    theta: float
    drift: float = 0.0
    variant = "vg"

    def __post_init__(self):
        if not (self.kappa > 0 and self.sigma > 0):
            raise ValueError("kappa and sigma must be positive")
        if not self.strip()[1] > 1.0:
            raise ValueError("VG parameters violate 1 - theta*kappa - sigma^2*kappa/2 > 0")

    def _q(self, z):
        return 1 + 1j * self.theta * self.kappa * z + 0.5 * self.sigma ** 2 * self.kappa * z * z

    def _exponent(self, z):
        return np.log(self._q(z)) / self.kappa

    def exponent_d2(self, z):
        z = np.asarray(z, dtype=complex)
        q = self._q(z)
        dq = 1j * self.theta * self.kappa + self.sigma ** 2 * self.kappa * z
        d2q = self.sigma ** 2 * self.kappa
        return (d2q * q - dq * dq) / (self.kappa * q * q)

    def strip(self):
        # 1 - theta kappa v - sigma^2 kappa v^2 / 2 > 0 at z = i v
        a, b = 0.5 * self.sigma ** 2 * self.kappa, self.theta * self.kappa
        disc = np.sqrt(b * b + 4 * a)
        return ((-b - disc) / (2 * a), (-b + disc) / (2 * a))

    def subordinator_cumulants(self):
        k = self.kappa
        return (1.0, k, 2 * k ** 2, 6 * k ** 3)


@dataclass(frozen=True)
class NormalInverseGaussian(LevyModel):
    kappa: float
    sigma: float
    theta: float
    drift: float = 0.0
    variant = "nig"

    def __post_init__(self):
        if not (self.kappa > 0 and self.sigma > 0):
            raise ValueError("kappa and sigma must be positive")
        if not self.strip()[1] > 1.0:
            raise ValueError("NIG parameters violate 1 - sigma^2*kappa - 2*theta*kappa > 0")

    def _q(self, z):
        return 1 + self.sigma ** 2 * self.kappa * z * z + 2j * self.theta * self.kappa * z

    def _exponent(self, z):
        return (np.sqrt(self._q(z)) - 1) / self.kappa

    def exponent_d2(self, z):
        z = np.asarray(z, dtype=complex)
        q = self._q(z)
        dq = 2 * self.sigma ** 2 * self.kappa * z + 2j * self.theta * self.kappa
        d2q = 2 * self.sigma ** 2 * self.kappa
        r = np.sqrt(q)
        return (d2q / (2 * r) - dq * dq / (4 * q * r)) / self.kappa

    def strip(self):
        # 1 - sigma^2 kappa v^2 - 2 theta kappa v > 0 at z = i v
        a, b = self.sigma ** 2 * self.kappa, 2 * self.theta * self.kappa
        disc = np.sqrt(b * b + 4 * a)
        return ((-b - disc) / (2 * a), (-b + disc) / (2 * a))

    def subordinator_cumulants(self):
        k = self.kappa
        return (1.0, k, 3 * k ** 2, 15 * k ** 3)


@dataclass(frozen=True)
class CGMY(LevyModel):
    C: float
    G: float
    M: float
    Y: float
    drift: float = 0.0
    variant = "cgmy"

    def __post_init__(self):
        if not (self.C > 0 and self.G > 0):
            raise ValueError("C and G must be positive")
        if not self.M > 1:
            raise ValueError("M must exceed 1 for E[exp(X)] to be finite")
        if not 0 < self.Y < 2 or self.Y == 1:
            raise ValueError("Y must lie in (0, 2) and differ from 1")

    def _exponent(self, z):
        C, G, M, Y = self.C, self.G, self.M, self.Y
        return -C * sc.gamma(-Y) * ((M + 1j * z) ** Y - M ** Y + (G - 1j * z) ** Y - G ** Y)

    def exponent_d2(self, z):
        z = np.asarray(z, dtype=complex)
        C, G, M, Y = self.C, self.G, self.M, self.Y
        return C * sc.gamma(-Y) * Y * (Y - 1) * ((M + 1j * z) ** (Y - 2) + (G - 1j * z) ** (Y - 2))

    def strip(self):
        return (-self.G, self.M)

    def cumulants(self) -> Cumulants:
        C, G, M, Y = self.C, self.G, self.M, self.Y
        k = [C * sc.gamma(n - Y) * (M ** (Y - n) + (-1) ** n * G ** (Y - n)) for n in (1, 2, 3, 4)]
        return Cumulants(k[0] + self.drift, k[1], k[2], k[3])


@dataclass(frozen=True)
class MertonJumpDiffusion(LevyModel):
    """Brownian motion plus compound Poisson jumps with ``N(m, delta^2)`` sizes."""

    sigma: float
    lam: float
    m: float
    delta: float
    drift: float = 0.0
    variant = "mjd"

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError("sigma must be positive")
        if not (self.lam >= 0 and self.delta >= 0):
            raise ValueError("lam and delta must be non-negative")

    def _jump_cf(self, z):
        return np.exp(-1j * self.m * z - 0.5 * self.delta ** 2 * z * z)

    def _exponent(self, z):
        return 0.5 * self.sigma ** 2 * z * z + self.lam * (1 - self._jump_cf(z))

    def exponent_d2(self, z):
        z = np.asarray(z, dtype=complex)
        g1 = -1j * self.m - self.delta ** 2 * z
        return self.sigma ** 2 - self.lam * self._jump_cf(z) * (g1 * g1 - self.delta ** 2)

    def cumulants(self) -> Cumulants:
        lam, m, d2 = self.lam, self.m, self.delta ** 2
        return Cumulants(
            lam * m + self.drift,
            self.sigma ** 2 + lam * (m * m + d2),
            lam * (m ** 3 + 3 * m * d2),
            lam * (m ** 4 + 6 * m * m * d2 + 3 * d2 * d2),
        )


_VARIANTS = {
    cls.variant: cls
    for cls in (BrownianMotion, VarianceGamma, NormalInverseGaussian, CGMY, MertonJumpDiffusion)
}


def char_exponent(model: LevyModel, z):
    """``psi_X(z)`` of ``model``; raises :class:`StripError` off the analytic strip."""
    return model.exponent(z)


def risk_neutral_compensate(model: LevyModel) -> LevyModel:
    """Return a copy whose drift makes ``exp(X)`` a martingale (idempotent)."""
    out = model.compensated()
    resid = abs(out.exponent(1j, check=False))
    if resid > 1e-12:
        raise ArithmeticError(f"compensation residual {resid:.3g} too large")
    return out


def cumulants(model: LevyModel) -> Cumulants:
    """First four cumulants of ``X_1``, reflecting the model's current drift."""
    return model.cumulants()


def levy_from_dict(doc: dict) -> LevyModel:
    try:
        variant = doc["variant"]
    except KeyError:
        raise ValueError("model document is missing field 'variant'") from None
    if variant not in _VARIANTS:
        raise ValueError(f"field 'variant': unknown value {variant!r}")
    cls = _VARIANTS[variant]
    params = doc.get("params")
    if not isinstance(params, dict):
        raise ValueError("field 'params' must be an object")
    names = [f.name for f in fields(cls)]
    for key in params:
        if key not in names:
            raise ValueError(f"field 'params.{key}' is not a {variant} parameter")
    for key in names:
        if key != "drift" and key not in params:
            raise ValueError(f"field 'params.{key}' is required for {variant}")
    try:
        return cls(**{k: float(v) for k, v in params.items()})
    except (TypeError, ValueError) as exc:
        raise ValueError(f"field 'params': {exc}") from None


def levy_from_json(text: str) -> LevyModel:
    return levy_from_dict(json.loads(text))
