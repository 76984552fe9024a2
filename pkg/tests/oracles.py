"""Independent high-precision references used only by the test-suite.

Nothing here shares code with the package: series are summed in mpmath at
adaptive precision, and the time-domain characteristic functions are obtained
by inverting their Laplace transforms along a Talbot contour.
"""
import math

import mpmath as mp
import numpy as np
from scipy import integrate


def talbot_invert(F, t, terms=32, pole_radius=0.0):
    """Invert a Laplace transform at time ``t`` along a full Talbot contour.

    ``s(theta) = lam * theta * (cot(theta) + i)`` for theta in (-pi, pi), sampled
    by the midpoint rule. Both halves are used, so ``F`` need not satisfy
    ``F(conj s) = conj F(s)`` (the time function may be complex). ``lam`` is
    chosen so that every singularity of modulus up to ``pole_radius`` lies to
    the left of the contour; ``terms`` is the half-contour count at the
    default scale ``lam * t = 2 * terms / 5`` and grows with ``lam * t``.
    """
    lam = max(0.4 * terms / t, 2.0 * pole_radius)
    nodes = 2 * max(terms, math.ceil(2.5 * lam * t))
    dps = 30 + int(lam * t / math.log(10))
    with mp.workdps(dps):
        t = mp.mpf(t)
        lam = mp.mpf(lam)
        h = 2 * mp.pi / nodes
        acc = mp.mpc(0)
        for k in range(nodes):
            th = -mp.pi + (k + mp.mpf(0.5)) * h
            cot = mp.cot(th)
            s = lam * th * (cot + 1j)
            ds = lam * (cot - th / mp.sin(th) ** 2 + 1j)
            acc += mp.exp(s * t) * F(s) * ds
        val = acc * h / (2j * mp.pi)
    return complex(val)


def cf_by_inversion(kind, beta, psi, t, terms=32):
    """``Phi_t`` for a fixed exponent value ``psi`` via Laplace inversion.

    Both transforms depend on ``(psi, t)`` only through ``psi t^beta`` (SL) or
    ``psi t`` (DRD), so the inversion is always done at unit time.
    """
    b = mp.mpf(beta)
    if kind == "sl":
        w = complex(psi) * t ** beta
        rho = abs(w) ** (1.0 / beta) if abs(np.angle(-w)) < beta * math.pi else 0.0
        ww = mp.mpc(w)
        F = lambda s: s ** (b - 1) / (s ** b + ww)
    elif kind == "drd":
        w = complex(psi) * t
        rho = abs(w)
        ww = mp.mpc(w)
        F = lambda s: s ** (b - 1) / (s + ww) ** b
    else:
        raise ValueError(kind)
    return talbot_invert(F, 1.0, terms=terms, pole_radius=rho)


def ml_reference(beta, z):
    """Mittag-Leffler function by brute-force Taylor summation in mpmath."""
    z = complex(z)
    r = abs(z)
    dps = 30 + int(r ** (1.0 / beta) / math.log(10)) if r > 1 else 30
    with mp.workdps(dps):
        zz = mp.mpc(z)
        b = mp.mpf(beta)
        total = mp.mpc(0)
        term_pow = mp.mpc(1)
        k = 0
        small = 0
        while True:
            term = term_pow * mp.rgamma(b * k + 1)
            total += term
            if abs(term) < mp.mpf(10) ** (-dps + 5) * max(1, abs(total)) and k > r ** (1 / beta):
                small += 1
                if small > 5:
                    break
            term_pow *= zz
            k += 1
        return complex(total)


def hyp1f1_reference(a, b, z):
    with mp.workdps(40):
        return complex(mp.hyp1f1(a, b, complex(z)))


def hyp1f1_beta_integral(beta, x):
    """``1F1(beta, 1; -x) = E[exp(-x B)]`` with ``B ~ Beta(beta, 1 - beta)``."""
    c = 1.0 / math.gamma(beta) / math.gamma(1 - beta)
    kw = dict(weight="alg", wvar=(beta - 1, -beta), limit=200, epsabs=1e-14, epsrel=1e-13)
    re = integrate.quad(lambda u: np.exp(-x * u).real, 0, 1, **kw)[0]
    im = integrate.quad(lambda u: np.exp(-x * u).imag, 0, 1, **kw)[0]
    return c * complex(re, im)


def beta_function_ratio(beta, eps):
    """``E[B^eps]`` for ``B ~ Beta(beta, 1 - beta)`` by quadrature."""
    kw = dict(weight="alg", wvar=(beta - 1, -beta), limit=200, epsabs=1e-15, epsrel=1e-14)
    val = integrate.quad(lambda u: u ** eps, 0, 1, **kw)[0]
    return val / (math.gamma(beta) * math.gamma(1 - beta))


def mp_exponent(model):
    """High-precision transcription of the characteristic exponent of ``model``."""
    p = {k: mp.mpf(v) for k, v in model.params().items()}
    mu = p["drift"]
    v = model.variant
    if v == "bm":
        core = lambda z: p["sigma"] ** 2 * z * z / 2
    elif v == "vg":
        k, s, th = p["kappa"], p["sigma"], p["theta"]
        core = lambda z: mp.log(1 + 1j * th * k * z + s * s * k * z * z / 2) / k
    elif v == "nig":
        k, s, th = p["kappa"], p["sigma"], p["theta"]
        core = lambda z: (mp.sqrt(1 + s * s * k * z * z + 2j * th * k * z) - 1) / k
    elif v == "cgmy":
        C, G, M, Y = p["C"], p["G"], p["M"], p["Y"]
        core = lambda z: -C * mp.gamma(-Y) * ((M + 1j * z) ** Y - M ** Y + (G - 1j * z) ** Y - G ** Y)
    elif v == "mjd":
        s, lam, m, d = p["sigma"], p["lam"], p["m"], p["delta"]
        core = lambda z: s * s * z * z / 2 + lam * (1 - mp.exp(-1j * m * z - d * d * z * z / 2))
    else:
        raise ValueError(v)
    return lambda z: core(mp.mpc(z)) + 1j * mu * mp.mpc(z)


def richardson_derivatives(f, h=1e-3, dps=40):
    """First four derivatives at 0 by central differences in mpmath.

    Seven-point stencils (fourth order) at steps ``h`` and ``h/2``, combined by
    one Richardson step.
    """
    with mp.workdps(dps):
        def d(hh):
            hh = mp.mpf(hh)
            fm3, fm2, fm1, f0, f1, f2, f3 = (f(k * hh) for k in (-3, -2, -1, 0, 1, 2, 3))
            d1 = (-f2 + 8 * f1 - 8 * fm1 + fm2) / (12 * hh)
            d2 = (-f2 + 16 * f1 - 30 * f0 + 16 * fm1 - fm2) / (12 * hh ** 2)
            d3 = (-f3 + 8 * f2 - 13 * f1 + 13 * fm1 - 8 * fm2 + fm3) / (8 * hh ** 3)
            d4 = (-f3 + 12 * f2 - 39 * f1 + 56 * f0 - 39 * fm1 + 12 * fm2 - fm3) / (6 * hh ** 4)
            return [d1, d2, d3, d4]

        a, b = d(h), d(mp.mpf(h) / 2)
        return np.array([complex((16 * y - x) / 15) for x, y in zip(a, b)])


def bm_mixture_cdf(sigma, drift, clocks, y):
    """CDF of ``drift C + sigma sqrt(C) Z`` averaged over sampled clocks ``C``."""
    from scipy.special import ndtr

    c = np.maximum(np.asarray(clocks, dtype=float), 1e-300)
    s = sigma * np.sqrt(c)
    return np.array([ndtr((v - drift * c) / s).mean() for v in np.atleast_1d(y)])


def fourier_cdf(model, y, T):
    """``P(Y_T <= y)`` from the digital-option quadrature (S0 = 1, r = 0)."""
    from anomdiff.pricing import MarketSetup, digital_prices

    return 1.0 - digital_prices(model, np.exp(np.atleast_1d(y)), T, MarketSetup(1.0, 0.0))


def conditioned_ks(sigma, drift, clocks, model, T, grid):
    """Sup distance between the clock-conditioned CDF of a BM-driven sample and the exact law."""
    return float(np.max(np.abs(bm_mixture_cdf(sigma, drift, clocks, grid) - fourier_cdf(model, grid, T))))
