"""Monte Carlo for the SL and DRD clocks, paths and CTRW approximations.

Clocks
------
``L``  beta-stable subordinator, ``E[exp(-s L_t)] = exp(-t s^beta)``
``H``  its inverse (first passage above ``t``); exactly ``H_t = (t / S)^beta`` with ``S = L_1``
``LH`` last passage ``L_{H_t -}``; exactly ``t * Beta(beta, 1 - beta)``
``V``  backward renewal time ``t - LH_t``

Drivers are sampled exactly as normal mean-variance mixtures
``X_h = drift h + loc + scale Z`` (BM, VG, NIG, MJD); CGMY has no such
representation here and is rejected.

Randomness comes from ``numpy.random.SeedSequence``: each chunk of paths draws
from its own spawned stream, so results depend only on the seed and the chunk
size, never on scheduling.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np
from scipy import special as sc

from .anomalous import AnomalousModel
from .levy import CGMY, BrownianMotion, LevyModel, MertonJumpDiffusion, NormalInverseGaussian, VarianceGamma
from .pricing import MarketSetup, OptionSpec

__all__ = [
    "UnsupportedDriverError",
    "PathGrid",
    "PathSample",
    "MCConfig",
    "IncrementStats",
    "stable_variates",
    "sample_stable_subordinator",
    "invert_path",
    "last_passage",
    "path_clocks",
    "sample_h_marginal",
    "sample_drd_clock",
    "sample_drd_clock_pair",
    "levy_increments",
    "sample_clock",
    "terminal_samples",
    "mc_price",
    "simulate_paths",
    "write_paths_csv",
    "increment_statistics",
    "ctrw_clock",
    "ctrw_sample",
]


class UnsupportedDriverError(ValueError):
    """The driver has no exact increment sampler."""


@dataclass(frozen=True)
class PathGrid:
    dt: float
    T: float

    def __post_init__(self):
        if not (self.dt > 0 and self.T > 0):
            raise ValueError("dt and T must be positive")
        if self.dt > self.T:
            raise ValueError("dt must not exceed T")

    @property
    def n(self) -> int:
        return int(math.ceil(self.T / self.dt - 1e-9))

    @property
    def times(self) -> np.ndarray:
        t = self.dt * np.arange(self.n + 1)
        t[-1] = self.T
        return t


@dataclass
class PathSample:
    times: np.ndarray
    L: np.ndarray
    H: np.ndarray
    LH: np.ndarray
    V: np.ndarray
    Y: np.ndarray


@dataclass(frozen=True)
class MCConfig:
    n_paths: int = 100_000
    seed: int = 0
    antithetic: bool = False
    chunk: int = 1 << 16

    def __post_init__(self):
        if self.n_paths < 1:
            raise ValueError("n_paths must be at least 1")
        if self.chunk < 2:
            raise ValueError("chunk must be at least 2")

    def streams(self):
        """Yield ``(size, Generator)`` per chunk."""
        n_chunks = -(-self.n_paths // self.chunk)
        seqs = np.random.SeedSequence(self.seed).spawn(n_chunks)
        left = self.n_paths
        for s in seqs:
            size = min(self.chunk, left)
            left -= size
            yield size, np.random.Generator(np.random.PCG64(s))


@dataclass(frozen=True)
class IncrementStats:
    cov: float
    cov_se: float
    mean: float
    mean_se: float


def _rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))


def _check_beta(beta: float, allow_one: bool = False):
    if not (0.0 < beta < 1.0 or (allow_one and beta == 1.0)):
        raise ValueError("beta must lie in (0, 1)" + ("" if not allow_one else " or equal 1"))


def stable_variates(beta: float, size, rng: np.random.Generator) -> np.ndarray:
    """Unit one-sided stable draws, ``E[exp(-s S)] = exp(-s^beta)`` (Kanter's representation)."""
    _check_beta(beta)
    u = np.pi * rng.random(size)
    e = rng.standard_exponential(size)
    # log space: the powers 1/(1-beta) under/overflow as beta -> 1
    log_a = (beta * np.log(np.sin(beta * u)) - np.log(np.sin(u))) / (1 - beta) + np.log(np.sin((1 - beta) * u))
    return np.exp((1 - beta) / beta * (log_a - np.log(e)))


def sample_stable_subordinator(beta: float, grid: PathGrid, seed=0) -> np.ndarray:
    """``L`` on ``grid.times`` (``L_0 = 0``)."""
    rng = _rng(seed)
    steps = np.diff(grid.times)
    inc = steps ** (1 / beta) * stable_variates(beta, steps.size, rng)
    return np.concatenate(([0.0], np.cumsum(inc)))


def invert_path(L: np.ndarray, du: float, levels) -> np.ndarray:
    """``H_t = inf{u : L_u > t}`` from ``L`` sampled every ``du``; overshoots by at most ``du``."""
    k = np.searchsorted(L, np.asarray(levels, dtype=float), side="right")
    if np.any(k >= L.size):
        raise ValueError("L path does not reach the requested level")
    return k * du


def last_passage(L: np.ndarray, H: np.ndarray, du: float) -> np.ndarray:
    """``L_{H_t -}``: the path value just before the crossing step."""
    k = np.rint(np.asarray(H) / du).astype(int)
    return L[k - 1]


def path_clocks(beta: float, times, n: int, du: float | None = None, seed=0, eps: float = 1e-3):
    """Path-based ``(H, LH)`` at ``times`` for ``n`` independent discretised ``L`` paths.

    Returns two ``(n, len(times))`` arrays.  The operational step is
    ``min(du, (eps * gap)^beta)`` with ``gap`` the distance from the current
    level to the next target, so increments stay small next to the gap and
    the error in ``t - LH_t`` is relative (``O(eps)``) rather than absolute;
    this matters because ``LH_t / t`` has an integrable singularity at 1.
    ``H`` overshoots by at most the final step.
    """
    _check_beta(beta)
    times = np.sort(np.asarray(times, dtype=float))
    if du is None:
        du = 1e-2 * times[-1] ** beta
    rng = _rng(seed)
    m = times.size
    H = np.empty((n, m))
    LH = np.empty((n, m))
    level = np.zeros(n)
    clock = np.zeros(n)
    nxt = np.zeros(n, dtype=np.int64)
    alive = np.arange(n)
    while alive.size:
        target = times[nxt[alive]]
        # floor keeps increments above the float spacing of the level
        gap = np.maximum(target - level[alive], 1e-10 * target)
        step = np.minimum(du, (eps * gap) ** beta)
        new = level[alive] + step ** (1 / beta) * stable_variates(beta, alive.size, rng)
        clock[alive] += step
        for j in range(m):
            hit = (nxt[alive] == j) & (new > times[j])
            if np.any(hit):
                rows = alive[hit]
                H[rows, j] = clock[rows]
                LH[rows, j] = level[rows]
                nxt[rows] = j + 1
        level[alive] = new
        alive = alive[nxt[alive] < m]
    return H, LH


def sample_h_marginal(beta: float, t: float, size=None, seed=0) -> np.ndarray:
    """Exact ``H_t = (t / S)^beta``."""
    _check_beta(beta, allow_one=True)
    if beta == 1.0:
        return np.full(size if size is not None else (), float(t))
    return (t / stable_variates(beta, size, _rng(seed))) ** beta


def _beta_draws(beta, size, rng):
    g1 = rng.standard_gamma(beta, size)
    g2 = rng.standard_gamma(1 - beta, size)
    return g1 / (g1 + g2)


def sample_drd_clock(beta: float, t: float, size=None, seed=0) -> np.ndarray:
    """Exact ``LH_t = t * Beta(beta, 1 - beta)`` from two Gamma draws."""
    _check_beta(beta, allow_one=True)
    if beta == 1.0:
        return np.full(size if size is not None else (), float(t))
    return t * _beta_draws(beta, size, _rng(seed))


def sample_drd_clock_pair(beta: float, t: float, h: float, size: int, seed=0):
    """Exact ``(LH_t, LH_{t+h})``.

    The jump of ``L`` straddling ``t`` starts at ``G = LH_t`` and, given ``G``,
    has Pareto overshoot ``D = G + (t - G) U^(-1/beta)``.  After ``D`` the clock
    starts afresh, so ``LH_{t+h} = D + LH'_{t+h-D}`` when ``D <= t + h``.
    """
    _check_beta(beta)
    rng = _rng(seed)
    g = t * _beta_draws(beta, size, rng)
    d = g + (t - g) * rng.random(size) ** (-1 / beta)
    later = g.copy()
    hit = d <= t + h
    later[hit] = d[hit] + (t + h - d[hit]) * _beta_draws(beta, int(hit.sum()), rng)
    return g, later


def _mixture(levy: LevyModel, h: np.ndarray, rng: np.random.Generator):
    """``(loc, scale)`` with ``X_h = loc + scale Z`` in law."""
    if isinstance(levy, CGMY):
        raise UnsupportedDriverError("CGMY increments cannot be sampled exactly; use BM, VG, NIG or MJD")
    h = np.asarray(h, dtype=float)
    base = levy.drift * h
    if isinstance(levy, BrownianMotion):
        return base, levy.sigma * np.sqrt(h)
    if isinstance(levy, VarianceGamma):
        g = np.where(h > 0, rng.gamma(np.maximum(h, 1e-300) / levy.kappa, levy.kappa), 0.0)
        return base + levy.theta * g, levy.sigma * np.sqrt(g)
    if isinstance(levy, NormalInverseGaussian):
        hs = np.maximum(h, 1e-150)
        g = np.where(h > 0, rng.wald(hs, hs * hs / levy.kappa), 0.0)
        return base + levy.theta * g, levy.sigma * np.sqrt(g)
    if isinstance(levy, MertonJumpDiffusion):
        n = rng.poisson(levy.lam * h)
        return base + levy.m * n, np.sqrt(levy.sigma ** 2 * h + levy.delta ** 2 * n)
    raise UnsupportedDriverError(f"no exact sampler for driver {type(levy).__name__}")


def levy_increments(levy: LevyModel, h, rng: np.random.Generator, z=None) -> np.ndarray:
    """Exact draws of ``X_h`` for each entry of ``h``; ``z`` overrides the normal draws."""
    loc, scale = _mixture(levy, h, rng)
    if z is None:
        z = rng.standard_normal(np.shape(loc))
    return loc + scale * z


def sample_clock(model: AnomalousModel, T: float, size: int, rng: np.random.Generator) -> np.ndarray:
    if model.is_levy:
        return np.full(size, float(T))
    if model.kind == "sl":
        return sample_h_marginal(model.beta, T, size, rng)
    return sample_drd_clock(model.beta, T, size, rng)


def terminal_samples(model: AnomalousModel, T: float, mc: MCConfig = MCConfig()) -> np.ndarray:
    """Exact draws of ``Y_T``."""
    out = []
    for size, rng in mc.streams():
        out.append(levy_increments(model.levy, sample_clock(model, T, size, rng), rng))
    return np.concatenate(out)


def _payoff(opt: OptionSpec, s: np.ndarray) -> np.ndarray:
    if opt.kind == "call":
        return np.maximum(s - opt.strike, 0.0)
    if opt.kind == "put":
        return np.maximum(opt.strike - s, 0.0)
    return (s >= opt.strike).astype(float)


def mc_price(model: AnomalousModel, opt: OptionSpec, mkt: MarketSetup = MarketSetup(),
             mc: MCConfig = MCConfig()) -> tuple[float, float]:
    """Exact-marginal Monte Carlo price and its standard error.

    With ``antithetic`` each clock draw is used with ``Z`` and ``-Z`` and the
    pair average is the sampling unit.
    """
    T = opt.maturity
    growth = mkt.spot * math.exp(mkt.rate * T)
    vals = []
    for size, rng in mc.streams():
        clock = sample_clock(model, T, size, rng)
        loc, scale = _mixture(model.levy, clock, rng)
        z = rng.standard_normal(size)
        v = _payoff(opt, growth * np.exp(loc + scale * z))
        if mc.antithetic:
            v = 0.5 * (v + _payoff(opt, growth * np.exp(loc - scale * z)))
        vals.append(v)
    v = np.concatenate(vals) * mkt.discount(T)
    return float(v.mean()), float(v.std(ddof=1) / math.sqrt(v.size)) if v.size > 1 else math.nan


def simulate_paths(model: AnomalousModel, grid: PathGrid, mc: MCConfig = MCConfig(n_paths=1),
                   du: float | None = None) -> list[PathSample]:
    """Discretised paths of ``L, H, LH, V`` and ``Y`` on ``grid``.

    ``L`` is simulated on an operational grid of step ``du`` (default ``grid.dt``)
    until it passes ``T``.  SL: ``Y = X_H`` with ``X`` on the operational grid.
    DRD: ``Y = X_{LH}`` with ``X`` advanced by an exact increment over each step of ``L``.
    """
    if model.is_levy:
        raise ValueError("simulate_paths needs beta < 1")
    beta = model.beta
    du = grid.dt if du is None else du
    t = grid.times
    out = []
    for size, rng in mc.streams():
        for _ in range(size):
            incs = []
            total, n = 0.0, 0
            while total <= grid.T or n * du < grid.T:
                blk = du ** (1 / beta) * stable_variates(beta, 4096, rng)
                incs.append(blk)
                total += blk.sum()
                n += blk.size
            dL = np.concatenate(incs)
            L = np.concatenate(([0.0], np.cumsum(dL)))
            H = invert_path(L, du, t)
            LH = last_passage(L, H, du)
            k = np.rint(H / du).astype(int)
            if model.kind == "sl":
                X = np.concatenate(([0.0], np.cumsum(levy_increments(model.levy, np.full(dL.size, du), rng))))
                Y = X[k]
            else:
                X = np.concatenate(([0.0], np.cumsum(levy_increments(model.levy, dL, rng))))
                Y = X[k - 1]
            Lt = np.interp(t, du * np.arange(L.size), L)
            out.append(PathSample(t.copy(), Lt, H, LH, t - LH, Y))
    return out


def write_paths_csv(path, sample: PathSample):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "L", "H", "LH", "V", "Y"])
        for row in zip(sample.times, sample.L, sample.H, sample.LH, sample.V, sample.Y):
            w.writerow([f"{float(x):.17g}" for x in row])


def increment_statistics(model: AnomalousModel, t: float, h: float, mc: MCConfig = MCConfig(),
                         du: float | None = None) -> IncrementStats:
    """``Cov(Y_{t+h} - Y_t, Y_t)`` and ``E[Y_{t+h} - Y_t]`` with standard errors.

    DRD uses the exact clock pair; SL uses path-based ``H`` from
    :func:`path_clocks` (``du`` caps its operational step).
    """
    if model.is_levy:
        raise ValueError("increment_statistics needs beta < 1")
    a, b = [], []
    for size, rng in mc.streams():
        if model.kind == "drd":
            c0, c1 = sample_drd_clock_pair(model.beta, t, h, size, rng)
        else:
            H, _ = path_clocks(model.beta, [t, t + h], size, du, rng)
            c0, c1 = H[:, 0], H[:, 1]
        y0 = levy_increments(model.levy, c0, rng)
        dy = levy_increments(model.levy, c1 - c0, rng)
        a.append(y0)
        b.append(dy)
    y0, dy = np.concatenate(a), np.concatenate(b)
    n = y0.size
    prod = (y0 - y0.mean()) * (dy - dy.mean())
    return IncrementStats(
        float(prod.sum() / (n - 1)),
        float(prod.std(ddof=1) / math.sqrt(n)),
        float(dy.mean()),
        float(dy.std(ddof=1) / math.sqrt(n)),
    )


def ctrw_clock(beta: float, c: float, horizon: float, n: int, seed=0, coupled: bool = False,
               waits: str = "pareto", block: int = 1024) -> np.ndarray:
    """Operational time carried by the CTRW at ``horizon``: ``N/c`` (independent) or the last epoch (coupled)."""
    return _ctrw_clock(beta, c, horizon, n, _rng(seed), coupled, waits, block)


def ctrw_sample(beta: float, driver: LevyModel, c: float, horizon: float, n: int, seed=0,
                coupled: bool = False, waits: str = "pareto", block: int = 1024) -> np.ndarray:
    """Terminal values ``Sigma^c_horizon`` of the scaled continuous-time random walk.

    Waiting times are ``b(c) J`` with ``P(J > x) = x^-beta`` (``x >= 1``) and
    ``b(c) = (c Gamma(1 - beta))^(-1/beta)``, so the renewal epochs approach
    ``L`` with Laplace exponent ``s^beta``; ``waits="exponential"`` uses
    ``J ~ Exp(1) / c`` instead (ordinary Levy limit).  Innovations are increments
    of ``driver``: over ``1/c`` each (``coupled=False``, SL limit), or over the
    preceding waiting time (``coupled=True``, DRD limit).  Only the renewal
    count and the last epoch are needed, since a sum of independent increments
    is one increment of the total length.
    """
    rng = _rng(seed)
    return levy_increments(driver, _ctrw_clock(beta, c, horizon, n, rng, coupled, waits, block), rng)


def _ctrw_clock(beta, c, horizon, n, rng, coupled, waits, block):
    if waits not in ("pareto", "exponential"):
        raise ValueError("waits must be 'pareto' or 'exponential'")
    if waits == "pareto":
        _check_beta(beta)
        scale = (c * sc.gamma(1 - beta)) ** (-1 / beta)
    else:
        scale = 1.0 / c
    count = np.zeros(n, dtype=np.int64)
    epoch = np.zeros(n)
    alive = np.arange(n)
    while alive.size:
        if waits == "pareto":
            J = scale * rng.random((alive.size, block)) ** (-1 / beta)
        else:
            J = scale * rng.standard_exponential((alive.size, block))
        T = epoch[alive, None] + np.cumsum(J, axis=1)
        over = T > horizon
        done = over[:, -1]
        idx = np.where(done, np.argmax(over, axis=1), block)
        last = np.where(idx > 0, T[np.arange(alive.size), np.maximum(idx - 1, 0)], epoch[alive])
        count[alive] += idx
        epoch[alive] = last
        alive = alive[~done]
    return epoch if coupled else count / c
