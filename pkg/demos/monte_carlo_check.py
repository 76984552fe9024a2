"""Quadrature prices against exact-marginal Monte Carlo.

Run:  python demos/monte_carlo_check.py
"""
from anomdiff import AnomalousModel, MarketSetup, NormalInverseGaussian, OptionSpec, price_call, risk_neutral_compensate
from anomdiff.simulation import MCConfig, mc_price

mkt = MarketSetup(100.0, 0.02)
nig = risk_neutral_compensate(NormalInverseGaussian(0.3, 0.2, -0.1))
for kind in ("sl", "drd"):
    m = AnomalousModel(nig, 0.6, kind)
    for K in (80.0, 100.0, 120.0):
        opt = OptionSpec("call", K, 1.0)
        q = price_call(m, opt, mkt)
        p, se = mc_price(m, opt, mkt, MCConfig(n_paths=400_000, seed=1, antithetic=True))
        print(f"{kind:>4} K={K:5.0f}  quadrature {q:9.5f}  MC {p:9.5f} +- {se:.5f}  z={(p - q) / se:+.2f}")
