"""Call prices and implied vols for SL and DRD models over a strike grid.

Run:  python demos/price_smile.py
"""
import numpy as np

from anomdiff import AnomalousModel, MarketSetup, OptionSpec, VarianceGamma, call_prices, implied_vol, risk_neutral_compensate

mkt = MarketSetup(100.0, 0.0)
vg = risk_neutral_compensate(VarianceGamma(0.2, 0.3, -0.3))
strikes = np.arange(80.0, 121.0, 10.0)
T = 1.0

print(f"{'model':>10} " + " ".join(f"{k:>8.0f}" for k in strikes))
for kind, beta in (("levy", 1.0), ("sl", 0.7), ("drd", 0.7)):
    m = AnomalousModel(vg, beta, kind)
    c = call_prices(m, strikes, T, mkt)
    iv = [implied_vol(p, OptionSpec("call", k, T), mkt) for p, k in zip(c, strikes)]
    print(f"{kind + ' ' + str(beta):>10} " + " ".join(f"{v:8.4f}" for v in iv))
