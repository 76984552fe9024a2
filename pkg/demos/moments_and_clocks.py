"""Cumulants of the DRD model and the Beta law of its clock.

Run:  python demos/moments_and_clocks.py
"""
from scipy import stats

from anomdiff import AnomalousModel, BrownianMotion
from anomdiff.anomalous import drd_moment_limits
from anomdiff.simulation import path_clocks

m = AnomalousModel(BrownianMotion(0.3, drift=0.2), 0.6, "drd")
for t in (0.1, 1.0, 10.0, 1e3, 1e6):
    c = m.cumulants(t)
    print(f"t={t:>9g}  mean {c.k1Y:11.4g}  var {c.k2Y:11.4g}  skew {c.skew:8.4f}  kurt {c.kurt:8.4f}")
print("large-t limits (skew, kurt):", drd_moment_limits(0.6, m.levy.cumulants())[:2])

_, LH = path_clocks(0.6, [1.0], 20_000, seed=3)
print("KS of path-based LH_1 against Beta(0.6, 0.4):", stats.kstest(LH[:, 0], stats.beta(0.6, 0.4).cdf))
