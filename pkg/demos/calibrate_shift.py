"""Fit the SL-VG model to the synthetic 12-month shifted smile.

A full fit takes a few minutes on one core; lower GENERATIONS for a quick look.

Run:  python demos/calibrate_shift.py
"""
from anomdiff.calibration import BASE_DRIVERS, REPORTED_ROWS, DEConfig, calibrate, synthetic_scenario

GENERATIONS = 30

quotes = synthetic_scenario(BASE_DRIVERS["vg"], "shift_12m")
for family in ("levy", "sl"):
    res = calibrate(family, "vg", quotes, DEConfig(generations=GENERATIONS, seed=0))
    k, s, t, b, rmse = REPORTED_ROWS[("shift_12m", family, "vg")]
    print(f"{family}-vg: {res.params} beta={res.beta:.4f} rmse={res.rmse:.4f} "
          f"(reported beta {b}, rmse {rmse})")
