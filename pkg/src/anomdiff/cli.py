"""Command-line front end: ``anomdiff <command> [flags]``.

Exit codes: 0 success, 1 invalid input, 2 numerical failure.  Numbers are
written with 17 significant digits.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import asymptotics as asy
from .anomalous import AnomalousModel, model_from_dict
from .calibration import (
    BASE_DRIVERS,
    CALIBRATION_QUAD,
    REPORTED_ROWS,
    SCENARIOS,
    DEConfig,
    ScenarioConfig,
    calibrate,
    rmse_objective,
    synthetic_scenario,
)
from .levy import CGMY, BrownianMotion, StripError, levy_from_dict, risk_neutral_compensate
from .pricing import (
    MarketSetup,
    OptionSpec,
    QuadratureConfig,
    QuadratureError,
    call_prices,
    implied_vol,
    price_call,
    price_digital,
    price_put,
    surface,
    write_surface_csv,
)
from .simulation import MCConfig, PathGrid, UnsupportedDriverError, simulate_paths, terminal_samples, write_paths_csv


class InputError(Exception):
    """Bad flags or configuration (exit code 1)."""


def _g(x) -> str:
    return f"{float(x):.17g}"


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    raise TypeError(type(o).__name__)


def _dump(doc, out):
    text = json.dumps(doc, indent=2, default=_json_default)
    if out:
        Path(out).write_text(text + "\n")
    else:
        print(text)


def _threads(args) -> int:
    if getattr(args, "threads", None) is not None:
        return max(1, args.threads)
    env = os.environ.get("ANOMDIFF_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise InputError("ANOMDIFF_THREADS must be an integer") from None
    return os.cpu_count() or 1


def _range(text: str, name: str) -> np.ndarray:
    """``a:b:step`` (inclusive of ``b``) or a comma list."""
    try:
        if ":" in text:
            a, b, s = (float(v) for v in text.split(":"))
            if s <= 0 or b < a:
                raise ValueError
            n = int(math.floor((b - a) / s + 1e-9))
            return a + s * np.arange(n + 1)
        return np.array([float(v) for v in text.split(",")])
    except ValueError:
        raise InputError(f"--{name}: expected a:b:step or a comma list, got {text!r}") from None


def _load_json(path: str, what: str) -> dict:
    try:
        doc = json.loads(Path(path).read_text())
    except OSError as exc:
        raise InputError(f"cannot read {what} {path!r}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise InputError(f"{what} {path!r} is not valid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise InputError(f"{what} {path!r} must hold a JSON object")
    return doc


def _model(args, compensate: bool = True) -> AnomalousModel:
    doc = _load_json(args.model, "model")
    try:
        m = model_from_dict(doc)
        if compensate:
            m = AnomalousModel(risk_neutral_compensate(m.levy), m.beta, m.kind)
    except (ValueError, ArithmeticError) as exc:
        raise InputError(f"model {args.model!r}: {exc}") from None
    return m


def _market(args) -> MarketSetup:
    try:
        return MarketSetup(args.spot, args.rate)
    except ValueError as exc:
        raise InputError(str(exc)) from None


def _quad(name: str) -> QuadratureConfig:
    return {"default": QuadratureConfig(), "coarse": QuadratureConfig.coarse(), "fast": QuadratureConfig.fast(),
            "calibration": CALIBRATION_QUAD}[name]


# ---------------------------------------------------------------------------
# commands


def cmd_price(args):
    m, mkt, q = _model(args), _market(args), _quad(args.quad)
    try:
        opt = OptionSpec(args.kind, args.strike, args.maturity)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    fn = {"call": price_call, "put": price_put, "digital": price_digital}[args.kind]
    print(_g(fn(m, opt, mkt, q)))


def cmd_smile(args):
    m, mkt, q = _model(args), _market(args), _quad(args.quad)
    K = _range(args.strikes, "strikes")
    prices, vols = surface(m, K, [args.maturity], mkt, q, threads=1)
    _write_grid(args.out, K, [args.maturity], prices, vols)


def cmd_surface(args):
    m, mkt, q = _model(args), _market(args), _quad(args.quad)
    K, T = _range(args.strikes, "strikes"), _range(args.maturities, "maturities")
    prices, vols = surface(m, K, T, mkt, q, threads=_threads(args))
    _write_grid(args.out, K, T, prices, vols)


def _write_grid(out, K, T, prices, vols):
    if out:
        write_surface_csv(out, K, T, prices, vols)
        return
    print("K,T,price,iv")
    for i in np.argsort(T, kind="stable"):
        for j in np.argsort(K):
            print(f"{_g(K[j])},{_g(T[i])},{_g(prices[i, j])},{_g(vols[i, j])}")


def _scenario_from(doc: dict, where: str):
    if "base" not in doc:
        raise InputError(f"{where}: missing field 'base'")
    if doc.get("scenario") not in SCENARIOS:
        raise InputError(f"{where}: field 'scenario' must be one of {SCENARIOS}")
    try:
        base = levy_from_dict(doc["base"])
    except ValueError as exc:
        raise InputError(f"{where}: field 'base': {exc}") from None
    cfg = ScenarioConfig(**{k: float(doc[k]) for k in ("short", "source") if k in doc})
    return base, doc["scenario"], cfg


def _de(args) -> DEConfig:
    try:
        return DEConfig(generations=args.generations, population=args.population, seed=args.seed,
                        workers=_threads(args))
    except ValueError as exc:
        raise InputError(str(exc)) from None


def cmd_calibrate(args):
    base, scen, cfg = _scenario_from(_load_json(args.scenario, "scenario"), args.scenario)
    quotes = synthetic_scenario(base, scen, config=cfg)
    res = calibrate(args.family, args.driver, quotes, _de(args), _quad(args.quad))
    doc = res.to_dict()
    doc["scenario"] = scen
    _dump(doc, args.out)


def cmd_simulate(args):
    m = _model(args)
    if args.terminal:
        y = terminal_samples(m, args.horizon, MCConfig(n_paths=args.terminal, seed=args.seed))
        text = "\n".join(_g(v) for v in y) + "\n"
        if args.out:
            Path(args.out).write_text(text)
        else:
            sys.stdout.write(text)
        return
    if not args.out:
        raise InputError("simulate: --out is required for path output")
    try:
        grid = PathGrid(args.dt, args.horizon)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    paths = simulate_paths(m, grid, MCConfig(n_paths=args.paths, seed=args.seed), args.du)
    _write_paths(args.out, paths)


def _write_paths(out, paths):
    out = Path(out)
    if len(paths) == 1 and out.suffix == ".csv":
        write_paths_csv(out, paths[0])
        return
    out.mkdir(parents=True, exist_ok=True)
    for i, p in enumerate(paths):
        write_paths_csv(out / f"path_{i:04d}.csv", p)


def cmd_moments(args):
    m = _model(args, compensate=not args.raw)
    c = m.cumulants(args.t)
    _dump({"t": args.t, "k1Y": c.k1Y, "k2Y": c.k2Y, "k3Y": c.k3Y, "k4Y": c.k4Y,
           "skew": c.skew, "kurt": c.kurt}, args.out)


def cmd_asymptotics(args):
    m = _model(args)
    K, T = args.strike, args.maturity
    doc = {"strike": K, "maturity": T, "kind": m.kind, "beta": m.beta}
    if args.regime == "long":
        if m.kind == "drd":
            e = asy.call_expansion_drd(m, K, T)
        elif m.kind == "sl":
            e = asy.call_expansion_sl(m, K, T)
        else:
            raise InputError("asymptotics --regime long needs an SL or DRD model")
        vol = asy.iv_longterm(m, K, T)
        doc.update(call_expansion=e.value, leading_term=e.leading_term, correction=e.correction,
                   call_quadrature=float(call_prices(m, [K], T)[0]), constant=vol.constant,
                   iv_lambert=vol.lambert, iv_log_form=vol.log_form,
                   skew_corrected=asy.skew_longterm(m, K, T, "corrected"),
                   skew_printed=asy.skew_longterm(m, K, T, "printed"))
    else:
        doc.update(atm_skew=asy.skew_shortterm_atm(m, T),
                   digital_factor=asy.digital_shorttime_factor(m.beta, 0.5))
    _dump(doc, args.out)


# ---------------------------------------------------------------------------
# reproduce

CGMY_FIG = CGMY(6.51, 18.75, 32.95, 0.5757)
SURFACE_FIGS = {4: ("bm", "sl"), 5: ("bm", "drd"), 6: ("cgmy", "sl"), 7: ("cgmy", "drd")}


def _fig_paths(out: Path, seed: int):
    bm = BrownianMotion(0.4)
    written = []
    for beta in (0.7, 0.95):
        m = AnomalousModel(bm, beta, "sl")
        p = simulate_paths(m, PathGrid(1e-3, 1.0), MCConfig(n_paths=1, seed=seed))[0]
        f = out / f"fig1_paths_beta{beta}.csv"
        write_paths_csv(f, p)
        written.append(f)
    return written


def crossover_data(beta: float = 0.75, t: float = 0.5, sigma: float = 1.0, u_max: float = 20.0, n: int = 401):
    """``Phi_t`` along ``Im z = 1/2`` for SL, DRD and the plain Levy model (all real there)."""
    bm = risk_neutral_compensate(BrownianMotion(sigma))
    u = np.linspace(0.0, u_max, n)
    z = u + 0.5j
    psi = np.real(bm.exponent(z))
    cols = {"u": u, "psi": psi}
    for kind in ("sl", "drd"):
        cols[kind] = np.real(AnomalousModel(bm, beta, kind).char_function(z, t))
    cols["levy"] = np.exp(-t * psi)
    return cols


def _fig_crossover(out: Path, seed: int):
    cols = crossover_data()
    f = out / "fig3_crossover.csv"
    with open(f, "w") as fh:
        fh.write(",".join(cols) + "\n")
        for row in zip(*cols.values()):
            fh.write(",".join(_g(v) for v in row) + "\n")
    return [f]


def _fig_surface(num: int, threads: int):
    drv, kind = SURFACE_FIGS[num]
    levy = risk_neutral_compensate(BrownianMotion(0.4) if drv == "bm" else CGMY_FIG)
    m = AnomalousModel(levy, 0.7, kind)
    K = 60.0 + 5.0 * np.arange(17)
    T = 0.05 * np.arange(1, 41)
    mkt = MarketSetup(100.0, 0.0)
    return m, K, T, surface(m, K, T, mkt, threads=threads)


def _table(num: int, seed: int, generations: int, threads: int, quad: QuadratureConfig):
    scen = SCENARIOS[num - 1]
    rows = []
    for driver in ("vg", "nig"):
        quotes = synthetic_scenario(BASE_DRIVERS[driver], scen)
        for family in ("levy", "sl", "drd"):
            res = calibrate(family, driver, quotes, DEConfig(generations=generations, seed=seed, workers=threads), quad)
            k, s, t, b, rep = REPORTED_ROWS[(scen, family, driver)]
            ref = [k, s, t] + ([] if family == "levy" else [b])
            doc = res.to_dict()
            doc.update(scenario=scen, reported={"params": ref, "rmse": rep},
                       rmse_at_reported=rmse_objective(ref, family, driver, quotes, QuadratureConfig()))
            rows.append(doc)
    return {"table": num, "scenario": scen, "rows": rows}


def cmd_reproduce(args):
    if (args.figure is None) == (args.table is None):
        raise InputError("reproduce: give exactly one of --figure or --table")
    out = Path(args.out)
    if args.table is not None:
        if args.table not in (1, 2, 3):
            raise InputError("--table must be 1, 2 or 3")
        _dump(_table(args.table, args.seed, args.generations, _threads(args), _quad(args.quad)), out)
        return
    if args.figure == 1:
        out.mkdir(parents=True, exist_ok=True)
        files = _fig_paths(out, args.seed)
    elif args.figure == 3:
        out.mkdir(parents=True, exist_ok=True)
        files = _fig_crossover(out, args.seed)
    elif args.figure in SURFACE_FIGS:
        _, K, T, (p, v) = _fig_surface(args.figure, _threads(args))
        if out.suffix != ".csv":
            out.mkdir(parents=True, exist_ok=True)
            out = out / f"fig{args.figure}_surface.csv"
        write_surface_csv(out, K, T, p, v)
        files = [out]
    else:
        raise InputError("--figure must be one of 1, 3, 4, 5, 6, 7")
    for f in files:
        print(f)


# ---------------------------------------------------------------------------
# parser


def _common_model(p, market=True):
    p.add_argument("--model", required=True, help="model JSON file")
    if market:
        p.add_argument("--spot", type=float, default=100.0)
        p.add_argument("--rate", type=float, default=0.0)
        p.add_argument("--quad", choices=["default", "coarse", "fast", "calibration"], default="default")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="anomdiff", description="Anomalous-diffusion option pricing toolkit")
    ap.add_argument("--seed", type=int, default=0, help="random seed (simulation, calibration)")
    ap.add_argument("--threads", type=int, default=None, help="worker threads (default: ANOMDIFF_THREADS or all cores)")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("price", help="price one option")
    _common_model(p)
    p.add_argument("--kind", choices=["call", "put", "digital"], default="call")
    p.add_argument("--strike", type=float, required=True)
    p.add_argument("--maturity", type=float, required=True)
    p.set_defaults(fn=cmd_price)

    p = sub.add_parser("smile", help="prices and implied vols across strikes at one maturity")
    _common_model(p)
    p.add_argument("--maturity", type=float, required=True)
    p.add_argument("--strikes", required=True, help="a:b:step or list")
    p.add_argument("--out")
    p.set_defaults(fn=cmd_smile)

    p = sub.add_parser("surface", help="implied-vol surface CSV (K,T,price,iv)")
    _common_model(p)
    p.add_argument("--strikes", required=True)
    p.add_argument("--maturities", required=True)
    p.add_argument("--out")
    p.set_defaults(fn=cmd_surface)

    p = sub.add_parser("calibrate", help="Differential Evolution fit to a synthetic scenario")
    p.add_argument("--scenario", required=True, help='JSON {"base": <levy>, "scenario": "baseline"|...}')
    p.add_argument("--family", choices=["levy", "sl", "drd"], required=True)
    p.add_argument("--driver", choices=["vg", "nig"], required=True)
    p.add_argument("--generations", type=int, default=100)
    p.add_argument("--population", type=int, default=None)
    p.add_argument("--quad", choices=["calibration", "coarse", "fast", "default"], default="calibration")
    p.add_argument("--out")
    p.set_defaults(fn=cmd_calibrate)

    p = sub.add_parser("simulate", help="sample paths (CSV) or terminal values")
    _common_model(p, market=False)
    p.add_argument("--horizon", type=float, default=1.0)
    p.add_argument("--dt", type=float, default=1e-3)
    p.add_argument("--du", type=float, default=None, help="operational step of L (default dt)")
    p.add_argument("--paths", type=int, default=1)
    p.add_argument("--terminal", type=int, default=0, help="draw this many exact terminal values instead")
    p.add_argument("--out")
    p.set_defaults(fn=cmd_simulate)

    p = sub.add_parser("moments", help="cumulants, skewness and kurtosis of Y_t")
    _common_model(p, market=False)
    p.add_argument("--t", type=float, required=True)
    p.add_argument("--raw", action="store_true", help="use the driver as given (no compensation)")
    p.add_argument("--out")
    p.set_defaults(fn=cmd_moments)

    p = sub.add_parser("asymptotics", help="large- or small-maturity expansions (S0 = 1 units)")
    _common_model(p, market=False)
    p.add_argument("--strike", type=float, default=1.0, help="moneyness K / S0")
    p.add_argument("--maturity", type=float, required=True)
    p.add_argument("--regime", choices=["long", "short"], default="long")
    p.add_argument("--out")
    p.set_defaults(fn=cmd_asymptotics)

    p = sub.add_parser("reproduce", help="regenerate figure data or a calibration table")
    p.add_argument("--figure", type=int)
    p.add_argument("--table", type=int)
    p.add_argument("--generations", type=int, default=100)
    p.add_argument("--quad", choices=["calibration", "coarse", "fast", "default"], default="calibration")
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_reproduce)
    return ap


def run(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 1
    try:
        args.fn(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (StripError, UnsupportedDriverError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (QuadratureError, ArithmeticError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
