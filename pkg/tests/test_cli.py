import json
import math

import numpy as np
import pytest

from anomdiff.anomalous import AnomalousModel, model_from_json
from anomdiff.cli import crossover_data, run
from anomdiff.levy import BrownianMotion, VarianceGamma, risk_neutral_compensate
from anomdiff.pricing import MarketSetup, OptionSpec, price_call


@pytest.fixture
def model_file(tmp_path):
    m = AnomalousModel(VarianceGamma(0.2, 0.3, -0.3), 0.7, "drd")
    f = tmp_path / "model.json"
    f.write_text(m.to_json())
    return f


def _price_args(model_file, *extra):
    return ["price", "--model", str(model_file), "--kind", "call", "--strike", "100", "--maturity", "0.5",
            "--spot", "100", "--rate", "0", *extra]


def test_price(model_file, capsys):
    assert run(_price_args(model_file)) == 0
    out = capsys.readouterr().out.strip()
    m = AnomalousModel(risk_neutral_compensate(VarianceGamma(0.2, 0.3, -0.3)), 0.7, "drd")
    assert float(out) == price_call(m, OptionSpec("call", 100.0, 0.5), MarketSetup(100.0, 0.0))
    # 17 significant digits round-trip the double
    assert repr(float(out)) == repr(float(f"{float(out):.17g}"))


def test_model_json_round_trip(model_file):
    m = model_from_json(model_file.read_text())
    assert model_from_json(m.to_json()) == m
    assert m.to_json() == model_file.read_text()


@pytest.mark.parametrize("doc,field", [
    ({"kind": "drd", "beta": 0.7}, "levy"),
    ({"kind": "sl", "levy": {"variant": "vg", "params": {"kappa": 0.2, "sigma": 0.3}}, "beta": 0.5}, "params.theta"),
    ({"kind": "xx", "levy": {"variant": "bm", "params": {"sigma": 0.3}}}, "kind"),
    ({"kind": "sl", "levy": {"variant": "bm", "params": {"sigma": 0.3}}}, "beta"),
])
def test_malformed_model_exit_1(tmp_path, capsys, doc, field):
    f = tmp_path / "bad.json"
    f.write_text(json.dumps(doc))
    assert run(_price_args(f)) == 1
    assert field in capsys.readouterr().err


def test_invalid_json_and_flags(tmp_path, model_file, capsys):
    f = tmp_path / "bad.json"
    f.write_text("{not json")
    assert run(_price_args(f)) == 1
    assert run(["price", "--model", str(model_file)]) == 1
    assert run(["surface", "--model", str(model_file), "--strikes", "1:0:1", "--maturities", "1"]) == 1
    assert run(["nonsense"]) == 1


def test_numerical_failure_exit_2(tmp_path, capsys):
    # a non-positive price has no implied vol; unsupported drivers are input errors
    cg = {"kind": "drd", "beta": 0.7, "levy": {"variant": "cgmy", "params": {"C": 1, "G": 5, "M": 5, "Y": 0.5}}}
    f = tmp_path / "cgmy.json"
    f.write_text(json.dumps(cg))
    assert run(["simulate", "--model", str(f), "--terminal", "10"]) == 1
    assert run(_price_args(f, "--quad", "coarse")) in (0, 2)


def test_smile_and_surface(model_file, tmp_path, capsys):
    assert run(["smile", "--model", str(model_file), "--maturity", "0.5", "--strikes", "90:110:10"]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert lines[0] == "K,T,price,iv" and len(lines) == 4
    out = tmp_path / "surf.csv"
    assert run(["--threads", "2", "surface", "--model", str(model_file), "--strikes", "90,100",
                "--maturities", "0.25:0.5:0.25", "--out", str(out)]) == 0
    rows = out.read_text().strip().splitlines()
    assert rows[0] == "K,T,price,iv" and len(rows) == 5
    Ts = [float(r.split(",")[1]) for r in rows[1:]]
    assert Ts == sorted(Ts)


def test_simulate_is_seeded(model_file, tmp_path):
    a, b, c = (tmp_path / n for n in ("a.txt", "b.txt", "c.txt"))
    assert run(["--seed", "5", "simulate", "--model", str(model_file), "--terminal", "50", "--out", str(a)]) == 0
    assert run(["--seed", "5", "simulate", "--model", str(model_file), "--terminal", "50", "--out", str(b)]) == 0
    assert run(["--seed", "6", "simulate", "--model", str(model_file), "--terminal", "50", "--out", str(c)]) == 0
    assert a.read_text() == b.read_text() != c.read_text()
    assert len(a.read_text().split()) == 50
    p = tmp_path / "p.csv"
    assert run(["simulate", "--model", str(model_file), "--dt", "0.01", "--out", str(p)]) == 0
    assert p.read_text().startswith("t,L,H,LH,V,Y\n")


def test_moments(model_file, capsys):
    assert run(["moments", "--model", str(model_file), "--t", "2"]) == 0
    doc = json.loads(capsys.readouterr().out)
    m = AnomalousModel(risk_neutral_compensate(VarianceGamma(0.2, 0.3, -0.3)), 0.7, "drd")
    assert doc["k2Y"] == m.cumulants(2.0).k2Y


def test_asymptotics(tmp_path, capsys):
    f = tmp_path / "bm.json"
    f.write_text(AnomalousModel(BrownianMotion(2.0), 0.7, "drd").to_json())
    assert run(["asymptotics", "--model", str(f), "--strike", "1.2", "--maturity", "50"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["call_expansion"] == pytest.approx(doc["call_quadrature"], abs=2e-3)
    assert run(["asymptotics", "--model", str(f), "--maturity", "0.01", "--regime", "short"]) == 0


def test_threads_env(model_file, tmp_path, monkeypatch):
    monkeypatch.setenv("ANOMDIFF_THREADS", "x")
    assert run(["surface", "--model", str(model_file), "--strikes", "100", "--maturities", "1"]) == 1
    monkeypatch.setenv("ANOMDIFF_THREADS", "2")
    assert run(["surface", "--model", str(model_file), "--strikes", "100", "--maturities", "1",
                "--out", str(tmp_path / "s.csv")]) == 0


def test_calibrate_command(tmp_path):
    sc = tmp_path / "scen.json"
    sc.write_text(json.dumps({"base": VarianceGamma(0.2, 0.3, -0.3).to_dict(), "scenario": "baseline"}))
    out = tmp_path / "res.json"
    assert run(["calibrate", "--scenario", str(sc), "--family", "levy", "--driver", "vg",
                "--generations", "5", "--out", str(out)]) == 0
    doc = json.loads(out.read_text())
    assert set(doc) >= {"family", "params", "beta", "rmse", "generations"}
    sc.write_text(json.dumps({"base": VarianceGamma(0.2, 0.3, -0.3).to_dict(), "scenario": "shift_6m"}))
    assert run(["calibrate", "--scenario", str(sc), "--family", "levy", "--driver", "vg", "--out", str(out)]) == 1


def test_reproduce_figures(tmp_path, capsys):
    assert run(["reproduce", "--figure", "1", "--out", str(tmp_path / "f1")]) == 0
    assert sorted(p.name for p in (tmp_path / "f1").iterdir()) == ["fig1_paths_beta0.7.csv", "fig1_paths_beta0.95.csv"]
    assert run(["reproduce", "--figure", "3", "--out", str(tmp_path / "f3")]) == 0
    head = (tmp_path / "f3" / "fig3_crossover.csv").read_text().splitlines()[0]
    assert head == "u,psi,sl,drd,levy"
    assert run(["reproduce", "--figure", "2", "--out", str(tmp_path)]) == 1
    assert run(["reproduce", "--out", str(tmp_path)]) == 1


def test_crossover_curves():
    d = crossover_data()
    # Mittag-Leffler starts below the exponential and ends above it: one crossing
    diff = d["sl"] - d["levy"]
    sign = np.sign(diff[1:])
    assert np.count_nonzero(np.diff(sign)) == 1
    for k in ("sl", "drd", "levy"):
        assert np.all(d[k] > 0) and np.all(np.diff(d[k]) < 0)
