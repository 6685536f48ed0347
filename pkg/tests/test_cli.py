import csv
import json

import numpy as np
import pytest

from nbpmt import cli
from nbpmt.errors import NumericalError

CHAIN = ["--iters", "300", "--burnin", "150"]


def _read(path):
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


@pytest.fixture
def vector(tmp_csv):
    x = [0.1, -0.3, 6.0, 0.5, -7.2, 1.1, 0.0, 2.2, -0.8, 0.4]
    return tmp_csv("x.csv", ["z"] + [repr(v) for v in x])


def test_simulate(tmp_path, capsys):
    out = tmp_path / "sim.csv"
    rc = cli.main(["simulate", "--n", "40", "--p-grid", "0.1,0.2", "--methods", "nbp-es,bo,bh",
                   "--replicates", "2", "--out", str(out)] + CHAIN)
    assert rc == 0
    rows = _read(out)
    assert len(rows) == 2 * 3 * 2
    assert list(rows[0]) == list(cli.ex.COLUMNS)
    summ = json.loads(out.with_suffix(".json").read_text())
    assert summ["n"] == 40 and len(summ["groups"]) == 6
    assert "wrote 12 rows" in capsys.readouterr().out


def test_shrink(vector, tmp_path, capsys):
    for method in ("es", "reml", "fixed:0.2"):
        out = tmp_path / f"{method.replace(':', '_')}.csv"
        assert cli.main(["shrink", "--input", str(vector), "--method", method, "--out", str(out)]) == 0
        rows = _read(out)
        assert len(rows) == 10
        w = np.array([float(r["weight"]) for r in rows])
        assert np.all((w >= 0) & (w <= 1))
        assert rows[4]["reject"] == "true" and rows[6]["reject"] == "false"
        info = json.loads(capsys.readouterr().out)
        if method.startswith("fixed"):
            assert info["a"] == 0.2


def test_mcmc(vector, tmp_path, capsys):
    out = tmp_path / "m.csv"
    assert cli.main(["mcmc", "--input", str(vector), "--prior", "tc", "--out", str(out)] + CHAIN) == 0
    rows = _read(out)
    assert len(rows) == 10 and "shrink_weight_mcse" in rows[0]
    info = json.loads(capsys.readouterr().out)
    assert info["a_draws_kept"] == 150 and 0 < info["a_mean"] <= 1


def test_prostate(tmp_csv, tmp_path, capsys):
    g = np.random.default_rng(3)
    lines = ["gene,a,b,c,d,e,f"]
    for i in range(12):
        lines.append(f"g{i}," + ",".join(repr(float(v)) for v in g.normal(size=6)))
    expr = tmp_csv("e.csv", lines)
    labels = tmp_csv("l.csv", ["label", "control", "control", "control", "cancer", "cancer", "cancer"])
    out = tmp_path / "p.csv"
    assert cli.main(["prostate", "--expr", str(expr), "--labels", str(labels), "--method", "bh",
                     "--out", str(out)]) == 0
    rows = _read(out)
    assert list(rows[0]) == ["gene_id", "z_score", "theta_hat", "selected"] and len(rows) == 12
    assert json.loads(capsys.readouterr().out)["method"] == "BH"


def test_bounds(tmp_path, capsys):
    out = tmp_path / "b.csv"
    assert cli.main(["bounds", "--a", "0.1", "--b", "0.75", "--x-grid=-2:2:0.5", "--p", "0.1",
                     "--out", str(out)]) == 0
    rows = _read(out)
    assert len(rows) == 9
    for r in rows:
        assert float(r["shrink_weight"]) <= float(r["bound_ew"]) + 1e-8
        assert float(r["pr_kappa_lt_eps"]) <= float(r["bound_tail_small"]) + 1e-8
    info = json.loads(capsys.readouterr().out)
    assert info["type2_lower"] <= info["type2_upper"]
    out2 = tmp_path / "b2.csv"
    assert cli.main(["bounds", "--a", "1.5", "--b", "0.75", "--x-grid", "0:1:0.5", "--out", str(out2)]) == 0
    assert _read(out2)[0]["bound_tail_small"] == "nan"


def test_bad_input_returns_2(tmp_csv, tmp_path, capsys):
    out = str(tmp_path / "o.csv")
    assert cli.main(["shrink", "--input", str(tmp_path / "missing.csv"), "--out", out]) == 2
    bad = tmp_csv("bad.csv", ["z", "1.0", "oops"])
    assert cli.main(["shrink", "--input", str(bad), "--out", out]) == 2
    assert "row 3" in capsys.readouterr().err
    good = tmp_csv("g.csv", ["1.0", "2.0"])
    assert cli.main(["shrink", "--input", str(good), "--method", "magic", "--out", out]) == 2
    assert cli.main(["bounds", "--a", "0.1", "--b", "0.75", "--x-grid", "1:0:0.1", "--out", out]) == 2
    assert cli.main(["simulate", "--n", "40", "--p-grid", "1.5", "--out", out]) == 2


def test_numerical_error_returns_3(vector, tmp_path, monkeypatch, capsys):
    def boom(*args, **kwargs):
        raise NumericalError("chain diverged")

    monkeypatch.setattr(cli, "run_chain", boom)
    assert cli.main(["mcmc", "--input", str(vector), "--out", str(tmp_path / "m.csv")]) == 3
    assert "chain diverged" in capsys.readouterr().err


def test_parse_helpers():
    assert cli._range("0:1:0.25").tolist() == [0.0, 0.25, 0.5, 0.75, 1.0]
    with pytest.raises(SystemExit):
        cli.build_parser().parse_args(["mcmc", "--input", "x", "--prior", "flat", "--out", "o"])
