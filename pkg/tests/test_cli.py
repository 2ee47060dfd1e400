import csv
import io
import json

import numpy as np
import pytest
from scipy import special as sc

from bscap import cli
from bscap.capacity import capacity_quadrature
from bscap.dependence import pearson_from_copula
from bscap.copulas import FGM
from bscap.snr import SnrModel


def run(argv, capsys):
    code = cli.main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def rows(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_pdf_known_value(capsys):
    code, out, _ = run(["pdf", "--dep", "independent", "--m", "1", "--snr-hat-db", "0", "--gamma", "1.0"], capsys)
    assert code == 0
    r = rows(out)
    assert list(r[0]) == ["gamma", "pdf"]
    assert float(r[0]["pdf"]) == pytest.approx(2 * sc.k0(2.0), rel=1e-11)


def test_pdf_fgm_zero_matches_independent(capsys):
    args = ["--m", "2", "--snr-hat-db", "3", "--gamma-min", "0.01", "--gamma-max", "30", "--points", "50"]
    _, a, _ = run(["pdf", "--dep", "fgm:0"] + args, capsys)
    _, b, _ = run(["pdf", "--dep", "independent"] + args, capsys)
    assert a == b


def test_pdf_grid_integrates_to_one(capsys):
    code, out, _ = run(["pdf", "--dep", "frank:-30", "--m", "2", "--snr-hat-db", "0", "--grid", "log",
                        "--gamma-min", "1e-6", "--gamma-max", "200", "--points", "3000"], capsys)
    assert code == 0
    data = np.array([[float(r["gamma"]), float(r["pdf"])] for r in rows(out)])
    assert np.trapezoid(data[:, 1], data[:, 0]) == pytest.approx(1.0, abs=1e-3)


def test_pdf_usage_errors(capsys):
    assert run(["pdf", "--dep", "fgm:2", "--m", "1", "--snr-hat-db", "0", "--gamma", "1"], capsys)[0] == 2
    assert run(["pdf", "--dep", "fgm:1", "--m", "1", "--snr-hat-db", "0"], capsys)[0] == 2
    assert run(["pdf", "--dep", "fgm:1", "--m", "1.5", "--snr-hat-db", "0", "--gamma", "1",
                "--method", "closed"], capsys)[0] == 2
    with pytest.raises(SystemExit) as info:
        cli.main(["pdf", "--m", "1"])
    assert info.value.code == 2


def test_capacity_columns_and_api_consistency(capsys):
    code, out, _ = run(["capacity", "--m", "2", "--dep", "fgm:-1", "fgm:1", "--snr-hat-db", "-10", "10",
                        "--methods", "quadrature,asymptotic-high", "asymptotic-low"], capsys)
    assert code == 0
    assert out.splitlines()[0] == ",".join(cli.CAPACITY_COLUMNS)
    r = rows(out)
    assert len(r) == 2 * 2 * 3
    quad = [x for x in r if x["method"] == "quadrature" and x["dep_tag"] == "fgm:1" and x["snr_hat_db"] == "10"][0]
    ref = capacity_quadrature(SnrModel.build(2, "fgm:1", snr_hat_db=10)).value
    assert quad["capacity_bps_hz"] == "%.12g" % ref
    assert quad["rho_induced"] == "%.12g" % pearson_from_copula(FGM(1.0), 2).rho


def test_capacity_fig1a_preset_shape(capsys):
    code, out, _ = run(["sweep", "--preset", "fig1a"], capsys)
    assert code == 0
    r = rows(out)
    for th in ("fgm:-1", "fgm:0", "fgm:1"):
        q = [float(x["capacity_bps_hz"]) for x in r if x["dep_tag"] == th and x["method"] == "quadrature"]
        assert len(q) == 16
        assert all(b > a for a, b in zip(q, q[1:]))
        hi = [float(x["capacity_bps_hz"]) for x in r if x["dep_tag"] == th and x["method"] == "high-snr-fixed-tx"]
        assert abs(q[-1] - hi[-1]) < 0.05


def test_capacity_fig1b_awgn_ratio(capsys):
    code, out, _ = run(["sweep", "--preset", "fig1b"], capsys)
    assert code == 0
    header = out.splitlines()[0].split(",")
    assert header == cli.CAPACITY_COLUMNS + [cli.AWGN_COLUMN]
    r = rows(out)
    low = [x for x in r if x["dep_tag"] == "fgm:1" and x["m"] == "0.5" and x["snr_hat_db"] == "-30"][0]
    assert float(low[cli.AWGN_COLUMN]) > 1.0


def test_capacity_usage_errors(capsys):
    assert run(["capacity", "--m", "2", "--snr-hat-db", "0"], capsys)[0] == 2
    assert run(["capacity", "--m", "2", "--dep", "fgm:0", "--snr-db-step", "0"], capsys)[0] == 2
    assert run(["capacity", "--m", "2", "--dep", "linear:0.3", "--snr-hat-db", "0", "--methods", "mc"], capsys)[0] == 2
    assert run(["capacity", "--m", "2", "--dep", "fgm:0", "--snr-hat-db", "0", "--methods", "exact"], capsys)[0] == 2


def test_keep_going_marks_rows(capsys, caplog, monkeypatch):
    def boom(*a, **k):
        raise ArithmeticError("synthetic")
    monkeypatch.setattr(cli, "capacity_quadrature", boom)
    code, _, _ = run(["capacity", "--m", "2", "--dep", "fgm:0", "--snr-hat-db", "0"], capsys)
    assert code == 3 and "synthetic" in caplog.text
    code, out, _ = run(["capacity", "--m", "2", "--dep", "fgm:0", "--snr-hat-db", "0", "--keep-going"], capsys)
    assert code == 0
    r = rows(out)
    assert r[0]["capacity_bps_hz"] == "nan" and r[0]["err"] == "error:ArithmeticError"


def test_capacity_config_file(tmp_path, capsys):
    cfg = {"snr_hat_db": {"start": -10, "stop": 0, "step": 5}, "m_list": [1], "dependence_list": ["fgm:0.5"],
           "methods": ["quadrature"], "output": str(tmp_path / "out.csv")}
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg))
    assert run(["capacity", "--config", str(path)], capsys)[0] == 0
    r = rows((tmp_path / "out.csv").read_text())
    assert [x["snr_hat_db"] for x in r] == ["-10", "-5", "0"]
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({**cfg, "dependence_list": []}))
    assert run(["capacity", "--config", str(bad)], capsys)[0] == 2
    assert run(["sweep", "--config", str(tmp_path / "missing.json")], capsys)[0] == 2


def test_capacity_byte_identical_across_runs_and_threads(tmp_path, capsys):
    base = ["capacity", "--m", "0.5", "2", "--dep", "fgm:1", "frank:-30", "--snr-db-start", "-20",
            "--snr-db-stop", "20", "--snr-db-step", "10", "--methods", "quadrature", "mc", "--mc-samples", "20000"]
    outs = []
    for threads in ("1", "3", "1"):
        path = tmp_path / f"c{len(outs)}.csv"
        assert run(base + ["--threads", threads, "-o", str(path)], capsys)[0] == 0
        outs.append(path.read_bytes())
    assert outs[0] == outs[1] == outs[2]


def test_correlation_command(capsys):
    code, out, _ = run(["correlation", "--m", "5", "--dep", "fgm:1", "fgm:-1", "frank:30"], capsys)
    assert code == 0
    r = {x["dep_tag"]: x for x in rows(out)}
    assert float(r["fgm:1"]["rho"]) == pytest.approx(0.3, abs=0.01)
    assert float(r["frank:30"]["rho"]) == pytest.approx(0.94, abs=0.01)
    assert float(r["fgm:-1"]["rho"]) == pytest.approx(-float(r["fgm:1"]["rho"]), abs=1e-6)
    assert float(r["bound:upper"]["rho"]) == pytest.approx(1.0, abs=1e-6)
    assert "bound:lower" in r


def test_correlation_fig1c_lower_bound_trend(capsys):
    code, out, _ = run(["sweep", "--preset", "fig1c"], capsys)
    assert code == 0
    lower = [float(x["rho"]) for x in rows(out) if x["dep_tag"] == "bound:lower"]
    assert all(b < a for a, b in zip(lower, lower[1:]))
    assert lower[-1] < -0.95


def test_correlation_usage(capsys):
    assert run(["correlation", "--dep", "fgm:1"], capsys)[0] == 2
    assert run(["correlation", "--m", "1", "--no-bounds"], capsys)[0] == 2


def test_mc_command(capsys):
    code, out, _ = run(["mc", "--dep", "fgm:1", "--m", "1", "--quantity", "correlation", "--n-samples", "100000",
                        "--seed", "4"], capsys)
    assert code == 0
    r = rows(out)[0]
    assert abs(float(r["mean"]) - 0.25) < 4 * float(r["std_error"])
    code, out2, _ = run(["mc", "--dep", "fgm:1", "--m", "1", "--quantity", "correlation", "--n-samples", "100000",
                         "--seed", "4", "--n-streams", "3", "--threads", "2"], capsys)
    assert out == out2
    code, out, _ = run(["mc", "--dep", "independent", "--m", "2", "--quantity", "moment", "--order", "2",
                        "--n-samples", "1000"], capsys)
    assert rows(out)[0]["quantity"] == "moment:2"
    assert run(["mc", "--dep", "linear:0.2", "--m", "1"], capsys)[0] == 2


def test_validate_quick_deterministic(tmp_path, capsys):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert run(["validate", "--quick", "--seed", "9", "-o", str(a)], capsys)[0] == 0
    assert run(["validate", "--quick", "--seed", "9", "-o", str(b)], capsys)[0] == 0
    assert a.read_bytes() == b.read_bytes()
    report = json.loads(a.read_text())
    assert report["passed"] and report["quick"]
    assert all({"name", "value", "tolerance", "passed"} <= set(c) for c in report["checks"])
    assert any(r["flagged"] for r in report["reports"])


def test_validate_failure_exit_code(capsys, monkeypatch):
    from bscap import validate

    def failing(quick=False, seed=0):
        return {"seed": seed, "quick": quick, "passed": False, "reports": [],
                "checks": [{"name": "x", "value": 1.0, "tolerance": 0.0, "passed": False}]}
    monkeypatch.setattr(validate, "run", failing)
    assert run(["validate", "--quick"], capsys)[0] == 1


def test_db_grid_is_exact():
    assert cli.db_grid(-30, 45, 5)[-1] == 45
    assert cli.db_grid(0, 1, 0.1)[3] == 0.3
    with pytest.raises(cli.UsageError):
        cli.db_grid(0, 1, -1)
