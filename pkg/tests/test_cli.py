import json

import pytest

from vsgcc import cli, config, params


def _ini(tmp_path, p, name="p.ini"):
    path = tmp_path / name
    path.write_text(config.dumps(p))
    return str(path)


def test_design_pinned_kvi(capsys):
    assert cli.main(["design", "--kvi", "800"]) == 0
    out = capsys.readouterr().out
    assert "1+1.1358" in out and "-135 deg" in out


def test_design_unreachable_exit_code(capsys):
    assert cli.main(["design", "--target-rise-ms", "0"]) == cli.EXIT_TARGET


def test_design_strong_grid_flags_slow_pole(tmp_path, capsys):
    path = _ini(tmp_path, params.base().replace(Xg=0.04))
    assert cli.main(["design", "--config", path, "--kvi", "800", "--out", str(tmp_path)]) == 0
    assert "slow dominant pole" in capsys.readouterr().out
    assert "slow_pole,1" in (tmp_path / "design.csv").read_text()


def test_config_error_exit_code(tmp_path, capsys):
    path = tmp_path / "bad.ini"
    path.write_text(config.dumps(params.base()).replace("x_s =", "x_sss ="))
    assert cli.main(["design", "--config", str(path)]) == cli.EXIT_CONFIG
    err = capsys.readouterr().err
    assert "bad.ini:" in err and "x_sss" in err


def test_numerical_failure_exit_code(tmp_path):
    assert cli.main(["analyze", "--what", "poles", "--full", "--p0", "9", "--out", str(tmp_path)]) == cli.EXIT_NUMERIC


@pytest.mark.parametrize("what, files", [("poles", ["poles.csv"]), ("rootlocus", ["rootlocus.csv"]),
                                         ("nyquist", ["nyquist.csv", "margins.csv"]), ("clfr", ["clfr.csv"])])
def test_analyze_is_deterministic(tmp_path, what, files):
    args = ["analyze", "--what", what, "--points", "200", "--count", "20"]
    assert cli.main(args + ["--out", str(tmp_path / "a")]) == 0
    assert cli.main(args + ["--out", str(tmp_path / "b")]) == 0
    for f in files:
        a = (tmp_path / "a" / f).read_bytes()
        assert a == (tmp_path / "b" / f).read_bytes()
        assert len(a.splitlines()) > 1


def test_nyquist_negative_branch_margin(tmp_path, capsys):
    assert cli.main(["analyze", "--what", "nyquist", "--out", str(tmp_path)]) == 0
    rows = (tmp_path / "margins.csv").read_text().splitlines()
    neg = [float(r.split(",")[2]) for r in rows[1:] if r.startswith("negative")]
    assert min(neg) == pytest.approx(7.6, abs=1.0)


def test_rootlocus_without_feeding_gain_is_unstable(tmp_path, capsys):
    path = _ini(tmp_path, params.base().with_kc(0j))
    assert cli.main(["analyze", "--config", path, "--what", "rootlocus", "--range", "8", "80000",
                     "--out", str(tmp_path)]) == 0
    worst = float(capsys.readouterr().out.split(":")[-1])
    assert worst > 0


def test_simulate_preset_outputs(tmp_path):
    assert cli.main(["simulate", "--preset", "config_v_step_iv", "--out", str(tmp_path)]) == 0
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert summary["unstable"] is False
    steps = {s["channel"]: s for s in summary["steps"]}
    assert steps["Vc_mag"]["final"] == pytest.approx(1.1, abs=1e-3)
    header = (tmp_path / "timeseries.csv").read_text().splitlines()[0]
    assert header.startswith("t,v_cd,v_cq")
    # the written scenario reproduces the run
    assert cli.main(["simulate", "--scenario", str(tmp_path / "scenario.ini"), "--out", str(tmp_path / "again")]) == 0
    assert (tmp_path / "timeseries.csv").read_bytes() == (tmp_path / "again" / "timeseries.csv").read_bytes()


def test_simulate_divergence_is_not_an_error(tmp_path):
    p = params.base().with_real_kc(0.05)
    sc_text = config.dumps(p) + "\n[scenario]\nduration = 1.5\nevents =\n    0.1 step_v_ref 0.1\n"
    path = tmp_path / "div.ini"
    path.write_text(sc_text)
    assert cli.main(["simulate", "--scenario", str(path), "--out", str(tmp_path)]) == 0
    assert json.loads((tmp_path / "summary.json").read_text())["unstable"] is True


def test_identify(tmp_path):
    assert cli.main(["identify", "--params", "placed", "--freqs", "5,20", "--window", "1",
                     "--channels", "v_d", "--out", str(tmp_path)]) == 0
    rows = (tmp_path / "identified.csv").read_text().splitlines()
    assert len(rows) == 3


def test_verify_filter_passes(capsys):
    assert cli.main(["verify", "--filter", "pole placement"]) == 0
    assert "C1 pole placement gain: PASS" in capsys.readouterr().out


def test_verify_catches_tampered_parameters(monkeypatch, capsys):
    tampered = params.VsgParams(kip=0.6)
    monkeypatch.setattr(params, "base", lambda: tampered)
    assert cli.main(["verify", "--filter", "1"]) != 0
    assert "FAIL" in capsys.readouterr().out


def test_verify_unknown_filter():
    assert cli.main(["verify", "--filter", "no such criterion"]) == cli.EXIT_CONFIG
