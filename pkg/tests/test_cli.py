import json

import pytest

from cliffxeb import cli
from cliffxeb.records import PointRecord, PointStore, to_csv

CONFIG = """
[ensemble]
topology = chain1d
n = 3
[noise]
p1 = 1e-3
p2 = 1e-2
[sweep]
cycles = 2-10:2
[budget]
circuits = 30
shots = 100
[seed]
master_seed = 7
"""


@pytest.fixture
def cfg(tmp_path):
    p = tmp_path / "c.ini"
    p.write_text(CONFIG)
    return p


def run(*argv):
    return cli.main([str(a) for a in argv])


def test_run_outputs(cfg, tmp_path, capsys):
    out = tmp_path / "out"
    assert run("run", cfg, out, "--quiet") == 0
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["master_seed"] == 7 and manifest["artifact_version"]
    assert set(manifest["points"]) == {f"noisy:{m}" for m in (2, 4, 6, 8, 10)}
    assert len((out / "points.jsonl").read_text().splitlines()) == 5
    summary = json.loads(capsys.readouterr().out)
    assert 0 < summary["fit"]["p"] <= 1 and "A" in summary["free_offset"]


def test_rerun_and_workers_byte_identical(cfg, tmp_path):
    outs = []
    for i, workers in enumerate((1, 8, 1)):
        out = tmp_path / f"o{i}"
        assert run("run", cfg, out, "--workers", workers, "--quiet", "--twin") == 0
        outs.append((out / "points.jsonl").read_bytes())
    assert outs[0] == outs[1] == outs[2]


def test_resume_does_not_recompute(cfg, tmp_path, monkeypatch):
    full = tmp_path / "full"
    run("run", cfg, full, "--quiet")
    part = tmp_path / "part"
    run("run", cfg, part, "--quiet")
    lines = (part / "points.jsonl").read_bytes().splitlines(keepends=True)
    (part / "points.jsonl").write_bytes(b"".join(lines[:2]) + lines[2][:10])  # torn write
    computed = []
    real = cli.run_experiment

    def spy(config, skip=None, on_point=None, noiseless_twin=False):
        return real(config, skip, lambda p, ideal: (computed.append(p.m), on_point(p, ideal)), noiseless_twin)

    monkeypatch.setattr(cli, "run_experiment", spy)
    assert run("run", cfg, part, "--quiet") == 0
    assert computed == [6, 8, 10]
    assert (part / "points.jsonl").read_bytes() == (full / "points.jsonl").read_bytes()


def test_out_dir_config_mismatch(cfg, tmp_path, capsys):
    out = tmp_path / "out"
    run("run", cfg, out, "--quiet")
    assert run("run", cfg, out, "--seed", 8, "--quiet") == 2
    assert "out_dir" in capsys.readouterr().err


def test_config_error_exit(tmp_path, capsys):
    p = tmp_path / "bad.ini"
    p.write_text("[ensemble]\nn = 3\nqubits = 4\n")
    assert run("run", p, tmp_path / "o") == 2
    assert "ensemble.qubits" in capsys.readouterr().err
    assert run("run", tmp_path / "missing.ini", tmp_path / "o") == 2


def _synthetic(tmp_path, f, ms=range(2, 20)):
    store = PointStore(tmp_path / "syn.jsonl")
    for m in ms:
        store.append(PointRecord("chain1d", 3, 0.0, 0.0, m, f(m), 0.0, 1, 1))
    return store.path


def test_fit_exact_synthetic(tmp_path, capsys):
    path = _synthetic(tmp_path, lambda m: 0.8 * 0.95**m)
    assert run("fit", path, "--json") == 0
    fit = json.loads(capsys.readouterr().out)["fit"]
    assert abs(fit["p"] - 0.95) < 1e-12 and abs(fit["B"] - 0.8) < 1e-12


def test_fit_infeasible(tmp_path):
    path = _synthetic(tmp_path, lambda m: 0.9**m)
    assert run("fit", path, "--window", "30:40") == 3


def test_fit_flags_mixing_dominated(tmp_path, capsys):
    path = _synthetic(tmp_path, lambda m: 0.5**m)
    assert run("fit", path, "--p-dem", 0.5, "--mix", 0.7, "--json") == 0
    report = json.loads(capsys.readouterr().out)["comparison"]
    assert report["valid"] is False
    assert run("fit", path, "--p-dem", 0.5, "--mix", 0.7) == 0
    assert "INVALID" in capsys.readouterr().out


def test_fit_prints_free_offset(cfg, tmp_path, capsys):
    out = tmp_path / "out"
    run("run", cfg, out, "--quiet")
    capsys.readouterr()
    assert run("fit", out) == 0
    text = capsys.readouterr().out
    assert "A = " in text and "p_dem" in text


def test_export_csv_roundtrip_fit(cfg, tmp_path, capsys):
    out = tmp_path / "out"
    run("run", cfg, out, "--quiet", "--twin")
    csv_path = tmp_path / "p.csv"
    assert run("export", out, "--format", "csv", "-o", csv_path) == 0
    header = csv_path.read_text().splitlines()[0]
    assert header == "topology,n,p1,p2,m,q_hat,stderr,circuits,shots"
    capsys.readouterr()
    run("fit", out, "--json", "--p-dem", 0.97)
    a = json.loads(capsys.readouterr().out)
    run("fit", csv_path, "--json", "--p-dem", 0.97)
    b = json.loads(capsys.readouterr().out)
    assert a == b


def test_export_empty_and_svg(cfg, tmp_path, capsys):
    empty = tmp_path / "empty"
    empty.mkdir()
    assert run("export", empty) == 0
    assert capsys.readouterr().out == to_csv([])
    out = tmp_path / "out"
    run("run", cfg, out, "--quiet", "--twin")
    svg = tmp_path / "a.svg"
    assert run("export", out, "--format", "svg", "-o", svg) == 0
    assert svg.read_text().startswith("<?xml")
    with pytest.raises(SystemExit):
        run("export", out, "--format", "png")


def test_gap_examples(capsys):
    assert run("gap", "--measure", "uniform-c1", "--json") == 0
    assert json.loads(capsys.readouterr().out)["sigma3"] <= 1e-10
    assert run("gap", "--measure", "identity", "--n", 1, "--json") == 0
    assert json.loads(capsys.readouterr().out)["sigma3"] == pytest.approx(1.0)
    assert run("gap", "--topology", "twirl_star", "--n", 2, "--k", 1) == 0
    assert "sigma_3 = 0.098821" in capsys.readouterr().out
    assert run("gap", "--n", 3) == 2


def test_verify(capsys, monkeypatch):
    assert run("verify") == 0
    assert capsys.readouterr().out.count("PASS") == 3
    from cliffxeb import verification

    monkeypatch.setattr(verification, "run_all",
                        lambda quick: [verification.CheckResult("x", False, "forced")])
    assert run("verify") == 4


def test_mix(tmp_path, capsys):
    p = tmp_path / "m.ini"
    p.write_text(CONFIG.replace("cycles = 2-10:2", "cycles = 1-6").replace("circuits = 30", "circuits = 4000")
                 .replace("shots = 100", "shots = 1"))
    out = tmp_path / "mix"
    assert run("mix", p, out, "--quiet") == 0
    captured = capsys.readouterr()
    assert "ignored" in captured.err
    summary = json.loads(captured.out)
    assert 0 < summary["r"] < 1 and summary["r_ci95"][0] < summary["r"] < summary["r_ci95"][1]
    records = [json.loads(l) for l in (out / "points.jsonl").read_text().splitlines()]
    assert all(r["p1"] == 0 and r["p2"] == 0 for r in records)


def test_mix_indeterminate(tmp_path, capsys):
    p = tmp_path / "m.ini"
    p.write_text(CONFIG.replace("cycles = 2-10:2", "cycles = 20-22").replace("circuits = 30", "circuits = 20"))
    assert run("mix", p, tmp_path / "mix", "--quiet") == 3
