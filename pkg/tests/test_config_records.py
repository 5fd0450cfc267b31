import json

import pytest

from cliffxeb.config import ConfigError, load_config, parse_cycles, parse_window
from cliffxeb.engine import ExperimentConfig, XebPoint
from cliffxeb.ensembles import EnsembleSpec
from cliffxeb.noise import NoiseModel
from cliffxeb.records import PointRecord, PointStore, load_records, to_csv, to_svg

BASIC = """
[ensemble]
topology = chain1d
n = 3
[noise]
p1 = 1e-3
p2 = 1e-2
[sweep]
cycles = 2-6:2, 9
window = 2:9
[budget]
circuits = 10
shots = 20
[seed]
master_seed = 5
"""


def write(tmp_path, text, name="c.ini"):
    p = tmp_path / name
    p.write_text(text)
    return p


def test_parse_helpers():
    assert parse_cycles("2-6:2, 9") == (2, 4, 6, 9)
    assert parse_cycles("2-50") == tuple(range(2, 51))
    assert parse_window("5:40") == (5, 40)
    assert parse_window("") is None
    with pytest.raises(ValueError):
        parse_window("40:5")


def test_load_basic(tmp_path):
    cfg = load_config(write(tmp_path, BASIC))
    e = cfg.experiment
    assert e.ensemble == EnsembleSpec.chain(3)
    assert e.noise == NoiseModel(1e-3, 1e-2)
    assert e.cycle_counts == (2, 4, 6, 9) and cfg.window == (2, 9)
    assert (e.circuits, e.shots, e.master_seed, e.workers) == (10, 20, 5, 1)
    assert cfg.noise_keys_set


def test_overrides_and_hash(tmp_path):
    p = write(tmp_path, BASIC)
    a, b = load_config(p), load_config(p, workers=8)
    assert b.experiment.workers == 8 and a.config_hash() == b.config_hash()
    assert load_config(p, seed=6).config_hash() != a.config_hash()


def test_defaults(tmp_path):
    cfg = load_config(write(tmp_path, "[ensemble]\nn = 2\n")).experiment
    assert cfg.cycle_counts == tuple(range(2, 51))
    assert (cfg.circuits, cfg.shots) == (3000, 100_000)


def test_paper_scale_grid_accepted(tmp_path):
    text = ("[ensemble]\ntopology = grid2d\nrows = 15\ncols = 15\n[noise]\np1 = 1e-4\np2 = 1e-3\n"
            "[sweep]\ncycles = 2-50\n[budget]\ncircuits = 3000\nshots = 100000\n")
    e = load_config(write(tmp_path, text)).experiment
    assert e.ensemble.n == 225 and e.circuits == 3000 and e.shots == 100_000


@pytest.mark.parametrize("text,key", [
    ("[ensemble]\nn = 2\nbogus = 1\n", "ensemble.bogus"),
    ("[ensemble]\nn = 2\n[extra]\na = 1\n", "extra"),
    ("[ensemble]\nn = x\n", "ensemble.n"),
    ("[ensemble]\ntopology = ring\nn = 2\n", "ensemble.topology"),
    ("[ensemble]\nn = 2\n[noise]\np1 = 2\n", "noise.p1"),
    ("[ensemble]\nn = 2\n[noise]\np2 = -1\n", "noise.p2"),
    ("[ensemble]\nn = 2\n[sweep]\ncycles = 5,3\n", "sweep.cycles"),
    ("[ensemble]\nn = 2\n[budget]\nshots = 0\n", "budget.shots"),
    ("[ensemble]\ntopology = grid2d\nrows = 2\n", "ensemble.rows"),
    ("[ensemble]\ntopology = twirl_graph\n", "ensemble.edges"),
    ("[ensemble]\n", "ensemble.n"),
])
def test_errors_name_key(tmp_path, text, key):
    with pytest.raises(ConfigError) as err:
        load_config(write(tmp_path, text))
    assert err.value.key == key


def test_graph_edges_relative(tmp_path):
    (tmp_path / "g.txt").write_text("0 1\n1 2\n2 3\n")
    cfg = load_config(write(tmp_path, "[ensemble]\ntopology = twirl_graph\nedges = g.txt\nk = 1\n"))
    assert cfg.experiment.ensemble.n == 4 and cfg.experiment.ensemble.k == 1


def _record(m, q, series="noisy"):
    cfg = ExperimentConfig(EnsembleSpec.chain(3), NoiseModel(1e-3, 1e-2))
    return PointRecord.from_point(cfg, XebPoint(m, q, 0.01, 10, 20), series == "ideal")


def test_store_roundtrip_and_torn_tail(tmp_path):
    store = PointStore(tmp_path / "points.jsonl")
    store.append(_record(2, 0.5))
    store.append(_record(2, 0.6, "ideal"))
    with open(store.path, "a") as fh:
        fh.write('{"m": 3, "q_ha')  # interrupted write
    assert [r.m for r in store.load()] == [2, 2]
    assert store.completed() == {(2, "noisy"), (2, "ideal")}
    store.append(_record(3, 0.4))
    lines = store.path.read_text().splitlines()
    assert len(lines) == 3 and all(json.loads(l) for l in lines)


def test_csv_columns_and_roundtrip(tmp_path):
    recs = [_record(2, 0.5), _record(3, 0.1 + 0.2), _record(2, 0.7, "ideal")]
    text = to_csv(recs)
    assert text.splitlines()[0] == "topology,n,p1,p2,m,q_hat,stderr,circuits,shots"
    p = tmp_path / "x.csv"
    p.write_text(text)
    back = load_records(p)
    assert back == recs


def test_empty_csv():
    assert to_csv([]) == "topology,n,p1,p2,m,q_hat,stderr,circuits,shots\n"


def test_svg_series(tmp_path):
    recs = [_record(m, 0.9**m) for m in range(2, 6)]
    cfg = ExperimentConfig(EnsembleSpec.chain(3), NoiseModel(1e-2, 1e-1))
    recs += [PointRecord.from_point(cfg, XebPoint(m, 0.5**m, 0.01, 10, 20)) for m in range(2, 6)]
    svg = to_svg(recs)
    assert svg.startswith("<?xml") and svg == to_svg(recs)
    assert "p1=0.001 p2=0.01" in svg and "p1=0.01 p2=0.1" in svg
    assert "XEB = 1" in svg
