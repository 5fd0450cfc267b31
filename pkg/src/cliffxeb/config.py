"""Experiment configuration files.

INI-style text with five sections.  Every key and its default:

    [ensemble]
    topology = chain1d      ; chain1d | grid2d | twirl_star | twirl_graph
    n =                     ; qubit count (implied by rows*cols or the edge list)
    rows =                  ; grid2d only
    cols =                  ; grid2d only
    k = 2                   ; twirl repetitions
    edges =                 ; twirl_graph: edge-list file, one "u v" per line

    [noise]
    p1 = 0                  ; single-qubit gate fault probability
    p2 = 0                  ; CNOT fault probability
    meas_flip = 0           ; readout bit-flip probability

    [sweep]
    cycles = 2-50           ; comma list of values or lo-hi[:step] ranges
    window =                ; default fit window lo:hi

    [budget]
    circuits = 3000
    shots = 100000
    workers = 1

    [seed]
    master_seed = 0
"""

from __future__ import annotations

import configparser
import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

from .engine import PAPER_CIRCUITS, PAPER_SHOTS, ExperimentConfig
from .ensembles import EnsembleKind, EnsembleSpec, read_edge_list
from .noise import NoiseModel


class ConfigError(ValueError):
    def __init__(self, key: str, message: str):
        super().__init__(f"[{key}] {message}")
        self.key = key


SCHEMA = {
    "ensemble": {"topology": "chain1d", "n": "", "rows": "", "cols": "", "k": "2", "edges": ""},
    "noise": {"p1": "0", "p2": "0", "meas_flip": "0"},
    "sweep": {"cycles": "2-50", "window": ""},
    "budget": {"circuits": str(PAPER_CIRCUITS), "shots": str(PAPER_SHOTS), "workers": "1"},
    "seed": {"master_seed": "0"},
}


def parse_cycles(text: str) -> tuple[int, ...]:
    out: list[int] = []
    for part in text.replace(" ", "").split(","):
        if not part:
            continue
        if "-" in part:
            span, _, step = part.partition(":")
            lo, hi = span.split("-")
            out.extend(range(int(lo), int(hi) + 1, int(step) if step else 1))
        else:
            out.append(int(part))
    return tuple(out)


def parse_window(text: str) -> tuple[int, int] | None:
    if not text:
        return None
    lo, sep, hi = text.partition(":")
    if not sep:
        raise ValueError(f"window must be lo:hi, got {text!r}")
    lo_i, hi_i = int(lo), int(hi)
    if hi_i < lo_i:
        raise ValueError(f"window {text!r} is empty")
    return lo_i, hi_i


@dataclass
class LoadedConfig:
    experiment: ExperimentConfig
    window: tuple[int, int] | None
    noise_keys_set: bool
    source: dict

    def config_hash(self) -> str:
        """Digest of every field that affects results (``workers`` excluded)."""
        return hashlib.sha256(json.dumps(reproducibility_fields(self.experiment),
                                         sort_keys=True).encode()).hexdigest()


def reproducibility_fields(cfg: ExperimentConfig) -> dict:
    e = cfg.ensemble
    return {
        "topology": e.topology, "n": e.n, "rows": e.rows, "cols": e.cols, "k": e.k,
        "edges": [list(x) for x in e.edges],
        "p1": cfg.noise.p1, "p2": cfg.noise.p2, "meas_flip": cfg.noise.meas_flip,
        "cycles": list(cfg.cycle_counts), "circuits": cfg.circuits, "shots": cfg.shots,
        "master_seed": cfg.master_seed, "resim_clean": cfg.resim_clean,
    }


def experiment_from_fields(d: dict, workers: int = 1) -> ExperimentConfig:
    spec = EnsembleSpec(EnsembleKind(d["topology"]), d["n"], d["rows"], d["cols"], d["k"],
                        tuple(tuple(x) for x in d["edges"]))
    return ExperimentConfig(spec, NoiseModel(d["p1"], d["p2"], d["meas_flip"]), tuple(d["cycles"]),
                            d["circuits"], d["shots"], d["master_seed"], workers, d["resim_clean"])


def _get(cp, section, key, conv, what):
    raw = cp.get(section, key, fallback=SCHEMA[section][key]).strip()
    try:
        return conv(raw)
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"{section}.{key}", f"{what}: {exc}") from None


def _opt_int(raw: str):
    return int(raw) if raw else None


def load_config(path, seed: int | None = None, workers: int | None = None) -> LoadedConfig:
    cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    try:
        with open(path) as fh:
            cp.read_file(fh)
    except OSError as exc:
        raise ConfigError("file", f"cannot read {path}: {exc}") from None
    except configparser.Error as exc:
        raise ConfigError("file", str(exc)) from None
    for section in cp.sections():
        if section not in SCHEMA:
            raise ConfigError(section, "unknown section")
        for key in cp[section]:
            if key not in SCHEMA[section]:
                raise ConfigError(f"{section}.{key}", "unknown key")

    topology = _get(cp, "ensemble", "topology", EnsembleKind, "unknown topology")
    n = _get(cp, "ensemble", "n", _opt_int, "expected an integer")
    rows = _get(cp, "ensemble", "rows", _opt_int, "expected an integer")
    cols = _get(cp, "ensemble", "cols", _opt_int, "expected an integer")
    k = _get(cp, "ensemble", "k", int, "expected an integer")
    edges_path = cp.get("ensemble", "edges", fallback="").strip()
    try:
        if topology is EnsembleKind.GRID_2D:
            if rows is None or cols is None:
                raise ConfigError("ensemble.rows", "grid2d needs rows and cols")
            if n is not None and n != rows * cols:
                raise ConfigError("ensemble.n", f"n = {n} but rows * cols = {rows * cols}")
            spec = EnsembleSpec.grid(rows, cols)
        elif topology is EnsembleKind.APPROX_TWIRL_GRAPH:
            if not edges_path:
                raise ConfigError("ensemble.edges", "twirl_graph needs an edge-list file")
            p = Path(edges_path)
            if not p.is_absolute():
                p = Path(path).parent / p
            try:
                edges = read_edge_list(p)
            except OSError as exc:
                raise ConfigError("ensemble.edges", str(exc)) from None
            spec = EnsembleSpec.twirl_graph(edges, n=n, k=k)
        else:
            if n is None:
                raise ConfigError("ensemble.n", "missing qubit count")
            spec = EnsembleSpec(topology, n, k=k)
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError("ensemble", str(exc)) from None

    try:
        noise = NoiseModel(_get(cp, "noise", "p1", float, "expected a number"),
                           _get(cp, "noise", "p2", float, "expected a number"),
                           _get(cp, "noise", "meas_flip", float, "expected a number"))
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError("noise." + str(exc).split()[0], str(exc)) from None
    noise_keys_set = cp.has_section("noise") and len(cp["noise"]) > 0

    cycles = _get(cp, "sweep", "cycles", parse_cycles, "bad cycle list")
    window = _get(cp, "sweep", "window", parse_window, "bad window")
    circuits = _get(cp, "budget", "circuits", int, "expected an integer")
    shots = _get(cp, "budget", "shots", int, "expected an integer")
    n_workers = workers if workers is not None else _get(cp, "budget", "workers", int, "expected an integer")
    master = seed if seed is not None else _get(cp, "seed", "master_seed", int, "expected an integer")
    checks = [
        ("sweep.cycles", bool(cycles) and cycles[0] >= 1 and all(b > a for a, b in zip(cycles, cycles[1:])),
         "cycle counts must be strictly increasing positive integers"),
        ("budget.circuits", circuits >= 1, "must be >= 1"),
        ("budget.shots", shots >= 1, "must be >= 1"),
        ("budget.workers", n_workers >= 1, "must be >= 1"),
        ("seed.master_seed", 0 <= master < 2**64, "must be an unsigned 64-bit integer"),
    ]
    for key, ok, message in checks:
        if not ok:
            raise ConfigError(key, message)
    exp = ExperimentConfig(spec, noise, cycles, circuits, shots, master, n_workers)
    source = {s: dict(cp[s]) for s in cp.sections()}
    return LoadedConfig(exp, window, noise_keys_set, source)
