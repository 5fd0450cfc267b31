"""Clifford XEB experiment driver.

For each sampled circuit the ideal output state is simulated once and reduced
to its computational-basis support ``offset + span(basis)``, with parity
constraints that decide membership.  Every nonzero ideal probability is
``2^-k`` so a shot only needs membership of its sampled bitstring; shots are
tallied in an exponent histogram and the estimator is evaluated exactly.

Noisy shots re-simulate the stabilizer rows from ``|0^n>`` with their faults
inserted and sample a bitstring uniformly from the noisy support.  A shot
without faults has the ideal state as its output, so by default it samples the
ideal support directly; ``resim_clean=True`` forces full re-simulation, which
gives bit-identical results.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from . import _kernels as K
from .cliffords import COLUMN_MASKS
from .ensembles import EnsembleSpec, circuit_program, sample_circuit
from .noise import NOISELESS, NoiseModel, sample_faults, sample_readout_flips
from .stabilizer import StabilizerSupport, n_words

# stream labels mixed into per-circuit seeds
STREAM_CIRCUIT, STREAM_FAULTS, STREAM_SAMPLING = 0, 1, 2

PAPER_CIRCUITS = 3000
PAPER_SHOTS = 100_000


@dataclass(frozen=True)
class ExperimentConfig:
    ensemble: EnsembleSpec
    noise: NoiseModel = NOISELESS
    cycle_counts: tuple[int, ...] = tuple(range(2, 51))
    circuits: int = PAPER_CIRCUITS
    shots: int = PAPER_SHOTS
    master_seed: int = 0
    workers: int = 1
    resim_clean: bool = False

    def __post_init__(self):
        counts = tuple(int(m) for m in self.cycle_counts)
        object.__setattr__(self, "cycle_counts", counts)
        if not counts or counts[0] < 1 or any(b <= a for a, b in zip(counts, counts[1:])):
            raise ValueError("cycle_counts must be strictly increasing positive integers")
        if self.circuits < 1:
            raise ValueError(f"circuits must be >= 1, got {self.circuits}")
        if self.shots < 1:
            raise ValueError(f"shots must be >= 1, got {self.shots}")
        if not 0 <= self.master_seed < 2**64:
            raise ValueError("master_seed must be an unsigned 64-bit integer")
        if self.workers < 1:
            raise ValueError(f"workers must be >= 1, got {self.workers}")


@dataclass
class ExponentHistogram:
    """``counts[k]`` shots whose ideal probability is ``2^-k``; ``zero_count`` with 0."""

    n: int
    counts: np.ndarray
    zero_count: int = 0

    @classmethod
    def empty(cls, n: int) -> "ExponentHistogram":
        return cls(n, np.zeros(n + 1, dtype=np.int64))

    @property
    def total(self) -> int:
        return int(self.counts.sum()) + self.zero_count

    def merge(self, other: "ExponentHistogram") -> "ExponentHistogram":
        return ExponentHistogram(self.n, self.counts + other.counts, self.zero_count + other.zero_count)

    def mean_scaled_probability(self) -> Fraction:
        """Exact ``2^n * mean(p_x)`` over the recorded shots."""
        if self.total == 0:
            raise ValueError("empty histogram")
        num = 0
        for k in range(self.n, -1, -1):
            c = int(self.counts[k])
            if c:
                num += c << (self.n - k)
        return Fraction(num, self.total)

    def estimate(self) -> Fraction:
        return self.mean_scaled_probability() - 1


@dataclass
class CircuitResult:
    q: Fraction
    histogram: ExponentHistogram
    ideal_k: int

    @property
    def beta(self) -> Fraction:
        """``2^n * sum_x p_x^2`` of the ideal state, always ``2^(n-k)``."""
        return Fraction(2) ** (self.histogram.n - self.ideal_k)


@dataclass
class XebPoint:
    m: int
    q_hat: float
    stderr: float
    circuits: int
    shots: int
    per_circuit: list = field(default_factory=list, repr=False, compare=False)

    def __post_init__(self):
        if self.stderr < 0:
            raise ValueError("stderr must be non-negative")


def circuit_key(master_seed: int, m: int, index: int) -> tuple[int, int, int]:
    return (int(master_seed), int(m), int(index))


def _stream(key: Sequence[int], stream: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([*key, stream]))


def _snap_interval(gates: int, n: int) -> int:
    # bound snapshot memory to about 32 MB and their count to 256
    per = 3 * n * n_words(n) * 8
    count = max(1, min(256, (32 << 20) // per))
    return max(1, -(-gates // count))


def _support_from_columns(snap: np.ndarray, n: int) -> StabilizerSupport:
    w = n_words(n)
    x = np.zeros((n, w), dtype=np.uint64)
    z = np.zeros((n, w), dtype=np.uint64)
    r = np.zeros(n, dtype=np.uint8)
    K.col_to_rows(snap[0], snap[1], snap[2, 0], x, z, r)
    return StabilizerSupport.from_stabilizer_rows(n, x, z, r)


def ideal_support(prog: np.ndarray, n: int) -> StabilizerSupport:
    """Support of the noiseless output state of ``prog`` on ``|0^n>``."""
    prog = np.ascontiguousarray(prog, dtype=np.int32).reshape(-1, 3)
    snaps = K.ideal_snapshots(prog, COLUMN_MASKS, n, max(1, prog.shape[0]))
    return _support_from_columns(snaps[-1], n)


def run_program(prog: np.ndarray, n: int, noise: NoiseModel, shots: int, key: Sequence[int],
                resim_clean: bool = False) -> CircuitResult:
    """Noisy shots of a fixed program, scored against its ideal output."""
    prog = np.ascontiguousarray(prog, dtype=np.int32).reshape(-1, 3)
    every = _snap_interval(prog.shape[0], n)
    snaps = K.ideal_snapshots(prog, COLUMN_MASKS, n, every)
    ideal = _support_from_columns(snaps[-1], n)
    shot_ptr, fault_gate, fault_code = sample_faults(prog, noise, shots, _stream(key, STREAM_FAULTS))
    rng = _stream(key, STREAM_SAMPLING)
    w = n_words(n)
    rand_words = rng.bit_generator.random_raw((shots, w)).astype(np.uint64, copy=False)
    flips = sample_readout_flips(w, n, shots, noise, rng)
    hist = np.zeros(n + 2, dtype=np.int64)
    K.run_shots(prog, COLUMN_MASKS, n, ideal.k, ideal.basis, ideal.offset, ideal.cons_z,
                ideal.cons_r, shot_ptr, fault_gate, fault_code, rand_words, flips, hist,
                bool(resim_clean), snaps, every)
    h = ExponentHistogram(n, hist[: n + 1].copy(), int(hist[n + 1]))
    return CircuitResult(h.estimate(), h, ideal.k)


def run_circuit(ensemble: EnsembleSpec, noise: NoiseModel, m: int, circuit_seed: Sequence[int],
                shots: int = PAPER_SHOTS, resim_clean: bool = False) -> CircuitResult:
    """Sample one circuit of ``m`` cycles and estimate its XEB from ``shots`` shots.

    ``circuit_seed`` is the integer key the circuit, fault and sampling streams
    are derived from.
    """
    key = (int(circuit_seed),) if isinstance(circuit_seed, (int, np.integer)) else tuple(circuit_seed)
    prog = circuit_program(sample_circuit(ensemble, m, _stream(key, STREAM_CIRCUIT)))
    return run_program(prog, ensemble.n, noise, shots, key, resim_clean)


def run_program_reference(prog: np.ndarray, n: int, noise: NoiseModel, shots: int,
                          rng: np.random.Generator) -> CircuitResult:
    """Gate-by-gate route: a fresh noisy tableau per shot, Z measurement of every
    qubit, then an amplitude query on the ideal tableau.

    Much slower than :func:`run_program` and driven by a different random
    stream, so the two agree in distribution rather than bit for bit.
    """
    from .noise import apply_noisy_gate
    from .stabilizer import Tableau, amplitude_exponent, measure_z

    prog = np.ascontiguousarray(prog, dtype=np.int32).reshape(-1, 3)
    ideal = Tableau.zero(n).apply_program(prog)
    ideal_k = amplitude_exponent(ideal, StabilizerSupport.from_tableau(ideal).offset_bits())
    h = ExponentHistogram.empty(n)
    for _ in range(shots):
        t = Tableau.zero(n)
        for g in prog:
            apply_noisy_gate(t, g, noise, rng)
        x = [measure_z(t, q, rng)[0] for q in range(n)]
        if noise.meas_flip:
            x = [b ^ int(rng.random() < noise.meas_flip) for b in x]
        k = amplitude_exponent(ideal, x)
        if k is None:
            h.zero_count += 1
        else:
            h.counts[k] += 1
    return CircuitResult(h.estimate(), h, ideal_k)


def _mean_and_stderr(values: list[Fraction]) -> tuple[float, float]:
    c = len(values)
    mean = sum(values, Fraction(0)) / c
    if c == 1:
        return float(mean), 0.0
    # deviations are computed exactly; only the final root is rounded
    ss = sum(((v - mean) ** 2 for v in values), Fraction(0))
    return float(mean), math.sqrt(float(ss / (c - 1)) / c)


def run_point(config: ExperimentConfig, m: int, noise: NoiseModel | None = None,
              executor: ThreadPoolExecutor | None = None) -> XebPoint:
    noise = config.noise if noise is None else noise

    def one(index: int) -> CircuitResult:
        return run_circuit(config.ensemble, noise, m, circuit_key(config.master_seed, m, index),
                           config.shots, config.resim_clean)

    indices = range(config.circuits)
    if executor is None and config.workers > 1:
        with ThreadPoolExecutor(config.workers) as pool:
            results = list(pool.map(one, indices))
    elif executor is not None:
        results = list(executor.map(one, indices))
    else:
        results = [one(i) for i in indices]
    q_hat, stderr = _mean_and_stderr([r.q for r in results])
    return XebPoint(m, q_hat, stderr, config.circuits, config.shots, per_circuit=results)


@dataclass
class ExperimentResult:
    points: list[XebPoint]
    ideal_points: list[XebPoint] | None = None


def run_experiment(config: ExperimentConfig, skip: Callable[[int, bool], bool] | None = None,
                   on_point: Callable[[XebPoint, bool], None] | None = None,
                   noiseless_twin: bool = False) -> ExperimentResult:
    """Run every cycle count of ``config`` in order.

    ``skip(m, ideal)`` lets a caller resume by omitting completed points;
    ``on_point(point, ideal)`` is called as each point completes, which is
    where persistence hooks in.  The twin series reuses the same circuits
    with noise switched off.
    """
    series = [(config.noise, False)]
    if noiseless_twin:
        series.append((NOISELESS, True))
    out: dict[bool, list[XebPoint]] = {False: [], True: []}
    pool = ThreadPoolExecutor(config.workers) if config.workers > 1 else None
    try:
        for m in config.cycle_counts:
            for noise, ideal in series:
                if skip is not None and skip(m, ideal):
                    continue
                point = run_point(config, m, noise, pool)
                out[ideal].append(point)
                if on_point is not None:
                    on_point(point, ideal)
    finally:
        if pool is not None:
            pool.shutdown()
    return ExperimentResult(out[False], out[True] if noiseless_twin else None)
