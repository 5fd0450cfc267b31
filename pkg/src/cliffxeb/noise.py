"""Stochastic Pauli fault model and digital-error-model predictions.

Convention: a gate with depolarizing probability ``p`` is followed, with
probability ``p``, by a uniformly random non-identity Pauli on its support
(3 choices for one qubit, 15 for two).  The digital error model then assigns
fidelity ``1 - p`` to the gate.  This differs from the ``(1-p) rho + p I/d``
convention by a factor ``d^2 / (d^2 - 1)`` in ``p``; full depolarization here
is ``p1 = 3/4`` and ``p2 = 15/16``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .ensembles import Cycle, EnsembleSpec, cycle_factors, sample_cycle
from .stabilizer import CNOT_OP, GateOp, PauliString, Tableau


@dataclass(frozen=True)
class NoiseModel:
    p1: float = 0.0
    p2: float = 0.0
    meas_flip: float = 0.0

    def __post_init__(self):
        for name in ("p1", "p2", "meas_flip"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {v}")

    @property
    def is_noiseless(self) -> bool:
        return self.p1 == 0.0 and self.p2 == 0.0 and self.meas_flip == 0.0

    def gate_fidelity(self, two_qubit: bool) -> float:
        return 1.0 - (self.p2 if two_qubit else self.p1)


NOISELESS = NoiseModel()


def fault_pauli(n: int, g: GateOp, code: int) -> PauliString:
    """The n-qubit Pauli described by fault ``code`` on the support of ``g``."""
    x = np.zeros(n, dtype=np.uint8)
    z = np.zeros(n, dtype=np.uint8)
    for q, c in zip(g.qubits, (code & 3, (code >> 2) & 3)):
        x[q] ^= c & 1
        z[q] ^= c >> 1
    return PauliString(x, z)


def apply_noisy_gate(t: Tableau, g, model: NoiseModel, rng: np.random.Generator) -> Tableau:
    """Apply ``g`` followed by a depolarizing fault on its support."""
    g = GateOp(*g)
    t.apply(g)
    two = g.op == CNOT_OP
    p = model.p2 if two else model.p1
    if p > 0.0 and rng.random() < p:
        code = int(rng.integers(1, 16 if two else 4))
        t.pauli(fault_pauli(t.n, g, code))
    return t


def sample_faults(prog: np.ndarray, model: NoiseModel, shots: int, rng: np.random.Generator):
    """Fault locations for ``shots`` independent noisy runs of ``prog``.

    Returns ``(shot_ptr, fault_gate, fault_code)``: faults of shot ``s`` are
    entries ``shot_ptr[s]:shot_ptr[s+1]``, ordered by gate index.  Each gate
    position of each shot faults independently with its arity's probability.
    """
    two = prog[:, 0] == CNOT_OP
    shot_parts, gate_parts, code_parts = [], [], []
    for mask, p, n_codes in ((~two, model.p1, 4), (two, model.p2, 16)):
        gates = np.flatnonzero(mask)
        total = shots * gates.size
        if p == 0.0 or total == 0:
            continue
        count = int(rng.binomial(total, p))
        pos = np.sort(rng.choice(total, size=count, replace=False)) if p < 1.0 else np.arange(total)
        shot_parts.append(pos // gates.size)
        gate_parts.append(gates[pos % gates.size])
        code_parts.append(rng.integers(1, n_codes, size=pos.size))
    if shot_parts:
        shot = np.concatenate(shot_parts)
        gate = np.concatenate(gate_parts)
        code = np.concatenate(code_parts)
        order = np.lexsort((gate, shot))
        shot, gate, code = shot[order], gate[order], code[order]
    else:
        shot = gate = code = np.zeros(0, dtype=np.int64)
    shot_ptr = np.searchsorted(shot, np.arange(shots + 1)).astype(np.int64)
    return shot_ptr, gate.astype(np.int64), code.astype(np.int64)


def sample_readout_flips(n_words: int, n: int, shots: int, model: NoiseModel,
                         rng: np.random.Generator) -> np.ndarray:
    """Packed classical bit-flip masks, ``(shots, W)``; empty when flips are off."""
    from .stabilizer import pack_bits

    if model.meas_flip == 0.0:
        return np.zeros((0, n_words), dtype=np.uint64)
    return pack_bits(rng.random((shots, n)) < model.meas_flip)


def cycle_fidelity_prediction(cycle: Cycle, model: NoiseModel) -> float:
    """Digital error model: product of per-gate fidelities over one cycle."""
    return (1.0 - model.p1) ** cycle.n_1q * (1.0 - model.p2) ** cycle.n_2q


def _program_fidelity(prog: np.ndarray, model: NoiseModel) -> float:
    n2 = int(np.count_nonzero(prog[:, 0] == CNOT_OP))
    return (1.0 - model.p1) ** (prog.shape[0] - n2) * (1.0 - model.p2) ** n2


def expected_cycle_fidelity(spec: EnsembleSpec, model: NoiseModel, samples: int = 4000) -> float:
    """Digital-error-model fidelity averaged over the per-cycle measure.

    Exact through the factorized measure when it can be enumerated; otherwise
    a seeded Monte Carlo average over ``samples`` cycles.
    """
    try:
        factors = cycle_factors(spec)
    except ValueError:
        rng = np.random.default_rng(0)
        return float(np.mean([cycle_fidelity_prediction(sample_cycle(spec, rng), model)
                              for _ in range(samples)]))
    acc = 1.0
    for factor in factors:
        acc *= sum(w * _program_fidelity(prog, model) for w, prog in factor)
    return acc
