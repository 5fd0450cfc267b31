import numpy as np
import pytest
from scipy import stats

from cliffxeb.ensembles import EnsembleSpec, sample_cycle
from cliffxeb.noise import (NOISELESS, NoiseModel, apply_noisy_gate, cycle_fidelity_prediction,
                            expected_cycle_fidelity, fault_pauli, sample_faults)
from cliffxeb.oracle import density_xeb_exact
from cliffxeb.stabilizer import CNOT_OP, GateOp, Tableau, apply_gate
from cliffxeb.verification import random_clifford_program


def test_model_validation():
    for bad in ((-0.1, 0), (0, 1.2), (0, 0, 2)):
        with pytest.raises(ValueError):
            NoiseModel(*bad)
    assert NOISELESS.is_noiseless and not NoiseModel(0, 1e-3).is_noiseless


def test_noiseless_is_ideal(rng):
    for _ in range(20):
        n = int(rng.integers(1, 6))
        prog = random_clifford_program(n, 30, rng)
        a = Tableau.zero(n)
        b = Tableau.zero(n)
        for g in prog:
            apply_noisy_gate(a, g, NoiseModel(0.0, 0.0), rng)
            apply_gate(b, tuple(g))
        assert a == b


def test_fault_pauli_layout():
    p = fault_pauli(3, GateOp(CNOT_OP, 2, 0), 1 | (3 << 2))
    assert str(p) == "+YIX"


def test_full_depolarization_gives_zero():
    # a uniform non-identity Pauli with probability 3/4 (15/16 on pairs) fully depolarizes
    for spec in (EnsembleSpec.chain(1), EnsembleSpec.chain(2)):
        q = density_xeb_exact(spec, NoiseModel(0.75, 15 / 16), 2)
        assert abs(q) < 1e-12


def test_unit_fault_probability_is_not_full_depolarization():
    # with p1 = 1 a fault always happens, which is not the maximally mixed channel
    q = density_xeb_exact(EnsembleSpec.chain(1), NoiseModel(1.0, 0.0), 1)
    assert abs(q) > 1e-3


def test_fault_frequency():
    prog = np.zeros((1000, 3), dtype=np.int32)
    prog[:, 2] = -1
    shot_ptr, gate, code = sample_faults(prog, NoiseModel(1e-3, 0.0), 1000, np.random.default_rng(7))
    assert abs(gate.size / 1e6 - 1e-3) < 3e-5
    assert shot_ptr[-1] == gate.size
    # faults of each shot come ordered by gate
    for s in range(50):
        seg = gate[shot_ptr[s]:shot_ptr[s + 1]]
        assert np.all(np.diff(seg) > 0)


def test_fault_frequency_gatewise():
    rng = np.random.default_rng(8)
    t = Tableau.zero(1)
    hits = 0
    trials = 200_000
    model = NoiseModel(1e-2, 0.0)
    for _ in range(trials):
        before = t.copy()
        apply_noisy_gate(t, GateOp(0, 0), model, rng)
        hits += not (t == before)
    # every non-identity Pauli flips the stabilizer or the destabilizer sign
    expected = trials * 1e-2
    assert abs(hits - expected) < 4 * np.sqrt(expected)


@pytest.mark.parametrize("two,codes", [(False, 3), (True, 15)])
def test_fault_codes_uniform(two, codes):
    op = CNOT_OP if two else 0
    prog = np.array([[op, 0, 1 if two else -1]] * 100, dtype=np.int32)
    model = NoiseModel(0.0, 0.5) if two else NoiseModel(0.5, 0.0)
    _, _, code = sample_faults(prog, model, 2000, np.random.default_rng(9))
    assert code.size > 90_000
    counts = np.bincount(code, minlength=codes + 1)
    assert counts[0] == 0
    assert stats.chisquare(counts[1:]).pvalue > 1e-3


def test_p_one_faults_everything():
    prog = np.array([[0, 0, -1], [CNOT_OP, 0, 1]], dtype=np.int32)
    shot_ptr, gate, _ = sample_faults(prog, NoiseModel(1.0, 1.0), 10, np.random.default_rng(0))
    assert np.array_equal(np.diff(shot_ptr), [2] * 10)


def test_cycle_prediction_chain():
    c = sample_cycle(EnsembleSpec.chain(25), np.random.default_rng(0))
    f = cycle_fidelity_prediction(c, NoiseModel(1e-4, 1e-3))
    assert f == pytest.approx(0.9999**50 * 0.999**24, rel=1e-14)
    assert abs(f - 0.9714) < 5e-5
    assert cycle_fidelity_prediction(c, NOISELESS) == 1.0


def test_cycle_prediction_grid_average():
    model = NoiseModel(1e-4, 1e-3)
    # every parity matching of a 5x5 grid holds 10 couplers
    assert expected_cycle_fidelity(EnsembleSpec.grid(5, 5), model) == pytest.approx(0.9999**25 * 0.999**10)
    three = expected_cycle_fidelity(EnsembleSpec.grid(3, 3), model)
    assert three == pytest.approx(0.9999**9 * 0.999**3)  # 3 couplers in each of A..D
    line = expected_cycle_fidelity(EnsembleSpec.grid(1, 4), model)
    assert line == pytest.approx(0.9999**4 * np.mean([0.999**s for s in (2, 1, 0, 0)]))


def test_prediction_monotone():
    c = sample_cycle(EnsembleSpec.chain(6), np.random.default_rng(1))
    values = [cycle_fidelity_prediction(c, NoiseModel(p, 10 * p)) for p in np.linspace(0, 0.05, 20)]
    assert all(b < a for a, b in zip(values, values[1:]))
