import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cliffxeb.cliffords import C1_MATRICES, compose, H as H_IDX, S as S_IDX
from cliffxeb.oracle import DenseState, dense_run
from cliffxeb.stabilizer import (CNOT, C1, H, S, PauliString, StabilizerSupport, Tableau,
                                 amplitude_exponent, apply_gate, measure_z, n_words,
                                 new_zero_state, pack_bits, unpack_bits)
from cliffxeb.verification import random_clifford_program


def random_tableau(n, rng, gates=None):
    return Tableau.zero(n).apply_program(random_clifford_program(n, gates or 6 * n, rng))


def normalized(t):
    """Tableau with signs dropped, for equality up to the canonical phases."""
    c = t.copy()
    c.r[:] = 0
    return c


def test_zero_state():
    t = new_zero_state(1)
    assert [str(p) for p in t.stabilizers()] == ["+Z"]
    assert [str(p) for p in t.destabilizers()] == ["+X"]
    t3 = new_zero_state(3)
    for q in range(3):
        assert measure_z(t3.copy(), q, np.random.default_rng(0)) == (0, False)
    with pytest.raises(ValueError):
        new_zero_state(0)


def test_large_construction_memory():
    t = new_zero_state(1225)
    words = t.x.size + t.z.size
    assert words == 2 * (2 * 1225) * n_words(1225)
    t.check_invariants()


def test_pack_roundtrip(rng):
    bits = rng.integers(0, 2, (5, 130))
    assert np.array_equal(unpack_bits(pack_bits(bits), 130), bits)


@pytest.mark.parametrize("n", [1, 3, 70])
def test_gate_relations(n, rng):
    for _ in range(5):
        t = random_tableau(n, rng)
        q = int(rng.integers(n))
        assert t.copy().h(q).h(q) == t
        assert t.copy().s(q).s(q).s(q).s(q) == t
        if n > 1:
            a, b = (int(v) for v in rng.choice(n, 2, replace=False))
            assert t.copy().cnot(a, b).cnot(a, b) == t
        # (HS)^3 is a global phase: identical up to sign normalization
        u = t.copy()
        for _ in range(3):
            u.s(q).h(q)
        assert normalized(u) == normalized(t)
        assert u == t  # the sign bits of Hermitian rows agree too


def test_c1_index_matches_gate_sequence(rng):
    hsh = compose(H_IDX, S_IDX, H_IDX)
    for _ in range(100):
        n = int(rng.integers(1, 5))
        t = random_tableau(n, rng)
        q = int(rng.integers(n))
        a = t.copy().h(q).s(q).h(q)
        b = t.copy().c1(q, hsh)
        assert a == b


def test_gate_errors():
    t = new_zero_state(2)
    with pytest.raises(IndexError):
        t.h(2)
    with pytest.raises(ValueError):
        t.cnot(1, 1)
    with pytest.raises(ValueError):
        t.c1(0, 24)
    with pytest.raises(ValueError):
        amplitude_exponent(t, [0])


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 8), st.integers(0, 2**32 - 1))
def test_invariants_after_every_gate(n, seed):
    rng = np.random.default_rng(seed)
    t = Tableau.zero(n)
    for g in random_clifford_program(n, 5 * n, rng):
        apply_gate(t, tuple(int(v) for v in g))
        t.check_invariants()
    for p in t.stabilizers():
        assert all(p.commutes_with(o) for o in t.stabilizers())


def test_pauli_application_flips_signs():
    t = new_zero_state(2)
    t.pauli(PauliString.from_str("XI"))
    assert [str(p) for p in t.stabilizers()] == ["-ZI", "+IZ"]
    assert amplitude_exponent(t, "10") == 0


def test_measure_random_statistics():
    rng = np.random.default_rng(3)
    trials = 100_000
    ones = 0
    base = new_zero_state(1).h(0)
    for _ in range(trials // 1000):
        for _ in range(1000):
            bit, random = measure_z(base.copy(), 0, rng)
            assert random
            ones += bit
    assert abs(ones / trials - 0.5) < 0.01


def test_measure_collapses_consistently(rng):
    t = random_tableau(4, rng)
    first = [measure_z(t, q, rng)[0] for q in range(4)]
    again = [measure_z(t, q, rng) for q in range(4)]
    assert [b for b, _ in again] == first
    assert not any(r for _, r in again)


def test_measurement_matches_born_probabilities():
    rng = np.random.default_rng(11)
    n = 5
    prog = random_clifford_program(n, 40, rng)
    ideal = Tableau.zero(n).apply_program(prog)
    probs = DenseState.zero(n).apply_program(prog).probabilities()
    shots = 100_000
    counts = np.zeros(2**n)
    for _ in range(shots):
        t = ideal.copy()
        idx = sum(measure_z(t, q, rng)[0] << q for q in range(n))
        counts[idx] += 1
    sigma = np.sqrt(shots * probs * (1 - probs))
    assert np.all(np.abs(counts - shots * probs) <= 3 * sigma + 1e-9)
    assert np.all(counts[probs < 1e-12] == 0)


def test_amplitude_trivial_cases():
    t = new_zero_state(3)
    assert amplitude_exponent(t, "000") == 0
    assert amplitude_exponent(t, "010") is None
    for q in range(3):
        t.h(q)
    for x in itertools.product((0, 1), repeat=3):
        assert amplitude_exponent(t, x) == 3


def test_amplitude_matches_dense(rng):
    for _ in range(200):
        n = int(rng.integers(1, 7))
        prog = random_clifford_program(n, int(rng.integers(1, 40)), rng)
        t = Tableau.zero(n).apply_program(prog)
        x = rng.integers(0, 2, n)
        k = amplitude_exponent(t, x)
        p = 0.0 if k is None else 2.0**-k
        assert abs(p - dense_run(prog, x)) < 1e-12


def test_amplitude_is_pure(rng):
    t = random_tableau(5, rng)
    before = t.copy()
    x = rng.integers(0, 2, 5)
    assert amplitude_exponent(t, x) == amplitude_exponent(t, x)
    assert t == before


@pytest.mark.parametrize("n", [1, 4, 7, 10])
def test_support_counting(n, rng):
    # exactly 2^k bitstrings carry probability 2^-k and the rest are zero
    t = random_tableau(n, rng)
    ks = [amplitude_exponent(t, x) for x in itertools.product((0, 1), repeat=n)]
    nonzero = [k for k in ks if k is not None]
    assert len(set(nonzero)) == 1
    assert len(nonzero) == 2 ** nonzero[0]


def test_support_agrees_with_postselection(rng):
    for _ in range(100):
        n = int(rng.integers(1, 9))
        t = random_tableau(n, rng)
        sup = StabilizerSupport.from_tableau(t)
        for _ in range(8):
            x = rng.integers(0, 2, n) if rng.random() < 0.5 else sup.sample(rng)
            assert sup.exponent(x) == amplitude_exponent(t, x)


def test_gate_constructors():
    t1 = new_zero_state(2)
    for g in (H(0), S(0), CNOT(0, 1), C1(1, 5)):
        apply_gate(t1, g)
    t2 = new_zero_state(2).h(0).s(0).cnot(0, 1).c1(1, 5)
    assert t1 == t2


def test_c1_matrix_action(rng):
    # the tableau rule for every index agrees with the dense matrix
    for c in range(24):
        prog = np.array([[1, 0, -1], [c, 0, -1]], dtype=np.int32)
        t = Tableau.zero(1).apply_program(prog)
        amp = C1_MATRICES[c] @ (np.array([1, 1]) / np.sqrt(2))
        for x in (0, 1):
            k = amplitude_exponent(t, [x])
            assert abs((0 if k is None else 2.0**-k) - abs(amp[x]) ** 2) < 1e-12
