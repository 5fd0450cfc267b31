import numpy as np
import pytest
from scipy import stats

from cliffxeb.ensembles import EnsembleSpec
from cliffxeb.noise import NOISELESS, NoiseModel
from cliffxeb.oracle import (ConstructionError, DenseState, OracleSizeError, build_twirl_matrix,
                             convolve, dense_run, density_xeb_exact, identity_measure,
                             inverse_measure, ptm, sample_haar_beta, sample_haar_states,
                             singular_values, third_singular_value, uniform_c1_measure, unitary)
from cliffxeb.stabilizer import CNOT_OP
from cliffxeb.verification import random_clifford_program


def test_dense_trivial():
    assert dense_run(np.zeros((0, 3), dtype=np.int32), "000") == 1.0
    prog = np.array([[1, q, -1] for q in range(3)], dtype=np.int32)
    assert dense_run(prog, "101") == pytest.approx(1 / 8)
    with pytest.raises(OracleSizeError):
        DenseState.zero(13)


def test_dense_qubit_order():
    # X on qubit 0 sets bit 0 of the index
    st = DenseState.zero(3).apply_program(np.array([[6, 0, -1]], dtype=np.int32))
    assert st.probabilities()[1] == pytest.approx(1.0)
    bell = DenseState.zero(2).apply_program(np.array([[1, 0, -1], [CNOT_OP, 0, 1]], dtype=np.int32))
    assert bell.probability("11") == pytest.approx(0.5) and bell.probability("10") == 0


def test_dense_norm(rng):
    st = DenseState.zero(6).apply_program(random_clifford_program(6, 50, rng))
    assert abs(np.linalg.norm(st.amplitudes) - 1) < 1e-10


def test_unitary_matches_state(rng):
    prog = random_clifford_program(3, 20, rng)
    U = unitary(prog, 3)
    assert np.allclose(U @ U.conj().T, np.eye(8))
    assert np.allclose(U[:, 0], DenseState.zero(3).apply_program(prog).amplitudes)


def test_density_convergence():
    assert density_xeb_exact(EnsembleSpec.chain(2), NOISELESS, 10) == pytest.approx(0.6, abs=1e-6)
    with pytest.raises(OracleSizeError):
        density_xeb_exact(EnsembleSpec.chain(5), NOISELESS, 1)


def test_density_meas_flip_lowers_xeb():
    spec = EnsembleSpec.chain(2)
    assert density_xeb_exact(spec, NoiseModel(0, 0, 0.1), 3) < density_xeb_exact(spec, NOISELESS, 3)


def test_haar_single_qubit_uniform():
    a = sample_haar_states(1, 20000, np.random.default_rng(4))
    t = np.abs(a[:, 0]) ** 2
    assert stats.kstest(t, "uniform").pvalue > 1e-3


def test_haar_beta_moments():
    beta = sample_haar_beta(3, 100_000, np.random.default_rng(5))
    assert abs(beta.mean() - 16 / 9) <= 4 * np.sqrt(0.2011 / beta.size)
    assert abs(beta.var(ddof=1) - 0.2011) <= 0.1 * 0.2011


def test_ptm_orthogonal(rng):
    U = unitary(random_clifford_program(2, 10, rng), 2)
    R = ptm(U, 2)
    assert np.allclose(R @ R.T, np.eye(16))
    assert R[0, 0] == pytest.approx(1)


def test_identity_measure():
    T = build_twirl_matrix(identity_measure(), 1)
    assert np.allclose(T, np.eye(16))
    assert third_singular_value(T) == pytest.approx(1.0)


def test_uniform_c1_two_design():
    T = build_twirl_matrix(uniform_c1_measure(), 1)
    s = singular_values(T)
    assert np.allclose(s[:2], 1, atol=1e-12) and np.all(s[2:] < 1e-12)
    ev = np.sort(np.abs(np.linalg.eigvals(T)))[::-1]
    assert np.allclose(ev[:2], 1, atol=1e-12) and np.all(ev[2:] < 1e-12)
    assert np.allclose(T, T.T, atol=1e-10)


def test_chain_gap():
    T = build_twirl_matrix(EnsembleSpec.chain(2), 2)
    s = singular_values(T)
    assert np.sum(np.abs(s - 1) < 1e-9) == 2
    assert third_singular_value(T) < 1 - 1e-6
    assert np.all(s <= 1 + 1e-9)


@pytest.mark.parametrize("spec,n", [(EnsembleSpec.chain(2), 2), (EnsembleSpec.twirl_star(2, k=1), 2),
                                    (EnsembleSpec.chain(1), 1)])
def test_inverse_convolution(spec, n):
    from cliffxeb.ensembles import cycle_factors

    mu = cycle_factors(spec)
    T = build_twirl_matrix(mu, n)
    inv_first = build_twirl_matrix(convolve(inverse_measure(mu), mu), n)
    assert np.allclose(inv_first, T.T @ T, atol=1e-9)
    inv_last = build_twirl_matrix(convolve(mu, inverse_measure(mu)), n)
    assert np.allclose(inv_last, T @ T.T, atol=1e-9)
    s = singular_values(T)
    assert np.allclose(singular_values(inv_first), s**2, atol=1e-9)
    sym = build_twirl_matrix(convolve(inverse_measure(mu), mu), n)
    assert np.allclose(sym, sym.T, atol=1e-10)


def test_twirl_single_repetition_gap():
    s3 = third_singular_value(build_twirl_matrix(EnsembleSpec.twirl_star(2, k=1), 2))
    assert 0 < s3 < 1 - 1e-6
    assert f"{s3:.6f}" == "0.098821"


def test_construction_error():
    with pytest.raises(ConstructionError):
        third_singular_value(0.5 * np.eye(16))
    with pytest.raises(OracleSizeError):
        build_twirl_matrix(identity_measure(), 3)
