"""Brute-force reference backends for small systems.

Dense statevectors and density matrices use the convention that qubit ``q``
is bit ``q`` of the basis-state index.  Twirl matrices act on vectorized
Pauli-transfer matrices.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .cliffords import C1_MATRICES, INVERSE_TABLE, MULTIPLICATION_TABLE, N_C1, PAULI_MATRICES, closure
from .ensembles import Cycle, EnsembleSpec, Factor, circuit_program, cycle_factors
from .noise import NoiseModel
from .stabilizer import CNOT_OP

DENSE_LIMIT = 12
DENSITY_LIMIT = 4


class OracleSizeError(ValueError):
    pass


class ConstructionError(AssertionError):
    """A twirl matrix lacks its two guaranteed unit singular values."""


def as_program(circuit) -> np.ndarray:
    """Accept a program array, a list of gates or a list of cycles."""
    if isinstance(circuit, np.ndarray):
        return circuit.reshape(-1, 3).astype(np.int32)
    circuit = list(circuit)
    if circuit and isinstance(circuit[0], Cycle):
        return circuit_program(circuit)
    return np.asarray([tuple(g) for g in circuit], dtype=np.int32).reshape(-1, 3)


_CNOT = np.eye(4)[[0, 1, 3, 2]]  # on (control, target) with control the high bit


def _apply(state: np.ndarray, u: np.ndarray, qubits, nq: int, offset: int = 0) -> np.ndarray:
    """Apply ``u`` (first listed qubit most significant) to the qubit axes
    ``offset .. offset + nq`` of a tensor, qubit ``q`` at axis ``offset + nq - 1 - q``."""
    k = len(qubits)
    axes = [offset + nq - 1 - q for q in qubits]
    t = np.tensordot(u.reshape((2,) * 2 * k), state, axes=(list(range(k, 2 * k)), axes))
    return np.moveaxis(t, list(range(k)), axes)


def _gate_unitary(op: int):
    return _CNOT if op == CNOT_OP else C1_MATRICES[op]


def _gate_qubits(op, a, b):
    return (a, b) if op == CNOT_OP else (a,)


@dataclass
class DenseState:
    n: int
    amplitudes: np.ndarray

    @classmethod
    def zero(cls, n: int) -> "DenseState":
        if n > DENSE_LIMIT:
            raise OracleSizeError(f"dense simulation limited to {DENSE_LIMIT} qubits, got {n}")
        a = np.zeros(2**n, dtype=complex)
        a[0] = 1.0
        return cls(n, a)

    def apply_program(self, prog) -> "DenseState":
        t = self.amplitudes.reshape((2,) * self.n)
        for op, a, b in as_program(prog):
            t = _apply(t, _gate_unitary(op), _gate_qubits(op, a, b), self.n)
        self.amplitudes = t.reshape(-1)
        return self

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def probability(self, x) -> float:
        bits = [int(c) for c in x] if isinstance(x, str) else [int(v) for v in x]
        if len(bits) != self.n:
            raise ValueError(f"bitstring has length {len(bits)}, expected {self.n}")
        return float(self.probabilities()[sum(b << q for q, b in enumerate(bits))])


def dense_run(circuit, x, n: int | None = None) -> float:
    """Exact ``|<x|C|0^n>|^2`` by statevector evolution."""
    bits = [int(c) for c in x] if isinstance(x, str) else list(x)
    n = len(bits) if n is None else n
    return DenseState.zero(n).apply_program(circuit).probability(bits)


def unitary(prog, n: int) -> np.ndarray:
    """Dense ``2^n x 2^n`` unitary of a program."""
    if n > DENSE_LIMIT:
        raise OracleSizeError(f"dense simulation limited to {DENSE_LIMIT} qubits")
    cols = np.eye(2**n, dtype=complex).reshape((2,) * n + (2**n,))
    for op, a, b in as_program(prog):
        cols = _apply(cols, _gate_unitary(op), _gate_qubits(op, a, b), n)
    return cols.reshape(2**n, 2**n)


# -- density matrices on the doubled system -------------------------------------

def _apply_rho(rho: np.ndarray, u: np.ndarray, qubits, nq: int) -> np.ndarray:
    """``u rho u^dagger`` for a ``(2,)*2nq`` tensor, row axes first."""
    rho = _apply(rho, u, qubits, nq)
    return _apply(rho, u.conj(), qubits, nq, offset=nq)


_PAULIS_1 = [PAULI_MATRICES[c] for c in (1, 2, 3)]
_PAULIS_2 = [np.kron(PAULI_MATRICES[a], PAULI_MATRICES[b])
             for a in range(4) for b in range(4) if (a, b) != (0, 0)]


def _depolarize(rho, qubits, p, nq):
    if p == 0.0:
        return rho
    ops = _PAULIS_2 if len(qubits) == 2 else _PAULIS_1
    acc = (1.0 - p) * rho
    for P in ops:
        acc = acc + (p / len(ops)) * _apply_rho(rho, P, qubits, nq)
    return acc


def _doubled_program(rho, prog, n, noise):
    # qubits 0..n-1: noisy copy; n..2n-1: ideal copy
    nq = 2 * n
    for op, a, b in prog:
        u = _gate_unitary(op)
        qs = _gate_qubits(op, a, b)
        rho = _apply_rho(rho, u, qs, nq)
        rho = _apply_rho(rho, u, tuple(q + n for q in qs), nq)
        rho = _depolarize(rho, qs, noise.p2 if op == CNOT_OP else noise.p1, nq)
    return rho


def density_xeb_exact(ensemble: EnsembleSpec, noise: NoiseModel, m: int, n: int | None = None) -> float:
    """Exact ``q_R(m) = D E_C sum_x p_C(x) p~_C(x) - 1`` over the per-cycle measure.

    Tracks ``E[|psi_C><psi_C| (x) rho~_C]`` on a doubled register, applying the
    expectation over each independent factor of the cycle measure in turn, so
    no enumeration over whole circuits is needed.
    """
    n = ensemble.n if n is None else n
    if n != ensemble.n:
        raise ValueError("n does not match the ensemble")
    if n > DENSITY_LIMIT:
        raise OracleSizeError(f"density oracle limited to {DENSITY_LIMIT} qubits, got {n}")
    nq = 2 * n
    N = 2**nq
    rho = np.zeros((N, N), dtype=complex)
    rho[0, 0] = 1.0
    rho = rho.reshape((2,) * 2 * nq)
    factors = cycle_factors(ensemble)
    for _ in range(m):
        for factor in factors:
            rho = sum(w * _doubled_program(rho, prog, n, noise) for w, prog in factor)
    if noise.meas_flip:
        X = PAULI_MATRICES[1]
        for q in range(n):
            rho = (1 - noise.meas_flip) * rho + noise.meas_flip * _apply_rho(rho, X, (q,), nq)
    diag = np.real(np.diagonal(rho.reshape(N, N))).reshape(2**n, 2**n)  # [ideal, noisy]
    return float(2**n * np.trace(diag) - 1.0)


# -- Haar states ----------------------------------------------------------------

def sample_haar_states(n: int, samples: int, rng: np.random.Generator) -> np.ndarray:
    if n > DENSE_LIMIT:
        raise OracleSizeError(f"dense simulation limited to {DENSE_LIMIT} qubits")
    d = 2**n
    z = rng.standard_normal((samples, d)) + 1j * rng.standard_normal((samples, d))
    return z / np.linalg.norm(z, axis=1, keepdims=True)


def sample_haar_beta(n: int, samples: int, rng: np.random.Generator, chunk: int = 20000) -> np.ndarray:
    """``beta = D sum_x |a_x|^4`` for independent Haar-random states."""
    out = []
    for start in range(0, samples, chunk):
        a = sample_haar_states(n, min(chunk, samples - start), rng)
        out.append(2**n * np.sum(np.abs(a) ** 4, axis=1))
    return np.concatenate(out) if out else np.zeros(0)


# -- Pauli-transfer representation and twirl spectra --------------------------------

def pauli_basis(n: int) -> np.ndarray:
    """The ``4^n`` Pauli strings as matrices, indexed by base-4 digits (qubit 0 last)."""
    mats = []
    for digits in itertools.product(range(4), repeat=n):
        m = np.ones((1, 1), dtype=complex)
        for d in digits:
            m = np.kron(m, PAULI_MATRICES[d])
        mats.append(m)
    return np.array(mats)


@lru_cache(maxsize=4)
def _basis(n: int) -> np.ndarray:
    return pauli_basis(n)


def ptm(u: np.ndarray, n: int) -> np.ndarray:
    """Real Pauli-transfer matrix ``R[i, j] = tr(P_i u P_j u^dagger) / 2^n``."""
    P = _basis(n)
    images = np.einsum("ab,jbc,dc->jad", u, P, u.conj())
    return np.real(np.einsum("iba,jab->ij", P.conj(), images)) / 2**n


def program_ptm(prog, n: int) -> np.ndarray:
    return ptm(unitary(prog, n), n)


Measure = list  # ordered list of Factors


def identity_measure() -> Measure:
    return []


def uniform_c1_measure(qubit: int = 0) -> Measure:
    return [[(1.0 / N_C1, np.array([[c, qubit, -1]], dtype=np.int32)) for c in range(N_C1)]]


def inverse_program(prog) -> np.ndarray:
    rows = [(CNOT_OP, a, b) if op == CNOT_OP else (int(INVERSE_TABLE[op]), a, -1)
            for op, a, b in as_program(prog)[::-1]]
    return np.asarray(rows, dtype=np.int32).reshape(-1, 3)


def inverse_measure(measure: Measure) -> Measure:
    """Measure of ``g^-1`` for ``g`` drawn from ``measure``."""
    return [[(w, inverse_program(p)) for w, p in factor] for factor in reversed(measure)]


def convolve(first: Measure, second: Measure) -> Measure:
    """Measure of ``g2 g1``: a draw from ``first`` followed by one from ``second``.

    Twirl matrices compose in the same order, ``Lambda(convolve(a, b)) =
    Lambda(a) Lambda(b)``.  The product ``Lambda(mu)^T Lambda(mu)`` therefore
    belongs to ``convolve(inverse_measure(mu), mu)``, the inverse draw acting
    first; the opposite order gives ``Lambda(mu) Lambda(mu)^T``.  Both have
    the squared singular values of ``Lambda(mu)``.
    """
    return list(first) + list(second)


def _factor_matrix(factor: Factor, n: int) -> np.ndarray:
    d = 16**n
    acc = np.zeros((d, d))
    for w, prog in factor:
        R = program_ptm(prog, n)
        acc += w * np.kron(R.T, R.T)
    return acc


def build_twirl_matrix(measure, n: int) -> np.ndarray:
    """``Lambda(mu) = E[R_g^T (x) R_g^T]`` on row-major vectorized ``4^n x 4^n`` PTMs.

    ``measure`` is an ensemble spec or a list of independent factors applied
    in order; the expectation of the cycle is the ordered product of the
    factor expectations, so ``Lambda(mu1 * mu2) = Lambda(mu1) Lambda(mu2)``.
    """
    if isinstance(measure, EnsembleSpec):
        if measure.n != n:
            raise ValueError("measure acts on a different qubit count")
        measure = cycle_factors(measure)
    if n not in (1, 2):
        raise OracleSizeError(f"twirl matrices are supported for n <= 2, got {n}")
    T = np.eye(16**n)
    for factor in measure:
        T = T @ _factor_matrix(factor, n)
    return T


def singular_values(T: np.ndarray) -> np.ndarray:
    return np.linalg.svd(T, compute_uv=False)


def third_singular_value(T: np.ndarray, tol: float = 1e-9) -> float:
    s = singular_values(T)
    if np.any(np.abs(s[:2] - 1.0) > tol):
        raise ConstructionError(f"top singular values {s[:2]} are not both 1")
    return float(s[2]) if s.size > 2 else 0.0


def is_strongly_scrambling_1q(support) -> bool:
    """Whether ``{a^-1 b : a, b in support}`` generates the single-qubit Clifford group."""
    support = sorted(set(int(c) for c in support))
    quotients = {int(MULTIPLICATION_TABLE[INVERSE_TABLE[a], b]) for a in support for b in support}
    return len(closure(quotients)) == N_C1
