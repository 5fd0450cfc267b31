"""Canonical enumeration of the 24 single-qubit Clifford gates.

Index ``c = 6 * p + l`` names the matrix product ``P[p] @ L[l]`` with

    P = (I, X, Y, Z)
    L = (I, H, S, H@S, S@H, H@S@H)

so ``L`` acts first.  Named shortcuts: ``H = 1``, ``S = 2``, ``X = 6``,
``Y = 12``, ``Z = 18``.  The order is fixed so that seeded circuit draws
reproduce bit-exactly.

Single-qubit Paulis are coded in two bits as ``x | (z << 1)``: 0 = I, 1 = X,
2 = Z, 3 = Y, with Y = iXZ.
"""

from __future__ import annotations

import itertools

import numpy as np

_I2 = np.eye(2, dtype=complex)
_X = np.array([[0, 1], [1, 0]], dtype=complex)
_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
_Z = np.array([[1, 0], [0, -1]], dtype=complex)
_H = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
_S = np.array([[1, 0], [0, 1j]], dtype=complex)

PAULI_MATRICES = (_I2, _X, _Z, _Y)  # indexed by 2-bit code
PAULI_LABELS = "IXZY"

_P_FACTORS = (_I2, _X, _Y, _Z)
_L_FACTORS = (_I2, _H, _S, _H @ _S, _S @ _H, _H @ _S @ _H)
L_LABELS = ("I", "H", "S", "HS", "SH", "HSH")
P_LABELS = ("I", "X", "Y", "Z")

N_C1 = 24
IDENTITY = 0
H = 1
S = 2
X = 6
Y = 12
Z = 18
PAULI_INDICES = (IDENTITY, X, Y, Z)

C1_MATRICES = np.array([p @ l for p in _P_FACTORS for l in _L_FACTORS])


def c1_label(index: int) -> str:
    p, l = divmod(index, 6)
    if p == 0:
        return L_LABELS[l]
    return P_LABELS[p] if l == 0 else f"{P_LABELS[p]}.{L_LABELS[l]}"


def _conjugation_image(u: np.ndarray, code: int) -> tuple[int, int]:
    """Return (image code, sign bit) of ``u @ pauli @ u^dagger``."""
    img = u @ PAULI_MATRICES[code] @ u.conj().T
    for out in (1, 2, 3):
        for sign, factor in ((0, 1.0), (1, -1.0)):
            if np.allclose(img, factor * PAULI_MATRICES[out], atol=1e-12):
                return out, sign
    raise AssertionError("matrix is not a Clifford")


def _build_conjugation_table() -> np.ndarray:
    # table[c, code] = (new_code, sign); row for code 0 stays (0, 0)
    table = np.zeros((N_C1, 4, 2), dtype=np.uint8)
    for c in range(N_C1):
        for code in (1, 2, 3):
            table[c, code] = _conjugation_image(C1_MATRICES[c], code)
    return table


CONJUGATION_TABLE = _build_conjugation_table()


def _action_key(u: np.ndarray) -> tuple:
    return tuple(_conjugation_image(u, code) for code in (1, 2))


_KEY_TO_INDEX = {_action_key(C1_MATRICES[c]): c for c in range(N_C1)}
assert len(_KEY_TO_INDEX) == N_C1


def index_of(u: np.ndarray) -> int:
    """Canonical index of a 2x2 Clifford unitary, ignoring global phase."""
    return _KEY_TO_INDEX[_action_key(np.asarray(u, dtype=complex))]


MULTIPLICATION_TABLE = np.array(
    [[index_of(C1_MATRICES[a] @ C1_MATRICES[b]) for b in range(N_C1)] for a in range(N_C1)],
    dtype=np.int64,
)
INVERSE_TABLE = np.array([index_of(C1_MATRICES[c].conj().T) for c in range(N_C1)], dtype=np.int64)

# {I, S, H, SH, (SH)^2, SHS} as matrix products; one representative per
# coset of the Pauli group.
C1P1_INDICES = tuple(
    index_of(m)
    for m in (_I2, _S, _H, _S @ _H, _S @ _H @ _S @ _H, _S @ _H @ _S)
)


def compose(*indices: int) -> int:
    """Index of the gate sequence ``indices[0]`` then ``indices[1]`` ..."""
    acc = IDENTITY
    for c in indices:
        acc = int(MULTIPLICATION_TABLE[c, acc])
    return acc


def closure(generators) -> set[int]:
    """Subgroup of the single-qubit Clifford group generated by ``generators``."""
    group = {IDENTITY}
    frontier = list(group)
    gens = list(set(generators))
    while frontier:
        nxt = []
        for a, g in itertools.product(frontier, gens):
            prod = int(MULTIPLICATION_TABLE[g, a])
            if prod not in group:
                group.add(prod)
                nxt.append(prod)
        frontier = nxt
    return group


def _build_column_masks() -> np.ndarray:
    # masks[c, 3*j : 3*j+3] = (x, z, sign) of the image of X, Z, Y (j = 0, 1, 2)
    # as all-ones/all-zeros words, for word-parallel conjugation
    ones = np.uint64(0xFFFFFFFFFFFFFFFF)
    masks = np.zeros((N_C1, 9), dtype=np.uint64)
    for c in range(N_C1):
        for j, code in enumerate((1, 2, 3)):
            new, sign = (int(v) for v in CONJUGATION_TABLE[c, code])
            masks[c, 3 * j : 3 * j + 3] = [ones * (new & 1), ones * (new >> 1), ones * sign]
    return masks


COLUMN_MASKS = _build_column_masks()
