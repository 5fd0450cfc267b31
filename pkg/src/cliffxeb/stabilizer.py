"""Bit-packed stabilizer tableau simulation of Clifford circuits.

Rows ``0..n-1`` are destabilizers, rows ``n..2n-1`` stabilizers.  Each row is
a Hermitian Pauli ``(-1)^r * prod_q P(x_q, z_q)`` with ``P(1, 1) = Y = iXZ``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import _kernels as K
from .cliffords import CONJUGATION_TABLE, N_C1, PAULI_LABELS

CNOT_OP = K.CNOT_OP
WORD_BITS = 64


def n_words(n: int) -> int:
    return (n + WORD_BITS - 1) // WORD_BITS


def pack_bits(bits) -> np.ndarray:
    """Pack a ``(..., n)`` 0/1 array into ``(..., W)`` little-endian uint64 words."""
    bits = np.asarray(bits, dtype=np.uint8)
    n = bits.shape[-1]
    w = n_words(n)
    padded = np.zeros(bits.shape[:-1] + (w * WORD_BITS,), dtype=np.uint8)
    padded[..., :n] = bits
    packed = np.packbits(padded, axis=-1, bitorder="little")
    return np.ascontiguousarray(packed).view("<u8").astype(np.uint64, copy=False)


def unpack_bits(words: np.ndarray, n: int) -> np.ndarray:
    words = np.ascontiguousarray(words, dtype="<u8")
    as_bytes = words.view(np.uint8)
    return np.unpackbits(as_bytes, axis=-1, bitorder="little")[..., :n]


class GateOp(NamedTuple):
    """One gate: ``op < 24`` is a single-qubit Clifford on ``a``; ``op == CNOT_OP``
    is CNOT(control=a, target=b)."""

    op: int
    a: int
    b: int = -1

    @property
    def is_two_qubit(self) -> bool:
        return self.op == CNOT_OP

    @property
    def qubits(self) -> tuple[int, ...]:
        return (self.a, self.b) if self.op == CNOT_OP else (self.a,)


def H(q: int) -> GateOp:
    return GateOp(1, q)


def S(q: int) -> GateOp:
    return GateOp(2, q)


def C1(q: int, index: int) -> GateOp:
    return GateOp(index, q)


def CNOT(c: int, t: int) -> GateOp:
    return GateOp(CNOT_OP, c, t)


@dataclass
class PauliString:
    """``i^phase * prod_q P(x_q, z_q)``, with ``P(1, 1) = Y``."""

    x: np.ndarray
    z: np.ndarray
    phase: int = 0

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=np.uint8) & 1
        self.z = np.asarray(self.z, dtype=np.uint8) & 1
        if self.x.shape != self.z.shape or self.x.ndim != 1:
            raise ValueError("x and z must be 1-D bit vectors of equal length")
        self.phase %= 4

    @property
    def n(self) -> int:
        return len(self.x)

    @classmethod
    def from_str(cls, label: str) -> "PauliString":
        phase = 0
        for prefix, ph in (("+i", 1), ("-i", 3), ("+", 0), ("-", 2), ("i", 1)):
            if label.startswith(prefix):
                phase, label = ph, label[len(prefix):]
                break
        codes = [PAULI_LABELS.index(ch) for ch in label.upper()]
        return cls([c & 1 for c in codes], [c >> 1 for c in codes], phase)

    def __str__(self) -> str:
        sign = ("+", "+i", "-", "-i")[self.phase]
        return sign + "".join(PAULI_LABELS[int(a) | (int(b) << 1)] for a, b in zip(self.x, self.z))

    __repr__ = __str__

    def __eq__(self, other) -> bool:
        if not isinstance(other, PauliString):
            return NotImplemented
        return (self.phase == other.phase and np.array_equal(self.x, other.x)
                and np.array_equal(self.z, other.z))

    def commutes_with(self, other: "PauliString") -> bool:
        return int(np.sum(self.x & other.z) + np.sum(self.z & other.x)) % 2 == 0


class Tableau:
    """Stabilizer/destabilizer tableau of an ``n``-qubit stabilizer state."""

    def __init__(self, n: int, x: np.ndarray, z: np.ndarray, r: np.ndarray):
        self.n = n
        self.x = x
        self.z = z
        self.r = r

    @classmethod
    def zero(cls, n: int) -> "Tableau":
        if n < 1:
            raise ValueError(f"qubit count must be >= 1, got {n}")
        w = n_words(n)
        x = np.zeros((2 * n, w), dtype=np.uint64)
        z = np.zeros((2 * n, w), dtype=np.uint64)
        for q in range(n):
            x[q, q >> 6] |= np.uint64(1) << np.uint64(q & 63)
            z[n + q, q >> 6] |= np.uint64(1) << np.uint64(q & 63)
        return cls(n, x, z, np.zeros(2 * n, dtype=np.uint8))

    def copy(self) -> "Tableau":
        return Tableau(self.n, self.x.copy(), self.z.copy(), self.r.copy())

    def __eq__(self, other) -> bool:
        if not isinstance(other, Tableau):
            return NotImplemented
        return (self.n == other.n and np.array_equal(self.x, other.x)
                and np.array_equal(self.z, other.z) and np.array_equal(self.r, other.r))

    @property
    def n_words(self) -> int:
        return self.x.shape[1]

    def _check_qubit(self, q: int) -> None:
        if not 0 <= q < self.n:
            raise IndexError(f"qubit {q} out of range for {self.n} qubits")

    def h(self, q: int) -> "Tableau":
        self._check_qubit(q)
        K.apply_h(self.x, self.z, self.r, q)
        return self

    def s(self, q: int) -> "Tableau":
        self._check_qubit(q)
        K.apply_s(self.x, self.z, self.r, q)
        return self

    def cnot(self, c: int, t: int) -> "Tableau":
        self._check_qubit(c)
        self._check_qubit(t)
        if c == t:
            raise ValueError("CNOT control and target must differ")
        K.apply_cnot(self.x, self.z, self.r, c, t)
        return self

    def c1(self, q: int, index: int) -> "Tableau":
        self._check_qubit(q)
        if not 0 <= index < N_C1:
            raise ValueError(f"single-qubit Clifford index must be in [0, 24), got {index}")
        K.apply_c1(self.x, self.z, self.r, q, index, CONJUGATION_TABLE)
        return self

    def pauli(self, p: PauliString) -> "Tableau":
        if p.n != self.n:
            raise ValueError(f"Pauli acts on {p.n} qubits, tableau has {self.n}")
        K.apply_pauli_words(self.x, self.z, self.r, pack_bits(p.x), pack_bits(p.z))
        return self

    def apply(self, g) -> "Tableau":
        if isinstance(g, PauliString):
            return self.pauli(g)
        op, a, b = g
        if op == CNOT_OP:
            return self.cnot(a, b)
        return self.c1(a, op)

    def apply_program(self, prog: np.ndarray) -> "Tableau":
        """Apply a validated ``(G, 3)`` program array in one compiled loop."""
        prog = np.ascontiguousarray(prog, dtype=np.int32).reshape(-1, 3)
        K.apply_program(self.x, self.z, self.r, prog, CONJUGATION_TABLE)
        return self

    def row(self, i: int) -> PauliString:
        xb = unpack_bits(self.x[i], self.n)
        zb = unpack_bits(self.z[i], self.n)
        return PauliString(xb, zb, 2 * int(self.r[i]))

    def stabilizers(self) -> list[PauliString]:
        return [self.row(self.n + i) for i in range(self.n)]

    def destabilizers(self) -> list[PauliString]:
        return [self.row(i) for i in range(self.n)]

    def check_invariants(self) -> None:
        """Raise AssertionError unless the symplectic tableau invariants hold.

        The Gram matrix of the symplectic form must be the standard one, which
        also forces the ``2n`` rows to be linearly independent.
        """
        n = self.n
        xb = unpack_bits(self.x, n).astype(np.int64)
        zb = unpack_bits(self.z, n).astype(np.int64)
        form = (xb @ zb.T + zb @ xb.T) % 2
        expected = np.zeros((2 * n, 2 * n), dtype=np.int64)
        expected[np.arange(n), np.arange(n) + n] = 1
        expected[np.arange(n) + n, np.arange(n)] = 1
        if not np.array_equal(form, expected):
            raise AssertionError("symplectic form violated")


def new_zero_state(n: int) -> Tableau:
    """Tableau of |0^n>: stabilizers +Z_q, destabilizers +X_q."""
    return Tableau.zero(n)


def apply_gate(t: Tableau, g) -> Tableau:
    return t.apply(g)


def measure_z(t: Tableau, q: int, rng: np.random.Generator) -> tuple[int, bool]:
    """Measure qubit ``q`` in the Z basis, collapsing ``t``.

    Returns ``(bit, was_random)``.
    """
    t._check_qubit(q)
    coin = int(rng.integers(2))
    w = t.n_words
    res = K.measure(t.x, t.z, t.r, t.n, q, coin, np.zeros(w, np.uint64), np.zeros(w, np.uint64))
    return int(res & 1), bool(res >= 2)


def _as_bits(x, n: int) -> np.ndarray:
    if isinstance(x, str):
        x = [int(ch) for ch in x]
    bits = np.asarray(x, dtype=np.int64)
    if bits.shape != (n,):
        raise ValueError(f"bitstring has length {bits.size}, expected {n}")
    if np.any((bits != 0) & (bits != 1)):
        raise ValueError("bitstring entries must be 0 or 1")
    return bits


def amplitude_exponent(t: Tableau, x) -> int | None:
    """Return ``k`` with ``|<x|psi>|^2 = 2^-k``, or ``None`` when it is zero.

    Post-selects each qubit in turn on a copy of ``t``; ``t`` is not mutated.
    """
    bits = _as_bits(x, t.n)
    c = t.copy()
    k = K.postselect_exponent(c.x, c.z, c.r, t.n, bits)
    return None if k == K.ZERO_EXPONENT else int(k)


@dataclass(frozen=True)
class StabilizerSupport:
    """Affine computational-basis support ``offset + span(basis)`` of a stabilizer
    state, uniform with probability ``2^-k`` on each element."""

    n: int
    k: int
    basis: np.ndarray
    offset: np.ndarray
    cons_z: np.ndarray
    cons_r: np.ndarray

    @classmethod
    def from_stabilizer_rows(cls, n, x, z, r) -> "StabilizerSupport":
        x, z, r = x.copy(), z.copy(), r.copy()
        w = x.shape[1]
        basis = np.zeros((n, w), dtype=np.uint64)
        offset = np.zeros(w, dtype=np.uint64)
        cons_z = np.zeros((n, w), dtype=np.uint64)
        cons_r = np.zeros(n, dtype=np.uint8)
        k = int(K.support(x, z, r, n, basis, offset, cons_z, cons_r))
        return cls(n, k, basis, offset, cons_z, cons_r)

    @classmethod
    def from_tableau(cls, t: Tableau) -> "StabilizerSupport":
        n = t.n
        return cls.from_stabilizer_rows(n, t.x[n:], t.z[n:], t.r[n:])

    def exponent_packed(self, words: np.ndarray) -> int | None:
        e = K.support_exponent(self.k, self.cons_z, self.cons_r, self.n - self.k, words)
        return None if e == K.ZERO_EXPONENT else int(e)

    def exponent(self, x) -> int | None:
        return self.exponent_packed(pack_bits(_as_bits(x, self.n)))

    def offset_bits(self) -> np.ndarray:
        return unpack_bits(self.offset, self.n)

    def sample(self, rng: np.random.Generator) -> np.ndarray:
        words = rng.bit_generator.random_raw(self.offset.shape[0])
        out = np.zeros_like(self.offset)
        K.support_sample(self.k, self.basis, self.offset, np.asarray(words, dtype=np.uint64), out)
        return unpack_bits(out, self.n)
