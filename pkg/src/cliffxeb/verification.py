"""Oracle cross-check suites shared by the ``verify`` command and the tests."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import networkx as nx
import numpy as np

from .analysis import haar_moments
from .ensembles import random_xor_general, spanning_tree
from .oracle import DenseState, sample_haar_beta
from .stabilizer import CNOT_OP, Tableau, amplitude_exponent, measure_z


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str
    seconds: float = 0.0

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'}  {self.name}: {self.detail} ({self.seconds:.1f}s)"


def random_clifford_program(n: int, gates: int, rng: np.random.Generator) -> np.ndarray:
    """Uniformly mixed single-qubit Cliffords and CNOTs on random qubits."""
    prog = np.empty((gates, 3), dtype=np.int32)
    for g in range(gates):
        if n > 1 and rng.random() < 0.4:
            a, b = rng.choice(n, size=2, replace=False)
            prog[g] = (CNOT_OP, a, b)
        else:
            prog[g] = (rng.integers(24), rng.integers(n), -1)
    return prog


def check_amplitudes(circuits: int = 1000, seed: int = 1, n_range=(2, 6), tol: float = 1e-12) -> CheckResult:
    """Stabilizer ``2^-k`` against dense ``|<x|psi>|^2`` on random circuits.

    Half the queried bitstrings are drawn from the dense output distribution so
    that nonzero amplitudes are exercised, half uniformly.
    """
    t0 = time.perf_counter()
    rng = np.random.default_rng(seed)
    worst = 0.0
    nonzero = 0
    for i in range(circuits):
        n = int(rng.integers(n_range[0], n_range[1] + 1))
        prog = random_clifford_program(n, int(rng.integers(1, 8 * n)), rng)
        t = Tableau.zero(n).apply_program(prog)
        probs = DenseState.zero(n).apply_program(prog).probabilities()
        if i % 2:
            idx = int(rng.choice(probs.size, p=probs / probs.sum()))
        else:
            idx = int(rng.integers(probs.size))
        x = [(idx >> q) & 1 for q in range(n)]
        k = amplitude_exponent(t, x)
        stab = 0.0 if k is None else math.ldexp(1.0, -k)
        nonzero += k is not None
        worst = max(worst, abs(stab - float(probs[idx])))
    ok = worst <= tol
    return CheckResult("amplitude equivalence", ok,
                       f"{circuits} circuits, {nonzero} nonzero, max |diff| = {worst:.2e}",
                       time.perf_counter() - t0)


def check_haar(samples: int = 100_000, n: int = 3, seed: int = 2) -> CheckResult:
    t0 = time.perf_counter()
    beta = sample_haar_beta(n, samples, np.random.default_rng(seed))
    mean, var = haar_moments(n)
    se = math.sqrt(var / samples)
    z = (beta.mean() - mean) / se
    rel = abs(beta.var(ddof=1) - var) / var
    ok = abs(z) <= 4 and rel <= 0.10
    return CheckResult("Haar moments", ok,
                       f"n={n}: mean {beta.mean():.5f} vs {mean:.5f} ({z:+.2f} sigma), "
                       f"var {beta.var(ddof=1):.5f} vs {var:.5f} ({100 * rel:.1f}%)",
                       time.perf_counter() - t0)


def random_tree(n: int, rng: np.random.Generator) -> list[tuple[int, int]]:
    """Edges of a random labelled tree (random Pruefer sequence)."""
    if n == 1:
        return []
    if n == 2:
        return [(0, 1)]
    return list(nx.from_prufer_sequence(rng.integers(n, size=n - 2).tolist()).edges())


def xor_depth(layers) -> int:
    return sum(1 for layer in layers if layer)


def check_parity(trees: int = 500, max_n: int = 12, seed: int = 3, inputs: int = 4) -> CheckResult:
    """``random_xor_general`` sets the root to ``root ^ parity(S)`` and restores
    every other qubit, within the ``2 D Delta`` depth bound."""
    t0 = time.perf_counter()
    rng = np.random.default_rng(seed)
    failures = 0
    worst_ratio = 0.0
    for _ in range(trees):
        n = int(rng.integers(2, max_n + 1))
        tree = spanning_tree(random_tree(n, rng), n)
        members = [v for v in range(n) if v != tree.root and rng.random() < 0.75]
        layers = random_xor_general(tree, members=members)
        bound = 2 * tree.max_depth * tree.max_degree
        worst_ratio = max(worst_ratio, xor_depth(layers) / bound)
        if xor_depth(layers) > bound:
            failures += 1
            continue
        for _ in range(inputs):
            bits = rng.integers(0, 2, n)
            out = _run_basis(layers, bits, n)
            want = bits.copy()
            want[tree.root] ^= int(np.bitwise_xor.reduce(bits[members])) if members else 0
            if not np.array_equal(out, want):
                failures += 1
                break
    return CheckResult("parity circuits", failures == 0,
                       f"{trees} trees, {failures} failures, max depth / (2 D Delta) = {worst_ratio:.2f}",
                       time.perf_counter() - t0)


def _run_basis(layers, bits, n):
    """Run the CNOT layers on ``|bits>`` in the tableau simulator and read the result."""
    t = Tableau.zero(n)
    for q in range(n):
        if bits[q]:
            t.c1(q, 6)
    for layer in layers:
        for g in layer:
            t.cnot(g.a, g.b)
    rng = np.random.default_rng(0)
    out = []
    for q in range(n):
        bit, random = measure_z(t, q, rng)
        if random:
            raise AssertionError("CNOT circuit produced a superposition from a basis state")
        out.append(bit)
    return np.array(out)


def run_all(quick: bool = True) -> list[CheckResult]:
    scale = 0.1 if quick else 1.0
    return [
        check_amplitudes(max(50, int(1000 * scale))),
        check_haar(max(10_000, int(100_000 * scale))),
        check_parity(max(50, int(500 * scale))),
    ]
