"""Per-cycle gate distributions on the supported device topologies.

Each sampler draws one cycle from the distribution and returns it as a
:class:`Cycle`: an ordered list of layers, every layer a matching (no qubit
used twice).  Sequential CNOTs that share a qubit, such as the star random
XOR, therefore occupy one layer each.
"""

from __future__ import annotations

import enum
import functools
import itertools
from dataclasses import dataclass, field
from pathlib import Path

import networkx as nx
import numpy as np

from .cliffords import C1P1_INDICES, H as H_INDEX, PAULI_INDICES, S as S_INDEX
from .stabilizer import CNOT_OP, GateOp

XOR_PROBABILITY = 0.75
_C1P1 = np.array(C1P1_INDICES, dtype=np.int32)
_PAULIS = np.array(PAULI_INDICES, dtype=np.int32)


class EnsembleKind(str, enum.Enum):
    CHAIN_1D = "chain1d"
    GRID_2D = "grid2d"
    APPROX_TWIRL_STAR = "twirl_star"
    APPROX_TWIRL_GRAPH = "twirl_graph"


@dataclass(frozen=True)
class EnsembleSpec:
    kind: EnsembleKind
    n: int
    rows: int | None = None
    cols: int | None = None
    k: int = 2
    edges: tuple[tuple[int, int], ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "kind", EnsembleKind(self.kind))
        if self.n < 1:
            raise ValueError(f"n must be >= 1, got {self.n}")
        if self.k < 1:
            raise ValueError(f"twirl repetition count k must be >= 1, got {self.k}")
        if self.kind is EnsembleKind.GRID_2D:
            if self.rows is None or self.cols is None or self.rows * self.cols != self.n:
                raise ValueError(f"grid needs rows * cols == n, got {self.rows}x{self.cols} for n={self.n}")
        if self.kind is EnsembleKind.APPROX_TWIRL_STAR and self.n < 2:
            raise ValueError("star twirl needs n >= 2")
        if self.kind is EnsembleKind.APPROX_TWIRL_GRAPH:
            edges = tuple(sorted((min(u, v), max(u, v)) for u, v in self.edges))
            object.__setattr__(self, "edges", edges)
            _check_connected(self.n, edges)

    @classmethod
    def chain(cls, n: int) -> "EnsembleSpec":
        return cls(EnsembleKind.CHAIN_1D, n)

    @classmethod
    def grid(cls, rows: int, cols: int) -> "EnsembleSpec":
        return cls(EnsembleKind.GRID_2D, rows * cols, rows, cols)

    @classmethod
    def twirl_star(cls, n: int, k: int = 2) -> "EnsembleSpec":
        return cls(EnsembleKind.APPROX_TWIRL_STAR, n, k=k)

    @classmethod
    def twirl_graph(cls, edges, n: int | None = None, k: int = 2) -> "EnsembleSpec":
        edges = tuple((int(u), int(v)) for u, v in edges)
        if n is None:
            n = 1 + max(max(e) for e in edges)
        return cls(EnsembleKind.APPROX_TWIRL_GRAPH, n, k=k, edges=edges)

    @property
    def topology(self) -> str:
        return self.kind.value


@dataclass
class Cycle:
    """One draw from the per-cycle distribution.

    ``layers[i]`` is an ``(g, 3)`` int32 array of ``(op, a, b)`` rows (see
    :class:`~cliffxeb.stabilizer.GateOp`); ``tags[i]`` names the construction
    step the layer came from.
    """

    layers: list[np.ndarray]
    tags: list[str] = field(default_factory=list)

    @property
    def n_1q(self) -> int:
        return sum(int(np.count_nonzero(l[:, 0] != CNOT_OP)) for l in self.layers)

    @property
    def n_2q(self) -> int:
        return sum(int(np.count_nonzero(l[:, 0] == CNOT_OP)) for l in self.layers)

    def program(self) -> np.ndarray:
        if not self.layers:
            return np.zeros((0, 3), dtype=np.int32)
        return np.concatenate(self.layers)

    def gate_layers(self) -> list[list[GateOp]]:
        return [[GateOp(int(o), int(a), int(b)) for o, a, b in layer] for layer in self.layers]

    def is_valid(self) -> bool:
        for layer in self.layers:
            used = layer[:, 1].tolist() + [b for o, b in zip(layer[:, 0], layer[:, 2]) if o == CNOT_OP]
            if len(used) != len(set(used)):
                return False
        return True

    def __eq__(self, other) -> bool:
        if not isinstance(other, Cycle):
            return NotImplemented
        return (self.tags == other.tags and len(self.layers) == len(other.layers)
                and all(np.array_equal(a, b) for a, b in zip(self.layers, other.layers)))


def _single_layer(ops, qubits) -> np.ndarray:
    layer = np.empty((len(qubits), 3), dtype=np.int32)
    layer[:, 0] = ops
    layer[:, 1] = qubits
    layer[:, 2] = -1
    return layer


def _cnot_layer(pairs) -> np.ndarray:
    layer = np.empty((len(pairs), 3), dtype=np.int32)
    layer[:, 0] = CNOT_OP
    if pairs:
        layer[:, 1:] = np.asarray(pairs, dtype=np.int32)
    return layer


def _gate_layer(gates) -> np.ndarray:
    return np.asarray([tuple(g) for g in gates], dtype=np.int32).reshape(-1, 3)


_EMPTY = np.zeros((0, 3), dtype=np.int32)


# -- 1-D chain -------------------------------------------------------------

@functools.lru_cache(maxsize=None)
def _chain_static(n: int):
    even = _cnot_layer([(q, q + 1) for q in range(0, n - 1, 2)])
    odd = _cnot_layer([(q, q + 1) for q in range(1, n - 1, 2)])
    return np.arange(n, dtype=np.int32), even, odd


def sample_cycle_chain1d(spec: EnsembleSpec, rng: np.random.Generator) -> Cycle:
    if spec.kind is not EnsembleKind.CHAIN_1D:
        raise ValueError(f"expected a chain ensemble, got {spec.kind.value}")
    qubits, even, odd = _chain_static(spec.n)
    first = _single_layer(rng.integers(0, 24, spec.n), qubits)
    second = _single_layer(rng.integers(0, 24, spec.n), qubits)
    return Cycle([first, even, second, odd], ["1q", "cnot_even", "1q", "cnot_odd"])


# -- 2-D grid ----------------------------------------------------------------

MATCHING_NAMES = ("A", "B", "C", "D")


def grid_matching(kind: str, rows: int, cols: int) -> list[tuple[int, int]]:
    """CNOT pairs ``(control, target)`` of matching A, B, C or D on a grid.

    Qubit ``(r, c)`` is index ``r * cols + c``.  A/B are horizontal couplers
    whose left column is even/odd; C/D are vertical couplers whose top row is
    even/odd.
    """
    if rows < 1 or cols < 1:
        raise ValueError("grid dimensions must be positive")
    kind = kind.upper()
    if kind in ("A", "B"):
        start = 0 if kind == "A" else 1
        return [(r * cols + c, r * cols + c + 1)
                for r in range(rows) for c in range(start, cols - 1, 2)]
    if kind in ("C", "D"):
        start = 0 if kind == "C" else 1
        return [(r * cols + c, (r + 1) * cols + c)
                for r in range(start, rows - 1, 2) for c in range(cols)]
    raise ValueError(f"unknown matching {kind!r}")


@functools.lru_cache(maxsize=None)
def _grid_static(rows: int, cols: int):
    return tuple(_cnot_layer(grid_matching(m, rows, cols)) for m in MATCHING_NAMES)


def sample_cycle_grid2d(spec: EnsembleSpec, rng: np.random.Generator) -> Cycle:
    if spec.kind is not EnsembleKind.GRID_2D:
        raise ValueError(f"expected a grid ensemble, got {spec.kind.value}")
    matchings = _grid_static(spec.rows, spec.cols)
    first = _single_layer(rng.integers(0, 24, spec.n), np.arange(spec.n, dtype=np.int32))
    choice = int(rng.integers(4))
    return Cycle([first, matchings[choice]], ["1q", f"cnot_{MATCHING_NAMES[choice]}"])


# -- random XOR ---------------------------------------------------------------

def sample_random_xor_star(n: int, rng: np.random.Generator) -> list[GateOp]:
    """CNOTs from each of qubits ``1..n-1`` onto qubit 0, each kept with probability 3/4.

    The gates share their target and are meant to run sequentially.
    """
    if n < 2:
        raise ValueError("star random XOR needs n >= 2")
    keep = rng.random(n - 1) < XOR_PROBABILITY
    return [GateOp(CNOT_OP, q, 0) for q in range(1, n) if keep[q - 1]]


@dataclass(frozen=True)
class RootedTree:
    root: int
    parent: tuple[int, ...]
    children: tuple[tuple[int, ...], ...]
    depth: tuple[int, ...]

    @property
    def n(self) -> int:
        return len(self.parent)

    @property
    def max_depth(self) -> int:
        return max(self.depth)

    @property
    def max_degree(self) -> int:
        return max(len(self.children[v]) + (v != self.root) for v in range(self.n))

    def nodes_at(self, level: int) -> list[int]:
        return [v for v in range(self.n) if self.depth[v] == level]


def _graph(n, edges) -> nx.Graph:
    g = nx.Graph()
    g.add_nodes_from(range(n))
    g.add_edges_from(edges)
    return g


def _check_connected(n, edges) -> None:
    if any(not (0 <= u < n and 0 <= v < n) or u == v for u, v in edges):
        raise ValueError(f"edge list has an invalid edge for {n} qubits")
    if n > 1 and not nx.is_connected(_graph(n, edges)):
        raise ValueError("connectivity graph is not connected")


def spanning_tree(edges, n: int | None = None, root: int | None = None) -> RootedTree:
    """Shortest-path (BFS) spanning tree.

    With no ``root`` the tree is rooted at a graph center (smallest index on
    ties), so its depth equals the graph radius.
    """
    edges = [(int(u), int(v)) for u, v in edges]
    if n is None:
        n = 1 + max(max(e) for e in edges) if edges else 1
    _check_connected(n, edges)
    g = _graph(n, edges)
    if root is None:
        ecc = nx.eccentricity(g) if n > 1 else {0: 0}
        root = min(range(n), key=lambda v: (ecc[v], v))
    parent = [-1] * n
    depth = [0] * n
    children: list[list[int]] = [[] for _ in range(n)]
    for u, v in nx.bfs_edges(g, root, sort_neighbors=sorted):
        parent[v] = u
        depth[v] = depth[u] + 1
        children[u].append(v)
    return RootedTree(root, tuple(parent), tuple(tuple(sorted(c)) for c in children), tuple(depth))


def star_edges(n: int) -> list[tuple[int, int]]:
    return [(0, q) for q in range(1, n)]


def path_edges(n: int) -> list[tuple[int, int]]:
    return [(q, q + 1) for q in range(n - 1)]


def grid_edges(rows: int, cols: int) -> list[tuple[int, int]]:
    return [p for m in MATCHING_NAMES for p in grid_matching(m, rows, cols)]


def random_xor_general(tree: RootedTree, rng: np.random.Generator | None = None,
                       members=None) -> list[list[GateOp]]:
    """Layered CNOT circuit computing ``root ^= XOR of member qubits`` on a tree.

    Membership is drawn per non-root qubit (ascending index) with probability
    3/4 unless ``members`` is given.  Intermediate qubits are restored by
    replaying the collection gates in reverse.
    """
    n, root = tree.n, tree.root
    if members is None:
        draws = rng.random(n - 1) < XOR_PROBABILITY
        others = [v for v in range(n) if v != root]
        member = [False] * n
        for v, d in zip(others, draws):
            member[v] = bool(d)
    else:
        member = [False] * n
        for v in members:
            if v == root:
                raise ValueError("the root cannot be an XOR member")
            member[v] = True

    active = list(member)
    for v in sorted(range(n), key=lambda u: -tree.depth[u]):
        if v != root and active[v]:
            active[tree.parent[v]] = True

    collect: list[list[GateOp]] = []
    for level in range(tree.max_depth - 1, 0, -1):
        sequences = []
        for x in tree.nodes_at(level):
            if not active[x]:
                continue
            kids = [y for y in tree.children[x] if active[y]]
            seq = [] if member[x] else [GateOp(CNOT_OP, x, kids[0])]
            seq += [GateOp(CNOT_OP, y, x) for y in kids]
            sequences.append(seq)
        width = max((len(s) for s in sequences), default=0)
        for j in range(width):
            collect.append([s[j] for s in sequences if j < len(s)])
    to_root = [[GateOp(CNOT_OP, y, root)] for y in tree.children[root] if active[y]]
    return collect + to_root + [list(layer) for layer in reversed(collect)]


# -- Clifford approximate twirl ---------------------------------------------

@functools.lru_cache(maxsize=None)
def _twirl_tree(spec: EnsembleSpec) -> RootedTree:
    return spanning_tree(spec.edges, spec.n)


def twirl_center(spec: EnsembleSpec) -> int:
    """The qubit playing the role of the star center."""
    if spec.kind is EnsembleKind.APPROX_TWIRL_GRAPH:
        return _twirl_tree(spec).root
    return 0


def _xor_layers(spec, rng) -> list[np.ndarray]:
    if spec.kind is EnsembleKind.APPROX_TWIRL_STAR:
        layers = [_gate_layer([g]) for g in sample_random_xor_star(spec.n, rng)]
    else:
        layers = [_gate_layer(l) for l in random_xor_general(_twirl_tree(spec), rng)]
    return layers or [_EMPTY]


def sample_cycle_approx_twirl(spec: EnsembleSpec, rng: np.random.Generator) -> Cycle:
    if spec.kind not in (EnsembleKind.APPROX_TWIRL_STAR, EnsembleKind.APPROX_TWIRL_GRAPH):
        raise ValueError(f"expected a twirl ensemble, got {spec.kind.value}")
    n = spec.n
    center = twirl_center(spec)
    qubits = np.arange(n, dtype=np.int32)
    rest = qubits[qubits != center]
    layers = [_single_layer(_PAULIS[rng.integers(4, size=n)], qubits)]
    tags = ["pauli"]

    def add(block, tag):
        layers.extend(block)
        tags.extend([tag] * len(block))

    def center_h_and_twirl_rest():
        layer = np.empty((n, 3), dtype=np.int32)
        layer[0] = (H_INDEX, center, -1)
        layer[1:] = _single_layer(_C1P1[rng.integers(6, size=n - 1)], rest)
        return layer

    for rep in range(spec.k):
        add([_single_layer(_C1P1[rng.integers(6, size=n)], qubits)], f"r{rep}:c1p1")
        add(_xor_layers(spec, rng), f"r{rep}:xor0")
        add([center_h_and_twirl_rest()], f"r{rep}:h+c1p1")
        add(_xor_layers(spec, rng), f"r{rep}:xor1")
        add([center_h_and_twirl_rest()], f"r{rep}:h+c1p1")
        s_layer = _single_layer([S_INDEX], [center]) if rng.random() < 0.5 else _EMPTY
        add([s_layer], f"r{rep}:s")
        add(_xor_layers(spec, rng), f"r{rep}:xor2")
        add([_single_layer(_C1P1[rng.integers(6, size=1)], [center])], f"r{rep}:c1p1_center")
    return Cycle(layers, tags)


_SAMPLERS = {
    EnsembleKind.CHAIN_1D: sample_cycle_chain1d,
    EnsembleKind.GRID_2D: sample_cycle_grid2d,
    EnsembleKind.APPROX_TWIRL_STAR: sample_cycle_approx_twirl,
    EnsembleKind.APPROX_TWIRL_GRAPH: sample_cycle_approx_twirl,
}


def sample_cycle(spec: EnsembleSpec, rng: np.random.Generator) -> Cycle:
    return _SAMPLERS[spec.kind](spec, rng)


def sample_circuit(spec: EnsembleSpec, m: int, rng: np.random.Generator) -> list[Cycle]:
    return [sample_cycle(spec, rng) for _ in range(m)]


def circuit_program(cycles: list[Cycle]) -> np.ndarray:
    progs = [c.program() for c in cycles]
    if not progs:
        return np.zeros((0, 3), dtype=np.int32)
    return np.ascontiguousarray(np.concatenate(progs))


# -- exact per-cycle measure as independent factors ----------------------------

Factor = list[tuple[float, np.ndarray]]


def _choice_factor(indices, qubit) -> Factor:
    w = 1.0 / len(indices)
    return [(w, _single_layer([c], [qubit])) for c in indices]


def _fixed(prog) -> Factor:
    return [(1.0, prog)]


def _xor_factors(spec) -> list[Factor]:
    if spec.kind is EnsembleKind.APPROX_TWIRL_STAR:
        return [[(XOR_PROBABILITY, _gate_layer([GateOp(CNOT_OP, q, 0)])), (1 - XOR_PROBABILITY, _EMPTY)]
                for q in range(1, spec.n)]
    tree = _twirl_tree(spec)
    others = [v for v in range(spec.n) if v != tree.root]
    if len(others) > 16:
        raise ValueError("exact XOR enumeration limited to 17 qubits")
    alts = []
    for picks in itertools.product((False, True), repeat=len(others)):
        members = [v for v, p in zip(others, picks) if p]
        w = XOR_PROBABILITY ** len(members) * (1 - XOR_PROBABILITY) ** (len(others) - len(members))
        gates = [g for layer in random_xor_general(tree, members=members) for g in layer]
        alts.append((w, _gate_layer(gates) if gates else _EMPTY))
    return [alts]


def cycle_factors(spec: EnsembleSpec) -> list[Factor]:
    """The per-cycle measure as an ordered product of independent factors.

    Each factor is a finite distribution over gate sequences; a cycle is the
    concatenation of one independent draw per factor.  Single-qubit layers
    split into one factor per qubit.
    """
    n = spec.n
    c1 = list(range(24))
    if spec.kind is EnsembleKind.CHAIN_1D:
        _, even, odd = _chain_static(n)
        return ([_choice_factor(c1, q) for q in range(n)] + [_fixed(even)]
                + [_choice_factor(c1, q) for q in range(n)] + [_fixed(odd)])
    if spec.kind is EnsembleKind.GRID_2D:
        return ([_choice_factor(c1, q) for q in range(n)]
                + [[(0.25, m) for m in _grid_static(spec.rows, spec.cols)]])
    center = twirl_center(spec)
    rest = [q for q in range(n) if q != center]
    c1p1 = list(C1P1_INDICES)
    h_center = _fixed(_single_layer([H_INDEX], [center]))
    factors = [_choice_factor(PAULI_INDICES, q) for q in range(n)]
    for _ in range(spec.k):
        factors += [_choice_factor(c1p1, q) for q in range(n)]
        factors += _xor_factors(spec)
        factors += [h_center] + [_choice_factor(c1p1, q) for q in rest]
        factors += _xor_factors(spec)
        factors += [h_center] + [_choice_factor(c1p1, q) for q in rest]
        factors += [[(0.5, _single_layer([S_INDEX], [center])), (0.5, _EMPTY)]]
        factors += _xor_factors(spec)
        factors += [_choice_factor(c1p1, center)]
    return factors


def read_edge_list(path) -> list[tuple[int, int]]:
    """Parse ``u v`` pairs, one per line, 0-indexed; ``#`` starts a comment."""
    edges = []
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise ValueError(f"{path}:{lineno}: expected 'u v', got {line!r}")
        edges.append((int(parts[0]), int(parts[1])))
    return edges
