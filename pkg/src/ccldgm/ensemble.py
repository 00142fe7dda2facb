"""Regular LDGM and closed-chain coupled LDGM factor graphs.

A graph is stored as an edge table (one row per edge, generator id and
code-bit id) plus two CSR views, one per side. Decimation only flips alive
flags and degree counters, so both adjacency views read the same table and
stay symmetric by construction.

Node ids are dense and position-major: code-bit ``i`` sits at position
``i // m`` and generator ``a`` at position ``a // n``.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional, Union

import numpy as np


class ConstructionError(ValueError):
    """Raised for an ensemble specification that cannot be built."""


@dataclass(frozen=True)
class EnsembleSpec:
    """Parameters of an LDGM(l, r, n) or CCLDGM(l, r, L, w, n) ensemble.

    ``l`` is the generator degree, ``r`` the target code-bit degree, ``n``
    the number of generators per position, ``L`` the number of positions on
    the ring and ``w`` the coupling width. ``L = w = 1`` is the uncoupled
    ensemble.
    """

    l: int
    r: int
    n: int
    L: int = 1
    w: int = 1

    def __post_init__(self):
        for name in ("l", "r", "n", "L", "w"):
            value = getattr(self, name)
            if not isinstance(value, (int, np.integer)) or isinstance(value, bool):
                raise ConstructionError(f"{name} must be an integer, got {value!r}")
            if value < 1:
                raise ConstructionError(f"{name} must be >= 1, got {value}")
        if self.w > self.L:
            raise ConstructionError(f"w must satisfy w <= L, got w={self.w}, L={self.L}")
        if (self.n * self.l) % self.r != 0:
            raise ConstructionError(
                f"n*l/r must be an integer, got n*l={self.n * self.l}, r={self.r}"
            )

    @property
    def m(self) -> int:
        """Code-bits per position."""
        return self.n * self.l // self.r

    @property
    def rate(self) -> float:
        return self.m / self.n

    @property
    def coupled(self) -> bool:
        return self.L > 1

    @property
    def num_code_bits(self) -> int:
        return self.m * self.L

    @property
    def num_generators(self) -> int:
        return self.n * self.L

    @property
    def num_edges(self) -> int:
        return self.n * self.L * self.l


def _csr(keys: np.ndarray, size: int) -> tuple[np.ndarray, np.ndarray]:
    order = np.argsort(keys, kind="stable").astype(np.int64)
    counts = np.bincount(keys, minlength=size)
    ptr = np.zeros(size + 1, dtype=np.int64)
    np.cumsum(counts, out=ptr[1:])
    return ptr, order


class FactorGraph:
    """Mutable bipartite graph of code-bits and generators.

    Parameters
    ----------
    edge_gen, edge_bit : array_like of int
        Generator and code-bit endpoint of every edge. Parallel edges are
        allowed and kept as distinct edges.
    num_generators, num_code_bits : int
    gen_position, bit_position : array_like of int
        Ring position of every node.
    num_positions : int
    spec : EnsembleSpec, optional
        The ensemble the graph was sampled from, if any.
    seed : int, optional
        Sampling seed, recorded for dumps.
    """

    def __init__(
        self,
        edge_gen,
        edge_bit,
        num_generators: int,
        num_code_bits: int,
        gen_position=None,
        bit_position=None,
        num_positions: int = 1,
        spec: Optional[EnsembleSpec] = None,
        seed: Optional[int] = None,
    ):
        edge_gen = np.asarray(edge_gen, dtype=np.int64)
        edge_bit = np.asarray(edge_bit, dtype=np.int64)
        if edge_gen.shape != edge_bit.shape or edge_gen.ndim != 1:
            raise ConstructionError("edge arrays must be 1-d and of equal length")
        if edge_gen.size and (edge_gen.min() < 0 or edge_gen.max() >= num_generators):
            raise ConstructionError("generator id out of range")
        if edge_bit.size and (edge_bit.min() < 0 or edge_bit.max() >= num_code_bits):
            raise ConstructionError("code-bit id out of range")
        # edges of one generator are contiguous
        order = np.argsort(edge_gen, kind="stable")
        self.edge_gen = edge_gen[order]
        self.edge_bit = edge_bit[order]
        self.num_generators = int(num_generators)
        self.num_code_bits = int(num_code_bits)
        self.num_positions = int(num_positions)
        if gen_position is None:
            gen_position = np.zeros(num_generators, dtype=np.int64)
        if bit_position is None:
            bit_position = np.zeros(num_code_bits, dtype=np.int64)
        self.gen_position = np.asarray(gen_position, dtype=np.int64)
        self.bit_position = np.asarray(bit_position, dtype=np.int64)
        self.spec = spec
        self.seed = seed

        self.gen_ptr, _ = _csr(self.edge_gen, self.num_generators)
        self.bit_ptr, self.bit_edges = _csr(self.edge_bit, self.num_code_bits)

        self.edge_alive = np.ones(self.num_edges, dtype=np.uint8)
        self.bit_alive = np.ones(self.num_code_bits, dtype=np.uint8)
        self.gen_degree = np.diff(self.gen_ptr).astype(np.int64)

    @classmethod
    def from_edges(
        cls,
        edges: Iterable[tuple[int, int]],
        num_generators: int,
        num_code_bits: int,
    ) -> "FactorGraph":
        """Build a single-position graph from ``(generator, code_bit)`` pairs."""
        pairs = np.asarray(list(edges), dtype=np.int64).reshape(-1, 2)
        return cls(pairs[:, 0], pairs[:, 1], num_generators, num_code_bits)

    @property
    def num_edges(self) -> int:
        return int(self.edge_gen.size)

    @property
    def gens_per_position(self) -> np.ndarray:
        return np.bincount(self.gen_position, minlength=self.num_positions)

    def gen_edges(self, a: int) -> np.ndarray:
        """Edge ids of generator ``a`` (alive or not)."""
        return np.arange(self.gen_ptr[a], self.gen_ptr[a + 1])

    def bit_edge_ids(self, i: int) -> np.ndarray:
        """Edge ids of code-bit ``i`` (alive or not)."""
        return self.bit_edges[self.bit_ptr[i] : self.bit_ptr[i + 1]]

    def gen_neighbors(self, a: int) -> list[int]:
        """Current neighborhood of generator ``a`` as a multiset (list)."""
        e = self.gen_edges(a)
        return self.edge_bit[e[self.edge_alive[e] == 1]].tolist()

    def bit_neighbors(self, i: int) -> list[int]:
        e = self.bit_edge_ids(i)
        return self.edge_gen[e[self.edge_alive[e] == 1]].tolist()

    def exhausted(self) -> np.ndarray:
        """Boolean mask of generators with no alive edge left."""
        return self.gen_degree == 0

    def alive_code_bits(self) -> np.ndarray:
        return np.flatnonzero(self.bit_alive)

    def copy(self) -> "FactorGraph":
        g = object.__new__(FactorGraph)
        g.__dict__.update(self.__dict__)
        g.edge_alive = self.edge_alive.copy()
        g.bit_alive = self.bit_alive.copy()
        g.gen_degree = self.gen_degree.copy()
        return g

    def pristine(self) -> "FactorGraph":
        """Copy of this graph with every node and edge alive again."""
        g = self.copy()
        g.edge_alive[:] = 1
        g.bit_alive[:] = 1
        g.gen_degree = np.diff(g.gen_ptr).astype(np.int64)
        return g

    def check_invariants(self, window: Optional[int] = None) -> None:
        """Full scan of the structural invariants; raises AssertionError.

        ``window`` additionally checks that every edge joins a generator at
        position ``z`` to a code-bit in ``z, ..., z + window - 1 (mod L)``.
        """
        alive_from_bits = self.bit_alive[self.edge_bit].astype(bool)
        assert np.array_equal(alive_from_bits, self.edge_alive.astype(bool)), (
            "edge alive flags disagree with code-bit alive flags"
        )
        deg = np.bincount(
            self.edge_gen, weights=self.edge_alive, minlength=self.num_generators
        ).astype(np.int64)
        assert np.array_equal(deg, self.gen_degree), "generator degree counters drifted"
        # adjacency symmetry: i in da  <=>  a in di, with multiplicity
        for a in range(self.num_generators):
            for i in set(self.gen_neighbors(a)):
                assert self.gen_neighbors(a).count(i) == self.bit_neighbors(i).count(a)
        for i in range(self.num_code_bits):
            for a in set(self.bit_neighbors(i)):
                assert self.gen_neighbors(a).count(i) == self.bit_neighbors(i).count(a)
        if window is not None:
            offset = (self.bit_position[self.edge_bit] - self.gen_position[self.edge_gen]) % (
                self.num_positions
            )
            assert np.all(offset < window), "edge leaves the coupling window"

    def edge_list(self) -> np.ndarray:
        """Alive edges as an ``(E, 2)`` array of ``(generator, code_bit)``."""
        keep = self.edge_alive == 1
        return np.column_stack([self.edge_gen[keep], self.edge_bit[keep]])


def _rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def _seed_label(seed) -> Optional[int]:
    return int(seed) if isinstance(seed, (int, np.integer)) else None


def _positions(spec: EnsembleSpec) -> tuple[np.ndarray, np.ndarray]:
    gen_pos = np.repeat(np.arange(spec.L, dtype=np.int64), spec.n)
    bit_pos = np.repeat(np.arange(spec.L, dtype=np.int64), spec.m)
    return gen_pos, bit_pos


def sample_uncoupled(spec: EnsembleSpec, seed=None) -> FactorGraph:
    """Sample an (l, r, n)-regular LDGM graph with the configuration model.

    The ``n*l`` generator sockets are matched to a uniformly random
    permutation of the ``m*r`` code-bit sockets, so both sides are exactly
    regular. Parallel edges are kept.
    """
    if spec.L != 1:
        raise ConstructionError(f"sample_uncoupled needs L=1, got L={spec.L}")
    rng = _rng(seed)
    sockets = rng.permutation(spec.num_edges)
    edge_gen = np.arange(spec.num_edges, dtype=np.int64) // spec.l
    edge_bit = sockets // spec.r
    gen_pos, bit_pos = _positions(spec)
    return FactorGraph(
        edge_gen, edge_bit, spec.num_generators, spec.num_code_bits,
        gen_pos, bit_pos, spec.L, spec=spec, seed=_seed_label(seed),
    )


def sample_coupled(spec: EnsembleSpec, seed=None) -> FactorGraph:
    """Sample a closed-chain CCLDGM(l, r, L, w, n) graph.

    The ``n*l`` generator sockets at position ``z`` are split into ``w``
    near-equal groups, assigned to sockets by a random permutation, and group
    ``k`` is sent to position ``z + k (mod L)``. Every position then receives
    exactly ``n*l = m*r`` sockets, which are matched to a random permutation
    of its code-bit sockets. Both sides are exactly regular. Parallel edges
    are kept.
    """
    rng = _rng(seed)
    n, l, L, w, m = spec.n, spec.l, spec.L, spec.w, spec.m
    nl = n * l
    counts = np.full(w, nl // w, dtype=np.int64)
    counts[: nl % w] += 1
    groups = np.repeat(np.arange(w, dtype=np.int64), counts)
    edge_gen = np.arange(spec.num_edges, dtype=np.int64) // l
    shift = np.concatenate([rng.permutation(groups) for _ in range(L)])
    target = (edge_gen // n + shift) % L
    order = np.argsort(target, kind="stable")
    edge_bit = np.empty_like(edge_gen)
    for z in range(L):
        edge_bit[order[z * nl : (z + 1) * nl]] = z * m + rng.permutation(nl) // spec.r
    gpos, bpos = _positions(spec)
    return FactorGraph(
        edge_gen, edge_bit, spec.num_generators, spec.num_code_bits,
        gpos, bpos, spec.L, spec=spec, seed=_seed_label(seed),
    )


def sample(spec: EnsembleSpec, seed=None) -> FactorGraph:
    """Sample from ``spec``, uncoupled when ``L == 1``."""
    if spec.L == 1:
        return sample_uncoupled(spec, seed)
    return sample_coupled(spec, seed)


def remove_code_bit(graph: FactorGraph, i: int) -> set[int]:
    """Delete code-bit ``i`` and its edges; return the generators touched.

    Generators whose degree drops to zero become exhausted, see
    :meth:`FactorGraph.exhausted`.
    """
    if not 0 <= i < graph.num_code_bits:
        raise IndexError(f"code-bit {i} out of range")
    if not graph.bit_alive[i]:
        raise ValueError(f"code-bit {i} was already removed")
    graph.bit_alive[i] = 0
    touched = set()
    for e in graph.bit_edge_ids(i):
        graph.edge_alive[e] = 0
        a = int(graph.edge_gen[e])
        graph.gen_degree[a] -= 1
        touched.add(a)
    return touched


def dump_edges(graph: FactorGraph, path: Union[str, Path, None] = None) -> str:
    """Write the alive edge list, one ``generator code_bit`` pair per line.

    The header line is ``l r n L w seed``; custom graphs write ``-`` for the
    ensemble fields.
    """
    s = graph.spec
    head = [s.l, s.r, s.n, s.L, s.w] if s is not None else ["-"] * 5
    head.append("-" if graph.seed is None else graph.seed)
    lines = [" ".join(str(v) for v in head)]
    lines += [f"{a} {i}" for a, i in graph.edge_list()]
    text = "\n".join(lines) + "\n"
    if path is not None:
        Path(path).write_text(text)
    return text


def load_edges(source: Union[str, Path]) -> FactorGraph:
    """Inverse of :func:`dump_edges` for ensemble-sampled graphs."""
    text = Path(source).read_text() if isinstance(source, Path) or "\n" not in str(source) else source
    rows = [ln.split() for ln in text.strip().splitlines()]
    head = rows[0]
    if "-" in head[:5]:
        raise ConstructionError("only ensemble dumps carry enough metadata to reload")
    spec = EnsembleSpec(*(int(v) for v in head[:5]))
    seed = None if head[5] == "-" else int(head[5])
    pairs = np.asarray(rows[1:], dtype=np.int64).reshape(-1, 2)
    gpos, bpos = _positions(spec)
    return FactorGraph(
        pairs[:, 0], pairs[:, 1], spec.num_generators, spec.num_code_bits,
        gpos, bpos, spec.L, spec=spec, seed=seed,
    )
