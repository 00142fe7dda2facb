"""Exhaustive enumeration over index words for tiny graphs.

Everything here is exact up to floating-point summation: the Gibbs weights
``exp(-beta * d_H(x, x_hat(u)))`` are summed over all ``2**N`` index words.
The current (alive) topology of the graph is used, so a partially decimated
graph together with its residual source bits is a valid input.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .ensemble import FactorGraph

MAX_CODE_BITS = 24


class CapacityError(ValueError):
    """The instance has too many code-bits to enumerate."""


@dataclass
class GibbsSummary:
    beta: float
    log_Z: float
    marginals: np.ndarray  # P(u_i = 1)
    d_min: float
    argmin_count: int
    num_generators: int

    @property
    def free_energy_distortion(self) -> float:
        """``-log Z / (beta * nL)``, which tends to ``d_min`` as beta grows."""
        return -self.log_Z / (self.beta * self.num_generators)


def _generator_masks(graph: FactorGraph) -> np.ndarray:
    masks = np.zeros(graph.num_generators, dtype=np.uint64)
    for a, i in graph.edge_list():
        # parallel edges cancel under XOR
        masks[a] ^= np.uint64(1) << np.uint64(i)
    return masks


def distortion_table(graph: FactorGraph, x) -> np.ndarray:
    """Hamming distortion count ``d_H(x, x_hat(u))`` for every index word ``u``.

    Entry ``k`` belongs to the word whose bit ``i`` is ``(k >> i) & 1``.
    """
    N = graph.num_code_bits
    if N > MAX_CODE_BITS:
        raise CapacityError(f"{N} code-bits exceed the enumeration cap of {MAX_CODE_BITS}")
    x = np.asarray(x, dtype=np.uint8)
    if x.size != graph.num_generators:
        raise ValueError("source length does not match generator count")
    words = np.arange(1 << N, dtype=np.uint64)
    counts = np.zeros(words.size, dtype=np.int32)
    for mask, bit in zip(_generator_masks(graph), x):
        parity = np.bitwise_count(words & mask) & 1
        counts += parity != bit
    return counts


def brute_force(graph: FactorGraph, x, beta: float) -> GibbsSummary:
    """Exact ``log Z``, code-bit marginals and minimum distortion."""
    if beta < 0:
        raise ValueError("beta must be >= 0")
    d = distortion_table(graph, x)
    N = graph.num_code_bits
    G = graph.num_generators
    d_min = int(d.min())
    log_w = -beta * (d - d_min).astype(np.float64)
    log_Z = float(logsumexp(log_w)) - beta * d_min
    w = np.exp(log_w)
    total = w.sum()
    marg = np.empty(N)
    for i in range(N):
        marg[i] = w.reshape(-1, 2, 1 << i)[:, 1, :].sum() / total
    return GibbsSummary(
        beta=float(beta),
        log_Z=log_Z,
        marginals=marg,
        d_min=d_min / G,
        argmin_count=int(np.count_nonzero(d == d_min)),
        num_generators=G,
    )


def is_tree(graph: FactorGraph) -> bool:
    """True when the alive graph has no cycle (a forest), parallel edges included."""
    edges = graph.edge_list()
    parent = list(range(graph.num_generators + graph.num_code_bits))

    def find(v):
        while parent[v] != v:
            parent[v] = parent[parent[v]]
            v = parent[v]
        return v

    for a, i in edges:
        ra, rb = find(int(a)), find(graph.num_generators + int(i))
        if ra == rb:
            return False
        parent[ra] = rb
    return True


def exact_marginals_tree(graph: FactorGraph, x, beta: float) -> np.ndarray:
    """Exact ``P(u_i = 1)`` on a tree (or forest) instance, by enumeration."""
    if not is_tree(graph):
        raise ValueError("graph has a cycle")
    return brute_force(graph, x, beta).marginals


def random_tree(num_code_bits: int, num_generators: int, rng) -> FactorGraph:
    """A random factor-graph tree that spans all nodes.

    Nodes are attached one at a time to a random earlier node of the other
    type, so the result is connected and acyclic.
    """
    rng = np.random.default_rng(rng)
    if num_code_bits < 1 or num_generators < 1:
        raise ValueError("need at least one node of each type")
    rest = ["g"] * (num_generators - 1) + ["c"] * (num_code_bits - 1)
    order = ["g", "c"] + [rest[k] for k in rng.permutation(len(rest))]
    n_gens = n_bits = 0
    edges = []
    for kind in order:
        if kind == "g":
            if n_bits:
                edges.append((n_gens, int(rng.integers(n_bits))))
            n_gens += 1
        else:
            edges.append((int(rng.integers(n_gens)), n_bits))
            n_bits += 1
    return FactorGraph.from_edges(edges, n_gens, n_bits)
