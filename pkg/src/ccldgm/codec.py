"""Source words, index words and the mod-2 reconstruction map.

Words are ``uint8`` arrays holding one bit per entry. Index words under
construction use :data:`UNSET` for code-bits that have not been fixed yet.
"""

from __future__ import annotations

import numpy as np

from .ensemble import FactorGraph

UNSET = np.uint8(255)


def _as_bits(word, name: str) -> np.ndarray:
    arr = np.asarray(word)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be 1-d")
    return arr.astype(np.uint8, copy=False)


def is_complete(u) -> bool:
    u = np.asarray(u)
    return bool(np.all(u <= 1))


def reconstruct(graph: FactorGraph, u) -> np.ndarray:
    """Reconstruction bits ``x_hat[a] = XOR of u over the neighbors of a``.

    The graph's original topology is used regardless of decimation state.
    """
    u = _as_bits(u, "u")
    if u.size != graph.num_code_bits:
        raise ValueError(f"u has length {u.size}, graph has {graph.num_code_bits} code-bits")
    if not is_complete(u):
        raise ValueError("index word still has unset code-bits")
    return (
        np.bincount(graph.edge_gen, weights=u[graph.edge_bit], minlength=graph.num_generators)
        .astype(np.int64)
        & 1
    ).astype(np.uint8)


def hamming(x, x_hat) -> int:
    x = _as_bits(x, "x")
    x_hat = _as_bits(x_hat, "x_hat")
    if x.shape != x_hat.shape:
        raise ValueError(f"length mismatch: {x.size} vs {x_hat.size}")
    return int(np.count_nonzero(x != x_hat))


def distortion(x, x_hat) -> float:
    """Normalized Hamming distance in [0, 1]."""
    x = _as_bits(x, "x")
    if x.size == 0:
        raise ValueError("empty words")
    return hamming(x, x_hat) / x.size


def sample_source(length: int, seed=None) -> np.ndarray:
    """i.i.d. Bernoulli(1/2) source bits."""
    if length < 1:
        raise ValueError(f"length must be >= 1, got {length}")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    return rng.integers(0, 2, size=length, dtype=np.uint8)


def to_ascii(word) -> str:
    """Bits as a ``0``/``1`` string; unset entries become ``*``."""
    word = _as_bits(word, "word")
    table = np.frombuffer(b"01", dtype=np.uint8)
    out = np.full(word.size, ord("*"), dtype=np.uint8)
    set_ = word <= 1
    out[set_] = table[word[set_]]
    return out.tobytes().decode("ascii")


def from_ascii(text: str) -> np.ndarray:
    raw = np.frombuffer(text.strip().encode("ascii"), dtype=np.uint8)
    bits = np.full(raw.size, UNSET, dtype=np.uint8)
    bits[raw == ord("0")] = 0
    bits[raw == ord("1")] = 1
    bad = (raw != ord("0")) & (raw != ord("1")) & (raw != ord("*"))
    if np.any(bad):
        raise ValueError("ASCII word may only contain 0, 1 and *")
    return bits


def pack(word) -> bytes:
    """Little-endian packed bits (bit k of the word is bit k % 8 of byte k // 8)."""
    word = _as_bits(word, "word")
    if not is_complete(word):
        raise ValueError("cannot pack a word with unset entries")
    return np.packbits(word, bitorder="little").tobytes()


def unpack(data: bytes, length: int) -> np.ndarray:
    bits = np.unpackbits(np.frombuffer(data, dtype=np.uint8), bitorder="little")
    if bits.size < length:
        raise ValueError(f"{len(data)} bytes cannot hold {length} bits")
    return bits[:length].astype(np.uint8)
