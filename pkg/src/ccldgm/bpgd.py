"""BP-guided decimation encoder.

:func:`encode` runs full flooding sweeps on edge arrays that are compacted
from time to time, so decimated edges stop costing work. Every message it
produces is bit-identical to a sweep on the whole graph;
:func:`encode_reference` composes the plain module-level steps
(:func:`ccldgm.bp.sweep`, :func:`select_and_fix`, :func:`apply_decimation`)
and is used to cross-check the fast path.

Randomness inside a run comes from a SplitMix64 stream seeded once per
encode, so the two paths draw identical numbers.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np
from numba import njit

from . import bp
from .bp import BPParams, MessageState, bit_step, gen_step, source_signs
from .codec import UNSET, hamming, reconstruct
from .ensemble import FactorGraph, remove_code_bit

ZERO_BIAS = 1e-9
# compact once this share of the stored edges is dead
COMPACT_FRACTION = 0.25

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)


@njit(cache=True)
def _next_u64(state):
    state[0] += _GOLDEN
    z = state[0]
    z = (z ^ (z >> np.uint64(30))) * _MIX1
    z = (z ^ (z >> np.uint64(27))) * _MIX2
    return z ^ (z >> np.uint64(31))


@njit(cache=True)
def _below(state, k):
    # uniform integer in [0, k)
    r = _next_u64(state) >> np.uint64(11)
    return np.int64(math.floor(np.float64(r) * (1.0 / 9007199254740992.0) * k))


class SplitMix64:
    """Tiny counter-based stream shared by the compiled and reference encoders."""

    def __init__(self, seed):
        if isinstance(seed, np.random.SeedSequence):
            ss = seed
        else:
            ss = np.random.SeedSequence(seed)
        self.state = ss.generate_state(1, dtype=np.uint64)

    def below(self, k: int) -> int:
        return int(_below(self.state, k))


@dataclass(frozen=True)
class DecimationPolicy:
    """How a code-bit is chosen when no bias is available.

    With ``seeded=True`` (the default) a zero-bias round picks among the
    alive code-bits whose position lies in the seed window
    ``floor((L-w)/2) <= z <= ceil((L+w)/2)``; with ``seeded=False`` it picks
    from the whole graph. Ties of the largest bias are broken uniformly.
    """

    seeded: bool = True
    zero_threshold: float = ZERO_BIAS
    tie_break: str = "uniform"

    def __post_init__(self):
        if self.zero_threshold < 0:
            raise ValueError("zero_threshold must be >= 0")
        if self.tie_break != "uniform":
            raise ValueError(f"unknown tie_break {self.tie_break!r}")

    def window_positions(self, L: int, w: int) -> Optional[np.ndarray]:
        """Ring positions of the seed window, or ``None`` for the whole graph."""
        if not self.seeded or L == 1:
            return None
        lo = (L - w) // 2
        hi = min(-(-(L + w) // 2), L - 1)
        return np.arange(lo, hi + 1)

    def window_bits(self, graph: FactorGraph) -> np.ndarray:
        """Sorted ids of the code-bits inside the seed window (empty means global)."""
        if graph.spec is None or graph.num_positions == 1:
            return np.zeros(0, dtype=np.int64)
        pos = self.window_positions(graph.num_positions, graph.spec.w)
        if pos is None:
            return np.zeros(0, dtype=np.int64)
        return np.flatnonzero(np.isin(graph.bit_position, pos)).astype(np.int64)


@dataclass
class EncodingResult:
    """Outcome of one encoder run.

    ``profile`` holds the per-position distortion and ``total_distortion``
    its mean (equal-size positions). ``trace`` has one entry per decimation
    round: sweeps used, condition met, last message change and largest
    absolute bias.
    """

    u: np.ndarray
    total_distortion: float
    profile: np.ndarray
    rounds: int
    sweeps: int
    condition_histogram: dict
    wall_time: float
    ledger_counts: np.ndarray
    trace: dict = field(repr=False, default_factory=dict)
    meta: dict = field(default_factory=dict)

    def to_json(self, path=None) -> str:
        record = {
            **self.meta,
            "total_distortion": self.total_distortion,
            "profile": [float(v) for v in self.profile],
            "rounds": self.rounds,
            "sweeps": self.sweeps,
            "condition_histogram": self.condition_histogram,
            "wall_time": self.wall_time,
        }
        text = json.dumps(record, indent=2, sort_keys=True)
        if path is not None:
            Path(path).write_text(text + "\n")
        return text

    def trace_csv(self, path=None) -> str:
        lines = ["round,t1,condition,delta,max_bias"]
        tr = self.trace
        for k in range(len(tr.get("t1", ()))):
            lines.append(
                f"{k},{tr['t1'][k]},{bp.CONDITION_NAMES[int(tr['condition'][k])]},"
                f"{tr['delta'][k]:.10g},{tr['max_bias'][k]:.10g}"
            )
        text = "\n".join(lines) + "\n"
        if path is not None:
            Path(path).write_text(text)
        return text


class Ledger:
    """Mismatch counts of exhausted generators, per position."""

    def __init__(self, graph: FactorGraph, x):
        self.counts = np.zeros(graph.num_positions, dtype=np.int64)
        self.frozen = np.zeros(graph.num_generators, dtype=bool)
        self.freeze(graph, x, np.flatnonzero(graph.gen_degree == 0))

    def freeze(self, graph: FactorGraph, x, gens) -> None:
        for a in gens:
            if graph.gen_degree[a] == 0 and not self.frozen[a]:
                self.frozen[a] = True
                self.counts[graph.gen_position[a]] += int(x[a])


def select_and_fix(
    graph: FactorGraph,
    state: MessageState,
    policy: DecimationPolicy,
    rng: SplitMix64,
    window_bits: Optional[np.ndarray] = None,
) -> tuple[int, int]:
    """Pick the next code-bit to fix and its value from the current biases.

    If the largest absolute bias ``B`` is below the zero threshold, a
    code-bit is drawn uniformly from the seed window (or the whole graph)
    and fixed to a uniform random bit. Otherwise a code-bit is drawn from the
    set attaining ``B`` and fixed to the value its bias favors: ``0`` for a
    positive bias, ``1`` for a negative one.
    """
    alive = np.flatnonzero(graph.bit_alive)
    if alive.size == 0:
        raise ValueError("no alive code-bit left to fix")
    mags = np.abs(state.bias[alive])
    B = mags.max()
    if B < policy.zero_threshold:
        if window_bits is None:
            window_bits = policy.window_bits(graph)
        cand = window_bits[graph.bit_alive[window_bits] == 1] if window_bits.size else alive
        if cand.size == 0:
            cand = alive
        i = int(cand[rng.below(cand.size)])
        return i, rng.below(2)
    cand = alive[mags == B]
    i = int(cand[rng.below(cand.size)])
    return i, int(state.bias[i] < 0)


def apply_decimation(
    graph: FactorGraph, x: np.ndarray, i: int, u_i: int, ledger: Optional[Ledger] = None
) -> set[int]:
    """Fold ``u_i`` into the residuals of ``i``'s generators and delete ``i``.

    ``x`` is updated in place (XOR, once per edge). Generators left without
    edges are frozen into ``ledger``.
    """
    if not graph.bit_alive[i]:
        raise ValueError(f"code-bit {i} is not alive")
    if u_i:
        for e in graph.bit_edge_ids(i):
            x[graph.edge_gen[e]] ^= 1
    touched = remove_code_bit(graph, i)
    if ledger is not None:
        ledger.freeze(graph, x, sorted(touched))
    return touched


@njit(cache=True)
def _compact(gptr, gid, sg, ebit, bptr, bedges, bid, balive, y, th, eh):
    """Drop dead code-bits, their edges and generators left without edges."""
    nG = gid.size
    nB = bid.size
    E = ebit.size
    new_edge = np.full(E, -1, dtype=np.int64)
    keep_gen = 0
    kept = 0
    for a in range(nG):
        had = kept
        for e in range(gptr[a], gptr[a + 1]):
            if balive[ebit[e]]:
                new_edge[e] = kept
                kept += 1
        if kept > had:
            keep_gen += 1
    new_bit = np.full(nB, -1, dtype=np.int64)
    keep_bit = 0
    for i in range(nB):
        if balive[i]:
            new_bit[i] = keep_bit
            keep_bit += 1

    gptr2 = np.zeros(keep_gen + 1, dtype=np.int64)
    gid2 = np.empty(keep_gen, dtype=np.int64)
    sg2 = np.empty(keep_gen)
    egen2 = np.empty(kept, dtype=np.int64)
    ebit2 = np.empty(kept, dtype=np.int64)
    y2 = np.empty(kept)
    th2 = np.empty(kept)
    eh2 = np.empty(kept)
    c = 0
    for a in range(nG):
        end = -1
        for e in range(gptr[a], gptr[a + 1]):
            k = new_edge[e]
            if k >= 0:
                end = k + 1
                egen2[k] = c
                ebit2[k] = new_bit[ebit[e]]
                y2[k] = y[e]
                th2[k] = th[e]
                eh2[k] = eh[e]
        if end > 0:
            gid2[c] = gid[a]
            sg2[c] = sg[a]
            c += 1
            gptr2[c] = end
    bptr2 = np.zeros(keep_bit + 1, dtype=np.int64)
    bedges2 = np.empty(kept, dtype=np.int64)
    bid2 = np.empty(keep_bit, dtype=np.int64)
    q2 = 0
    for i in range(nB):
        j = new_bit[i]
        if j < 0:
            continue
        bid2[j] = bid[i]
        for q in range(bptr[i], bptr[i + 1]):
            bedges2[q2] = new_edge[bedges[q]]
            q2 += 1
        bptr2[j + 1] = q2
    return gptr2, gid2, sg2, egen2, ebit2, bptr2, bedges2, bid2, y2, th2, eh2


@njit(cache=True)
def _select(balive, bias, bid, B, zero_thr, window_bits, bit_alive, n_alive, rng_state):
    """Code-bit (original id) and value for the next decimation."""
    if B < zero_thr:
        count = 0
        for q in range(window_bits.size):
            if bit_alive[window_bits[q]]:
                count += 1
        chosen = -1
        if count > 0:
            k = _below(rng_state, count)
            for q in range(window_bits.size):
                if bit_alive[window_bits[q]]:
                    if k == 0:
                        chosen = window_bits[q]
                        break
                    k -= 1
        else:
            k = _below(rng_state, n_alive)
            for i in range(bit_alive.size):
                if bit_alive[i]:
                    if k == 0:
                        chosen = i
                        break
                    k -= 1
        return chosen, _below(rng_state, 2)
    count = 0
    for j in range(balive.size):
        if balive[j] and abs(bias[j]) == B:
            count += 1
    k = _below(rng_state, count)
    for j in range(balive.size):
        if balive[j] and abs(bias[j]) == B:
            if k == 0:
                return bid[j], 1 if bias[j] < 0.0 else 0
            k -= 1
    return -1, 0


@njit(cache=True)
def _decimate(j, value, bptr, bedges, egen, gid, sg, y, th, balive, x, deg, frozen, gen_pos, counts):
    """Fix compact code-bit ``j``; returns the number of edges it had."""
    balive[j] = 0
    for q in range(bptr[j], bptr[j + 1]):
        e = bedges[q]
        y[e] = np.inf
        th[e] = 1.0
        c = egen[e]
        a = gid[c]
        if value:
            x[a] ^= 1
            sg[c] = -sg[c]
        deg[a] -= 1
    for q in range(bptr[j], bptr[j + 1]):
        a = gid[egen[bedges[q]]]
        if deg[a] == 0 and frozen[a] == 0:
            frozen[a] = 1
            counts[gen_pos[a]] += x[a]
    return bptr[j + 1] - bptr[j]


def _check_inputs(graph: FactorGraph, x) -> np.ndarray:
    x = np.ascontiguousarray(x, dtype=np.uint8)
    if x.ndim != 1 or x.size != graph.num_generators:
        raise ValueError(
            f"source length {x.size} does not match {graph.num_generators} generators"
        )
    if np.any(x > 1):
        raise ValueError("source word must be binary")
    return x


def _finish(graph, x, u, counts, trace, rounds, sweeps, wall, meta) -> EncodingResult:
    pristine = graph.pristine()
    x_hat = reconstruct(pristine, u)
    mismatch = x != x_hat
    per_pos = np.bincount(
        graph.gen_position, weights=mismatch, minlength=graph.num_positions
    ).astype(np.int64)
    if not np.array_equal(per_pos, counts):
        raise RuntimeError("distortion ledger disagrees with the reconstruction")
    sizes = graph.gens_per_position
    profile = per_pos / sizes
    hist = {name: int(np.count_nonzero(trace["condition"] == c)) for c, name in bp.CONDITION_NAMES.items()}
    return EncodingResult(
        u=u,
        total_distortion=hamming(x, x_hat) / x.size,
        profile=profile,
        rounds=int(rounds),
        sweeps=int(sweeps),
        condition_histogram=hist,
        wall_time=wall,
        ledger_counts=counts,
        trace=trace,
        meta=meta,
    )


def _meta(graph, params, policy, seed) -> dict:
    s = graph.spec
    meta = {
        "beta": params.beta,
        "epsilon": params.epsilon,
        "alpha": params.alpha,
        "t_max": params.t_max,
        "seeded_window": policy.seeded,
        "graph_seed": graph.seed,
        "algorithm_seed": seed if isinstance(seed, (int, np.integer)) else None,
    }
    if s is not None:
        meta.update(l=s.l, r=s.r, n=s.n, L=s.L, w=s.w)
    return meta


def encode(
    graph: FactorGraph,
    x,
    params: BPParams = BPParams(),
    policy: DecimationPolicy = DecimationPolicy(),
    seed=None,
) -> EncodingResult:
    """Compress source word ``x`` into an index word on ``graph``.

    The graph is not modified; decimation runs on private copies of its
    state. ``seed`` drives the zero-bias picks and tie breaks.
    """
    x = _check_inputs(graph, x)
    if not np.all(graph.bit_alive) or not np.all(graph.edge_alive):
        raise ValueError("encode needs an undecimated graph")
    G = graph.num_generators
    N = graph.num_code_bits
    beta = float(params.beta)
    eps, alpha, t_max = float(params.epsilon), float(params.alpha), int(params.t_max)
    zero_thr = float(policy.zero_threshold)
    u = np.full(N, UNSET, dtype=np.uint8)
    trace = {
        "t1": np.zeros(N, dtype=np.int64),
        "condition": np.zeros(N, dtype=np.int64),
        "delta": np.zeros(N),
        "max_bias": np.zeros(N),
    }
    rng = SplitMix64(seed)
    window = policy.window_bits(graph)
    start = time.perf_counter()

    residual = x.copy()
    deg = graph.gen_degree.copy()
    frozen = (deg == 0).astype(np.uint8)
    counts = np.bincount(
        graph.gen_position, weights=frozen * residual, minlength=graph.num_positions
    ).astype(np.int64)
    bit_alive = np.ones(N, dtype=np.uint8)
    E = graph.num_edges
    gptr, gid, sg, egen, ebit, bptr, bedges, bid, y, th, eh = _compact(
        graph.gen_ptr, np.arange(G), source_signs(x, beta), graph.edge_bit,
        graph.bit_ptr, graph.bit_edges, np.arange(N), bit_alive, np.zeros(E), np.zeros(E), np.zeros(E),
    )
    balive = np.ones(bid.size, dtype=np.uint8)
    bias = np.zeros(bid.size)
    p, eh_new = np.empty(egen.size), np.empty(egen.size)
    local = np.arange(N)
    n_alive, dead = N, 0
    rounds = sweeps = work = 0
    while n_alive > 0:
        t = 0
        while True:
            t += 1
            gen_step(gptr, sg, beta, y, th, p, eh_new)
            delta, B = bit_step(bptr, bedges, balive, eh_new, eh, beta, y, bias)
            np.tanh(y, out=th)
            work += egen.size
            delta /= G
            if delta < eps:
                cond = bp.CONDITION_CONVERGED
            elif B > alpha:
                cond = bp.CONDITION_BIAS
            elif t >= t_max:
                cond = bp.CONDITION_BUDGET
            else:
                continue
            break
        sweeps += t
        trace["t1"][rounds] = t
        trace["condition"][rounds] = cond
        trace["delta"][rounds] = delta
        trace["max_bias"][rounds] = B
        i, value = _select(balive, bias, bid, B, zero_thr, window, bit_alive, n_alive, rng.state)
        u[i] = value
        bit_alive[i] = 0
        n_alive -= 1
        rounds += 1
        dead += _decimate(
            local[i], value, bptr, bedges, egen, gid, sg, y, th, balive,
            residual, deg, frozen, graph.gen_position, counts,
        )
        if n_alive and dead > COMPACT_FRACTION * egen.size:
            gptr, gid, sg, egen, ebit, bptr, bedges, bid, y, th, eh = _compact(
                gptr, gid, sg, ebit, bptr, bedges, bid, balive, y, th, eh
            )
            balive = np.ones(bid.size, dtype=np.uint8)
            bias = np.zeros(bid.size)
            p, eh_new = np.empty(egen.size), np.empty(egen.size)
            local[bid] = np.arange(bid.size)
            dead = 0
    wall = time.perf_counter() - start
    meta = _meta(graph, params, policy, seed)
    meta["message_updates"] = int(work)
    return _finish(graph, x, u, counts, trace, rounds, sweeps, wall, meta)


def encode_reference(
    graph: FactorGraph,
    x,
    params: BPParams = BPParams(),
    policy: DecimationPolicy = DecimationPolicy(),
    seed=None,
) -> EncodingResult:
    """Same algorithm as :func:`encode`, built from full flooding sweeps.

    Much slower; meant for small instances and for checking :func:`encode`.
    """
    x = _check_inputs(graph, x)
    g = graph.pristine()
    residual = x.copy()
    state = MessageState(g)
    rng = SplitMix64(seed)
    ledger = Ledger(g, residual)
    window = policy.window_bits(g)
    N = g.num_code_bits
    u = np.full(N, UNSET, dtype=np.uint8)
    trace = {k: [] for k in ("t1", "condition", "delta", "max_bias")}
    codes = {v: k for k, v in bp.CONDITION_NAMES.items()}
    start = time.perf_counter()
    sweeps = 0
    rounds = 0
    while np.any(g.bit_alive):
        t1, cond, delta = bp.run_until_decimation_condition(g, state, residual, params)
        sweeps += t1
        trace["t1"].append(t1)
        trace["condition"].append(codes[cond])
        trace["delta"].append(delta)
        trace["max_bias"].append(bp.max_abs_bias(g, state))
        i, value = select_and_fix(g, state, policy, rng, window)
        u[i] = value
        apply_decimation(g, residual, i, value, ledger)
        rounds += 1
    wall = time.perf_counter() - start
    trace = {k: np.asarray(v) for k, v in trace.items()}
    return _finish(
        graph, x, u, ledger.counts, trace, rounds, sweeps, wall, _meta(graph, params, policy, seed)
    )
