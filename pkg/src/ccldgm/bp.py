"""Belief propagation on LDGM factor graphs.

Messages live on edges: ``eta[e]`` is the code-bit to generator message and
``eta_hat[e]`` the generator to code-bit message. Both are in the
"half-field" parametrization where a generator with a single edge and
source bit 0 sends ``+1/2``, so a positive bias favors ``u_i = 0``.

A sweep is split into :func:`gen_step` and :func:`bit_step`, with the
transcendental parts done by vectorized numpy calls in between. The
encoder in :mod:`ccldgm.bpgd` runs the same two steps on compacted arrays,
so both produce bit-identical messages.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from numba import njit

from .ensemble import FactorGraph

# tanh(7) = 1 - 1.7e-6: beyond this the direct product loses digits
DIRECT_LIMIT = 7.0
ATANH_CLAMP = 1.0 - 1e-12
LN2 = math.log(2.0)

CONDITION_CONVERGED = 1
CONDITION_BIAS = 2
CONDITION_BUDGET = 3
CONDITION_NAMES = {CONDITION_CONVERGED: "i", CONDITION_BIAS: "ii", CONDITION_BUDGET: "iii"}


@dataclass(frozen=True)
class BPParams:
    """Inverse temperature and decimation-condition parameters.

    Defaults are the values used throughout the original experiments.
    """

    beta: float = 2.0
    epsilon: float = 0.01
    alpha: float = 4.25
    t_max: int = 10

    def __post_init__(self):
        if not (self.beta > 0 and math.isfinite(self.beta)):
            raise ValueError(f"beta must be a positive finite number, got {self.beta}")
        if not self.epsilon > 0:
            raise ValueError(f"epsilon must be > 0, got {self.epsilon}")
        if not self.alpha > 0:
            raise ValueError(f"alpha must be > 0, got {self.alpha}")
        if int(self.t_max) != self.t_max or self.t_max < 1:
            raise ValueError(f"t_max must be an integer >= 1, got {self.t_max}")


@njit(cache=True, inline="always")
def fast_tanh(y):
    # exp form; absolute error ~1e-16, which is all the products downstream need
    t = math.exp(-2.0 * abs(y))
    v = (1.0 - t) / (1.0 + t)
    return v if y >= 0.0 else -v


@njit(cache=True, inline="always")
def fast_atanh(p):
    return 0.5 * math.log((1.0 + p) / (1.0 - p))


@njit(cache=True)
def _log_phi(x):
    # log of phi(x) = -log tanh(x/2) = 2 atanh(exp(-x)), x > 0
    t = math.exp(-x)
    if t < 1e-8:
        return LN2 - x
    if t < 0.5:
        return math.log(math.log1p(t) - math.log1p(-t))
    return math.log(math.log1p(t) - math.log(-math.expm1(-x)))


@njit(cache=True)
def _half_phi_from_log(log_s):
    # 0.5 * phi(S) for S = exp(log_s)
    if log_s < -18.0:
        return 0.5 * (LN2 - log_s)
    s = math.exp(log_s)
    if s < 1.0:
        return -0.5 * math.log(math.tanh(0.5 * s))
    return -0.5 * math.log1p(-2.0 / (math.exp(s) + 1.0))


@njit(cache=True, inline="always")
def _clip_half(v):
    if v > 0.5:
        return 0.5
    if v < -0.5:
        return -0.5
    return v


@njit(cache=True)
def _log_domain(sign, beta, ys, k, skip):
    # atanh(sign * tanh(beta/2) * prod tanh(ys)) / beta via phi sums, for saturated inputs
    out_sign = sign
    top = _log_phi(beta)
    for j in range(k):
        if j != skip:
            if ys[j] < 0.0:
                out_sign = -out_sign
            q = _log_phi(2.0 * abs(ys[j]))
            if q > top:
                top = q
    acc = math.exp(_log_phi(beta) - top)
    for j in range(k):
        if j != skip:
            acc += math.exp(_log_phi(2.0 * abs(ys[j])) - top)
    return _clip_half(out_sign * _half_phi_from_log(top + math.log(acc)) / beta)


@njit(cache=True, inline="always")
def gen_messages(sign, beta, tanh_half_beta, ys, ts, k, out):
    """All ``k`` outgoing messages of one generator, written to ``out[:k]``.

    ``ys[j] = beta * eta_j`` and ``ts[j] = tanh(ys[j])`` for the alive
    edges; ``sign`` is ``(-1)**x_a``. Saturated inputs switch to a log-domain
    evaluation of ``atanh(prod tanh)`` so that the large-beta (min-sum)
    regime keeps its precision.
    """
    zeros = 0
    zero_at = -1
    big = 0.5 * beta > DIRECT_LIMIT
    for j in range(k):
        y = ys[j]
        if y == 0.0:
            zeros += 1
            zero_at = j
        elif abs(y) > DIRECT_LIMIT:
            big = True
    if zeros > 0:
        for j in range(k):
            out[j] = 0.0
        if zeros == 1:
            if big:
                out[zero_at] = _log_domain(sign, beta, ys, k, zero_at)
            else:
                p = sign * tanh_half_beta
                for j in range(k):
                    if j != zero_at:
                        p *= ts[j]
                out[zero_at] = _clip_half(fast_atanh(min(max(p, -ATANH_CLAMP), ATANH_CLAMP)) / beta)
        return
    if big:
        for q in range(k):
            out[q] = _log_domain(sign, beta, ys, k, q)
        return
    pre = 1.0
    for j in range(k):
        out[j] = pre
        pre *= ts[j]
    suf = sign * tanh_half_beta
    for q in range(k - 1, -1, -1):
        p = out[q] * suf
        if p > ATANH_CLAMP:
            p = ATANH_CLAMP
        elif p < -ATANH_CLAMP:
            p = -ATANH_CLAMP
        out[q] = _clip_half(fast_atanh(p) / beta)
        suf *= ts[q]


def check_update(x_a: int, beta: float, incoming: Sequence[float]) -> float:
    """Message from a generator with source bit ``x_a`` given the other inputs.

    The empty product is 1, so a generator with a single edge returns
    ``+-1/2``.
    """
    if not beta > 0:
        raise ValueError(f"beta must be > 0, got {beta}")
    eta = np.asarray(incoming, dtype=np.float64).ravel()
    # the message towards i is the one a generator with one extra (dummy) edge sends there
    ys = np.append(beta * eta, 1.0)
    ts = np.array([fast_tanh(y) for y in ys], dtype=np.float64)
    out = np.empty(ys.size)
    sign = 1.0 - 2.0 * (int(x_a) & 1)
    gen_messages(sign, float(beta), fast_tanh(0.5 * beta), ys, ts, ys.size, out)
    return float(out[-1])


def var_update(incoming: Sequence[float]) -> float:
    """Bit-to-generator message: the sum of the other incoming messages."""
    total = 0.0
    for v in incoming:
        total += float(v)
    return total


def bias(beta: float, incoming: Sequence[float]) -> float:
    """Bias of a code-bit, ``beta`` times the sum of all incoming messages."""
    return beta * var_update(incoming)


@njit(cache=True)
def _gen_products(gen_ptr, sg, th, p):
    # p[e] = sg[a] * prod of th over the other edges of a; dead edges carry th = 1
    for a in range(gen_ptr.size - 1):
        lo = gen_ptr[a]
        hi = gen_ptr[a + 1]
        pre = 1.0
        for e in range(lo, hi):
            p[e] = pre
            pre *= th[e]
        suf = sg[a]
        for e in range(hi - 1, lo - 1, -1):
            p[e] *= suf
            suf *= th[e]


@njit(cache=True)
def _gen_log_domain(gen_ptr, sg, beta, y, th, eh_new):
    width = 1
    for a in range(gen_ptr.size - 1):
        width = max(width, gen_ptr[a + 1] - gen_ptr[a])
    ys = np.empty(width)
    ts = np.empty(width)
    msg = np.empty(width)
    idx = np.empty(width, dtype=np.int64)
    for a in range(gen_ptr.size - 1):
        k = 0
        for e in range(gen_ptr[a], gen_ptr[a + 1]):
            if math.isfinite(y[e]):
                idx[k] = e
                ys[k] = y[e]
                ts[k] = th[e]
                k += 1
        if k == 0:
            continue
        sign = 1.0 if sg[a] > 0.0 else -1.0
        gen_messages(sign, beta, abs(sg[a]), ys, ts, k, msg)
        for q in range(k):
            eh_new[idx[q]] = msg[q]


def gen_step(gen_ptr, sg, beta, y, th, p, eh_new) -> None:
    """Generator half of a flooding sweep, written to ``eh_new``.

    ``sg[a] = (-1)**x_a * tanh(beta/2)``, ``y[e] = beta * eta[e]`` and
    ``th[e] = tanh(y[e])``; dead edges hold ``y = inf`` and ``th = 1``. Up
    to ``beta = 2 * DIRECT_LIMIT`` the products go through vectorized
    ``arctanh``; above it every generator takes the log-domain route.
    """
    if 0.5 * beta > DIRECT_LIMIT:
        _gen_log_domain(gen_ptr, sg, beta, y, th, eh_new)
        return
    _gen_products(gen_ptr, sg, th, p)
    np.clip(p, -ATANH_CLAMP, ATANH_CLAMP, out=p)
    np.arctanh(p, out=eh_new)
    eh_new /= beta
    np.clip(eh_new, -0.5, 0.5, out=eh_new)


@njit(cache=True)
def bit_step(bit_ptr, bit_edges, bit_alive, eh_new, eh, beta, y, bias):
    """Bit half of a flooding sweep over alive code-bits.

    Copies ``eh_new`` into ``eh``, refreshes ``bias`` and ``y`` and returns
    the summed absolute message change and the largest absolute bias.
    ``th`` is left for the caller to recompute from ``y``.
    """
    delta = 0.0
    B = 0.0
    for i in range(bit_ptr.size - 1):
        if not bit_alive[i]:
            continue
        lo = bit_ptr[i]
        hi = bit_ptr[i + 1]
        total = 0.0
        for q in range(lo, hi):
            e = bit_edges[q]
            v = eh_new[e]
            delta += abs(v - eh[e])
            eh[e] = v
            total += v
        b = beta * total
        bias[i] = b
        if abs(b) > B:
            B = abs(b)
        for q in range(lo, hi):
            e = bit_edges[q]
            y[e] = beta * (total - eh[e])
    return delta, B


class MessageState:
    """Per-edge messages plus the iteration counter of the current round.

    ``y`` holds ``beta * eta`` (bit to generator) and ``th`` its tanh;
    ``eta_hat`` holds the generator to bit messages. Messages on dead edges
    are never read again.
    """

    def __init__(self, graph: FactorGraph):
        E = graph.num_edges
        self.y = np.zeros(E)
        self.th = np.zeros(E)
        self.eta_hat = np.zeros(E)
        self.eta_hat_new = np.zeros(E)
        self.p = np.zeros(E)
        self.bias = np.zeros(graph.num_code_bits)
        self.max_bias = 0.0
        self.t = 0

    def set_bit_messages(self, y) -> None:
        """Load ``beta * eta`` for every edge."""
        self.y[:] = y
        np.tanh(self.y, out=self.th)

    def alive_eta_hat(self, graph: FactorGraph) -> np.ndarray:
        return self.eta_hat[graph.edge_alive == 1]


def source_signs(x, beta: float) -> np.ndarray:
    """``(-1)**x_a * tanh(beta/2)`` per generator."""
    thb = math.tanh(0.5 * beta)
    return np.where(np.asarray(x) == 1, -thb, thb)


def sweep(graph: FactorGraph, state: MessageState, x, beta: float) -> float:
    """One flooding iteration; returns the normalized L1 change of ``eta_hat``.

    All generator messages are computed from the previous bit messages, then
    all bit messages from the new generator messages. The change is divided
    by the original generator count, whatever the current graph size.
    """
    x = np.ascontiguousarray(x, dtype=np.uint8)
    if x.size != graph.num_generators:
        raise ValueError("residual length does not match generator count")
    dead = graph.edge_alive == 0
    state.y[dead] = np.inf
    state.th[dead] = 1.0
    gen_step(graph.gen_ptr, source_signs(x, beta), float(beta), state.y, state.th, state.p, state.eta_hat_new)
    delta, B = bit_step(
        graph.bit_ptr, graph.bit_edges, graph.bit_alive, state.eta_hat_new,
        state.eta_hat, float(beta), state.y, state.bias,
    )
    np.tanh(state.y, out=state.th)
    state.max_bias = B
    state.t += 1
    return float(delta / max(graph.num_generators, 1))


def max_abs_bias(graph: FactorGraph, state: MessageState) -> float:
    alive = graph.bit_alive == 1
    if not np.any(alive):
        return 0.0
    return float(np.max(np.abs(state.bias[alive])))


def run_until_decimation_condition(
    graph: FactorGraph, state: MessageState, x, params: BPParams
) -> tuple[int, str, float]:
    """Sweep from the current messages until a decimation condition holds.

    Returns ``(t1, condition, delta)`` where ``condition`` is ``"i"`` (messages
    settled below ``epsilon``), ``"ii"`` (some bias above ``alpha``) or
    ``"iii"`` (budget ``t_max`` used up). The first sweep satisfying (i) or
    (ii) ends the round.
    """
    state.t = 0
    while True:
        delta = sweep(graph, state, x, params.beta)
        if delta < params.epsilon:
            return state.t, "i", delta
        if max_abs_bias(graph, state) > params.alpha:
            return state.t, "ii", delta
        if state.t >= params.t_max:
            return state.t, "iii", delta


def marginals(state: MessageState) -> np.ndarray:
    """BP estimate of ``P(u_i = 1)`` for every code-bit from its bias."""
    return 0.5 * (1.0 - np.tanh(state.bias))


def converge(
    graph: FactorGraph, x, beta: float, tol: float = 1e-15, max_sweeps: int = 10_000
) -> MessageState:
    """Run flooding BP from zero messages until the change drops below ``tol``."""
    state = MessageState(graph)
    for _ in range(max_sweeps):
        if sweep(graph, state, x, beta) <= tol:
            break
    return state
