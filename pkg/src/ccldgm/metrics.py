"""Distortion profiles, saturation values and reference curves."""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Union

import numpy as np

from .codec import is_complete, reconstruct
from .ensemble import FactorGraph

# optimal distortion of the uncoupled (k, 2k) ensembles, rate 1/2
D_OPT = {(3, 6): 0.1139, (4, 8): 0.1111, (5, 10): 0.1105}
# BPGD distortion of the uncoupled (k, 2k) ensembles at n = 200000, beta = 2
D_BPGD_UNCOUPLED = {(3, 6): 0.1357, (4, 8): 0.1590, (5, 10): 0.1811}


def binary_entropy(p: float) -> float:
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p must lie in [0, 1], got {p}")
    if p in (0.0, 1.0):
        return 0.0
    return -p * math.log2(p) - (1.0 - p) * math.log2(1.0 - p)


def rd_bound(rate: float, tol: float = 1e-10) -> float:
    """Shannon distortion ``D`` in [0, 1/2] with ``h(D) = 1 - rate``."""
    if not 0.0 <= rate <= 1.0:
        raise ValueError(f"rate must lie in [0, 1], got {rate}")
    target = 1.0 - rate
    lo, hi = 0.0, 0.5
    # h is increasing on [0, 1/2]
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if binary_entropy(mid) < target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi) if rate not in (0.0, 1.0) else (0.5 if rate == 0.0 else 0.0)


D_SH_HALF = rd_bound(0.5)


def beta_from_bsc(p: float) -> float:
    """Inverse temperature matching a BSC with flip probability ``p``."""
    if not 0.0 < p < 0.5:
        raise ValueError(f"p must lie in (0, 1/2), got {p}")
    return math.log((1.0 - p) / p)


@dataclass
class DistortionProfile:
    """Local distortion ``d_z`` of every ring position and its generator count."""

    d_z: np.ndarray
    n_z: np.ndarray

    @property
    def L(self) -> int:
        return int(self.d_z.size)

    @property
    def total(self) -> float:
        """Distortion of the whole word (generator-weighted mean of ``d_z``)."""
        return float(np.dot(self.d_z, self.n_z) / self.n_z.sum())

    def to_csv(self, path: Union[str, Path, None] = None, meta: Optional[dict] = None) -> str:
        return profile_csv(self.d_z, meta, path)


def profile(graph: FactorGraph, x, u) -> DistortionProfile:
    """Per-position distortion of ``x`` against the reconstruction from ``u``."""
    u = np.asarray(u)
    if not is_complete(u):
        raise ValueError("index word still has unset code-bits")
    x = np.asarray(x, dtype=np.uint8)
    miss = (x != reconstruct(graph.pristine(), u)).astype(np.float64)
    counts = np.bincount(graph.gen_position, weights=miss, minlength=graph.num_positions)
    n_z = graph.gens_per_position
    return DistortionProfile(counts / n_z, n_z)


def saturation_value(d_z, w: int, estimator: str = "mean") -> Optional[float]:
    """Plateau level of a profile: positions ``w .. L-1-w``.

    The seed window is centred on ``L/2``, so the two decimation waves meet
    at the ring ends. Those ``w`` positions on each side form the unsaturated
    part and are trimmed. Returns ``None`` when ``L <= 2w`` (no saturated
    part exists). ``estimator`` is ``"mean"`` or ``"median"``.
    """
    d_z = np.asarray(d_z, dtype=np.float64)
    L = d_z.size
    if w < 1:
        raise ValueError("w must be >= 1")
    if L <= 2 * w:
        return None
    core = d_z[w : L - w]
    if estimator == "mean":
        return float(core.mean())
    if estimator == "median":
        return float(np.median(core))
    raise ValueError(f"unknown estimator {estimator!r}")


def profile_csv(d_z, meta: Optional[dict] = None, path: Union[str, Path, None] = None) -> str:
    """``z,d_z`` rows preceded by ``#``-comment lines carrying ``meta``."""
    lines = [f"# {k}={v}" for k, v in (meta or {}).items()]
    lines.append("z,d_z")
    lines += [f"{z},{v:.10g}" for z, v in enumerate(np.asarray(d_z, dtype=np.float64))]
    text = "\n".join(lines) + "\n"
    if path is not None:
        Path(path).write_text(text)
    return text


def read_profile_csv(source: Union[str, Path]) -> tuple[np.ndarray, dict]:
    text = Path(source).read_text() if "\n" not in str(source) else str(source)
    meta = {}
    values = []
    for line in text.splitlines():
        if line.startswith("#"):
            key, _, val = line[1:].strip().partition("=")
            meta[key] = val
        elif line and line != "z,d_z":
            values.append(float(line.split(",")[1]))
    return np.asarray(values), meta
