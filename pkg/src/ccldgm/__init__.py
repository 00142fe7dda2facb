"""Lossy compression of Bernoulli(1/2) sources with coupled LDGM codes."""

from .bp import BPParams, MessageState
from .bpgd import DecimationPolicy, EncodingResult, encode, encode_reference
from .codec import distortion, reconstruct, sample_source
from .ensemble import EnsembleSpec, FactorGraph, sample, sample_coupled, sample_uncoupled

__all__ = [
    "BPParams",
    "DecimationPolicy",
    "EncodingResult",
    "EnsembleSpec",
    "FactorGraph",
    "MessageState",
    "distortion",
    "encode",
    "encode_reference",
    "reconstruct",
    "sample",
    "sample_coupled",
    "sample_source",
    "sample_uncoupled",
]

__version__ = "0.1.0"
