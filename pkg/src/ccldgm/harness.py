"""Batch experiments: many (graph, source) instances per ensemble cell.

Instance ``k`` of an experiment with base seed ``s`` draws its three seeds
from ``SeedSequence(s, spawn_key=(k,)).generate_state(3, uint64)``, in the
order graph, source, algorithm. Any instance can therefore be rerun on its
own, and the seeds do not depend on beta, so a beta sweep compares the
same instances at every grid point.

Per-instance records can be cached on disk. The cache key is a hash of
everything that determines the result, so a cached record is exactly what a
fresh run would produce apart from its wall time.
"""

from __future__ import annotations

import configparser
import hashlib
import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np

from .bp import BPParams
from .bpgd import DecimationPolicy, encode
from .codec import sample_source
from .ensemble import EnsembleSpec, sample
from .metrics import D_OPT, D_SH_HALF, rd_bound, saturation_value

CACHE_VERSION = 3
SUMMARY_HEADER = "l,r,n,L,w,beta,instances,mean_D,std_D,saturated_D"


def instance_seeds(base_seed: int, index: int) -> tuple[int, int, int]:
    """``(graph, source, algorithm)`` seeds of instance ``index``."""
    if index < 0:
        raise ValueError("instance index must be >= 0")
    ss = np.random.SeedSequence(int(base_seed), spawn_key=(int(index),))
    g, s, a = (int(v) for v in ss.generate_state(3, dtype=np.uint64))
    return g, s, a


@dataclass(frozen=True)
class ExperimentConfig:
    spec: EnsembleSpec
    params: BPParams = BPParams()
    instance_count: int = 20
    base_seed: int = 0
    beta_grid: Optional[tuple[float, ...]] = None
    policy: DecimationPolicy = DecimationPolicy()
    workers: int = 1
    cache_dir: Optional[str] = None
    report_path: Optional[str] = None
    summary_path: Optional[str] = None

    def __post_init__(self):
        if int(self.instance_count) != self.instance_count or self.instance_count < 1:
            raise ValueError(f"instance_count must be an integer >= 1, got {self.instance_count}")
        if self.workers < 1:
            raise ValueError(f"workers must be >= 1, got {self.workers}")
        if self.beta_grid is not None:
            grid = tuple(float(b) for b in self.beta_grid)
            if not grid:
                raise ValueError("beta_grid must not be empty")
            if any(not b > 0 for b in grid):
                raise ValueError("beta_grid entries must be > 0")
            object.__setattr__(self, "beta_grid", grid)

    def with_beta(self, beta: float) -> "ExperimentConfig":
        return replace(self, params=replace(self.params, beta=float(beta)), beta_grid=None)


@dataclass
class InstanceRecord:
    index: int
    seeds: tuple[int, int, int]
    total_distortion: float
    saturated: Optional[float]
    profile: np.ndarray
    rounds: int
    sweeps: int
    condition_histogram: dict
    wall_time: float

    def to_dict(self) -> dict:
        d = asdict(self)
        d["profile"] = [float(v) for v in self.profile]
        d["seeds"] = list(self.seeds)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "InstanceRecord":
        d = dict(d)
        d["profile"] = np.asarray(d["profile"], dtype=np.float64)
        d["seeds"] = tuple(d["seeds"])
        return cls(**d)


@dataclass
class ExperimentReport:
    config: ExperimentConfig
    records: list[InstanceRecord] = field(repr=False)
    mean_D: float
    std_D: float
    mean_saturated: Optional[float]
    mean_profile: np.ndarray = field(repr=False)
    d_sh: float
    d_opt: Optional[float]

    @property
    def distortions(self) -> np.ndarray:
        return np.array([r.total_distortion for r in self.records])

    @property
    def standard_error(self) -> float:
        return self.std_D / np.sqrt(len(self.records))

    def summary_row(self) -> str:
        s = self.config.spec
        sat = "" if self.mean_saturated is None else f"{self.mean_saturated:.6f}"
        return (
            f"{s.l},{s.r},{s.n},{s.L},{s.w},{self.config.params.beta:g},"
            f"{len(self.records)},{self.mean_D:.6f},{self.std_D:.6f},{sat}"
        )

    def to_dict(self) -> dict:
        return {
            "spec": asdict(self.config.spec),
            "params": asdict(self.config.params),
            "policy": asdict(self.config.policy),
            "instance_count": self.config.instance_count,
            "base_seed": self.config.base_seed,
            "mean_D": self.mean_D,
            "std_D": self.std_D,
            "mean_saturated": self.mean_saturated,
            "mean_profile": [float(v) for v in self.mean_profile],
            "d_sh": self.d_sh,
            "d_opt": self.d_opt,
            "records": [r.to_dict() for r in self.records],
        }

    def to_json(self, path=None) -> str:
        text = json.dumps(self.to_dict(), indent=2, sort_keys=True)
        if path is not None:
            Path(path).write_text(text + "\n")
        return text


def summary_csv(reports: Sequence[ExperimentReport], path=None) -> str:
    text = "\n".join([SUMMARY_HEADER] + [r.summary_row() for r in reports]) + "\n"
    if path is not None:
        Path(path).write_text(text)
    return text


def _cache_key(config: ExperimentConfig, index: int) -> str:
    payload = {
        "version": CACHE_VERSION,
        "spec": asdict(config.spec),
        "params": asdict(config.params),
        "policy": asdict(config.policy),
        "seeds": list(instance_seeds(config.base_seed, index)),
    }
    blob = json.dumps(payload, sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()[:24]


def _cache_path(config: ExperimentConfig, index: int) -> Optional[Path]:
    if config.cache_dir is None:
        return None
    return Path(config.cache_dir) / f"{_cache_key(config, index)}.json"


def cached_record(config: ExperimentConfig, index: int) -> Optional[InstanceRecord]:
    """Instance ``index`` of ``config`` if it is in the cache, else ``None``."""
    path = _cache_path(config, index)
    if path is None or not path.exists():
        return None
    return InstanceRecord.from_dict(json.loads(path.read_text()))


def run_instance(config: ExperimentConfig, index: int) -> InstanceRecord:
    """Run (or load from cache) instance ``index`` of ``config``."""
    hit = cached_record(config, index)
    if hit is not None:
        return hit
    path = _cache_path(config, index)
    seeds = instance_seeds(config.base_seed, index)
    spec = config.spec
    try:
        graph = sample(spec, seeds[0])
        x = sample_source(spec.num_generators, seeds[1])
        res = encode(graph, x, config.params, config.policy, seed=seeds[2])
    except Exception as exc:
        raise RuntimeError(f"instance {index} (seeds {seeds}) failed: {exc}") from exc
    record = InstanceRecord(
        index=index,
        seeds=seeds,
        total_distortion=res.total_distortion,
        saturated=saturation_value(res.profile, spec.w) if spec.coupled else None,
        profile=res.profile,
        rounds=res.rounds,
        sweeps=res.sweeps,
        condition_histogram=res.condition_histogram,
        wall_time=res.wall_time,
    )
    if path is not None:
        path.parent.mkdir(parents=True, exist_ok=True)
        tmp = path.with_suffix(f".tmp{os.getpid()}")
        tmp.write_text(json.dumps(record.to_dict(), sort_keys=True))
        tmp.replace(path)
    return record


def _run_star(args):
    return run_instance(*args)


def aggregate(config: ExperimentConfig, records: Sequence[InstanceRecord]) -> ExperimentReport:
    records = sorted(records, key=lambda r: r.index)
    if len(records) != config.instance_count:
        raise ValueError(f"expected {config.instance_count} records, got {len(records)}")
    D = np.array([r.total_distortion for r in records])
    sats = [r.saturated for r in records if r.saturated is not None]
    spec = config.spec
    return ExperimentReport(
        config=config,
        records=list(records),
        mean_D=float(D.mean()),
        std_D=float(D.std(ddof=1)) if D.size > 1 else 0.0,
        mean_saturated=float(np.mean(sats)) if len(sats) == len(records) else None,
        mean_profile=np.mean([r.profile for r in records], axis=0),
        d_sh=D_SH_HALF if spec.rate == 0.5 else rd_bound(spec.rate),
        d_opt=D_OPT.get((spec.l, spec.r)),
    )


def _write_outputs(config: ExperimentConfig, reports: Sequence[ExperimentReport]) -> None:
    if config.report_path is not None:
        if len(reports) == 1:
            reports[0].to_json(config.report_path)
        else:
            Path(config.report_path).write_text(
                json.dumps([r.to_dict() for r in reports], indent=2, sort_keys=True) + "\n"
            )
    if config.summary_path is not None:
        summary_csv(reports, config.summary_path)


def _run_many(configs: Sequence[ExperimentConfig], workers: int) -> list[ExperimentReport]:
    jobs = [(c, k) for c in configs for k in range(c.instance_count)]
    if workers == 1:
        records = [run_instance(c, k) for c, k in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(_run_star, jobs))
    out = []
    pos = 0
    for c in configs:
        out.append(aggregate(c, records[pos : pos + c.instance_count]))
        pos += c.instance_count
    return out


def run_experiment(config: ExperimentConfig) -> ExperimentReport:
    """Encode ``instance_count`` instances of one ensemble cell and aggregate."""
    report = _run_many([config], config.workers)[0]
    _write_outputs(config, [report])
    return report


def sweep_beta(config: ExperimentConfig) -> list[ExperimentReport]:
    """One report per entry of ``config.beta_grid``, on the same instances."""
    if not config.beta_grid:
        raise ValueError("sweep_beta needs a non-empty beta_grid")
    reports = _run_many([config.with_beta(b) for b in config.beta_grid], config.workers)
    _write_outputs(config, reports)
    return reports


# config files ---------------------------------------------------------------

_INT_KEYS = {"l", "r", "n", "L", "w", "t_max", "instances", "seed", "workers"}
_FLOAT_KEYS = {"beta", "epsilon", "alpha"}


def read_config(path: Union[str, Path], overrides: Optional[dict] = None) -> ExperimentConfig:
    """Build a config from an INI file; ``overrides`` (non-None values) win.

    Recognized keys live in sections ``[ensemble]`` (l, r, n, L, w),
    ``[bp]`` (beta, epsilon, alpha, t_max) and ``[experiment]``
    (instances, seed, workers, beta_grid, cache_dir, report, summary).
    """
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"config file not found: {path}")
    parser = configparser.ConfigParser()
    parser.optionxform = str  # keep L and l apart
    parser.read(path)
    values: dict = {}
    for section in parser.sections():
        for key, raw in parser.items(section):
            if key in _INT_KEYS:
                values[key] = int(raw)
            elif key in _FLOAT_KEYS:
                values[key] = float(raw)
            elif key == "beta_grid":
                values[key] = tuple(float(v) for v in raw.replace(",", " ").split())
            elif key in {"cache_dir", "report", "summary"}:
                values[key] = raw
            else:
                raise ValueError(f"unknown config key {key!r} in [{section}]")
    values.update({k: v for k, v in (overrides or {}).items() if v is not None})
    return config_from_values(values)


def config_from_values(v: dict) -> ExperimentConfig:
    missing = [k for k in ("l", "r", "n") if k not in v]
    if missing:
        raise ValueError(f"missing ensemble parameter(s): {', '.join(missing)}")
    spec = EnsembleSpec(v["l"], v["r"], v["n"], v.get("L", 1), v.get("w", 1))
    defaults = BPParams()
    params = BPParams(
        beta=v.get("beta", defaults.beta),
        epsilon=v.get("epsilon", defaults.epsilon),
        alpha=v.get("alpha", defaults.alpha),
        t_max=v.get("t_max", defaults.t_max),
    )
    return ExperimentConfig(
        spec=spec,
        params=params,
        instance_count=v.get("instances", 20),
        base_seed=v["seed"] if "seed" in v else _missing_seed(),
        beta_grid=v.get("beta_grid"),
        workers=v.get("workers", 1),
        cache_dir=v.get("cache_dir"),
        report_path=v.get("report"),
        summary_path=v.get("summary"),
    )


def _missing_seed():
    raise ValueError("a seed is required (no ambient randomness)")
