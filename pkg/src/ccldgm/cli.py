"""Command-line front end.

Exit codes: 0 success, 1 invalid input, 2 failure while running.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import __version__
from .bp import BPParams
from .bpgd import encode
from .codec import from_ascii, sample_source, to_ascii
from .ensemble import EnsembleSpec, dump_edges, load_edges, sample
from .harness import read_config, config_from_values, run_experiment, summary_csv, sweep_beta
from .metrics import profile_csv, rd_bound, saturation_value

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_RUNTIME = 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _positive_float(text: str) -> float:
    v = float(text)
    if not v > 0:
        raise argparse.ArgumentTypeError(f"must be > 0, got {text}")
    return v


def _positive_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {text}")
    return v


def _seed(text: str) -> int:
    v = int(text)
    if v < 0:
        raise argparse.ArgumentTypeError(f"must be >= 0, got {text}")
    return v


def _add_ensemble(p, required=True):
    g = p.add_argument_group("ensemble")
    g.add_argument("--l", type=_positive_int, required=required, help="generator degree")
    g.add_argument("--r", type=_positive_int, required=required, help="code-bit degree")
    g.add_argument("--n", type=_positive_int, required=required, help="generators per position")
    g.add_argument("--L", type=_positive_int, default=None if not required else 1,
                   help="number of ring positions, 1 = uncoupled (default 1)")
    g.add_argument("--w", type=_positive_int, default=None if not required else 1,
                   help="coupling window width in positions (default 1)")


def _add_bp(p, defaults=True):
    d = BPParams()
    g = p.add_argument_group("decimation parameters")
    g.add_argument("--beta", type=_positive_float, default=d.beta if defaults else None,
                   help=f"inverse temperature, dimensionless (default {d.beta})")
    g.add_argument("--epsilon", type=_positive_float, default=d.epsilon if defaults else None,
                   help=f"convergence threshold on the mean message change per generator (default {d.epsilon})")
    g.add_argument("--alpha", type=_positive_float, default=d.alpha if defaults else None,
                   help=f"bias threshold for early decimation (default {d.alpha})")
    g.add_argument("--T", dest="t_max", type=_positive_int, default=d.t_max if defaults else None,
                   help=f"BP sweeps allowed per decimation round (default {d.t_max})")


def _add_out(p):
    p.add_argument("--out", type=Path, default=None, help="write to this file instead of stdout")


def build_parser() -> argparse.ArgumentParser:
    fmt = argparse.HelpFormatter
    parser = _Parser(prog="ccldgm", description="Spatially coupled LDGM lossy compression.",
                     formatter_class=fmt)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("sample", help="sample a graph and print its edge list", formatter_class=fmt)
    _add_ensemble(p)
    p.add_argument("--seed", type=_seed, required=True, help="graph seed")
    _add_out(p)

    p = sub.add_parser("encode", help="compress one random source word", formatter_class=fmt)
    _add_ensemble(p)
    _add_bp(p)
    p.add_argument("--seed", type=_seed, required=True,
                   help="instance seed; graph, source and algorithm seeds are derived from it")
    p.add_argument("--graph", type=Path, default=None, help="edge-list file to use instead of sampling")
    p.add_argument("--source", type=Path, default=None, help="ASCII 0/1 file to use instead of sampling")
    p.add_argument("--trace", type=Path, default=None, help="write the per-round trace CSV here")
    p.add_argument("--timing", action="store_true", help="include wall time (makes output run-dependent)")
    _add_out(p)

    for name, help_ in (("experiment", "run many instances of one ensemble cell"),
                        ("sweep-beta", "run the same instances over a grid of beta values")):
        p = sub.add_parser(name, help=help_, formatter_class=fmt)
        p.add_argument("--config", type=Path, default=None, help="INI config file")
        _add_ensemble(p, required=False)
        _add_bp(p, defaults=False)
        p.add_argument("--instances", type=_positive_int, default=None, help="instance count (default 20)")
        p.add_argument("--seed", type=_seed, default=None, help="base seed (required here or in the config)")
        p.add_argument("--workers", type=_positive_int, default=None, help="parallel processes (default 1)")
        p.add_argument("--cache-dir", dest="cache_dir", default=None, help="per-instance result cache")
        p.add_argument("--report", default=None, help="write the full JSON report here")
        p.add_argument("--summary", default=None, help="write the summary CSV here")
        if name == "sweep-beta":
            p.add_argument("--beta-grid", dest="beta_grid", default=None,
                           help="comma-separated beta values, e.g. 1,1.5,2")

    p = sub.add_parser("profile", help="per-position distortion profile of one encoding",
                       formatter_class=fmt)
    _add_ensemble(p)
    _add_bp(p)
    p.add_argument("--seed", type=_seed, required=True, help="instance seed")
    _add_out(p)

    p = sub.add_parser("rd-bound", help="Shannon distortion bound for a rate", formatter_class=fmt)
    p.add_argument("--rate", type=float, required=True, help="rate in bits per source bit, in [0, 1]")
    p.add_argument("--digits", type=int, default=4, help="decimals printed (default 4)")

    p = sub.add_parser("oracle-check", help="compare BPGD with exhaustive search on tiny instances",
                       formatter_class=fmt)
    _add_ensemble(p)
    _add_bp(p)
    p.add_argument("--instances", type=_positive_int, default=10, help="number of instances (default 10)")
    p.add_argument("--seed", type=_seed, required=True, help="base seed")
    _add_out(p)
    return parser


def _spec(args) -> EnsembleSpec:
    try:
        return EnsembleSpec(args.l, args.r, args.n, args.L, args.w)
    except ValueError as exc:
        raise UsageError(f"--l/--r/--n/--L/--w: {exc}") from exc


def _params(args) -> BPParams:
    return BPParams(beta=args.beta, epsilon=args.epsilon, alpha=args.alpha, t_max=args.t_max)


def _emit(text: str, out: Optional[Path]) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        out.write_text(text)


def _instance(spec: EnsembleSpec, seed: int):
    from .harness import instance_seeds

    seeds = instance_seeds(seed, 0)
    graph = sample(spec, seeds[0])
    x = sample_source(spec.num_generators, seeds[1])
    return graph, x, seeds


def cmd_sample(args) -> int:
    graph = sample(_spec(args), args.seed)
    _emit(dump_edges(graph), args.out)
    return EXIT_OK


def cmd_encode(args) -> int:
    params = _params(args)
    spec = _spec(args)
    for flag, path in (("--graph", args.graph), ("--source", args.source)):
        if path is not None and not path.is_file():
            raise UsageError(f"{flag}: file not found: {path}")
    graph, x, seeds = _instance(spec, args.seed)
    if args.graph is not None:
        graph = load_edges(args.graph)
        x = sample_source(graph.num_generators, seeds[1])
    if args.source is not None:
        x = from_ascii(args.source.read_text())
    if x.size != graph.num_generators or np.any(x > 1):
        raise UsageError("--source: length must equal the generator count and hold only 0/1")
    res = encode(graph, x, params, seed=seeds[2])
    record = json.loads(res.to_json())
    if not args.timing:
        record.pop("wall_time", None)
    record["u"] = to_ascii(res.u)
    record["instance_seed"] = args.seed
    if args.trace is not None:
        res.trace_csv(args.trace)
    _emit(json.dumps(record, indent=2, sort_keys=True) + "\n", args.out)
    return EXIT_OK


def _experiment_config(args, sweep: bool):
    overrides = {k: getattr(args, k, None) for k in (
        "l", "r", "n", "L", "w", "beta", "epsilon", "alpha", "t_max",
        "instances", "seed", "workers", "cache_dir", "report", "summary",
    )}
    grid = getattr(args, "beta_grid", None)
    if grid is not None:
        try:
            overrides["beta_grid"] = tuple(float(v) for v in grid.split(","))
        except ValueError as exc:
            raise UsageError(f"--beta-grid: {exc}") from exc
    try:
        if args.config is not None:
            if not args.config.is_file():
                raise UsageError(f"--config: file not found: {args.config}")
            cfg = read_config(args.config, overrides)
        else:
            cfg = config_from_values({k: v for k, v in overrides.items() if v is not None})
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    if sweep and not cfg.beta_grid:
        raise UsageError("--beta-grid: required for sweep-beta (flag or config)")
    return cfg


def cmd_experiment(args) -> int:
    report = run_experiment(_experiment_config(args, False))
    sys.stdout.write(summary_csv([report]))
    return EXIT_OK


def cmd_sweep_beta(args) -> int:
    reports = sweep_beta(_experiment_config(args, True))
    sys.stdout.write(summary_csv(reports))
    return EXIT_OK


def cmd_profile(args) -> int:
    spec = _spec(args)
    graph, x, seeds = _instance(spec, args.seed)
    res = encode(graph, x, _params(args), seed=seeds[2])
    meta = {"l": spec.l, "r": spec.r, "n": spec.n, "L": spec.L, "w": spec.w,
            "beta": args.beta, "seed": args.seed, "D": f"{res.total_distortion:.6f}"}
    if spec.coupled:
        sat = saturation_value(res.profile, spec.w)
        meta["saturated"] = "absent" if sat is None else f"{sat:.6f}"
    _emit(profile_csv(res.profile, meta), args.out)
    return EXIT_OK


def cmd_rd_bound(args) -> int:
    if not 0.0 <= args.rate <= 1.0:
        raise UsageError(f"--rate: must lie in [0, 1], got {args.rate}")
    if args.digits < 0:
        raise UsageError("--digits: must be >= 0")
    print(f"{rd_bound(args.rate):.{args.digits}f}")
    return EXIT_OK


def cmd_oracle_check(args) -> int:
    from .harness import instance_seeds
    from .oracle import MAX_CODE_BITS, brute_force

    spec = _spec(args)
    if spec.num_code_bits > MAX_CODE_BITS:
        raise UsageError(f"--n/--L: {spec.num_code_bits} code-bits exceed the cap of {MAX_CODE_BITS}")
    params = _params(args)
    lines = ["instance,D_bpgd,d_min,gap"]
    for k in range(args.instances):
        seeds = instance_seeds(args.seed, k)
        graph = sample(spec, seeds[0])
        x = sample_source(spec.num_generators, seeds[1])
        res = encode(graph, x, params, seed=seeds[2])
        d_min = brute_force(graph, x, params.beta).d_min
        lines.append(f"{k},{res.total_distortion:.6f},{d_min:.6f},{res.total_distortion - d_min:.6f}")
    _emit("\n".join(lines) + "\n", args.out)
    return EXIT_OK


COMMANDS = {
    "sample": cmd_sample,
    "encode": cmd_encode,
    "experiment": cmd_experiment,
    "sweep-beta": cmd_sweep_beta,
    "profile": cmd_profile,
    "rd-bound": cmd_rd_bound,
    "oracle-check": cmd_oracle_check,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    except Exception as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
