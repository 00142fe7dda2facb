import json

import numpy as np
import pytest
from hypothesis import given, strategies as st

from ccldgm.bp import BPParams
from ccldgm.bpgd import encode
from ccldgm.codec import sample_source
from ccldgm.ensemble import EnsembleSpec, sample
from ccldgm.harness import (
    SUMMARY_HEADER,
    ExperimentConfig,
    instance_seeds,
    read_config,
    run_experiment,
    run_instance,
    summary_csv,
    sweep_beta,
)

SPEC = EnsembleSpec(3, 6, 20, 8, 2)


@given(st.integers(0, 2**63), st.integers(0, 10_000), st.integers(0, 10_000))
def test_seed_derivation_is_injective(base, i, j):
    a, b = instance_seeds(base, i), instance_seeds(base, j)
    assert a == instance_seeds(base, i)
    assert len(set(a)) == 3
    if i != j:
        assert not set(a) & set(b)


def test_seed_derivation_formula():
    state = np.random.SeedSequence(17, spawn_key=(4,)).generate_state(3, dtype=np.uint64)
    assert instance_seeds(17, 4) == tuple(int(v) for v in state)
    with pytest.raises(ValueError):
        instance_seeds(17, -1)


def test_config_validation():
    with pytest.raises(ValueError):
        ExperimentConfig(SPEC, instance_count=0)
    with pytest.raises(ValueError):
        ExperimentConfig(SPEC, beta_grid=())
    with pytest.raises(ValueError):
        ExperimentConfig(SPEC, beta_grid=(1.0, -2.0))
    assert ExperimentConfig(SPEC, beta_grid=[1, 2]).beta_grid == (1.0, 2.0)


def test_single_instance_report_is_that_run():
    cfg = ExperimentConfig(SPEC, instance_count=1, base_seed=3)
    report = run_experiment(cfg)
    g_seed, s_seed, a_seed = instance_seeds(3, 0)
    g = sample(SPEC, g_seed)
    res = encode(g, sample_source(g.num_generators, s_seed), seed=a_seed)
    assert report.mean_D == res.total_distortion
    assert report.std_D == 0.0
    np.testing.assert_array_equal(report.mean_profile, res.profile)
    assert report.records[0].total_distortion == res.total_distortion


def test_report_statistics_and_reproducibility():
    cfg = ExperimentConfig(SPEC, instance_count=5, base_seed=1)
    a, b = run_experiment(cfg), run_experiment(cfg)
    D = np.array([r.total_distortion for r in a.records])
    assert a.mean_D == pytest.approx(D.mean())
    assert a.std_D == pytest.approx(D.std(ddof=1))
    assert [r.index for r in a.records] == list(range(5))
    assert a.mean_saturated == pytest.approx(np.mean([r.saturated for r in a.records]))
    assert a.d_sh == pytest.approx(0.1100, abs=1e-4) and a.d_opt == 0.1139
    assert _same_but_wall(a, b)


def _same_but_wall(a, b):
    strip = lambda rep: [{k: v for k, v in r.to_dict().items() if k != "wall_time"} for r in rep.records]
    return strip(a) == strip(b)


def test_parallel_equals_sequential():
    seq = run_experiment(ExperimentConfig(SPEC, instance_count=4, base_seed=2))
    par = run_experiment(ExperimentConfig(SPEC, instance_count=4, base_seed=2, workers=2))
    assert _same_but_wall(seq, par)
    assert seq.mean_D == par.mean_D


def test_uncoupled_report_has_no_saturation():
    rep = run_experiment(ExperimentConfig(EnsembleSpec(3, 6, 60), instance_count=2, base_seed=0))
    assert rep.mean_saturated is None
    assert rep.summary_row().endswith(",")


def test_sweep_uses_same_instances():
    cfg = ExperimentConfig(SPEC, instance_count=3, base_seed=5, beta_grid=(1.0, 2.0))
    reports = sweep_beta(cfg)
    assert [r.config.params.beta for r in reports] == [1.0, 2.0]
    assert [r.seeds for r in reports[0].records] == [r.seeds for r in reports[1].records]
    single = run_experiment(ExperimentConfig(SPEC, BPParams(beta=2.0), instance_count=3, base_seed=5))
    assert _same_but_wall(single, reports[1])
    with pytest.raises(ValueError):
        sweep_beta(ExperimentConfig(SPEC))


def test_cache_roundtrip(tmp_path):
    cfg = ExperimentConfig(SPEC, instance_count=2, base_seed=9, cache_dir=str(tmp_path))
    fresh = run_experiment(cfg)
    assert len(list(tmp_path.glob("*.json"))) == 2
    cached = run_experiment(cfg)
    assert [r.to_dict() for r in fresh.records] == [r.to_dict() for r in cached.records]
    # a different beta must not hit the same entries
    run_instance(cfg.with_beta(1.5), 0)
    assert len(list(tmp_path.glob("*.json"))) == 3


def test_outputs(tmp_path):
    cfg = ExperimentConfig(
        SPEC, instance_count=2, base_seed=4,
        report_path=str(tmp_path / "r.json"), summary_path=str(tmp_path / "s.csv"),
    )
    rep = run_experiment(cfg)
    data = json.loads((tmp_path / "r.json").read_text())
    assert data["mean_D"] == rep.mean_D and len(data["records"]) == 2
    lines = (tmp_path / "s.csv").read_text().splitlines()
    assert lines[0] == SUMMARY_HEADER == "l,r,n,L,w,beta,instances,mean_D,std_D,saturated_D"
    assert lines[1].split(",")[:7] == ["3", "6", "20", "8", "2", "2", "2"]
    assert summary_csv([rep]).splitlines() == lines


def test_read_config(tmp_path):
    path = tmp_path / "c.ini"
    path.write_text(
        "[ensemble]\nl = 3\nr = 6\nn = 20\nL = 8\nw = 2\n"
        "[bp]\nbeta = 1.5\nt_max = 7\n"
        "[experiment]\ninstances = 4\nseed = 11\nbeta_grid = 1, 2, 3\n"
    )
    cfg = read_config(path)
    assert cfg.spec == SPEC
    assert cfg.params == BPParams(beta=1.5, t_max=7)
    assert cfg.instance_count == 4 and cfg.base_seed == 11
    assert cfg.beta_grid == (1.0, 2.0, 3.0)
    over = read_config(path, {"beta": 2.5, "instances": None, "w": 3})
    assert over.params.beta == 2.5 and over.instance_count == 4 and over.spec.w == 3


def test_read_config_errors(tmp_path):
    with pytest.raises(FileNotFoundError):
        read_config(tmp_path / "missing.ini")
    bad = tmp_path / "bad.ini"
    bad.write_text("[ensemble]\nl = 3\nr = 6\nn = 20\ncolour = red\n")
    with pytest.raises(ValueError, match="colour"):
        read_config(bad)
    noseed = tmp_path / "noseed.ini"
    noseed.write_text("[ensemble]\nl = 3\nr = 6\nn = 20\n")
    with pytest.raises(ValueError, match="seed"):
        read_config(noseed)
