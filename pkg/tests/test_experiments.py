import json
import math

import pytest

from additive_lab import __version__
from additive_lab.errors import ResourceError, UsageError
from additive_lab.experiments import (ExperimentConfig, geometric_checkpoints, list_experiments,
                                      parse_checkpoints, run_experiment)
from additive_lab.oracle import brute_force_oracle
from additive_lab.regvar import SlowlyVaryingSpec as S
from additive_lab.sieve import AdditiveSpec, Functional, Mode

IDS = [f"E{i}" for i in range(1, 10)]


def test_geometric_checkpoints():
    assert geometric_checkpoints(10**4) == [3, 6, 16, 40, 100, 251, 631, 1585, 3981, 10000]
    assert geometric_checkpoints(10) == [1, 2, 3, 4, 5, 6, 8, 10]
    assert parse_checkpoints("geometric:5") == ("geometric", 5)
    assert parse_checkpoints("10,100,1e3") == [10, 100, 1000]
    with pytest.raises(UsageError):
        parse_checkpoints("1,x")


def test_config_validation():
    with pytest.raises(UsageError):
        ExperimentConfig("E42", 100)
    with pytest.raises(ResourceError):
        ExperimentConfig("E1", 10**12)
    with pytest.raises(UsageError):
        ExperimentConfig.from_mapping({"experiment": "E1"})
    with pytest.raises(UsageError):
        ExperimentConfig.from_mapping({"experiment": "E1", "limit": "100", "colour": "red"})
    cfg = ExperimentConfig.from_mapping({"experiment": "recip-p", "limit": "1e4", "L": "logpow:2"})
    assert cfg.id == "E6" and cfg.limit == 10**4 and cfg.L == S.logpow(2)


def test_e1_rows_and_trend():
    rep = run_experiment(ExperimentConfig("E1", 10**4, checkpoints=[100, 1000, 10**4]))
    assert [r[0] for r in rep.rows] == [100, 1000, 10**4]
    ratios = [r[3] for r in rep.rows]
    assert all(q > 0 for q in ratios)
    assert abs(ratios[-1] - 1) < abs(ratios[0] - 1)


def oracle_items(exp_id, cfg):
    rho = cfg.rho if cfg.rho is not None else (1.0 if exp_id in ("E1", "E5") else 0.0)
    if exp_id in ("E1", "E4"):
        return [AdditiveSpec(rho, cfg.L), AdditiveSpec(rho, cfg.L, Mode.BIG_F)]
    if exp_id in ("E2", "E5", "E9"):
        return [AdditiveSpec(rho, cfg.L)]
    if exp_id == "E3":
        return [AdditiveSpec(0.0, S.logpow(cfg.alpha))]
    if exp_id == "E6":
        return [Functional.RECIP_P]
    if exp_id == "E7":
        return [Functional.RECIP_BETA_DIFF]
    return [Functional.RECIP_P, Functional.OMEGA_DIFF_OVER_P, Functional.OMEGA_OVER_P, Functional.MU2_OVER_P]


@pytest.mark.parametrize("exp_id", IDS)
def test_empirical_column_equals_oracle(exp_id):
    cfg = ExperimentConfig(exp_id, 10**4, L=S.logpow(1) if exp_id in ("E2", "E9") else S.const(1))
    rep = run_experiment(cfg)
    xs = [r[0] for r in rep.rows]
    if exp_id == "E9":
        xs = sorted(set(xs) | {round(l * x) for x in xs for l in cfg.lambdas})
    streams = brute_force_oracle(10**4, oracle_items(exp_id, cfg), xs)
    for row in rep.rows:
        x = row[0]
        vals = [s.at(x) for s in streams]
        if exp_id == "E1":
            assert row[1] == vals[0] and row[4] == vals[1]
        elif exp_id == "E4":
            assert row[1] == vals[1] - vals[0]
        elif exp_id == "E5":
            hx = x * cfg.L.extended(x)
            assert row[1] == vals[0] * math.log(x) / (x * hx)
        elif exp_id == "E8":
            p, d, o, m = vals
            assert (row[1], row[4], row[7]) == (d / p, o / p, m / p)
        elif exp_id == "E9":
            A = {y: s / y for y, s in zip(xs, streams[0].partials)}
            qs = [(A[round(l * x)] - A[x]) * math.log(x) / (cfg.L.extended(x) * math.log(round(l * x) / x))
                  for l in cfg.lambdas]
            assert row[4:] == pytest.approx(tuple(qs), rel=1e-12)
        else:
            assert row[1] == vals[0]


def test_e6_matches_oracle_1e5():
    rep = run_experiment(ExperimentConfig("E6", 10**5, checkpoints=[10**5]))
    (s,) = brute_force_oracle(10**5, [Functional.RECIP_P])
    assert rep.rows[0][1] == s.partials[0]


def test_e8_limit_10_hand_enumeration():
    rep = run_experiment(ExperimentConfig("E8", 10, checkpoints=[10]))
    # P(n), n = 1..10: 1,2,3,2,5,3,7,2,3,5; squarefree: 1,2,3,5,6,7,10
    recip = math.fsum([1, 1/2, 1/3, 1/2, 1/5, 1/3, 1/7, 1/2, 1/3, 1/5])
    sq = math.fsum([1, 1/2, 1/3, 1/5, 1/3, 1/7, 1/5])
    assert rep.rows[0][7] == sq / recip


def test_e3_alpha_variants():
    for alpha in (-1.0, 0.0, 1.0, 2.0):
        rep = run_experiment(ExperimentConfig("E3", 10**4, alpha=alpha))
        assert rep.meta["alpha"] == alpha and "exact integral" in rep.meta["reference_form"]
        assert all(r[3] > 0 for r in rep.rows)


def test_e4_positive_index_ratio():
    rep = run_experiment(ExperimentConfig("E4", 10**5, rho=1.0))
    assert abs(rep.rows[-1][3] - 1) < 1e-3


def test_e9_range_and_errors():
    rep = run_experiment(ExperimentConfig("E9", 10**4))
    assert rep.rows[-1][0] * 4 <= 10**4
    with pytest.raises(UsageError):
        run_experiment(ExperimentConfig("E9", 10**4, checkpoints=[100, 5000]))
    with pytest.raises(UsageError):
        run_experiment(ExperimentConfig("E9", 10**4, lambdas=(0.5,)))


def test_checkpoint_range_errors():
    with pytest.raises(UsageError):
        run_experiment(ExperimentConfig("E7", 1000, checkpoints=[10, 100]))
    with pytest.raises(UsageError):
        run_experiment(ExperimentConfig("E1", 1000, checkpoints=[100, 10]))
    with pytest.raises(UsageError):
        run_experiment(ExperimentConfig("E1", 1000, rho=0.0))


def test_reports_are_deterministic_and_well_formed():
    a = run_experiment(ExperimentConfig("E7", 10**5, threads=1))
    b = run_experiment(ExperimentConfig("E7", 10**5, threads=8))
    assert a.to_csv() == b.to_csv() and a.to_json() == b.to_json()
    lines = a.to_csv().splitlines()
    assert lines[0] == "# id=E7" and f"# version={__version__}" in lines
    header = [ln for ln in lines if not ln.startswith("#")][0]
    assert header == "x,empirical,reference,ratio,rv_index"
    doc = json.loads(a.to_json())
    assert doc["meta"]["id"] == "E7" and doc["rows"][0]["aux"]["rv_index"] is None
    xs = [r["x"] for r in doc["rows"]]
    assert xs == sorted(xs)


def test_list_experiments():
    text = list_experiments()
    assert [ln.split()[0] for ln in text.splitlines() if not ln.startswith(" ")] == IDS
    doc = json.loads(list_experiments("json"))
    assert [d["id"] for d in doc] == IDS and all(d["formula"] for d in doc)
    assert list_experiments() == list_experiments()
