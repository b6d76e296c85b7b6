import csv
import io
import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from tfhe_bku.analysis import (
    DatapathWidths,
    FailureRateReport,
    NoiseReport,
    OpCostTable,
    PipelineModel,
    calibrate_op_costs,
    error_sweep,
    noise_scan,
    op_count_costs,
    pipeline_makespan,
    run_failure_trials,
    stage_time_estimate,
    to_csv,
    to_json,
    unroll_sweep,
    write_report,
)
from tfhe_bku.bootstrap import encrypt_bit, gate_bootstrap, generate_cloud_keys
from tfhe_bku.params import default_params
from tfhe_bku.transform import TransformCounters, make_backend

# --------------------------------------------------------------- pipeline


def test_makespan_arithmetic():
    assert pipeline_makespan(PipelineModel(10, 1, 1, "sequential")) == 20
    assert pipeline_makespan(PipelineModel(10, 1, 1, "pipelined")) == 11


@given(st.integers(1, 1000), st.floats(1e-3, 1e6), st.floats(1e-3, 1e6))
def test_pipelined_never_slower(G, tb, te):
    seq = pipeline_makespan(PipelineModel(G, tb, te, "sequential"))
    pip = pipeline_makespan(PipelineModel(G, tb, te, "pipelined"))
    assert pip <= seq * (1 + 1e-12)
    if G >= 2:
        assert pip < seq


@pytest.mark.parametrize("args", [(0, 1, 1), (2, 0, 1), (2, 1, -1)])
def test_pipeline_model_validation(args):
    with pytest.raises(ValueError):
        PipelineModel(*args)
    with pytest.raises(ValueError):
        PipelineModel(2, 1, 1, "parallel")


def test_stage_time_m1_is_one_scale_add():
    costs = OpCostTable(scale_add=5.0, h_add=0.5, forward=1, inverse=1, pointwise=0)
    t_b, _ = stage_time_estimate(1, costs, default_params())
    assert t_b == 5.5


def test_stage_time_increasing_in_m():
    costs = op_count_costs(default_params())
    tbs = [stage_time_estimate(m, costs, default_params())[0] for m in range(1, 6)]
    assert all(a < b for a, b in zip(tbs, tbs[1:]))
    with pytest.raises(ValueError):
        stage_time_estimate(6, costs, default_params())


def test_op_count_bundle_ratio():
    p = default_params()
    costs = op_count_costs(p)
    t1, _ = stage_time_estimate(1, costs, p)
    t2, _ = stage_time_estimate(2, costs, p)
    assert abs(t2 / t1 / 3 - 1) < 0.2


def test_measured_bundle_terms_ratio(toy, toy_keys):
    # bundle work per group counted on real bootstraps, priced with the op-count table
    sk, _ = toy_keys
    costs = op_count_costs(toy)
    per_group = {}
    for m in (1, 2):
        p = toy.replace(unroll_factor=m)
        cloud = generate_cloud_keys(sk, p, 3)
        counters = TransformCounters()
        gate_bootstrap(encrypt_bit(np.ones(64, np.int64), sk.lwe, p, 4), cloud, make_backend("approximate", p.N, 64), counters)
        groups = counters.bootstraps * p.group_count
        per_group[m] = (counters.bundle_terms * costs.scale_add + groups * costs.h_add) / groups
    assert abs(per_group[2] / per_group[1] / 3 - 1) < 0.2


def test_timed_costs_positive_and_increasing(toy):
    costs = calibrate_op_costs(toy, batch=16, repeats=3)
    assert costs.source.startswith("timed")
    tbs = [stage_time_estimate(m, costs, toy)[0] for m in range(1, 6)]
    assert all(a < b for a, b in zip(tbs, tbs[1:]))


def test_interior_optimum_from_op_counts():
    rows = unroll_sweep(op_count_costs(default_params()), default_params())
    best = max(rows, key=lambda r: r["throughput"])["m"]
    assert 1 < best < 5
    assert all(r["pipelined"] <= r["sequential"] for r in rows)


def test_datapath_width_validation():
    with pytest.raises(ValueError):
        DatapathWidths(tgsw=0)


# ---------------------------------------------------------------- failure


def test_failure_trials_clean_and_collapse(toy):
    ok = run_failure_trials(1000, 64, 2, toy, seed=3)
    assert ok.failures == 0 and ok.trials == 1000
    bad = run_failure_trials(1000, 8, 2, toy, seed=3)
    assert bad.failures > 0


def test_failures_nonincreasing_in_beta(toy):
    counts = [run_failure_trials(512, b, 2, toy, seed=5).failures for b in (8, 10, 16, 64)]
    assert all(a >= b for a, b in zip(counts, counts[1:]))


def test_failure_report_validation(toy):
    with pytest.raises(ValueError):
        FailureRateReport(10, 11, 64, 2, toy, 0)
    with pytest.raises(ValueError):
        run_failure_trials(0, 64, 2, toy)


# ------------------------------------------------------------------ noise


@pytest.fixture(scope="module")
def scan(toy):
    return noise_scan([1, 2, 3, 4, 5], 200, toy, seed=1)


def test_noise_scan_key_counts(scan):
    assert [r.bk_key_count for r in scan] == [2**m - 1 for m in range(1, 6)]


def test_noise_scan_ep_counts_halve(scan, toy):
    eps = [r.external_products_per_bootstrap for r in scan]
    assert eps[0] == toy.n and eps[1] == toy.n // 2
    assert eps == [-(-toy.n // m) for m in range(1, 6)]


def test_noise_scan_components(scan):
    for r in scan:
        assert r.ep_noise_var >= 0 and r.rounding_noise_var >= 0 and r.transform_noise_var >= 0
        assert r.measured_output_phase_stddev > 0
    # gadget rounding enters once per external product, so it shrinks as groups shrink
    ro = [r.rounding_noise_var for r in scan]
    assert all(a > b for a, b in zip(ro, ro[1:]))


def test_noise_report_validation():
    with pytest.raises(ValueError):
        NoiseReport(2, -1.0, 0.0, 3, 0.0, -100.0, 10, 0.0, 10, 64)
    with pytest.raises(ValueError):
        NoiseReport(2, 0.0, 0.0, 4, 0.0, -100.0, 10, 0.0, 10, 64)


def test_noise_scan_rejects_m(toy):
    with pytest.raises(ValueError):
        noise_scan([6], 4, toy)


# ------------------------------------------------------------ error sweep


def test_error_sweep_rows():
    rows = error_sweep([16, 32, 64], N=256, trials=2)
    dbs = [r["error_db"] for r in rows]
    assert [r["beta"] for r in rows] == [16, 32, 64, "reference"]
    assert dbs[0] > dbs[1] > dbs[2] > dbs[3]


# --------------------------------------------------------------- emission


def test_csv_and_json_carry_params(tmp_path, toy):
    rows = [{"beta": 16, "error_db": -15.5}, {"beta": 64, "error_db": -200.0, "note": "x"}]
    text = to_csv(rows, toy, seed=7)
    parsed = list(csv.DictReader(io.StringIO(text)))
    assert parsed[0]["schema_version"] and parsed[0]["seed"] == "7"
    assert json.loads(parsed[1]["params"])["ring_degree"] == toy.N
    assert parsed[0]["note"] == "" and parsed[1]["note"] == "x"
    doc = json.loads(to_json(rows, toy, seed=7, study="error"))
    assert doc["params"]["lwe_dimension"] == toy.n and doc["study"] == "error" and len(doc["rows"]) == 2
    assert write_report(tmp_path / "r.json", rows, toy).read_text().startswith("{")
    assert write_report(tmp_path / "r.csv", rows, toy).read_text().startswith("schema_version")
