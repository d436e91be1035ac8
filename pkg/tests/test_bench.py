import json

import numpy as np
import pytest

from elss import bench
from elss.cli import main
from elss.config import ExperimentConfig
from elss.data import Dataset, Task
from elss.errors import InsufficientSamplesError


def small_cfg(**kw):
    kw = {"repeats": 2, "m_grid": [3, 5], "methods": ["RKS", "ELSS2"], **kw}
    cfg = ExperimentConfig(**kw)
    cfg.dataset.n_train, cfg.dataset.n_test = 150, 50
    return cfg


def _rows(records, row_type):
    return [r for r in records if r.row_type == row_type]


def test_bench_row_counts_and_order():
    recs = bench.run_bench(small_cfg())
    runs, aggs = _rows(recs, "run"), _rows(recs, "aggregate")
    assert len(runs) == 2 * 2 * 2 and len(aggs) == 2 * 2
    assert [(r.method, r.m, r.repeat) for r in runs] == sorted((r.method, r.m, r.repeat) for r in runs)
    for r in runs:
        assert r.status == "ok" and r.test_error >= 0 and np.isfinite(r.train_error)
        assert r.m0 == 10 * r.m


def test_aggregate_is_mean_and_sample_std():
    recs = bench.run_bench(small_cfg())
    for agg in _rows(recs, "aggregate"):
        vals = [r.test_error for r in _rows(recs, "run")
                if (r.method, r.m) == (agg.method, agg.m)]
        assert agg.test_error == pytest.approx(np.mean(vals))
        assert agg.test_error_std == pytest.approx(np.std(vals, ddof=1))
        assert agg.n_runs == 2


def test_methods_share_pools_and_adding_a_method_keeps_rows():
    base = bench.run_bench(small_cfg())
    more = bench.run_bench(small_cfg(methods=["RKS", "ELSS2", "EERF"]))
    key = lambda r: (r.row_type, r.method, r.m, r.repeat)  # noqa: E731
    by_key = {key(r): r for r in more}
    for r in base:
        assert by_key[key(r)].test_error == r.test_error


def test_elss1_lambda_zero_matches_rks_statistically():
    cfg = small_cfg(methods=["RKS", "ELSS1"], lam=0.0)
    cfg.repeats = 8
    aggs = {(a.method, a.m): a for a in _rows(bench.run_bench(cfg), "aggregate")}
    for m in (3, 5):
        a, b = aggs[("RKS", m)], aggs[("ELSS1", m)]
        assert abs(a.test_error - b.test_error) <= a.test_error_std + b.test_error_std


def test_failed_run_is_tagged_and_skipped():
    # constant inputs make every feature column identical, but targets vary
    X = np.zeros((40, 2))
    train = Dataset(X, np.linspace(-1, 1, 40), Task.REGRESSION)
    cfg = small_cfg(methods=["ELSS2"], bandwidth=1.0)
    cfg.learner.gamma_grid = [0.0]
    recs = bench.run_bench(cfg, train, train)
    runs = _rows(recs, "run")
    assert all(r.status.startswith("error:") for r in runs)
    assert all(a.n_runs == 0 and a.test_error is None for a in _rows(recs, "aggregate"))


def test_validation_grid_selects_from_grid():
    cfg = small_cfg(methods=["RKS"], bandwidth=[0.5, 3.0])
    cfg.learner.gamma_grid = [1e-6, 1e-2]
    for r in _rows(bench.run_bench(cfg), "run"):
        assert r.bandwidth in (0.5, 3.0) and r.gamma in (1e-6, 1e-2)


def test_lambda_sweep():
    cfg = small_cfg(methods=["ELSS1", "RKS"], lambda_grid=[1e-4, "1/N"])
    cfg.m_grid = [4]
    recs = bench.run_lambda_sweep(cfg)
    lams = {r.lam for r in _rows(recs, "run") if r.method == "ELSS1"}
    assert lams == {1e-4, 1 / 150}
    assert all(r.lam is None for r in recs if r.method == "RKS")
    assert len(_rows(recs, "aggregate")) == 3


def test_single_lambda_sweep_reduces_to_bench():
    cfg = small_cfg(methods=["ELSS2"], lambda_grid=["1/N"])
    sweep = [r.test_error for r in _rows(bench.run_lambda_sweep(cfg), "run")]
    plain = [r.test_error for r in _rows(bench.run_bench(small_cfg(methods=["ELSS2"])), "run")]
    assert sweep == plain


def test_weights_hist():
    cfg = small_cfg(lambda_grid=[1e-4, 1e4], m0=30)
    rows = bench.run_weights_hist(cfg)
    assert len(rows) == 60
    for lam in (1e-4, 1e4):
        assert sum(q for l, _, q in rows if l == lam) == pytest.approx(1.0, abs=1e-12)


def _clf_cfg(**kw):
    cfg = small_cfg(**kw)
    cfg.dataset.task = "classification"
    return cfg


def _clf_data(n=120, seed=0):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, 3))
    y = np.where(X[:, 0] + 0.3 * X[:, 1] > 0, 1.0, -1.0)
    return Dataset(X, y, Task.CLASSIFICATION)


def test_fewshot_counts():
    train, test = _clf_data(), _clf_data(60, seed=1)
    cfg = _clf_cfg(fewshot_k_grid=[2, 5], fewshot_m=6)
    recs = bench.run_fewshot(cfg, train, test)
    for k in (2, 5):
        assert len([r for r in _rows(recs, "run") if r.k == k]) == cfg.repeats * 3
    assert {a.method for a in _rows(recs, "aggregate")} == {"LR", "ELSS+LR", "RF+LR"}


def test_fewshot_insufficient():
    cfg = _clf_cfg(fewshot_k_grid=[1000])
    with pytest.raises(InsufficientSamplesError):
        bench.run_fewshot(cfg, _clf_data(), _clf_data(30, seed=2))


def test_elss_weights_ignore_targets():
    train = _clf_data()
    from elss.features import sample_pool
    pool = sample_pool(20, 3, 1.0, seed=0)
    flipped = Dataset(train.inputs, -train.targets, Task.CLASSIFICATION)
    a = bench.elss_weights(train.inputs, pool, 0.01).weights
    b = bench.elss_weights(flipped.inputs, pool, 0.01).weights
    np.testing.assert_array_equal(a, b)


def test_csv_format():
    text = bench.format_csv(bench.run_bench(small_cfg()))
    lines = text.splitlines()
    assert lines[0] == "# elss-results schema=1"
    assert lines[1].split(",") == list(bench.COLUMNS)
    assert all(len(line.split(",")) == len(bench.COLUMNS) for line in lines[2:])


def _write_cfg(tmp_path):
    p = tmp_path / "c.toml"
    p.write_text('repeats = 2\nm_grid = [3]\nmethods = ["RKS", "ELSS1"]\n'
                 '[dataset]\nn_train = 120\nn_test = 40\n')
    return p


def test_cli_bench_csv_and_json(tmp_path, capsys):
    cfg = _write_cfg(tmp_path)
    out = tmp_path / "r.csv"
    assert main(["bench", "--config", str(cfg), "--out", str(out)]) == 0
    assert out.read_text().startswith("# elss-results schema=1")
    assert main(["bench", "--config", str(cfg), "--format", "json", "--m", "4"]) == 0
    obj = json.loads(capsys.readouterr().out)
    assert {r["m"] for r in obj["rows"]} == {4}


def test_cli_exit_codes(tmp_path):
    bad = tmp_path / "bad.toml"
    bad.write_text("nope = 1\n")
    assert main(["bench", "--config", str(bad)]) == 1
    assert main(["bench", "--method", "XYZ"]) == 1
    garbage = tmp_path / "g.csv"
    garbage.write_text("1,2\n3,oops\n")
    assert main(["bench", "--dataset", str(garbage)]) == 2
    assert main(["bench", "--dataset", str(tmp_path / "missing.csv")]) == 2
    const = tmp_path / "c.csv"
    const.write_text("".join(f"{i},1\n" for i in range(10)))
    assert main(["bench", "--dataset", str(const)]) == 3


def test_cli_weights_hist_and_diagnose(tmp_path):
    cfg = _write_cfg(tmp_path)
    out = tmp_path / "w.csv"
    assert main(["weights-hist", "--config", str(cfg), "--m0", "20",
                 "--lambda-grid", "1e-4,1/N", "--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[1] == "lambda,feature_index,weight" and len(lines) == 42

    dcfg = tmp_path / "d.toml"
    dcfg.write_text("[diagnose]\nn0_grid = [50, 200]\nm0 = 8\nseeds = 3\n"
                    "variance_pools = 200\noracle_mc_samples = 20000\n")
    out = tmp_path / "d.json"
    assert main(["diagnose", "--config", str(dcfg), "--out", str(out)]) == 0
    rep = json.loads(out.read_text())
    assert [r["n0"] for r in rep["per_n0"]] == [50, 200]
    for r in rep["per_n0"]:
        assert r["deg_lambda"] == pytest.approx(r["trace_q"], abs=1e-10)
