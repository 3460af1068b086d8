import math

import numpy as np
import pytest
import yaml

from ricianmiso.errors import ConfigError, ReportError
from ricianmiso.harness import cli
from ricianmiso.harness.config import ExperimentConfig, config_from_dict, dump_config, load_config
from ricianmiso.harness.experiment import (
    HEADER,
    ResultRow,
    estimate_regularizer,
    read_rows,
    run_experiment,
    write_rows,
)
from ricianmiso.harness.report import compare_report, emit_plotdata, threshold_for
from ricianmiso.channel import PathlossParams, pathloss

SMALL = dict(N=[16, 32], K=[16], rho=[0.0, 1.0], nu=[0.9], seed=3, trials=6, lambda_samples=2000)


@pytest.fixture
def small_config():
    return ExperimentConfig(**SMALL)


@pytest.fixture(scope="module")
def small_rows():
    return run_experiment(ExperimentConfig(**SMALL))


def _write_yaml(tmp_path, data, name="cfg.yaml"):
    p = tmp_path / name
    p.write_text(yaml.safe_dump(data))
    return p


def test_row_layout(small_rows):
    # 4 cells x 2 methods x (16 users + aggregate)
    assert len(small_rows) == 136
    agg = [r for r in small_rows if r.is_aggregate and r.method == "mc"][0]
    users = [r for r in small_rows if r.scenario_id == agg.scenario_id and r.method == "mc" and not r.is_aggregate]
    assert agg.rate_bits == pytest.approx(sum(r.rate_bits for r in users) / 16)
    assert all(r.stderr == 0 for r in small_rows if r.method == "de")


def test_csv_round_trip(small_rows, tmp_path):
    path = write_rows(small_rows, tmp_path / "r.csv")
    assert path.read_text().splitlines()[0] == ",".join(HEADER)
    assert read_rows(path) == small_rows


def test_seed_determinism(small_config):
    a = run_experiment(small_config.replace(N=[16], rho=[1.0]))
    b = run_experiment(small_config.replace(N=[16], rho=[1.0]))
    assert a == b
    c = run_experiment(small_config.replace(N=[16], rho=[1.0], seed=4))
    assert a != c


def test_regularizer_rule():
    p = PathlossParams()
    lam, se = estimate_regularizer(p, "fixed-ring", 1, 1e-13, 10.0, None)
    assert se == 0 and lam == pytest.approx(1e-14 / pathloss(500 / 3, p))
    lam, se = estimate_regularizer(p, "uniform-disk", 50_000, 1e-13, 10.0, np.random.default_rng(0))
    assert 0 < se < 0.02 * lam


def test_config_validation(tmp_path):
    with pytest.raises(ConfigError, match="unknown"):
        config_from_dict({**SMALL, "sigma": 1.0})
    with pytest.raises(ConfigError, match="missing"):
        config_from_dict({"N": [16]})
    with pytest.raises(ConfigError):
        config_from_dict({**SMALL, "nu": [1.0]})
    with pytest.raises(ConfigError):
        config_from_dict({**SMALL, "K": [64]})
    with pytest.raises(ConfigError):
        config_from_dict({**SMALL, "lambda_mode": "explicit"})
    with pytest.raises(ConfigError):
        load_config(tmp_path / "absent.yaml")


def test_config_round_trip(tmp_path):
    cfg = config_from_dict({**SMALL, "sigma2": "1e-13"})
    assert cfg.sigma2 == 1e-13
    dump_config(cfg, tmp_path / "c.yaml")
    assert load_config(tmp_path / "c.yaml") == cfg


def test_thresholds():
    t = {32: 10.0, 64: 5.0, 128: 3.0}
    assert threshold_for(16, t) == 10.0
    assert threshold_for(100, t) == 5.0
    assert threshold_for(256, t) == 3.0


def test_compare_report(small_rows):
    rep = compare_report(small_rows, threshold_pct=1e6)
    assert rep.passed and len(rep.cells) == 4
    assert not compare_report(small_rows, threshold_pct=1e-9).passed
    bad = [r for r in small_rows if r.method != "de"]
    with pytest.raises(ReportError):
        compare_report(bad)


def test_error_rows_block_comparison(small_rows):
    r0 = small_rows[0]
    err = ResultRow(r0.scenario_id, r0.N, r0.K, r0.rho, r0.nu, r0.seed, r0.trials,
                    "error:ConvergenceError", "all", math.nan, math.nan, math.nan, math.nan)
    with pytest.raises(ReportError, match="failed"):
        compare_report(small_rows + [err])


def test_plotdata(small_rows, tmp_path):
    files = emit_plotdata(small_rows, tmp_path)
    assert len(files) == 2
    assert (tmp_path / "rate_vs_N.png").stat().st_size > 0
    body = files[0].read_text().splitlines()
    assert body[1] == "# N mc_rate mc_stderr de_rate" and len(body) == 4
    assert len((tmp_path / "index.dat").read_text().splitlines()) == 3


def test_plotdata_empty(tmp_path):
    assert emit_plotdata([], tmp_path) == []
    assert (tmp_path / "index.dat").read_text() == "# K rho nu file\n"


def test_cli_run_compare_plot(tmp_path, capsys):
    cfg = _write_yaml(tmp_path, {**SMALL, "N": [16], "rho": [1.0]})
    out = tmp_path / "out"
    assert cli.main(["run", "--config", str(cfg), "--out", str(out)]) == cli.EXIT_OK
    assert cli.main(["run", "--config", str(cfg), "--out", str(out), "--trials", "3"]) == cli.EXIT_OK
    res1, res2 = out / "run-001" / "results.csv", out / "run-002" / "results.csv"
    assert load_config(out / "run-002" / "config.yaml").trials == 3
    assert cli.main(["compare", str(res1), "--threshold", "1e6"]) == cli.EXIT_OK
    assert cli.main(["compare", str(res1), "--threshold", "1e-9"]) == cli.EXIT_COMPARE
    assert cli.main(["plotdata", str(res1), "--out", str(tmp_path / "plots")]) == cli.EXIT_OK
    assert (tmp_path / "plots" / "rate_vs_N.png").exists()
    assert res2.exists()


def test_cli_exit_codes(tmp_path, capsys):
    bad = _write_yaml(tmp_path, {**SMALL, "bogus": 1})
    assert cli.main(["validate", "--config", str(bad)]) == cli.EXIT_CONFIG
    good = _write_yaml(tmp_path, SMALL, "good.yaml")
    assert cli.main(["validate", "--config", str(good)]) == cli.EXIT_OK
    assert "ok: 4 cells" in capsys.readouterr().out
    # a tolerance no solver can meet within one iteration
    num = _write_yaml(tmp_path, {**SMALL, "N": [16], "rho": [1.0], "fp_max_iter": 1}, "num.yaml")
    out = tmp_path / "o"
    assert cli.main(["run", "--config", str(num), "--out", str(out)]) == cli.EXIT_NUMERIC
    res = out / "run-001" / "results.csv"
    assert any(r.is_error for r in read_rows(res))
    assert cli.main(["compare", str(res)]) == cli.EXIT_NUMERIC
