import csv
import json

import numpy as np
import pytest

import labelshift.harness as harness
from labelshift.cli import main
from labelshift.errors import DataExhaustedError, InvalidParameterError
from labelshift.harness import ExperimentConfig, read_trace, run_experiment, summarize_dir, trace_metrics


def small(tmp_path, **kw):
    base = dict(methods=("base",), seeds=(0,), horizon=40, out_dir=str(tmp_path))
    base.update(kw)
    return ExperimentConfig(**base)


def test_one_seed_one_method(tmp_path):
    summary = run_experiment(small(tmp_path))
    assert sorted(p.name for p in tmp_path.iterdir()) == ["summary.json", "uols_ber_base_seed0.csv"]
    entry = summary["methods"]["base"]
    assert entry["status"] == "ok"
    assert entry["error_std"] == 0.0
    for key in ("error_mean", "error_std", "mse_mean", "mse_std", "v_t", "runtime_ms", "status"):
        assert key in entry
    assert summary["anchors"]["mu1"] == pytest.approx([0.9, 0.05, 0.05])


def test_three_seeds_sample_std(tmp_path):
    summary = run_experiment(small(tmp_path, seeds=(0, 1, 2)))
    entry = summary["methods"]["base"]
    errs = [entry["per_seed"][s]["error"] for s in ("0", "1", "2")]
    assert entry["error_std"] == pytest.approx(np.std(errs, ddof=1))


def test_trace_schema_and_round_trip(tmp_path):
    run_experiment(small(tmp_path, methods=("lpa",)))
    path = tmp_path / "uols_ber_lpa_seed0.csv"
    with path.open() as fh:
        header = next(csv.reader(fh))
    assert header == ["t", "q_true_1", "q_true_2", "q_true_3", "q_hat_1", "q_hat_2", "q_hat_3",
                      "n_correct", "n_total", "switched", "restart"]
    m = trace_metrics(read_trace(path))
    s = json.loads((tmp_path / "summary.json").read_text())["methods"]["lpa"]
    assert m["error"] == pytest.approx(s["error_mean"])
    assert m["mse"] == pytest.approx(s["mse_mean"])


def test_byte_identical_reruns(tmp_path):
    for sub in ("a", "b"):
        run_experiment(small(tmp_path / sub, methods=("flh-ftl", "lpa"), seeds=(3,)))
    for name in ("uols_ber_flh-ftl_seed3.csv", "uols_ber_lpa_seed3.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_parallel_matches_serial(tmp_path):
    run_experiment(small(tmp_path / "s", seeds=(0, 1)))
    run_experiment(small(tmp_path / "p", seeds=(0, 1), jobs=2))
    for seed in (0, 1):
        name = f"uols_ber_base_seed{seed}.csv"
        assert (tmp_path / "s" / name).read_bytes() == (tmp_path / "p" / name).read_bytes()


def test_failed_run_is_recorded_and_others_proceed(tmp_path, monkeypatch):
    real = harness.run_uols

    def flaky(cfg, *a, **kw):
        if cfg.method == "fth":
            raise DataExhaustedError("pool ran dry")
        return real(cfg, *a, **kw)

    monkeypatch.setattr(harness, "run_uols", flaky)
    summary = run_experiment(small(tmp_path, methods=("base", "fth")))
    assert summary["methods"]["base"]["status"] == "ok"
    assert summary["methods"]["fth"]["status"] == "failed"
    assert "pool ran dry" in summary["methods"]["fth"]["errors"]["0"]


def test_sols_trace_has_refit_column(tmp_path):
    cfg = ExperimentConfig(protocol="sols", methods=("lazy",), seeds=(0,), horizon=8, out_dir=str(tmp_path),
                           trainer={"epochs": 1})
    summary = run_experiment(cfg)
    assert "refits_mean" in summary["methods"]["lazy"]
    assert "refit" in read_trace(tmp_path / "sols_ber_lazy_seed0.csv")


def test_config_validation():
    with pytest.raises(InvalidParameterError):
        ExperimentConfig(seeds=())
    with pytest.raises(InvalidParameterError):
        ExperimentConfig(methods=("werm",))
    with pytest.raises(InvalidParameterError):
        ExperimentConfig.from_dict({"colour": "red"})


def test_summarize_dir(tmp_path):
    run_experiment(small(tmp_path, seeds=(0, 1)))
    table = summarize_dir(tmp_path)
    assert table["uols/ber/base"]["n_seeds"] == 2


class TestCli:

    def test_malformed_config(self, tmp_path, capsys):
        bad = tmp_path / "c.json"
        bad.write_text("{not json")
        assert main(["uols", "--config", str(bad)]) != 0
        assert "not valid JSON" in capsys.readouterr().err

    def test_bad_value_in_config(self, tmp_path, capsys):
        bad = tmp_path / "c.json"
        bad.write_text(json.dumps({"seeds": []}))
        assert main(["uols", "--config", str(bad)]) != 0
        assert "seed" in capsys.readouterr().err

    def test_flags_override_config(self, tmp_path):
        cfg = tmp_path / "c.json"
        cfg.write_text(json.dumps({"horizon": 500, "seeds": [0], "methods": ["base"], "shift": "sin"}))
        out = tmp_path / "o"
        assert main(["uols", "--config", str(cfg), "--T", "12", "--out", str(out)]) == 0
        s = json.loads((out / "summary.json").read_text())
        assert s["horizon"] == 12 and s["shift"] == "sin"

    def test_uols_on_stream_files(self, tmp_path):
        data = tmp_path / "d"
        assert main(["gen-data", "--out", str(data), "--seed", "1"]) == 0
        for name in ("train.csv", "holdout.csv", "target.csv", "holdout_softmax.csv", "target_softmax.csv"):
            assert (data / name).exists()
        with (data / "holdout.csv").open() as fh:
            assert next(csv.reader(fh)) == ["label"] + [f"x{i}" for i in range(1, 13)]
        out = tmp_path / "o"
        rc = main(["uols", "--holdout", str(data / "holdout_softmax.csv"), "--target", str(data / "target_softmax.csv"),
                   "--method", "fth", "--T", "20", "--seed", "0", "--out", str(out)])
        assert rc == 0
        assert (out / "uols_ber_fth_seed0.csv").exists()

    def test_regress(self, tmp_path, capsys):
        z = tmp_path / "z.csv"
        z.write_text("z1,z2\n1,0\n1,0\n1,0\n")
        assert main(["regress", str(z)]) == 0
        rows = list(csv.reader(capsys.readouterr().out.splitlines()))
        assert rows[0] == ["t", "theta_1", "theta_2"]
        assert [float(v) for v in rows[2][1:]] == pytest.approx([0.5, 0.0])
        assert [float(v) for v in rows[3][1:]] == pytest.approx([2 / 3, 0.0])

    def test_regress_low_switch(self, tmp_path):
        z = tmp_path / "z.csv"
        z.write_text("\n".join(["0.5,0.5"] * 10 + ["1,0"] * 10) + "\n")
        out = tmp_path / "t.csv"
        assert main(["regress", str(z), "--low-switch", "--sigma-sq", "0.01", "--out", str(out)]) == 0
        rows = list(csv.DictReader(out.open()))
        assert len(rows) == 20
        assert sum(int(r["restart"]) for r in rows) == 1
        assert rows[0]["switched"] == "1"

    def test_sols_flags(self, tmp_path):
        out = tmp_path / "s"
        assert main(["sols", "--learner", "ct", "--N", "20", "--T", "5", "--epochs", "1", "--seed", "0",
                     "--out", str(out)]) == 0
        s = json.loads((out / "summary.json").read_text())
        assert s["config"]["n_per_round"] == 20
        assert s["config"]["trainer"]["epochs"] == 1

    def test_summarize_cli(self, tmp_path, capsys):
        run_experiment(small(tmp_path))
        assert main(["summarize", str(tmp_path)]) == 0
        assert "uols/ber/base" in capsys.readouterr().out
        assert main(["summarize", str(tmp_path / "missing")]) == 2
