import json
import os

import numpy as np
import pytest

from holonet.cli import main


def run(args):
    return main(args)


class TestTopLevel:
    def test_unknown_subcommand_exits_2(self, capsys):
        assert run(["frobnicate"]) == 2

    def test_missing_required_flag_exits_2(self, capsys):
        code = run(["approx", "--target", "sin1d"])
        err = capsys.readouterr().err
        assert code == 2
        assert "--s" in err or "required" in err


class TestApprox:
    def test_end_to_end_certificate_pass(self, tmp_path, capsys):
        out = tmp_path / "net.json"
        cert = tmp_path / "cert.json"
        code = run([
            "approx", "--target", "cubic1d", "--s", "2.5", "--eps", "0.5",
            "--probes", "5000", "--out", str(out), "--cert", str(cert),
        ])
        assert code == 0
        assert "PASS" in capsys.readouterr().out
        cert_obj = json.loads(cert.read_text())
        assert cert_obj["status"] == "PASS"
        assert cert_obj["sup_error_measured"] <= 0.5
        net_obj = json.loads(out.read_text())
        assert net_obj["activation"] == "relu"
        manifest = json.loads((tmp_path / "net.manifest.json").read_text())
        assert manifest["subcommand"] == "approx"
        assert manifest["tool_version"]

    def test_leaky_relu_conversion_via_flag(self, tmp_path):
        out = tmp_path / "net.json"
        cert = tmp_path / "cert.json"
        code = run([
            "approx", "--target", "cubic1d", "--s", "2.5", "--eps", "0.5",
            "--activation", "leaky_relu", "--a", "0.1",
            "--probes", "2000", "--out", str(out), "--cert", str(cert),
        ])
        assert code == 0
        assert json.loads(out.read_text())["activation"] == "leaky_relu"

    def test_unknown_target_exits_2(self, tmp_path, capsys):
        code = run(["approx", "--target", "nope", "--s", "2.5", "--eps", "0.5",
                    "--out", str(tmp_path / "n.json"), "--cert", str(tmp_path / "c.json")])
        assert code == 2
        assert "unknown target" in capsys.readouterr().err

    def test_locally_quadratic_activation_rejected(self, tmp_path, capsys):
        code = run(["approx", "--target", "cubic1d", "--s", "2.5", "--eps", "0.5",
                    "--activation", "elu", "--a", "1.0",
                    "--out", str(tmp_path / "n.json"), "--cert", str(tmp_path / "c.json")])
        assert code == 2
        assert "piecewise-linear" in capsys.readouterr().err


class TestSimulateDepsTrain:
    def _write_spec(self, tmp_path, with_task):
        spec = {"process": {"kind": "ar1", "a": 0.5, "noise_sd": 1.0, "burn_in": 500}}
        if with_task:
            spec["task"] = {"target": "sin1d_half", "s": 2.5, "noise_sd": 0.2,
                            "clip": {"lo": [-1.0], "hi": [1.0]}}
        path = tmp_path / "spec.json"
        path.write_text(json.dumps(spec))
        return path

    def test_simulate_plain_trajectory(self, tmp_path):
        spec = self._write_spec(tmp_path, with_task=False)
        out = tmp_path / "traj.csv"
        assert run(["simulate", "--spec", str(spec), "--n", "2000",
                    "--seed", "5", "--out", str(out)]) == 0
        lines = out.read_text().strip().split("\n")
        assert lines[0] == "index,x"
        assert len(lines) == 2001

    def test_simulate_supervised(self, tmp_path):
        spec = self._write_spec(tmp_path, with_task=True)
        out = tmp_path / "traj.csv"
        assert run(["simulate", "--spec", str(spec), "--n", "1500",
                    "--seed", "6", "--out", str(out)]) == 0
        assert out.read_text().startswith("index,x,y\n")

    def test_simulate_empty_config_lists_missing_fields(self, tmp_path, capsys):
        bad = tmp_path / "bad.json"
        bad.write_text("{}")
        code = run(["simulate", "--spec", str(bad), "--n", "10",
                    "--seed", "1", "--out", str(tmp_path / "t.csv")])
        assert code == 2
        assert "process" in capsys.readouterr().err

    def test_simulate_nonstationary_rejected(self, tmp_path, capsys):
        bad = tmp_path / "bad.json"
        bad.write_text(json.dumps({"process": {"kind": "ar1", "a": 1.0}}))
        code = run(["simulate", "--spec", str(bad), "--n", "10",
                    "--seed", "1", "--out", str(tmp_path / "t.csv")])
        assert code == 2
        assert "stationarity" in capsys.readouterr().err

    def test_malformed_json_reports_position(self, tmp_path, capsys):
        bad = tmp_path / "bad.json"
        bad.write_text('{"process": \n  oops}')
        code = run(["simulate", "--spec", str(bad), "--n", "10",
                    "--seed", "1", "--out", str(tmp_path / "t.csv")])
        assert code == 2
        err = capsys.readouterr().err
        assert "line 2" in err

    def test_deps_pipeline(self, tmp_path):
        spec = self._write_spec(tmp_path, with_task=False)
        traj = tmp_path / "traj.csv"
        run(["simulate", "--spec", str(spec), "--n", "20000", "--seed", "7",
             "--out", str(traj)])
        deps = tmp_path / "deps.csv"
        summary = tmp_path / "deps.json"
        assert run(["deps", "--traj", str(traj), "--lags", "1:10",
                    "--out", str(deps), "--summary", str(summary)]) == 0
        lines = deps.read_text().strip().split("\n")
        assert lines[0] == "lag,cov_abs"
        assert len(lines) == 11
        assert json.loads(summary.read_text())["fitted_rate"]["model"] in (
            "geometric", "polynomial")

    def test_train_pipeline(self, tmp_path, capsys):
        spec = self._write_spec(tmp_path, with_task=True)
        traj = tmp_path / "traj.csv"
        run(["simulate", "--spec", str(spec), "--n", "400", "--seed", "8",
             "--out", str(traj)])
        cls = tmp_path / "class.json"
        cls.write_text(json.dumps({"depth_cap": 2, "width_cap": 8,
                                   "sparsity_cap": 60, "weight_cap": 10.0,
                                   "output_cap": 2.0}))
        arch = tmp_path / "arch.json"
        arch.write_text(json.dumps({"widths": [1, 6, 1]}))
        tcfg = tmp_path / "train.json"
        tcfg.write_text(json.dumps({"epochs": 150, "step_size": 0.2, "restarts": 2,
                                    "decay_factor": 0.5, "decay_interval": 50,
                                    "projection_interval": 10, "seed": 3}))
        model = tmp_path / "model.json"
        report = tmp_path / "train_report.json"
        code = run(["train", "--data", str(traj), "--class", str(cls),
                    "--arch", str(arch), "--loss", "absolute", "--cfg", str(tcfg),
                    "--out", str(model), "--report", str(report)])
        assert code == 0
        rep = json.loads(report.read_text())
        assert rep["constraint_report"]["ok"] is True
        assert rep["param_stats"]["sparsity"] <= 60

    def test_train_requires_labels(self, tmp_path, capsys):
        spec = self._write_spec(tmp_path, with_task=False)
        traj = tmp_path / "traj.csv"
        run(["simulate", "--spec", str(spec), "--n", "100", "--seed", "9",
             "--out", str(traj)])
        cls = tmp_path / "class.json"
        cls.write_text(json.dumps({"depth_cap": 2, "width_cap": 8, "sparsity_cap": 60,
                                   "weight_cap": 10.0, "output_cap": 2.0}))
        arch = tmp_path / "arch.json"
        arch.write_text(json.dumps({"widths": [1, 6, 1]}))
        tcfg = tmp_path / "train.json"
        tcfg.write_text(json.dumps({"epochs": 10, "seed": 1}))
        code = run(["train", "--data", str(traj), "--class", str(cls),
                    "--arch", str(arch), "--loss", "absolute", "--cfg", str(tcfg),
                    "--out", str(tmp_path / "m.json"),
                    "--report", str(tmp_path / "r.json")])
        assert code == 2
        assert "label" in capsys.readouterr().err


def _rate_cfg_obj(alpha=3.0):
    return {
        "task": {
            "process": {"kind": "ar1", "a": 0.5, "noise_sd": 1.0, "burn_in": 500},
            "target": "sin1d_half", "s": 2.5, "noise_sd": 0.2,
            "clip": {"lo": [-1.0], "hi": [1.0]},
        },
        "loss": {"kind": "absolute"},
        "alpha": alpha,
        "n_grid": [256, 512],
        "replications": 2,
        "output_cap": 2.0,
        "mc_samples": 2000,
        "seed": 41,
        "train": {"epochs": 100, "step_size": 0.3, "restarts": 1,
                  "decay_factor": 0.5, "decay_interval": 40,
                  "projection_interval": 10, "seed": 0},
        "proxy_probe_count": 2000,
        "cn1_replications": 30,
    }


class TestRateCli:
    def test_alpha_hypothesis_violation_exits_2(self, tmp_path, capsys):
        cfg = tmp_path / "rate.json"
        cfg.write_text(json.dumps(_rate_cfg_obj(alpha=2.2)))
        code = run(["rate", "--cfg", str(cfg), "--out", str(tmp_path / "r.json")])
        assert code == 2
        assert "2 + d_x/s" in capsys.readouterr().err

    def test_end_to_end_with_outputs(self, tmp_path):
        cfg = tmp_path / "rate.json"
        cfg.write_text(json.dumps(_rate_cfg_obj()))
        out = tmp_path / "report.json"
        csv_path = tmp_path / "report.csv"
        svg_path = tmp_path / "report.svg"
        code = run(["rate", "--cfg", str(cfg), "--out", str(out),
                    "--csv", str(csv_path), "--plot", str(svg_path),
                    "--workers", "2"])
        assert code == 0
        report = json.loads(out.read_text())
        assert len(report["per_n"]) == 2
        assert csv_path.read_text().startswith("n,replication,excess")
        assert svg_path.read_text().startswith("<svg")
        manifest = json.loads((tmp_path / "report.manifest.json").read_text())
        assert manifest["subcommand"] == "rate"
        assert manifest["config_digest"]

    def test_manifest_reproduces_report_bytes(self, tmp_path):
        cfg = tmp_path / "rate.json"
        cfg.write_text(json.dumps(_rate_cfg_obj()))
        out1 = tmp_path / "r1.json"
        out2 = tmp_path / "r2.json"
        assert run(["rate", "--cfg", str(cfg), "--out", str(out1)]) == 0
        manifest = json.loads((tmp_path / "r1.manifest.json").read_text())
        cfg2 = tmp_path / "rate2.json"
        cfg2.write_text(json.dumps(manifest["config"]))
        assert run(["rate", "--cfg", str(cfg2), "--out", str(out2)]) == 0
        assert out1.read_bytes() == out2.read_bytes()
