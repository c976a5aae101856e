"""Command-line interface: approx, simulate, deps, train, rate.

Every run validates its configuration up front (reporting all problems at
once), writes its outputs only to the paths named on the command line, and
drops a run manifest next to the first output.  The manifest embeds the
normalized configuration and root seed, which is enough to regenerate any
report byte-identically.

Exit codes: 0 success, 2 configuration/validation error, 3 resource
ceiling, 4 experiment failure.
"""

from __future__ import annotations

import argparse
import csv as csv_module
import hashlib
import io
import json
import os
import sys
import time

import numpy as np

from . import __version__
from .activations import Activation
from .blocks import BuildLimitError
from .construction import build_relu_approximant, convert_relu_to_pwl
from .dependence import estimate_dependence
from .losses import LOSS_KINDS, Loss
from .network import Architecture, ClassConstraints, Network
from .processes import ProcessSpec, SupervisedTask, make_supervised, simulate
from .rates import ExperimentFailure, RateExperimentConfig, rate_experiment
from .report import dependence_csv, rate_csv, rate_svg, trajectory_csv
from .targets import Box, corpus_names, corpus_target
from .training import TrainConfig, TrainingFailure, train_erm

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RESOURCE = 3
EXIT_EXPERIMENT = 4


class ConfigError(ValueError):
    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


def _digest(obj) -> str:
    return hashlib.sha256(json.dumps(obj, sort_keys=True).encode()).hexdigest()[:16]


def _write_json(path: str, obj) -> None:
    with open(path, "w") as f:
        json.dump(obj, f, sort_keys=True, indent=2)
        f.write("\n")


def _write_text(path: str, text: str) -> None:
    with open(path, "w") as f:
        f.write(text)


def write_manifest(subcommand: str, config, seed, outputs, started: float) -> str:
    """RunManifest next to the first output; embeds the normalized config."""
    base, _ = os.path.splitext(outputs[0])
    path = base + ".manifest.json"
    manifest = {
        "subcommand": subcommand,
        "config": config,
        "config_digest": _digest(config),
        "seed": seed,
        "tool_version": __version__,
        "started": started,
        "finished": time.time(),
        "outputs": [os.path.abspath(p) for p in outputs],
    }
    _write_json(path, manifest)
    return path


def load_json_config(path: str):
    """Parse a JSON config; a syntax error reports line and column."""
    try:
        with open(path) as f:
            return json.load(f)
    except FileNotFoundError:
        raise ConfigError([f"config file not found: {path}"])
    except json.JSONDecodeError as e:
        raise ConfigError([f"{path}: malformed JSON at line {e.lineno}, column {e.colno}: {e.msg}"])


# -- config validators --------------------------------------------------------


def _validate_process(obj, errors, where="process") -> ProcessSpec | None:
    if not isinstance(obj, dict):
        errors.append(f"{where}: must be an object")
        return None
    known = {"kind", "a", "noise_sd", "omega", "alpha1", "a_plus", "a_minus", "burn_in"}
    if "kind" not in obj:
        errors.append(f"{where}.kind: missing (ar1 | arch1 | tar1)")
        return None
    extra = set(obj) - known
    if extra:
        errors.append(f"{where}: unknown fields {sorted(extra)}")
        return None
    try:
        return ProcessSpec(**obj)
    except (TypeError, ValueError) as e:
        errors.append(f"{where}: {e}")
        return None


def _validate_task(obj, errors, where="task") -> SupervisedTask | None:
    if not isinstance(obj, dict):
        errors.append(f"{where}: must be an object")
        return None
    missing = [k for k in ("process", "target", "s") if k not in obj]
    for k in missing:
        errors.append(f"{where}.{k}: missing")
    process = _validate_process(obj.get("process", {}), errors, f"{where}.process") \
        if "process" in obj else None
    target = None
    if "target" in obj and "s" in obj:
        try:
            target = corpus_target(obj["target"], float(obj["s"]))
        except (KeyError, ValueError) as e:
            errors.append(f"{where}.target: {e}")
    if process is None or target is None:
        return None
    clip = None
    if obj.get("clip") is not None:
        try:
            clip = Box.from_json(obj["clip"])
        except (ValueError, KeyError, TypeError) as e:
            errors.append(f"{where}.clip: {e}")
            return None
    try:
        return SupervisedTask(
            process=process,
            target=target,
            noise_sd=float(obj.get("noise_sd", 0.0)),
            clip=clip,
            embed_dim=int(obj.get("embed_dim", 1)),
        )
    except ValueError as e:
        errors.append(f"{where}: {e}")
        return None


def _validate_loss(obj, errors, output_cap=None, y_bound=None, where="loss") -> Loss | None:
    if isinstance(obj, str):
        obj = {"kind": obj}
    if not isinstance(obj, dict) or "kind" not in obj:
        errors.append(f"{where}.kind: missing (one of {list(LOSS_KINDS)})")
        return None
    try:
        return Loss.make(
            obj["kind"],
            delta=obj.get("delta"),
            output_cap=output_cap if output_cap is not None else obj.get("output_cap"),
            y_bound=y_bound if y_bound is not None else obj.get("y_bound"),
        )
    except ValueError as e:
        errors.append(f"{where}: {e}")
        return None


def validate_rate_config(obj) -> RateExperimentConfig:
    """Normalize and check a rate-experiment config; all errors at once."""
    errors: list[str] = []
    if not isinstance(obj, dict):
        raise ConfigError(["rate config must be a JSON object"])
    for k in ("task", "loss", "alpha", "n_grid", "replications", "output_cap", "seed"):
        if k not in obj:
            errors.append(f"{k}: missing")
    task = _validate_task(obj.get("task", {}), errors) if "task" in obj else None
    output_cap = obj.get("output_cap")
    loss = None
    if "loss" in obj:
        y_guess = obj.get("y_bound")
        if y_guess is None and task is not None:
            y_guess = float(np.max(np.abs([*task.target.domain.lo, *task.target.domain.hi]))) \
                + 6.0 * task.noise_sd + 1.0
        loss = _validate_loss(obj["loss"], errors, output_cap=output_cap, y_bound=y_guess)
    train = TrainConfig()
    if "train" in obj:
        try:
            train = TrainConfig.from_json(obj["train"])
        except (TypeError, ValueError) as e:
            errors.append(f"train: {e}")
    if errors or task is None or loss is None:
        raise ConfigError(errors or ["invalid rate config"])
    try:
        return RateExperimentConfig(
            task=task,
            loss=loss,
            alpha=float(obj["alpha"]),
            n_grid=tuple(int(v) for v in obj["n_grid"]),
            replications=int(obj["replications"]),
            output_cap=float(obj["output_cap"]),
            seed=int(obj["seed"]),
            eta=float(obj.get("eta", 0.05)),
            nu=float(obj.get("nu", 0.25)),
            mc_samples=int(obj.get("mc_samples", 100_000)),
            base_constants=obj.get("base_constants", {"L0": 1.0, "N0": 4.0, "S0": 20.0}),
            train=train,
            cn1_replications=int(obj.get("cn1_replications", 32)),
            proxy_probe_count=int(obj.get("proxy_probe_count", 20_000)),
        )
    except ValueError as e:
        raise ConfigError([str(e)])


# -- subcommands ---------------------------------------------------------------


def _cmd_approx(args) -> int:
    started = time.time()
    errors = []
    if args.target not in corpus_names():
        errors.append(f"--target: unknown target {args.target!r}; known: {corpus_names()}")
    if not 0.0 < args.eps < 1.0:
        errors.append("--eps: must lie in (0, 1)")
    act = None
    try:
        act = Activation(args.activation, a=args.a)
    except ValueError as e:
        errors.append(f"--activation: {e}")
    if act is not None and not act.is_piecewise_linear:
        errors.append(
            "--activation: network realization supports piecewise-linear kinds only "
            "(relu, leaky_relu)"
        )
    target = None
    if not errors:
        try:
            target = corpus_target(args.target, args.s)
        except ValueError as e:
            errors.append(f"--s: {e}")
    if errors:
        raise ConfigError(errors)

    net, cert = build_relu_approximant(target, args.eps, probe_count=args.probes)
    if act.kind != "relu":
        net = convert_relu_to_pwl(net, act)
    _write_text(args.out, net.to_json())
    _write_json(args.cert, cert.to_json_obj())
    config = {
        "target": args.target,
        "s": args.s,
        "eps": args.eps,
        "activation": act.to_json(),
        "probes": args.probes,
    }
    write_manifest("approx", config, None, [args.out, args.cert], started)
    print(f"certificate {'PASS' if cert.passed else 'FAIL'}: "
          f"sup error {cert.sup_error_measured:.3e} <= eps {args.eps:g}"
          if cert.passed else
          f"certificate FAIL: sup error {cert.sup_error_measured:.3e} > eps {args.eps:g}")
    return EXIT_OK if cert.passed else EXIT_EXPERIMENT


def _cmd_simulate(args) -> int:
    started = time.time()
    obj = load_json_config(args.spec)
    errors: list[str] = []
    if not isinstance(obj, dict) or "process" not in obj:
        errors.append("process: missing")
        if isinstance(obj, dict) and not obj:
            errors.append("the config object is empty; required: process (object)")
        raise ConfigError(errors)
    task = None
    if "task" in obj and obj["task"] is not None:
        task_obj = dict(obj["task"])
        task_obj.setdefault("process", obj["process"])
        task = _validate_task(task_obj, errors)
    process = _validate_process(obj["process"], errors)
    if errors:
        raise ConfigError(errors)
    if task is not None:
        x, y = make_supervised(task, args.n, args.seed)
        text = trajectory_csv(x[:, 0] if task.embed_dim == 1 else x[:, 0], y)
    else:
        traj = simulate(process, args.n, args.seed)
        text = trajectory_csv(traj.values)
    _write_text(args.out, text)
    write_manifest("simulate", obj, args.seed, [args.out], started)
    return EXIT_OK


def _parse_lags(text: str) -> list[int]:
    if ":" in text:
        lo, hi = text.split(":", 1)
        return list(range(int(lo), int(hi) + 1))
    return [int(v) for v in text.split(",") if v.strip()]


def _read_traj_csv(path: str) -> tuple[np.ndarray, np.ndarray | None]:
    with open(path) as f:
        rows = list(csv_module.DictReader(f))
    if not rows:
        raise ConfigError([f"{path}: empty trajectory file"])
    x = np.array([float(r["x"]) for r in rows])
    y = np.array([float(r["y"]) for r in rows]) if "y" in rows[0] else None
    return x, y


def _cmd_deps(args) -> int:
    started = time.time()
    x, _ = _read_traj_csv(args.traj)
    try:
        lags = _parse_lags(args.lags)
    except ValueError:
        raise ConfigError([f"--lags: cannot parse {args.lags!r}; use '1:50' or '1,2,5'"])
    est = estimate_dependence(x, lags)
    _write_text(args.out, dependence_csv(est))
    if args.summary:
        _write_json(args.summary, est.to_json_obj())
    config = {"traj": os.path.abspath(args.traj), "lags": lags}
    write_manifest("deps", config, None, [args.out], started)
    if est.fitted_rate:
        print(f"fitted {est.fitted_rate['model']} decay, exponent "
              f"{est.fitted_rate['exponent']:.4f} (r2 {est.fitted_rate['r2']:.3f})")
    return EXIT_OK


def _cmd_train(args) -> int:
    started = time.time()
    errors: list[str] = []
    x, y = _read_traj_csv(args.data)
    if y is None:
        errors.append(f"--data: {args.data} has no label column y")
    cls_obj = load_json_config(args.cls)
    arch_obj = load_json_config(args.arch)
    cfg_obj = load_json_config(args.cfg)
    constraints = None
    try:
        constraints = ClassConstraints.from_json(cls_obj)
    except (KeyError, TypeError, ValueError) as e:
        errors.append(f"--class: {e}")
    arch = None
    try:
        arch = Architecture(tuple(arch_obj["widths"]))
    except (KeyError, TypeError, ValueError) as e:
        errors.append(f"--arch: {e}")
    cfg = None
    try:
        cfg = TrainConfig.from_json(cfg_obj)
    except (TypeError, ValueError) as e:
        errors.append(f"--cfg: {e}")
    loss = _validate_loss(
        {"kind": args.loss, "delta": args.delta},
        errors,
        output_cap=constraints.output_cap if constraints else None,
        y_bound=float(np.max(np.abs(y))) if y is not None and len(y) else None,
    )
    if errors:
        raise ConfigError(errors)

    model = train_erm(constraints, x[:, None], y, loss, arch, cfg)
    _write_text(args.out, model.net.to_json())
    report = {
        "empirical_risk": model.empirical_risk,
        "restart_index": model.restart_index,
        "constraint_report": model.constraint_report,
        "param_stats": model.net.param_stats(),
    }
    _write_json(args.report, report)
    config = {
        "data": os.path.abspath(args.data),
        "class": cls_obj,
        "arch": arch_obj,
        "loss": loss.to_json(),
        "train": cfg.to_json(),
    }
    write_manifest("train", config, cfg.seed, [args.out, args.report], started)
    print(f"trained: empirical risk {model.empirical_risk:.6f} "
          f"(restart {model.restart_index}, feasible={model.constraint_report['ok']})")
    return EXIT_OK


def _cmd_rate(args) -> int:
    started = time.time()
    obj = load_json_config(args.cfg)
    cfg = validate_rate_config(obj)
    report = rate_experiment(cfg, workers=args.workers)
    _write_json(args.out, report.to_json_obj())
    if args.csv:
        _write_text(args.csv, rate_csv(report))
    if args.plot:
        _write_text(args.plot, rate_svg(report))
    outputs = [args.out] + [p for p in (args.csv, args.plot) if p]
    write_manifest("rate", obj, cfg.seed, outputs, started)
    slope = "n/a" if report.fitted_slope is None else f"{report.fitted_slope:.3f}"
    print(f"rate experiment: fitted slope {slope} "
          f"(target {report.target_slope:.3f}), coverage {report.coverage:.0%}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="holonet",
        description="Certified sparse-network approximation and excess-risk "
        "rate experiments on weakly dependent time series.",
    )
    p.add_argument("--version", action="version", version=f"holonet {__version__}")
    sub = p.add_subparsers(dest="subcommand", required=True)

    ap = sub.add_parser("approx", help="build a certified network approximant")
    ap.add_argument("--target", required=True, help=f"corpus name: {corpus_names()}")
    ap.add_argument("--s", type=float, required=True, help="smoothness order (non-integer)")
    ap.add_argument("--eps", type=float, required=True, help="target sup accuracy in (0,1)")
    ap.add_argument("--activation", default="relu", help="relu or leaky_relu")
    ap.add_argument("--a", type=float, default=None, help="activation shape parameter")
    ap.add_argument("--probes", type=int, default=None, help="certificate probe count")
    ap.add_argument("--out", required=True, help="network JSON output path")
    ap.add_argument("--cert", required=True, help="certificate JSON output path")
    ap.set_defaults(fn=_cmd_approx)

    sp = sub.add_parser("simulate", help="simulate a stationary trajectory")
    sp.add_argument("--spec", required=True, help="process/task JSON config")
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--seed", type=int, required=True)
    sp.add_argument("--out", required=True, help="CSV output path")
    sp.set_defaults(fn=_cmd_simulate)

    dp = sub.add_parser("deps", help="estimate covariance decay over lags")
    dp.add_argument("--traj", required=True, help="trajectory CSV from simulate")
    dp.add_argument("--lags", required=True, help="'1:50' or comma list")
    dp.add_argument("--out", required=True, help="CSV output path")
    dp.add_argument("--summary", default=None, help="optional JSON summary path")
    dp.set_defaults(fn=_cmd_deps)

    tp = sub.add_parser("train", help="projected-gradient training on a trajectory")
    tp.add_argument("--data", required=True, help="trajectory CSV with y column")
    tp.add_argument("--class", dest="cls", required=True, help="class-caps JSON")
    tp.add_argument("--arch", required=True, help="architecture JSON {widths: [...]}")
    tp.add_argument("--loss", required=True, choices=list(LOSS_KINDS))
    tp.add_argument("--delta", type=float, default=None, help="huber threshold")
    tp.add_argument("--cfg", required=True, help="training config JSON")
    tp.add_argument("--out", required=True, help="model JSON output path")
    tp.add_argument("--report", required=True, help="training report JSON path")
    tp.set_defaults(fn=_cmd_train)

    rp = sub.add_parser("rate", help="excess-risk rate experiment across n")
    rp.add_argument("--cfg", required=True, help="experiment config JSON")
    rp.add_argument("--out", required=True, help="report JSON output path")
    rp.add_argument("--csv", default=None, help="per-cell CSV output path")
    rp.add_argument("--plot", default=None, help="SVG chart output path")
    rp.add_argument("--workers", type=int, default=None,
                    help="worker pool size (default: HOLONET_WORKERS or cpu-bounded)")
    rp.set_defaults(fn=_cmd_rate)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    try:
        return args.fn(args)
    except ConfigError as e:
        for msg in e.errors:
            print(f"config error: {msg}", file=sys.stderr)
        return EXIT_CONFIG
    except BuildLimitError as e:
        print(f"resource error: {e}", file=sys.stderr)
        return EXIT_RESOURCE
    except (ExperimentFailure, TrainingFailure) as e:
        print(f"experiment failure: {e}", file=sys.stderr)
        return EXIT_EXPERIMENT


if __name__ == "__main__":
    sys.exit(main())
