"""Excess-risk rate experiments across sample sizes.

For each n in the grid the class caps scale as

    depth ~ (L0 / alpha) log n          width ~ N0 n^(dx / (s alpha))
    nonzeros ~ (S0 / alpha) n^(dx / (s alpha)) log n
    magnitude ~ n^(4 (dx/s + 1) / alpha)

with a fixed output cap, and the experiment trains on simulated weakly
dependent data, scores excess risk by Monte Carlo, and fits the log-log
slope of the median excess against the target slope -1/alpha.

The within-class reference predictor is approximated by the better of the
trained candidates and the constructive approximant of the target built at
accuracy n^(-1/alpha) (output-clamped into the class); the gap between
this proxy and the true within-class infimum is not quantifiable, so all
derived quantities are labeled approximate.  The closed-form rate curve is
evaluated with its unknowable leading constant set to 1 and is reported as
an uncalibrated shape reference only.
"""

from __future__ import annotations

import dataclasses
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .construction import BuildLimits, build_relu_approximant
from .losses import Loss
from .network import Architecture, ClassConstraints
from .processes import SupervisedTask, make_supervised
from .rng import derive_key
from .risk import (
    bound_ingredients,
    deviation_denominator,
    estimate_partial_sum_variance,
)
from .training import TrainConfig, TrainingFailure, train_erm

__all__ = [
    "RateExperimentConfig",
    "RateReport",
    "ExperimentFailure",
    "class_schedule",
    "rate_experiment",
    "worker_count",
]


class ExperimentFailure(RuntimeError):
    """More than a quarter of the experiment cells failed to train."""


@dataclass(frozen=True)
class RateExperimentConfig:
    task: SupervisedTask
    loss: Loss
    alpha: float
    n_grid: tuple[int, ...]
    replications: int
    output_cap: float
    seed: int
    eta: float = 0.05
    nu: float = 0.25
    mc_samples: int = 100_000
    base_constants: dict = field(
        default_factory=lambda: {"L0": 1.0, "N0": 4.0, "S0": 20.0}
    )
    train: TrainConfig = field(default_factory=TrainConfig)
    cn1_replications: int = 32
    proxy_probe_count: int = 20_000

    def __post_init__(self):
        s = self.task.target.s
        d_x = self.task.target.d_x
        if not self.alpha > 2.0 + d_x / s:
            raise ValueError(
                f"alpha must exceed 2 + d_x/s = {2.0 + d_x / s:.4f}, got {self.alpha}"
            )
        grid = tuple(int(n) for n in self.n_grid)
        if len(grid) < 1 or any(b <= a for a, b in zip(grid, grid[1:])):
            raise ValueError("n_grid must be strictly increasing")
        if any(n < 2 for n in grid):
            raise ValueError("n_grid entries must be >= 2")
        object.__setattr__(self, "n_grid", grid)
        for name in ("eta", "nu"):
            v = getattr(self, name)
            if not 0.0 < v < 1.0:
                raise ValueError(f"{name} must lie in (0, 1)")
        if self.replications < 1:
            raise ValueError("replications must be >= 1")
        if not self.output_cap > 0:
            raise ValueError("output_cap must be positive")
        for key in ("L0", "N0", "S0"):
            if key not in self.base_constants or not self.base_constants[key] > 0:
                raise ValueError(f"base_constants needs positive {key}")


def class_schedule(n: int, cfg: RateExperimentConfig) -> ClassConstraints:
    """Class caps at sample size n (natural logs throughout)."""
    if n < 2:
        raise ValueError("n must be >= 2")
    s = cfg.task.target.s
    d_x = cfg.task.target.d_x
    a = cfg.alpha
    l0, n0, s0 = (cfg.base_constants[k] for k in ("L0", "N0", "S0"))
    growth = n ** (d_x / (s * a))
    return ClassConstraints(
        depth_cap=math.ceil(l0 / a * math.log(n)),
        width_cap=math.ceil(n0 * growth),
        sparsity_cap=math.ceil(s0 / a * growth * math.log(n)),
        weight_cap=float(n) ** (4.0 * (d_x / s + 1.0) / a),
        output_cap=cfg.output_cap,
    )


@dataclass
class RateReport:
    per_n: list[dict]
    fitted_slope: float | None
    target_slope: float
    loss_sup_cap: float
    loss_lipschitz_cap: float
    partial_sum_variance_hat: float
    deviation_denominators: list[float]
    reference_bound: list[float]
    coverage: float
    under_resolved: bool
    seed: int
    config_digest: str
    cells: list[dict]

    def to_json_obj(self) -> dict:
        return dict(self.__dict__)

    def to_json(self) -> str:
        return json.dumps(self.to_json_obj(), sort_keys=True)


def worker_count() -> int:
    env = os.environ.get("HOLONET_WORKERS")
    if env:
        return max(1, int(env))
    return min(4, os.cpu_count() or 1)


def _config_digest(cfg: RateExperimentConfig) -> str:
    import hashlib

    payload = {
        "process": cfg.task.process.to_json(),
        "target": cfg.task.target.name,
        "s": cfg.task.target.s,
        "noise_sd": cfg.task.noise_sd,
        "clip": cfg.task.clip_box.to_json(),
        "loss": cfg.loss.to_json(),
        "alpha": cfg.alpha,
        "n_grid": list(cfg.n_grid),
        "replications": cfg.replications,
        "eta": cfg.eta,
        "nu": cfg.nu,
        "output_cap": cfg.output_cap,
        "mc_samples": cfg.mc_samples,
        "seed": cfg.seed,
        "base_constants": cfg.base_constants,
        "train": cfg.train.to_json(),
    }
    return hashlib.sha256(json.dumps(payload, sort_keys=True).encode()).hexdigest()[:16]


def _train_cell(cfg: RateExperimentConfig, n: int, rep: int, constraints, arch):
    x, y = make_supervised(cfg.task, n, cfg.seed, purpose=f"train:{n}:{rep}")
    cell_seed = derive_key(cfg.seed, "cell", n, rep) % (2**62)
    train_cfg = dataclasses.replace(cfg.train, seed=cell_seed)
    try:
        model = train_erm(constraints, x, y, cfg.loss, arch, train_cfg)
    except TrainingFailure:
        return None
    return model


def rate_experiment(cfg: RateExperimentConfig, workers: int | None = None) -> RateReport:
    """Run the full grid, deterministic in cfg.seed.

    Cells (n, replication) are independent and may run on a worker pool;
    aggregation is an ordered fold over (n, rep) keys, so parallel and
    serial runs produce identical reports.  Each n level shares one fresh
    Monte-Carlo evaluation set across its replications so the constructive
    reference network is scored once per level.
    """
    target = cfg.task.target
    loss = cfg.loss
    n_grid = cfg.n_grid
    pool_size = workers if workers is not None else worker_count()

    per_n_static = {}
    for n in n_grid:
        constraints = class_schedule(n, cfg)
        depth = int(constraints.depth_cap)
        width = int(constraints.width_cap)
        arch = Architecture((target.d_x, *([width] * depth), 1))
        eps_n = float(n) ** (-1.0 / cfg.alpha)
        proxy, cert = build_relu_approximant(
            target, eps_n, probe_count=cfg.proxy_probe_count, limits=BuildLimits()
        )
        proxy = proxy.with_output_clamp(cfg.output_cap)
        xe, ye = make_supervised(cfg.task, cfg.mc_samples, cfg.seed, purpose=f"mc:{n}")
        l_star = loss.value(target(xe), ye)
        l_proxy = loss.value(proxy.forward(xe).ravel(), ye)
        per_n_static[n] = {
            "constraints": constraints,
            "arch": arch,
            "eps_n": eps_n,
            "cert": cert,
            "xe": xe,
            "ye": ye,
            "l_star": l_star,
            "l_proxy": l_proxy,
        }

    jobs = [(n, rep) for n in n_grid for rep in range(cfg.replications)]

    def run(job):
        n, rep = job
        st = per_n_static[n]
        return job, _train_cell(cfg, n, rep, st["constraints"], st["arch"])

    if pool_size > 1:
        with ThreadPoolExecutor(max_workers=pool_size) as pool:
            results = dict(pool.map(run, jobs))
    else:
        results = dict(map(run, jobs))

    cells = []
    models = {}
    for n in n_grid:
        st = per_n_static[n]
        mean_star = float(np.mean(st["l_star"]))
        mean_proxy = float(np.mean(st["l_proxy"]))
        for rep in range(cfg.replications):
            model = results[(n, rep)]
            if model is None:
                cells.append({"n": n, "replication": rep, "status": "missing"})
                continue
            l_hat = loss.value(model.net.forward(st["xe"]).ravel(), st["ye"])
            mean_hat = float(np.mean(l_hat))
            best_ref = min(mean_hat, mean_proxy)
            stats = model.net.param_stats()
            cells.append(
                {
                    "n": n,
                    "replication": rep,
                    "status": "ok",
                    "excess": mean_hat - mean_star,
                    "est_error": mean_hat - best_ref,
                    "approx_error": best_ref - mean_star,
                    "proxy_gap": mean_proxy - mean_star,
                    "train_risk": model.empirical_risk,
                    "stderr": float(
                        np.std(l_hat - st["l_star"]) / math.sqrt(cfg.mc_samples)
                    ),
                    "sparsity": stats["sparsity"],
                }
            )
            models[(n, rep)] = model

    ok_cells = [c for c in cells if c["status"] == "ok"]
    coverage = len(ok_cells) / len(cells)
    if coverage < 0.75:
        raise ExperimentFailure(
            f"only {coverage:.0%} of experiment cells trained successfully"
        )

    per_n = []
    for n in n_grid:
        st = per_n_static[n]
        group = [c for c in ok_cells if c["n"] == n]
        excesses = np.array([c["excess"] for c in group])
        constraints = st["constraints"]
        per_n.append(
            {
                "n": n,
                "class_params": {
                    "depth_cap": constraints.depth_cap,
                    "width_cap": constraints.width_cap,
                    "sparsity_cap": constraints.sparsity_cap,
                    "weight_cap": constraints.weight_cap,
                    "output_cap": constraints.output_cap,
                },
                "eps_n": st["eps_n"],
                "excess_risk_median": float(np.median(excesses)) if group else None,
                "excess_risk_iqr": (
                    float(np.percentile(excesses, 75) - np.percentile(excesses, 25))
                    if group
                    else None
                ),
                "est_error": float(np.median([c["est_error"] for c in group]))
                if group
                else None,
                "approx_error": float(np.median([c["approx_error"] for c in group]))
                if group
                else None,
                "proxy_gap": float(np.median([c["proxy_gap"] for c in group]))
                if group
                else None,
                "proxy_sup_error": st["cert"].sup_error_measured,
                "mc_stderr": float(np.median([c["stderr"] for c in group]))
                if group
                else None,
                "replications_ok": len(group),
            }
        )

    # slope of log median excess on log n
    pts = [
        (p["n"], p["excess_risk_median"])
        for p in per_n
        if p["excess_risk_median"] is not None and p["excess_risk_median"] > 0
    ]
    fitted = None
    if len(pts) >= 2:
        ln = np.log([p[0] for p in pts])
        le = np.log([p[1] for p in pts])
        a = np.vstack([ln, np.ones_like(ln)]).T
        coef, *_ = np.linalg.lstsq(a, le, rcond=None)
        fitted = float(coef[0])

    # dependence-aware variance constant, estimated on the median-excess
    # model at the largest n
    n_top = n_grid[-1]
    top_cells = [c for c in ok_cells if c["n"] == n_top]
    cn1_hat = float("nan")
    if top_cells:
        order = sorted(top_cells, key=lambda c: c["excess"])
        median_cell = order[len(order) // 2]
        model = models[(n_top, median_cell["replication"])]
        cn1_hat = estimate_partial_sum_variance(
            model.net, cfg.task, loss, cfg.cn1_replications, n_top, cfg.seed
        )

    x_bound = cfg.task.clip_box.sup_norm
    y_bound = max(float(np.max(np.abs(per_n_static[n]["ye"]))) for n in n_grid)
    caps = bound_ingredients(cfg.output_cap, loss, x_bound, y_bound)
    denominators = []
    reference = []
    for n in n_grid:
        c2 = (
            deviation_denominator(n, cn1_hat, caps["loss_sup_cap"], cfg.nu)
            if np.isfinite(cn1_hat) and cn1_hat > 0
            else float("nan")
        )
        denominators.append(c2)
        head = (2.0 * caps["loss_sup_cap"] + loss.lipschitz) / float(n) ** (1.0 / cfg.alpha)
        tail = (
            math.sqrt(math.log(2.0 * math.log(n) / cfg.eta) / c2)
            if np.isfinite(c2) and c2 > 0
            else float("nan")
        )
        reference.append(head + tail)

    smallest = min(
        (p["excess_risk_median"] for p in per_n if p["excess_risk_median"] and p["excess_risk_median"] > 0),
        default=float("inf"),
    )
    largest_se = max((p["mc_stderr"] or 0.0) for p in per_n)
    under_resolved = largest_se >= 0.1 * smallest

    return RateReport(
        per_n=per_n,
        fitted_slope=fitted,
        target_slope=-1.0 / cfg.alpha,
        loss_sup_cap=caps["loss_sup_cap"],
        loss_lipschitz_cap=caps["loss_lipschitz_cap"],
        partial_sum_variance_hat=cn1_hat,
        deviation_denominators=denominators,
        reference_bound=reference,
        coverage=coverage,
        under_resolved=under_resolved,
        seed=cfg.seed,
        config_digest=_config_digest(cfg),
        cells=[{k: v for k, v in c.items()} for c in cells],
    )
