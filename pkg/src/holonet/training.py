"""Approximate empirical risk minimization over constrained network classes.

Exact constrained minimization is intractable, so training runs several
independent full-batch projected-gradient-descent restarts and returns the
best candidate it actually evaluated: every post-projection checkpoint and
every restart endpoint competes, and the winner's empirical risk is at
most that of every evaluated candidate.  Hard projection (magnitude clamp
then keep the largest-magnitude entries) enforces the sparsity and
magnitude caps exactly; the output clamp enforces the sup-norm cap.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .activations import Activation
from .losses import Loss
from .network import Architecture, ClassConstraints, Network
from .rng import stream

__all__ = [
    "TrainConfig",
    "TrainedModel",
    "TrainingFailure",
    "empirical_risk",
    "gradient",
    "project_constraints",
    "train_erm",
]

_RELU = Activation("relu")


class TrainingFailure(RuntimeError):
    """Every restart was abandoned (non-finite losses throughout)."""


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 300
    step_size: float = 0.05
    restarts: int = 1
    decay_factor: float = 0.5
    decay_interval: int = 100
    projection_interval: int = 10
    init_scale: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.restarts < 1:
            raise ValueError("restarts must be >= 1")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        for name in ("step_size", "decay_factor", "init_scale"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.projection_interval < 1 or self.decay_interval < 1:
            raise ValueError("intervals must be >= 1")

    def to_json(self) -> dict:
        return dict(self.__dict__)

    @classmethod
    def from_json(cls, obj: dict) -> "TrainConfig":
        return cls(**obj)


@dataclass
class TrainedModel:
    net: Network
    empirical_risk: float
    restart_index: int
    constraint_report: dict


def empirical_risk(net: Network, x: np.ndarray, y: np.ndarray, loss: Loss) -> float:
    """Mean loss of the network predictions over the sample."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    if x.shape[0] == 0:
        raise ValueError("empirical risk needs a nonempty sample")
    preds = net.forward(x)
    if preds.ndim == 2:
        preds = preds.ravel()
    return float(np.mean(loss.value(preds, y)))


def _forward_cache(net: Network, x: np.ndarray):
    pres = []
    acts = [x]
    a = x
    last = len(net.layers) - 1
    for i, (w, b) in enumerate(net.layers):
        z = a @ w.T + b
        pres.append(z)
        a = net.activation(z) if i < last else z
        if i < last:
            acts.append(a)
    return pres, acts


def gradient(net: Network, x: np.ndarray, y: np.ndarray, loss: Loss) -> np.ndarray:
    """Gradient of the batch empirical risk w.r.t. the flat parameter vector.

    Backpropagation through the affine/activation stack with the package's
    fixed kink conventions; the output clamp contributes an indicator
    factor (zero gradient where the clamp saturates).
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    n = x.shape[0]
    pres, acts = _forward_cache(net, x)
    out = pres[-1]
    if net.output_clamp is not None:
        clamped = np.clip(out, -net.output_clamp, net.output_clamp)
        mask = (np.abs(out) <= net.output_clamp).astype(float)
    else:
        clamped = out
        mask = np.ones_like(out)
    preds = clamped.ravel() if clamped.shape[1] == 1 else clamped
    lg = loss.grad(preds, y)
    if lg.ndim == 1:
        lg = lg[:, None]
    delta = lg * mask / n

    grads = []
    for i in range(len(net.layers) - 1, -1, -1):
        w, _ = net.layers[i]
        gw = delta.T @ acts[i]
        gb = delta.sum(axis=0)
        grads.append((gw, gb))
        if i > 0:
            delta = (delta @ w) * net.activation.derivative(pres[i - 1])
    grads.reverse()
    return np.concatenate([np.concatenate([gw.ravel(), gb]) for gw, gb in grads])


def project_constraints(net: Network, sparsity_cap: float, weight_cap: float) -> Network:
    """Clamp magnitudes into [-B, B], then zero all but the largest entries.

    Keeps at most floor(sparsity_cap) nonzeros; on magnitude ties the
    later parameter index is zeroed first.  Idempotent on feasible inputs.
    """
    if sparsity_cap < 1:
        raise ValueError("sparsity_cap must be >= 1")
    theta = net.param_vector()
    if np.isfinite(weight_cap):
        theta = np.clip(theta, -weight_cap, weight_cap)
    keep = int(sparsity_cap)
    nnz = int(np.count_nonzero(theta))
    if nnz > keep:
        order = np.argsort(-np.abs(theta), kind="stable")
        theta[order[keep:]] = 0.0
    return net.with_params(theta)


def _init_network(
    arch: Architecture,
    activation: Activation,
    weight_cap: float,
    init_scale: float,
    output_clamp: float | None,
    rng: np.random.Generator,
) -> Network:
    layers = []
    widths = arch.widths
    for i in range(len(widths) - 1):
        fan_in = widths[i]
        bound = init_scale * min(weight_cap, 1.0) / np.sqrt(fan_in)
        w = rng.uniform(-bound, bound, size=(widths[i + 1], widths[i]))
        b = rng.uniform(-bound, bound, size=widths[i + 1])
        layers.append((w, b))
    return Network(layers, activation, output_clamp)


def train_erm(
    constraints: ClassConstraints,
    x: np.ndarray,
    y: np.ndarray,
    loss: Loss,
    arch: Architecture,
    cfg: TrainConfig,
    activation: Activation = _RELU,
) -> TrainedModel:
    """Multi-restart projected gradient descent over the constrained class.

    Full-batch updates; the projection runs every ``projection_interval``
    steps and once at the end of each restart, and only projected
    (feasible) iterates become candidates.  A restart that produces a
    non-finite loss is abandoned with the others continuing; if every
    restart is abandoned a TrainingFailure is raised.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    if arch.depth > constraints.depth_cap or arch.width > constraints.width_cap:
        raise ValueError("architecture exceeds the class depth/width caps")
    if arch.in_dim != x.shape[1]:
        raise ValueError("architecture input dimension does not match the data")

    best: tuple[float, int, Network] | None = None

    def consider(net: Network, risk: float, restart: int):
        nonlocal best
        if not np.isfinite(risk):
            return
        if best is None or risk < best[0] or (risk == best[0] and restart < best[1]):
            best = (risk, restart, net)

    abandoned = 0
    for restart in range(cfg.restarts):
        rng = stream(cfg.seed, "erm-init", restart)
        net = _init_network(
            arch, activation, constraints.weight_cap, cfg.init_scale,
            constraints.output_cap, rng,
        )
        net = project_constraints(net, constraints.sparsity_cap, constraints.weight_cap)
        consider(net, empirical_risk(net, x, y, loss), restart)
        theta = net.param_vector()
        failed = False
        for step in range(cfg.epochs):
            lr = cfg.step_size * cfg.decay_factor ** (step // cfg.decay_interval)
            g = gradient(net, x, y, loss)
            if not np.all(np.isfinite(g)):
                failed = True
                break
            theta = theta - lr * g
            net = net.with_params(theta)
            if (step + 1) % cfg.projection_interval == 0 or step == cfg.epochs - 1:
                net = project_constraints(
                    net, constraints.sparsity_cap, constraints.weight_cap
                )
                theta = net.param_vector()
                risk = empirical_risk(net, x, y, loss)
                if not np.isfinite(risk):
                    failed = True
                    break
                consider(net, risk, restart)
        if failed:
            abandoned += 1
    if best is None or abandoned == cfg.restarts:
        raise TrainingFailure("all restarts were abandoned with non-finite losses")

    risk, restart, net = best
    report = net.check_membership(constraints, x)
    return TrainedModel(net=net, empirical_risk=risk, restart_index=restart,
                        constraint_report=report)
