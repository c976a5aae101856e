"""Monte-Carlo risk, excess-risk decomposition, and bound ingredients.

Risk estimates draw fresh stationary trajectories from purpose-labeled
streams disjoint from any training data.  The decomposition evaluates the
trained model, the best-in-class proxy, and the true target on the same
samples, so excess = estimation + approximation holds exactly by
telescoping.

Bound ingredients: the loss-sup cap is computed on a dense grid of the
(prediction, label) ball of radius max(F, ||Y||), and the loss-Lipschitz
cap equals the declared loss constant; both are data-independent caps
feeding the reference rate curve.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .losses import Loss
from .network import Network
from .processes import SupervisedTask, make_supervised
from .targets import HolderTarget

__all__ = [
    "MCRisk",
    "mc_risk",
    "excess_and_decomposition",
    "bound_ingredients",
    "deviation_denominator",
    "estimate_partial_sum_variance",
]


@dataclass(frozen=True)
class MCRisk:
    value: float
    stderr: float
    n_samples: int


def _predict(h, x: np.ndarray) -> np.ndarray:
    if isinstance(h, Network):
        out = h.forward(x)
        return out.ravel() if out.ndim == 2 else out
    if isinstance(h, HolderTarget):
        return h(x)
    return np.asarray(h(x), dtype=float).ravel()


def mc_risk(
    h, task: SupervisedTask, loss: Loss, mc_samples: int, seed: int, purpose: str = "mc"
) -> MCRisk:
    """Mean loss over a fresh stationary trajectory, with standard error."""
    if mc_samples < 1000:
        raise ValueError("mc_samples must be >= 1000")
    x, y = make_supervised(task, mc_samples, seed, purpose=purpose)
    values = loss.value(_predict(h, x), y)
    return MCRisk(
        value=float(np.mean(values)),
        stderr=float(np.std(values) / math.sqrt(mc_samples)),
        n_samples=mc_samples,
    )


def excess_and_decomposition(
    model,
    proxy,
    task: SupervisedTask,
    loss: Loss,
    mc_samples: int,
    seed: int,
    purpose: str = "mc",
) -> dict:
    """Excess risk split into estimation and approximation parts.

    All three predictors (model, proxy, true target) are scored on the
    same fresh samples, so excess = est_error + approx_error identically;
    the reported stderr is the paired standard error of the excess.
    """
    if mc_samples < 1000:
        raise ValueError("mc_samples must be >= 1000")
    x, y = make_supervised(task, mc_samples, seed, purpose=purpose)
    l_model = loss.value(_predict(model, x), y)
    l_proxy = loss.value(_predict(proxy, x), y)
    l_star = loss.value(task.target(x), y)
    est = float(np.mean(l_model) - np.mean(l_proxy))
    approx = float(np.mean(l_proxy) - np.mean(l_star))
    # the telescoped sum is the definition, so additivity is exact
    excess = est + approx
    return {
        "excess": excess,
        "est_error": est,
        "approx_error": approx,
        "stderr": float(np.std(l_model - l_star) / math.sqrt(mc_samples)),
        "approx_stderr": float(np.std(l_proxy - l_star) / math.sqrt(mc_samples)),
        "risk_model": float(np.mean(l_model)),
        "risk_proxy": float(np.mean(l_proxy)),
        "risk_target": float(np.mean(l_star)),
    }


def bound_ingredients(
    output_cap: float, loss: Loss, x_bound: float, y_bound: float, grid: int = 401
) -> dict:
    """Caps entering the reference rate curve.

    ``loss_sup_cap`` = max(sup-loss-on-ball + 2 K (||X|| + ||Y||), 1) with
    the sup taken over a dense grid of the radius-max(F, ||Y||) ball in
    (prediction, label) space; ``loss_lipschitz_cap`` = K.  Both caps are
    independent of the network class sizes.
    """
    if not (np.isfinite(x_bound) and np.isfinite(y_bound)):
        raise ValueError("bound ingredients need bounded input and label ranges")
    radius = max(float(output_cap), float(y_bound))
    axis = np.linspace(-radius, radius, grid)
    u, yy = np.meshgrid(axis, axis)
    sup_loss = float(np.max(loss.value(u.ravel(), yy.ravel())))
    m_cap = max(sup_loss + 2.0 * loss.lipschitz * (x_bound + y_bound), 1.0)
    return {
        "loss_sup_ball": sup_loss,
        "loss_sup_cap": m_cap,
        "loss_lipschitz_cap": loss.lipschitz,
    }


def deviation_denominator(n: int, cn1_hat: float, loss_sup_cap: float, nu: float) -> float:
    """n^2 / (n C1 + log n * n^(nu - 1/4) (2 M)^nu / C1)."""
    if cn1_hat <= 0:
        raise ValueError("the partial-sum variance constant must be positive")
    n = float(n)
    denom = n * cn1_hat + math.log(n) * n ** (nu - 0.25) * (2.0 * loss_sup_cap) ** nu / cn1_hat
    return n * n / denom


def estimate_partial_sum_variance(
    model,
    task: SupervisedTask,
    loss: Loss,
    replications: int,
    n: int,
    seed: int,
) -> float:
    """Empirical constant c with Var(sum of losses) <= c n, for this model.

    Draws independent length-n trajectories, centers per-observation losses
    at the cross-replication mean, and averages (sum of centered losses)^2 / n
    over replications.  For i.i.d. data this estimates the plain loss
    variance; positive dependence inflates it.
    """
    if replications < 30:
        raise ValueError("at least 30 replications are required")
    all_losses = []
    for rep in range(replications):
        x, y = make_supervised(task, n, seed, purpose=f"psv:{rep}")
        all_losses.append(loss.value(_predict(model, x), y))
    grand = float(np.mean([l.mean() for l in all_losses]))
    sums = np.array([float(np.sum(l - grand)) for l in all_losses])
    return float(np.mean(sums**2) / n)
