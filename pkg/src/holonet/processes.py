"""Stationary weakly dependent generators and supervised task sampling.

Three exemplar recursions drive the input process:

* ar1:    X_t = a X_{t-1} + sd e_t                        (|a| < 1)
* arch1:  X_t = e_t sqrt(omega + alpha1 X_{t-1}^2)        (alpha1 < 1)
* tar1:   X_t = a+ max(X_{t-1}, 0) + a- min(X_{t-1}, 0) + sd e_t

with i.i.d. standard normal innovations.  Exact stationarity is
unreachable in finite simulation, so every trajectory discards a burn-in
prefix started from zero (default 1000 steps) and the test suite probes
stationarity empirically.

Supervised samples clamp the input into a compact box (the clamp is part
of the data definition, not post-processing) and add label noise from a
stream disjoint from the process innovations.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .rng import stream
from .targets import Box, HolderTarget

__all__ = ["ProcessSpec", "Trajectory", "SupervisedTask", "simulate", "make_supervised"]

_KINDS = ("ar1", "arch1", "tar1")


@dataclass(frozen=True)
class ProcessSpec:
    kind: str
    a: float = 0.0
    noise_sd: float = 1.0
    omega: float = 1.0
    alpha1: float = 0.0
    a_plus: float = 0.0
    a_minus: float = 0.0
    burn_in: int = 1000

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown process kind {self.kind!r}; known: {_KINDS}")
        if self.burn_in < 0:
            raise ValueError("burn_in must be >= 0")
        if self.kind == "ar1":
            if not abs(self.a) < 1.0:
                raise ValueError(f"ar1 requires |a| < 1 for stationarity, got {self.a}")
            if not self.noise_sd > 0:
                raise ValueError("ar1 requires noise_sd > 0")
        elif self.kind == "arch1":
            if not self.omega > 0:
                raise ValueError("arch1 requires omega > 0")
            if not 0.0 <= self.alpha1 < 1.0:
                raise ValueError(f"arch1 requires alpha1 in [0, 1), got {self.alpha1}")
        else:
            if not (abs(self.a_plus) < 1.0 and abs(self.a_minus) < 1.0):
                raise ValueError("tar1 requires |a_plus| < 1 and |a_minus| < 1")
            if not self.noise_sd > 0:
                raise ValueError("tar1 requires noise_sd > 0")

    def to_json(self) -> dict:
        out = {"kind": self.kind, "burn_in": self.burn_in}
        if self.kind == "ar1":
            out.update(a=self.a, noise_sd=self.noise_sd)
        elif self.kind == "arch1":
            out.update(omega=self.omega, alpha1=self.alpha1)
        else:
            out.update(a_plus=self.a_plus, a_minus=self.a_minus, noise_sd=self.noise_sd)
        return out

    @classmethod
    def from_json(cls, obj: dict) -> "ProcessSpec":
        return cls(**obj)

    def digest(self) -> str:
        text = json.dumps(self.to_json(), sort_keys=True)
        return hashlib.sha256(text.encode()).hexdigest()[:16]


@dataclass(frozen=True)
class Trajectory:
    values: np.ndarray
    seed: int
    spec_digest: str

    def __post_init__(self):
        if len(self.values) == 0:
            raise ValueError("a trajectory must be nonempty")

    def __len__(self) -> int:
        return len(self.values)


def simulate(spec: ProcessSpec, n: int, seed: int, purpose: str = "process") -> Trajectory:
    """n post-burn-in values, deterministic in (spec, n, seed).

    The innovation stream is a prefix-stable function of (seed, purpose),
    so extending n never changes earlier values and distinct purposes give
    disjoint randomness.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = stream(seed, purpose)
    total = n + spec.burn_in
    e = rng.standard_normal(total)
    x = np.empty(total)
    prev = 0.0
    if spec.kind == "ar1":
        for t in range(total):
            prev = spec.a * prev + spec.noise_sd * e[t]
            x[t] = prev
    elif spec.kind == "arch1":
        for t in range(total):
            prev = e[t] * math.sqrt(spec.omega + spec.alpha1 * prev * prev)
            x[t] = prev
    else:
        for t in range(total):
            prev = (
                spec.a_plus * max(prev, 0.0)
                + spec.a_minus * min(prev, 0.0)
                + spec.noise_sd * e[t]
            )
            x[t] = prev
    return Trajectory(values=x[spec.burn_in :], seed=seed, spec_digest=spec.digest())


@dataclass(frozen=True)
class SupervisedTask:
    """Input process plus target and label noise defining (X_i, Y_i) pairs.

    ``embed_dim`` > 1 feeds lagged copies (X_t, X_{t-1}, ...) as input
    coordinates; the clamp box must live inside the target domain.
    """

    process: ProcessSpec
    target: HolderTarget
    noise_sd: float = 0.0
    clip: Box | None = None
    embed_dim: int = 1

    def __post_init__(self):
        if self.noise_sd < 0:
            raise ValueError("noise_sd must be >= 0")
        if self.embed_dim < 1:
            raise ValueError("embed_dim must be >= 1")
        if self.embed_dim != self.target.d_x:
            raise ValueError("embed_dim must match the target input dimension")
        box = self.clip_box
        t = self.target.domain
        if any(b_lo < t_lo - 1e-12 or b_hi > t_hi + 1e-12
               for b_lo, b_hi, t_lo, t_hi in zip(box.lo, box.hi, t.lo, t.hi)):
            raise ValueError("the clamp box must be contained in the target domain")

    @property
    def clip_box(self) -> Box:
        return self.clip if self.clip is not None else self.target.domain


def make_supervised(
    task: SupervisedTask, n: int, seed: int, purpose: str = "train"
) -> tuple[np.ndarray, np.ndarray]:
    """(X, Y) arrays of shapes (n, d_x) and (n,).

    X clamps the (lag-embedded) process into the clip box; Y adds Gaussian
    label noise from a stream disjoint from the process innovations.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    e = task.embed_dim
    traj = simulate(task.process, n + e - 1, seed, purpose=f"x:{purpose}")
    raw = traj.values
    cols = [raw[e - 1 - j : e - 1 - j + n] for j in range(e)]
    x = np.stack(cols, axis=1)
    box = task.clip_box
    x = np.clip(x, np.asarray(box.lo), np.asarray(box.hi))
    y = task.target(x)
    if task.noise_sd > 0:
        eta = stream(seed, f"y:{purpose}").standard_normal(n)
        y = y + task.noise_sd * eta
    return x, y
