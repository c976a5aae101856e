"""Loss functions with declared Lipschitz constants on a working range.

All kinds are jointly Lipschitz in (prediction, label) on the working
range [-F, F] x Y.  The declared constants:

* absolute, hinge, logistic: 1
* huber: 1 for every threshold (the t^2/(2 delta) | |t| - delta/2 form
  keeps the slope capped at 1)
* squared: 2 (F + ||Y||), range-restricted

Kink subgradient conventions are fixed so gradients reproduce exactly:
|.|'(0) = 0 and hinge'(margin = 1) = 0.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["Loss", "LOSS_KINDS"]

LOSS_KINDS = ("absolute", "squared", "huber", "hinge", "logistic")


@dataclass(frozen=True)
class Loss:
    kind: str
    lipschitz: float
    delta: float | None = None

    def __post_init__(self):
        if self.kind not in LOSS_KINDS:
            raise ValueError(f"unknown loss kind {self.kind!r}; known: {LOSS_KINDS}")
        if not self.lipschitz > 0:
            raise ValueError("the Lipschitz constant must be positive")
        if self.kind == "huber" and (self.delta is None or self.delta <= 0):
            raise ValueError("huber requires a positive delta")

    @classmethod
    def make(
        cls,
        kind: str,
        delta: float | None = None,
        output_cap: float | None = None,
        y_bound: float | None = None,
    ) -> "Loss":
        """Construct with the default constant for the kind.

        The squared loss is Lipschitz only on a bounded range, so it needs
        the output cap F and the label bound to size its constant.
        """
        if kind == "squared":
            if output_cap is None or y_bound is None:
                raise ValueError(
                    "squared loss needs output_cap and y_bound to size its constant"
                )
            return cls(kind, 2.0 * (float(output_cap) + float(y_bound)))
        if kind == "huber":
            return cls(kind, 1.0, delta=float(delta if delta is not None else 1.0))
        return cls(kind, 1.0)

    def value(self, u, y) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        y = np.asarray(y, dtype=float)
        if self.kind == "absolute":
            return np.abs(u - y)
        if self.kind == "squared":
            return (u - y) ** 2
        if self.kind == "huber":
            t = u - y
            at = np.abs(t)
            return np.where(at <= self.delta, t * t / (2.0 * self.delta), at - self.delta / 2.0)
        if self.kind == "hinge":
            return np.maximum(0.0, 1.0 - y * u)
        margin = -y * u
        # log(1 + exp(m)) evaluated stably
        return np.logaddexp(0.0, margin)

    def grad(self, u, y) -> np.ndarray:
        """d value / d u with the fixed kink conventions."""
        u = np.asarray(u, dtype=float)
        y = np.asarray(y, dtype=float)
        if self.kind == "absolute":
            return np.sign(u - y)
        if self.kind == "squared":
            return 2.0 * (u - y)
        if self.kind == "huber":
            t = u - y
            return np.where(np.abs(t) <= self.delta, t / self.delta, np.sign(t))
        if self.kind == "hinge":
            return np.where(1.0 - y * u > 0.0, -y, 0.0)
        return -y / (1.0 + np.exp(y * u))

    def to_json(self) -> dict:
        out = {"kind": self.kind, "lipschitz": self.lipschitz}
        if self.delta is not None:
            out["delta"] = self.delta
        return out

    @classmethod
    def from_json(cls, obj: dict) -> "Loss":
        return cls(kind=obj["kind"], lipschitz=obj["lipschitz"], delta=obj.get("delta"))
