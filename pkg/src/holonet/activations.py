"""Scalar activation functions and their structural properties.

Six kinds are supported.  ReLU and leaky ReLU are piecewise linear; ELU,
ISRLU, SignReLU and the sigmoid are locally quadratic (three times
differentiable somewhere with nonvanishing first and second derivative).
Every kind except the sigmoid acts as the identity on [0, 1/4] upward,
in particular on the segment [1/4, 3/4]; that fixed segment is what makes
lossless layer insertion possible.  The sigmoid fixes no segment and is
flagged accordingly (``fixes_unit_segment = False``).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = ["Activation", "ACTIVATION_KINDS"]

ACTIVATION_KINDS = ("relu", "leaky_relu", "elu", "isrlu", "sign_relu", "sigmoid")

_NEEDS_SHAPE = {"leaky_relu", "elu", "isrlu", "sign_relu"}
_PIECEWISE_LINEAR = {"relu", "leaky_relu"}


@dataclass(frozen=True)
class Activation:
    """An activation kind plus its shape parameter ``a`` where required.

    Parameter ranges follow the usual definitions: leaky ReLU and SignReLU
    need ``a`` in (0, 1), ELU and ISRLU need ``a > 0``.  ReLU and sigmoid
    take no parameter.
    """

    kind: str
    a: float | None = field(default=None)

    def __post_init__(self):
        if self.kind not in ACTIVATION_KINDS:
            raise ValueError(f"unknown activation kind {self.kind!r}")
        if self.kind in _NEEDS_SHAPE:
            if self.a is None:
                raise ValueError(f"{self.kind} requires a shape parameter a")
            a = float(self.a)
            if self.kind in ("leaky_relu", "sign_relu") and not 0.0 < a < 1.0:
                raise ValueError(f"{self.kind} requires a in (0, 1), got {a}")
            if self.kind in ("elu", "isrlu") and not a > 0.0:
                raise ValueError(f"{self.kind} requires a > 0, got {a}")
        elif self.a is not None:
            raise ValueError(f"{self.kind} takes no shape parameter")

    @property
    def is_piecewise_linear(self) -> bool:
        return self.kind in _PIECEWISE_LINEAR

    @property
    def is_locally_quadratic(self) -> bool:
        return not self.is_piecewise_linear

    @property
    def fixes_unit_segment(self) -> bool:
        """True when sigma(z) = z for all z in [1/4, 3/4] (all but sigmoid)."""
        return self.kind != "sigmoid"

    @property
    def lipschitz_constant(self) -> float:
        """A global Lipschitz constant for this kind.

        relu/leaky_relu/isrlu/sign_relu have slope at most 1 everywhere;
        elu's left branch has slope a * exp(z) <= a, so the constant is
        max(1, a); the sigmoid's derivative peaks at 1/4.
        """
        if self.kind == "elu":
            return max(1.0, float(self.a))
        if self.kind == "sigmoid":
            return 0.25
        return 1.0

    def __call__(self, z):
        z = np.asarray(z, dtype=float)
        if self.kind == "relu":
            return np.maximum(z, 0.0)
        if self.kind == "leaky_relu":
            return np.maximum(z, self.a * z)
        if self.kind == "elu":
            return np.where(z > 0.0, z, self.a * np.expm1(np.minimum(z, 0.0)))
        if self.kind == "isrlu":
            return np.where(z > 0.0, z, z / np.sqrt(1.0 + self.a * z * z))
        if self.kind == "sign_relu":
            neg = np.minimum(z, 0.0)
            return np.where(z >= 0.0, z, self.a * neg / (1.0 - neg))
        # sigmoid
        return 1.0 / (1.0 + np.exp(-z))

    def derivative(self, z):
        """Pointwise derivative with fixed kink conventions.

        At kinks the left-branch value is used: relu'(0) = 0 and
        leaky_relu'(0) = a.  These conventions are shared with the
        backpropagation code so gradients are reproducible.
        """
        z = np.asarray(z, dtype=float)
        if self.kind == "relu":
            return np.where(z > 0.0, 1.0, 0.0)
        if self.kind == "leaky_relu":
            return np.where(z > 0.0, 1.0, self.a)
        if self.kind == "elu":
            return np.where(z > 0.0, 1.0, self.a * np.exp(np.minimum(z, 0.0)))
        if self.kind == "isrlu":
            return np.where(z > 0.0, 1.0, (1.0 + self.a * z * z) ** -1.5)
        if self.kind == "sign_relu":
            neg = np.minimum(z, 0.0)
            return np.where(z >= 0.0, 1.0, self.a / (1.0 - neg) ** 2)
        s = 1.0 / (1.0 + np.exp(-z))
        return s * (1.0 - s)

    def to_json(self) -> dict:
        out = {"kind": self.kind}
        if self.a is not None:
            out["a"] = float(self.a)
        return out

    @classmethod
    def from_json(cls, obj: dict) -> "Activation":
        return cls(kind=obj["kind"], a=obj.get("a"))


RELU = Activation("relu")
