"""Sparse ReLU wiring blocks: tents, sawtooth squares, clamped products.

``NetBuilder`` assembles a ReLU network as a layered graph of units.  A
unit's pre-activation is an affine combination of units one layer below;
signals needed further down are relayed through identity ReLU copies,
which is lossless because every signal in these constructions is
nonnegative (the builder is internal and relies on that invariant).

The gadgets built here are the pieces of the constructive approximant:

* a tent (1 - slope * |x_j - center|)_+ is two ReLU units feeding a third,
  exact everywhere;
* the iterated-sawtooth square approximates t^2 on [0, 1] within
  4^-(stages+1), attained at dyadic midpoints;
* a product combines three squares through the polarization identity and
  clamps the result back into [0, 1], giving |out - xy| <= 3/4 * 4^-stages.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .activations import Activation
from .network import Network

__all__ = [
    "BuildLimitError",
    "NetBuilder",
    "Aff",
    "tent_gadget",
    "square_gadget",
    "mult_gadget",
    "hat_network",
    "mult_network",
    "mult_stages_for_accuracy",
]

_RELU = Activation("relu")


class BuildLimitError(RuntimeError):
    """A configured construction ceiling was exceeded; names the ceiling."""

    def __init__(self, ceiling_name: str, limit: int, needed: int):
        super().__init__(
            f"construction exceeds ceiling {ceiling_name}={limit} (needs >= {needed})"
        )
        self.ceiling_name = ceiling_name
        self.limit = limit
        self.needed = needed


@dataclass(frozen=True)
class Wire:
    uid: int
    layer: int


class Aff:
    """Affine combination of wires on a single layer, plus a bias."""

    __slots__ = ("terms", "bias")

    def __init__(self, terms, bias: float = 0.0):
        self.terms = list(terms)
        self.bias = float(bias)

    @property
    def layer(self) -> int:
        return max(w.layer for w, _ in self.terms) if self.terms else 0

    @classmethod
    def of(cls, wire: Wire, weight: float = 1.0, bias: float = 0.0) -> "Aff":
        return cls([(wire, weight)], bias)

    def scaled(self, c: float) -> "Aff":
        return Aff([(w, c * v) for w, v in self.terms], c * self.bias)

    def plus(self, other: "Aff") -> "Aff":
        return Aff(self.terms + other.terms, self.bias + other.bias)

    def shifted(self, c: float) -> "Aff":
        return Aff(self.terms, self.bias + c)


class NetBuilder:
    def __init__(self, in_dim: int, max_units: int | None = None):
        self.in_dim = in_dim
        self.max_units = max_units
        self._n_units = 0
        self._defs: dict[int, tuple[int, list[tuple[int, float]], float]] = {}
        self._inputs = [Wire(uid=-(i + 1), layer=0) for i in range(in_dim)]
        self._relay_cache: dict[tuple[int, int], Wire] = {}

    def inputs(self) -> list[Wire]:
        return list(self._inputs)

    def unit(self, aff: Aff) -> Wire:
        """New ReLU unit computing relu(aff); deps are relayed as needed."""
        if not aff.terms:
            raise ValueError("a unit needs at least one incoming connection")
        layer = aff.layer + 1
        terms = []
        for w, v in aff.terms:
            if v == 0.0:
                continue
            terms.append((self._relay(w, layer - 1).uid, float(v)))
        if self.max_units is not None and self._n_units + 1 > self.max_units:
            raise BuildLimitError("max_units", self.max_units, self._n_units + 1)
        uid = self._n_units
        self._n_units += 1
        self._defs[uid] = (layer, terms, aff.bias)
        return Wire(uid=uid, layer=layer)

    def _relay(self, wire: Wire, layer: int) -> Wire:
        # identity relu copies; valid only for nonnegative signals
        while wire.layer < layer:
            key = (wire.uid, wire.layer + 1)
            cached = self._relay_cache.get(key)
            if cached is None:
                cached = self.unit(Aff.of(wire))
                self._relay_cache[key] = cached
            wire = cached
        if wire.layer != layer:
            raise ValueError("cannot relay a wire backwards")
        return wire

    def relay_aff(self, aff: Aff, layer: int) -> Aff:
        return Aff([(self._relay(w, layer), v) for w, v in aff.terms], aff.bias)

    @property
    def n_units(self) -> int:
        return self._n_units

    def depth(self) -> int:
        return max((d[0] for d in self._defs.values()), default=0)

    def emit(self, outputs: list[Aff]) -> Network:
        """Freeze the graph into a ReLU Network with the given output rows."""
        depth = self.depth()
        for aff in outputs:
            depth = max(depth, aff.layer)
        outputs = [self.relay_aff(aff, depth) for aff in outputs]
        depth = self.depth()

        by_layer: dict[int, list[int]] = {}
        for uid in range(self._n_units):
            by_layer.setdefault(self._defs[uid][0], []).append(uid)
        position = {-(i + 1): i for i in range(self.in_dim)}
        sizes = [self.in_dim]
        for layer in range(1, depth + 1):
            uids = by_layer.get(layer, [])
            if not uids:
                raise ValueError(f"layer {layer} has no units")
            for pos, uid in enumerate(uids):
                position[uid] = pos
            sizes.append(len(uids))

        layers = []
        for layer in range(1, depth + 1):
            rows, cols, vals = [], [], []
            bias = np.zeros(sizes[layer])
            for uid in by_layer[layer]:
                r = position[uid]
                _, terms, b = self._defs[uid]
                bias[r] = b
                for src, v in terms:
                    rows.append(r)
                    cols.append(position[src])
                    vals.append(v)
            w = sp.csr_matrix(
                (vals, (rows, cols)), shape=(sizes[layer], sizes[layer - 1])
            )
            layers.append((w, bias))

        rows, cols, vals = [], [], []
        bias = np.zeros(len(outputs))
        for r, aff in enumerate(outputs):
            bias[r] = aff.bias
            acc: dict[int, float] = {}
            for w, v in aff.terms:
                acc[position[w.uid]] = acc.get(position[w.uid], 0.0) + v
            for c, v in acc.items():
                if v != 0.0:
                    rows.append(r)
                    cols.append(c)
                    vals.append(v)
        w_out = sp.csr_matrix((vals, (rows, cols)), shape=(len(outputs), sizes[depth]))
        layers.append((w_out, bias))
        return Network(layers, _RELU)


# -- gadgets ----------------------------------------------------------------


def tent_gadget(builder: NetBuilder, x: Wire, center: float, slope: float) -> Wire:
    """(1 - slope * |x - center|)_+ as relu(1 - slope*relu(x-c) - slope*relu(c-x))."""
    up = builder.unit(Aff.of(x, 1.0, -center))
    down = builder.unit(Aff.of(x, -1.0, center))
    return builder.unit(Aff([(up, -slope), (down, -slope)], 1.0))


def square_gadget(builder: NetBuilder, t: Aff, stages: int) -> Aff:
    """Iterated-sawtooth approximation of t^2 for t in [0, 1].

    Returns an affine expression whose value is the piecewise-linear
    interpolant of t^2 on the dyadic grid of step 2^-stages; the error is
    exactly bounded by 4^-(stages+1).
    """
    if stages < 1:
        raise ValueError("stages must be >= 1")
    a = builder.unit(t)
    b = builder.unit(t.shifted(-0.5))
    # sawtooth value g_1 = 2a - 4b; running interpolant f_1 = t - g_1/4
    g = Aff([(a, 2.0), (b, -4.0)])
    f = Aff([(a, 0.5), (b, 1.0)])
    for k in range(2, stages + 1):
        a = builder.unit(g)
        b = builder.unit(g.shifted(-0.5))
        p = builder.unit(f)
        g = Aff([(a, 2.0), (b, -4.0)])
        f = Aff([(p, 1.0), (a, -2.0 / 4.0**k), (b, 4.0 / 4.0**k)])
    return f


def mult_stages_for_accuracy(m: int) -> int:
    """Square stages so the product error is at most 2^-m (uses 3/4 * 4^-s)."""
    return max(1, math.ceil(m / 2.0))


def mult_gadget(builder: NetBuilder, x: Aff, y: Aff, stages: int) -> Aff:
    """Clamped approximate product of two [0, 1] signals.

    Polarization: xy = (4 ((x+y)/2)^2 - x^2 - y^2) / 2 with each square
    approximated by ``square_gadget``; the raw combination is clamped back
    into [0, 1] (relu(r) - relu(r - 1)), which never increases the error
    because the true product lies in [0, 1].
    """
    sx = square_gadget(builder, x, stages)
    sy = square_gadget(builder, y, stages)
    sm = square_gadget(builder, x.scaled(0.5).plus(y.scaled(0.5)), stages)
    raw = sm.scaled(2.0).plus(sx.scaled(-0.5)).plus(sy.scaled(-0.5))
    lo = builder.unit(raw)
    hi = builder.unit(raw.shifted(-1.0))
    return Aff([(lo, 1.0), (hi, -1.0)])


# -- standalone blocks -------------------------------------------------------


def hat_network(axis: int, center: float, resolution: int, in_dim: int = 1) -> Network:
    """Depth-2 ReLU network computing (1 - resolution * |x_axis - center|)_+."""
    if not 0 <= axis < in_dim:
        raise ValueError("axis out of range")
    builder = NetBuilder(in_dim)
    x = builder.inputs()[axis]
    out = tent_gadget(builder, x, float(center), float(resolution))
    return builder.emit([Aff.of(out)])


def mult_network(m: int) -> Network:
    """ReLU network on [0, 1]^2 with |out(x, y) - x y| <= 2^-m."""
    if m < 1:
        raise ValueError("m must be >= 1")
    builder = NetBuilder(2)
    x, y = builder.inputs()
    out = mult_gadget(builder, Aff.of(x), Aff.of(y), mult_stages_for_accuracy(m))
    return builder.emit([out])
