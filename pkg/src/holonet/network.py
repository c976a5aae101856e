"""Sparse feed-forward networks: representation, evaluation, measurement.

A network with architecture (p0, ..., p_{L+1}) is the composition
A_{L+1} o sigma o A_L o ... o sigma o A_1 of affine maps A_l(x) = W_l x + b_l
with the activation applied coordinatewise after each of the first L maps.
L is the number of hidden layers; L = 0 (a bare affine map) is permitted as
the base case for composition utilities.

Weight matrices are stored mapping-shaped, W_l in R^{p_l x p_{l-1}}, so that
A_l sends R^{p_{l-1}} to R^{p_l}.  Matrices may be dense ndarrays or
scipy.sparse matrices; constructed approximants use sparse storage because
their width is large while their live-parameter count is small.

Networks are immutable values: every operation returns a new network and
never mutates its inputs, so all operations here are safe to call
concurrently.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .activations import Activation

try:  # fused sparse forward kernel; scipy path below works without it
    import numba as _numba

    @_numba.njit(parallel=True, cache=True)
    def _csr_affine_act(indptr, indices, data, bias, at, out, apply_relu):
        nrows = out.shape[0]
        ncols = at.shape[1]
        for r in _numba.prange(nrows):
            row = out[r]
            b = bias[r]
            for j in range(ncols):
                row[j] = b
            for k in range(indptr[r], indptr[r + 1]):
                v = data[k]
                src = at[indices[k]]
                for j in range(ncols):
                    row[j] += v * src[j]
            if apply_relu:
                for j in range(ncols):
                    if row[j] < 0.0:
                        row[j] = 0.0

except Exception:  # pragma: no cover - numba simply not installed
    _csr_affine_act = None

__all__ = [
    "Architecture",
    "Network",
    "ClassConstraints",
    "parallelize",
    "compose_affine_input",
    "fold_affine_input",
]


def _is_sparse(w) -> bool:
    return sp.issparse(w)


@dataclass(frozen=True)
class Architecture:
    """Width vector (p0, p1, ..., p_{L+1}); depth = number of hidden layers."""

    widths: tuple[int, ...]

    def __post_init__(self):
        if len(self.widths) < 2:
            raise ValueError("architecture needs at least input and output widths")
        if any(int(p) < 1 for p in self.widths):
            raise ValueError("all widths must be >= 1")
        object.__setattr__(self, "widths", tuple(int(p) for p in self.widths))

    @property
    def depth(self) -> int:
        return len(self.widths) - 2

    @property
    def in_dim(self) -> int:
        return self.widths[0]

    @property
    def out_dim(self) -> int:
        return self.widths[-1]

    @property
    def width(self) -> int:
        """Maximum hidden width; 0 for a depth-0 (pure affine) network."""
        hidden = self.widths[1:-1]
        return max(hidden) if hidden else 0

    @property
    def param_count(self) -> int:
        return sum(
            self.widths[i] * self.widths[i + 1] + self.widths[i + 1]
            for i in range(len(self.widths) - 1)
        )


@dataclass(frozen=True)
class ClassConstraints:
    """The five caps defining a constrained network class.

    depth_cap / width_cap bound the architecture, sparsity_cap bounds the
    number of nonzero parameters, weight_cap bounds the largest parameter
    magnitude, output_cap bounds the sup-norm of outputs over the input
    domain.
    """

    depth_cap: float
    width_cap: float
    sparsity_cap: float
    weight_cap: float
    output_cap: float

    def __post_init__(self):
        for name in ("depth_cap", "width_cap", "sparsity_cap", "weight_cap", "output_cap"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be strictly positive")

    def to_json(self) -> dict:
        return {
            "depth_cap": float(self.depth_cap),
            "width_cap": float(self.width_cap),
            "sparsity_cap": float(self.sparsity_cap),
            "weight_cap": float(self.weight_cap),
            "output_cap": float(self.output_cap),
        }

    @classmethod
    def from_json(cls, obj: dict) -> "ClassConstraints":
        return cls(
            depth_cap=obj["depth_cap"],
            width_cap=obj["width_cap"],
            sparsity_cap=obj["sparsity_cap"],
            weight_cap=obj["weight_cap"],
            output_cap=obj["output_cap"],
        )


class Network:
    """An immutable feed-forward network."""

    def __init__(self, layers, activation: Activation, output_clamp: float | None = None):
        layers = [(w, np.asarray(b, dtype=float).ravel()) for (w, b) in layers]
        if not layers:
            raise ValueError("a network needs at least one affine layer")
        widths = [layers[0][0].shape[1]]
        for w, b in layers:
            if w.ndim != 2:
                raise ValueError("weight matrices must be 2-d")
            if w.shape[1] != widths[-1]:
                raise ValueError(
                    f"layer shape {w.shape} does not chain with previous width {widths[-1]}"
                )
            if b.shape[0] != w.shape[0]:
                raise ValueError(f"bias length {b.shape[0]} != output width {w.shape[0]}")
            widths.append(w.shape[0])
        if output_clamp is not None and not output_clamp > 0:
            raise ValueError("output_clamp must be positive")
        self.layers = [
            (w.tocsr() if _is_sparse(w) else np.asarray(w, dtype=float), b) for (w, b) in layers
        ]
        for w, _ in self.layers:
            if _is_sparse(w):
                w.eliminate_zeros()
        self.arch = Architecture(tuple(widths))
        self.activation = activation
        self.output_clamp = None if output_clamp is None else float(output_clamp)

    # -- evaluation ---------------------------------------------------------

    def forward(self, x):
        """Evaluate at a point (shape (d,)) or a batch (shape (n, d)).

        Returns shape (d_y,) for a point, (n, d_y) for a batch; coordinates
        are clamped into [-F, F] when an output clamp F is set.
        """
        x = np.asarray(x, dtype=float)
        single = x.ndim == 1
        if single:
            x = x[None, :]
        if x.ndim != 2 or x.shape[1] != self.arch.in_dim:
            raise ValueError(
                f"input dimension {x.shape[-1] if x.ndim else 0} != network input "
                f"dimension {self.arch.in_dim}"
            )
        last = len(self.layers) - 1
        relu_fast = self.activation.kind == "relu"
        if any(_is_sparse(w) for w, _ in self.layers):
            # column-major carry: sparse @ dense keeps batch as columns
            at = np.ascontiguousarray(x.T)
            use_kernel = relu_fast and _csr_affine_act is not None
            for i, (w, b) in enumerate(self.layers):
                if use_kernel and _is_sparse(w):
                    out = np.empty((w.shape[0], at.shape[1]))
                    _csr_affine_act(w.indptr, w.indices, w.data, b, at, out, i < last)
                    at = out
                    continue
                zt = np.asarray(w @ at)
                zt += b[:, None]
                if i < last:
                    if relu_fast:
                        np.maximum(zt, 0.0, out=zt)
                    else:
                        zt = self.activation(zt)
                at = zt
            a = at.T
        else:
            a = x
            for i, (w, b) in enumerate(self.layers):
                z = a @ w.T
                z += b
                if i < last:
                    if relu_fast:
                        np.maximum(z, 0.0, out=z)
                    else:
                        z = self.activation(z)
                a = z
        if self.output_clamp is not None:
            a = np.clip(a, -self.output_clamp, self.output_clamp)
        return a[0] if single else a

    def __call__(self, x):
        return self.forward(x)

    # -- parameter vector ---------------------------------------------------

    def param_vector(self) -> np.ndarray:
        """Flat parameter vector: per layer, weight entries then bias."""
        parts = []
        for w, b in self.layers:
            wd = w.toarray() if _is_sparse(w) else w
            parts.append(np.asarray(wd, dtype=float).ravel())
            parts.append(b)
        return np.concatenate(parts)

    def with_params(self, theta: np.ndarray) -> "Network":
        """New network with the same shapes and the given parameter vector."""
        theta = np.asarray(theta, dtype=float).ravel()
        layers = []
        pos = 0
        for w, b in self.layers:
            n_w = w.shape[0] * w.shape[1]
            wd = theta[pos : pos + n_w].reshape(w.shape)
            pos += n_w
            bd = theta[pos : pos + b.shape[0]]
            pos += b.shape[0]
            layers.append((wd, bd))
        if pos != theta.shape[0]:
            raise ValueError(f"parameter vector length {theta.shape[0]}, expected {pos}")
        return Network(layers, self.activation, self.output_clamp)

    def with_output_clamp(self, clamp: float | None) -> "Network":
        return Network(self.layers, self.activation, clamp)

    def with_activation(self, activation: Activation) -> "Network":
        return Network(self.layers, activation, self.output_clamp)

    # -- measurement --------------------------------------------------------

    def param_stats(self) -> dict:
        """count, sparsity (nonzeros), max_abs, depth, width."""
        count = 0
        nnz = 0
        max_abs = 0.0
        for w, b in self.layers:
            count += w.shape[0] * w.shape[1] + b.shape[0]
            if _is_sparse(w):
                nnz += int(np.count_nonzero(w.data))
                if w.nnz:
                    max_abs = max(max_abs, float(np.max(np.abs(w.data))))
            else:
                nnz += int(np.count_nonzero(w))
                if w.size:
                    max_abs = max(max_abs, float(np.max(np.abs(w))))
            nnz += int(np.count_nonzero(b))
            if b.size:
                max_abs = max(max_abs, float(np.max(np.abs(b))))
        return {
            "count": count,
            "sparsity": nnz,
            "max_abs": max_abs,
            "depth": self.arch.depth,
            "width": self.arch.width,
        }

    def check_membership(self, constraints: ClassConstraints, domain_sample) -> dict:
        """Check the five caps; the output cap is checked on the sample only.

        The sup-norm condition is verified at the supplied domain points, a
        necessary (not sufficient) check.  Returns {"ok": bool,
        "violations": [...]} with violation codes among depth/width/
        sparsity/weight/output.
        """
        pts = np.asarray(domain_sample, dtype=float)
        if pts.size == 0:
            raise ValueError("domain_sample must be nonempty")
        if pts.ndim == 1:
            pts = pts[:, None]
        stats = self.param_stats()
        violations = []
        if stats["depth"] > constraints.depth_cap:
            violations.append("depth")
        if stats["width"] > constraints.width_cap:
            violations.append("width")
        if stats["sparsity"] > constraints.sparsity_cap:
            violations.append("sparsity")
        if stats["max_abs"] > constraints.weight_cap:
            violations.append("weight")
        sup_out = float(np.max(np.abs(self.forward(pts)))) if pts.size else 0.0
        if sup_out > constraints.output_cap:
            violations.append("output")
        return {"ok": not violations, "violations": violations, "sample_sup": sup_out}

    # -- serialization ------------------------------------------------------

    def to_json_obj(self) -> dict:
        act = self.activation.to_json()
        return {
            "activation": act["kind"],
            "a": act.get("a"),
            "widths": list(self.arch.widths),
            "layers": [
                {
                    "w": (w.toarray() if _is_sparse(w) else w).tolist(),
                    "b": b.tolist(),
                }
                for (w, b) in self.layers
            ],
            "clamp": self.output_clamp,
        }

    def to_json(self) -> str:
        # json round-trips binary64 exactly: floats are emitted via repr,
        # which is shortest-round-trip in Python 3.
        return json.dumps(self.to_json_obj())

    @classmethod
    def from_json_obj(cls, obj: dict) -> "Network":
        act = Activation(kind=obj["activation"], a=obj.get("a"))
        layers = [(np.asarray(l["w"], dtype=float), np.asarray(l["b"], dtype=float)) for l in obj["layers"]]
        return cls(layers, act, obj.get("clamp"))

    @classmethod
    def from_json(cls, text: str) -> "Network":
        return cls.from_json_obj(json.loads(text))

    def __repr__(self):
        s = self.param_stats()
        return (
            f"Network(depth={s['depth']}, widths={self.arch.widths}, "
            f"nnz={s['sparsity']}, activation={self.activation.kind})"
        )


# -- combination ----------------------------------------------------------


def _hstack(w1, w2):
    if _is_sparse(w1) or _is_sparse(w2):
        return sp.hstack([w1, w2], format="csr")
    return np.hstack([w1, w2])


def _vstack(w1, w2):
    if _is_sparse(w1) or _is_sparse(w2):
        return sp.vstack([w1, w2], format="csr")
    return np.vstack([w1, w2])


def _block_diag(w1, w2):
    if _is_sparse(w1) or _is_sparse(w2):
        return sp.block_diag([w1, w2], format="csr")
    out = np.zeros((w1.shape[0] + w2.shape[0], w1.shape[1] + w2.shape[1]))
    out[: w1.shape[0], : w1.shape[1]] = w1
    out[w1.shape[0] :, w1.shape[1] :] = w2
    return out


def parallelize(net1: Network, net2: Network) -> Network:
    """Stack two equal-depth networks into one computing (f1(x), f2(x)).

    The block-diagonal construction adds no nonzero parameters, so the
    combined sparsity is exactly the sum and each hidden width is the sum
    of the per-network widths.  Output clamps must agree (both absent or
    equal), otherwise the concatenation contract could not hold.
    """
    if net1.arch.depth != net2.arch.depth:
        raise ValueError("parallelize requires equal depth")
    if net1.arch.in_dim != net2.arch.in_dim:
        raise ValueError("parallelize requires equal input dimension")
    if net1.activation != net2.activation:
        raise ValueError("parallelize requires the same activation")
    if net1.output_clamp != net2.output_clamp:
        raise ValueError("parallelize requires matching output clamps")
    layers = []
    for i, ((w1, b1), (w2, b2)) in enumerate(zip(net1.layers, net2.layers)):
        if i == 0:
            w = _vstack(w1, w2)
        else:
            w = _block_diag(w1, w2)
        layers.append((w, np.concatenate([b1, b2])))
    return Network(layers, net1.activation, net1.output_clamp)


def compose_affine_input(net: Network, matrix, offset) -> Network:
    """Prepend one hidden layer computing sigma(M x + c) before ``net``.

    The result evaluates net(sigma(M x + c)); when the activation fixes the
    segment containing the affine image this equals net(M x + c) exactly.
    Depth increases by one and sparsity by nnz(M) + nnz(c).
    """
    matrix = np.asarray(matrix, dtype=float)
    offset = np.asarray(offset, dtype=float).ravel()
    if matrix.ndim != 2 or matrix.shape[0] != offset.shape[0]:
        raise ValueError("affine map shapes are inconsistent")
    if matrix.shape[0] != net.arch.in_dim:
        raise ValueError("affine map output dimension must match the network input")
    layers = [(matrix, offset)] + list(net.layers)
    return Network(layers, net.activation, net.output_clamp)


def fold_affine_input(net: Network, matrix, offset) -> Network:
    """Fold an input affine map into the first layer (no extra depth).

    Equivalent function to net(M x + c); used instead of
    ``compose_affine_input`` for activations that fix no segment.
    """
    matrix = np.asarray(matrix, dtype=float)
    offset = np.asarray(offset, dtype=float).ravel()
    w0, b0 = net.layers[0]
    w0d = w0.toarray() if _is_sparse(w0) else w0
    layers = [(w0d @ matrix, w0d @ offset + b0)] + list(net.layers[1:])
    return Network(layers, net.activation, net.output_clamp)
