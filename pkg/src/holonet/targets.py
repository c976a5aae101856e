"""Smooth target functions with declared smoothness budgets.

A ``HolderTarget`` bundles a function on an axis-aligned box with its
smoothness order ``s`` (non-integer), a budget ``K`` dominating the sum of
derivative sup-norms up to order floor(s) plus the top-order smoothness
quotients, and evaluators for the partial derivatives needed by local
Taylor expansion.

The built-in corpus carries closed-form partials; user-supplied targets
without partials fall back to central finite differences (step 1e-4 per
differentiation order), which limits attainable accuracy and is documented
as such.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

__all__ = [
    "Box",
    "HolderTarget",
    "multi_indices",
    "rescale_map",
    "rescale_target",
    "corpus_target",
    "corpus_names",
    "sampled_holder_norm",
]


@dataclass(frozen=True)
class Box:
    """Axis-aligned compact box [lo_1, hi_1] x ... x [lo_d, hi_d]."""

    lo: tuple[float, ...]
    hi: tuple[float, ...]

    def __post_init__(self):
        lo = tuple(float(v) for v in np.atleast_1d(self.lo))
        hi = tuple(float(v) for v in np.atleast_1d(self.hi))
        if len(lo) != len(hi):
            raise ValueError("lo and hi must have the same length")
        if any(l > h for l, h in zip(lo, hi)):
            raise ValueError("box must satisfy lo <= hi componentwise")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @property
    def dim(self) -> int:
        return len(self.lo)

    @property
    def sup_norm(self) -> float:
        """sup over the box of the max-abs coordinate."""
        return max(max(abs(l), abs(h)) for l, h in zip(self.lo, self.hi))

    @property
    def diameter(self) -> float:
        """Max-norm diameter."""
        return max(h - l for l, h in zip(self.lo, self.hi))

    def contains(self, x, atol: float = 0.0) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        lo = np.asarray(self.lo) - atol
        hi = np.asarray(self.hi) + atol
        return np.all((x >= lo) & (x <= hi), axis=1)

    def grid(self, n_points: int) -> np.ndarray:
        """Deterministic near-uniform grid with at least n_points points."""
        per_axis = max(2, math.ceil(n_points ** (1.0 / self.dim)))
        axes = [np.linspace(l, h, per_axis) if h > l else np.full(per_axis, l)
                for l, h in zip(self.lo, self.hi)]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)

    def sample(self, n_points: int, rng: np.random.Generator) -> np.ndarray:
        u = rng.random((n_points, self.dim))
        lo = np.asarray(self.lo)
        hi = np.asarray(self.hi)
        return lo + u * (hi - lo)

    def to_json(self) -> dict:
        return {"lo": list(self.lo), "hi": list(self.hi)}

    @classmethod
    def from_json(cls, obj) -> "Box":
        if isinstance(obj, (list, tuple)) and len(obj) == 2 and np.isscalar(obj[0]):
            return cls((obj[0],), (obj[1],))
        return cls(tuple(obj["lo"]), tuple(obj["hi"]))


def multi_indices(dim: int, max_order: int) -> list[tuple[int, ...]]:
    """All multi-indices beta with |beta| <= max_order, graded lexicographic."""
    out: list[tuple[int, ...]] = []

    def rec(prefix, remaining, slots):
        if slots == 1:
            out.append(prefix + (remaining,))
            return
        for v in range(remaining + 1):
            rec(prefix + (v,), remaining - v, slots - 1)

    for order in range(max_order + 1):
        block: list[tuple[int, ...]] = []
        start = len(out)
        rec((), order, dim)
        block = sorted(out[start:])
        out[start:] = block
    return out


@dataclass(frozen=True)
class HolderTarget:
    """A smooth scalar target with declared (s, K) on a box domain.

    ``eval_fn`` maps an (n, d) array to an (n,) array.  ``partial_fn`` maps
    (beta, (n, d) array) to an (n,) array for every |beta| <= floor(s).
    ``s`` must be non-integer: the smoothness-class convention degenerates
    at integer s (top-order quotient exponent 0), so integer orders are
    rejected with a diagnostic.
    """

    name: str
    s: float
    K: float
    domain: Box
    eval_fn: Callable[[np.ndarray], np.ndarray]
    partial_fn: Callable[[tuple[int, ...], np.ndarray], np.ndarray] | None = None
    d_y: int = 1
    components: tuple["HolderTarget", ...] | None = None  # scalar parts when d_y > 1

    def __post_init__(self):
        if self.s <= 0:
            raise ValueError("s must be positive")
        if float(self.s) == int(self.s):
            raise ValueError(
                "integer smoothness order s is not supported: the top-order "
                "quotient exponent s - floor(s) would vanish; use a non-integer s"
            )
        if self.K <= 0:
            raise ValueError("K must be positive")

    @property
    def d_x(self) -> int:
        return self.domain.dim

    @property
    def taylor_order(self) -> int:
        return int(math.floor(self.s))

    def __call__(self, x) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        return np.asarray(self.eval_fn(x), dtype=float)

    def partial(self, beta: tuple[int, ...], x) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        beta = tuple(int(b) for b in beta)
        if len(beta) != self.d_x:
            raise ValueError("multi-index length must equal the input dimension")
        if sum(beta) == 0:
            return self(x)
        if self.partial_fn is not None:
            return np.asarray(self.partial_fn(beta, x), dtype=float)
        return _finite_difference_partial(self.eval_fn, beta, x)


def _finite_difference_partial(eval_fn, beta, x, step: float = 1e-4):
    """Central finite differences, iterated per axis; accuracy-limited."""
    pts = np.atleast_2d(np.asarray(x, dtype=float))
    todo = [(j, b) for j, b in enumerate(beta) if b > 0]

    def rec(points, work):
        if not work:
            return np.asarray(eval_fn(points), dtype=float)
        (axis, order), rest = work[0], list(work[1:])
        e = np.zeros(points.shape[1])
        e[axis] = step
        if order == 1:
            return (rec(points + e, rest) - rec(points - e, rest)) / (2.0 * step)
        # second central difference consumes two orders at once
        lower = [(axis, order - 2)] + rest if order > 2 else rest
        return (
            rec(points + e, lower) - 2.0 * rec(points, lower) + rec(points - e, lower)
        ) / (step * step)

    return rec(pts, todo)


# -- domain rescaling -------------------------------------------------------


def rescale_map(domain: Box) -> tuple[np.ndarray, np.ndarray, float]:
    """Affine map pulling the domain into [1/4, 3/4]^d.

    Returns (matrix, offset, scale) with scale R = max(1, 4 * sup-norm of
    the domain) and map T(x) = x / R + 1/2.  T(domain) is contained in
    [1/4, 3/4]^d because every coordinate magnitude is at most R/4.
    """
    d = domain.dim
    scale = max(1.0, 4.0 * domain.sup_norm)
    matrix = np.eye(d) / scale
    offset = np.full(d, 0.5)
    return matrix, offset, scale


def rescale_target(target: HolderTarget) -> tuple[HolderTarget, float]:
    """The pulled-back target g(u) = h(R (u - 1/2)) on T(domain).

    Partials pick up a factor R^|beta| and the smoothness budget becomes
    R^s K (R >= 1), so g lives in the same smoothness class with the
    inflated budget.
    """
    _, _, scale = rescale_map(target.domain)
    lo = tuple(l / scale + 0.5 for l in target.domain.lo)
    hi = tuple(h / scale + 0.5 for h in target.domain.hi)
    inner = Box(lo, hi)

    def back(u):
        return (np.atleast_2d(np.asarray(u, dtype=float)) - 0.5) * scale

    def g_eval(u):
        return target.eval_fn(back(u))

    def g_partial(beta, u):
        return (scale ** sum(beta)) * target.partial(beta, back(u))

    g = HolderTarget(
        name=f"{target.name}@unit",
        s=target.s,
        K=(scale ** target.s) * target.K,
        domain=inner,
        eval_fn=g_eval,
        partial_fn=g_partial,
        d_y=target.d_y,
    )
    return g, scale


# -- smoothness budget helpers ----------------------------------------------


def _quotient_bound(sup_f: float, sup_df: float, diameter: float, exponent: float) -> float:
    """Upper bound for sup |f(x)-f(y)| / |x-y|^exponent on a set of the
    given max-norm diameter, from |f(x)-f(y)| <= min(2 sup|f|, sup|df| |x-y|)."""
    if diameter <= 0:
        return 0.0
    if sup_df * diameter <= 2.0 * sup_f:
        return sup_df * diameter ** (1.0 - exponent)
    return (2.0 * sup_f) ** (1.0 - exponent) * sup_df**exponent


def _holder_budget(deriv_sup: Callable[[tuple[int, ...]], float], dim: int, s: float,
                   diameter: float) -> float:
    """Budget K: sum of derivative sups up to order q = floor(s) plus
    bounded top-order quotients, with a 2% safety margin."""
    q = int(math.floor(s))
    total = 0.0
    for beta in multi_indices(dim, q):
        total += deriv_sup(beta)
    exponent = s - q
    for beta in multi_indices(dim, q):
        if sum(beta) != q:
            continue
        sup_f = deriv_sup(beta)
        grad = sum(
            deriv_sup(tuple(b + (1 if j == k else 0) for k, b in enumerate(beta)))
            for j in range(dim)
        )
        total += _quotient_bound(sup_f, grad, diameter, exponent)
    return 1.02 * total


# -- built-in corpus ---------------------------------------------------------


def _grid_sup(fn, box: Box, n: int = 4001) -> float:
    pts = box.grid(n if box.dim == 1 else 251**2)
    return float(np.max(np.abs(fn(pts))))


def _sin1d_partial(amplitude):
    def p(beta, x):
        k = beta[0]
        return amplitude * np.pi**k * np.sin(np.pi * x[:, 0] + k * np.pi / 2.0)

    return p


def _gauss1d_partial(beta, x):
    # d^k/dx^k exp(-x^2) = (-1)^k H_k(x) exp(-x^2), H_k physicists' Hermite
    k = beta[0]
    t = x[:, 0]
    h = np.polynomial.hermite.hermval(t, [0.0] * k + [1.0])
    return (-1.0) ** k * h * np.exp(-t * t)


def _cubic1d_partial(beta, x):
    k = beta[0]
    t = x[:, 0]
    if k == 0:
        return (t**3 - t) / 2.0
    if k == 1:
        return (3.0 * t**2 - 1.0) / 2.0
    if k == 2:
        return 3.0 * t
    if k == 3:
        return np.full(t.shape, 3.0)
    return np.zeros(t.shape)


def _sincos2d_partial(beta, x):
    i, j = beta
    return (
        np.pi ** (i + j)
        * np.sin(np.pi * x[:, 0] + i * np.pi / 2.0)
        * np.cos(np.pi * x[:, 1] + j * np.pi / 2.0)
    )


def _bilinear2d_partial(beta, x):
    i, j = beta
    if i == 0 and j == 0:
        return x[:, 0] * x[:, 1]
    if i == 1 and j == 0:
        return x[:, 1]
    if i == 0 and j == 1:
        return x[:, 0]
    if i == 1 and j == 1:
        return np.ones(x.shape[0])
    return np.zeros(x.shape[0])


_CORPUS: dict[str, dict] = {
    "sin1d": {
        "box": Box((-1.0,), (1.0,)),
        "eval": lambda x: np.sin(np.pi * x[:, 0]),
        "partial": _sin1d_partial(1.0),
        "deriv_sup": lambda beta: float(np.pi ** beta[0]),
    },
    "sin1d_half": {
        "box": Box((-1.0,), (1.0,)),
        "eval": lambda x: 0.5 * np.sin(np.pi * x[:, 0]),
        "partial": _sin1d_partial(0.5),
        "deriv_sup": lambda beta: 0.5 * float(np.pi ** beta[0]),
    },
    "gauss1d": {
        "box": Box((-1.0,), (1.0,)),
        "eval": lambda x: np.exp(-x[:, 0] ** 2),
        "partial": _gauss1d_partial,
        "deriv_sup": None,  # numeric grid sup
    },
    "cubic1d": {
        "box": Box((-1.0,), (1.0,)),
        "eval": lambda x: (x[:, 0] ** 3 - x[:, 0]) / 2.0,
        "partial": _cubic1d_partial,
        "deriv_sup": None,
    },
    "sincos2d": {
        "box": Box((-1.0, -1.0), (1.0, 1.0)),
        "eval": lambda x: np.sin(np.pi * x[:, 0]) * np.cos(np.pi * x[:, 1]),
        "partial": _sincos2d_partial,
        "deriv_sup": lambda beta: float(np.pi ** (beta[0] + beta[1])),
    },
    "bilinear2d": {
        "box": Box((-0.25, -0.25), (0.25, 0.25)),
        "eval": lambda x: x[:, 0] * x[:, 1],
        "partial": _bilinear2d_partial,
        "deriv_sup": None,
    },
}


def corpus_names() -> list[str]:
    return sorted(_CORPUS)


def corpus_target(name: str, s: float) -> HolderTarget:
    """Built-in target with budget K computed for the requested order s.

    Derivative sup-norms come from closed forms where available and from a
    dense-grid maximum otherwise; the budget adds the top-order quotient
    bound and a small safety margin, so the sampled smoothness check always
    stays below K.
    """
    if name not in _CORPUS:
        raise KeyError(f"unknown corpus target {name!r}; known: {corpus_names()}")
    if float(s) == int(s):
        raise ValueError("corpus targets require a non-integer smoothness order s")
    entry = _CORPUS[name]
    box: Box = entry["box"]
    q = int(math.floor(s))
    if q + 1 > 3 and entry["deriv_sup"] is None:
        raise ValueError(f"corpus target {name!r} supports s < 4 only")

    def deriv_sup(beta):
        if entry["deriv_sup"] is not None:
            return entry["deriv_sup"](beta)
        return 1.02 * _grid_sup(lambda p: entry["partial"](beta, p), box)

    K = _holder_budget(deriv_sup, box.dim, float(s), box.diameter)
    return HolderTarget(
        name=name,
        s=float(s),
        K=K,
        domain=box,
        eval_fn=entry["eval"],
        partial_fn=entry["partial"],
    )


def sampled_holder_norm(target: HolderTarget, n_points: int = 400, seed: int = 7) -> float:
    """Probe-set lower bound for the smoothness norm (necessary check only).

    Sums the sampled sup of every partial up to order floor(s) and the
    sampled top-order quotient over random point pairs; the result must not
    exceed the declared budget K.
    """
    rng = np.random.default_rng(seed)
    pts = np.vstack([target.domain.grid(n_points), target.domain.sample(n_points, rng)])
    q = target.taylor_order
    total = 0.0
    tops = []
    for beta in multi_indices(target.d_x, q):
        vals = target.partial(beta, pts)
        total += float(np.max(np.abs(vals)))
        if sum(beta) == q:
            tops.append(beta)
    exponent = target.s - q
    a = target.domain.sample(n_points, rng)
    b = target.domain.sample(n_points, rng)
    gap = np.max(np.abs(a - b), axis=1)
    keep = gap > 1e-12
    for beta in tops:
        fa = target.partial(beta, a[keep])
        fb = target.partial(beta, b[keep])
        total += float(np.max(np.abs(fa - fb) / gap[keep] ** exponent, initial=0.0))
    return total
