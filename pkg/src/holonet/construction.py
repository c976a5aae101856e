"""Constructive ReLU approximation with certified error and size budgets.

Pipeline for a scalar target h with smoothness budget (s, K) on a box:

1. rescale the domain into [1/4, 3/4]^d (scale R, budget R^s K);
2. pick the grid resolution so the local-Taylor interpolant is within
   eps/2 of the rescaled target;
3. realize the interpolant exactly-in-structure as a ReLU network, with
   every product of tent factors and normalized monomial factors computed
   by chained approximate-multiplication blocks whose accuracy is budgeted
   so the total realization error stays within eps/2;
4. prepend the rescale map as one extra hidden layer (lossless because
   ReLU fixes [1/4, 3/4]);
5. for vector targets, build components under a shared plan and stack them.

The even eps/2 : eps/2 split keeps both halves independently measurable:
certificates record the interpolant gap and the realization gap next to
the end-to-end sup error.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .blocks import (
    Aff,
    BuildLimitError,
    NetBuilder,
    mult_gadget,
    mult_stages_for_accuracy,
    tent_gadget,
)
from .activations import Activation
from .interpolant import PatchTable, interpolant_error_bound
from .network import Network, compose_affine_input, parallelize
from .targets import HolderTarget, multi_indices, rescale_map, rescale_target

__all__ = [
    "BuildLimits",
    "ApproxCertificate",
    "choose_grid_resolution",
    "build_relu_approximant",
    "convert_relu_to_pwl",
    "extend_depth",
]


@dataclass(frozen=True)
class BuildLimits:
    """Construction ceilings; exceeding one raises BuildLimitError."""

    max_grid_points: int = 200_000
    max_units: int = 2_000_000


@dataclass
class ApproxCertificate:
    """Measured-error certificate plus size budgets for one build.

    ``passed`` requires the dense-grid sup error to be at most the
    requested accuracy.  Budgets are envelope shapes (depth ~ log(1/eps),
    width ~ eps^(-d/s), nonzeros ~ eps^(-d/s) log(1/eps), magnitude ~
    eps^(-4(d/s+1))) evaluated with constants recorded from a reference
    build of the same target, so they are comparable across accuracy
    levels of one target but not across targets.
    """

    target: str
    s: float
    epsilon_requested: float
    sup_error_measured: float
    probe_count: int
    depth: int
    width: int
    sparsity: int
    max_abs: float
    budget_depth: float
    budget_width: float
    budget_sparsity: float
    budget_max_abs: float
    passed: bool
    grid_resolution: int
    product_accuracy: int
    interpolant_error_measured: float
    realization_error_measured: float
    interpolant_error_bound: float

    def to_json_obj(self) -> dict:
        out = dict(self.__dict__)
        out["status"] = "PASS" if self.passed else "FAIL"
        return out


def _log_plus(x: float) -> float:
    return max(1.0, math.log(x))


def choose_grid_resolution(K: float, s: float, eps: float) -> int:
    """Smallest resolution making the interpolant bound at most eps/2."""
    if not 0.0 < eps < 1.0:
        raise ValueError("eps must lie in (0, 1)")
    return max(4, math.ceil((2.0 * 3.0**s * K / eps) ** (1.0 / s)))


def _monomial_transfer(betas: list[tuple[int, ...]]) -> np.ndarray:
    """Transfer matrix from (2v - 1)-monomial to v-monomial coefficients.

    Each (2v - 1)^beta expands as sum_{gamma <= beta} T[beta, gamma] v^gamma
    with T = prod_j binom(beta_j, gamma_j) 2^gamma_j (-1)^(beta_j - gamma_j).
    """
    n = len(betas)
    t = np.zeros((n, n))
    index = {b: i for i, b in enumerate(betas)}
    for i, beta in enumerate(betas):
        ranges = [range(bj + 1) for bj in beta]
        for gamma in _product_indices(ranges):
            w = 1.0
            for bj, gj in zip(beta, gamma):
                w *= math.comb(bj, gj) * 2.0**gj * (-1.0) ** (bj - gj)
            t[i, index[tuple(gamma)]] += w
    return t


def _product_indices(ranges):
    if not ranges:
        yield ()
        return
    for head in ranges[0]:
        for tail in _product_indices(ranges[1:]):
            yield (head,) + tail


def _recenter_coefficients(table: PatchTable) -> np.ndarray:
    """Patch coefficients over grid-centered normalized monomials.

    Patch gi carries the polynomial sum_beta c_beta (x - center)^beta with
    the expansion center possibly projected away from the grid point z.
    Recentring at z ((x - c) = (x - z) + delta) and substituting
    x - z = (2v - 1) / M with the normalized factor v = (M (x - z) + 1) / 2
    yields coefficients over v-monomials.  The 1/M^|gamma| scale is what
    keeps the product-error mass small.
    """
    betas = table.betas
    index = {b: i for i, b in enumerate(betas)}
    m = table.resolution
    delta = table.centers - table.eff_centers  # z - c, zero for usable points
    coeffs = table.coeffs
    recentred = np.zeros_like(coeffs)
    for i, beta in enumerate(betas):
        for gamma in _product_indices([range(bj + 1) for bj in beta]):
            w = math.prod(math.comb(bj, gj) for bj, gj in zip(beta, gamma))
            shift = np.ones(coeffs.shape[0])
            for j, (bj, gj) in enumerate(zip(beta, gamma)):
                if bj - gj:
                    shift = shift * delta[:, j] ** (bj - gj)
            recentred[:, index[tuple(gamma)]] += w * coeffs[:, i] * shift
    orders = np.array([sum(b) for b in betas], dtype=float)
    scaled = recentred * (1.0 / m) ** orders
    return scaled @ _monomial_transfer(betas)


@dataclass
class _Plan:
    """Realization plan for one target on the unit cube."""

    table: PatchTable
    betas: list[tuple[int, ...]]
    ucoeffs: np.ndarray  # (grid points, multi-indices)
    mass: float
    product_accuracy: int  # 0 when no products are needed
    stages: int

    @property
    def resolution(self) -> int:
        return self.table.resolution


def _make_plan(g: HolderTarget, resolution: int, eps: float) -> _Plan:
    table = PatchTable(g, resolution)
    betas = table.betas
    ucoeffs = _recenter_coefficients(table)
    d = g.d_x
    orders = np.array([sum(b) for b in betas])
    # every approximate product leaks error scaled by its coefficient; the
    # tent product itself is exact only in one dimension
    if d == 1:
        mass = float(np.sum(np.abs(ucoeffs[:, orders >= 1])))
    else:
        mass = float(np.sum(np.abs(ucoeffs)))
    has_products = bool(np.any(ucoeffs[:, orders >= 1] != 0.0)) or d > 1
    if has_products and mass > 0.0:
        m_base = max(1, math.ceil(math.log2(mass / (eps / 2.0))))
        k_max = d + g.taylor_order
        accuracy = m_base + max(0, math.ceil(math.log2(k_max)))
        stages = mult_stages_for_accuracy(accuracy)
    else:
        accuracy = 0
        stages = 0
    return _Plan(table, betas, ucoeffs, mass, accuracy, stages)


def _build_unit_cube(builder: NetBuilder, plan: _Plan) -> Aff:
    """Emit one output row realizing the interpolant of the plan's target."""
    d = plan.table.spec.dim
    q = plan.table.target.taylor_order
    betas = plan.betas
    beta_index = {b: i for i, b in enumerate(betas)}
    xs = builder.inputs()
    total = Aff([], 0.0)

    m = float(plan.resolution)
    for gi in range(plan.table.centers.shape[0]):
        coeffs = plan.ucoeffs[gi]
        if not np.any(coeffs != 0.0):
            continue
        z = plan.table.centers[gi]

        hats = [tent_gadget(builder, xs[j], z[j], plan.resolution) for j in range(d)]
        hat_aff = Aff.of(hats[0])
        for j in range(1, d):
            hat_aff = mult_gadget(builder, Aff.of(hats[j]), hat_aff, plan.stages)

        needed: set[tuple[int, ...]] = set()
        for b in betas:
            if sum(b) >= 1 and coeffs[beta_index[b]] != 0.0:
                g2 = b
                while sum(g2) >= 1:
                    needed.add(g2)
                    g2 = _parent(g2)[0]
        v_affs: dict[int, Aff] = {}
        nodes: dict[tuple[int, ...], Aff] = {}
        for gamma in sorted(needed, key=lambda t: (sum(t), t)):
            parent, axis = _parent(gamma)
            base = hat_aff if sum(parent) == 0 else nodes[parent]
            if axis not in v_affs:
                # v = (M (x_axis - z_axis) + 1) / 2, clamped into [0, 1];
                # the clamp changes nothing on the tent support where the
                # factor matters and the tent itself vanishes elsewhere
                raw = Aff.of(xs[axis], m / 2.0, (1.0 - m * z[axis]) / 2.0)
                lo = builder.unit(raw)
                hi = builder.unit(raw.shifted(-1.0))
                v_affs[axis] = Aff([(lo, 1.0), (hi, -1.0)])
            nodes[gamma] = mult_gadget(builder, v_affs[axis], base, plan.stages)

        term = hat_aff.scaled(float(coeffs[beta_index[tuple([0] * d)]]))
        for gamma, aff in nodes.items():
            w = float(coeffs[beta_index[gamma]])
            if w != 0.0:
                term = term.plus(aff.scaled(w))
        total = total.plus(term)
    return total


def _parent(gamma: tuple[int, ...]) -> tuple[tuple[int, ...], int]:
    axis = max(j for j, v in enumerate(gamma) if v > 0)
    parent = tuple(v - (1 if j == axis else 0) for j, v in enumerate(gamma))
    return parent, axis


def _resolution_with_usable_grid(g: HolderTarget, base: int, limits: BuildLimits) -> int:
    """Bump the resolution until some grid point lands inside the domain."""
    res = base
    cap = 4 * base + 64
    while res <= cap:
        ok = all(
            math.ceil(lo * res - 1e-9) <= math.floor(hi * res + 1e-9)
            for lo, hi in zip(g.domain.lo, g.domain.hi)
        )
        if ok:
            if (res + 1) ** g.d_x > limits.max_grid_points:
                raise BuildLimitError("max_grid_points", limits.max_grid_points,
                                      (res + 1) ** g.d_x)
            return res
        res += 1
    raise ValueError("no grid resolution up to 4x the nominal choice hits the domain")


def _build_inner(target: HolderTarget, eps: float, limits: BuildLimits):
    """Unit-cube realization for the rescaled target; returns (net, info)."""
    g, scale = rescale_target(target)
    base = choose_grid_resolution(g.K, g.s, eps)
    resolution = _resolution_with_usable_grid(g, base, limits)
    plan = _make_plan(g, resolution, eps)
    builder = NetBuilder(g.d_x, max_units=limits.max_units)
    out = _build_unit_cube(builder, plan)
    if not out.terms:
        # identically-zero interpolant: keep an explicit zero row through one tent
        w0 = tent_gadget(builder, builder.inputs()[0], 0.0, resolution)
        out = Aff.of(w0, 0.0)
    net = builder.emit([out])
    return net, g, scale, plan


def build_relu_approximant(
    target: HolderTarget,
    eps: float,
    probe_count: int | None = None,
    limits: BuildLimits | None = None,
) -> tuple[Network, ApproxCertificate]:
    """Build a ReLU network within eps of the target, with a certificate.

    The returned certificate reports the dense-grid sup error against the
    target, the interpolant-only and realization-only gaps, the achieved
    sizes, and reference size budgets; ``passed`` is True exactly when the
    measured sup error is at most eps.
    """
    limits = limits or BuildLimits()
    if not 0.0 < eps < 1.0:
        raise ValueError("eps must lie in (0, 1)")

    if target.d_y > 1:
        return _build_vector(target, eps, probe_count, limits)

    net, g, scale, plan = _build_inner(target, eps, limits)
    matrix, offset, _ = rescale_map(target.domain)
    full = compose_affine_input(net, matrix, offset)

    if probe_count is None:
        probe_count = 100_000 if target.d_x == 1 else 90_000
    probes = target.domain.grid(probe_count)
    truth = target(probes)
    inner_pts = probes @ matrix.T + offset
    interp = np.empty(probes.shape[0])
    approx = np.empty(probes.shape[0])
    chunk = max(1, 20_000_000 // max(1, net.arch.width))
    for start in range(0, probes.shape[0], chunk):
        sl = slice(start, start + chunk)
        interp[sl] = plan.table(inner_pts[sl])
        approx[sl] = full.forward(probes[sl]).ravel()

    sup_err = float(np.max(np.abs(approx - truth)))
    interp_err = float(np.max(np.abs(interp - truth)))
    realize_err = float(np.max(np.abs(approx - interp)))
    stats = full.param_stats()
    consts = _reference_constants(target, limits)
    dx_over_s = target.d_x / target.s
    cert = ApproxCertificate(
        target=target.name,
        s=target.s,
        epsilon_requested=float(eps),
        sup_error_measured=sup_err,
        probe_count=int(probes.shape[0]),
        depth=stats["depth"],
        width=stats["width"],
        sparsity=stats["sparsity"],
        max_abs=stats["max_abs"],
        budget_depth=consts["L0"] * _log_plus(1.0 / eps),
        budget_width=consts["N0"] * eps**-dx_over_s,
        budget_sparsity=consts["S0"] * eps**-dx_over_s * _log_plus(1.0 / eps),
        budget_max_abs=consts["B0"] * eps ** (-4.0 * (dx_over_s + 1.0)),
        passed=sup_err <= eps,
        grid_resolution=plan.resolution,
        product_accuracy=plan.product_accuracy,
        interpolant_error_measured=interp_err,
        realization_error_measured=realize_err,
        interpolant_error_bound=interpolant_error_bound(g.K, g.s, plan.resolution),
    )
    return full, cert


_REFERENCE_EPS = 0.5
_BUDGET_SLACK = 1.25
_constants_cache: dict[tuple, dict] = {}


def _reference_constants(target: HolderTarget, limits: BuildLimits) -> dict:
    """Size constants recorded from a coarse reference build of this target.

    L0/N0/S0/B0 are the achieved sizes at the reference accuracy divided by
    the envelope shape there, times a slack factor; they make the budget
    fields comparable across accuracy levels of the same target.
    """
    key = (target.name, round(target.s, 12), target.d_x)
    cached = _constants_cache.get(key)
    if cached is not None:
        return cached
    eps0 = _REFERENCE_EPS
    net, _, _, _ = _build_inner(target, eps0, limits)
    matrix, offset, _ = rescale_map(target.domain)
    stats = compose_affine_input(net, matrix, offset).param_stats()
    dx_over_s = target.d_x / target.s
    consts = {
        "L0": _BUDGET_SLACK * stats["depth"] / _log_plus(1.0 / eps0),
        "N0": _BUDGET_SLACK * stats["width"] * eps0**dx_over_s,
        "S0": _BUDGET_SLACK * stats["sparsity"] * eps0**dx_over_s / _log_plus(1.0 / eps0),
        "B0": _BUDGET_SLACK * max(stats["max_abs"], 1.0) * eps0 ** (4.0 * (dx_over_s + 1.0)),
    }
    _constants_cache[key] = consts
    return consts


def _build_vector(target, eps, probe_count, limits):
    if not target.components or len(target.components) != target.d_y:
        raise ValueError("a vector target needs scalar components")
    built = [_build_inner(c, eps, limits) for c in target.components]
    depth = max(net.arch.depth for net, _, _, _ in built)
    stacked = None
    for net, _, _, _ in built:
        net = extend_depth(net, depth)
        stacked = net if stacked is None else parallelize(stacked, net)
    matrix, offset, _ = rescale_map(target.domain)
    full = compose_affine_input(stacked, matrix, offset)

    if probe_count is None:
        probe_count = 20_000
    probes = target.domain.grid(probe_count)
    truth = np.stack([c(probes) for c in target.components], axis=1)
    approx = full.forward(probes)
    sup_err = float(np.max(np.abs(approx - truth)))
    inner_pts = probes @ matrix.T + offset
    interp = np.stack([plan.table(inner_pts) for _, _, _, plan in built], axis=1)
    stats = full.param_stats()
    dx_over_s = target.d_x / target.s
    consts = _reference_constants(target.components[0], limits)
    cert = ApproxCertificate(
        target=target.name,
        s=target.s,
        epsilon_requested=float(eps),
        sup_error_measured=sup_err,
        probe_count=int(probes.shape[0]),
        depth=stats["depth"],
        width=stats["width"],
        sparsity=stats["sparsity"],
        max_abs=stats["max_abs"],
        budget_depth=consts["L0"] * _log_plus(1.0 / eps),
        budget_width=target.d_y * consts["N0"] * eps**-dx_over_s,
        budget_sparsity=target.d_y * consts["S0"] * eps**-dx_over_s * _log_plus(1.0 / eps),
        budget_max_abs=consts["B0"] * eps ** (-4.0 * (dx_over_s + 1.0)),
        passed=sup_err <= eps,
        grid_resolution=max(plan.resolution for _, _, _, plan in built),
        product_accuracy=max(plan.product_accuracy for _, _, _, plan in built),
        interpolant_error_measured=float(np.max(np.abs(interp - truth))),
        realization_error_measured=float(np.max(np.abs(approx - interp))),
        interpolant_error_bound=max(
            interpolant_error_bound(g.K, g.s, plan.resolution) for _, g, _, plan in built
        ),
    )
    return full, cert


def extend_depth(net: Network, depth: int) -> Network:
    """Pad a ReLU network with identity layers (y = relu(y) - relu(-y))."""
    if net.activation.kind != "relu":
        raise ValueError("depth extension is defined for ReLU networks")
    if depth < net.arch.depth:
        raise ValueError("cannot shrink depth")
    if depth == net.arch.depth:
        return net
    d_y = net.arch.out_dim
    eye = np.eye(d_y)
    layers = list(net.layers)
    w_last, b_last = layers[-1]
    layers[-1] = (_stack_rows(w_last), np.concatenate([b_last, -b_last]))
    split = np.hstack([eye, -eye])
    for _ in range(depth - net.arch.depth - 1):
        layers.append((np.vstack([split, -split]), np.zeros(2 * d_y)))
    layers.append((split, np.zeros(d_y)))
    return Network(layers, net.activation, net.output_clamp)


def _stack_rows(w):
    import scipy.sparse as sp

    if sp.issparse(w):
        return sp.vstack([w, -w], format="csr")
    return np.vstack([w, -w])


# -- activation conversion ----------------------------------------------------


def convert_relu_to_pwl(net: Network, activation: Activation) -> Network:
    """Convert a ReLU network to another piecewise-linear activation exactly.

    For leaky ReLU with slope a the identity relu(t) = (s(t) + a s(-t)) / (1 - a^2)
    holds pointwise, so each hidden unit splits into a (t, -t) pair and every
    consumer reads the recombination; widths double exactly and the nonzero
    count stays within 4x plus the duplicated biases.  The converted network
    computes the same function everywhere.
    """
    if net.activation.kind != "relu":
        raise ValueError("conversion starts from a ReLU network")
    if activation.kind == "relu":
        return net
    if activation.kind != "leaky_relu":
        raise ValueError(
            f"conversion targets piecewise-linear activations only, got {activation.kind}"
        )
    a = float(activation.a)
    gain = 1.0 / (1.0 - a * a)
    depth = net.arch.depth
    if depth == 0:
        return Network(list(net.layers), activation, net.output_clamp)

    import scipy.sparse as sp

    def consume(w):
        # rewrite columns: relu(t_i) = gain * (s(t_i) + a * s(-t_i))
        if sp.issparse(w):
            return sp.hstack([w * gain, w * (a * gain)], format="csr")
        return np.hstack([w * gain, w * (a * gain)])

    def produce(w):
        if sp.issparse(w):
            return sp.vstack([w, -w], format="csr")
        return np.vstack([w, -w])

    layers = []
    for i, (w, b) in enumerate(net.layers):
        if i > 0:
            w = consume(w)
        if i < depth:
            w = produce(w)
            b = np.concatenate([b, -b])
        layers.append((w, b))
    return Network(layers, activation, net.output_clamp)
