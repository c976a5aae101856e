"""Local Taylor interpolation on a hat-function partition of unity.

The interpolant lives on the unit cube: given a target on a domain inside
[0, 1]^d and a grid resolution M >= 4, every grid point z = m / M carries
the Taylor polynomial of order floor(s) expanded at z itself when z lies in
the domain, or at the projected point z* otherwise.  The interpolant is the
sum of patch polynomials weighted by products of tent functions
(1 - M |x_j - z_j|)_+, which form a partition of unity on [0, 1]^d.

Targets on general boxes are first pulled into [1/4, 3/4]^d via
``targets.rescale_target``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .targets import Box, HolderTarget, multi_indices

__all__ = [
    "GridSpec",
    "build_grid",
    "project_grid_point",
    "interpolant_error_bound",
    "PatchTable",
    "interpolant_eval",
]


@dataclass(frozen=True)
class GridSpec:
    """Uniform grid {(m_1, ..., m_d) / resolution} over [0, 1]^d."""

    resolution: int
    dim: int

    def __post_init__(self):
        if self.resolution < 4:
            raise ValueError("grid resolution must be >= 4 (required by the error bound)")
        if self.dim < 1:
            raise ValueError("dimension must be >= 1")

    @property
    def n_points(self) -> int:
        return (self.resolution + 1) ** self.dim


def build_grid(spec: GridSpec) -> np.ndarray:
    """All grid points in lexicographic order, shape (n_points, dim)."""
    m = spec.resolution
    axes = [np.arange(m + 1)] * spec.dim
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([a.ravel() for a in mesh], axis=1).astype(float)
    return pts / m


def project_grid_point(z, usable) -> np.ndarray:
    """Deterministic projection of z onto a nonempty set of usable points.

    Minimizes the max-norm distance to z; among distance minimizers,
    minimizes the max-norm of the point itself; remaining ties resolve to
    the lexicographically smallest point.  (Uniqueness of the norm
    minimizer fails on symmetric domains, so the lexicographic tie-break is
    part of the contract.)
    """
    z = np.asarray(z, dtype=float).ravel()
    usable = np.atleast_2d(np.asarray(usable, dtype=float))
    if usable.size == 0:
        raise ValueError("usable set must be nonempty")
    dist = np.max(np.abs(usable - z), axis=1)
    tol = 1e-12
    best = dist <= np.min(dist) + tol
    candidates = usable[best]
    norms = np.max(np.abs(candidates), axis=1)
    best2 = norms <= np.min(norms) + tol
    candidates = candidates[best2]
    order = np.lexsort(candidates.T[::-1])
    return candidates[order[0]].copy()


def interpolant_error_bound(K: float, s: float, resolution: int) -> float:
    """Certified sup-error bound K 3^s / resolution^s (resolution >= 4)."""
    if resolution < 4:
        raise ValueError("grid resolution must be >= 4")
    return float(K) * 3.0**s * float(resolution) ** (-s)


def _axis_usable_range(box: Box, resolution: int) -> list[tuple[int, int]]:
    """Per-axis integer interval of grid indices inside the box."""
    out = []
    m = resolution
    for lo, hi in zip(box.lo, box.hi):
        a = math.ceil(lo * m - 1e-9)
        b = math.floor(hi * m + 1e-9)
        out.append((max(a, 0), min(b, m)))
    return out


class PatchTable:
    """Per-grid-point Taylor patches for a target inside the unit cube."""

    def __init__(self, target: HolderTarget, resolution: int):
        box = target.domain
        if any(l < -1e-9 or h > 1 + 1e-9 for l, h in zip(box.lo, box.hi)):
            raise ValueError("patch tables require a target domain inside [0, 1]^d")
        self.target = target
        self.resolution = int(resolution)
        self.spec = GridSpec(self.resolution, box.dim)
        self.betas = multi_indices(box.dim, target.taylor_order)
        d, m = box.dim, self.resolution

        ranges = _axis_usable_range(box, m)
        if any(a > b for a, b in ranges):
            raise ValueError(
                f"no grid point of resolution {m} lies inside the domain; "
                "increase the resolution"
            )

        grid = build_grid(self.spec)
        grid_m = np.rint(grid * m).astype(int)

        # Effective centers: a usable point keeps itself; anything else maps
        # to its projection.  For a box domain the projection reduces to
        # exact per-axis integer interval arithmetic (see project_grid_point
        # for the generic contract this must match).
        lo_idx = np.array([r[0] for r in ranges])
        hi_idx = np.array([r[1] for r in ranges])
        clamped = np.clip(grid_m, lo_idx, hi_idx)
        gap = np.abs(grid_m - clamped)  # per-axis integer distance
        dmax = gap.max(axis=1)  # max-norm distance to the usable box
        # smallest usable index within distance dmax of the original index;
        # on [0,1]^d coordinates are nonnegative, so this is also the
        # norm-minimizing, lexicographically smallest choice
        eff_m = np.maximum(lo_idx, grid_m - dmax[:, None])
        eff_m = np.minimum(eff_m, hi_idx)
        self.usable = dmax == 0
        self.centers = grid
        self.eff_centers = eff_m.astype(float) / m

        coeffs = np.empty((grid.shape[0], len(self.betas)))
        for j, beta in enumerate(self.betas):
            fact = math.prod(math.factorial(b) for b in beta)
            coeffs[:, j] = target.partial(beta, self.eff_centers) / fact
        self.coeffs = coeffs

    def patch_values(self, flat_index: np.ndarray, x: np.ndarray) -> np.ndarray:
        """Evaluate the patch polynomials indexed by flat_index at x."""
        diff = x - self.eff_centers[flat_index]
        out = np.zeros(x.shape[0])
        for j, beta in enumerate(self.betas):
            mono = np.ones(x.shape[0])
            for axis, power in enumerate(beta):
                if power:
                    mono = mono * diff[:, axis] ** power
            out += self.coeffs[flat_index, j] * mono
        return out

    def __call__(self, x) -> np.ndarray:
        """Vectorized interpolant evaluation on points in [0, 1]^d.

        Only the 2^d grid corners of the cell containing each point carry
        nonzero tent weight, so evaluation touches at most 2^d patches per
        point.
        """
        x = np.atleast_2d(np.asarray(x, dtype=float))
        if x.shape[1] != self.spec.dim:
            raise ValueError("point dimension does not match the table")
        if np.any(x < -1e-12) or np.any(x > 1 + 1e-12):
            raise ValueError("interpolant evaluation requires points in [0, 1]^d")
        m, d = self.resolution, self.spec.dim
        cell = np.clip(np.floor(x * m).astype(int), 0, m - 1)
        strides = (m + 1) ** np.arange(d - 1, -1, -1)
        out = np.zeros(x.shape[0])
        for corner in range(2**d):
            offset = np.array([(corner >> (d - 1 - j)) & 1 for j in range(d)])
            zm = cell + offset
            z = zm / m
            w = np.prod(np.maximum(0.0, 1.0 - m * np.abs(x - z)), axis=1)
            idx = zm @ strides
            out += w * self.patch_values(idx, x)
        return out


def interpolant_eval(target: HolderTarget, resolution: int, x) -> np.ndarray:
    """One-shot interpolant evaluation (builds a patch table each call)."""
    return PatchTable(target, resolution)(x)
