"""Discrete measures, couplings, and support sets.

All types are immutable after construction and validated eagerly, so any
instance passed around downstream is known to satisfy its invariants.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

WEIGHT_SUM_TOL = 1e-12
MARGINAL_REL_TOL = 1e-8
SUPPORT_THRESHOLD_DEFAULT = 1e-6


@dataclass(frozen=True)
class DiscreteMeasure:
    """Finitely supported probability measure: distinct atoms with positive weights."""

    points: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        w = np.asarray(self.weights, dtype=float)
        if pts.shape[0] != w.shape[0]:
            raise ValueError("points and weights must have equal length")
        if pts.shape[0] == 0:
            raise ValueError("measure needs at least one atom")
        if np.any(w <= 0):
            raise ValueError("weights must be strictly positive")
        if abs(w.sum() - 1.0) > WEIGHT_SUM_TOL:
            raise ValueError(f"weights sum to {w.sum()!r}, not 1")
        rows = pts[:, None] if pts.ndim == 1 else pts
        if len({tuple(r) for r in rows}) != len(rows):
            raise ValueError("atoms must be pairwise distinct")
        pts.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "weights", w)

    @property
    def size(self) -> int:
        return self.points.shape[0]


def build_measure(points, weights) -> DiscreteMeasure:
    """Normalize weights to sum 1 and drop zero-weight atoms.

    1-d point sets are stored in ascending coordinate order; higher-dimensional
    atoms keep their input order.
    """
    pts = np.asarray(points, dtype=float)
    w = np.asarray(weights, dtype=float)
    if pts.shape[0] != w.shape[0]:
        raise ValueError("points and weights must have equal length")
    if pts.shape[0] == 0:
        raise ValueError("empty input")
    if np.any(w < 0):
        raise ValueError("weights must be nonnegative")
    total = w.sum()
    if total <= 0:
        raise ValueError("weights must not all be zero")
    keep = w > 0
    pts, w = pts[keep], w[keep] / total
    if pts.ndim == 1:
        order = np.argsort(pts, kind="stable")
        pts, w = pts[order], w[order]
    # tiny renormalization so the sum is exact after float division
    w = w / w.sum()
    return DiscreteMeasure(pts, w)


@dataclass(frozen=True)
class Coupling:
    """Nonnegative mass matrix whose marginals are the two reference measures."""

    mass: np.ndarray
    mu_ref: DiscreteMeasure
    nu_ref: DiscreteMeasure

    def __post_init__(self):
        m = np.asarray(self.mass, dtype=float)
        if m.shape != (self.mu_ref.size, self.nu_ref.size):
            raise ValueError(f"mass shape {m.shape} does not match marginals")
        if np.any(m < 0):
            raise ValueError("coupling mass must be nonnegative")
        row_err = np.abs(m.sum(axis=1) - self.mu_ref.weights) / self.mu_ref.weights
        col_err = np.abs(m.sum(axis=0) - self.nu_ref.weights) / self.nu_ref.weights
        if row_err.max() > MARGINAL_REL_TOL or col_err.max() > MARGINAL_REL_TOL:
            raise ValueError(
                f"marginal mismatch: row rel err {row_err.max():.3e}, "
                f"col rel err {col_err.max():.3e}"
            )
        if abs(m.sum() - 1.0) > WEIGHT_SUM_TOL:
            raise ValueError(f"total mass {m.sum()!r} differs from 1")
        m.setflags(write=False)
        object.__setattr__(self, "mass", m)

    @property
    def shape(self) -> tuple[int, int]:
        return self.mass.shape


def product_coupling(mu: DiscreteMeasure, nu: DiscreteMeasure) -> Coupling:
    return Coupling(np.outer(mu.weights, nu.weights), mu, nu)


def marginals(coupling: Coupling) -> tuple[DiscreteMeasure, DiscreteMeasure]:
    """Row-sum and column-sum measures of a coupling."""
    row = coupling.mass.sum(axis=1)
    col = coupling.mass.sum(axis=0)
    return (
        build_measure(coupling.mu_ref.points, row),
        build_measure(coupling.nu_ref.points, col),
    )


@dataclass(frozen=True)
class SupportSet:
    """Index pairs of a coupling support, with projections onto each side.

    graph_map is present exactly when the pairs are the graph of a map on the
    first coordinate (one pair per row index).
    """

    pairs: tuple[tuple[int, int], ...]
    x_proj: tuple[int, ...] = field(init=False)
    y_proj: tuple[int, ...] = field(init=False)
    graph_map: dict[int, int] | None = field(init=False)

    def __post_init__(self):
        pairs = tuple((int(i), int(j)) for i, j in self.pairs)
        if not pairs:
            raise ValueError("support must be nonempty")
        if len(set(pairs)) != len(pairs):
            raise ValueError("duplicate support pairs")
        object.__setattr__(self, "pairs", pairs)
        object.__setattr__(self, "x_proj", tuple(sorted({i for i, _ in pairs})))
        object.__setattr__(self, "y_proj", tuple(sorted({j for _, j in pairs})))
        gmap = None
        if len(self.x_proj) == len(pairs):
            gmap = {i: j for i, j in sorted(pairs)}
        object.__setattr__(self, "graph_map", gmap)

    def __len__(self) -> int:
        return len(self.pairs)

    def __contains__(self, pair) -> bool:
        return (int(pair[0]), int(pair[1])) in set(self.pairs)


def extract_support(coupling: Coupling, threshold: float = SUPPORT_THRESHOLD_DEFAULT) -> SupportSet:
    """Cells whose mass exceeds `threshold` times the maximum cell mass."""
    if not 0.0 < threshold < 1.0:
        raise ValueError("threshold must lie in (0, 1)")
    cut = threshold * coupling.mass.max()
    idx = np.argwhere(coupling.mass > cut)
    if idx.size == 0:
        raise ValueError("threshold too high: empty support")
    return SupportSet(tuple(map(tuple, idx)))


def relative_entropy(pi: Coupling, ref: Coupling) -> float:
    """Sum of pi * log(pi/ref), with 0 log 0 = 0; +inf if pi charges a ref-null cell."""
    p = pi.mass
    q = ref.mass
    if p.shape != q.shape:
        raise ValueError("couplings must have the same shape")
    pos = p > 0
    if np.any(q[pos] == 0):
        return float("inf")
    return float(np.sum(p[pos] * np.log(p[pos] / q[pos])))
