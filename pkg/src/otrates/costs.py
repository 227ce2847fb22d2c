"""Ground cost specifications and cost-matrix assembly."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

COST_KINDS = ("quadratic", "notwist", "matrix")


@dataclass(frozen=True)
class CostSpec:
    """Ground cost on atom coordinates, or an explicit matrix.

    kind="quadratic": c(x, y) = |x - y|^2, any dimension.
    kind="notwist":   c(x, y) = (y - x)^2 for y >= x, else 0 (scalar atoms only).
    kind="matrix":    c is given entrywise; atoms are addressed by index.
    """

    kind: str
    matrix: np.ndarray | None = field(default=None)

    def __post_init__(self):
        if self.kind not in COST_KINDS:
            raise ValueError(f"unknown cost kind {self.kind!r}")
        if self.kind == "matrix":
            if self.matrix is None:
                raise ValueError("matrix cost requires a payload")
            m = np.asarray(self.matrix, dtype=float)
            if m.ndim != 2:
                raise ValueError("cost matrix must be 2-dimensional")
            if not np.all(np.isfinite(m)) or np.any(m < 0):
                raise ValueError("cost matrix entries must be finite and nonnegative")
            object.__setattr__(self, "matrix", m)
        elif self.matrix is not None:
            raise ValueError(f"{self.kind} cost takes no matrix payload")


def eval_cost(spec: CostSpec, x, y) -> float:
    """Evaluate the cost at a single pair of atoms.

    For matrix costs, x and y are row/column indices.
    """
    if spec.kind == "quadratic":
        d = np.asarray(x, dtype=float) - np.asarray(y, dtype=float)
        return float(np.dot(np.atleast_1d(d), np.atleast_1d(d)))
    if spec.kind == "notwist":
        xf, yf = float(x), float(y)
        return (yf - xf) ** 2 if yf >= xf else 0.0
    i, j = int(x), int(y)
    n, m = spec.matrix.shape
    if not (0 <= i < n and 0 <= j < m):
        raise IndexError(f"cost index ({i},{j}) out of range for {n}x{m} matrix")
    return float(spec.matrix[i, j])


def cost_matrix(spec: CostSpec, x_points: np.ndarray, y_points: np.ndarray) -> np.ndarray:
    """Dense cost matrix over given atom coordinates (or labels for matrix kind)."""
    if spec.kind == "matrix":
        n, m = spec.matrix.shape
        if len(x_points) != n or len(y_points) != m:
            raise ValueError(
                f"matrix cost is {n}x{m} but measures have {len(x_points)}x{len(y_points)} atoms"
            )
        return spec.matrix.copy()
    xs = np.asarray(x_points, dtype=float)
    ys = np.asarray(y_points, dtype=float)
    if xs.ndim == 1:
        xs = xs[:, None]
    if ys.ndim == 1:
        ys = ys[:, None]
    if spec.kind == "quadratic":
        diff = xs[:, None, :] - ys[None, :, :]
        return np.einsum("ijk,ijk->ij", diff, diff)
    # notwist is scalar-only
    if xs.shape[1] != 1 or ys.shape[1] != 1:
        raise ValueError("notwist cost is defined for scalar atoms only")
    diff = ys[None, :, 0] - xs[:, 0, None]
    return np.where(diff >= 0.0, diff**2, 0.0)
