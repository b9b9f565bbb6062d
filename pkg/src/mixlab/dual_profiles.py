"""Dual profiles Φ⁰, Φ¹ and their ∂ₜᵏ cap-trace ladders.

The ladder uses the adjoint equation instead of time differencing. On the
left cap (ρ = r > 0) it is ∂ₜΦ = −∂ρ²Φ / ρ. On the right cap, in the
reflected coordinate r = −ρ, it is ∂ₜΦ = +∂r²Φ / r. Each level is
re-differentiated on r ≥ ε only; entries below ε are NaN.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid_core import SpaceTimeGrid, d2, trapezoid_weights
from .mixed_solver import AdjointField, jumps_for, solve_adjoint


class LadderError(ValueError):
    pass


@dataclass(frozen=True)
class DualProfile:
    j: int
    field: AdjointField
    left_traces: tuple
    right_traces: tuple
    epsilon: float

    @property
    def grid(self) -> SpaceTimeGrid:
        return self.field.grid

    @property
    def k_max(self) -> int:
        return len(self.left_traces) - 1

    @property
    def r(self) -> np.ndarray:
        return self.grid.r

    def valid(self) -> np.ndarray:
        return self.r >= self.epsilon - 1e-12 * self.grid.h_rho

    def traces(self, side: str) -> tuple:
        if side == "left":
            return self.left_traces
        if side == "right":
            return self.right_traces
        raise ValueError(f"side must be 'left' or 'right', got {side!r}")

    def time_difference_trace(self, side: str) -> np.ndarray:
        """First-order ∂ₜ estimate from the field itself (cross-check for k=1)."""
        F, ht = self.field, self.grid.h_t
        if side == "left":
            return (F.left_half(1) - F.left_half(0)) / ht
        n = self.grid.n_t
        return (F.right_half(n - 1) - F.right_half(n - 2)) / ht

    def to_csv(self, path, side: str) -> None:
        with open(path, "w") as fh:
            fh.write("k,rho,value\n")
            sign = 1.0 if side == "left" else -1.0
            for k, tr in enumerate(self.traces(side)):
                for rr, v in zip(self.r, tr):
                    if np.isfinite(v):
                        fh.write(f"{k},{sign * rr:.17g},{v:.17g}\n")


def _ladder(trace0: np.ndarray, r: np.ndarray, h: float, k_max: int, mask: np.ndarray, sign: float):
    out = [trace0.copy()]
    cur = trace0[mask]
    rr = r[mask]
    for _ in range(k_max):
        cur = sign * d2(cur, h) / rr
        full = np.full(r.shape, np.nan)
        full[mask] = cur
        out.append(full)
    return tuple(out)


def build_dual(grid: SpaceTimeGrid, j: int, k_max: int = 3, epsilon_ladder: float | None = None) -> DualProfile:
    if k_max < 0:
        raise ValueError("k_max must be >= 0")
    h = grid.h_rho
    eps = max(0.25, 4 * h) if epsilon_ladder is None else float(epsilon_ladder)
    if eps < 2 * h * (1 - 1e-12):
        raise LadderError(f"epsilon_ladder={eps:.4g} < 2*h_rho={2 * h:.4g}: division by small rho")
    F = solve_adjoint(grid, jumps_for(j))
    r = grid.r
    mask = r >= eps - 1e-12 * h
    if mask.sum() < 4:
        raise LadderError("ladder region has fewer than 4 nodes")
    left = _ladder(F.left_half(0), r, h, k_max, mask, -1.0)
    right = _ladder(F.right_half(grid.n_t - 1), r, h, k_max, mask, +1.0)
    return DualProfile(j, F, left, right, eps)


def build_duals(grid: SpaceTimeGrid, k_max: int = 3, epsilon_ladder: float | None = None):
    """Both profiles, (Φ⁰, Φ¹)."""
    return tuple(build_dual(grid, j, k_max, epsilon_ladder) for j in (0, 1))


def _functions(profiles, k_range, side, epsilon):
    fs = []
    for p in profiles:
        for k in k_range:
            if k > p.k_max:
                raise ValueError(f"ladder has k_max={p.k_max} < {k}")
            fs.append(p.traces(side)[k])
    return fs


def gram_matrix(profiles, k_range, side: str = "left", epsilon: float | None = None) -> np.ndarray:
    """Gram matrix of the traces {∂ₜᵏΦʲ : j = 0,1, k in k_range} in L²(r ≥ ε).

    ``side='both'`` uses the direct sum of the left and right inner products.
    """
    k_range = list(k_range)
    p0 = profiles[0]
    eps = max(p.epsilon for p in profiles) if epsilon is None else float(epsilon)
    if eps < max(p.epsilon for p in profiles) - 1e-12:
        raise LadderError("epsilon below the ladder validity region")
    r = p0.r
    mask = r >= eps - 1e-12 * p0.grid.h_rho
    w = trapezoid_weights(int(mask.sum()), p0.grid.h_rho)
    sides = ("left", "right") if side == "both" else (side,)
    n = len(profiles) * len(k_range)
    Gm = np.zeros((n, n))
    for s in sides:
        V = np.array([f[mask] for f in _functions(profiles, k_range, s, eps)])
        Gm += (V * w) @ V.T
    return 0.5 * (Gm + Gm.T)
