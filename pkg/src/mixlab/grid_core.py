"""Space-time grids, fields, one-sided cap data and the shared
finite-difference and quadrature helpers.

Conventions
-----------
The ρ-axis is uniform on [-R, R] with an odd node count so that ρ = 0 is a
node (``interface_index``). One-sided samples ("half-line" arrays) live on
r_j = j * h_rho, j = 0 .. m, where m = interface_index. Left-cap samples are
Ξ_L(r); right-cap samples are stored reflected, Ξ_R(-r).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np


class GridError(ValueError):
    """Raised for illegal grid parameters or mismatched shapes."""


@dataclass(frozen=True)
class SpaceTimeGrid:
    n_t: int
    n_rho: int
    R: float

    def __post_init__(self):
        if int(self.n_t) != self.n_t or int(self.n_rho) != self.n_rho:
            raise GridError("grid sizes must be integers")
        if self.n_t < 2:
            raise GridError(f"n_t must be >= 2, got {self.n_t}")
        if self.n_rho < 3:
            raise GridError(f"n_rho must be >= 3, got {self.n_rho}")
        if self.n_rho % 2 == 0:
            raise GridError(f"n_rho must be odd so that rho=0 is a node, got {self.n_rho}")
        if not (self.R > 0 and np.isfinite(self.R)):
            raise GridError(f"R must be positive, got {self.R}")

    @property
    def h_t(self) -> float:
        return 1.0 / (self.n_t - 1)

    @property
    def h_rho(self) -> float:
        return 2.0 * self.R / (self.n_rho - 1)

    @property
    def interface_index(self) -> int:
        return (self.n_rho - 1) // 2

    @cached_property
    def t(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, self.n_t)

    @cached_property
    def rho(self) -> np.ndarray:
        m = self.interface_index
        # symmetric construction keeps rho[m] == 0 exactly
        return np.arange(-m, m + 1) * self.h_rho

    @cached_property
    def r(self) -> np.ndarray:
        """Half-line nodes 0, h, ..., R."""
        return np.arange(self.interface_index + 1) * self.h_rho

    def mesh(self):
        return np.meshgrid(self.t, self.rho, indexing="ij")

    def coarsen(self, stride: int) -> "SpaceTimeGrid":
        """Grid obtained by keeping every ``stride``-th node in both directions."""
        if (self.n_t - 1) % stride or (self.interface_index % stride):
            raise GridError(f"stride {stride} does not nest into {self}")
        return SpaceTimeGrid((self.n_t - 1) // stride + 1, 2 * (self.interface_index // stride) + 1, self.R)


def make_grid(n_t: int, n_rho: int, R: float = 8.0) -> SpaceTimeGrid:
    return SpaceTimeGrid(int(n_t), int(n_rho), float(R))


@dataclass(frozen=True)
class Field:
    grid: SpaceTimeGrid
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != (self.grid.n_t, self.grid.n_rho):
            raise GridError(f"field shape {v.shape} does not match grid ({self.grid.n_t}, {self.grid.n_rho})")
        if not np.all(np.isfinite(v)):
            raise GridError("field contains non-finite values")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @classmethod
    def zeros(cls, grid: SpaceTimeGrid) -> "Field":
        return cls(grid, np.zeros((grid.n_t, grid.n_rho)))

    @classmethod
    def from_function(cls, grid: SpaceTimeGrid, fn) -> "Field":
        T, P = grid.mesh()
        return cls(grid, np.broadcast_to(fn(T, P), T.shape).astype(float))

    def left_cap(self) -> np.ndarray:
        """Half-line samples of the t=0 row on rho >= 0."""
        return self.values[0, self.grid.interface_index:].copy()

    def right_cap(self) -> np.ndarray:
        """Reflected half-line samples of the t=1 row on rho <= 0."""
        return reflect(self.values[-1, : self.grid.interface_index + 1])

    def to_csv(self, path) -> None:
        write_field_csv(path, self)


def reflect(samples: np.ndarray) -> np.ndarray:
    """Map samples on (-R..0) to the half-line coordinate r = -rho and back."""
    return np.asarray(samples)[::-1].copy()


@dataclass(frozen=True)
class SideData:
    """Cap data (Ξ_L at t=0 on rho>0, Ξ_R at t=1 on rho<0) on half-line nodes."""

    left: np.ndarray
    right: np.ndarray
    h: float
    decay_tol: float = 1e-10
    decays: bool = field(init=False)

    def __post_init__(self):
        L = np.asarray(self.left, dtype=float).copy()
        Rt = np.asarray(self.right, dtype=float).copy()
        if L.shape != Rt.shape or L.ndim != 1:
            raise GridError("left/right samples must be 1-D arrays of equal length")
        if not (np.all(np.isfinite(L)) and np.all(np.isfinite(Rt))):
            raise GridError("side data contains non-finite values")
        L.setflags(write=False)
        Rt.setflags(write=False)
        object.__setattr__(self, "left", L)
        object.__setattr__(self, "right", Rt)
        object.__setattr__(self, "decays", bool(abs(L[-1]) <= self.decay_tol and abs(Rt[-1]) <= self.decay_tol))

    @classmethod
    def zeros(cls, grid: SpaceTimeGrid) -> "SideData":
        z = np.zeros(grid.interface_index + 1)
        return cls(z, z, grid.h_rho)

    @classmethod
    def from_functions(cls, grid: SpaceTimeGrid, left_fn, right_fn) -> "SideData":
        """``left_fn(r)`` gives Ξ_L(r); ``right_fn(rho)`` is evaluated at rho = -r."""
        r = grid.r
        return cls(np.broadcast_to(left_fn(r), r.shape), np.broadcast_to(right_fn(-r), r.shape), grid.h_rho)

    @property
    def r(self) -> np.ndarray:
        return np.arange(self.left.size) * self.h

    def full_left(self, grid: SpaceTimeGrid) -> np.ndarray:
        out = np.zeros(grid.n_rho)
        out[grid.interface_index:] = self.left
        return out

    def full_right(self, grid: SpaceTimeGrid) -> np.ndarray:
        out = np.zeros(grid.n_rho)
        out[: grid.interface_index + 1] = reflect(self.right)
        return out

    def restrict(self, stride: int) -> "SideData":
        return SideData(self.left[::stride], self.right[::stride], self.h * stride, self.decay_tol)

    def __add__(self, other: "SideData") -> "SideData":
        return SideData(self.left + other.left, self.right + other.right, self.h, self.decay_tol)

    def scaled(self, c: float) -> "SideData":
        return SideData(c * self.left, c * self.right, self.h, self.decay_tol)


# ---------------------------------------------------------------------------
# calculus
# ---------------------------------------------------------------------------

def d2(samples: np.ndarray, h: float, axis: int = -1) -> np.ndarray:
    """Second derivative: centered 3-point inside, 4-point one-sided (2nd order) at ends."""
    f = np.moveaxis(np.asarray(samples, dtype=float), axis, -1)
    if f.shape[-1] < 4:
        if f.shape[-1] == 3:
            g = np.empty_like(f)
            g[...] = ((f[..., 2] - 2 * f[..., 1] + f[..., 0]) / h**2)[..., None]
            return np.moveaxis(g, -1, axis)
        raise GridError("need at least 3 samples for a second derivative")
    g = np.empty_like(f)
    g[..., 1:-1] = (f[..., 2:] - 2 * f[..., 1:-1] + f[..., :-2]) / h**2
    g[..., 0] = (2 * f[..., 0] - 5 * f[..., 1] + 4 * f[..., 2] - f[..., 3]) / h**2
    g[..., -1] = (2 * f[..., -1] - 5 * f[..., -2] + 4 * f[..., -3] - f[..., -4]) / h**2
    return np.moveaxis(g, -1, axis)


def second_derivative_rho(f: Field) -> Field:
    return Field(f.grid, d2(f.values, f.grid.h_rho, axis=1))


def trapezoid_weights(n: int, h: float) -> np.ndarray:
    w = np.full(n, h)
    w[0] *= 0.5
    w[-1] *= 0.5
    return w


def integrate_halfline(trace: np.ndarray, weight: np.ndarray, h: float) -> float:
    """Composite trapezoid value of ∫ trace * weight on uniform nodes of spacing h."""
    a = np.asarray(trace, dtype=float)
    b = np.asarray(weight, dtype=float)
    if a.shape != b.shape:
        raise GridError(f"mismatched sample counts {a.shape} vs {b.shape}")
    if a.size < 2:
        return 0.0
    return float(np.dot(trapezoid_weights(a.size, h), a * b))


def integrate_spacetime(grid: SpaceTimeGrid, values: np.ndarray) -> float:
    return float(np.trapezoid(np.trapezoid(values, dx=grid.h_rho, axis=1), dx=grid.h_t))


# ---------------------------------------------------------------------------
# I/O
# ---------------------------------------------------------------------------

def write_field_csv(path, f: Field) -> None:
    T, P = f.grid.mesh()
    with open(path, "w") as fh:
        fh.write("t,rho,value\n")
        for t, p, v in zip(T.ravel(), P.ravel(), f.values.ravel() + 0.0):  # + 0.0 folds -0 into 0
            fh.write(f"{t:.17g},{p:.17g},{v:.17g}\n")


def read_field_csv(path, grid: SpaceTimeGrid) -> Field:
    data = np.loadtxt(path, delimiter=",", skiprows=1)
    return Field(grid, data[:, 2].reshape(grid.n_t, grid.n_rho))
