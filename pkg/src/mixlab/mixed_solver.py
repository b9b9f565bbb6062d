"""Global space-time solves for the mixed-type equation

    rho * dt(Omega) - d_rho^2(Omega) = scale * G   on (0,1) x (-R, R)

(forward in t for rho > 0, backward for rho < 0) and for its adjoint with a
prescribed value/derivative jump across rho = 0.

Time differences are one-sided and upwinded by the sign of rho; space uses
the 3-point stencil. All unknowns go into one sparse system which is
factorized directly (SuperLU); an ILU-preconditioned GMRES path exists for
grids too large to factor.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import TYPE_CHECKING

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import _kernels
from .grid_core import Field, GridError, SideData, SpaceTimeGrid, integrate_halfline, integrate_spacetime

if TYPE_CHECKING:  # pragma: no cover
    from .dual_profiles import DualProfile

COND_THRESHOLD = 1e12
DIRECT_LIMIT = 4_000_000  # unknowns above which "auto" switches to GMRES


class SolverError(RuntimeError):
    def __init__(self, message: str, estimate: float = float("nan")):
        super().__init__(message)
        self.estimate = estimate


@dataclass(frozen=True)
class MixedProblem:
    grid: SpaceTimeGrid
    G: Field
    data: SideData
    scale: float = 1.0

    def __post_init__(self):
        if self.G.grid != self.grid:
            raise GridError("source field lives on a different grid")
        if self.data.left.size != self.grid.interface_index + 1:
            raise GridError("side data not sampled on the grid's cap nodes")
        if not self.scale > 0:
            raise GridError("scale must be positive")


@dataclass(frozen=True)
class JumpSpec:
    value_jump: float
    derivative_jump: float

    def __post_init__(self):
        if not (np.isfinite(self.value_jump) and np.isfinite(self.derivative_jump)):
            raise ValueError("jumps must be finite")


PHI0_JUMPS = JumpSpec(0.0, -1.0)
PHI1_JUMPS = JumpSpec(1.0, 0.0)


def jumps_for(j: int) -> JumpSpec:
    if j not in (0, 1):
        raise ValueError("j must be 0 or 1")
    return PHI0_JUMPS if j == 0 else PHI1_JUMPS


# ---------------------------------------------------------------------------
# factorized operators
# ---------------------------------------------------------------------------

class LinearOperatorHandle:
    """An assembled sparse matrix plus a reusable factorization."""

    def __init__(self, A: sp.csc_matrix, method: str = "auto"):
        self.A = A
        n = A.shape[0]
        self.method = ("direct" if n <= DIRECT_LIMIT else "iterative") if method == "auto" else method
        self._lu = None
        self._ilu = None
        if self.method == "direct":
            try:
                self._lu = spla.splu(A)
            except RuntimeError as exc:  # exactly singular
                raise SolverError(f"factorization failed: {exc}", float("inf")) from exc
        elif self.method == "iterative":
            self._ilu = spla.spilu(A, drop_tol=1e-5, fill_factor=20)
        else:
            raise ValueError(f"unknown method {method!r}")
        self._cond = None

    def solve(self, b: np.ndarray) -> np.ndarray:
        if self._lu is not None:
            x = self._lu.solve(b)
        else:
            M = spla.LinearOperator(self.A.shape, self._ilu.solve)
            x, info = spla.gmres(self.A, b, M=M, rtol=1e-12, restart=200, maxiter=50)
            if info != 0:
                raise SolverError(f"GMRES did not converge (info={info})")
        if not np.all(np.isfinite(x)):
            raise SolverError("non-finite solution", float("inf"))
        return x

    def condition_estimate(self) -> float:
        """1-norm condition estimate (Hager/Higham via ``onenormest``)."""
        if self._cond is None:
            if self._lu is None:
                self._cond = float("nan")
            else:
                n = self.A.shape[0]
                inv = spla.LinearOperator(
                    (n, n),
                    matvec=lambda v: self._lu.solve(np.asarray(v).ravel()),
                    rmatvec=lambda v: self._lu.solve(np.asarray(v).ravel(), trans="T"),
                    dtype=float,
                )
                self._cond = float(spla.onenormest(self.A) * spla.onenormest(inv))
        return self._cond

    def check(self, threshold: float = COND_THRESHOLD) -> None:
        c = self.condition_estimate()
        if not c < threshold and np.isfinite(c):
            raise SolverError(f"system is near-singular (cond ~ {c:.3e})", c)


def assemble_primal(grid: SpaceTimeGrid) -> sp.csc_matrix:
    n = grid.n_t * grid.n_rho
    rows, cols, vals = _kernels.primal_triplets(grid.n_t, grid.n_rho, grid.h_t, grid.h_rho, grid.rho)
    return sp.csc_matrix((vals, (rows, cols)), shape=(n, n))


def assemble_adjoint(grid: SpaceTimeGrid) -> sp.csc_matrix:
    n = grid.n_t * (grid.n_rho + 1)
    rows, cols, vals = _kernels.adjoint_triplets(grid.n_t, grid.n_rho, grid.h_t, grid.h_rho, grid.rho)
    return sp.csc_matrix((vals, (rows, cols)), shape=(n, n))


@lru_cache(maxsize=8)
def primal_operator(grid: SpaceTimeGrid, method: str = "auto") -> LinearOperatorHandle:
    return LinearOperatorHandle(assemble_primal(grid), method)


@lru_cache(maxsize=8)
def adjoint_operator(grid: SpaceTimeGrid, method: str = "auto") -> LinearOperatorHandle:
    return LinearOperatorHandle(assemble_adjoint(grid), method)


def primal_rhs(p: MixedProblem) -> np.ndarray:
    g = p.grid
    m = g.interface_index
    b = p.scale * np.array(p.G.values, dtype=float)
    b[:, 0] = 0.0
    b[:, -1] = 0.0
    b[0, m + 1 : -1] = p.data.left[1:-1]
    b[-1, 1:m] = p.data.right[::-1][1:m]
    return b.ravel()


# ---------------------------------------------------------------------------
# public solves
# ---------------------------------------------------------------------------

def solve_mixed(p: MixedProblem, method: str = "auto", check_conditioning: bool = True) -> Field:
    """Solve the primal mixed-type problem; caps are imposed strongly."""
    op = primal_operator(p.grid, method)
    if check_conditioning:
        op.check()
    x = op.solve(primal_rhs(p))
    return Field(p.grid, x.reshape(p.grid.n_t, p.grid.n_rho))


@dataclass(frozen=True)
class AdjointField(Field):
    """Adjoint field with a doubled interface column.

    ``values[:, m]`` holds the mean of the two one-sided limits;
    ``minus``/``plus`` hold Φ(t, 0-) and Φ(t, 0+).
    """

    minus: np.ndarray = field(default=None)
    plus: np.ndarray = field(default=None)

    def left_half(self, i: int) -> np.ndarray:
        m = self.grid.interface_index
        return np.concatenate([[self.plus[i]], self.values[i, m + 1 :]])

    def right_half(self, i: int) -> np.ndarray:
        m = self.grid.interface_index
        return np.concatenate([[self.minus[i]], self.values[i, :m][::-1]])


def solve_adjoint(grid: SpaceTimeGrid, jumps: JumpSpec, method: str = "auto",
                  check_conditioning: bool = True) -> AdjointField:
    """Solve  -rho dt(Phi) - d_rho^2(Phi) = 0  with Φ(1,ρ>0)=0, Φ(0,ρ<0)=0,
    [Φ](t,0) = value_jump and [∂ρΦ](t,0) = derivative_jump."""
    op = adjoint_operator(grid, method)
    if check_conditioning:
        op.check()
    m = grid.interface_index
    W = grid.n_rho + 1
    b = np.zeros((grid.n_t, W))
    b[:, m] = jumps.value_jump
    b[:, m + 1] = jumps.derivative_jump
    X = op.solve(b.ravel()).reshape(grid.n_t, W)
    minus = X[:, m].copy()
    plus = X[:, m + 1].copy()
    vals = np.concatenate([X[:, :m], 0.5 * (minus + plus)[:, None], X[:, m + 2 :]], axis=1)
    return AdjointField(grid, vals, minus, plus)


def _as_field(phi) -> AdjointField:
    return phi.field if hasattr(phi, "field") else phi


def duality_terms(problem: MixedProblem, omega: Field, phi, j: int) -> tuple[float, float]:
    """Both sides of the duality identity

        ∫₀¹ ∂ρʲΩ(t,0) dt = ∫∫ scale G Φʲ + ∫₀^∞ ρ Ξ_L Φʲ_L − ∫_{−∞}^0 ρ Ξ_R Φʲ_R.
    """
    g = problem.grid
    if omega.grid != g:
        raise GridError("omega and problem live on different grids")
    F = _as_field(phi)
    if F.grid != g:
        raise GridError("dual profile lives on a different grid")
    m = g.interface_index
    h = g.h_rho
    if j == 0:
        col = omega.values[:, m]
    elif j == 1:
        col = (omega.values[:, m + 1] - omega.values[:, m - 1]) / (2 * h)
    else:
        raise ValueError("j must be 0 or 1")
    lhs = float(np.trapezoid(col, dx=g.h_t))
    r = g.r
    rhs = problem.scale * integrate_spacetime(g, problem.G.values * F.values)
    rhs += integrate_halfline(problem.data.left, r * F.left_half(0), h)
    # -∫_{-∞}^0 ρ Ξ_R Φ_R dρ  ==  +∫_0^∞ r Ξ_R(-r) Φ_R(-r) dr
    rhs += integrate_halfline(problem.data.right, r * F.right_half(g.n_t - 1), h)
    return lhs, rhs


def duality_residual(omega_problem: MixedProblem, omega: Field, phi, j: int,
                     relative: bool = False) -> float:
    lhs, rhs = duality_terms(omega_problem, omega, phi, j)
    res = abs(lhs - rhs)
    if relative:
        scale = max(abs(lhs), abs(rhs))
        return res / scale if scale > 0 else 0.0
    return res


def dump_triplets(A: sp.spmatrix, path) -> None:
    coo = A.tocoo()
    with open(path, "w") as fh:
        for r, c, v in zip(coo.row, coo.col, coo.data):
            fh.write(f"{r} {c} {v:.17g}\n")


# ---------------------------------------------------------------------------
# manufactured solutions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Manufactured:
    """Exact Ω* with its ∂ₜ and ∂ρ² so that G = ρ∂ₜΩ* − ∂ρ²Ω*."""

    name: str
    exact: object
    dt: object
    d2: object

    def problem(self, grid: SpaceTimeGrid) -> MixedProblem:
        G = Field.from_function(grid, lambda T, P: P * self.dt(T, P) - self.d2(T, P))
        data = SideData.from_functions(grid, lambda r: self.exact(0 * r, r), lambda p: self.exact(1 + 0 * p, p))
        return MixedProblem(grid, G, data)


def _gauss_linear(R: float) -> Manufactured:
    # linear in t: the time stencil is exact, the error is purely spatial
    return Manufactured("spatial",
                        lambda T, P: np.exp(-P**2) * (1 + T),
                        lambda T, P: np.exp(-P**2) + 0 * T,
                        lambda T, P: (4 * P**2 - 2) * np.exp(-P**2) * (1 + T))


def _parabola_sine(R: float) -> Manufactured:
    # quadratic in rho: the space stencil is exact, the error is purely temporal
    return Manufactured("temporal",
                        lambda T, P: (R * R - P * P) * np.sin(np.pi * T) / R**2,
                        lambda T, P: (R * R - P * P) * np.pi * np.cos(np.pi * T) / R**2,
                        lambda T, P: -2 * np.sin(np.pi * T) / R**2 + 0 * P)


def _gauss_shifted(R: float, c: float = 0.7) -> Manufactured:
    # off-centre so that ∂ρΩ*(t, 0) ≠ 0; used for the duality identity
    return Manufactured("shifted",
                        lambda T, P: np.exp(-((P - c) ** 2)) * (1 + T),
                        lambda T, P: np.exp(-((P - c) ** 2)) + 0 * T,
                        lambda T, P: (4 * (P - c) ** 2 - 2) * np.exp(-((P - c) ** 2)) * (1 + T))


MANUFACTURED = {"spatial": _gauss_linear, "temporal": _parabola_sine, "shifted": _gauss_shifted}

MMS_LEVELS = ((33, 65), (65, 129), (129, 257))


@dataclass
class ConvergenceStudy:
    name: str
    grids: list
    errors: np.ndarray
    orders: np.ndarray

    def lines(self) -> list:
        out = [f"manufactured case '{self.name}'"]
        for i, (g, e) in enumerate(zip(self.grids, self.errors)):
            o = f"  order {self.orders[i - 1]:.3f}" if i else ""
            out.append(f"  {g.n_t:4d} x {g.n_rho:4d}  L2 error {e:.6e}{o}")
        return out


def manufactured_study(name: str = "spatial", levels=MMS_LEVELS, R: float = 8.0) -> ConvergenceStudy:
    case = MANUFACTURED[name](R)
    grids, errs = [], []
    for nt, nr in levels:
        g = SpaceTimeGrid(nt, nr, R)
        W = solve_mixed(case.problem(g))
        T, P = g.mesh()
        errs.append(np.sqrt(integrate_spacetime(g, (W.values - case.exact(T, P)) ** 2)))
        grids.append(g)
    errs = np.array(errs)
    return ConvergenceStudy(name, grids, errs, np.log2(errs[:-1] / errs[1:]))


# ---------------------------------------------------------------------------
# interface diagnostics for dual profiles
# ---------------------------------------------------------------------------

def _one_sided(f0, f1, f2, h):
    return (-3 * f0 + 4 * f1 - f2) / (2 * h)


def interface_derivatives(phi, i: int) -> tuple[float, float]:
    """(∂ρΦ(tᵢ, 0−), ∂ρΦ(tᵢ, 0+)) from 2nd-order one-sided stencils."""
    F = _as_field(phi)
    h = F.grid.h_rho
    L = F.left_half(i)
    R = F.right_half(i)
    return float(-_one_sided(R[0], R[1], R[2], h)), float(_one_sided(L[0], L[1], L[2], h))


def jump_defects(phi, jumps: JumpSpec) -> tuple[float, float]:
    """Max over t of |[Φ] − a| and |[∂ρΦ] − b| at ρ = 0."""
    F = _as_field(phi)
    dv = np.max(np.abs(F.plus - F.minus - jumps.value_jump))
    dd = 0.0
    for i in range(F.grid.n_t):
        m, p = interface_derivatives(F, i)
        dd = max(dd, abs(p - m - jumps.derivative_jump))
    return float(dv), float(dd)


def cap_trace_values(phi) -> np.ndarray:
    """(Φ_L(0+), ∂ρΦ_L(0+), Φ_R(0−), ∂ρΦ_R(0−)) with Φ_L = Φ(0,·), Φ_R = Φ(1,·)."""
    F = _as_field(phi)
    n = F.grid.n_t
    _, dL = interface_derivatives(F, 0)
    dR, _ = interface_derivatives(F, n - 1)
    return np.array([F.plus[0], dL, F.minus[n - 1], dR])
