"""End-to-end experiments: constraint coefficients (direct and Picard), the
regularity dichotomy, and the rigidity-moment test."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .basis_builder import BasisFamily, build_basis, c2_bump
from .constraint_functionals import (
    CorrectorQ,
    HatData,
    build_Q,
    chi,
    eval_alpha,
    eval_beta,
    eval_l,
    source_cap_ladder,
)
from .dual_profiles import build_duals
from .grid_core import Field, SideData, SpaceTimeGrid, make_grid
from .mixed_solver import MixedProblem, solve_mixed

BOUNDED_THRESHOLD = 1.5


class PicardDivergenceError(RuntimeError):
    def __init__(self, message: str, history: list):
        super().__init__(message)
        self.history = history


@dataclass
class CoefficientVector:
    k_star: int
    c0: np.ndarray
    c1: np.ndarray
    qL: np.ndarray
    qR: np.ndarray
    c_minus1: float | None = None
    residual: float = 0.0

    def __post_init__(self):
        for a in (self.c0, self.c1, self.qL, self.qR):
            if len(a) != self.k_star or not np.all(np.isfinite(a)):
                raise ValueError("coefficient arrays must be finite with length k_star")

    def as_array(self) -> np.ndarray:
        parts = [self.c0, self.c1, self.qL, self.qR]
        if self.c_minus1 is not None:
            parts.append([self.c_minus1])
        return np.concatenate([np.asarray(p, dtype=float) for p in parts])

    @property
    def corrector(self) -> CorrectorQ:
        return CorrectorQ(np.asarray(self.qL), np.asarray(self.qR))


# ---------------------------------------------------------------------------
# constraint system
# ---------------------------------------------------------------------------

def constraint_rhs(j: int, k: int, G: Field, Q: CorrectorQ, duals, scale: float = 1.0) -> float:
    """α_j⁽ᵏ⁾ + β_j⁽ᵏ⁾ for the (scaled) source."""
    ladder = source_cap_ladder(G, k, scale)
    return eval_alpha(j, G, duals, k=k, scale=scale) + eval_beta(j, ladder, Q, duals, k=k)


def hat_from(base: HatData, basis: BasisFamily, c0, c1) -> HatData:
    hat = base
    for k in range(1, len(c0) + 1):
        hat = hat + basis.e(0, k).scaled(c0[k - 1]) + basis.e(1, k).scaled(c1[k - 1])
    return hat


def constraint_residuals(hat: HatData, G: Field, Q: CorrectorQ, duals, k_star: int,
                         scale: float = 1.0, form: str = "ibp") -> np.ndarray:
    out = []
    for k in range(1, k_star + 1):
        for j in (0, 1):
            out.append(eval_l(j, k, hat, duals, form) - constraint_rhs(j, k, G, Q, duals, scale))
    return np.array(out)


def solve_coefficients_direct(base: HatData, G: Field, basis: BasisFamily, duals, k_star: int,
                              scale: float = 1.0, refine: int = 2) -> CoefficientVector:
    """c_j⁽ᵏ⁾ = RHS_j⁽ᵏ⁾ − ℓ_j⁽ᵏ⁾[base], followed by a few defect-correction sweeps."""
    if basis.k_star < k_star:
        raise ValueError("basis family too small for k_star")
    Q = build_Q(G, k_star, scale)
    rhs = np.array([[constraint_rhs(j, k, G, Q, duals, scale) for j in (0, 1)] for k in range(1, k_star + 1)])
    c = np.array([[rhs[k - 1, j] - eval_l(j, k, base, duals, basis.form) for j in (0, 1)]
                  for k in range(1, k_star + 1)])
    res = np.zeros_like(c)
    for _ in range(refine + 1):
        hat = hat_from(base, basis, c[:, 0], c[:, 1])
        res = np.array([[rhs[k - 1, j] - eval_l(j, k, hat, duals, basis.form) for j in (0, 1)]
                        for k in range(1, k_star + 1)])
        if np.max(np.abs(res)) == 0:
            break
        c = c + res
    hat = hat_from(base, basis, c[:, 0], c[:, 1])
    res = np.array([[rhs[k - 1, j] - eval_l(j, k, hat, duals, basis.form) for j in (0, 1)]
                    for k in range(1, k_star + 1)])
    return CoefficientVector(k_star, c[:, 0].copy(), c[:, 1].copy(), Q.qL.copy(), Q.qR.copy(),
                             residual=float(np.max(np.abs(res))) if res.size else 0.0)


def assemble_data(base: HatData, coeffs: CoefficientVector, basis: BasisFamily) -> SideData:
    """(Ξ_L, Ξ_R) = (Ξ̂_L, Ξ̂_R) + (Q_L, Q_R)."""
    hat = hat_from(base, basis, coeffs.c0, coeffs.c1)
    Q = coeffs.corrector
    return SideData(hat.left + Q.left(hat.r), hat.right + Q.right(hat.r), hat.h)


# ---------------------------------------------------------------------------
# Picard loop
# ---------------------------------------------------------------------------

def linear_feedback(kappa: float = 10.0) -> Callable:
    """G(Ω) = κ L^{2/3} Ω: the rescaled source fed back from the solution."""

    def G_map(omega: Field, L: float) -> Field:
        return Field(omega.grid, kappa * L ** (2.0 / 3.0) * omega.values)

    return G_map


@dataclass
class PicardResult:
    coefficients: CoefficientVector
    history: list
    ratios: list
    converged: bool

    @property
    def contraction(self) -> float:
        """Geometric mean of all step ratios (single ratios oscillate)."""
        r = [x for x in self.ratios if np.isfinite(x) and x > 0]
        if not r:
            return 0.0
        return float(np.exp(np.mean(np.log(r))))


def solve_coefficients_picard(base: HatData, G_map: Callable, L: float, basis: BasisFamily, duals,
                              k_star: int, grid: SpaceTimeGrid, max_iter: int = 50, tol: float = 1e-10,
                              omega: float = 1.0, G0: Field | None = None) -> PicardResult:
    """A⁰ = 0 → data → solve_mixed → G = G_map(Ω, L) → direct coefficients → A¹ → ..."""
    if not L > 0:
        raise ValueError("L must be positive")
    if not 0 < omega <= 1:
        raise ValueError("under-relaxation must lie in (0, 1]")
    G0 = Field.zeros(grid) if G0 is None else G0
    A = CoefficientVector(k_star, *(np.zeros(k_star) for _ in range(4)))
    G = Field(grid, G0.values + G_map(Field.zeros(grid), L).values)
    history, ratios = [], []
    bad = 0
    for _ in range(max_iter):
        new = solve_coefficients_direct(base, G, basis, duals, k_star)
        if omega < 1:
            arr = (1 - omega) * A.as_array() + omega * new.as_array()
            new = CoefficientVector(k_star, *np.split(arr[: 4 * k_star], 4), residual=new.residual)
        step = float(np.max(np.abs(new.as_array() - A.as_array())))
        history.append(step)
        if len(history) > 1:
            ratio = step / history[-2] if history[-2] > 0 else 0.0
            ratios.append(ratio)
            bad = bad + 1 if ratio >= 1 else 0
            if bad >= 3:
                raise PicardDivergenceError(
                    f"Picard iteration not contracting (ratios {', '.join(f'{x:.3g}' for x in ratios[-3:])})",
                    history)
        A = new
        if step <= tol:
            return PicardResult(A, history, ratios, True)
        omega_field = solve_mixed(MixedProblem(grid, G, assemble_data(base, A, basis)))
        G = Field(grid, G0.values + G_map(omega_field, L).values)
    return PicardResult(A, history, ratios, False)


def toy_picard(nu: float, ell: float, Fbar: np.ndarray, Fpar: np.ndarray, h: float,
               max_iter: int = 200, tol: float = 1e-14):
    """Scalar model F(0) = ν + ℓ∫|F'|² with F = F̄ + ν̃ F∥, F̄(0) = 0, F∥(0) = 1."""
    dFb = np.gradient(Fbar, h, edge_order=2)
    dFp = np.gradient(Fpar, h, edge_order=2)

    def energy(v):
        return float(np.trapezoid((dFb + v * dFp) ** 2, dx=h))

    v = nu
    hist = [v]
    for _ in range(max_iter):
        v_new = nu + ell * energy(v)
        hist.append(v_new)
        if abs(v_new - v) <= tol:
            v = v_new
            break
        v = v_new
    return v, hist


def toy_nu1(nu: float, Fbar: np.ndarray, Fpar: np.ndarray, h: float) -> float:
    """Leading-order correction ∫|F̄'|² + 2ν F̄'F∥' + ν²|F∥'|²."""
    dFb = np.gradient(Fbar, h, edge_order=2)
    dFp = np.gradient(Fpar, h, edge_order=2)
    return float(np.trapezoid(dFb**2 + 2 * nu * dFb * dFp + nu**2 * dFp**2, dx=h))


# ---------------------------------------------------------------------------
# regularity under refinement
# ---------------------------------------------------------------------------

def dt_h1_norm(W: np.ndarray, grid: SpaceTimeGrid, k: int) -> float:
    """Discrete L²((0,1); H¹) norm of the k-th forward time difference quotient."""
    D = np.array(W, dtype=float)
    for _ in range(k):
        D = np.diff(D, axis=0) / grid.h_t
    h = grid.h_rho
    a = np.trapezoid(D**2, dx=h, axis=1)
    b = np.trapezoid((np.diff(D, axis=1) / h) ** 2, dx=h, axis=1)
    if k == 0:
        return float(np.sqrt(np.trapezoid(a + b, dx=grid.h_t)))
    # difference quotients live on the n_t − k cell midpoints: midpoint rule
    return float(np.sqrt(np.sum(a + b) * grid.h_t))


@dataclass
class RegularityReport:
    grids: list
    norms: np.ndarray          # [level, k-1]
    growth_ratios: np.ndarray  # [level-1, k-1]
    verdicts: list
    threshold: float = BOUNDED_THRESHOLD
    label: str = ""

    @property
    def growth_exponents(self) -> np.ndarray:
        """log2 of consecutive ratios, i.e. p in norm ~ h^(-p)."""
        with np.errstate(divide="ignore"):
            return np.log2(self.growth_ratios)

    @property
    def squared_increments(self) -> np.ndarray:
        return np.diff(self.norms**2, axis=0)

    def rows(self) -> list:
        out = []
        for lvl, g in enumerate(self.grids):
            for k in range(self.norms.shape[1]):
                ratio = self.growth_ratios[lvl - 1, k] if lvl > 0 else float("nan")
                out.append((lvl, k + 1, self.norms[lvl, k], ratio, self.verdicts[k]))
        return out

    def to_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write("level,k,norm,ratio,verdict\n")
            for lvl, k, n, r, v in self.rows():
                fh.write(f"{lvl},{k},{n:.17g},{r:.17g},{v}\n")


def _strides(levels: list) -> list:
    fine = levels[-1]
    out = []
    for g in levels:
        s = (fine.n_t - 1) // (g.n_t - 1)
        if g.R != fine.R or fine.coarsen(s) != g:
            raise ValueError(f"grid {g} does not nest into the finest level {fine}")
        out.append(s)
    return out


def regularity_report(data: SideData, G: Field, levels: list, k_star: int,
                      threshold: float = BOUNDED_THRESHOLD, label: str = "") -> RegularityReport:
    """Solve on every level (data and G injected from the finest grid) and
    measure ‖∂ₜᵏΩ‖_{L²H¹} for k = 1..k_star."""
    if len(levels) < 3:
        raise ValueError("need at least 3 refinement levels")
    if G.grid != levels[-1]:
        raise ValueError("G must live on the finest level")
    strides = _strides(levels)
    norms = np.zeros((len(levels), k_star))
    for lvl, (g, s) in enumerate(zip(levels, strides)):
        Gc = Field(g, G.values[::s, ::s])
        W = solve_mixed(MixedProblem(g, Gc, data.restrict(s)))
        for k in range(1, k_star + 1):
            norms[lvl, k - 1] = dt_h1_norm(W.values, g, k)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratios = np.where(norms[:-1] > 0, norms[1:] / np.where(norms[:-1] > 0, norms[:-1], 1), 1.0)
    ratios = np.where((norms[:-1] == 0) & (norms[1:] == 0), 1.0, ratios)
    verdicts = ["bounded" if ratios[-1, k] <= threshold else "diverging" for k in range(k_star)]
    return RegularityReport(list(levels), norms, ratios, verdicts, threshold, label)


# ---------------------------------------------------------------------------
# headline experiment
# ---------------------------------------------------------------------------

@dataclass
class DichotomyResult:
    constrained: RegularityReport
    violated: RegularityReport
    coefficients: CoefficientVector
    basis_condition: float
    trivial: bool = False  # zero data: both arms are expected bounded

    @property
    def success(self) -> bool:
        c = all(v == "bounded" for v in self.constrained.verdicts)
        if self.trivial:
            return c and all(v == "bounded" for v in self.violated.verdicts)
        return c and self.violated.verdicts[0] == "diverging"


def default_levels(n_levels: int = 4, n_t0: int = 33, n_rho0: int = 65, R: float = 8.0) -> list:
    return [make_grid((n_t0 - 1) * 2**i + 1, (n_rho0 - 1) * 2**i + 1, R) for i in range(n_levels)]


def default_base(r: np.ndarray, h: float) -> HatData:
    return HatData(c2_bump(r - 3.0), 0.7 * c2_bump(r - 2.0), h)


def default_source(grid: SpaceTimeGrid, amplitude: float = 0.0) -> Field:
    return Field.from_function(grid, lambda T, P: amplitude * np.exp(-((P - 0.5) ** 2)) * (1 + 0 * T))


def run_dichotomy(k_star: int = 1, levels: list | None = None, n_bumps: int = 24,
                  source_amplitude: float = 0.0, perturbation: float = 1.0,
                  threshold: float = BOUNDED_THRESHOLD, zero: bool = False) -> DichotomyResult:
    """Constrained arm vs. the same data with Ξ_L''(0) shifted by ``perturbation``."""
    levels = default_levels() if levels is None else levels
    fine = levels[-1]
    duals = build_duals(fine, k_max=k_star)
    basis = build_basis(k_star, duals, n_bumps)
    r, h = fine.r, fine.h_rho
    base = HatData.zeros_like(r.size, h) if zero else default_base(r, h)
    G = default_source(fine, 0.0 if zero else source_amplitude)
    coeffs = solve_coefficients_direct(base, G, basis, duals, k_star)
    data = assemble_data(base, coeffs, basis)
    bump = chi(r) * r**2 / 2.0
    violated_data = data if zero else SideData(data.left + perturbation * bump, data.right, h)
    rep_c = regularity_report(data, G, levels, k_star, threshold, "constrained")
    rep_v = regularity_report(violated_data, G, levels, k_star, threshold, "violated")
    return DichotomyResult(rep_c, rep_v, coeffs, basis.condition, trivial=zero)


# ---------------------------------------------------------------------------
# rigidity
# ---------------------------------------------------------------------------

@dataclass
class MomentsResult:
    moments: np.ndarray
    f_max: float
    trace: np.ndarray
    t: np.ndarray
    h: float
    mode: str
    sigma_min: float = float("nan")
    structurally_injective: bool | None = None
    g_defect: float = float("nan")
    identity_moments: np.ndarray | None = None
    identity_defect: float = float("nan")


def _strip_index(n_s):
    return lambda i, j: i * n_s + j


def _strip_pde_rows(n_t, n_s, ht, h, rho, add, row0):
    idx = _strip_index(n_s)
    r = row0
    for i in range(n_t - 1):
        for j in range(1, n_s - 1):
            # rho (f[i+1] - f[i]) / ht + D2 f[i] = 0
            add(r, idx(i + 1, j), rho[j] / ht)
            add(r, idx(i, j), -rho[j] / ht - 2.0 / h**2)
            add(r, idx(i, j - 1), 1.0 / h**2)
            add(r, idx(i, j + 1), 1.0 / h**2)
            r += 1
    return r


def rigidity_moments(epsilon: float, g, n_max: int = 4, n_t: int = 65, n_s: int | None = None,
                     R: float = 8.0, mode: str = "zero_caps") -> MomentsResult:
    """Moments ∫₀¹ tⁿ f(t, ε) dt of the strip problem (ρ∂ₜ + ∂ρ²)f = 0 on (0,1)×(ε,R).

    ``mode='zero_caps'``: f = 0 on both caps and at ρ = R, trace free. The
    discrete system is overdetermined; ``sigma_min > 0`` certifies that its
    only solution is f ≡ 0, so ``g`` cannot be attained (``g_defect``).

    ``mode='strip'``: trace g at ρ = ε, f(1,·) = 0, f(·,R) = 0; the t=0 cap h
    is solved for, and the moments are checked against the cap through
    α₀'' = ρh, αₙ'' = nρα_{n−1}, αₙ(ε) = ∫ₑ^R (s − ε) αₙ''(s) ds.
    """
    n_s = 2 * n_t - 1 if n_s is None else n_s
    t = np.linspace(0.0, 1.0, n_t)
    ht = t[1]
    rho = np.linspace(epsilon, R, n_s)
    h = rho[1] - rho[0]
    gv = np.asarray(g(t) if callable(g) else g, dtype=float) * np.ones(n_t)
    idx = _strip_index(n_s)
    rows, cols, vals = [], [], []

    def add(r, c, v):
        rows.append(r)
        cols.append(c)
        vals.append(v)

    if mode == "zero_caps":
        r = _strip_pde_rows(n_t, n_s, ht, h, rho, add, 0)
        for j in range(n_s):
            add(r, idx(0, j), 1.0)
            add(r + 1, idx(n_t - 1, j), 1.0)
            r += 2
        for i in range(1, n_t - 1):
            add(r, idx(i, n_s - 1), 1.0)
            r += 1
        A = sp.csc_matrix((vals, (rows, cols)), shape=(r, n_t * n_s))
        AtA = (A.T @ A).tocsc()
        lu = spla.splu(AtA)
        f = lu.solve(np.asarray(A.T @ np.zeros(r))).reshape(n_t, n_s)
        try:
            lam = spla.eigsh(AtA, k=1, sigma=0.0, which="LM", return_eigenvectors=False)[0]
        except (RuntimeError, spla.ArpackError):  # pragma: no cover
            lam = float("nan")
        # Marching from the t=0 cap, row i fixes f[i+1, 1:] from f[i, :] and frees one
        # trace value; the t=1 cap then pins those values one by one through a
        # triangular system with pivots ∏ h_t / (ρ h²) ≠ 0.  Needs n_s >= n_t.
        injective = bool(n_s >= n_t and rho[0] > 0)
        trace = f[:, 0]
        mom = np.array([np.trapezoid(t**n * trace, dx=ht) for n in range(n_max + 1)])
        return MomentsResult(mom, float(np.max(np.abs(f))), trace, t, max(h, ht), mode,
                             sigma_min=float(np.sqrt(max(lam, 0.0))), structurally_injective=injective,
                             g_defect=float(np.max(np.abs(trace - gv))))
    if mode != "strip":
        raise ValueError(f"unknown mode {mode!r}")
    r = _strip_pde_rows(n_t, n_s, ht, h, rho, add, 0)
    b = np.zeros(n_t * n_s)
    for i in range(n_t):
        add(r, idx(i, 0), 1.0)
        b[r] = gv[i]
        add(r + 1, idx(i, n_s - 1), 1.0)
        r += 2
    for j in range(1, n_s - 1):
        add(r, idx(n_t - 1, j), 1.0)
        r += 1
    A = sp.csc_matrix((vals, (rows, cols)), shape=(r, n_t * n_s))
    f = spla.spsolve(A, b).reshape(n_t, n_s)
    trace = f[:, 0]
    mom = np.array([np.trapezoid(t**n * trace, dx=ht) for n in range(n_max + 1)])
    cap = f[0]
    S = rho * cap
    ident = []
    for n in range(n_max + 1):
        if n > 0:
            S = n * rho * alpha
        # alpha(ρ) = ∫_ρ^R (s − ρ) S(s) ds, evaluated on every node
        w = S.copy()
        c0 = np.concatenate([[0.0], np.cumsum(0.5 * (w[1:] + w[:-1]) * h)])
        c1 = np.concatenate([[0.0], np.cumsum(0.5 * (rho[1:] * w[1:] + rho[:-1] * w[:-1]) * h)])
        alpha = (c1[-1] - c1) - rho * (c0[-1] - c0)
        ident.append(alpha[0])
    ident = np.array(ident)
    return MomentsResult(mom, float(np.max(np.abs(f))), trace, t, max(h, ht), mode,
                         g_defect=float(np.max(np.abs(trace - gv))), identity_moments=ident,
                         identity_defect=float(np.max(np.abs(ident - mom))))
