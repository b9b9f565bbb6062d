"""Constraint functionals ℓⱼ⁽ᵏ⁾, α, β, the D₁/D₃ ladder, the polynomial
corrector Q and the mass functional ℓ₋₁.

Sign conventions
----------------
All one-sided arrays are sampled on r = 0, h, ..., R. Right-cap arrays are
stored reflected (value at ρ = −r). Integrals over ρ < 0 are rewritten on r,
and every ρ-derivative of a right-cap quantity carries a factor (−1) per order.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import factorial

import numpy as np

from .grid_core import Field, SideData, d2, integrate_halfline, integrate_spacetime, trapezoid_weights


class SupportError(ValueError):
    pass


class SmoothnessError(ValueError):
    pass


# ---------------------------------------------------------------------------
# cutoff
# ---------------------------------------------------------------------------

def _smoothstep(x: np.ndarray) -> np.ndarray:
    # CDF of the uniform quadratic B-spline on [0, 1]: piecewise cubic, C²
    u = 3.0 * np.clip(x, 0.0, 1.0)
    out = np.where(u < 1, u**3 / 6.0, 0.0)
    mid = 1.0 / 6.0 - (u**3 - 1) / 3.0 + 1.5 * (u**2 - 1) - 1.5 * (u - 1)
    out = np.where((u >= 1) & (u < 2), mid, out)
    return np.where(u >= 2, 1.0 - (3.0 - u) ** 3 / 6.0, out)


def chi(r) -> np.ndarray:
    """C² cutoff: 1 on [0, 1), 0 on (2, ∞), piecewise cubic in between."""
    return 1.0 - _smoothstep(np.abs(np.asarray(r, dtype=float)) - 1.0)


# ---------------------------------------------------------------------------
# D1 / D3
# ---------------------------------------------------------------------------

def _side_sign(side: str) -> float:
    if side == "left":
        return 1.0
    if side == "right":
        return -1.0
    raise ValueError(f"side must be 'left' or 'right', got {side!r}")


def apply_D3(f: np.ndarray, h: float, chi_vals: np.ndarray | None = None, side: str = "left") -> np.ndarray:
    """𝒟₃f = (∂ρ²f − χ ∂ρ²f(0)) / ρ, with the ρ→0 limit ∂ρ³f(0)."""
    f = np.asarray(f, dtype=float)
    if f.size < 5:
        raise SmoothnessError("need at least 5 samples")
    r = np.arange(f.size) * h
    c = chi(r) if chi_vals is None else np.asarray(chi_vals, dtype=float)
    g = d2(f, h)
    out = np.empty_like(f)
    out[1:] = (g[1:] - c[1:] * g[0]) / r[1:]
    out[0] = (-2.5 * f[0] + 9 * f[1] - 12 * f[2] + 7 * f[3] - 1.5 * f[4]) / h**3
    if not np.isfinite(out[0]):
        raise SmoothnessError("non-finite limit at rho=0")
    return _side_sign(side) * out


def apply_D1(f: np.ndarray, h: float, chi_vals: np.ndarray | None = None, side: str = "left") -> np.ndarray:
    """𝒟₁f = (f − χ f(0)) / ρ, with the ρ→0 limit ∂ρf(0)."""
    f = np.asarray(f, dtype=float)
    if f.size < 3:
        raise SmoothnessError("need at least 3 samples")
    r = np.arange(f.size) * h
    c = chi(r) if chi_vals is None else np.asarray(chi_vals, dtype=float)
    out = np.empty_like(f)
    out[1:] = (f[1:] - c[1:] * f[0]) / r[1:]
    out[0] = (-3 * f[0] + 4 * f[1] - f[2]) / (2 * h)
    if not np.isfinite(out[0]):
        raise SmoothnessError("non-finite limit at rho=0")
    return _side_sign(side) * out


# ---------------------------------------------------------------------------
# data containers
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class HatData:
    """Compactly supported one-sided data in lo <= r <= hi (right stored reflected)."""

    left: np.ndarray
    right: np.ndarray
    h: float
    lo: float = 0.5
    hi: float | None = None

    def __post_init__(self):
        L = np.asarray(self.left, dtype=float).copy()
        Rt = np.asarray(self.right, dtype=float).copy()
        if L.shape != Rt.shape:
            raise ValueError("left/right sample counts differ")
        r = np.arange(L.size) * self.h
        hi = r[-1] - 1.0 if self.hi is None else self.hi
        tol = 1e-9 * self.h
        outside = (r < self.lo - tol) | (r > hi + tol)
        if np.any(L[outside] != 0) or np.any(Rt[outside] != 0):
            raise SupportError(f"hat data not supported in [{self.lo}, {hi:.4g}]")
        L.setflags(write=False)
        Rt.setflags(write=False)
        object.__setattr__(self, "left", L)
        object.__setattr__(self, "right", Rt)
        object.__setattr__(self, "hi", hi)

    @classmethod
    def zeros_like(cls, n: int, h: float) -> "HatData":
        return cls(np.zeros(n), np.zeros(n), h)

    @property
    def r(self) -> np.ndarray:
        return np.arange(self.left.size) * self.h

    def __add__(self, other: "HatData") -> "HatData":
        return HatData(self.left + other.left, self.right + other.right, self.h, self.lo, self.hi)

    def scaled(self, c: float) -> "HatData":
        return HatData(c * self.left, c * self.right, self.h, self.lo, self.hi)

    def as_side_data(self) -> SideData:
        return SideData(self.left, self.right, self.h)


@dataclass(frozen=True)
class CorrectorQ:
    """Q_L(ρ) = χ(ρ) Σ_k qL[k] ρ^(2+3k); Q_R likewise on ρ < 0 (coefficients in ρ)."""

    qL: np.ndarray
    qR: np.ndarray

    @property
    def k_star(self) -> int:
        return len(self.qL)

    @property
    def powers(self) -> np.ndarray:
        return 2 + 3 * np.arange(self.k_star)

    def left(self, r: np.ndarray) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        return chi(r) * sum(q * r**p for q, p in zip(self.qL, self.powers)) if self.k_star else 0 * r

    def right(self, r: np.ndarray) -> np.ndarray:
        """Reflected samples Q_R(−r)."""
        r = np.asarray(r, dtype=float)
        return chi(r) * sum(q * (-r) ** p for q, p in zip(self.qR, self.powers)) if self.k_star else 0 * r

    def derivative_at_zero(self, order: int, side: str = "left") -> float:
        """Exact ∂ρ^order Q(0) from the monomial structure (χ ≡ 1 near 0)."""
        q = self.qL if side == "left" else self.qR
        for c, p in zip(q, self.powers):
            if p == order:
                return float(c * factorial(p))
        return 0.0

    def as_side_data(self, r: np.ndarray, h: float) -> SideData:
        return SideData(self.left(r), self.right(r), h)


# ---------------------------------------------------------------------------
# finite-difference weights at a boundary (Fornberg)
# ---------------------------------------------------------------------------

def fd_weights(order: int, npts: int) -> np.ndarray:
    """Weights w with Σ w_i f(i) ≈ f^(order)(0) on unit-spaced nodes 0..npts-1."""
    x = np.arange(npts, dtype=float)
    c = np.zeros((npts, order + 1))
    c1 = 1.0
    c4 = x[0]
    c[0, 0] = 1.0
    for i in range(1, npts):
        mn = min(i, order)
        c2 = 1.0
        c5 = c4
        c4 = x[i]
        for j in range(i):
            c3 = x[i] - x[j]
            c2 *= c3
            if j == i - 1:
                for k in range(mn, 0, -1):
                    c[i, k] = c1 * (k * c[i - 1, k - 1] - c5 * c[i - 1, k]) / c2
                c[i, 0] = -c1 * c5 * c[i - 1, 0] / c2
            for k in range(mn, 0, -1):
                c[j, k] = (c4 * c[j, k] - k * c[j, k - 1]) / c3
            c[j, 0] = c4 * c[j, 0] / c3
        c1 = c2
    return c[:, order]


def derivative_at_zero(samples: np.ndarray, h: float, order: int, width: int) -> float:
    if width > len(samples):
        raise SmoothnessError(f"stencil width {width} exceeds {len(samples)} available samples")
    w = fd_weights(order, width)
    return float(np.dot(w, samples[:width]) / h**order)


def build_Q(G: Field, k_star: int, scale: float = 1.0) -> CorrectorQ:
    """q_{2+3(k-1)} = −∂ρ^{3(k−1)}G(0) / (2+3(k−1))! on each cap (G sampled at t=0 / t=1)."""
    if k_star < 0:
        raise ValueError("k_star must be >= 0")
    width = 3 * k_star + 2
    h = G.grid.h_rho
    GL = scale * G.left_cap()
    GR = scale * G.right_cap()
    qL, qR = [], []
    for k in range(1, k_star + 1):
        d = 3 * (k - 1)
        p = 2 + d
        qL.append(-derivative_at_zero(GL, h, d, width) / factorial(p))
        qR.append(-((-1) ** d) * derivative_at_zero(GR, h, d, width) / factorial(p))
    return CorrectorQ(np.array(qL), np.array(qR))


# ---------------------------------------------------------------------------
# functionals
# ---------------------------------------------------------------------------

def _pick(duals, j):
    if hasattr(duals, "j"):
        if duals.j != j:
            raise ValueError(f"dual profile has j={duals.j}, requested j={j}")
        return duals
    return duals[j]


def _check_ladder_support(hat: HatData, dual) -> None:
    bad = ~dual.valid()
    if np.any(hat.left[bad] != 0) or np.any(hat.right[bad] != 0):
        raise SupportError("hat data reaches below the ladder validity radius")


def ell_k1(hat_left: np.ndarray, hat_right: np.ndarray, dual) -> float:
    """ℓⱼ[F] = ∫₀^∞ ∂ρ²Φʲ_L F_L dρ − ∫_{−∞}^0 ∂ρ²Φʲ_R F_R dρ."""
    h = dual.grid.h_rho
    PL = d2(dual.left_traces[0], h)
    PR = d2(dual.right_traces[0], h)
    return integrate_halfline(PL, hat_left, h) - integrate_halfline(PR, hat_right, h)


def eval_l(j: int, k: int, hat: HatData, duals, form: str = "ibp") -> float:
    if k < 1:
        raise ValueError("k must be >= 1")
    dual = _pick(duals, j)
    _check_ladder_support(hat, dual)
    h = hat.h
    if form == "ibp":
        FL, FR = hat.left, hat.right
        for _ in range(k - 1):
            FL, FR = apply_D3(FL, h, side="left"), apply_D3(FR, h, side="right")
        return ell_k1(FL, FR, dual)
    if form == "weighted":
        if k > dual.k_max:
            raise ValueError(f"dual ladder stops at k={dual.k_max}")
        r = dual.r
        mask = dual.valid()
        TL = np.where(mask, dual.left_traces[k], 0.0)
        TR = np.where(mask, dual.right_traces[k], 0.0)
        # −∫_{−∞}^0 ρ ∂ₜᵏΦ_R Ξ̂_R dρ = +∫_0^∞ r ∂ₜᵏΦ_R(−r) Ξ̂_R(−r) dr
        return integrate_halfline(r * TL, hat.left, h) + integrate_halfline(r * TR, hat.right, h)
    raise ValueError(f"form must be 'ibp' or 'weighted', got {form!r}")


def dt_power(G: Field, k: int) -> np.ndarray:
    v = np.array(G.values, dtype=float)
    for _ in range(k):
        v = np.gradient(v, G.grid.h_t, axis=0, edge_order=2)
    return v


def eval_alpha(j: int, G: Field, dual, k: int = 1, scale: float = 1.0) -> float:
    """α = −∫∫ ∂ₜᵏ(scale·G) Φʲ."""
    dual = _pick(dual, j)
    if dual.grid != G.grid:
        raise ValueError("grid mismatch")
    return -scale * integrate_spacetime(G.grid, dt_power(G, k) * dual.field.values)


def source_cap_ladder(G: Field, k: int, scale: float = 1.0) -> list:
    """Cap traces (t=0 on ρ>0, t=1 on ρ<0, reflected) of ∂ₜᵐ(scale·G), m = 0..k−1."""
    g = G.grid
    out = []
    for mm in range(k):
        v = scale * dt_power(G, mm)
        out.append(SideData(v[0, g.interface_index:], v[-1, : g.interface_index + 1][::-1], g.h_rho))
    return out


def eval_beta(j: int, G_traces, Q: CorrectorQ, dual, k: int = 1) -> float:
    """β at order k.

    ``G_traces`` is a SideData of the (scaled) source cap traces for k = 1, or
    a list of them for ∂ₜᵐ(scale·G), m = 0..k−1 (see ``source_cap_ladder``).
    """
    dual = _pick(dual, j)
    ladder = list(G_traces) if isinstance(G_traces, (list, tuple)) else [G_traces]
    if len(ladder) < k:
        raise ValueError(f"need {k} source trace levels, got {len(ladder)}")
    h = dual.grid.h_rho
    r = dual.r
    PhiL, PhiR = dual.left_traces[0], dual.right_traces[0]
    QL, QR = Q.left(r), Q.right(r)
    if k == 1:
        GL, GR = ladder[0].left, ladder[0].right
        val = -integrate_halfline(PhiL, GL + d2(QL, h), h) + integrate_halfline(PhiR, GR + d2(QR, h), h)
        if j == 0:
            val -= QL[0] - QR[0]
        else:
            val -= Q.derivative_at_zero(1, "left") - Q.derivative_at_zero(1, "right")
        return float(val)
    # general order: P⁰ = Q, Pᵐ = D₃Pᵐ⁻¹ + D₁ G̃ᵐ⁻¹
    PL, PR = QL, QR
    prevL, prevR = PL, PR
    for mm in range(1, k + 1):
        prevL, prevR = PL, PR
        PL = apply_D3(prevL, h, side="left") + apply_D1(ladder[mm - 1].left, h, side="left")
        PR = apply_D3(prevR, h, side="right") + apply_D1(ladder[mm - 1].right, h, side="right")
    val = -(integrate_halfline(r * PhiL, PL, h) + integrate_halfline(r * PhiR, PR, h))
    if j == 0:
        val -= prevL[0] - prevR[0]
    else:
        dL = (-3 * prevL[0] + 4 * prevL[1] - prevL[2]) / (2 * h)
        dR = -(-3 * prevR[0] + 4 * prevR[1] - prevR[2]) / (2 * h)
        val -= dL - dR
    return float(val)


def eval_l_minus1(F_right, fs, L: float, n_quad: int = 2001, threshold: float = 1e-8) -> float:
    """∫₀¹ F_R(L^{-1/3}(z'−1)) / ū'(1, z') dz' with ū'(1, z) = f''(z).

    ``F_right`` is a callable of ρ ≤ 0 or a pair ``(r, samples)`` of reflected samples.
    """
    if not L > 0:
        raise ValueError("L must be positive")
    z = np.linspace(0.0, 1.0, n_quad)
    rho = L ** (-1.0 / 3.0) * (z - 1.0)
    if callable(F_right):
        vals = np.asarray(F_right(rho), dtype=float) * np.ones_like(z)
    else:
        rr, samples = F_right
        vals = np.interp(-rho, rr, samples, right=0.0)
    den = fs.fpp_interp()(z)
    live = vals != 0
    if np.any(np.abs(den[live]) < threshold):
        raise ZeroDivisionError("u_bar'(1, z) below threshold on the integrand support")
    integrand = np.zeros_like(z)
    integrand[live] = vals[live] / den[live]
    return float(np.dot(trapezoid_weights(n_quad, z[1] - z[0]), integrand))
