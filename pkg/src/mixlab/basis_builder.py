"""Biorthogonal bump families for the constraint functionals."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .constraint_functionals import HatData, eval_l, eval_l_minus1
from .degree_calculus import degree, predict_independence
from .dual_profiles import gram_matrix

RANK_RTOL = 1e-10


class DegenerateFamilyError(RuntimeError):
    def __init__(self, message: str, functional: str):
        super().__init__(message)
        self.functional = functional


def c2_bump(x: np.ndarray) -> np.ndarray:
    """(1 − x²)³ on |x| < 1: a C² compact bump."""
    x = np.asarray(x, dtype=float)
    return np.where(np.abs(x) < 1, (1 - x * x) ** 3, 0.0)


def bump_dictionary(r: np.ndarray, h: float, n_bumps: int, lo: float = 0.5, hi: float | None = None) -> list:
    """Equispaced translates; entry i sits at center i//2, on the left cap for even i, right for odd i."""
    hi = r[-1] - 1.0 if hi is None else hi
    nc = (n_bumps + 1) // 2
    w = (hi - lo) / (nc + 1)
    centers = np.linspace(lo + w, hi - w, nc)
    out = []
    for i in range(n_bumps):
        b = c2_bump((r - centers[i // 2]) / w)
        z = np.zeros_like(b)
        out.append(HatData(b, z, h, lo, hi) if i % 2 == 0 else HatData(z, b, h, lo, hi))
    return out


def functional_labels(k_star: int, mass: bool = False) -> list:
    labels = [f"l{j}^({k})" for k in range(1, k_star + 1) for j in (0, 1)]
    return labels + (["l-1"] if mass else [])


@dataclass(frozen=True)
class BasisFamily:
    k_star: int
    bumps: list
    vectors: dict
    gram: np.ndarray
    coefficients: np.ndarray
    condition: float
    singular_values: np.ndarray
    labels: list
    form: str = "ibp"
    defect: np.ndarray = field(default=None)

    def e(self, j: int, k: int) -> HatData:
        return self.vectors[(j, k)]

    @property
    def max_defect(self) -> float:
        return float(np.max(np.abs(self.defect - np.eye(self.defect.shape[0]))))

    @property
    def tolerance(self) -> float:
        return 1e-8 * self.condition

    def to_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write("name,rho,value\n")
            for (j, k), v in sorted(self.vectors.items(), key=lambda kv: (kv[0][1], kv[0][0])):
                name = f"e{j}^({k})" if j >= 0 else "e-1"
                for rr, a in zip(v.r, v.left):
                    if a != 0:
                        fh.write(f"{name},{rr:.17g},{a:.17g}\n")
                for rr, a in zip(v.r, v.right):
                    if a != 0:
                        fh.write(f"{name},{-rr:.17g},{a:.17g}\n")


def combine(bumps: list, coeffs: np.ndarray) -> HatData:
    L = sum(c * b.left for c, b in zip(coeffs, bumps))
    R = sum(c * b.right for c, b in zip(coeffs, bumps))
    b0 = bumps[0]
    return HatData(L, R, b0.h, b0.lo, b0.hi)


def functional_rows(k_star: int, duals, form: str = "ibp", mass=None) -> list:
    rows = []
    for k in range(1, k_star + 1):
        for j in (0, 1):
            rows.append(lambda hat, j=j, k=k: eval_l(j, k, hat, duals, form))
    if mass is not None:
        fs, L = mass
        rows.append(lambda hat: eval_l_minus1((hat.r, hat.right), fs, L))
    return rows


def build_basis(k_star: int, duals, n_bumps: int = 24, form: str = "ibp", mass=None) -> BasisFamily:
    """Minimum-norm solve of M C = I over a bump dictionary.

    ``mass=(fs_profile, L)`` appends the ℓ₋₁ functional and the vector e₋₁.
    """
    n_fun = 2 * k_star + (1 if mass is not None else 0)
    if n_bumps < n_fun:
        raise ValueError(f"n_bumps={n_bumps} < number of functionals {n_fun}")
    for d in duals:
        if d.k_max < k_star and form == "weighted":
            raise ValueError("dual ladders too short for k_star")
    p = duals[0]
    bumps = bump_dictionary(p.r, p.grid.h_rho, n_bumps)
    rows = functional_rows(k_star, duals, form, mass)
    labels = functional_labels(k_star, mass is not None)
    M = np.array([[f(b) for b in bumps] for f in rows])
    U, s, _ = np.linalg.svd(M, full_matrices=False)
    if s.size == 0 or s[-1] < RANK_RTOL * s[0]:
        worst = labels[int(np.argmax(np.abs(U[:, -1])))] if s.size else labels[0]
        raise DegenerateFamilyError(
            f"functional matrix rank-deficient (sigma_min/sigma_max = {s[-1] / s[0] if s[0] else 0:.2e}); "
            f"deficient direction dominated by {worst}", worst)
    C, *_ = sla.lstsq(M, np.eye(n_fun), lapack_driver="gelsy")
    vectors = {}
    idx = 0
    for k in range(1, k_star + 1):
        for j in (0, 1):
            vectors[(j, k)] = combine(bumps, C[:, idx])
            idx += 1
    if mass is not None:
        vectors[(-1, 0)] = combine(bumps, C[:, idx])
    order = [vectors[(j, k)] for k in range(1, k_star + 1) for j in (0, 1)]
    if mass is not None:
        order.append(vectors[(-1, 0)])
    defect = np.array([[f(e) for e in order] for f in rows])
    return BasisFamily(k_star, bumps, vectors, M, C, float(s[0] / s[-1]), s, labels, form, defect)


@dataclass
class IndependenceReport:
    k_star: int
    singular_values: dict
    degree_table: list
    predicted_independent: bool
    flags: list

    def lines(self) -> list:
        out = [f"independence report k*={self.k_star}"]
        for side, sv in self.singular_values.items():
            out.append(f"  {side}: " + " ".join(f"{v:.4e}" for v in sv))
        out.append("  degree table (j, k, d0, d1) for d_t^{-k} Phi^(j):")
        for row in self.degree_table:
            out.append("    " + " ".join(str(v) for v in row))
        out.append(f"  degree argument predicts independence: {self.predicted_independent}")
        out.extend(f"  FLAG: {f}" for f in self.flags)
        return out


def independence_report(duals, k_star: int, near_zero: float = 1e-12) -> IndependenceReport:
    svals = {}
    flags = []
    pred = predict_independence(k_star)
    if k_star >= 1:
        for side in ("left", "right", "both"):
            G = gram_matrix(duals, range(1, k_star + 1), side)
            svals[side] = np.linalg.svd(G, compute_uv=False)
            # scale-free test: the raw spectrum spans many decades across k
            d = 1.0 / np.sqrt(np.diag(G))
            sn = np.linalg.svd(G * d[:, None] * d[None, :], compute_uv=False)
            svals[side + " (normalized)"] = sn
            if sn[-1] <= near_zero * sn[0] and pred:
                flags.append(f"{side} Gram near-singular ({sn[-1] / sn[0]:.2e}) although the degree argument predicts independence")
    table = [(j, k, degree((j, k), 0), degree((j, k), 1)) for k in range(0, k_star + 1) for j in (0, 1)]
    return IndependenceReport(k_star, svals, table, pred, flags)
