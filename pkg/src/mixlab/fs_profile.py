"""Falkner-Skan similarity profiles.

Solves  f''' + f f'' + beta (1 - f'^2) = 0,  f(0) = f'(0) = 0,  f'(inf) = 1
by shooting on f''(0) with a fixed-step RK4 integrator, and evaluates the
self-similar streamwise velocity u_FS(x, y) = x^n f'(eta),
eta = y / x^((1-n)/2), n = beta / (2 - beta).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CubicHermiteSpline
from scipy.optimize import brentq

from ._kernels import rk4_falkner_skan

BETA_MIN, BETA_MAX = -0.2, 0.5


class BranchNotFoundError(RuntimeError):
    pass


class DivergenceError(RuntimeError):
    pass


@dataclass(frozen=True)
class FSProfile:
    beta: float
    n: float
    eta_max: float
    eta: np.ndarray
    f: np.ndarray
    fp: np.ndarray
    fpp: np.ndarray
    fpp0: float
    reversed: bool
    branch: str

    @property
    def fppp(self) -> np.ndarray:
        return -self.f * self.fpp - self.beta * (1.0 - self.fp**2)

    def fp_interp(self) -> CubicHermiteSpline:
        return CubicHermiteSpline(self.eta, self.fp, self.fpp)

    def fpp_interp(self) -> CubicHermiteSpline:
        return CubicHermiteSpline(self.eta, self.fpp, self.fppp)

    def residual(self) -> float:
        """Max-norm defect of the ODE with f''' from a 4th-order difference of f''."""
        h = self.eta[1] - self.eta[0]
        g = self.fpp
        d3 = (g[:-4] - 8 * g[1:-3] + 8 * g[3:-1] - g[4:]) / (12 * h)
        f, fp, fpp = self.f[2:-2], self.fp[2:-2], self.fpp[2:-2]
        return float(np.max(np.abs(d3 + f * fpp + self.beta * (1 - fp**2))))

    def to_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write("eta,f,fp,fpp\n")
            for row in zip(self.eta, self.f, self.fp, self.fpp):
                fh.write(",".join(f"{v:.17g}" for v in row) + "\n")


def _shoot(beta: float, s: float, h: float, nsteps: int) -> float:
    Y, ok = rk4_falkner_skan(beta, s, h, nsteps)
    if not ok:
        return np.nan
    return Y[-1, 1] - 1.0


def fs_solve(beta: float, eta_max: float = 12.0, tol: float = 1e-8, branch: str = "attached",
             h: float = 1e-3, n_scan: int = 201) -> FSProfile:
    if not (BETA_MIN < beta <= BETA_MAX):
        raise ValueError(f"beta={beta} outside the validity window ({BETA_MIN}, {BETA_MAX}]")
    if eta_max < 10:
        raise ValueError("eta_max must be >= 10")
    if tol <= 0:
        raise ValueError("tol must be positive")
    if branch not in ("attached", "reversed"):
        raise ValueError(f"unknown branch {branch!r}")
    nsteps = int(round(eta_max / h))
    h = eta_max / nsteps

    lo, hi = (0.0, 2.0) if branch == "attached" else (-0.5, 0.0)
    grid = np.linspace(lo, hi, n_scan)
    res = np.array([_shoot(beta, s, h, nsteps) for s in grid])
    ok = np.isfinite(res)
    cand = [i for i in range(n_scan - 1)
            if ok[i] and ok[i + 1] and np.sign(res[i]) != np.sign(res[i + 1])]
    if not cand:
        if not ok.any():
            raise DivergenceError(f"ODE blew up before eta_max for every f''(0) in ({lo}, {hi})")
        raise BranchNotFoundError(f"no sign change of f'(eta_max)-1 for f''(0) in ({lo}, {hi}), beta={beta}")
    # attached: smallest positive root; reversed: root nearest zero
    i = cand[0] if branch == "attached" else cand[-1]
    a, b = grid[i], grid[i + 1]
    if res[i] == 0:
        s = a
    else:
        s = brentq(lambda x: _shoot(beta, x, h, nsteps), a, b, xtol=1e-15, rtol=1e-15, maxiter=200)
    Y, good = rk4_falkner_skan(beta, s, h, nsteps)
    if not good:
        raise DivergenceError("ODE blew up on the converged shooting parameter")
    if abs(Y[-1, 1] - 1.0) > tol:
        raise BranchNotFoundError(f"far-field defect {abs(Y[-1, 1] - 1):.2e} exceeds tol {tol:.1e}")
    eta = np.linspace(0.0, eta_max, nsteps + 1)
    reversed_flow = bool(np.min(Y[:, 1]) < 0.0)
    return FSProfile(float(beta), beta / (2.0 - beta), float(eta_max), eta,
                     Y[:, 0].copy(), Y[:, 1].copy(), Y[:, 2].copy(), float(s), reversed_flow, branch)


def fs_eval(p: FSProfile, x: float, y: float) -> tuple[float, float]:
    if not x > 0:
        raise ValueError("x must be positive")
    eta = y / x ** ((1.0 - p.n) / 2.0)
    if eta > p.eta_max or eta < 0:
        raise ValueError(f"eta={eta:.4g} outside [0, {p.eta_max}]")
    return float(x**p.n * p.fp_interp()(eta)), float(eta)
