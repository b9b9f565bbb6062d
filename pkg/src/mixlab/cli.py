"""Command-line front end.

    mixlab <command> [--config FILE] [--key value ...]

Configuration is resolved as defaults < config file (key = value lines) <
command-line flags. Every run writes ``manifest.txt`` with the resolved
configuration into the output directory.

Exit codes: 0 ok, 2 configuration error, 3 numerical error, 4 dichotomy failure.
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import dataclass

import numpy as np

from . import _svg

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_DICHOTOMY = 0, 2, 3, 4

COMMON = {
    "out": ("mixlab_out", "output directory"),
    "seed": (0, "seed for random data families"),
    "R": (8.0, "half-width of the rho domain"),
}

COMMANDS = {
    "solve": {
        "nt": (65, "time nodes"),
        "nrho": (129, "rho nodes (odd)"),
        "data": ("bump", "cap data: zero | bump | random | file"),
        "data_file": ("", "CSV with header r,left,right on half-line nodes"),
        "source": ("zero", "source: zero | bump | file"),
        "source_file": ("", "field CSV with header t,rho,value"),
        "scale": (1.0, "source scale"),
        "method": ("auto", "linear solver: auto | direct | iterative"),
        "manufactured": (False, "run the manufactured-solution convergence study"),
        "svg": (True, "write an SVG heatmap"),
    },
    "adjoint": {
        "nt": (65, "time nodes"),
        "nrho": (129, "rho nodes (odd)"),
        "j": ("both", "dual profile: 0 | 1 | both"),
        "kmax": (3, "ladder depth"),
        "svg": (True, "write SVG heatmaps"),
    },
    "basis": {
        "nt": (129, "time nodes"),
        "nrho": (257, "rho nodes (odd)"),
        "kstar": (3, "number of regularity orders"),
        "nbumps": (24, "bump dictionary size"),
        "form": ("ibp", "functional form: ibp | weighted"),
    },
    "coeffs": {
        "nt": (65, "time nodes"),
        "nrho": (129, "rho nodes (odd)"),
        "kstar": (1, "number of regularity orders"),
        "nbumps": (24, "bump dictionary size"),
        "source_amplitude": (0.0, "amplitude of the fixed source"),
        "picard": (False, "iterate with a solution-dependent source"),
        "L": (0.01, "coupling scale of the feedback source"),
        "kappa": (10.0, "feedback gain"),
        "max_iter": (50, "Picard iteration cap"),
        "tol": (1e-10, "Picard step tolerance"),
    },
    "dichotomy": {
        "kstar": (1, "number of regularity orders"),
        "levels": (4, "refinement levels (>= 3)"),
        "nt0": (33, "time nodes on the coarsest level"),
        "nrho0": (65, "rho nodes on the coarsest level"),
        "data": ("default", "base data: default | zero"),
        "perturbation": (1.0, "shift of the left cap's second derivative at 0"),
        "source_amplitude": (0.0, "amplitude of the fixed source"),
        "threshold": (1.5, "bounded/diverging ratio threshold"),
        "nbumps": (24, "bump dictionary size"),
        "svg": (True, "write the two-curve SVG"),
    },
    "moments": {
        "epsilon": (0.5, "inner edge of the strip"),
        "nt": (65, "time nodes"),
        "nmax": (4, "highest moment"),
        "mode": ("zero_caps", "zero_caps | strip"),
        "g": ("sin", "boundary trace: sin | one | poly | zero"),
    },
    "fs": {
        "beta": (0.0, "pressure-gradient parameter"),
        "branch": ("attached", "attached | reversed"),
        "eta_max": (12.0, "truncation of the similarity variable"),
        "tol": (1e-8, "far-field tolerance"),
    },
    "report": {
        "nt": (65, "time nodes"),
        "nrho": (129, "rho nodes (odd)"),
        "kstar": (3, "number of regularity orders"),
        "beta": (0.0, "Falkner-Skan parameter"),
        "epsilon": (0.5, "rigidity strip edge"),
    },
}

G_FAMILIES = {
    "sin": lambda t: np.sin(np.pi * t) + t,
    "one": lambda t: np.ones_like(t),
    "poly": lambda t: t * (1 - t),
    "zero": lambda t: np.zeros_like(t),
}


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    command: str
    params: dict

    def __getitem__(self, key):
        return self.params[key]

    def manifest(self) -> str:
        lines = [f"command = {self.command}"]
        lines += [f"{k} = {self.params[k]}" for k in sorted(self.params)]
        return "\n".join(lines) + "\n"


def _schema(command: str) -> dict:
    return {**COMMON, **COMMANDS[command]}


def _coerce(key: str, raw, default):
    if isinstance(default, bool):
        if isinstance(raw, bool):
            return raw
        s = str(raw).strip().lower()
        if s in ("1", "true", "yes", "on"):
            return True
        if s in ("0", "false", "no", "off"):
            return False
        raise ConfigError(f"{key}: expected a boolean, got {raw!r}")
    try:
        if isinstance(default, int):
            return int(raw)
        if isinstance(default, float):
            return float(raw)
    except ValueError:
        raise ConfigError(f"{key}: cannot parse {raw!r} as {type(default).__name__}") from None
    return str(raw)


def read_config_file(path) -> dict:
    out = {}
    try:
        fh = open(path)
    except OSError as e:
        raise ConfigError(f"cannot read config file {path}: {e}") from None
    with fh:
        for n, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{n}: expected key = value")
            k, v = (s.strip() for s in line.split("=", 1))
            out[k] = v
    return out


def resolve_config(command: str, file_values: dict, flag_values: dict) -> ExperimentConfig:
    schema = _schema(command)
    unknown = sorted(set(file_values) - set(schema))
    if unknown:
        raise ConfigError(f"unknown config key(s) for '{command}': {', '.join(unknown)}")
    params = {k: d for k, (d, _) in schema.items()}
    for k, v in file_values.items():
        params[k] = _coerce(k, v, schema[k][0])
    for k, v in flag_values.items():
        if v is not None:
            params[k] = _coerce(k, v, schema[k][0])
    return ExperimentConfig(command, params)


# ---------------------------------------------------------------------------
# helpers
# ---------------------------------------------------------------------------

def _err(msg: str) -> None:
    print(f"mixlab: {msg}", file=sys.stderr)


def _outdir(cfg: ExperimentConfig) -> str:
    os.makedirs(cfg["out"], exist_ok=True)
    with open(os.path.join(cfg["out"], "manifest.txt"), "w") as fh:
        fh.write(cfg.manifest())
    return cfg["out"]


def _grid(cfg, nt="nt", nrho="nrho"):
    from .grid_core import GridError, make_grid

    try:
        return make_grid(cfg[nt], cfg[nrho], cfg["R"])
    except GridError as e:
        raise ConfigError(str(e)) from None


def _numeric_errors() -> tuple:
    from scipy.linalg import LinAlgError

    from .basis_builder import DegenerateFamilyError
    from .constraint_functionals import SmoothnessError, SupportError
    from .dual_profiles import LadderError
    from .fs_profile import BranchNotFoundError, DivergenceError
    from .mixed_solver import SolverError
    from .regularity_lab import PicardDivergenceError

    return (SolverError, LinAlgError, DegenerateFamilyError, SmoothnessError, SupportError,
            LadderError, BranchNotFoundError, DivergenceError, PicardDivergenceError,
            RuntimeError, ArithmeticError)


def _side_data(cfg, grid):
    from .basis_builder import c2_bump
    from .grid_core import SideData
    from .regularity_lab import default_base

    r, h = grid.r, grid.h_rho
    kind = cfg["data"]
    if kind == "zero":
        return SideData.zeros(grid)
    if kind == "bump":
        return default_base(r, h).as_side_data()
    if kind == "random":
        rng = np.random.default_rng(cfg["seed"])
        sides = []
        for _ in range(2):
            c = rng.uniform(1.0, max(1.5, grid.R - 2.0), size=4)
            a = rng.normal(size=4)
            sides.append(sum(ai * c2_bump(r - ci) for ai, ci in zip(a, c)))
        return SideData(sides[0], sides[1], h)
    if kind == "file":
        if not cfg["data_file"]:
            raise ConfigError("data=file needs data_file")
        try:
            arr = np.loadtxt(cfg["data_file"], delimiter=",", skiprows=1, ndmin=2)
        except (OSError, ValueError) as e:
            raise ConfigError(f"cannot read {cfg['data_file']}: {e}") from None
        if arr.shape != (r.size, 3) or not np.allclose(arr[:, 0], r):
            raise ConfigError(f"{cfg['data_file']}: expected {r.size} rows r,left,right on the grid nodes")
        return SideData(arr[:, 1], arr[:, 2], h)
    raise ConfigError(f"unknown data family {kind!r}")


def _source(cfg, grid):
    from .grid_core import Field, GridError, read_field_csv
    from .regularity_lab import default_source

    kind = cfg["source"]
    if kind == "zero":
        return Field.zeros(grid)
    if kind == "bump":
        return default_source(grid, 1.0)
    if kind == "file":
        if not cfg["source_file"]:
            raise ConfigError("source=file needs source_file")
        try:
            return read_field_csv(cfg["source_file"], grid)
        except (OSError, ValueError, GridError) as e:
            raise ConfigError(f"cannot read {cfg['source_file']}: {e}") from None
    raise ConfigError(f"unknown source family {kind!r}")


def _write_rows(path, header: str, rows) -> None:
    with open(path, "w") as fh:
        fh.write(header + "\n")
        for row in rows:
            fh.write(",".join(v if isinstance(v, str) else f"{v:.17g}" for v in row) + "\n")


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def cmd_solve(cfg: ExperimentConfig) -> int:
    from .grid_core import write_field_csv
    from .mixed_solver import MixedProblem, manufactured_study, solve_mixed

    if cfg["method"] not in ("auto", "direct", "iterative"):
        raise ConfigError(f"unknown method {cfg['method']!r}")
    if cfg["manufactured"]:
        out = _outdir(cfg)
        rows = []
        for name in ("spatial", "temporal"):
            st = manufactured_study(name, R=cfg["R"])
            print("\n".join(st.lines()))
            for i, (g, e) in enumerate(zip(st.grids, st.errors)):
                rows.append((name, float(g.n_t), float(g.n_rho), e, st.orders[i - 1] if i else float("nan")))
        _write_rows(os.path.join(out, "manufactured.csv"), "case,n_t,n_rho,l2_error,order", rows)
        return EXIT_OK
    grid = _grid(cfg)
    data = _side_data(cfg, grid)
    G = _source(cfg, grid)
    out = _outdir(cfg)
    W = solve_mixed(MixedProblem(grid, G, data, cfg["scale"]), method=cfg["method"])
    write_field_csv(os.path.join(out, "solution.csv"), W)
    if cfg["svg"]:
        _svg.heatmap(W.values, os.path.join(out, "solution.svg"), "Omega(t, rho)")
    print(f"solved {grid.n_t} x {grid.n_rho}, max |Omega| = {np.max(np.abs(W.values)):.6e}")
    return EXIT_OK


def cmd_adjoint(cfg: ExperimentConfig) -> int:
    from .dual_profiles import build_dual
    from .grid_core import write_field_csv
    from .mixed_solver import cap_trace_values, jump_defects, jumps_for

    js = {"0": [0], "1": [1], "both": [0, 1]}.get(str(cfg["j"]))
    if js is None:
        raise ConfigError("j must be 0, 1 or both")
    if cfg["kmax"] < 0:
        raise ConfigError("kmax must be >= 0")
    grid = _grid(cfg)
    out = _outdir(cfg)
    rows = []
    for j in js:
        d = build_dual(grid, j, cfg["kmax"])
        write_field_csv(os.path.join(out, f"phi{j}.csv"), d.field)
        d.to_csv(os.path.join(out, f"phi{j}_left_traces.csv"), "left")
        d.to_csv(os.path.join(out, f"phi{j}_right_traces.csv"), "right")
        dv, dd = jump_defects(d.field, jumps_for(j))
        cap = cap_trace_values(d.field)
        print(f"Phi{j}: value-jump defect {dv:.3e}, derivative-jump defect {dd:.3e}")
        print(f"Phi{j}: PhiL(0+) {cap[0]:.6f}  dPhiL(0+) {cap[1]:.6f}  PhiR(0-) {cap[2]:.6f}  dPhiR(0-) {cap[3]:.6f}")
        rows.append((float(j), dv, dd, *cap))
        if cfg["svg"]:
            _svg.heatmap(d.field.values, os.path.join(out, f"phi{j}.svg"), f"Phi{j}(t, rho)")
    _write_rows(os.path.join(out, "interface.csv"),
                "j,value_jump_defect,derivative_jump_defect,phiL0,dphiL0,phiR0,dphiR0", rows)
    return EXIT_OK


def cmd_basis(cfg: ExperimentConfig) -> int:
    from .basis_builder import build_basis
    from .dual_profiles import build_duals

    if cfg["kstar"] < 1:
        raise ConfigError("kstar must be >= 1")
    if cfg["form"] not in ("ibp", "weighted"):
        raise ConfigError("form must be ibp or weighted")
    grid = _grid(cfg)
    out = _outdir(cfg)
    duals = build_duals(grid, k_max=cfg["kstar"])
    try:
        basis = build_basis(cfg["kstar"], duals, cfg["nbumps"], cfg["form"])
    except ValueError as e:
        raise ConfigError(str(e)) from None
    basis.to_csv(os.path.join(out, "basis.csv"))
    _write_rows(os.path.join(out, "functional_matrix.csv"),
                "functional," + ",".join(f"b{i}" for i in range(basis.gram.shape[1])),
                [(lab, *row) for lab, row in zip(basis.labels, basis.gram)])
    print(f"{len(basis.labels)} functionals, condition {basis.condition:.4e}, "
          f"biorthogonality defect {basis.max_defect:.3e} (tolerance {basis.tolerance:.3e})")
    return EXIT_OK


def cmd_coeffs(cfg: ExperimentConfig) -> int:
    from .basis_builder import build_basis
    from .dual_profiles import build_duals
    from .regularity_lab import (default_base, default_source, linear_feedback,
                                 solve_coefficients_direct, solve_coefficients_picard)

    if cfg["kstar"] < 1:
        raise ConfigError("kstar must be >= 1")
    grid = _grid(cfg)
    out = _outdir(cfg)
    duals = build_duals(grid, k_max=cfg["kstar"])
    try:
        basis = build_basis(cfg["kstar"], duals, cfg["nbumps"])
    except ValueError as e:
        # too few bumps, or a grid too coarse for the ladder radius
        raise ConfigError(str(e)) from None
    base = default_base(grid.r, grid.h_rho)
    G0 = default_source(grid, cfg["source_amplitude"])
    if cfg["picard"]:
        if not cfg["L"] > 0:
            raise ConfigError("L must be positive")
        res = solve_coefficients_picard(base, linear_feedback(cfg["kappa"]), cfg["L"], basis, duals,
                                        cfg["kstar"], grid, cfg["max_iter"], cfg["tol"], G0=G0)
        coeffs = res.coefficients
        _write_rows(os.path.join(out, "picard.csv"), "iteration,step",
                    [(float(i), s) for i, s in enumerate(res.history)])
        print(f"Picard L={cfg['L']}: {len(res.history)} iterations, contraction {res.contraction:.4f}, "
              f"converged {res.converged}")
    else:
        coeffs = solve_coefficients_direct(base, G0, basis, duals, cfg["kstar"])
    names = [f"c{j}_{k}" for j in (0, 1) for k in range(1, cfg["kstar"] + 1)]
    names += [f"qL_{k}" for k in range(cfg["kstar"])] + [f"qR_{k}" for k in range(cfg["kstar"])]
    arr = coeffs.as_array()
    _write_rows(os.path.join(out, "coefficients.csv"), "name,value", list(zip(names, arr)))
    for n, v in zip(names, arr):
        print(f"{n:8s} {v: .10e}")
    print(f"constraint residual {coeffs.residual:.3e}")
    return EXIT_OK


def cmd_dichotomy(cfg: ExperimentConfig) -> int:
    from .regularity_lab import default_levels, run_dichotomy

    if cfg["levels"] < 3:
        raise ConfigError(f"dichotomy needs at least 3 levels, got {cfg['levels']}")
    if cfg["kstar"] < 1:
        raise ConfigError("kstar must be >= 1")
    if cfg["data"] not in ("default", "zero"):
        raise ConfigError("data must be default or zero")
    if cfg["nt0"] < 3 or cfg["nrho0"] < 5 or cfg["nrho0"] % 2 == 0:
        raise ConfigError("coarsest grid needs nt0 >= 3 and odd nrho0 >= 5")
    levels = default_levels(cfg["levels"], cfg["nt0"], cfg["nrho0"], cfg["R"])
    out = _outdir(cfg)
    res = run_dichotomy(cfg["kstar"], levels, cfg["nbumps"], cfg["source_amplitude"],
                        cfg["perturbation"], cfg["threshold"], zero=cfg["data"] == "zero")
    rows = []
    for rep in (res.constrained, res.violated):
        for lvl, k, n, r, v in rep.rows():
            g = rep.grids[lvl]
            rows.append((rep.label, float(lvl), float(g.n_t), float(g.n_rho), float(k), n, r, v))
        print(f"{rep.label:12s} norms  " + " ".join(f"{x:.4e}" for x in rep.norms[:, 0]))
        print(f"{rep.label:12s} ratios " + " ".join(f"{x:.4f}" for x in rep.growth_ratios[:, 0])
              + f"  -> {', '.join(rep.verdicts)}")
        print(f"{rep.label:12s} squared-norm increments "
              + " ".join(f"{x:.4e}" for x in rep.squared_increments[:, 0]))
    _write_rows(os.path.join(out, "regularity.csv"), "arm,level,n_t,n_rho,k,norm,ratio,verdict", rows)
    if cfg["svg"]:
        _svg.line_chart(np.arange(len(levels)), {"constrained": res.constrained.norms[:, 0],
                                                 "violated": res.violated.norms[:, 0]},
                        os.path.join(out, "dichotomy.svg"), "||d_t Omega|| per level", "level", "norm")
    if res.success:
        print("dichotomy: OK")
        return EXIT_OK
    _err("dichotomy failed: expected (bounded, diverging), got "
         f"({res.constrained.verdicts[0]}, {res.violated.verdicts[0]})")
    return EXIT_DICHOTOMY


def cmd_moments(cfg: ExperimentConfig) -> int:
    from .regularity_lab import rigidity_moments

    if cfg["mode"] not in ("zero_caps", "strip"):
        raise ConfigError("mode must be zero_caps or strip")
    if cfg["g"] not in G_FAMILIES:
        raise ConfigError(f"g must be one of {', '.join(G_FAMILIES)}")
    if not 0 < cfg["epsilon"] < cfg["R"] or cfg["nt"] < 3 or cfg["nmax"] < 0:
        raise ConfigError("need 0 < epsilon < R, nt >= 3, nmax >= 0")
    out = _outdir(cfg)
    res = rigidity_moments(cfg["epsilon"], G_FAMILIES[cfg["g"]], cfg["nmax"], cfg["nt"], R=cfg["R"],
                           mode=cfg["mode"])
    rows = [(float(n), m) for n, m in enumerate(res.moments)]
    _write_rows(os.path.join(out, "moments.csv"), "n,moment", rows)
    for n, m in enumerate(res.moments):
        print(f"moment {n}: {m: .6e}")
    print(f"max |f| = {res.f_max:.3e}, h = {res.h:.3e}, trace defect vs g = {res.g_defect:.3e}")
    if res.mode == "strip":
        print(f"cap identity defect = {res.identity_defect:.3e}")
    else:
        print(f"structurally injective: {res.structurally_injective}, numerical sigma_min {res.sigma_min:.3e} (roundoff-limited)")
    return EXIT_OK


def cmd_fs(cfg: ExperimentConfig) -> int:
    from .fs_profile import fs_solve

    try:
        p = fs_solve(cfg["beta"], cfg["eta_max"], cfg["tol"], cfg["branch"])
    except ValueError as e:
        raise ConfigError(str(e)) from None
    out = _outdir(cfg)
    p.to_csv(os.path.join(out, "profile.csv"))
    print(f"fpp0 = {p.fpp0:.10f}")
    print(f"reversed = {p.reversed}")
    print(f"residual = {p.residual():.3e}")
    return EXIT_OK


def cmd_report(cfg: ExperimentConfig) -> int:
    from .basis_builder import independence_report
    from .degree_calculus import EXAMPLE_1, EXAMPLE_2, check_dependency, predict_independence
    from .dual_profiles import build_duals
    from .fs_profile import fs_solve
    from .mixed_solver import (MANUFACTURED, cap_trace_values, duality_terms, jump_defects, jumps_for,
                               solve_mixed)
    from .regularity_lab import rigidity_moments

    if cfg["kstar"] < 0:
        raise ConfigError("kstar must be >= 0")
    grid = _grid(cfg)
    out = _outdir(cfg)
    k_star = cfg["kstar"]
    text, rows = [], []

    text.append("== dual profiles: interface jumps and cap traces ==")
    duals = build_duals(grid, k_max=max(k_star, 1))
    for d in duals:
        dv, dd = jump_defects(d.field, jumps_for(d.j))
        cap = cap_trace_values(d.field)
        text.append(f"Phi{d.j}: jump defects {dv:.3e} {dd:.3e}; cap traces " + " ".join(f"{c:.6f}" for c in cap))
        rows += [("jumps", f"phi{d.j}_value_defect", dv), ("jumps", f"phi{d.j}_derivative_defect", dd)]
        rows += [("jumps", f"phi{d.j}_{n}", c) for n, c in zip(("phiL0", "dphiL0", "phiR0", "dphiR0"), cap)]

    text.append("== duality identity (manufactured case 'shifted') ==")
    prob = MANUFACTURED["shifted"](grid.R).problem(grid)
    W = solve_mixed(prob)
    for d in duals:
        lhs, rhs = duality_terms(prob, W, d.field, d.j)
        rel = abs(lhs - rhs) / max(abs(lhs), abs(rhs))
        text.append(f"j={d.j}: lhs {lhs:.8f} rhs {rhs:.8f} relative residual {rel:.3e}")
        rows.append(("duality", f"relative_residual_j{d.j}", rel))

    text.append("== Gram spectra and degree table ==")
    if k_star == 0:
        text.append("k* = 0: no constraint functionals; degree section vacuous (independence holds trivially)")
        rows.append(("degree", "predict_independence", "vacuous"))
    else:
        rep = independence_report(duals, k_star)
        text.extend(rep.lines())
        for side, sv in rep.singular_values.items():
            rows.append(("gram", f"sigma_min_{side.replace(' ', '_')}", float(sv[-1])))
        rows.append(("degree", "predict_independence", str(predict_independence(k_star))))
        for j, k, d0, d1 in rep.degree_table:
            rows.append(("degree", f"d_j{j}_k{k}", f"{d0};{d1}"))

    text.append("== degree certificates for the two worked examples ==")
    for name, (lhs_t, rhs_t) in (("ex1", EXAMPLE_1), ("ex2", EXAMPLE_2)):
        cert = check_dependency(lhs_t, rhs_t)
        text.append(f"[{name}]")
        text.append(cert.render())
        rows.append(("certificate", name, f"{cert.status}@level{cert.level}"))

    text.append("== Falkner-Skan ==")
    p = fs_solve(cfg["beta"])
    text.append(f"beta = {cfg['beta']}: fpp0 = {p.fpp0:.8f}, reversed = {p.reversed}, residual = {p.residual():.3e}")
    rows += [("fs", "fpp0", p.fpp0), ("fs", "residual", p.residual())]

    text.append("== rigidity moments ==")
    for mode in ("zero_caps", "strip"):
        m = rigidity_moments(cfg["epsilon"], G_FAMILIES["sin"], 4, 33, R=cfg["R"], mode=mode)
        text.append(f"{mode}: moments " + " ".join(f"{x:.4e}" for x in m.moments) + f", max|f| {m.f_max:.3e}")
        if mode == "strip":
            text.append(f"strip: cap identity defect {m.identity_defect:.3e}")
        rows += [("moments", f"{mode}_n{n}", x) for n, x in enumerate(m.moments)]

    body = "\n".join(text) + "\n"
    with open(os.path.join(out, "report.txt"), "w") as fh:
        fh.write(body)
    _write_rows(os.path.join(out, "report.csv"), "section,key,value", rows)
    print(body, end="")
    return EXIT_OK


HANDLERS = {
    "solve": cmd_solve, "adjoint": cmd_adjoint, "basis": cmd_basis, "coeffs": cmd_coeffs,
    "dichotomy": cmd_dichotomy, "moments": cmd_moments, "fs": cmd_fs, "report": cmd_report,
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="mixlab", description="mixed-type parabolic experiments")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", default=None, help="key = value configuration file")
        for key, (default, help_) in _schema(name).items():
            flag = "--" + key.replace("_", "-")
            if isinstance(default, bool):
                sp.add_argument(flag, dest=key, default=None, action=argparse.BooleanOptionalAction, help=help_)
            else:
                sp.add_argument(flag, dest=key, default=None, help=f"{help_} (default {default})")
    return parser


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        flags = {k: v for k, v in vars(args).items() if k not in ("command", "config")}
        file_values = read_config_file(args.config) if args.config else {}
        cfg = resolve_config(args.command, file_values, flags)
    except ConfigError as e:
        _err(f"config error: {e}")
        return EXIT_CONFIG
    try:
        return HANDLERS[cfg.command](cfg)
    except ConfigError as e:
        _err(f"config error: {e}")
        return EXIT_CONFIG
    except _numeric_errors() as e:
        _err(f"numerical error: {type(e).__name__}: {e}")
        return EXIT_NUMERIC
    except ValueError as e:
        _err(f"config error: {e}")
        return EXIT_CONFIG


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
