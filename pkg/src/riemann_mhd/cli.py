"""riemann-mhd command line: eigen, construct, sample, verify, table1.

Exit codes: 0 ok, 2 input error, 3 construction error, 4 sampling/phase
error, 5 verification failure.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys

import numpy as np

from . import checks as ck
from .core import (Family, FluidModel, State, WaveFamily, characteristic_speeds, characteristic_wave_vector,
                   dispersion_residual, eigenvector, wave_relation_residual)
from .double_waves import covering_constructors, existence_table, FAMILIES
from .errors import InputError, RiemannMHDError, SamplingError
from .gmc import gmc_commutator_residual, gmc_span_residual, gmc_tangency_residual, jacobian_rank
from .registry import build
from .solution import _jsonable
from .verify import (AXES, EQUATIONS, Axis, GridSpec, circulation, convergence_order, passes, sample_field)

log = logging.getLogger("riemann_mhd")

CSV_HEADER = "t,x,y,z,rho,p,u,v,w,H1,H2,H3,valid"
DEFAULT_LEVELS = (64, 128, 256)
DEFAULT_THRESHOLDS = {"min_order": 1.8, "gmc": 1e-6, "circulation": 5e-3, "rank_points": 100}
CHECKS = ("pde", "divH", "lorentz", "vorticity", "current", "circulation", "gmc", "rank")


def _g17(x) -> str:
    return format(float(x), ".17g")


def _load(path):
    if path is None:
        raise InputError("--config is required")
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise InputError(f"cannot read config: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise InputError(f"malformed JSON in {path}: {exc}") from exc


def _emit(text: str, out):
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _dump(obj) -> str:
    return json.dumps(_jsonable(obj), indent=2, allow_nan=True) + "\n"


def _solution_cfg(cfg):
    if not isinstance(cfg, dict):
        raise InputError("config must be a JSON object")
    return cfg["solution"] if "solution" in cfg else cfg


def _grid(cfg):
    if "grid" not in cfg:
        raise InputError("config needs a 'grid'")
    return GridSpec.from_dict(cfg["grid"])


# ---------------------------------------------------------------------------


def cmd_eigen(cfg: dict) -> dict:
    if not isinstance(cfg, dict) or "state" not in cfg:
        raise InputError("eigen config needs 'state'")
    state = State.from_dict(cfg["state"]).validate()
    kappa = cfg.get("kappa", cfg.get("model", {}).get("kappa", 5.0 / 3.0))
    model = FluidModel(float(kappa))
    lvec = np.asarray(cfg.get("lvec", [1.0, 0.0, 0.0]), dtype=float)
    if lvec.shape != (3,) or not np.all(np.isfinite(lvec)):
        raise InputError("lvec must be a finite 3-vector")
    speeds = characteristic_speeds(state, model, lvec)
    families = {}
    for fam in Family:
        for eps in ((1,) if fam in (Family.E1, Family.E2, Family.E3) else (1, -1)):
            wf = WaveFamily(fam, eps)
            wv = characteristic_wave_vector(state, model, lvec, wf)
            key = fam.value if eps == 1 and fam.value.startswith("E") else f"{fam.value}{'+' if eps > 0 else '-'}"
            entry = {"lambda0": wv.lambda0, "dispersion_residual": dispersion_residual(state, model, wv)}
            try:
                g = eigenvector(state, model, lvec, wf)
                entry["eigenvector"] = g.as_vector().tolist()
                entry["wave_relation_residual"] = wave_relation_residual(state, model, wv, g)
            except RiemannMHDError as exc:
                entry["degenerate"] = str(exc)
            families[key] = entry
    return {"state": state.to_dict(), "kappa": model.kappa, "lvec": lvec.tolist(), **speeds,
            "families": families}


def cmd_construct(cfg: dict, beta_csv: str | None = None) -> dict:
    sol = build(_solution_cfg(cfg))
    manifest = sol.manifest()
    if sol.tag == "AE1":
        tr = sol.traj
        manifest["beta_trajectory"] = {"points": int(tr["r"].size), "r": [float(tr["r"][0]), float(tr["r"][-1])],
                                       "beta_range": sol.metadata["beta_range"],
                                       "Delta_min": sol.metadata["Delta_min"],
                                       "Delta_sign": "nonnegative"}
        output = cfg.get("output") if isinstance(cfg.get("output"), dict) else {}
        path = beta_csv or output.get("beta_csv")
        if path:
            with open(path, "w") as fh:
                fh.write(sol.beta_csv())
    return manifest


def sample_csv(solution, grid: GridSpec, threads=None) -> str:
    fld = sample_field(solution, grid, threads=threads)
    ts = grid.times()
    coords = [grid.coords(a) for a in AXES]
    T, X, Y, Z = np.meshgrid(ts, *coords, indexing="ij")
    vals = fld.values.reshape(8, -1)
    mask = fld.mask.ravel()
    lines = [CSV_HEADER]
    cols = [T.ravel(), X.ravel(), Y.ravel(), Z.ravel()]
    for i in range(mask.size):
        row = [_g17(c[i]) for c in cols] + [_g17(v) for v in vals[:, i]] + ["1" if mask[i] else "0"]
        lines.append(",".join(row))
    return "\n".join(lines) + "\n"


def cmd_sample(cfg: dict) -> str:
    return sample_csv(build(_solution_cfg(cfg)), _grid(cfg))


def _levels(cfg):
    levels = cfg.get("levels", list(DEFAULT_LEVELS))
    if not isinstance(levels, list) or len(levels) < 2:
        raise InputError("'levels' must list at least two resolutions")
    return [int(n) for n in levels]


def _random_points(grid: GridSpec, n: int, seed: int = 0):
    rng = np.random.default_rng(seed)
    t = grid.times()
    pts = []
    for _ in range(n):
        x = []
        for a in AXES:
            ax = getattr(grid, a)
            if isinstance(ax, Axis):
                pad = 0.05 * (ax.max - ax.min)
                x.append(rng.uniform(ax.min + pad, ax.max - pad))
            else:
                x.append(ax)
        pts.append((float(rng.choice(t)), x))
    return pts


def _circulation_check(solution, grid: GridSpec, opts: dict, threshold: float) -> dict:
    active = grid.active
    if len(active) < 2:
        return {"skipped": "needs two active axes", "pass": True}
    a, b = active[:2]
    A, B = getattr(grid, a), getattr(grid, b)
    c = [0.5 * (A.min + A.max), 0.5 * (B.min + B.max)]
    radius = float(opts.get("radius", 0.2 * min(A.max - A.min, B.max - B.min)))
    nodes = int(opts.get("nodes", 64))
    t0 = float(grid.times()[0])
    t1 = float(opts.get("t1", t0 + 0.05))
    nt = int(opts.get("nt", 6))
    ang = 2 * np.pi * np.arange(nodes) / nodes
    curve = np.zeros((nodes, 3))
    for ax_name in AXES:
        if ax_name not in active:
            curve[:, AXES.index(ax_name)] = getattr(grid, ax_name)
    curve[:, AXES.index(a)] = c[0] + radius * np.cos(ang)
    curve[:, AXES.index(b)] = c[1] + radius * np.sin(ang)
    times = np.linspace(t0, t1, nt)
    fields = [sample_field(solution, GridSpec(float(t), grid.x, grid.y, grid.z)) for t in times]
    gam = circulation(fields, curve, times)
    drift = float(max(abs(g - gam[0]) for g in gam))
    return {"gamma": gam, "times": times.tolist(), "drift": drift, "pass": drift <= threshold}


def cmd_verify(cfg: dict) -> tuple[dict, bool]:
    """Run the requested checks; returns (report, all passed)."""
    sol = build(_solution_cfg(cfg))
    grid = _grid(cfg)
    checks = cfg.get("checks", ["pde"])
    if not isinstance(checks, list):
        raise InputError("'checks' must be a list")
    unknown = [c for c in checks if c not in CHECKS]
    if unknown:
        raise InputError(f"unknown checks {unknown}; expected a subset of {list(CHECKS)}")
    th = dict(DEFAULT_THRESHOLDS)
    th.update(cfg.get("thresholds", {}))
    target = sol
    if "perturb" in cfg:
        p = cfg["perturb"]
        target = ck.PerturbedSolution(sol, p.get("field", "H"), float(p.get("amplitude", 1e-3)),
                                      int(p.get("seed", 0)))
    grids = [grid.refined(n) for n in _levels(cfg)] if checks else []
    report = {"tag": sol.tag, "rank": sol.rank, "thresholds": th, "checks": {}}
    ok_all = True
    summary = None
    if "pde" in checks or "divH" in checks:
        summary = convergence_order(target, sol.model, grids)
        verdict = passes(summary, th["min_order"])
    if "pde" in checks:
        entries = []
        for rep in summary["reports"]:
            entries.extend(rep.entries)
        ok = all(verdict.values())
        report["checks"]["pde"] = {"residuals": entries, "orders": {
            eq: {"orders": summary["equations"][eq]["orders"], "status": summary["equations"][eq]["status"],
                 "pass": verdict[eq]} for eq in EQUATIONS}, "pass": ok}
        ok_all &= ok
    if "divH" in checks:
        e = summary["equations"]["divergence"]
        report["checks"]["divH"] = {"l2": e["l2"], "linf": e["linf"], "h": e["h"], "orders": e["orders"],
                                    "status": e["status"], "pass": verdict["divergence"]}
        ok_all &= verdict["divergence"]
    for kind in ("lorentz", "vorticity", "current"):
        if kind in checks:
            res = ck.field_check(target, grids, kind, reference=ck.closed_form(sol, kind))
            res["pass"] = ck.field_check_passes(res, th["min_order"])
            report["checks"][kind] = res
            ok_all &= res["pass"]
    if "circulation" in checks:
        res = _circulation_check(target, grids[-1], cfg.get("circulation", {}), float(th["circulation"]))
        report["checks"]["circulation"] = res
        ok_all &= res["pass"]
    if "gmc" in checks:
        if sol.rank != 2:
            res = {"skipped": "GMC conditions apply to double waves", "pass": True}
        else:
            comm = gmc_commutator_residual(sol)
            span = gmc_span_residual(sol)
            tang = gmc_tangency_residual(sol)
            tol = float(th["gmc"])
            res = {"commutator": comm, "span": span, "tangency": tang,
                   "pass": comm <= tol and span <= tol and tang <= tol}
        report["checks"]["gmc"] = res
        ok_all &= res["pass"]
    if "rank" in checks:
        ranks = []
        for t, x in _random_points(grid, int(th["rank_points"])):
            try:
                ranks.append(jacobian_rank(target, t, x))
            except SamplingError:
                continue
        if not ranks:
            raise SamplingError("no valid point for the rank check")
        bound = sol.rank
        res = {"max_rank": max(ranks), "bound": bound, "points": len(ranks), "pass": max(ranks) <= bound}
        report["checks"]["rank"] = res
        ok_all &= res["pass"]
    report["pass"] = bool(ok_all)
    return report, bool(ok_all)


def table1_text() -> str:
    M = existence_table()
    width = max(len(", ".join(covering_constructors(a, b))) for a in FAMILIES for b in FAMILIES) + 4
    lines = [("    " + "".join(f"{f:<{width}}" for f in FAMILIES)).rstrip()]
    for i, a in enumerate(FAMILIES):
        cells = []
        for j, b in enumerate(FAMILIES):
            mark = M[i, j]
            names = covering_constructors(a, b) if mark == "+" else []
            cells.append(f"{mark + (' ' + ', '.join(names) if names else ''):<{width}}")
        lines.append((f"{a:<4}" + "".join(cells)).rstrip())
    return "\n".join(lines) + "\n"


def table1_json() -> dict:
    M = existence_table()
    return {"families": list(FAMILIES), "matrix": M.tolist(),
            "constructors": {f"{a}{b}": covering_constructors(a, b) for i, a in enumerate(FAMILIES)
                             for j, b in enumerate(FAMILIES) if M[i, j] == "+"}}


# ---------------------------------------------------------------------------


def _parser():
    p = argparse.ArgumentParser(prog="riemann-mhd", description="Exact Riemann waves of ideal MHD.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)
    for name, text in (("eigen", "characteristic speeds and eigenvectors"),
                       ("construct", "build a solution and print its manifest"),
                       ("sample", "sample a solution on a grid to CSV"),
                       ("verify", "run verification checks"),
                       ("table1", "existence table of double waves")):
        sp = sub.add_parser(name, help=text)
        sp.add_argument("--config", help="JSON config path")
        sp.add_argument("--out", help="output path (default stdout)")
        if name == "table1":
            sp.add_argument("--format", choices=("text", "json"), default="text")
        if name == "construct":
            sp.add_argument("--beta-csv", help="AE1 only: write the beta trajectory CSV here")
    return p


def main(argv=None) -> int:
    parser = _parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code else 0
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "table1":
            _emit(_dump(table1_json()) if args.format == "json" else table1_text(), args.out)
            return 0
        cfg = _load(args.config)
        if args.command == "eigen":
            _emit(_dump(cmd_eigen(cfg)), args.out)
        elif args.command == "construct":
            _emit(_dump(cmd_construct(cfg, args.beta_csv)), args.out)
        elif args.command == "sample":
            _emit(cmd_sample(cfg), args.out)
        elif args.command == "verify":
            report, ok = cmd_verify(cfg)
            _emit(_dump(report), args.out)
            if not ok:
                print("verification failed", file=sys.stderr)
                return 5
        return 0
    except RiemannMHDError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code
    except (ValueError, TypeError, KeyError) as exc:
        print(f"error: InputError: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
