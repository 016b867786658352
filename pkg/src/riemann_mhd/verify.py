"""Grid sampling and finite-difference verification of the MHD equations."""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from .errors import InputError, SamplingError

AXES = ("x", "y", "z")
EQUATIONS = ("continuity", "momentum_x", "momentum_y", "momentum_z", "pressure",
             "induction_x", "induction_y", "induction_z", "divergence")
MIN_VALID = 0.8
MIN_CELLS = 8
CHUNK = 4096
EXACT_TOL = 1e-9


def thread_count(default: int = 1) -> int:
    raw = os.environ.get("RIEMANN_MHD_THREADS")
    if raw is None:
        return default
    try:
        n = int(raw)
    except ValueError:
        return default
    return max(1, n)


@dataclass(frozen=True)
class Axis:
    min: float
    max: float
    n: int

    def __post_init__(self):
        if not self.max > self.min:
            raise InputError("grid axis needs max > min")
        if self.n < 2:
            raise InputError("grid axis needs n >= 2")

    @property
    def h(self) -> float:
        return (self.max - self.min) / self.n

    def nodes(self) -> np.ndarray:
        # cell-centred so that halving h keeps the box fixed
        return self.min + (np.arange(self.n) + 0.5) * self.h

    def to_dict(self):
        return {"min": self.min, "max": self.max, "n": self.n}


def _axis(node):
    if isinstance(node, Axis):
        return node
    if isinstance(node, (int, float)) and not isinstance(node, bool):
        return float(node)
    if isinstance(node, (list, tuple)) and len(node) == 3:
        return Axis(float(node[0]), float(node[1]), int(node[2]))
    if isinstance(node, dict):
        try:
            return Axis(float(node["min"]), float(node["max"]), int(node["n"]))
        except KeyError as exc:
            raise InputError(f"grid axis missing {exc}") from exc
    raise InputError(f"malformed grid axis {node!r}")


@dataclass(frozen=True)
class GridSpec:
    """Spacetime box. Spatial entries are an Axis (active) or a fixed coordinate."""

    t: object = 0.0  # float, or (t0, t1, nt) for a sequence of slices
    x: object = 0.0
    y: object = 0.0
    z: object = 0.0

    @classmethod
    def from_dict(cls, d: dict) -> "GridSpec":
        if not isinstance(d, dict):
            raise InputError("grid must be an object")
        t = d.get("t", 0.0)
        if isinstance(t, dict):
            t = (float(t["t0"]), float(t["t1"]), int(t["nt"]))
        elif isinstance(t, (list, tuple)):
            t = (float(t[0]), float(t[1]), int(t[2]))
        else:
            t = float(t)
        return cls(t, *(_axis(d.get(a, 0.0)) for a in AXES))

    def to_dict(self) -> dict:
        out = {"t": ({"t0": self.t[0], "t1": self.t[1], "nt": self.t[2]}
                     if isinstance(self.t, tuple) else self.t)}
        for a in AXES:
            v = getattr(self, a)
            out[a] = v.to_dict() if isinstance(v, Axis) else v
        return out

    @property
    def active(self) -> tuple:
        return tuple(a for a in AXES if isinstance(getattr(self, a), Axis))

    @property
    def h(self) -> float:
        hs = [getattr(self, a).h for a in self.active]
        if not hs:
            raise InputError("grid has no active spatial axis")
        return min(hs)

    def times(self) -> np.ndarray:
        if isinstance(self.t, tuple):
            return np.linspace(self.t[0], self.t[1], self.t[2])
        return np.array([self.t])

    def coords(self, axis: str) -> np.ndarray:
        v = getattr(self, axis)
        return v.nodes() if isinstance(v, Axis) else np.array([v])

    def refined(self, n: int) -> "GridSpec":
        """Same box with n cells along every active axis."""
        kw = {a: (Axis(getattr(self, a).min, getattr(self, a).max, n) if a in self.active
                  else getattr(self, a)) for a in AXES}
        return GridSpec(self.t, **kw)


@dataclass
class SolutionField:
    """Sampled field on a (t, x, y, z) tensor grid; values have shape (8, nt, nx, ny, nz)."""

    grid: GridSpec
    values: np.ndarray
    mask: np.ndarray
    kappa: float
    metadata: dict = field(default_factory=dict)
    stencils: dict = field(default_factory=dict)  # (axis, +-1) -> (values, mask)
    dt: float | None = None

    @property
    def valid_fraction(self) -> float:
        return float(self.mask.mean())


def evaluate_points(solution, X: np.ndarray, threads: int | None = None):
    """Evaluate at (4, N) points in fixed-size chunks; order and values do not
    depend on the thread count."""
    X = np.asarray(X, dtype=float)
    n = X.shape[1]
    chunks = [X[:, i:i + CHUNK] for i in range(0, n, CHUNK)]
    threads = thread_count() if threads is None else max(1, int(threads))

    def run(chunk):
        with np.errstate(all="ignore"):
            vals, ok, _ = solution.evaluate(chunk)
        return vals, ok

    if threads > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(run, chunks))
    else:
        results = [run(c) for c in chunks]
    if not results:
        return np.empty((8, 0)), np.empty(0, dtype=bool)
    return (np.concatenate([r[0] for r in results], axis=1),
            np.concatenate([r[1] for r in results]))


def _block(solution, ts, xs, ys, zs, threads):
    T, Xg, Y, Z = np.meshgrid(ts, xs, ys, zs, indexing="ij")
    X = np.stack([T.ravel(), Xg.ravel(), Y.ravel(), Z.ravel()])
    vals, ok = evaluate_points(solution, X, threads)
    shape = T.shape
    return vals.reshape((8,) + shape), ok.reshape(shape)


def max_signal_speed(values, mask, kappa) -> float:
    rho, p, v, H = values[0], values[1], values[2:5], values[5:8]
    with np.errstate(all="ignore"):
        cf = np.sqrt(kappa * p / rho + np.sum(H * H, axis=0) / rho)
        s = np.sqrt(np.sum(v * v, axis=0)) + cf
    s = s[mask & np.isfinite(s)]
    return float(s.max()) if s.size else 0.0


def sample_field(solution, grid: GridSpec, threads: int | None = None,
                 min_valid: float = MIN_VALID, with_stencil: bool = False) -> SolutionField:
    """Evaluate a solution on every grid node.

    with_stencil adds slices at t +- dt and at +-h along every inactive
    spatial axis, which derivative operators use.
    """
    ts = grid.times()
    coords = {a: grid.coords(a) for a in AXES}
    values, mask = _block(solution, ts, coords["x"], coords["y"], coords["z"], threads)
    frac = float(mask.mean())
    if frac < min_valid:
        raise SamplingError(f"only {100 * frac:.1f}% of points valid (need {100 * min_valid:.0f}%)")
    meta = {"tag": getattr(solution, "tag", "field"), "valid_fraction": frac}
    fld = SolutionField(grid, values, mask, float(getattr(solution, "kappa", 1.0)), meta)
    if with_stencil:
        h = grid.h
        dt = h / max(1.0, max_signal_speed(values, mask, fld.kappa))
        fld.dt = dt
        for sign in (-1, 1):
            fld.stencils[("t", sign)] = _block(solution, ts + sign * dt, coords["x"], coords["y"],
                                               coords["z"], threads)
            for a in AXES:
                if a in grid.active:
                    continue
                c = dict(coords)
                c[a] = coords[a] + sign * h
                fld.stencils[(a, sign)] = _block(solution, ts, c["x"], c["y"], c["z"], threads)
    return fld


def field_from_function(fn, grid: GridSpec, kappa: float = 1.4, with_stencil: bool = True,
                        min_valid: float = MIN_VALID) -> SolutionField:
    """Sample fn(t, x, y, z) -> (8, ...) array; a manufactured-field adapter."""
    return sample_field(FunctionSolution(fn, kappa), grid, with_stencil=with_stencil,
                        min_valid=min_valid)


class FunctionSolution:
    """Adapter exposing evaluate() for an explicit field u(t, x, y, z)."""

    tag = "function"
    rank = None

    def __init__(self, fn, kappa=1.4):
        self.fn = fn
        self.kappa = kappa

    def evaluate(self, X):
        vals = np.asarray(self.fn(X[0], X[1], X[2], X[3]), dtype=float)
        vals = np.broadcast_to(vals, (8, X.shape[1])).copy()
        ok = np.isfinite(vals).all(axis=0) & (vals[0] > 0) & (vals[1] > 0)
        return vals, ok, None


# ---------------------------------------------------------------------------
# finite differences


class _Stencil:
    """Central differences on interior points of the active axes."""

    def __init__(self, fld: SolutionField):
        if not fld.stencils or fld.dt is None:
            raise InputError("field has no derivative stencil; sample with with_stencil=True")
        g = fld.grid
        for a in g.active:
            if getattr(g, a).n < MIN_CELLS:
                raise InputError(f"too-coarse grid: axis {a} has n < {MIN_CELLS}")
        self.fld = fld
        self.active = g.active
        self.h = {a: (getattr(g, a).h if a in g.active else g.h) for a in AXES}
        self.dt = fld.dt
        sl = [slice(None), slice(None)]
        for a in AXES:
            sl.append(slice(1, -1) if a in self.active else slice(None))
        self.inner = tuple(sl)
        m = fld.mask[self.inner[1:]].copy()
        for a in AXES:
            if a in self.active:
                m &= self._shift(fld.mask[None], a, 1)[0] & self._shift(fld.mask[None], a, -1)[0]
            else:
                m &= fld.stencils[(a, 1)][1][self.inner[1:]] & fld.stencils[(a, -1)][1][self.inner[1:]]
        m &= fld.stencils[("t", 1)][1][self.inner[1:]] & fld.stencils[("t", -1)][1][self.inner[1:]]
        self.mask = m

    def _shift(self, arr, axis, sign):
        """arr (k, nt, nx, ny, nz) at interior points shifted by sign along an active axis."""
        idx = list(self.inner)
        pos = 2 + AXES.index(axis)
        idx[pos] = slice(2, None) if sign > 0 else slice(None, -2)
        return arr[tuple(idx)]

    def center(self, q):
        return q(self.fld.values)[self.inner]

    def d(self, q, axis):
        """Derivative of the pointwise quantity q(values) along t, x, y or z."""
        if axis == "t":
            plus = q(self.fld.stencils[("t", 1)][0])[self.inner]
            minus = q(self.fld.stencils[("t", -1)][0])[self.inner]
            return (plus - minus) / (2 * self.dt)
        if axis in self.active:
            qc = q(self.fld.values)
            return (self._shift(qc, axis, 1) - self._shift(qc, axis, -1)) / (2 * self.h[axis])
        plus = q(self.fld.stencils[(axis, 1)][0])[self.inner]
        minus = q(self.fld.stencils[(axis, -1)][0])[self.inner]
        return (plus - minus) / (2 * self.h[axis])

    def grad(self, q):
        """Stacked spatial gradient, shape (3, k, ...)."""
        return np.stack([self.d(q, a) for a in AXES])


def _rho(u):
    return u[0:1]


def _p(u):
    return u[1:2]


def _v(u):
    return u[2:5]


def _H(u):
    return u[5:8]


def _E(u):
    return np.cross(u[2:5], u[5:8], axis=0)


def _curl(G):
    """curl from gradient G[j, i] = d_j q_i."""
    return np.stack([G[1, 2] - G[2, 1], G[2, 0] - G[0, 2], G[0, 1] - G[1, 0]])


def _div(G):
    return G[0, 0] + G[1, 1] + G[2, 2]


@dataclass
class ResidualReport:
    entries: list
    h: float
    metadata: dict = field(default_factory=dict)

    def get(self, equation: str) -> dict:
        for e in self.entries:
            if e["equation"] == equation:
                return e
        raise KeyError(equation)

    def to_json(self) -> dict:
        return {"residuals": self.entries, "metadata": self.metadata}


def _norms(values, mask):
    """RMS (compensated sum) and max over masked points."""
    sel = np.abs(values[mask])
    if sel.size == 0:
        return float("nan"), float("nan")
    l2 = math.sqrt(math.fsum((sel * sel).tolist()) / sel.size)
    return l2, float(sel.max())


def residual_fields(fld: SolutionField):
    """Pointwise residuals of the nine equations at interior points, plus mask."""
    st = _Stencil(fld)
    u = st.center(lambda a: a)
    rho, p, v, H = u[0], u[1], u[2:5], u[5:8]
    grho = st.grad(_rho)[:, 0]
    gp = st.grad(_p)[:, 0]
    gv = st.grad(_v)
    gH = st.grad(_H)
    gE = st.grad(_E)
    divv = _div(gv)
    J = _curl(gH)
    adv = lambda g: np.einsum("j...,j...->...", v, g)
    res = {}
    res["continuity"] = st.d(_rho, "t")[0] + adv(grho) + rho * divv
    mom = st.d(_v, "t") + np.einsum("j...,ji...->i...", v, gv) + gp / rho + np.cross(H, J, axis=0) / rho
    pres = st.d(_p, "t")[0] + adv(gp) + fld.kappa * p * divv
    ind = st.d(_H, "t") - _curl(gE)
    res["momentum_x"], res["momentum_y"], res["momentum_z"] = mom
    res["pressure"] = pres
    res["induction_x"], res["induction_y"], res["induction_z"] = ind
    res["divergence"] = _div(gH)
    return res, st.mask


def pde_residual(fld: SolutionField, model=None) -> ResidualReport:
    """Per-equation L2 (RMS) and Linf residual norms on interior valid points."""
    if model is not None:
        fld.kappa = float(model.kappa)
    with np.errstate(all="ignore"):
        res, mask = residual_fields(fld)
    entries = []
    for eq in EQUATIONS:
        l2, linf = _norms(res[eq], mask)
        entries.append({"equation": eq, "l2": l2, "linf": linf, "h": fld.grid.h, "order": None})
    return ResidualReport(entries, fld.grid.h, {"tag": fld.metadata.get("tag"),
                                                "interior_valid_fraction": float(mask.mean()),
                                                "dt": fld.dt})


def div_h(fld: SolutionField):
    st = _Stencil(fld)
    return _norms(_div(st.grad(_H)), st.mask)


def lorentz_force(fld: SolutionField):
    """F = (H.grad)H - grad(|H|^2/2) at interior points; returns (F, mask)."""
    st = _Stencil(fld)
    H = st.center(_H)
    gH = st.grad(_H)
    gB = st.grad(lambda a: 0.5 * np.sum(a[5:8] ** 2, axis=0, keepdims=True))[:, 0]
    return np.einsum("j...,ji...->i...", H, gH) - gB, st.mask


def vorticity(fld: SolutionField):
    st = _Stencil(fld)
    return _curl(st.grad(_v)), st.mask


def current(fld: SolutionField):
    st = _Stencil(fld)
    return _curl(st.grad(_H)), st.mask


def interior_coords(fld: SolutionField):
    """Coordinates (t, x, y, z) broadcast over interior points."""
    st_inner = []
    g = fld.grid
    for a in AXES:
        c = g.coords(a)
        st_inner.append(c[1:-1] if a in g.active else c)
    T, X, Y, Z = np.meshgrid(g.times(), *st_inner, indexing="ij")
    return T, X, Y, Z


def vector_norms(F, mask):
    return _norms(np.sqrt(np.sum(F * F, axis=0)), mask)


# ---------------------------------------------------------------------------
# circulation


def circulation(fields, curve, times=None):
    """Circulation around a closed polyline advected with the sampled velocity.

    fields: sequence of SolutionField time slices (single time each) on the
    same spatial grid. The curve nodes move by explicit Euler with the
    interpolated velocity; returns the list of Gamma values.
    """
    curve = np.asarray(curve, dtype=float)
    if curve.ndim != 2 or curve.shape[1] != 3 or len(curve) < 3:
        raise InputError("curve must be an (M>=3, 3) polyline")
    if times is None:
        times = [float(f.grid.times()[0]) for f in fields]
    g = fields[0].grid
    active = g.active
    lo = np.array([getattr(g, a).nodes()[0] for a in active])
    hi = np.array([getattr(g, a).nodes()[-1] for a in active])
    idx = [AXES.index(a) for a in active]
    gammas = []
    pts = curve.copy()
    for k, fld in enumerate(fields):
        vals = fld.values[2:5, 0]
        vals = np.where(fld.mask[0][None], vals, np.nan)
        interp = []
        for c in range(3):
            arr = np.squeeze(vals[c], axis=tuple(AXES.index(a) for a in AXES if a not in active))
            interp.append(RegularGridInterpolator([getattr(g, a).nodes() for a in active], arr))
        sub = pts[:, idx]
        if np.any(sub < lo - 1e-12) or np.any(sub > hi + 1e-12):
            raise InputError("curve exits the grid")
        vel = np.stack([f(sub) for f in interp], axis=1)
        nxt = np.roll(pts, -1, axis=0)
        vn = np.roll(vel, -1, axis=0)
        gammas.append(float(np.sum(0.5 * np.sum((vel + vn) * (nxt - pts), axis=1))))
        if k + 1 < len(fields):
            pts = pts + (times[k + 1] - times[k]) * vel
    return gammas


# ---------------------------------------------------------------------------
# convergence


def convergence_order(solution, model=None, grids=None, exact_tol: float = EXACT_TOL,
                      min_valid: float = MIN_VALID) -> dict:
    """Residual reports on successive grids and per-equation orders.

    Order between levels k and k+1 is log(res_k/res_{k+1}) / log(h_k/h_{k+1}),
    from L2 norms. An equation whose finest-level Linf residual is below
    exact_tol * max(1, max|u|) is reported as "exact".
    """
    if grids is None or len(grids) < 2:
        raise InputError("convergence_order needs at least two grids")
    reports = []
    scale = 1.0
    for g in grids:
        fld = sample_field(solution, g, with_stencil=True, min_valid=min_valid)
        scale = max(scale, float(np.nanmax(np.abs(np.where(fld.mask[None], fld.values, 0.0)))))
        reports.append(pde_residual(fld, model))
    return summarize_orders(reports, exact_tol * scale)


def summarize_orders(reports, floor) -> dict:
    out = {}
    for eq in EQUATIONS:
        l2 = [r.get(eq)["l2"] for r in reports]
        linf = [r.get(eq)["linf"] for r in reports]
        hs = [r.h for r in reports]
        orders = []
        orders_inf = []
        for k in range(len(reports) - 1):
            ratio = math.log(hs[k] / hs[k + 1])
            orders.append(_order(l2[k], l2[k + 1], ratio, floor))
            orders_inf.append(_order(linf[k], linf[k + 1], ratio, floor))
        exact = bool(np.isfinite(linf[-1]) and linf[-1] <= floor)
        finite = [o for o in orders if o is not None]
        status = "exact" if exact else ("converging" if finite else "undefined")
        out[eq] = {"l2": l2, "linf": linf, "h": hs, "orders": orders, "orders_linf": orders_inf,
                   "order": min(finite) if finite else None, "status": status}
        for r, o in zip(reports[1:], orders):
            r.get(eq)["order"] = o
    return {"equations": out, "reports": reports, "exact_floor": floor}


def _order(a, b, log_ratio, floor):
    if not (np.isfinite(a) and np.isfinite(b)) or a <= floor or b <= 0:
        return None
    return math.log(a / b) / log_ratio


def passes(summary: dict, min_order: float = 1.8, equations=EQUATIONS) -> dict:
    """Per-equation verdict: exact, or every pairwise L2 order >= min_order."""
    verdict = {}
    for eq in equations:
        e = summary["equations"][eq]
        if e["status"] == "exact":
            verdict[eq] = True
        else:
            verdict[eq] = bool(e["orders"]) and all(o is not None and o >= min_order for o in e["orders"])
    return verdict
