"""Closed-form diagnostics (Lorentz force, vorticity, current) compared with
finite differences of a sampled field, and deterministic negative controls."""
from __future__ import annotations

import math

import numpy as np

from .errors import InputError
from .gmc import phase_gradients
from .phase import OK, phase_batch
from .verify import (EXACT_TOL, GridSpec, current, interior_coords, lorentz_force, sample_field, vector_norms,
                     vorticity)

FD_FIELDS = {"lorentz": lorentz_force, "vorticity": vorticity, "current": current}


def _alfven_lorentz(sol, X):
    r, phi, _, status = phase_batch(sol.wave, X)
    out = np.full((3, X.shape[1]), np.nan)
    ok = status == OK
    out[:, ok] = sol.lorentz_closed_form(r[ok], phi[ok])
    return out


def _fe1_lorentz(sol, X):
    """-grad(|H|^2/2) along z; for constant Hcal this is -H0^2 rho rho_z e3."""
    s, r, gs, gr, ok = phase_gradients(sol, X)
    P = sol.profiles
    rho, drho = P["rho"](s), P["rho"](s, 1)
    rho_z = drho * gs[3]
    if sol.kappa2:
        hc = sol.Hcal(r)
        dA = P["A"](r, 1)
        # Hcal^2 = C2 - 2A, so Hcal Hcal' = -A'
        fz = -(hc ** 2 * rho * rho_z - rho ** 2 * dA * gr[3])
    else:
        fz = -sol.constants["H0"] ** 2 * rho * rho_z
    out = np.zeros((3, X.shape[1]))
    out[2] = fz
    out[:, ~ok] = np.nan
    return out


def _ff_current(sol, X):
    """curl H for H = rho H0 (0, cos phi, sin phi), phi = phi(s + r), along x.

    For kappa = 2 and phi = pi/2 this is H0 (f - g)(g' s_x - f' r_x) / (8 (2 A0 + H0^2)) e2.
    """
    s, r, gs, gr, ok = phase_gradients(sol, X)
    P = sol.profiles
    f, g = P["f"](r), P["g"](s)
    df, dg = P["f"](r, 1), P["g"](s, 1)
    sx, rx = gs[1], gr[1]
    rho = sol.rho(s, r)
    if sol.closed_form:
        rho_x = (f - g) * (df * rx - dg * sx) / (8 * (2 * sol.A0 + sol.H0sq))
    else:
        # F(rho) = f - g with F' = 2 c / rho
        rho_x = (df * rx - dg * sx) * rho / (2 * sol.c(rho))
    q = s + r
    ph, dph = P["phi"](q), P["phi"](q, 1) * (sx + rx)
    H0 = sol.H0
    out = np.zeros((3, X.shape[1]))
    out[1] = -H0 * (rho_x * np.sin(ph) + rho * np.cos(ph) * dph)
    out[2] = H0 * (rho_x * np.cos(ph) - rho * np.sin(ph) * dph)
    out[:, ~ok] = np.nan
    return out


def _fe1_perp_vorticity(sol, X):
    """curl v = w' r_y e1 - (b' r_y - eps sqrt(C2/rho) rho' s_y) e3; equals w' e1 - b' e3 at t = 0."""
    s, r, gs, gr, ok = phase_gradients(sol, X)
    P = sol.profiles
    rho = P["rho"](s)
    du_ds = -sol.eps * math.sqrt(sol.constants["C2"]) * P["rho"](s, 1) / np.sqrt(rho)
    uy = P["b"](r, 1) * gr[2] + du_ds * gs[2]
    out = np.zeros((3, X.shape[1]))
    out[0] = P["w"](r, 1) * gr[2]
    out[2] = -uy
    out[:, ~ok] = np.nan
    return out


def closed_form(solution, kind: str):
    """Callable X (4, N) -> (3, N) for the solution's closed-form field, or None."""
    tag = getattr(solution, "tag", "")
    if kind == "lorentz" and tag == "Alfven":
        return lambda X: _alfven_lorentz(solution, X)
    if kind == "lorentz" and tag in ("FE1_counter", "FE1_kappa2"):
        return lambda X: _fe1_lorentz(solution, X)
    if kind == "current" and tag in ("FF_counter", "FF_kappa2"):
        return lambda X: _ff_current(solution, X)
    if kind == "vorticity" and tag == "FE1_perp_kappa2":
        return lambda X: _fe1_perp_vorticity(solution, X)
    return None


def field_check(solution, grids, kind: str, min_valid: float = 0.8, reference=None) -> dict:
    """FD field norms per level and, where a closed form exists, the mismatch and its order.

    reference overrides the closed form (used to compare a perturbed field
    with the unperturbed formula).
    """
    if kind not in FD_FIELDS:
        raise InputError(f"unknown field check {kind!r}")
    ref = closed_form(solution, kind) if reference is None else reference
    norms, errs, hs = [], [], []
    scale = 1.0
    for g in grids:
        fld = sample_field(solution, g, with_stencil=True, min_valid=min_valid)
        F, mask = FD_FIELDS[kind](fld)
        norms.append(vector_norms(F, mask))
        hs.append(g.h)
        if ref is not None:
            T, Xc, Y, Z = interior_coords(fld)
            X = np.stack([T.ravel(), Xc.ravel(), Y.ravel(), Z.ravel()])
            with np.errstate(all="ignore"):
                C = ref(X).reshape((3,) + T.shape)
            m = mask & np.all(np.isfinite(C), axis=0)
            scale = max(scale, float(np.max(np.abs(C[:, m]))) if m.any() else 1.0)
            errs.append(vector_norms(F - C, m))
    out = {"kind": kind, "h": hs, "fd_l2": [n[0] for n in norms], "fd_linf": [n[1] for n in norms],
           "closed_form": ref is not None}
    if ref is not None:
        l2 = [e[0] for e in errs]
        linf = [e[1] for e in errs]
        floor = EXACT_TOL * scale
        orders = []
        for k in range(len(hs) - 1):
            a, b = l2[k], l2[k + 1]
            orders.append(None if (a <= floor or b <= 0) else math.log(a / b) / math.log(hs[k] / hs[k + 1]))
        exact = linf[-1] <= floor
        out.update({"error_l2": l2, "error_linf": linf, "orders": orders, "exact": bool(exact)})
    return out


def field_check_passes(result: dict, min_order: float = 1.8) -> bool:
    if not result.get("closed_form"):
        return True
    if result["exact"]:
        return True
    return bool(result["orders"]) and all(o is not None and o >= min_order for o in result["orders"])


class PerturbedSolution:
    """Wraps a solution and adds a smooth pseudo-random perturbation to one field.

    The perturbation is a sum of seeded sinusoids in (t, x, y, z), so it is
    deterministic and consistent across finite-difference stencils.
    """

    FIELDS = {"rho": [0], "p": [1], "v": [2, 3, 4], "H": [5, 6, 7]}

    def __init__(self, base, field: str = "H", amplitude: float = 1e-3, seed: int = 0, modes: int = 4):
        if field not in self.FIELDS:
            raise InputError(f"perturbation field must be one of {sorted(self.FIELDS)}")
        self.base = base
        self.tag = getattr(base, "tag", "perturbed") + "+perturbation"
        self.kappa = base.kappa
        self.rank = None
        self.metadata = dict(getattr(base, "metadata", {}))
        self.idx = self.FIELDS[field]
        rng = np.random.default_rng(seed)
        self.k = rng.uniform(2.0, 8.0, size=(len(self.idx), modes, 4))
        self.phase = rng.uniform(0.0, 2 * np.pi, size=(len(self.idx), modes))
        self.amplitude = amplitude

    def evaluate(self, X):
        vals, ok, aux = self.base.evaluate(X)
        vals = vals.copy()
        for c, comp in enumerate(self.idx):
            arg = np.einsum("mk,kn->mn", self.k[c], X) + self.phase[c][:, None]
            vals[comp] += self.amplitude * np.sum(np.sin(arg), axis=0) / self.k.shape[1]
        return vals, ok, aux


def refine(grid: GridSpec, levels=(64, 128, 256)):
    return [grid.refined(n) for n in levels]
