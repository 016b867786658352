"""Rank-2 (double wave) constructions and the existence table of wave pairs."""
from __future__ import annotations

import csv
import io
import logging

import numpy as np

from .errors import ConstructionError, InputError
from .phase import PhaseSolve2, solve_phase2
from .profiles import parse_bivariate, parse_profile, parse_vector_profile, serialize
from .simple_waves import (_epsilon, _interval, _need, _num, _vec, fast_speed, fast_velocity)
from .solution import DoubleWaveSolution, RunningIntegral, WINDOW_SAMPLES, const_vec, stack_state

log = logging.getLogger(__name__)

__all__ = [
    "solve_phase2", "PhaseSolve2", "ee_aligned", "ee_perp_a", "ee_perp_b", "ee_general_check",
    "aa", "ae1", "integrate_beta_ode", "ff_planar", "ff_counter", "fe1_counter", "fe1_perp_kappa2",
    "existence_table", "covering_constructors", "FAMILIES",
]

FAMILIES = ("E", "A", "F", "S")
_TABLE = {
    "E": "+++-",
    "A": "++--",
    "F": "+-+-",
    "S": "----",
}


def existence_table() -> np.ndarray:
    """4x4 matrix over {'+', '-'} indexed by (E, A, F, S) x (E, A, F, S)."""
    return np.array([[c for c in _TABLE[f]] for f in FAMILIES])


_COVERS = {
    ("E", "E"): ["EE_aligned", "EE_2a", "EE_2b"],
    ("A", "A"): ["AA"],
    ("A", "E"): ["AE1"],
    ("F", "F"): ["FF_planar", "FF_counter", "FF_kappa2"],
    ("F", "E"): ["FE1_counter", "FE1_kappa2", "FE1_perp_kappa2"],
}


def covering_constructors(a: str, b: str) -> list:
    """Implemented constructors realizing the pair (a, b), in either order."""
    return list(_COVERS.get((a, b), _COVERS.get((b, a), [])))


def _config(tag, constants, profiles, **extra):
    cfg = {"family": tag,
           "constants": {k: (v.tolist() if isinstance(v, np.ndarray) else v) for k, v in constants.items()},
           "profiles": {k: serialize(v) for k, v in profiles.items()}}
    cfg.update(extra)
    return cfg


def _lam(l0, l1, l2, l3, shape):
    out = np.empty((4,) + shape)
    for i, comp in enumerate((l0, l1, l2, l3)):
        out[i] = comp
    return out


def _intervals(s_interval, r_interval):
    return _interval(s_interval), _interval(r_interval)


# ---------------------------------------------------------------------------
# double entropic waves


class EEAligned(DoubleWaveSolution):
    tag = "EE_aligned"
    family = ("E", "E")

    def waves(self, s, r):
        C = self.constants
        sh = np.shape(s)
        return (_lam(0.0, np.cos(C["phi0"]), np.sin(C["phi0"]), 0.0, sh),
                _lam(0.0, np.cos(C["theta0"]), np.sin(C["theta0"]), 0.0, sh))

    def state(self, s, r):
        P = self.profiles
        sh = np.shape(s)
        Hz = P["H"](s, r)
        z = np.zeros(sh)
        return stack_state(P["rho"](s, r), self.constants["p0"] - 0.5 * Hz ** 2,
                           np.stack([z, z, P["w"](s, r)]), np.stack([z, z, Hz]), sh)


def ee_aligned(profiles, constants, kappa=5.0 / 3.0, s_interval=None, r_interval=None):
    """Stationary double entropic wave with v = w e3, H = H e3 and planar constant wave vectors."""
    P = {k: parse_bivariate(_need(profiles, k)) for k in ("rho", "w", "H")}
    C = {"p0": _num(constants, "p0"), "phi0": _num(constants, "phi0"), "theta0": _num(constants, "theta0")}
    if abs(np.sin(C["theta0"] - C["phi0"])) < 1e-8:
        raise ConstructionError("coincident wave vectors")
    si, ri = _intervals(s_interval, r_interval)
    sol = EEAligned(_config("EE_aligned", C, P, kappa=kappa, s_interval=list(si), r_interval=list(ri)),
                    kappa, C, P)
    sol._window(si, ri)
    return sol


class EEPerpA(DoubleWaveSolution):
    tag = "EE_2a"
    family = ("E", "E")

    def _dirs(self, r):
        th = self.profiles["theta"](r)
        z = np.zeros(np.shape(th))
        return np.stack([np.cos(th), np.sin(th), z]), np.stack([-np.sin(th), np.cos(th), z])

    def waves(self, s, r):
        sh = np.shape(s)
        th = self.profiles["theta"](r)
        return (_lam(0.0, np.cos(th), np.sin(th), 0.0, sh),
                _lam(-self.profiles["w"](s), 0.0, 0.0, 1.0, sh))

    def state(self, s, r):
        P = self.profiles
        sh = np.shape(s)
        _, perp = self._dirs(r)
        Hs = P["H"](s, r)
        v = P["V"](s, r) * perp
        v[2] = P["w"](s)
        return stack_state(P["rho"](s, r), self.constants["p0"] - 0.5 * Hs ** 2, v, Hs * perp, sh)


def ee_perp_a(profiles, constants, kappa=5.0 / 3.0, s_interval=None, r_interval=None):
    """Double entropic wave, H perpendicular to both wave vectors; s = lambda(r).x, r = z - w(s) t."""
    P = {"rho": parse_bivariate(_need(profiles, "rho")), "V": parse_bivariate(profiles.get("V", 0.0)),
         "H": parse_bivariate(_need(profiles, "H")), "w": parse_profile(profiles.get("w", 0.0)),
         "theta": parse_profile(profiles.get("theta", 0.0))}
    C = {"p0": _num(constants, "p0")}
    si, ri = _intervals(s_interval, r_interval)
    sol = EEPerpA(_config("EE_2a", C, P, kappa=kappa, s_interval=list(si), r_interval=list(ri)), kappa, C, P)
    s = np.linspace(*si, WINDOW_SAMPLES)
    r = np.linspace(*ri, WINDOW_SAMPLES)
    coupling = float(np.max(np.abs(P["w"](s, 1))) * np.max(np.abs(P["theta"](r, 1))))
    sol.metadata["w_theta_coupling"] = coupling
    if coupling > 0:
        log.warning("EE_2a with w'(s) theta'(r) != 0 does not satisfy continuity exactly")
    sol._window(si, ri)
    return sol


class EEPerpB(DoubleWaveSolution):
    tag = "EE_2b"
    family = ("E", "E")

    def waves(self, s, r):
        sh = np.shape(s)
        th = self.constants["theta0"]
        return (_lam(0.0, np.cos(th), np.sin(th), 0.0, sh),
                _lam(-self.profiles["w"](s), 0.0, 0.0, 1.0, sh))

    def state(self, s, r):
        P = self.profiles
        sh = np.shape(s)
        th = self.constants["theta0"]
        e0 = const_vec([-np.sin(th), np.cos(th), 0.0], sh)
        e3 = const_vec([0.0, 0.0, 1.0], sh)
        v = P["V"](s) * e0 + P["w"](s) * e3
        H = P["Hperp"](s) * e0 + P["H3"](s) * e3
        p = self.constants["p0"] - 0.5 * np.sum(H * H, axis=0)
        return stack_state(P["rho"](s, r), p, v, H, sh)


def ee_perp_b(profiles, constants, kappa=5.0 / 3.0, s_interval=None, r_interval=None):
    """Double entropic wave with H perpendicular to a constant wave vector."""
    P = {"rho": parse_bivariate(_need(profiles, "rho"))}
    for k in ("V", "w", "Hperp", "H3"):
        P[k] = parse_profile(profiles.get(k, 0.0))
    C = {"p0": _num(constants, "p0"), "theta0": _num(constants, "theta0", 0.0)}
    si, ri = _intervals(s_interval, r_interval)
    sol = EEPerpB(_config("EE_2b", C, P, kappa=kappa, s_interval=list(si), r_interval=list(ri)), kappa, C, P)
    sol._window(si, ri)
    return sol


def ee_general_check(fld) -> dict:
    """Residual norms of the reduced double-entropic system on a sampled field.

    Checks d/dt{rho, p, v, H} = 0, div v = 0, force balance
    grad p + grad|H|^2/2 - (H.grad)H = 0, (H.grad)v = 0 and div H = 0.
    Returns {name: (l2, linf)}.
    """
    from .verify import _H, _Stencil, _div, _norms, _p, _rho, _v
    st = _Stencil(fld)
    u = st.center(lambda a: a)
    v, H = u[2:5], u[5:8]
    grads = {name: st.grad(q) for name, q in (("rho", _rho), ("p", _p), ("v", _v), ("H", _H))}
    dts = {name: st.d(q, "t") for name, q in (("rho", _rho), ("p", _p), ("v", _v), ("H", _H))}
    mat = {k: dts[k] + np.einsum("j...,ji...->i...", v, grads[k]) for k in grads}
    material = np.sqrt(sum(np.sum(m * m, axis=0) for m in mat.values()))
    gB = st.grad(lambda a: 0.5 * np.sum(a[5:8] ** 2, axis=0, keepdims=True))[:, 0]
    force = grads["p"][:, 0] + gB - np.einsum("j...,ji...->i...", H, grads["H"])
    hv = np.einsum("j...,ji...->i...", H, grads["v"])
    out = {
        "material_derivative": _norms(material, st.mask),
        "div_v": _norms(_div(grads["v"]), st.mask),
        "force_balance": _norms(np.sqrt(np.sum(force * force, axis=0)), st.mask),
        "H_grad_v": _norms(np.sqrt(np.sum(hv * hv, axis=0)), st.mask),
        "div_H": _norms(_div(grads["H"]), st.mask),
    }
    return out


# ---------------------------------------------------------------------------
# double Alfven wave


class AAWave(DoubleWaveSolution):
    tag = "AA"
    family = ("A", "A")

    def __init__(self, config, kappa, constants, profiles, epsilon, s_interval):
        super().__init__(config, kappa, constants, profiles)
        self.epsilon = epsilon
        P = profiles
        self._T = RunningIntegral(lambda q: P["tau"](q) * P["h"](q, 1), s_interval)
        self.metadata["T_integral_error"] = self._T.error

    def H(self, s, r):
        P = self.profiles
        hx = P["c"](r) - self._T(s)[0]
        hz = P["h"](s)
        rest = self.constants["Hcal0"] ** 2 - hx ** 2 - hz ** 2
        with np.errstate(invalid="ignore"):
            hy = self.constants["sign_y"] * np.sqrt(np.where(rest > 0, rest, np.nan))
        return np.stack([hx, hy, hz])

    def waves(self, s, r):
        sh = np.shape(s)
        # lambda^i_0 = eps (H.l)/sqrt(rho0) - v.l vanishes because v = eps H/sqrt(rho0)
        return (_lam(0.0, 1.0, 0.0, self.profiles["tau"](s), sh), _lam(0.0, 0.0, 0.0, 1.0, sh))

    def state(self, s, r):
        C = self.constants
        H = self.H(s, r)
        return stack_state(C["rho0"], C["p0"], self.epsilon * H / np.sqrt(C["rho0"]), H, np.shape(s))


def aa(profiles, constants, epsilon=1, kappa=5.0 / 3.0, s_interval=None, r_interval=None):
    """Double Alfven wave on the sphere |H| = Hcal0.

    H = (c(r) - T(s), +-sqrt(Hcal0^2 - H1^2 - H3^2), h(s)) with T' = tau h',
    wave vectors lambda1 = (0; 1, 0, tau(s)) and lambda2 = (0; 0, 0, 1). Then
    dH/ds . lambda1 = 0 and dH/dr . lambda2 = 0 hold identically.
    """
    epsilon = _epsilon(epsilon)
    P = {"h": parse_profile(profiles.get("h", 0.0)), "tau": parse_profile(profiles.get("tau", 0.0)),
         "c": parse_profile(profiles.get("c", 0.0))}
    C = {"rho0": _num(constants, "rho0", positive=True), "p0": _num(constants, "p0", positive=True),
         "Hcal0": _num(constants, "Hcal0", positive=True), "sign_y": _num(constants, "sign_y", 1.0)}
    if C["sign_y"] not in (1.0, -1.0):
        raise InputError("sign_y must be +1 or -1")
    si, ri = _intervals(s_interval, r_interval)
    cfg = _config("AA", C, P, epsilon=epsilon, kappa=kappa, s_interval=list(si), r_interval=list(ri))
    sol = AAWave(cfg, kappa, C, P, epsilon, si)
    n = int(np.sqrt(WINDOW_SAMPLES))
    S, R = np.meshgrid(np.linspace(*si, n), np.linspace(*ri, n), indexing="ij")
    H = sol.H(S.ravel(), R.ravel())
    if not np.all(np.isfinite(H)) or np.min(np.abs(H[1])) < 1e-6 * C["Hcal0"]:
        raise ConstructionError("degenerate partials: H leaves the sphere chart on the window")
    sol._window(si, ri)
    return sol


# ---------------------------------------------------------------------------
# Alfven-entropic double wave


def _ae1_geometry(phi, psi, r):
    d1, d2, d3 = phi(r, 1), phi(r, 2), phi(r, 3)
    ps, dps = psi(r), psi(r, 1)
    return d1, d2, d3, ps, dps


def _dot(a, b):
    return np.sum(a * b, axis=0)


def _triple(a, b, c):
    return _dot(np.cross(a, b, axis=0), c)


def ae1_alpha(beta, d1, d2, ps, Hcal2, branch):
    """alpha from the quadratic |alpha phi' + beta phi'' + psi|^2 = Hcal^2; returns (alpha, Delta)."""
    B = _dot(d1, d2) * beta + _dot(d1, ps)
    n1 = _dot(d1, d1)
    Delta = B ** 2 - n1 * (_dot(d2, d2) * beta ** 2 + 2 * _dot(d2, ps) * beta + _dot(ps, ps) - Hcal2)
    with np.errstate(invalid="ignore"):
        alpha = (-B + branch * np.sqrt(Delta)) / n1
    return alpha, Delta


def ae1_beta_coefficients(r, beta, phi, psi, Hcal, branch):
    """(K, rhs) of the beta ODE K beta' = rhs at r."""
    d1, d2, d3, ps, dps = _ae1_geometry(phi, psi, r)
    n1 = _dot(d1, d1)
    K = _triple(d1, ps, d2)
    _, Delta = ae1_alpha(beta, d1, d2, ps, Hcal(r) ** 2, branch)
    c2 = _triple(d1, d2, d3)
    c1 = _triple(d1, ps, d3) + _triple(d1, d2, dps) - _dot(d1, d2) * K / n1
    with np.errstate(invalid="ignore"):
        root = np.sqrt(Delta)
    # the ODE carries the opposite sign of the square root to alpha
    c0 = -K / n1 * (_dot(d1, ps) - branch * root) + _triple(d1, ps, dps)
    return K, -(c2 * beta ** 2 + c1 * beta + c0), Delta


def integrate_beta_ode(phi, psi, Hcal, r0, r1, beta0, branch=1, h=1e-3, lead_tol=1e-12):
    """Fixed-step RK4 for the beta ODE from r0 to r1.

    Returns a dict with arrays r, beta, alpha, Delta and a 'degenerate'
    flag. If the whole ODE vanishes identically on the window beta is held
    constant; if only the leading coefficient vanishes ConstructionError is
    raised.
    """
    n = max(1, int(np.ceil(abs(r1 - r0) / h)))
    rs = np.linspace(r0, r1, n + 1)
    step = (r1 - r0) / n
    probe_b = np.array([beta0, beta0 + 1.0, beta0 - 1.0])
    K_all, _, _ = ae1_beta_coefficients(rs, np.full(rs.shape, beta0), phi, psi, Hcal, branch)
    scale = max(1.0, float(np.max(np.abs(phi(rs, 1)))) ** 3)
    degenerate = False
    if np.max(np.abs(K_all)) <= lead_tol * scale:
        rhs_max = 0.0
        for b in probe_b:
            _, rhs, _ = ae1_beta_coefficients(rs, np.full(rs.shape, b), phi, psi, Hcal, branch)
            rhs_max = max(rhs_max, float(np.nanmax(np.abs(rhs))))
        if rhs_max > lead_tol * scale:
            raise ConstructionError("vanishing leading coefficient of the beta ODE")
        degenerate = True
    elif np.min(np.abs(K_all)) <= lead_tol * scale:
        raise ConstructionError("vanishing leading coefficient of the beta ODE")
    betas = np.empty(n + 1)
    betas[0] = beta0
    if degenerate:
        betas[:] = beta0
    else:
        def f(r, b):
            K, rhs, _ = ae1_beta_coefficients(np.array([r]), np.array([b]), phi, psi, Hcal, branch)
            return float(rhs[0] / K[0])
        b = beta0
        for i in range(n):
            r = rs[i]
            k1 = f(r, b)
            k2 = f(r + step / 2, b + step / 2 * k1)
            k3 = f(r + step / 2, b + step / 2 * k2)
            k4 = f(r + step, b + step * k3)
            b = b + step / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
            betas[i + 1] = b
    d1, d2, _, ps, _ = _ae1_geometry(phi, psi, rs)
    alpha, Delta = ae1_alpha(betas, d1, d2, ps, Hcal(rs) ** 2, branch)
    return {"r": rs, "beta": betas, "alpha": alpha, "Delta": Delta, "degenerate": degenerate}


class AE1Wave(DoubleWaveSolution):
    tag = "AE1"
    family = ("A", "E")

    def __init__(self, config, kappa, constants, profiles, epsilon, traj):
        super().__init__(config, kappa, constants, profiles)
        self.epsilon = epsilon
        self.traj = traj

    def beta(self, r):
        if self.traj["degenerate"]:
            return np.full(np.shape(r), self.traj["beta"][0])
        return np.interp(r, self.traj["r"], self.traj["beta"])

    def H(self, r):
        P = self.profiles
        d1, d2, ps = P["phi"](r, 1), P["phi"](r, 2), P["psi"](r)
        beta = self.beta(r)
        alpha, _ = ae1_alpha(beta, d1, d2, ps, P["Hcal"](r) ** 2, self.constants["branch"])
        return alpha * d1 + beta * d2 + ps

    def waves(self, s, r):
        sh = np.shape(s)
        l1, l2 = self.constants["lambda1"], self.constants["lambda2"]
        phi_l2 = float(self.constants["phi0_dot_l2"])
        return (_lam(0.0, l1[0], l1[1], l1[2], sh), _lam(-phi_l2, l2[0], l2[1], l2[2], sh))

    def state(self, s, r):
        P = self.profiles
        rho = P["rho"](r)
        H = self.H(r)
        v = self.epsilon * H / np.sqrt(rho) + P["phi"](r)
        return stack_state(rho, self.constants["p0"] - 0.5 * P["Hcal"](r) ** 2, v, H, np.shape(s))

    def beta_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["r", "beta", "alpha", "Delta"])
        for row in zip(self.traj["r"], self.traj["beta"], self.traj["alpha"], self.traj["Delta"]):
            w.writerow([f"{x:.17g}" for x in row])
        return buf.getvalue()


def ae1_constraint_residuals(phi, psi, l1, l2, r) -> dict:
    d1, d2, d3 = phi(r, 1), phi(r, 2), phi(r, 3)
    ps, dps = psi(r), psi(r, 1)
    L1 = l1.reshape(3, 1)
    L2 = l2.reshape(3, 1)
    return {
        "phi.l1": float(np.max(np.abs(_dot(phi(r), L1)))),
        "phi'.l1": float(np.max(np.abs(_dot(d1, L1)))),
        "phi'.l2": float(np.max(np.abs(_dot(d1, L2)))),
        "phi''.l1": float(np.max(np.abs(_dot(d2, L1)))),
        "phi''.l2": float(np.max(np.abs(_dot(d2, L2)))),
        "phi'''.l2": float(np.max(np.abs(_dot(d3, L2)))),
        "psi.l2": float(np.max(np.abs(_dot(ps, L2)))),
        "psi'.l2": float(np.max(np.abs(_dot(dps, L2)))),
    }


def ae1(profiles, constants, epsilon=1, kappa=5.0 / 3.0, s_interval=None, r_interval=None):
    """Alfven-entropic double wave with constant wave directions lambda1 (Alfven), lambda2 (entropic).

    H = alpha phi' + beta phi'' + psi with alpha from the |H| = Hcal quadratic
    and beta from the ODE, integrated in r by RK4. Phases s = lambda1.x and
    r = lambda2.x - (lambda2.phi) t.
    """
    epsilon = _epsilon(epsilon)
    P = {"phi": parse_vector_profile(_need(profiles, "phi")), "psi": parse_vector_profile(_need(profiles, "psi")),
         "rho": parse_profile(_need(profiles, "rho")), "Hcal": parse_profile(_need(profiles, "Hcal"))}
    l1 = _vec(_need(constants, "lambda1"), "lambda1")
    l2 = _vec(_need(constants, "lambda2"), "lambda2")
    if np.linalg.norm(np.cross(l1, l2)) < 1e-8 * np.linalg.norm(l1) * np.linalg.norm(l2):
        raise ConstructionError("wave vectors must be linearly independent")
    branch = int(_num(constants, "branch", 1.0))
    if branch not in (1, -1):
        raise InputError("branch must be +1 or -1")
    C = {"p0": _num(constants, "p0"), "lambda1": l1, "lambda2": l2, "beta0": _num(constants, "beta0", 0.0),
         "r0": _num(constants, "r0", 0.0), "branch": branch}
    si, ri = _intervals(s_interval, r_interval)
    r = np.linspace(*ri, 256)
    cons = ae1_constraint_residuals(P["phi"], P["psi"], l1, l2, r)
    if max(cons.values()) > 1e-10:
        bad = {k: v for k, v in cons.items() if v > 1e-10}
        raise ConstructionError(f"algebraic constraints violated: {bad}")
    # phi . lambda2 is constant because phi' . lambda2 = 0
    C["phi0_dot_l2"] = float(P["phi"](np.array([C["r0"]]))[:, 0] @ l2)
    lo, hi = ri
    r0 = C["r0"]
    if not lo <= r0 <= hi:
        raise InputError("r0 must lie in r_interval")
    parts = []
    if hi > r0:
        parts.append(integrate_beta_ode(P["phi"], P["psi"], P["Hcal"], r0, hi, C["beta0"], branch))
    if r0 > lo:
        parts.append(integrate_beta_ode(P["phi"], P["psi"], P["Hcal"], r0, lo, C["beta0"], branch))
    keys = ("r", "beta", "alpha", "Delta")
    if len(parts) == 2:
        up, down = parts
        traj = {k: np.concatenate([down[k][::-1], up[k][1:]]) for k in keys}
    else:
        traj = {k: (parts[0][k] if parts[0]["r"][0] <= parts[0]["r"][-1] else parts[0][k][::-1]) for k in keys}
    traj["degenerate"] = any(p["degenerate"] for p in parts)
    if np.nanmin(traj["Delta"]) < 0 or not np.all(np.isfinite(traj["Delta"])):
        raise ConstructionError("discriminant negative")
    cfg = _config("AE1", {k: v for k, v in C.items() if k != "phi0_dot_l2"}, P, epsilon=epsilon,
                  kappa=kappa, s_interval=list(si), r_interval=list(ri))
    sol = AE1Wave(cfg, kappa, C, P, epsilon, traj)
    H = sol.H(traj["r"])
    sol.metadata.update({
        "beta_ode_degenerate": traj["degenerate"],
        "Delta_min": float(np.min(traj["Delta"])),
        "beta_range": [float(np.min(traj["beta"])), float(np.max(traj["beta"]))],
        "Hcal_residual": float(np.max(np.abs(np.sum(H * H, axis=0) - P["Hcal"](traj["r"]) ** 2))),
        "constraint_residuals": cons,
        "alpha_beta_depend_on": "r",
    })
    if traj["degenerate"]:
        log.info("AE1: beta ODE vanishes identically for these profiles; beta held at beta0")
    sol._window(si, ri)
    return sol


# ---------------------------------------------------------------------------
# magnetoacoustic double waves


class MonotoneInverse:
    """Inverse of an increasing F on a density bracket [lo, hi].

    Inverse values at Chebyshev nodes of [F(lo), F(hi)] come from bisection
    plus Newton steps on the true F (dF is its analytic derivative); log(rho)
    is then interpolated in F and validated by substituting back. If the
    interpolant misses the tolerance every call falls back to bisection and
    Newton on F. Targets outside [F(lo), F(hi)] map to NaN.
    """

    def __init__(self, F, dF, lo, hi, tol=1e-12):
        self.F, self.dF = F, dF
        self.lo, self.hi = float(lo), float(hi)
        self.Flo, self.Fhi = float(F(np.array([lo]))[0]), float(F(np.array([hi]))[0])
        if not self.Fhi > self.Flo:
            raise ConstructionError("F is not increasing on the density bracket")
        scale = max(1.0, abs(self.Flo), abs(self.Fhi))
        check = self.Flo + (self.Fhi - self.Flo) * np.linspace(0.0, 1.0, 203)[1:-1]
        self.coeffs = None
        self.error = float("inf")
        for degree in (64, 128, 256):
            nodes = np.polynomial.chebyshev.chebpts2(degree + 1)
            rho = self.solve(self._F_of(nodes))
            coeffs = np.polynomial.chebyshev.chebfit(nodes, np.log(rho), degree)
            approx = np.exp(np.polynomial.chebyshev.chebval(self._t(check), coeffs))
            err = float(np.max(np.abs(F(approx) - check))) / scale
            self.error = min(self.error, err)
            if err <= tol:
                self.coeffs = coeffs
                break

    def _F_of(self, t):
        return 0.5 * (self.Fhi + self.Flo) + 0.5 * (self.Fhi - self.Flo) * t

    def _t(self, f):
        return (2 * f - (self.Fhi + self.Flo)) / (self.Fhi - self.Flo)

    def solve(self, target, bisections=60, newton=2):
        """Direct inverse: bisection in log(rho), then Newton on F."""
        target = np.asarray(target, dtype=float)
        a = np.full(target.shape, np.log(self.lo))
        b = np.full(target.shape, np.log(self.hi))
        for _ in range(bisections):
            m = 0.5 * (a + b)
            up = self.F(np.exp(m)) < target
            a = np.where(up, m, a)
            b = np.where(up, b, m)
        rho = np.exp(0.5 * (a + b))
        for _ in range(newton):
            rho = rho - (self.F(rho) - target) / self.dF(rho)
        return rho

    def __call__(self, target):
        target = np.asarray(target, dtype=float)
        inside = (target >= self.Flo) & (target <= self.Fhi)
        safe = np.where(inside, target, self.Flo)
        if self.coeffs is None:
            rho = self.solve(safe)
        else:
            rho = np.exp(np.polynomial.chebyshev.chebval(self._t(safe), self.coeffs))
        return np.where(inside, rho, np.nan)


class _FastPair(DoubleWaveSolution):
    """Shared density map rho(s, r) = F^-1(f(r) - g(s))."""

    def _setup_density(self, kappa, A0, H0sq, bracket, epsilon):
        self.A0 = A0
        self.beta0 = H0sq / (kappa * A0)
        self.eps = epsilon
        self.bracket = bracket
        vel, branch, info = fast_velocity(kappa, A0, self.beta0, bracket)
        self.vel = vel
        self.metadata.update(info)
        self.metadata["beta0"] = self.beta0
        self.metadata["kappa1_flag"] = kappa == 1
        self.closed_form = kappa == 2
        self.metadata["density_map"] = "closed-form" if self.closed_form else "bracketed-inverse"
        if not self.closed_form:
            self.inverse = MonotoneInverse(lambda q: 2.0 * vel(q), lambda q: 2.0 * self.c(q) / q, *bracket)
            self.metadata["inverse_interpolation_error"] = self.inverse.error

    def rho(self, s, r):
        diff = self.eps * (self.profiles["f"](r) - self.profiles["g"](s))
        if self.closed_form:
            with np.errstate(invalid="ignore"):
                return np.where(diff > 0, diff ** 2 / (16 * (2 * self.A0 + self.H0sq)), np.nan)
        return self.inverse(diff)

    def c(self, rho):
        return fast_speed(rho, self.kappa, self.A0, self.beta0)


class FFPlanar(_FastPair):
    tag = "FF_planar"
    family = ("F", "F")

    def _fields(self, s, r):
        P = self.profiles
        rho = self.rho(s, r)
        V = P["V"](s, r)
        u = V + 0.5 * (P["f"](r) + P["g"](s))
        return rho, u, V

    def waves(self, s, r):
        sh = np.shape(s)
        rho, u, V = self._fields(s, r)
        dF = self.eps * self.c(rho)
        return _lam(dF - u, 1.0, 0.0, 0.0, sh), _lam(dF - V, 0.0, 1.0, 0.0, sh)

    def state(self, s, r):
        sh = np.shape(s)
        rho, u, V = self._fields(s, r)
        v = np.stack([u, V, self.profiles["w"](s - r)])
        H = np.stack([np.zeros(sh), np.zeros(sh), rho * self.H0])
        return stack_state(rho, self.A0 * rho ** self.kappa, v, H, sh)


def _bracket(constants):
    br = constants.get("rho_bracket", [1e-3, 50.0])
    lo, hi = map(float, br)
    if not 0 < lo < hi:
        raise InputError("rho_bracket must satisfy 0 < min < max")
    return lo, hi


def ff_planar(profiles, constants, epsilon=1, kappa=2.0, s_interval=None, r_interval=None):
    """Planar FF double wave: H = rho H0 e3, s along x, r along y."""
    epsilon = _epsilon(epsilon)
    P = {"f": parse_profile(_need(profiles, "f")), "g": parse_profile(_need(profiles, "g")),
         "V": parse_bivariate(profiles.get("V", 0.0)), "w": parse_profile(profiles.get("w", 0.0))}
    C = {"A0": _num(constants, "A0", positive=True), "H0": _num(constants, "H0"),
         "rho_bracket": list(_bracket(constants))}
    si, ri = _intervals(s_interval, r_interval)
    cfg = _config("FF_planar", C, P, epsilon=epsilon, kappa=kappa, s_interval=list(si), r_interval=list(ri))
    sol = FFPlanar(cfg, kappa, C, P)
    sol.H0 = C["H0"]
    sol.H0sq = C["H0"] ** 2
    if sol.H0sq == 0:
        raise InputError("H0 must be nonzero")
    sol._setup_density(kappa, C["A0"], sol.H0sq, tuple(C["rho_bracket"]), epsilon)
    ok = sol._window(si, ri)
    if not ok.any():
        raise ConstructionError("f(r) - g(s) outside the range of F on the whole window")
    return sol


class FFCounter(_FastPair):
    tag = "FF_counter"
    family = ("F", "F")

    def _fields(self, s, r):
        P = self.profiles
        rho = self.rho(s, r)
        return rho, 0.5 * (P["f"](r) + P["g"](s))

    def waves(self, s, r):
        sh = np.shape(s)
        rho, u = self._fields(s, r)
        c = self.c(rho)
        return _lam(c - u, 1.0, 0.0, 0.0, sh), _lam(-(c + u), 1.0, 0.0, 0.0, sh)

    def state(self, s, r):
        P = self.profiles
        sh = np.shape(s)
        rho, u = self._fields(s, r)
        q = s + r
        v = np.stack([u, P["v"](q), P["w"](q)])
        ph = P["phi"](q)
        H = rho * self.H0 * np.stack([np.zeros(sh), np.cos(ph), np.sin(ph)])
        return stack_state(rho, self.A0 * rho ** self.kappa, v, H, sh)

    def current_closed_form(self, s, r):
        """J = H0 (f - g)(g' - f') e2 / (8 (2 A0 + H0^2)) for the kappa = 2 field along e3."""
        P = self.profiles
        f, g = P["f"](r), P["g"](s)
        J2 = self.H0 / (8 * (2 * self.A0 + self.H0sq)) * (f - g) * (P["g"](s, 1) - P["f"](r, 1))
        z = np.zeros(np.shape(J2))
        return np.stack([z, J2, z])


def ff_counter(profiles, constants, kappa=2.0, s_interval=None, r_interval=None):
    """One-dimensional counter-propagating FF double wave along x.

    At kappa = 2 the density is the closed form (f - g)^2 / (16 (2 A0 + H0^2))
    and the solution is tagged FF_kappa2.
    """
    P = {"f": parse_profile(_need(profiles, "f")), "g": parse_profile(_need(profiles, "g"))}
    for k, d in (("v", 0.0), ("w", 0.0), ("phi", np.pi / 2)):
        P[k] = parse_profile(profiles.get(k, d))
    C = {"A0": _num(constants, "A0", positive=True), "H0": _num(constants, "H0"),
         "rho_bracket": list(_bracket(constants))}
    si, ri = _intervals(s_interval, r_interval)
    cfg = _config("FF_counter", C, P, kappa=kappa, s_interval=list(si), r_interval=list(ri))
    sol = FFCounter(cfg, kappa, C, P)
    if kappa == 2:
        sol.tag = "FF_kappa2"
        sol.metadata["tag"] = "FF_kappa2"
    sol.H0 = C["H0"]
    sol.H0sq = C["H0"] ** 2
    if sol.H0sq == 0:
        raise InputError("H0 must be nonzero")
    # counter-propagating pair: the s family moves with +c, the r family with -c
    sol._setup_density(kappa, C["A0"], sol.H0sq, tuple(C["rho_bracket"]), 1)
    ok = sol._window(si, ri)
    if not ok.any():
        raise ConstructionError("f(r) - g(s) outside the range of F on the whole window")
    return sol


class FE1Counter(DoubleWaveSolution):
    tag = "FE1_counter"
    family = ("F", "E")

    def __init__(self, config, kappa, constants, profiles, epsilon):
        super().__init__(config, kappa, constants, profiles)
        self.eps = epsilon
        C = constants
        self.kappa2 = "C2" in C
        if not self.kappa2:
            self.beta0 = C["H0"] ** 2 / (kappa * C["A0"])
            rho_s = profiles["rho"](np.linspace(*config["s_interval"], WINDOW_SAMPLES))
            vel, _, info = fast_velocity(kappa, C["A0"], self.beta0,
                                         (float(np.min(rho_s)), float(np.max(rho_s))))
            self.vel = vel
            self.metadata.update(info)
            self.metadata["beta0"] = self.beta0

    def _w_c(self, s, r):
        rho = self.profiles["rho"](s)
        C = self.constants
        if self.kappa2:
            c = np.sqrt(C["C2"] * rho)
            # w = -2 eps sqrt(C2 rho) makes the s family a fast wave
            return rho, -2 * self.eps * c, c
        c = fast_speed(rho, self.kappa, C["A0"], self.beta0)
        return rho, -self.eps * self.vel(rho), c

    def Hcal(self, r):
        if self.kappa2:
            with np.errstate(invalid="ignore"):
                return np.sqrt(self.constants["C2"] - 2 * self.profiles["A"](r))
        return np.full(np.shape(r), self.constants["H0"])

    def waves(self, s, r):
        sh = np.shape(s)
        _, w, c = self._w_c(s, r)
        return _lam(self.eps * c - w, 0.0, 0.0, 1.0, sh), _lam(-w, 0.0, 0.0, 1.0, sh)

    def state(self, s, r):
        P = self.profiles
        sh = np.shape(s)
        rho, w, _ = self._w_c(s, r)
        al = P["alpha"](r)
        v = np.stack([al[1], -al[0], w])  # alpha x e3
        ph = P["phi"](r)
        H = rho * self.Hcal(r) * np.stack([np.cos(ph), np.sin(ph), np.zeros(sh)])
        if self.kappa2:
            p = P["A"](r) * rho ** 2
        else:
            p = self.constants["A0"] * rho ** self.kappa
        return stack_state(rho, p, v, H, sh)


def fe1_counter(profiles, constants, epsilon=1, kappa=5.0 / 3.0, s_interval=None, r_interval=None):
    """FE1 double wave along z: fast family s, entropic family r.

    With constant 'C2' and a profile 'A' (kappa = 2 only) the pressure is
    A(r) rho^2 and Hcal(r) = sqrt(C2 - 2 A(r)) (tag FE1_kappa2).
    """
    epsilon = _epsilon(epsilon)
    P = {"rho": parse_profile(_need(profiles, "rho")), "phi": parse_profile(profiles.get("phi", 0.0)),
         "alpha": parse_vector_profile(profiles.get("alpha", [0.0, 0.0, 0.0]))}
    si, ri = _intervals(s_interval, r_interval)
    if "C2" in constants:
        if kappa != 2:
            raise InputError("the C2 / A(r) variant requires kappa = 2")
        P["A"] = parse_profile(_need(profiles, "A"))
        C = {"C2": _num(constants, "C2", positive=True)}
        tag = "FE1_kappa2"
        A = P["A"](np.linspace(*ri, WINDOW_SAMPLES))
        if np.any(C["C2"] - 2 * A < 0):
            raise ConstructionError("C2 - 2A < 0")
        if np.any(A <= 0):
            raise ConstructionError("A(r) must be positive")
    else:
        C = {"A0": _num(constants, "A0", positive=True), "H0": _num(constants, "H0")}
        if C["H0"] == 0:
            raise InputError("H0 must be nonzero")
        tag = "FE1_counter"
    if np.min(P["rho"](np.linspace(*si, WINDOW_SAMPLES))) <= 0:
        raise ConstructionError("density profile must be positive on the window")
    cfg = _config(tag, C, P, epsilon=epsilon, kappa=kappa, s_interval=list(si), r_interval=list(ri))
    sol = FE1Counter(cfg, kappa, C, P, epsilon)
    sol.tag = tag
    sol.metadata["tag"] = tag
    sol._window(si, ri)
    return sol


class FE1Perp(DoubleWaveSolution):
    tag = "FE1_perp_kappa2"
    family = ("F", "E")

    def __init__(self, config, kappa, constants, profiles, epsilon):
        super().__init__(config, kappa, constants, profiles)
        self.eps = epsilon

    def waves(self, s, r):
        sh = np.shape(s)
        P = self.profiles
        root = np.sqrt(self.constants["C2"] * P["rho"](s))
        return (_lam(3 * self.eps * root - P["b"](r), 1.0, 0.0, 0.0, sh),
                _lam(-self.constants["v0"], 0.0, 1.0, 0.0, sh))

    def state(self, s, r):
        P = self.profiles
        C = self.constants
        sh = np.shape(s)
        rho = P["rho"](s)
        u = P["b"](r) - 2 * self.eps * np.sqrt(C["C2"] * rho)
        v = np.stack([u, np.full(sh, C["v0"]), P["w"](r)])
        with np.errstate(invalid="ignore"):
            Hcal = np.sqrt(C["C2"] - 2 * P["A"](r))
        H = np.stack([np.zeros(sh), np.zeros(sh), rho * Hcal])
        return stack_state(rho, P["A"](r) * rho ** 2, v, H, sh)

    def vorticity_closed_form(self, s, r):
        P = self.profiles
        z = np.zeros(np.shape(r))
        return np.stack([P["w"](r, 1), z, -P["b"](r, 1)])


def fe1_perp_kappa2(profiles, constants, epsilon=1, s_interval=None, r_interval=None):
    """kappa = 2 FE1 wave with both wave vectors orthogonal to H = rho Hcal(r) e3."""
    epsilon = _epsilon(epsilon)
    P = {"rho": parse_profile(_need(profiles, "rho")), "b": parse_profile(profiles.get("b", 0.0)),
         "w": parse_profile(profiles.get("w", 0.0)), "A": parse_profile(_need(profiles, "A"))}
    C = {"C2": _num(constants, "C2", positive=True), "v0": _num(constants, "v0", 0.0)}
    si, ri = _intervals(s_interval, r_interval)
    A = P["A"](np.linspace(*ri, WINDOW_SAMPLES))
    if np.any(C["C2"] - 2 * A < 0):
        raise ConstructionError("C2 - 2A < 0")
    if np.any(A <= 0):
        raise ConstructionError("A(r) must be positive")
    if np.min(P["rho"](np.linspace(*si, WINDOW_SAMPLES))) <= 0:
        raise ConstructionError("density profile must be positive on the window")
    cfg = _config("FE1_perp_kappa2", C, P, epsilon=epsilon, kappa=2.0, s_interval=list(si), r_interval=list(ri))
    sol = FE1Perp(cfg, 2.0, C, P, epsilon)
    b_slope = float(np.max(np.abs(P["b"](np.linspace(*ri, WINDOW_SAMPLES), 1))))
    sol.metadata["b_slope"] = b_slope
    if b_slope > 0:
        log.warning("FE1_perp_kappa2 with b'(r) != 0 does not satisfy the y-momentum equation exactly")
    sol._window(si, ri)
    return sol
