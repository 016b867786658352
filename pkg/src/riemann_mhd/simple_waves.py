"""Rank-1 (simple wave) exact solutions and their evaluation."""
from __future__ import annotations

import logging

import numpy as np

from .core import State
from .errors import ConstructionError, InputError
from .phase import PhaseSolve, solve_phase
from .profiles import parse_profile, parse_vector_profile, serialize
from .solution import (RunningIntegral, SimpleWaveSolution, WINDOW_SAMPLES, const_vec, cumulative_integral,
                       stack_state)
from .specfun import artanh_real, hyp2f1

log = logging.getLogger(__name__)

__all__ = [
    "solve_phase", "PhaseSolve", "entropic_e1", "entropic_e2", "entropic_e3", "alfven",
    "fast_ortho", "slow_parallel", "evaluate_simple", "fast_velocity", "reduced_ode_residual",
]

ODE_TOL = 1e-8


def _vec(value, name):
    try:
        arr = np.asarray(value, dtype=float).reshape(3)
    except (TypeError, ValueError) as exc:
        raise InputError(f"{name} must be a 3-vector") from exc
    if not np.all(np.isfinite(arr)):
        raise InputError(f"{name} must be finite")
    return arr


def _num(constants, name, default=None, positive=False):
    if name not in constants:
        if default is None:
            raise InputError(f"missing constant {name!r}")
        return float(default)
    try:
        val = float(constants[name])
    except (TypeError, ValueError) as exc:
        raise InputError(f"constant {name!r} must be a number") from exc
    if not np.isfinite(val) or (positive and val <= 0):
        raise InputError(f"constant {name!r} must be {'> 0' if positive else 'finite'}")
    return val


def _epsilon(eps):
    if eps not in (1, -1):
        raise InputError("epsilon must be +1 or -1")
    return int(eps)


def _need(profiles, name):
    if name not in profiles:
        raise InputError(f"missing profile {name!r}")
    return profiles[name]


def _config(tag, constants, profiles, **extra):
    cfg = {"family": tag, "constants": {k: (v.tolist() if isinstance(v, np.ndarray) else v)
                                        for k, v in constants.items()},
           "profiles": {k: serialize(v) for k, v in profiles.items()}}
    cfg.update(extra)
    return cfg


def _interval(value, default=(-1.0, 1.0)):
    if value is None:
        return tuple(default)
    lo, hi = map(float, value)
    if not hi > lo:
        raise InputError("interval must have max > min")
    return lo, hi


# ---------------------------------------------------------------------------
# fast magnetoacoustic velocity v(rho) with dv/drho = c_f / rho


def fast_speed(rho, kappa, A0, beta0):
    """Fast speed for H = rho H0 orthogonal to the wave: c^2 = kappa A0 (rho^(k-1) + beta0 rho)."""
    rho = np.asarray(rho, dtype=float)
    return np.sqrt(kappa * A0 * (rho ** (kappa - 1.0) + beta0 * rho))


def fast_velocity_printed(rho, kappa, A0, beta0):
    """Closed form with the three kappa branches, as commonly quoted."""
    rho = np.asarray(rho, dtype=float)
    if kappa == 1:
        q = np.sqrt(beta0 * rho + 1.0)
        return 2.0 * np.sqrt(A0) * (q - artanh_real(q))
    if kappa == 2:
        return 2.0 * np.sqrt(2.0 * A0 * (beta0 + 1.0)) * np.sqrt(rho)
    m = kappa - 2.0
    a1 = 1.0 / (2.0 * m)
    z = -rho ** m / beta0
    pref = np.sqrt(kappa * A0) / (kappa - 1.0) * np.sqrt(rho ** (kappa - 1.0) + beta0 * rho)
    brk = 1.0 + m * np.sqrt(beta0) / np.sqrt(rho ** m + beta0)
    return 2.0 * pref * brk * hyp2f1(a1, 0.5, 1.0 + a1, z)


def fast_velocity_corrected(rho, kappa, A0, beta0):
    """2 sqrt(kappa A0 beta0 rho) 2F1(-1/2, 1/(2m); 1 + 1/(2m); -rho^m / beta0), m = kappa - 2.

    This is the antiderivative of c_f/rho from 0 (kappa > 2) or up to a
    constant (1 < kappa < 2).
    """
    rho = np.asarray(rho, dtype=float)
    m = kappa - 2.0
    q = 1.0 / (2.0 * m)
    return 2.0 * np.sqrt(kappa * A0 * beta0 * rho) * hyp2f1(-0.5, q, 1.0 + q, -rho ** m / beta0)


def fast_velocity_quadrature(rho, kappa, A0, beta0, rho_ref=1.0):
    """int_{rho_ref}^{rho} c_f(q)/q dq by Gauss-Legendre quadrature."""
    return cumulative_integral(lambda q: fast_speed(q, kappa, A0, beta0) / q, rho, lower=rho_ref)


def velocity_ode_residual(fn, rho_samples, kappa, A0, beta0):
    """max relative |dv/drho - c_f/rho| over samples, by central differences."""
    rho = np.asarray(rho_samples, dtype=float)
    h = 1e-5 * rho
    with np.errstate(all="ignore"):
        dv = (np.asarray(fn(rho + h)) - np.asarray(fn(rho - h))) / (2 * h)
    target = fast_speed(rho, kappa, A0, beta0) / rho
    res = np.abs(dv - target) / np.abs(target)
    if not np.all(np.isfinite(res)):
        return float("inf")
    return float(np.max(res))


def fast_velocity(kappa, A0, beta0, rho_range=(0.05, 5.0)):
    """Select a validated v(rho) branch.

    Tries the quoted closed form, then the corrected hypergeometric form,
    then quadrature; the first with ODE residual <= 1e-8 on rho_range is
    used. Returns (callable, branch name, diagnostics).
    """
    rho_s = np.geomspace(rho_range[0], rho_range[1], 64)
    tried = {}
    candidates = [("printed", fast_velocity_printed)]
    if kappa not in (1, 2) and kappa > 1:
        candidates.append(("corrected-2F1", fast_velocity_corrected))
    candidates.append(("quadrature", fast_velocity_quadrature))
    for name, raw in candidates:
        def fn(r, raw=raw):
            return raw(r, kappa, A0, beta0)
        try:
            res = velocity_ode_residual(fn, rho_s, kappa, A0, beta0)
        except (InputError, ArithmeticError) as exc:
            log.debug("velocity branch %s failed: %s", name, exc)
            res = float("inf")
        tried[name] = res
        if res <= ODE_TOL:
            if name != "printed":
                log.info("fast velocity: quoted form rejected (residual %.3g), using %s",
                         tried["printed"], name)
            return fn, name, {"velocity_branch": name, "ode_residuals": tried}
    raise ConstructionError(f"no fast-velocity branch passes the ODE check: {tried}")


# ---------------------------------------------------------------------------


class E1Wave(SimpleWaveSolution):
    tag = family = "E1"

    def __init__(self, config, kappa, constants, profiles):
        super().__init__(config, kappa, constants, profiles)
        self.p0 = constants["p0"]
        self.v0 = constants["v0"]
        P = self.profiles
        self._dv = lambda q: P["alpha"].eval(q) * self._H(q) + P["beta"].eval(q) * self._H(q, 1)
        self._integral = RunningIntegral(self._dv, config["r_interval"])
        self.metadata["velocity_integral_error"] = self._integral.error

    def _H(self, r, order=0):
        return self.profiles["H"].eval(r, order)

    def velocity(self, r):
        return self.v0.reshape((3,) + (1,) * np.ndim(r)) + self._integral(r)

    def lvec(self, r):
        H, dH = self._H(r), self._H(r, 1)
        return np.cross(H, dH, axis=0) / np.sum(H * H, axis=0)

    def wave(self, r):
        lv = self.lvec(r)
        return np.concatenate([-np.sum(lv * self.velocity(r), axis=0)[None], lv])

    def state(self, r):
        r = np.asarray(r, dtype=float)
        H = self._H(r)
        return stack_state(self.profiles["rho"].eval(r), self.p0 - 0.5 * np.sum(H * H, axis=0),
                           self.velocity(r), H, r.shape)


def entropic_e1(profiles, constants, kappa=5.0 / 3.0, r_interval=None) -> E1Wave:
    """Entropic plane wave: v' = alpha H + beta H', lambda = H x H' / |H|^2."""
    P = {"rho": parse_profile(_need(profiles, "rho")), "H": parse_vector_profile(_need(profiles, "H")),
         "alpha": parse_profile(profiles.get("alpha", 0.0)), "beta": parse_profile(profiles.get("beta", 0.0))}
    C = {"p0": _num(constants, "p0"), "v0": _vec(constants.get("v0", [0, 0, 0]), "v0")}
    ri = _interval(r_interval)
    sol = E1Wave(_config("E1", C, P, kappa=kappa, r_interval=list(ri)), kappa, C, P)
    r = np.linspace(*ri, WINDOW_SAMPLES)
    H, dH = sol._H(r), sol._H(r, 1)
    cross = np.linalg.norm(np.cross(H, dH, axis=0), axis=0)
    if np.min(cross) <= 1e-12 * max(1.0, float(np.max(np.linalg.norm(H, axis=0)) ** 2)):
        raise ConstructionError("wave vector vanishes: H and H' are parallel")
    if np.any(C["p0"] - 0.5 * np.sum(H * H, axis=0) <= 0):
        raise ConstructionError("pressure positivity violated: p0 <= |H|^2/2")
    sol._window(ri)
    return sol


class E2Wave(SimpleWaveSolution):
    tag = family = "E2"

    def wave(self, r):
        r = np.asarray(r, dtype=float)
        out = np.zeros((4,) + r.shape)
        out[0] = -self.constants["U0"]
        out[1] = 1.0
        out[2] = 1.0
        return out

    def state(self, r):
        r = np.asarray(r, dtype=float)
        P = self.profiles
        u = P["u"].eval(r)
        Hs = P["H"].eval(r)
        zeros = np.zeros(r.shape)
        v = np.stack([u, self.constants["U0"] - u, P["w"].eval(r)])
        return stack_state(P["rho"].eval(r), self.constants["p0"] - 0.5 * Hs ** 2, v,
                           np.stack([zeros, zeros, Hs]), r.shape)


def entropic_e2(profiles, constants, kappa=5.0 / 3.0, r_interval=None) -> E2Wave:
    """Entropic wave along x + y with u + v = U0 and H = H(r) e3."""
    P = {k: parse_profile(profiles.get(k, 0.0)) for k in ("u", "w")}
    P["rho"] = parse_profile(_need(profiles, "rho"))
    P["H"] = parse_profile(_need(profiles, "H"))
    C = {"p0": _num(constants, "p0"), "U0": _num(constants, "U0", 0.0)}
    ri = _interval(r_interval)
    sol = E2Wave(_config("E2", C, P, kappa=kappa, r_interval=list(ri)), kappa, C, P)
    if np.any(C["p0"] - 0.5 * P["H"].eval(np.linspace(*ri, WINDOW_SAMPLES)) ** 2 <= 0):
        raise ConstructionError("pressure positivity violated: p0 <= H^2/2")
    sol._window(ri)
    return sol


class E3Wave(SimpleWaveSolution):
    tag = family = "E3"

    def wave(self, r):
        r = np.asarray(r, dtype=float)
        out = np.ones((4,) + r.shape)
        out[0] = -float(np.sum(self.constants["v0"]))
        return out

    def state(self, r):
        r = np.asarray(r, dtype=float)
        C = self.constants
        return stack_state(self.profiles["rho"].eval(r), C["p0"], const_vec(C["v0"], r.shape),
                           const_vec(C["H0"], r.shape), r.shape)


def entropic_e3(profiles, constants, kappa=5.0 / 3.0, r_interval=None) -> E3Wave:
    """Density wave rho(x + y + z - C0 t) in a uniform flow and field."""
    P = {"rho": parse_profile(_need(profiles, "rho"))}
    C = {"p0": _num(constants, "p0", positive=True), "v0": _vec(constants.get("v0", [0, 0, 0]), "v0"),
         "H0": _vec(constants.get("H0", [0, 0, 0]), "H0")}
    C["C0"] = float(np.sum(C["v0"]))
    ri = _interval(r_interval)
    sol = E3Wave(_config("E3", {k: C[k] for k in ("p0", "v0", "H0")}, P, kappa=kappa,
                         r_interval=list(ri)), kappa, C, P)
    sol._window(ri)
    return sol


class AlfvenWave(SimpleWaveSolution):
    tag = family = "Alfven"

    def __init__(self, config, kappa, constants, profiles, epsilon, aux):
        super().__init__(config, kappa, constants, profiles)
        self.epsilon = epsilon
        self.aux = aux

    def H(self, r, order=0):
        P = self.profiles
        th, ph = P["Theta"].eval(r), P["Phi"].eval(r)
        h0 = self.constants["Hcal0"]
        if order == 0:
            return h0 * np.stack([np.sin(th) * np.cos(ph), np.sin(th) * np.sin(ph), np.cos(th)])
        dth, dph = P["Theta"].eval(r, 1), P["Phi"].eval(r, 1)
        return h0 * np.stack([
            np.cos(th) * np.cos(ph) * dth - np.sin(th) * np.sin(ph) * dph,
            np.cos(th) * np.sin(ph) * dth + np.sin(th) * np.cos(ph) * dph,
            -np.sin(th) * dth])

    def lvec(self, r):
        c = const_vec(self.aux, np.shape(r))
        lv = np.cross(self.H(r, 1), c, axis=0)
        return lv / np.linalg.norm(lv, axis=0)

    def wave(self, r):
        lv = self.lvec(r)
        # lambda0 = eps (H.l)/sqrt(rho0) - v.l reduces to -v0.l
        return np.concatenate([-np.einsum("i...,i->...", lv, self.constants["v0"])[None], lv])

    def state(self, r):
        r = np.asarray(r, dtype=float)
        C = self.constants
        H = self.H(r)
        v = self.epsilon * H / np.sqrt(C["rho0"]) + const_vec(C["v0"], r.shape)
        return stack_state(C["rho0"], C["p0"], v, H, r.shape)

    def lorentz_closed_form(self, r, phi=1.0):
        """(H.lambda) H' / phi: force of the wave, with phi the phase factor."""
        H, dH, lv = self.H(r), self.H(r, 1), self.lvec(r)
        return np.sum(H * lv, axis=0) * dH / phi


def alfven(profiles, constants, epsilon=1, kappa=5.0 / 3.0, r_interval=None) -> AlfvenWave:
    """Alfven simple wave with |H| = Hcal0 parameterized by angles Theta(r), Phi(r)."""
    epsilon = _epsilon(epsilon)
    P = {"Theta": parse_profile(_need(profiles, "Theta")), "Phi": parse_profile(_need(profiles, "Phi"))}
    C = {"rho0": _num(constants, "rho0", positive=True), "p0": _num(constants, "p0", positive=True),
         "Hcal0": _num(constants, "Hcal0", positive=True), "v0": _vec(constants.get("v0", [0, 0, 0]), "v0")}
    ri = _interval(r_interval)
    probe = AlfvenWave(None, kappa, C, P, epsilon, np.array([0.0, 0.0, 1.0]))
    r = np.linspace(*ri, WINDOW_SAMPLES)
    dH = probe.H(r, 1)
    ndH = np.linalg.norm(dH, axis=0)
    if np.min(ndH) <= 1e-12:
        raise ConstructionError("degenerate Alfven wave: H' vanishes on the window")
    aux = np.array([0.0, 0.0, 1.0])
    if np.max(np.abs(dH[2]) / ndH) > 0.9:
        aux = np.array([1.0, 0.0, 0.0])
    cross = np.linalg.norm(np.cross(dH, const_vec(aux, r.shape), axis=0), axis=0) / ndH
    if np.min(cross) < 1e-6:
        raise ConstructionError("degenerate Alfven wave: H' parallel to the auxiliary vector")
    cfg = _config("Alfven", C, P, epsilon=epsilon, kappa=kappa, r_interval=list(ri))
    sol = AlfvenWave(cfg, kappa, C, P, epsilon, aux)
    sol.metadata["aux_vector"] = aux.tolist()
    sol._window(ri)
    return sol


class FastOrthoWave(SimpleWaveSolution):
    tag = family = "Fast"

    def __init__(self, config, kappa, constants, profiles, epsilon, vel, branch_info):
        super().__init__(config, kappa, constants, profiles)
        self.epsilon = epsilon
        self.vel = vel
        self.metadata.update(branch_info)

    def speed(self, rho):
        C = self.constants
        return fast_speed(rho, self.kappa, C["A0"], C["beta0"])

    def wave(self, r):
        r = np.asarray(r, dtype=float)
        rho = self.profiles["rho"].eval(r)
        lv = self.constants["lvec"]
        v_n = self.epsilon * self.vel(rho)
        out = np.empty((4,) + r.shape)
        # D = lambda0 + v.l = -eps c pairs with v = eps v(rho) l
        out[0] = -self.epsilon * self.speed(rho) - v_n
        out[1:] = const_vec(lv, r.shape)
        return out

    def state(self, r):
        r = np.asarray(r, dtype=float)
        C = self.constants
        rho = self.profiles["rho"].eval(r)
        v = self.epsilon * self.vel(rho) * const_vec(C["lvec"], r.shape)
        return stack_state(rho, C["A0"] * rho ** self.kappa, v, rho * const_vec(C["H0"], r.shape), r.shape)


def fast_ortho(profiles, constants, epsilon=1, kappa=2.0, r_interval=None) -> FastOrthoWave:
    """Fast magnetoacoustic wave with H = rho H0 orthogonal to a constant direction."""
    epsilon = _epsilon(epsilon)
    P = {"rho": parse_profile(_need(profiles, "rho"))}
    lv = _vec(constants.get("lvec", [1, 0, 0]), "lvec")
    if np.linalg.norm(lv) == 0:
        raise InputError("lvec must be nonzero")
    lv = lv / np.linalg.norm(lv)
    H0 = _vec(_need(constants, "H0"), "H0")
    if abs(H0 @ lv) > 1e-12 * max(1.0, np.linalg.norm(H0)):
        raise InputError("H0 must be orthogonal to lvec")
    A0 = _num(constants, "A0", positive=True)
    kappa = float(kappa)
    if kappa <= 0:
        raise InputError("kappa must be > 0")
    beta0 = float(H0 @ H0) / (kappa * A0)
    if beta0 <= 0:
        raise InputError("H0 must be nonzero")
    ri = _interval(r_interval)
    rho_s = P["rho"].eval(np.linspace(*ri, WINDOW_SAMPLES))
    if np.min(rho_s) <= 0:
        raise ConstructionError("density profile must be positive on the window")
    vel, branch, info = fast_velocity(kappa, A0, beta0, (float(np.min(rho_s)), float(np.max(rho_s))))
    C = {"A0": A0, "H0": H0, "lvec": lv, "beta0": beta0}
    cfg = _config("Fast", {"A0": A0, "H0": H0, "lvec": lv}, P, epsilon=epsilon, kappa=kappa,
                  r_interval=list(ri))
    info = dict(info, beta0=beta0, kappa1_flag=(kappa == 1))
    sol = FastOrthoWave(cfg, kappa, C, P, epsilon, vel, info)
    sol._window(ri)
    return sol


class SlowParallelWave(SimpleWaveSolution):
    tag = family = "Slow"

    def __init__(self, config, kappa, constants, profiles, epsilon):
        super().__init__(config, kappa, constants, profiles)
        self.epsilon = epsilon
        k = kappa
        self.a1 = -(1.0 + 2.0 * k) / (4.0 * k)

    def rho(self, r):
        k, b0 = self.kappa, self.constants["beta0"]
        base = ((2 * k + 1) / (2 * b0)) ** (1 + 2 / k) - (k + 2) / b0 * np.asarray(r, dtype=float)
        with np.errstate(invalid="ignore"):
            return np.where(base > 0, base, np.nan) ** (-1.0 / (k + 2))

    def speed_norm(self, rho):
        k, b0, H0 = self.kappa, self.constants["beta0"], self.constants["H0"]
        z = -np.nan_to_num(rho, nan=1.0) ** (2 * k) / b0 ** 2
        F = hyp2f1(self.a1, 0.5, 1.0 + self.a1, z)
        v = 2 * H0 * rho ** (-(k + 0.5)) * (np.sqrt(rho ** (2 * k) + b0 ** 2) - 2 * k * b0 / (1 + 2 * k) * F)
        return v

    def theta(self, rho):
        C = self.constants
        dA2 = C["H0"] ** 2 / rho
        a2 = self.kappa * C["A0"] * rho ** (self.kappa - 1)
        return np.arctan(-dA2 / a2)

    def directions(self, r):
        chi = self.profiles["chi"].eval(r)
        zeros = np.zeros(np.shape(chi))
        lam = np.stack([np.cos(chi), np.sin(chi), zeros])
        perp = np.stack([-np.sin(chi), np.cos(chi), zeros])
        return lam, perp

    def wave(self, r):
        r = np.asarray(r, dtype=float)
        rho = self.rho(r)
        lam, _ = self.directions(r)
        dA = self.constants["H0"] / np.sqrt(rho)
        out = np.empty((4,) + r.shape)
        out[0] = dA - self.speed_norm(rho) * np.sin(self.theta(rho))
        out[1:] = lam
        return out

    def state(self, r):
        r = np.asarray(r, dtype=float)
        rho = self.rho(r)
        lam, perp = self.directions(r)
        th = self.theta(rho)
        v = self.epsilon * self.speed_norm(rho) * (np.sin(th) * lam - np.cos(th) * perp)
        C = self.constants
        return stack_state(rho, C["A0"] * rho ** self.kappa, v, C["H0"] * lam, r.shape)


def slow_parallel(constants, epsilon=1, kappa=5.0 / 3.0, profiles=None, r_interval=None) -> SlowParallelWave:
    """Slow wave with H = H0 lambda(r), built from the quoted closed forms.

    lambda(r) = (cos chi(r), sin chi(r), 0) with an optional angle profile chi
    (default 0). The assembled field is reported, not corrected: its
    residual against the MHD system is a diagnostic.
    """
    epsilon = _epsilon(epsilon)
    P = {"chi": parse_profile((profiles or {}).get("chi", 0.0))}
    A0 = _num(constants, "A0", positive=True)
    H0 = _num(constants, "H0", positive=True)
    kappa = float(kappa)
    C = {"A0": A0, "H0": H0, "beta0": H0 ** 2 / (kappa * A0)}
    ri = _interval(r_interval)
    cfg = _config("Slow", {"A0": A0, "H0": H0}, P, epsilon=epsilon, kappa=kappa, r_interval=list(ri))
    sol = SlowParallelWave(cfg, kappa, C, P, epsilon)
    if not np.all(np.isfinite(sol.rho(np.linspace(*ri, WINDOW_SAMPLES)))):
        raise ConstructionError("density formula leaves the positive domain on the window")
    sol.metadata["beta0"] = C["beta0"]
    sol._window(ri)
    sol.metadata["reduced_ode_residual"] = reduced_ode_residual(sol, np.linspace(*ri, 33))
    return sol


def evaluate_simple(solution: SimpleWaveSolution, t: float, x, r_guess=None) -> State:
    """State of a simple wave at one spacetime point."""
    ps = solve_phase(solution, t, x, r_guess)
    return State.from_vector(solution.state(np.array([ps.r]))[:, 0])


def reduced_ode_residual(solution: SimpleWaveSolution, r, h=1e-5) -> float:
    """How far u'(r) is from the magnetoacoustic direction of the reduced ODE system.

    The direction uses the signed wave speed D = (lambda0 + v.l)/|l| of the
    solution's own wave vector; eta is fitted by least squares. Returns the
    max relative residual over r.
    """
    r = np.asarray(r, dtype=float)
    u = solution.state(r)
    du = (solution.state(r + h) - solution.state(r - h)) / (2 * h)
    lam = solution.wave(r)
    L = np.linalg.norm(lam[1:], axis=0)
    n = lam[1:] / L
    rho, p, v, H = u[0], u[1], u[2:5], u[5:8]
    D = (lam[0] + np.sum(v * lam[1:], axis=0)) / L
    Hn = np.sum(H * n, axis=0)
    a2 = solution.kappa * p / rho
    d = np.empty_like(u)
    d[0] = rho / D ** 2 * (D ** 2 - Hn ** 2 / rho)
    d[1] = a2 * d[0]
    d[2:5] = -(D ** 2 * n - Hn * H / rho) / D
    d[5:8] = H - Hn * n
    dd = np.sum(d * d, axis=0)
    # a vanishing direction (speed coincidence) cannot represent any u' != 0
    eta = np.where(dd > 0, np.sum(d * du, axis=0) / np.where(dd > 0, dd, 1.0), 0.0)
    d = np.nan_to_num(d)
    res = np.linalg.norm(du - eta * d, axis=0) / np.maximum(np.linalg.norm(du, axis=0), 1e-300)
    return float(np.max(res)) if np.all(np.isfinite(res)) else float("inf")
