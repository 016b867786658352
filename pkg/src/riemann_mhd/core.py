"""Quasilinear ideal MHD system: flux matrices, characteristic speeds,
eigenvectors, dispersion relation and Riemann-phase algebra.

Unknowns are ordered as u = (rho, p, u, v, w, H1, H2, H3) with unit
magnetic permeability. All functions here are pure.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import DegenerateWaveError, InputError

FIELD_NAMES = ("rho", "p", "u", "v", "w", "H1", "H2", "H3")


@dataclass(frozen=True)
class State:
    """Pointwise MHD state."""

    rho: float
    p: float
    v: np.ndarray = field(default_factory=lambda: np.zeros(3))
    H: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        object.__setattr__(self, "v", np.asarray(self.v, dtype=float).reshape(3))
        object.__setattr__(self, "H", np.asarray(self.H, dtype=float).reshape(3))

    def validate(self) -> "State":
        vals = np.concatenate([[self.rho, self.p], self.v, self.H])
        if not np.all(np.isfinite(vals)):
            raise InputError("state has non-finite components")
        if self.rho <= 0:
            raise InputError("density must be > 0")
        if self.p <= 0:
            raise InputError("pressure must be > 0")
        return self

    def as_vector(self) -> np.ndarray:
        return np.concatenate([[self.rho, self.p], self.v, self.H])

    @classmethod
    def from_vector(cls, u) -> "State":
        u = np.asarray(u, dtype=float)
        return cls(float(u[0]), float(u[1]), u[2:5].copy(), u[5:8].copy())

    def to_dict(self) -> dict:
        return {"rho": self.rho, "p": self.p, "v": self.v.tolist(), "H": self.H.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "State":
        try:
            return cls(float(d["rho"]), float(d["p"]), d.get("v", [0, 0, 0]), d.get("H", [0, 0, 0]))
        except (KeyError, TypeError, ValueError) as exc:
            raise InputError(f"malformed state: {exc}") from exc


@dataclass(frozen=True)
class FluidModel:
    kappa: float
    A0: float | None = None

    def __post_init__(self):
        if not np.isfinite(self.kappa) or self.kappa <= 0:
            raise InputError("kappa must be > 0")
        if self.A0 is not None and self.A0 <= 0:
            raise InputError("A0 must be > 0")


@dataclass(frozen=True)
class WaveVector:
    """Spacetime wave vector (lambda0, lvec)."""

    lambda0: float
    lvec: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "lvec", np.asarray(self.lvec, dtype=float).reshape(3))
        if not np.any(self.lvec != 0):
            raise InputError("wave vector direction must be nonzero")

    def delta_norm(self, state: State) -> float:
        """Wave speed relative to the fluid times |lvec|: lambda0 + v.lvec."""
        return float(self.lambda0 + state.v @ self.lvec)

    def as_array(self) -> np.ndarray:
        return np.concatenate([[self.lambda0], self.lvec])


class Family(str, Enum):
    E1 = "E1"
    E2 = "E2"
    E3 = "E3"
    ALFVEN = "Alfven"
    SLOW = "Slow"
    FAST = "Fast"


@dataclass(frozen=True)
class WaveFamily:
    tag: Family
    epsilon: int = 1

    def __post_init__(self):
        object.__setattr__(self, "tag", Family(self.tag))
        if self.epsilon not in (1, -1):
            raise InputError("epsilon must be +1 or -1")


@dataclass(frozen=True)
class Eigenvector:
    gamma_rho: float
    gamma_p: float
    gamma_v: np.ndarray
    gamma_h: np.ndarray

    def as_vector(self) -> np.ndarray:
        return np.concatenate([[self.gamma_rho, self.gamma_p], self.gamma_v, self.gamma_h])

    @classmethod
    def from_vector(cls, g) -> "Eigenvector":
        g = np.asarray(g, dtype=float)
        return cls(float(g[0]), float(g[1]), g[2:5].copy(), g[5:8].copy())


def flux_jacobian(state: State, model: FluidModel, axis: int) -> np.ndarray:
    """Flux matrix A^axis of u_t + A^i u_{x^i} = 0, entry-by-entry."""
    rho, p = state.rho, state.p
    u, v, w = state.v
    H1, H2, H3 = state.H
    kp = model.kappa * p
    A = np.zeros((8, 8))
    if axis == 1:
        np.fill_diagonal(A, u)
        A[0, 2] = rho
        A[1, 2] = kp
        A[2, 1] = 1 / rho
        A[2, 6] = H2 / rho
        A[2, 7] = H3 / rho
        A[3, 6] = -H1 / rho
        A[4, 7] = -H1 / rho
        A[6, 2] = H2
        A[6, 3] = -H1
        A[7, 2] = H3
        A[7, 4] = -H1
    elif axis == 2:
        np.fill_diagonal(A, v)
        A[0, 3] = rho
        A[1, 3] = kp
        A[2, 5] = -H2 / rho
        A[3, 1] = 1 / rho
        A[3, 5] = H1 / rho
        A[3, 7] = H3 / rho
        A[4, 7] = -H2 / rho
        A[5, 2] = -H2
        A[5, 3] = H1
        A[7, 3] = H3
        A[7, 4] = -H2
    elif axis == 3:
        np.fill_diagonal(A, w)
        A[0, 4] = rho
        A[1, 4] = kp
        A[2, 5] = -H3 / rho
        A[3, 6] = -H3 / rho
        A[4, 1] = 1 / rho
        A[4, 5] = H1 / rho
        A[4, 6] = H2 / rho
        A[5, 2] = -H3
        A[5, 4] = H1
        A[6, 3] = -H3
        A[6, 4] = H2
    else:
        raise InputError(f"invalid axis {axis!r}; expected 1, 2 or 3")
    return A


def sound_speed(state: State, model: FluidModel) -> float:
    if state.rho <= 0 or state.p <= 0:
        raise InputError("sound speed needs rho > 0 and p > 0")
    return float(np.sqrt(model.kappa * state.p / state.rho))


def characteristic_speeds(state: State, model: FluidModel, lvec) -> dict:
    """Values of delta|lvec| for epsilon = +1 for every family."""
    lvec = np.asarray(lvec, dtype=float)
    if not np.any(lvec != 0):
        raise InputError("lvec must be nonzero")
    if state.rho <= 0:
        raise InputError("density must be > 0")
    a = sound_speed(state, model)
    b = state.H / np.sqrt(state.rho)
    # the slow/fast form holds for a unit direction; scale back by |lvec|
    L = float(np.linalg.norm(lvec))
    n = lvec / L
    plus = np.linalg.norm(a * n + b)
    minus = np.linalg.norm(a * n - b)
    return {
        "deltaE": 0.0,
        "deltaA": float(b @ lvec),
        "deltaS": float(0.5 * L * (plus - minus)),
        "deltaF": float(0.5 * L * (plus + minus)),
    }


def wave_matrix(state: State, model: FluidModel, wv: WaveVector) -> np.ndarray:
    M = wv.lambda0 * np.eye(8)
    for i in range(3):
        if wv.lvec[i] != 0:
            M += wv.lvec[i] * flux_jacobian(state, model, i + 1)
    return M


def dispersion_residual(state: State, model: FluidModel, wv: WaveVector) -> float:
    """Factored dispersion polynomial at D = lambda0 + v.lvec, made dimensionless.

    The polynomial is homogeneous of degree 8 in speed; it is divided by
    s^8 with s^2 = D^2 + (a^2 + |H|^2/rho)|lvec|^2.
    """
    D = wv.delta_norm(state)
    L2 = float(wv.lvec @ wv.lvec)
    a2 = model.kappa * state.p / state.rho
    HL2 = float(state.H @ wv.lvec) ** 2 / state.rho
    B2 = float(state.H @ state.H) / state.rho
    D2 = D * D
    poly = D2 * (D2 - HL2) * (D2 * D2 - D2 * (B2 + a2) * L2 + a2 * HL2 * L2)
    scale = (D2 + (a2 + B2) * L2) ** 4
    if scale == 0:
        return 0.0
    return float(abs(poly) / scale)


def wave_relation_residual(state: State, model: FluidModel, wv: WaveVector, gamma) -> float:
    g = gamma.as_vector() if isinstance(gamma, Eigenvector) else np.asarray(gamma, dtype=float)
    return float(np.linalg.norm(wave_matrix(state, model, wv) @ g))


def characteristic_wave_vector(state: State, model: FluidModel, lvec, family: WaveFamily) -> WaveVector:
    """Wave vector with lambda0 = delta|lvec| - v.lvec for the given family."""
    lvec = np.asarray(lvec, dtype=float)
    sp = characteristic_speeds(state, model, lvec)
    key = {"E1": "deltaE", "E2": "deltaE", "E3": "deltaE", "Alfven": "deltaA",
           "Slow": "deltaS", "Fast": "deltaF"}[family.tag.value]
    D = family.epsilon * sp[key]
    return WaveVector(D - float(state.v @ lvec), lvec)


def _unit(vec):
    n = np.linalg.norm(vec)
    return vec / n if n > 0 else vec


def _perp_unit(n):
    """Deterministic unit vector orthogonal to the unit vector n."""
    seed = np.eye(3)[int(np.argmin(np.abs(n)))]
    return _unit(seed - (seed @ n) * n)


def eigenvector(state: State, model: FluidModel, lvec, family: WaveFamily,
                gamma_rho: float | None = None, gamma_v=None, h=None) -> Eigenvector:
    """Unit-normalized eigenvector of the wave relation for one family.

    Entropic families have free components (gamma_rho, gamma_v, h) that
    default to canonical unit choices. Raises DegenerateWaveError when the
    family formula yields the zero vector or its precondition fails.
    """
    lvec = np.asarray(lvec, dtype=float)
    if not np.any(lvec != 0):
        raise InputError("lvec must be nonzero")
    if state.rho <= 0:
        raise InputError("density must be > 0")
    n = lvec / np.linalg.norm(lvec)
    H = state.H
    rho = state.rho
    Hn = float(H @ n)
    tag = family.tag
    eps = family.epsilon
    Hscale = max(1.0, float(np.linalg.norm(H)))

    if tag is Family.E3:
        g = np.zeros(8)
        g[0] = 1.0 if gamma_rho is None else gamma_rho
    elif tag in (Family.E1, Family.E2):
        # both need lvec orthogonal to H (E2 wave vectors are alpha x H)
        if abs(Hn) > 1e-12 * Hscale:
            raise DegenerateWaveError(f"{tag.value} eigenvector requires lvec orthogonal to H")
        gr = 1.0 if gamma_rho is None else gamma_rho
        gv = np.zeros(3) if gamma_v is None else np.asarray(gamma_v, dtype=float)
        if abs(gv @ n) > 1e-12 * max(1.0, np.linalg.norm(gv)):
            raise DegenerateWaveError("entropic velocity component must be orthogonal to lvec")
        if h is None:
            if tag is Family.E1:
                hh = np.cross(n, H)
                hh = _unit(hh) if np.linalg.norm(hh) > 0 else _perp_unit(n)
            else:
                if np.linalg.norm(H) == 0:
                    raise DegenerateWaveError("E2 eigenvector needs H != 0")
                hh = _unit(H)
        else:
            hh = np.asarray(h, dtype=float)
        g = np.concatenate([[gr, -float(H @ hh)], gv, hh])
    elif tag is Family.ALFVEN:
        hh = np.cross(n, H) if h is None else np.asarray(h, dtype=float)
        if np.linalg.norm(hh) <= 1e-12 * Hscale:
            raise DegenerateWaveError("Alfven eigenvector degenerate (H parallel to lvec)")
        g = np.concatenate([[0.0, 0.0], eps * hh / np.sqrt(rho), hh])
    else:
        sp = characteristic_speeds(state, model, n)
        D = eps * (sp["deltaF"] if tag is Family.FAST else sp["deltaS"])
        D2 = D * D
        g_rho = rho * D2 - Hn ** 2
        g_p = model.kappa * state.p * (D2 - Hn ** 2 / rho)
        g_v = -D * (D2 * n - Hn * H / rho)
        g_h = D2 * (H - Hn * n)
        g = np.concatenate([[g_rho, g_p], g_v, g_h])
        ref = max(1.0, rho * D2 + Hn ** 2, model.kappa * state.p) * max(1.0, abs(D)) ** 2
        if np.linalg.norm(g) <= 1e-12 * ref:
            raise DegenerateWaveError(f"{tag.value} eigenvector degenerate (coincident speeds)")
    norm = np.linalg.norm(g)
    if norm == 0:
        raise DegenerateWaveError(f"{tag.value} eigenvector is zero")
    return Eigenvector.from_vector(g / norm)


def riemann_phase(wv: WaveVector, t: float, x) -> float:
    return float(wv.lambda0 * t + wv.lvec @ np.asarray(x, dtype=float))


def orthogonal_complement(lam) -> np.ndarray:
    """Three spacetime 4-vectors orthogonal to lam (rows), via Gram-Schmidt.

    The standard basis vector matching the largest |lam| component is skipped.
    """
    lam = np.asarray(lam, dtype=float).reshape(4)
    nrm = np.linalg.norm(lam)
    if nrm == 0:
        raise InputError("zero wave vector")
    basis = [_unit(lam)]
    skip = int(np.argmax(np.abs(lam)))
    out = []
    for k in range(4):
        if k == skip:
            continue
        e = np.eye(4)[k]
        for b in basis:
            e = e - (e @ b) * b
        e = _unit(e)
        basis.append(e)
        out.append(e)
    return np.array(out)
