"""Common machinery for closed-form rank-1 and rank-2 wave solutions."""
from __future__ import annotations

import numpy as np

from .core import FluidModel
from .phase import OK, phase2_batch, phase_batch

WINDOW_SAMPLES = 1024

# 32-point Gauss-Legendre rule on [0, 1], used for the few running integrals
# that appear in the constructions
_GL_X, _GL_W = np.polynomial.legendre.leggauss(32)
_GL_X = 0.5 * (_GL_X + 1.0)
_GL_W = 0.5 * _GL_W


def cumulative_integral(fn, r, lower: float = 0.0):
    """int_lower^r fn(q) dq for each entry of r.

    fn maps an array of nodes to an array of shape (..., nodes.shape) whose
    leading axes are components.
    """
    r = np.asarray(r, dtype=float)
    span = r - lower
    nodes = lower + span[..., None] * _GL_X
    vals = np.asarray(fn(nodes))
    return np.sum(vals * _GL_W, axis=-1) * span


class RunningIntegral:
    """r -> int_lower^r fn, cached as a Chebyshev interpolant on an interval.

    The interpolant is checked against direct quadrature at construction;
    points outside the interval (or a failed check) fall back to quadrature.
    """

    def __init__(self, fn, interval, lower: float = 0.0, degree: int = 96, tol: float = 1e-13):
        self.fn = fn
        self.lower = lower
        lo, hi = float(interval[0]), float(interval[1])
        pad = 0.5 * (hi - lo)
        self.lo, self.hi = min(lo - pad, lower), max(hi + pad, lower)
        nodes = np.polynomial.chebyshev.chebpts2(degree + 1)
        q = 0.5 * (self.hi + self.lo) + 0.5 * (self.hi - self.lo) * nodes
        vals = np.atleast_2d(cumulative_integral(fn, q, lower))
        self.coeffs = [np.polynomial.chebyshev.chebfit(nodes, v, degree) for v in vals]
        check = np.linspace(self.lo, self.hi, 257)[1:-1:3]
        exact = np.atleast_2d(cumulative_integral(fn, check, lower))
        approx = self._interp(check)
        scale = max(1.0, float(np.max(np.abs(exact))))
        self.error = float(np.max(np.abs(approx - exact))) / scale
        self.ok = self.error <= tol

    def _interp(self, r):
        x = (2 * r - (self.hi + self.lo)) / (self.hi - self.lo)
        return np.stack([np.polynomial.chebyshev.chebval(x, c) for c in self.coeffs])

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        if not self.ok:
            return np.atleast_1d(cumulative_integral(self.fn, r, self.lower)).reshape((-1,) + r.shape)
        inside = (r >= self.lo) & (r <= self.hi)
        if inside.all():
            return self._interp(r)
        out = np.empty((len(self.coeffs),) + r.shape)
        out[:, inside] = self._interp(r[inside])
        out[:, ~inside] = np.atleast_2d(cumulative_integral(self.fn, r[~inside], self.lower))
        return out


def stack_state(rho, p, v, H, shape):
    out = np.empty((8,) + shape)
    out[0] = rho
    out[1] = p
    out[2:5] = np.broadcast_to(v, (3,) + shape) if np.ndim(v) else v
    out[5:8] = np.broadcast_to(H, (3,) + shape) if np.ndim(H) else H
    return out


def const_vec(vec, shape):
    vec = np.asarray(vec, dtype=float).reshape((3,) + (1,) * len(shape))
    return np.broadcast_to(vec, (3,) + shape)


class WaveSolution:
    """Base class. Subclasses define state and wave-vector maps."""

    rank = 0
    tag = ""
    family = ""

    def __init__(self, config: dict, kappa: float, constants: dict, profiles: dict):
        self.config = config
        self.kappa = float(kappa)
        self.constants = constants
        self.profiles = profiles
        self.metadata: dict = {"tag": self.tag, "rank": self.rank}

    @property
    def model(self) -> FluidModel:
        return FluidModel(self.kappa)

    def manifest(self) -> dict:
        return {
            "tag": self.tag,
            "rank": self.rank,
            "kappa": self.kappa,
            "constants": _jsonable(self.constants),
            "metadata": _jsonable(self.metadata),
            "solution": self.config,
        }


class SimpleWaveSolution(WaveSolution):
    """u = f(r) with r = lambda_mu(r) x^mu."""

    rank = 1

    def state(self, r):
        raise NotImplementedError

    def wave(self, r):
        raise NotImplementedError

    def evaluate(self, X, guess=None):
        """X: (4, N) spacetime points. Returns (values (8, N), valid, r)."""
        X = np.asarray(X, dtype=float)
        r, phi, _, status = phase_batch(self.wave, X, guess)
        valid = status == OK
        values = np.full((8, X.shape[1]), np.nan)
        if valid.any():
            values[:, valid] = self.state(r[valid])
        valid &= np.all(np.isfinite(values), axis=0) & (values[0] > 0) & (values[1] > 0)
        return values, valid, r

    def _window(self, r_interval):
        r = np.linspace(r_interval[0], r_interval[1], WINDOW_SAMPLES)
        u = self.state(r)
        ok = np.isfinite(u).all(axis=0) & (u[0] > 0) & (u[1] > 0)
        self.metadata["validity"] = {
            "r_interval": list(map(float, r_interval)),
            "samples": WINDOW_SAMPLES,
            "valid_fraction": float(ok.mean()),
            "rho_min": float(np.nanmin(u[0])),
            "p_min": float(np.nanmin(u[1])),
        }
        return ok


class DoubleWaveSolution(WaveSolution):
    """u = f(s, r) with s = lambda1_mu(s, r) x^mu, r = lambda2_mu(s, r) x^mu."""

    rank = 2

    def state(self, s, r):
        raise NotImplementedError

    def waves(self, s, r):
        raise NotImplementedError

    def evaluate(self, X, guess=None):
        X = np.asarray(X, dtype=float)
        s, r, _, _, status = phase2_batch(self.waves, X, guess)
        valid = status == OK
        values = np.full((8, X.shape[1]), np.nan)
        if valid.any():
            values[:, valid] = self.state(s[valid], r[valid])
        valid &= np.all(np.isfinite(values), axis=0) & (values[0] > 0) & (values[1] > 0)
        return values, valid, (s, r)

    def _window(self, s_interval, r_interval):
        n = int(np.sqrt(WINDOW_SAMPLES))
        S, R = np.meshgrid(np.linspace(*s_interval, n), np.linspace(*r_interval, n), indexing="ij")
        with np.errstate(invalid="ignore", divide="ignore"):
            u = self.state(S.ravel(), R.ravel())
        ok = np.isfinite(u).all(axis=0) & (u[0] > 0) & (u[1] > 0)
        self.metadata["validity"] = {
            "s_interval": list(map(float, s_interval)),
            "r_interval": list(map(float, r_interval)),
            "samples": int(S.size),
            "valid_fraction": float(ok.mean()),
            "rho_min": float(np.nanmin(u[0])) if np.isfinite(u[0]).any() else None,
            "p_min": float(np.nanmin(u[1])) if np.isfinite(u[1]).any() else None,
        }
        return ok


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.bool_):
        return bool(obj)
    if hasattr(obj, "to_dict"):
        return obj.to_dict()
    return obj
