"""Numerical compatibility checks for Riemann double waves and Jacobian rank tests.

For a double wave u = f(s, r) the tangent fields gamma_1 = df/ds and
gamma_2 = df/dr must be eigenvectors of the wave relation for lambda^1 and
lambda^2 respectively (tangency), they must commute, and the derivative of
each wave vector along the other invariant must stay in span{lambda^1,
lambda^2}.
"""
from __future__ import annotations

import numpy as np

from .core import State, WaveVector, wave_matrix
from .errors import InputError, SamplingError
from .phase import OK, phase2_batch

DEFAULT_SAMPLES = 12


def _window(solution, window):
    if window is not None:
        (s0, s1), (r0, r1) = window
        return (float(s0), float(s1)), (float(r0), float(r1))
    v = solution.metadata.get("validity", {})
    if "s_interval" not in v:
        raise InputError("window required for a solution without a recorded validity window")
    return tuple(v["s_interval"]), tuple(v["r_interval"])


def _sample_points(solution, window, n):
    si, ri = _window(solution, window)
    # stay one step inside the window so that difference stencils are defined
    ds, dr = (si[1] - si[0]) / (n + 1), (ri[1] - ri[0]) / (n + 1)
    S, R = np.meshgrid(si[0] + ds * np.arange(1, n + 1), ri[0] + dr * np.arange(1, n + 1), indexing="ij")
    return S.ravel(), R.ravel()


def _state_ok(u):
    return np.isfinite(u).all(axis=0) & (u[0] > 0) & (u[1] > 0)


def surface_fields(solution, s, r, h=1e-4):
    """(gamma_1, gamma_2) = (df/ds, df/dr) by central differences, each (8, N)."""
    with np.errstate(all="ignore"):
        g1 = (solution.state(s + h, r) - solution.state(s - h, r)) / (2 * h)
        g2 = (solution.state(s, r + h) - solution.state(s, r - h)) / (2 * h)
    return g1, g2


def gmc_commutator_residual(solution, window=None, n: int = DEFAULT_SAMPLES, h: float = 1e-3,
                            gamma_fields=None) -> float:
    """max |[gamma_1, gamma_2]| = max |d gamma_2/ds - d gamma_1/dr| over an (s, r) sample.

    gamma_fields, if given, is a callable (s, r) -> (gamma_1, gamma_2) of
    (8, N) arrays replacing the coordinate fields of the solution surface.
    """
    s, r = _sample_points(solution, window, n)
    if gamma_fields is None:
        def gamma_fields(ss, rr):
            return surface_fields(solution, ss, rr, h=min(h, 1e-4))
    with np.errstate(all="ignore"):
        _, b_plus = gamma_fields(s + h, r)
        _, b_minus = gamma_fields(s - h, r)
        a_plus, _ = gamma_fields(s, r + h)
        a_minus, _ = gamma_fields(s, r - h)
        comm = (b_plus - b_minus) / (2 * h) - (a_plus - a_minus) / (2 * h)
    norm = np.sqrt(np.sum(comm * comm, axis=0))
    norm = norm[np.isfinite(norm)]
    if norm.size == 0:
        raise SamplingError("no valid sample point in the (s, r) window")
    return float(norm.max())


def gmc_span_residual(solution, window=None, n: int = DEFAULT_SAMPLES, h: float = 1e-5, waves=None) -> float:
    """max least-squares residual of d lambda^1/dr and d lambda^2/ds off span{lambda^1, lambda^2}.

    Residuals are relative to |lambda^s| so that rescaling a wave vector
    does not change the result. waves overrides solution.waves.
    """
    waves = solution.waves if waves is None else waves
    s, r = _sample_points(solution, window, n)
    with np.errstate(all="ignore"):
        l1, l2 = waves(s, r)
        d1 = (waves(s, r + h)[0] - waves(s, r - h)[0]) / (2 * h)
        d2 = (waves(s + h, r)[1] - waves(s - h, r)[1]) / (2 * h)
    worst = 0.0
    seen = False
    for k in range(s.size):
        B = np.stack([l1[:, k], l2[:, k]], axis=1)
        if not np.all(np.isfinite(B)):
            continue
        for d, lam in ((d1[:, k], l1[:, k]), (d2[:, k], l2[:, k])):
            if not np.all(np.isfinite(d)):
                continue
            coef, *_ = np.linalg.lstsq(B, d, rcond=None)
            res = np.linalg.norm(d - B @ coef) / max(np.linalg.norm(lam), 1e-300)
            worst = max(worst, float(res))
            seen = True
    if not seen:
        raise SamplingError("no valid sample point in the (s, r) window")
    return worst


def gmc_tangency_residual(solution, window=None, n: int = DEFAULT_SAMPLES, h: float = 1e-4) -> float:
    """max ||L(lambda^i) gamma_i|| / (||L|| ||gamma_i||): do the surface tangents solve the wave relation?"""
    s, r = _sample_points(solution, window, n)
    with np.errstate(all="ignore"):
        u = solution.state(s, r)
        l1, l2 = solution.waves(s, r)
    g1, g2 = surface_fields(solution, s, r, h)
    model = solution.model
    worst = 0.0
    seen = False
    for k in np.nonzero(_state_ok(u))[0]:
        st = State.from_vector(u[:, k])
        for lam, g in ((l1[:, k], g1[:, k]), (l2[:, k], g2[:, k])):
            gn = np.linalg.norm(g)
            if not np.isfinite(gn) or gn < 1e-12:
                continue
            L = wave_matrix(st, model, WaveVector(float(lam[0]), lam[1:]))
            worst = max(worst, float(np.linalg.norm(L @ g) / (np.linalg.norm(L) * gn)))
            seen = True
    if not seen:
        raise SamplingError("no valid sample point in the (s, r) window")
    return worst


def phase_gradients(solution, X):
    """d(s, r)/dx^mu at (4, N) points: rows of Phi^-1 applied to the wave vectors.

    Returns (s, r, grad_s (4, N), grad_r (4, N), valid).
    """
    X = np.asarray(X, dtype=float)
    s, r, P, _, status = phase2_batch(solution.waves, X)
    l1, l2 = solution.waves(s, r)
    det = P[0, 0] * P[1, 1] - P[0, 1] * P[1, 0]
    inv = np.array([[P[1, 1], -P[0, 1]], [-P[1, 0], P[0, 0]]]) / det
    gs = inv[0, 0] * l1 + inv[0, 1] * l2
    gr = inv[1, 0] * l1 + inv[1, 1] * l2
    return s, r, gs, gr, status == OK


def jacobian(solution, t: float, x, h: float = 1e-4) -> np.ndarray:
    """8x4 spacetime Jacobian du/dx^mu by central differences."""
    base = np.array([t, *np.asarray(x, dtype=float).reshape(3)])
    pts = [base]
    for mu in range(4):
        for sgn in (1, -1):
            p = base.copy()
            p[mu] += sgn * h
            pts.append(p)
    X = np.stack(pts, axis=1)
    with np.errstate(all="ignore"):
        vals, ok, _ = solution.evaluate(X)
    if not ok.all():
        raise SamplingError("phase solve failed inside the Jacobian stencil")
    return np.stack([(vals[:, 1 + 2 * mu] - vals[:, 2 + 2 * mu]) / (2 * h) for mu in range(4)], axis=1)


def jacobian_rank(solution, t: float, x, h: float = 1e-4, rel_tol: float = 1e-6) -> int:
    """Numerical rank of du/dx^mu: singular values above rel_tol * sigma_1."""
    sv = np.linalg.svd(jacobian(solution, t, x, h), compute_uv=False)
    if sv[0] == 0.0:
        return 0
    return int(np.sum(sv > rel_tol * sv[0]))
