"""Damped Newton solvers for implicit Riemann phases.

A rank-1 phase solves F(r) = r - lambda_mu(r) x^mu = 0; a rank-2 phase pair
solves F1 = s - lambda1_mu(s, r) x^mu, F2 = r - lambda2_mu(s, r) x^mu. The
derivative F'(r) (resp. the 2x2 Jacobian) is the factor phi (resp. the
matrix Phi) whose vanishing signals a gradient catastrophe.

Batch solvers iterate every point independently (converged points are
frozen), so results do not depend on how points are grouped.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import GradientCatastrophe, NoConvergence

TOL = 1e-12
MAX_ITER = 50
CATASTROPHE = 1e-8
DAMPING = 0.5
MAX_HALVINGS = 30
FD_STEP = 1e-6

OK, CATASTROPHIC, UNCONVERGED = 0, 1, 2


@dataclass
class PhaseSolve:
    r: float
    phi: float
    iterations: int
    converged: bool


@dataclass
class PhaseSolve2:
    s: float
    r: float
    Phi: np.ndarray
    iterations: int
    converged: bool


def _contract(lam, X):
    return np.einsum("i...,i...->...", lam, X)


def _as_spacetime(t, x):
    """Stack (t, x, y, z) into shape (4, N)."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x.reshape(3, 1)
    t = np.broadcast_to(t, x.shape[1:])
    return np.vstack([t[None, :], x])


def _tol(v):
    return TOL * np.maximum(1.0, np.abs(v))


def phase_batch(wave, X, r0=None, max_iter=MAX_ITER):
    """Vectorized rank-1 phase solve.

    wave: callable r -> (4, N) wave vectors. X: (4, N) spacetime points.
    Returns (r, phi, iterations, status) arrays.
    """
    X = np.asarray(X, dtype=float)
    n = X.shape[1]
    if r0 is None:
        r = _contract(wave(np.zeros(n)), X)
    else:
        r = np.array(np.broadcast_to(np.asarray(r0, dtype=float), (n,)))

    def F(rr, idx):
        return rr - _contract(wave(rr), X[:, idx])

    def dF(rr, idx):
        h = FD_STEP * np.maximum(1.0, np.abs(rr))
        d = (wave(rr + h) - wave(rr - h)) / (2 * h)
        return 1.0 - _contract(d, X[:, idx])

    status = np.full(n, UNCONVERGED)
    iters = np.zeros(n, dtype=int)
    idx = np.arange(n)
    fr = F(r, idx)
    done = np.abs(fr) <= _tol(r)
    for it in range(max_iter):
        act = idx[~done]
        if act.size == 0:
            break
        ra, fa = r[act], fr[act]
        da = dF(ra, act)
        flat = np.abs(da) < CATASTROPHE
        status[act[flat]] = CATASTROPHIC
        done[act[flat]] = True
        keep = ~flat
        act, ra, fa, da = act[keep], ra[keep], fa[keep], da[keep]
        step = -fa / da
        trial = ra + step
        ft = F(trial, act)
        worse = np.abs(ft) > np.abs(fa)
        for _ in range(MAX_HALVINGS):
            if not worse.any():
                break
            step = np.where(worse, DAMPING * step, step)
            w_idx = np.nonzero(worse)[0]
            trial[w_idx] = ra[w_idx] + step[w_idx]
            ft[w_idx] = F(trial[w_idx], act[w_idx])
            worse[w_idx] = np.abs(ft[w_idx]) > np.abs(fa[w_idx])
        r[act] = trial
        fr[act] = ft
        iters[act] = it + 1
        conv = np.abs(ft) <= _tol(trial)
        done[act[conv]] = True
    conv_idx = idx[done & (status != CATASTROPHIC)]
    if conv_idx.size:
        # one polishing step: quadratic convergence brings F to round-off
        rc = r[conv_idx]
        d = dF(rc, conv_idx)
        safe = np.abs(d) >= CATASTROPHE
        rc = np.where(safe, rc - F(rc, conv_idx) / np.where(safe, d, 1.0), rc)
        r[conv_idx] = rc
        status[conv_idx] = OK
    phi = np.full(n, np.nan)
    good = status == OK
    if good.any():
        phi[good] = dF(r[good], idx[good])
        # the physical branch is connected to phi = 1 at the origin
        bad = good & ~(phi > CATASTROPHE)
        status[bad] = CATASTROPHIC
    return r, phi, iters, status


def solve_phase(solution, t, x, r_guess=None) -> PhaseSolve:
    """Scalar rank-1 phase solve; raises on failure."""
    X = _as_spacetime(t, x)
    r, phi, it, st = phase_batch(solution.wave, X, None if r_guess is None else [r_guess])
    if st[0] == CATASTROPHIC:
        raise GradientCatastrophe(f"gradient catastrophe: phi={phi[0]:.3e} at t={t}, x={list(np.ravel(x))}")
    if st[0] == UNCONVERGED:
        raise NoConvergence(f"phase Newton did not converge in {MAX_ITER} iterations")
    return PhaseSolve(float(r[0]), float(phi[0]), int(it[0]), True)


def phase2_batch(waves, X, guess=None, max_iter=MAX_ITER):
    """Vectorized rank-2 phase solve.

    waves: callable (s, r) -> (lambda1, lambda2), each (4, N).
    Returns (s, r, Phi (2, 2, N), iterations, status).
    """
    X = np.asarray(X, dtype=float)
    n = X.shape[1]
    if guess is None:
        l1, l2 = waves(np.zeros(n), np.zeros(n))
        s, r = _contract(l1, X), _contract(l2, X)
    else:
        s = np.array(np.broadcast_to(np.asarray(guess[0], dtype=float), (n,)))
        r = np.array(np.broadcast_to(np.asarray(guess[1], dtype=float), (n,)))

    def F(ss, rr, idx):
        l1, l2 = waves(ss, rr)
        Xi = X[:, idx]
        return ss - _contract(l1, Xi), rr - _contract(l2, Xi)

    def Phi(ss, rr, idx):
        Xi = X[:, idx]
        hs = FD_STEP * np.maximum(1.0, np.abs(ss))
        hr = FD_STEP * np.maximum(1.0, np.abs(rr))
        a1, a2 = waves(ss + hs, rr)
        b1, b2 = waves(ss - hs, rr)
        c1, c2 = waves(ss, rr + hr)
        d1, d2 = waves(ss, rr - hr)
        P = np.empty((2, 2, ss.size))
        P[0, 0] = 1.0 - _contract((a1 - b1) / (2 * hs), Xi)
        P[0, 1] = -_contract((c1 - d1) / (2 * hr), Xi)
        P[1, 0] = -_contract((a2 - b2) / (2 * hs), Xi)
        P[1, 1] = 1.0 - _contract((c2 - d2) / (2 * hr), Xi)
        return P

    def step_of(P, f1, f2):
        det = P[0, 0] * P[1, 1] - P[0, 1] * P[1, 0]
        sd = np.where(det == 0, 1.0, det)
        ds = -(P[1, 1] * f1 - P[0, 1] * f2) / sd
        dr = -(-P[1, 0] * f1 + P[0, 0] * f2) / sd
        return det, ds, dr

    status = np.full(n, UNCONVERGED)
    iters = np.zeros(n, dtype=int)
    idx = np.arange(n)
    f1, f2 = F(s, r, idx)
    norm = np.hypot(f1, f2)
    done = (np.abs(f1) <= _tol(s)) & (np.abs(f2) <= _tol(r))
    for it in range(max_iter):
        act = idx[~done]
        if act.size == 0:
            break
        P = Phi(s[act], r[act], act)
        det, ds, dr = step_of(P, f1[act], f2[act])
        flat = np.abs(det) < CATASTROPHE
        status[act[flat]] = CATASTROPHIC
        done[act[flat]] = True
        keep = ~flat
        act, ds, dr = act[keep], ds[keep], dr[keep]
        sa, ra, na = s[act], r[act], norm[act]
        ts, tr = sa + ds, ra + dr
        g1, g2 = F(ts, tr, act)
        gn = np.hypot(g1, g2)
        worse = gn > na
        for _ in range(MAX_HALVINGS):
            if not worse.any():
                break
            w = np.nonzero(worse)[0]
            ds[w] *= DAMPING
            dr[w] *= DAMPING
            ts[w], tr[w] = sa[w] + ds[w], ra[w] + dr[w]
            g1[w], g2[w] = F(ts[w], tr[w], act[w])
            gn[w] = np.hypot(g1[w], g2[w])
            worse[w] = gn[w] > na[w]
        s[act], r[act] = ts, tr
        f1[act], f2[act], norm[act] = g1, g2, gn
        iters[act] = it + 1
        conv = (np.abs(g1) <= _tol(ts)) & (np.abs(g2) <= _tol(tr))
        done[act[conv]] = True
    conv_idx = idx[done & (status != CATASTROPHIC)]
    if conv_idx.size:
        P = Phi(s[conv_idx], r[conv_idx], conv_idx)
        g1, g2 = F(s[conv_idx], r[conv_idx], conv_idx)
        det, ds, dr = step_of(P, g1, g2)
        safe = np.abs(det) >= CATASTROPHE
        s[conv_idx] += np.where(safe, ds, 0.0)
        r[conv_idx] += np.where(safe, dr, 0.0)
        status[conv_idx] = OK
    Pm = np.full((2, 2, n), np.nan)
    good = status == OK
    if good.any():
        Pm[:, :, good] = Phi(s[good], r[good], idx[good])
        det = Pm[0, 0] * Pm[1, 1] - Pm[0, 1] * Pm[1, 0]
        bad = good & ~(det > CATASTROPHE)
        status[bad] = CATASTROPHIC
    return s, r, Pm, iters, status


def solve_phase2(solution, t, x, guess=None) -> PhaseSolve2:
    """Scalar rank-2 phase solve; raises on failure."""
    X = _as_spacetime(t, x)
    g = None if guess is None else ([guess[0]], [guess[1]])
    s, r, P, it, st = phase2_batch(solution.waves, X, g)
    if st[0] == CATASTROPHIC:
        raise GradientCatastrophe("gradient catastrophe: det Phi below threshold")
    if st[0] == UNCONVERGED:
        raise NoConvergence(f"phase Newton did not converge in {MAX_ITER} iterations")
    return PhaseSolve2(float(s[0]), float(r[0]), P[:, :, 0], int(it[0]), True)
