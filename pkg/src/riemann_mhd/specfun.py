"""Real-argument Gauss hypergeometric function and helpers."""
from __future__ import annotations

import math

import numpy as np
from scipy import integrate, special

from .errors import InputError, NoConvergence

SERIES_TOL = 1e-16
# Pfaff maps z in [-50, -0.5) to w = z/(z-1) in (1/3, 0.98]; near w = 0.98 the
# series needs roughly two thousand terms, so the cap is well above that.
MAX_TERMS = 20000


def _check_c(c: float) -> None:
    if not np.isfinite(c) or (c <= 0 and float(c).is_integer()):
        raise InputError(f"invalid c={c}: must not be a nonpositive integer")


def _series(a, b, c, z, max_terms):
    z = np.asarray(z, dtype=float)
    total = np.ones_like(z)
    term = np.ones_like(z)
    active = np.ones(z.shape, dtype=bool)
    for n in range(max_terms):
        if not active.any():
            return total
        term = np.where(active, term * ((a + n) * (b + n) / ((c + n) * (n + 1))) * z, 0.0)
        total = total + term
        active &= np.abs(term) >= SERIES_TOL * np.abs(total)
    if active.any():
        raise NoConvergence(f"2F1 series did not converge within {max_terms} terms")
    return total


def hyp2f1(a: float, b: float, c: float, z, max_terms: int = MAX_TERMS):
    """2F1(a, b; c; z) for real z <= 0.5.

    Direct series for |z| <= 0.5, Pfaff transform for z < -0.5. Accepts
    scalar or array z; returns the same shape.
    """
    _check_c(c)
    z_arr = np.asarray(z, dtype=float)
    if np.any(z_arr > 0.5) or not np.all(np.isfinite(z_arr)):
        raise InputError("hyp2f1 supports finite real z <= 0.5 only")
    out = np.empty_like(z_arr)
    direct = z_arr >= -0.5
    if direct.any():
        out[direct] = _series(a, b, c, z_arr[direct], max_terms)
    far = ~direct
    if far.any():
        zf = z_arr[far]
        w = zf / (zf - 1.0)
        out[far] = (1.0 - zf) ** (-a) * _series(a, c - b, c, w, max_terms)
    if np.ndim(z) == 0:
        return float(out)
    return out


def hyp2f1_oracle(a: float, b: float, c: float, z: float) -> float:
    """Euler-integral value of 2F1, for c > b > 0 and z < 1.

    The endpoint singularities t^(b-1) (1-t)^(c-b-1) are handled by the
    algebraic-weight quadrature rule.
    """
    if not (c > b > 0):
        raise InputError("Euler integral requires c > b > 0")
    if not z < 1:
        raise InputError("Euler integral requires z < 1")
    if a == 0 or z == 0:
        return 1.0
    val, _ = integrate.quad(lambda t: (1.0 - z * t) ** (-a), 0.0, 1.0,
                            weight="alg", wvar=(b - 1.0, c - b - 1.0),
                            epsabs=1e-13, epsrel=1e-13, limit=200)
    log_pref = special.gammaln(c) - special.gammaln(b) - special.gammaln(c - b)
    return float(math.exp(log_pref) * val)


def artanh_real(x):
    """arctanh for |x| < 1, real part 0.5*ln((x+1)/(x-1)) for |x| > 1."""
    x_arr = np.asarray(x, dtype=float)
    if np.any(np.abs(x_arr) == 1):
        raise InputError("artanh_real has a pole at |x| = 1")
    out = 0.5 * np.log(np.abs((1.0 + x_arr) / (1.0 - x_arr)))
    if np.ndim(x) == 0:
        return float(out)
    return out
