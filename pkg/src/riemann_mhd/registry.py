"""Build solutions from JSON configs, plus the documented verification fixtures."""
from __future__ import annotations

import copy
import math

from . import double_waves as dw
from . import simple_waves as sw
from .errors import InputError

_SIMPLE = {
    "E1": (sw.entropic_e1, ("kappa", "r_interval")),
    "E2": (sw.entropic_e2, ("kappa", "r_interval")),
    "E3": (sw.entropic_e3, ("kappa", "r_interval")),
    "Alfven": (sw.alfven, ("epsilon", "kappa", "r_interval")),
    "Fast": (sw.fast_ortho, ("epsilon", "kappa", "r_interval")),
    "Slow": (sw.slow_parallel, ("epsilon", "kappa", "r_interval")),
}
_DOUBLE = {
    "EE_aligned": (dw.ee_aligned, ("kappa", "s_interval", "r_interval")),
    "E1E1_aligned": (dw.ee_aligned, ("kappa", "s_interval", "r_interval")),
    "EE_2a": (dw.ee_perp_a, ("kappa", "s_interval", "r_interval")),
    "EE_2b": (dw.ee_perp_b, ("kappa", "s_interval", "r_interval")),
    "AA": (dw.aa, ("epsilon", "kappa", "s_interval", "r_interval")),
    "AE1": (dw.ae1, ("epsilon", "kappa", "s_interval", "r_interval")),
    "FF_planar": (dw.ff_planar, ("epsilon", "kappa", "s_interval", "r_interval")),
    "FF_counter": (dw.ff_counter, ("kappa", "s_interval", "r_interval")),
    "FF_kappa2": (dw.ff_counter, ("kappa", "s_interval", "r_interval")),
    "FE1_counter": (dw.fe1_counter, ("epsilon", "kappa", "s_interval", "r_interval")),
    "FE1_kappa2": (dw.fe1_counter, ("epsilon", "kappa", "s_interval", "r_interval")),
    "FE1_perp_kappa2": (dw.fe1_perp_kappa2, ("epsilon", "s_interval", "r_interval")),
}
FAMILY_TAGS = tuple(_SIMPLE) + tuple(_DOUBLE)


def build(config: dict):
    """Construct a WaveSolution from {family, constants, profiles, ...}."""
    if not isinstance(config, dict):
        raise InputError("solution config must be an object")
    tag = config.get("family")
    table = _SIMPLE if tag in _SIMPLE else _DOUBLE if tag in _DOUBLE else None
    if table is None:
        raise InputError(f"unknown family tag {tag!r}; expected one of {', '.join(FAMILY_TAGS)}")
    fn, extras = table[tag]
    kwargs = {k: config[k] for k in extras if k in config}
    if tag == "FF_kappa2":
        kwargs["kappa"] = 2.0
    if tag == "FE1_kappa2":
        kwargs["kappa"] = 2.0
    profiles = config.get("profiles", {})
    constants = config.get("constants", {})
    if not isinstance(profiles, dict) or not isinstance(constants, dict):
        raise InputError("'profiles' and 'constants' must be objects")
    if tag == "Slow":
        return fn(constants, profiles=profiles, **kwargs)
    return fn(profiles, constants, **kwargs)


# ---------------------------------------------------------------------------
# fixtures: one smooth configuration per constructor, with a grid box inside
# the validity window. Grids are refined to N in {64, 128, 256} by the tests.


def _sin(a, k=1.0, phase=0.0):
    return {"kind": "sin", "a": a, "k": k, "phase": phase}


def _p(*terms):
    return {"terms": list(terms)}


def _c(c):
    return {"kind": "const", "c": c}


def _prod(*pairs):
    return {"products": [{"s": s, "r": r} for s, r in pairs]}


HALF = [-0.5, 0.5, 64]
_COS = math.pi / 2

# 2 v(1) for the fast velocity antiderivatives used by the FF fixtures
_F1_53 = 17.41859372645815  # kappa = 5/3, A0 = 1, H0 = 1
_F1_3 = 5.520691992601888  # kappa = 3, A0 = 1, H0 = 1
_F1_2 = 4 * math.sqrt(3.0)  # kappa = 2, A0 = 1, H0 = 1

FIXTURES = {
    "E1": {
        "solution": {"family": "E1", "kappa": 5 / 3,
                     "profiles": {"rho": _p(_c(1.0), _sin(0.2)),
                                  "H": [_sin(1.0, phase=_COS), _sin(1.0), _c(0.5)],
                                  "alpha": 0.3, "beta": _sin(0.2)},
                     "constants": {"p0": 3.0, "v0": [0.2, 0.1, 0.3]}},
        "grid": {"t": 0.1, "x": HALF, "y": HALF, "z": 0.1},
    },
    "E2": {
        "solution": {"family": "E2", "kappa": 5 / 3,
                     "profiles": {"rho": _p(_c(1.0), _sin(0.3)), "u": _sin(0.2), "w": _sin(0.3, phase=0.4),
                                  "H": _p(_c(1.0), _sin(0.2, 2.0))},
                     "constants": {"p0": 2.0, "U0": 0.3}},
        "grid": {"t": 0.1, "x": HALF, "y": HALF, "z": 0.0},
    },
    "E3": {
        "solution": {"family": "E3", "kappa": 5 / 3,
                     "profiles": {"rho": _p(_c(1.0), _sin(0.3, 2.0))},
                     "constants": {"p0": 1.0, "v0": [0.1, -0.2, 0.3], "H0": [0.5, 0.2, -0.1]}},
        # z held fixed: its derivatives come from the +-h stencil slices, and a
        # 256^3 box would not fit in memory
        "grid": {"t": 0.1, "x": HALF, "y": HALF, "z": 0.1},
    },
    "Alfven": {
        "solution": {"family": "Alfven", "kappa": 5 / 3, "epsilon": 1,
                     "profiles": {"Theta": _p(_c(1.0), _sin(0.3)), "Phi": _sin(0.5, phase=0.2)},
                     "constants": {"rho0": 1.0, "p0": 1.0, "Hcal0": 1.0, "v0": [0.2, 0.1, 0.0]}},
        "grid": {"t": 0.1, "x": HALF, "y": HALF, "z": 0.2},
    },
    "Fast_kappa2": {
        "solution": {"family": "Fast", "kappa": 2.0, "epsilon": 1,
                     "profiles": {"rho": _p(_c(1.0), _sin(0.2, 2.0))},
                     "constants": {"A0": 1.0, "H0": [0.0, 1.0, 0.0]}},
        "grid": {"t": 0.05, "x": HALF, "y": 0.1, "z": 0.2},
    },
    "Fast_kappa3": {
        "solution": {"family": "Fast", "kappa": 3.0, "epsilon": 1,
                     "profiles": {"rho": _p(_c(1.0), _sin(0.2, 2.0))},
                     "constants": {"A0": 1.0, "H0": [0.0, 1.0, 0.0]}},
        "grid": {"t": 0.05, "x": HALF, "y": 0.1, "z": 0.2},
    },
    "Slow": {
        "solution": {"family": "Slow", "kappa": 5 / 3, "epsilon": 1,
                     "profiles": {}, "constants": {"A0": 1.0, "H0": 1.0}, "r_interval": [0.5, 1.5]},
        "grid": {"t": 0.05, "x": [0.6, 1.4, 64], "y": 0.0, "z": 0.0},
    },
    "EE_aligned": {
        "solution": {"family": "EE_aligned", "kappa": 5 / 3,
                     "profiles": {"rho": _prod((1.0, 1.0), (_sin(0.2), _sin(1.0, phase=_COS))),
                                  "w": _prod((_sin(0.3), 1.0), (1.0, _sin(0.2, 2.0))),
                                  "H": _prod((0.5, 1.0), (1.0, _sin(0.2)))},
                     "constants": {"p0": 3.0, "phi0": 0.0, "theta0": _COS}},
        "grid": {"t": 0.1, "x": HALF, "y": HALF, "z": 0.0},
    },
    "EE_2a": {
        "solution": {"family": "EE_2a", "kappa": 5 / 3,
                     "profiles": {"rho": _prod((1.0, 1.0), (_sin(0.2), _sin(1.0, phase=_COS))),
                                  "V": _prod((_sin(0.3), 1.0), (1.0, _sin(0.2))),
                                  "H": _prod((0.6, 1.0), (_sin(0.2), _sin(1.0, phase=_COS))),
                                  "w": 0.3, "theta": _sin(0.4)},
                     "constants": {"p0": 3.0}},
        "grid": {"t": 0.25, "x": HALF, "y": 0.1, "z": HALF},
    },
    "EE_2b": {
        "solution": {"family": "EE_2b", "kappa": 5 / 3,
                     "profiles": {"rho": _prod((1.0, 1.0), (_sin(0.2), _sin(1.0, phase=_COS))),
                                  "V": _sin(0.3), "w": _p(_c(0.2), _sin(0.3)),
                                  "Hperp": _p(_c(0.5), _sin(0.2)), "H3": _p(_c(0.4), _sin(0.1, 2.0))},
                     "constants": {"p0": 3.0, "theta0": 0.3}},
        "grid": {"t": 0.25, "x": HALF, "y": 0.1, "z": HALF},
    },
    "AA": {
        "solution": {"family": "AA", "kappa": 5 / 3, "epsilon": 1,
                     "profiles": {"h": _sin(0.3), "tau": _p(_c(0.2), _sin(0.1)), "c": _sin(0.3, phase=_COS)},
                     "constants": {"rho0": 1.0, "p0": 1.0, "Hcal0": 2.0},
                     "s_interval": [-1.5, 1.5]},
        "grid": {"t": 0.1, "x": HALF, "y": 0.0, "z": HALF},
    },
    "AE1": {
        "solution": {"family": "AE1", "kappa": 5 / 3, "epsilon": 1,
                     "profiles": {"phi": [0.0, 0.2, _sin(0.3)], "psi": [_sin(0.5), 0.0, 0.2],
                                  "rho": _p(_c(1.0), _sin(0.2)), "Hcal": _p(_c(1.5), _sin(0.1, phase=_COS))},
                     "constants": {"p0": 3.0, "lambda1": [1.0, 0.0, 0.0], "lambda2": [0.0, 1.0, 0.0],
                                   "beta0": 0.1, "r0": 0.0, "branch": 1}},
        "grid": {"t": 0.1, "x": HALF, "y": HALF, "z": 0.0},
    },
    "FF_planar": {
        "solution": {"family": "FF_planar", "kappa": 5 / 3, "epsilon": 1,
                     "profiles": {"f": _p(_c(_F1_53 / 2), _sin(0.5)), "g": _p(_c(-_F1_53 / 2), _sin(0.5, phase=0.3)),
                                  "V": _prod((1.0, _p(_c(0.2 - _F1_53 / 4), _sin(-0.25)))), "w": 0.1},
                     "constants": {"A0": 1.0, "H0": 1.0, "rho_bracket": [0.05, 20.0]}},
        "grid": {"t": 0.25, "x": HALF, "y": HALF, "z": 0.0},
    },
    "FF_counter": {
        "solution": {"family": "FF_counter", "kappa": 3.0,
                     "profiles": {"f": _p(_c(_F1_3 / 2), _sin(0.3)), "g": _p(_c(-_F1_3 / 2), _sin(0.3, phase=0.5))},
                     "constants": {"A0": 1.0, "H0": 1.0, "rho_bracket": [0.05, 20.0]}},
        "grid": {"t": 0.25, "x": HALF, "y": 0.0, "z": 0.0},
    },
    "FF_kappa2": {
        "solution": {"family": "FF_kappa2",
                     "profiles": {"f": _p(_c(_F1_2 / 2), _sin(0.4)), "g": _p(_c(-_F1_2 / 2), _sin(0.4, phase=0.5))},
                     "constants": {"A0": 1.0, "H0": 1.0}},
        "grid": {"t": 0.25, "x": HALF, "y": 0.0, "z": 0.0},
    },
    "FE1_counter": {
        "solution": {"family": "FE1_counter", "kappa": 5 / 3, "epsilon": 1,
                     "profiles": {"rho": _p(_c(1.0), _sin(0.2)), "phi": _sin(0.5),
                                  "alpha": [_sin(0.2), _c(0.1), 0.0]},
                     "constants": {"A0": 1.0, "H0": 1.0}, "s_interval": [-2.0, 2.0]},
        "grid": {"t": 0.25, "x": 0.0, "y": 0.0, "z": HALF},
    },
    "FE1_kappa2": {
        "solution": {"family": "FE1_kappa2", "epsilon": 1,
                     "profiles": {"rho": _p(_c(1.0), _sin(0.2)), "phi": _sin(0.5),
                                  "alpha": [_sin(0.2), _c(0.1), 0.0], "A": _p(_c(1.0), _sin(0.1))},
                     "constants": {"C2": 4.0}, "s_interval": [-2.0, 2.0]},
        "grid": {"t": 0.25, "x": 0.0, "y": 0.0, "z": HALF},
    },
    "FE1_perp_kappa2": {
        "solution": {"family": "FE1_perp_kappa2", "epsilon": 1,
                     "profiles": {"rho": _p(_c(1.0), _sin(0.2)), "b": 0.3, "w": _sin(0.2),
                                  "A": _p(_c(1.0), _sin(0.1))},
                     "constants": {"C2": 4.0, "v0": 0.1}, "s_interval": [-2.0, 2.0]},
        "grid": {"t": 0.25, "x": HALF, "y": HALF, "z": 0.0},
    },
}

SIMPLE_FIXTURES = ("E1", "E2", "E3", "Alfven", "Fast_kappa2", "Fast_kappa3", "Slow")
DOUBLE_FIXTURES = ("EE_aligned", "EE_2a", "EE_2b", "AA", "AE1", "FF_planar", "FF_counter", "FE1_counter",
                   "FE1_perp_kappa2")
EXTRA_FIXTURES = ("FF_kappa2", "FE1_kappa2")


def fixture(name: str) -> dict:
    """Deep copy of a documented fixture {solution, grid}."""
    if name not in FIXTURES:
        raise InputError(f"unknown fixture {name!r}")
    return copy.deepcopy(FIXTURES[name])
