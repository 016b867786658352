"""Closed family of smooth profile functions with analytic derivatives.

A Profile is a sum of primitive terms:

    const  {"c"}                      c
    poly   {"coeffs": [a0, ..., an]}   sum a_k r^k, n <= 6
    sin    {"a", "k", "phase"}         a sin(k r + phase)
    gauss  {"a", "mu", "sigma"}        a exp(-(r - mu)^2 / (2 sigma^2))
    tanh   {"a", "k", "r0"}            a tanh(k (r - r0))

Every term can be differentiated analytically up to third order.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ProfileError

MAX_ORDER = 3
MAX_DEGREE = 6

_PARAMS = {
    "const": {"c": None},
    "poly": {"coeffs": None},
    "sin": {"a": 1.0, "k": 1.0, "phase": 0.0},
    "gauss": {"a": 1.0, "mu": 0.0, "sigma": None},
    "tanh": {"a": 1.0, "k": 1.0, "r0": 0.0},
}


def _finite(name, value):
    try:
        value = float(value)
    except (TypeError, ValueError) as exc:
        raise ProfileError(f"parameter {name!r} must be a number") from exc
    if not np.isfinite(value):
        raise ProfileError(f"parameter {name!r} must be finite")
    return value


@dataclass(frozen=True)
class Term:
    kind: str
    params: tuple  # sorted (name, value) pairs; coeffs stored as a tuple

    def get(self, name):
        return dict(self.params)[name]

    def eval(self, r, order: int = 0):
        r = np.asarray(r, dtype=float)
        p = dict(self.params)
        kind = self.kind
        if kind == "const":
            return np.full(r.shape, p["c"] if order == 0 else 0.0)
        if kind == "poly":
            coeffs = np.polynomial.polynomial.polyder(np.array(p["coeffs"]), order) if order else np.array(p["coeffs"])
            if coeffs.size == 0:
                return np.zeros(r.shape)
            return np.polynomial.polynomial.polyval(r, coeffs)
        if kind == "sin":
            a, k, ph = p["a"], p["k"], p["phase"]
            return a * k ** order * np.sin(k * r + ph + 0.5 * np.pi * order)
        if kind == "gauss":
            a, mu, sig = p["a"], p["mu"], p["sigma"]
            q = (r - mu) / sig
            g = a * np.exp(-0.5 * q * q)
            # derivatives are (-1)^n He_n(q) g / sigma^n
            he = (np.ones_like(q), q, q * q - 1.0, q ** 3 - 3.0 * q)[order]
            return (-1) ** order * he * g / sig ** order
        if kind == "tanh":
            a, k, r0 = p["a"], p["k"], p["r0"]
            T = np.tanh(k * (r - r0))
            S = 1.0 - T * T
            if order == 0:
                return a * T
            if order == 1:
                return a * k * S
            if order == 2:
                return -2.0 * a * k ** 2 * T * S
            return -2.0 * a * k ** 3 * S * (1.0 - 3.0 * T * T)
        raise ProfileError(f"unknown profile kind {kind!r}")

    def to_dict(self) -> dict:
        d = {"kind": self.kind}
        for name, value in self.params:
            d[name] = list(value) if isinstance(value, tuple) else value
        return d


def _parse_term(node) -> Term:
    if not isinstance(node, dict) or "kind" not in node:
        raise ProfileError("profile term must be an object with a 'kind'")
    kind = node["kind"]
    if kind not in _PARAMS:
        raise ProfileError(f"unknown profile kind {kind!r}")
    spec = _PARAMS[kind]
    extra = set(node) - set(spec) - {"kind"}
    if extra:
        raise ProfileError(f"unexpected parameters for {kind}: {sorted(extra)}")
    params = {}
    for name, default in spec.items():
        if name not in node:
            if default is None:
                raise ProfileError(f"{kind} term needs parameter {name!r}")
            params[name] = default
            continue
        if name == "coeffs":
            coeffs = node[name]
            if not isinstance(coeffs, (list, tuple)) or len(coeffs) == 0:
                raise ProfileError("poly coeffs must be a nonempty list")
            if len(coeffs) - 1 > MAX_DEGREE:
                raise ProfileError(f"polynomial degree must be <= {MAX_DEGREE}")
            params[name] = tuple(_finite("coeffs", c) for c in coeffs)
        else:
            params[name] = _finite(name, node[name])
    if kind == "gauss" and params["sigma"] <= 0:
        raise ProfileError("sigma must be > 0")
    return Term(kind, tuple(sorted(params.items())))


@dataclass(frozen=True)
class Profile:
    terms: tuple

    def __call__(self, r, order: int = 0):
        return self.eval(r, order)

    def eval(self, r, order: int = 0):
        if order not in range(MAX_ORDER + 1):
            raise ProfileError(f"derivative order must be 0..{MAX_ORDER}")
        r_arr = np.asarray(r, dtype=float)
        out = np.zeros(r_arr.shape)
        for term in self.terms:
            out = out + term.eval(r_arr, order)
        if np.ndim(r) == 0:
            return float(out)
        return out

    def to_dict(self) -> dict:
        return {"terms": [t.to_dict() for t in self.terms]}

    @classmethod
    def constant(cls, c: float) -> "Profile":
        return cls((_parse_term({"kind": "const", "c": c}),))

    def scaled(self, factor: float, shift: float = 0.0) -> "Profile":
        """factor * self + shift, as a new profile."""
        terms = []
        for t in self.terms:
            d = t.to_dict()
            if t.kind == "const":
                d["c"] *= factor
            elif t.kind == "poly":
                d["coeffs"] = [factor * c for c in d["coeffs"]]
            else:
                d["a"] *= factor
            terms.append(_parse_term(d))
        if shift:
            terms.append(_parse_term({"kind": "const", "c": shift}))
        return Profile(tuple(terms))


def parse_profile(node) -> Profile:
    """Build a Profile from a number, a single term, or {"terms": [...]}."""
    if isinstance(node, Profile):
        return node
    if isinstance(node, bool):
        raise ProfileError("profile must be a number or an object")
    if isinstance(node, (int, float)):
        return Profile.constant(node)
    if isinstance(node, dict) and "terms" in node:
        terms = node["terms"]
        if not isinstance(terms, list) or not terms:
            raise ProfileError("'terms' must be a nonempty list")
        return Profile(tuple(_parse_term(t) for t in terms))
    if isinstance(node, dict):
        return Profile((_parse_term(node),))
    raise ProfileError("profile must be a number or an object")


def serialize(profile) -> dict:
    return profile.to_dict()


@dataclass(frozen=True)
class VectorProfile:
    components: tuple  # three Profiles

    def eval(self, r, order: int = 0):
        """Array of shape (3, *r.shape)."""
        return np.stack([np.asarray(c.eval(r, order)) for c in self.components])

    __call__ = eval

    def to_dict(self) -> dict:
        return {"components": [c.to_dict() for c in self.components]}


def parse_vector_profile(node) -> VectorProfile:
    if isinstance(node, VectorProfile):
        return node
    if isinstance(node, dict) and "components" in node:
        node = node["components"]
    if isinstance(node, dict) and set(node) <= {"x", "y", "z"}:
        node = [node.get(k, 0.0) for k in ("x", "y", "z")]
    if not isinstance(node, (list, tuple)) or len(node) != 3:
        raise ProfileError("vector profile needs three components")
    return VectorProfile(tuple(parse_profile(c) for c in node))


@dataclass(frozen=True)
class BivariateProfile:
    """Sum of products P_k(s) Q_k(r)."""

    products: tuple  # (Profile, Profile) pairs

    def eval(self, s, r, ds: int = 0, dr: int = 0):
        s = np.asarray(s, dtype=float)
        r = np.asarray(r, dtype=float)
        out = np.zeros(np.broadcast(s, r).shape)
        for ps, pr in self.products:
            out = out + np.asarray(ps.eval(s, ds)) * np.asarray(pr.eval(r, dr))
        return out

    __call__ = eval

    def to_dict(self) -> dict:
        return {"products": [{"s": a.to_dict(), "r": b.to_dict()} for a, b in self.products]}


def parse_bivariate(node) -> BivariateProfile:
    """Accepts {"products": [{"s": P, "r": Q}, ...]}, or a plain profile/number (constant in s and r)."""
    if isinstance(node, BivariateProfile):
        return node
    if isinstance(node, dict) and "products" in node:
        items = node["products"]
        if not isinstance(items, list) or not items:
            raise ProfileError("'products' must be a nonempty list")
        pairs = []
        for item in items:
            if not isinstance(item, dict):
                raise ProfileError("each product needs 's' and 'r' factors")
            pairs.append((parse_profile(item.get("s", 1.0)), parse_profile(item.get("r", 1.0))))
        return BivariateProfile(tuple(pairs))
    if isinstance(node, (int, float)) and not isinstance(node, bool):
        return BivariateProfile(((Profile.constant(node), Profile.constant(1.0)),))
    raise ProfileError("bivariate profile must be a number or {'products': [...]}")
