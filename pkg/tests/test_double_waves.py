import logging

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from riemann_mhd.core import State, WaveVector, dispersion_residual
from riemann_mhd.double_waves import (FAMILIES, MonotoneInverse, ae1, ae1_alpha, ae1_beta_coefficients,
                                      covering_constructors, ee_aligned, ee_general_check, existence_table,
                                      fe1_counter, ff_counter, integrate_beta_ode)
from riemann_mhd.errors import ConstructionError, InputError
from riemann_mhd.profiles import parse_profile, parse_vector_profile
from riemann_mhd.registry import DOUBLE_FIXTURES, EXTRA_FIXTURES, build, fixture
from riemann_mhd.simple_waves import fast_speed, fast_velocity
from riemann_mhd.verify import GridSpec, pde_residual, sample_field

TABLE = [list("+++-"), list("++--"), list("+-+-"), list("----")]

# phi = (sin r, cos r, 0), psi = e3, |H| = 2: the beta ODE reduces to
# beta' = -sqrt(3 - beta^2) with solution sqrt(3) sin(asin(beta0/sqrt(3)) - r)
CIRCLE_PHI = parse_vector_profile([{"kind": "sin"}, {"kind": "sin", "phase": np.pi / 2}, 0.0])
CIRCLE_PSI = parse_vector_profile([0.0, 0.0, 1.0])
CIRCLE_HCAL = parse_profile(2.0)


def test_existence_table_matches_reference():
    assert existence_table().tolist() == TABLE


def test_existence_table_symmetric():
    M = existence_table()
    assert (M == M.T).all()


def test_covering_constructors():
    assert covering_constructors("F", "F")[:2] == ["FF_planar", "FF_counter"]
    assert covering_constructors("S", "S") == []
    M = existence_table()
    for i, a in enumerate(FAMILIES):
        for j, b in enumerate(FAMILIES):
            if M[i, j] == "-":
                assert covering_constructors(a, b) == []
            else:
                assert covering_constructors(a, b) == covering_constructors(b, a)
                assert covering_constructors(a, b)


@pytest.mark.parametrize("name", DOUBLE_FIXTURES + EXTRA_FIXTURES)
def test_double_fixture_builds(name):
    sol = build(fixture(name)["solution"])
    assert sol.rank == 2
    assert sol.metadata["validity"]["valid_fraction"] == 1.0


@pytest.mark.parametrize("name", DOUBLE_FIXTURES + EXTRA_FIXTURES)
def test_wave_vectors_are_characteristic(name):
    sol = build(fixture(name)["solution"])
    v = sol.metadata["validity"]
    S, R = np.meshgrid(np.linspace(*v["s_interval"], 7), np.linspace(*v["r_interval"], 7), indexing="ij")
    s, r = S.ravel(), R.ravel()
    u = sol.state(s, r)
    l1, l2 = sol.waves(s, r)
    for k in range(s.size):
        st_ = State.from_vector(u[:, k])
        for lam in (l1[:, k], l2[:, k]):
            assert dispersion_residual(st_, sol.model, WaveVector(lam[0], lam[1:])) <= 1e-10


def test_beta_ode_analytic_and_scipy():
    beta0 = 0.3
    out = integrate_beta_ode(CIRCLE_PHI, CIRCLE_PSI, CIRCLE_HCAL, 0.0, 1.0, beta0, branch=1)
    assert not out["degenerate"]
    exact = np.sqrt(3) * np.sin(np.arcsin(beta0 / np.sqrt(3)) - out["r"])
    assert np.max(np.abs(out["beta"] - exact)) <= 1e-11

    def rhs(r, b):
        K, f, _ = ae1_beta_coefficients(np.array([r]), np.array([b[0]]), CIRCLE_PHI, CIRCLE_PSI, CIRCLE_HCAL, 1)
        return [f[0] / K[0]]

    ref = solve_ivp(rhs, (0.0, 1.0), [beta0], t_eval=out["r"][::100], rtol=1e-12, atol=1e-13, method="DOP853")
    assert np.allclose(out["beta"][::100], ref.y[0], atol=1e-10)


def test_beta_ode_backward_integration():
    out = integrate_beta_ode(CIRCLE_PHI, CIRCLE_PSI, CIRCLE_HCAL, 0.0, -0.5, 0.3, branch=1)
    exact = np.sqrt(3) * np.sin(np.arcsin(0.3 / np.sqrt(3)) - out["r"])
    assert np.max(np.abs(out["beta"] - exact)) <= 1e-11


def test_beta_ode_vanishing_leading_coefficient():
    # a twisted curve with psi = phi'' zeroes (phi' x psi).phi'' but not the
    # torsion term (phi' x phi'').phi''' of the right-hand side
    phi = parse_vector_profile([{"kind": "poly", "coeffs": [0, 1]}, {"kind": "poly", "coeffs": [0, 0, 0.5]},
                                {"kind": "poly", "coeffs": [0, 0, 0, 1 / 6]}])
    psi = parse_vector_profile([0.0, 1.0, {"kind": "poly", "coeffs": [0, 1]}])
    with pytest.raises(ConstructionError, match="leading coefficient"):
        integrate_beta_ode(phi, psi, parse_profile(3.0), 0.0, 1.0, 0.1)


@settings(max_examples=40, deadline=None)
@given(a=st.floats(-2, 2), b=st.floats(-2, 2), c=st.floats(-2, 2), Hcal=st.floats(0.1, 5.0),
       branch=st.sampled_from([1, -1]))
def test_alpha_collapse(a, b, c, Hcal, branch):
    # phi'' = 0 and psi = 0: alpha = +-Hcal / |phi'|
    d1 = np.array([[a], [b], [c]])
    n = np.linalg.norm(d1)
    if n < 1e-3:
        return
    z = np.zeros((3, 1))
    alpha, Delta = ae1_alpha(np.array([0.7]), d1, z, z, Hcal ** 2, branch)
    assert alpha[0] == pytest.approx(branch * Hcal / n, rel=1e-12)
    assert Delta[0] >= 0


def test_ae1_fixture_flags_degenerate_ode():
    sol = build(fixture("AE1")["solution"])
    assert sol.metadata["beta_ode_degenerate"] is True
    assert sol.metadata["Hcal_residual"] <= 1e-12
    assert sol.metadata["Delta_min"] >= 0
    lines = sol.beta_csv().splitlines()
    assert lines[0] == "r,beta,alpha,Delta"
    assert len(lines) == sol.traj["r"].size + 1


def test_ae1_discriminant_negative():
    cfg = fixture("AE1")["solution"]
    cfg["profiles"]["Hcal"] = 0.1
    with pytest.raises(ConstructionError, match="discriminant negative"):
        build(cfg)


def test_ae1_constraint_violation():
    cfg = fixture("AE1")["solution"]
    cfg["constants"]["lambda2"] = [0.0, 0.0, 1.0]
    with pytest.raises(ConstructionError, match="constraints"):
        build(cfg)


def test_ae1_needs_independent_wave_vectors():
    cfg = fixture("AE1")["solution"]
    cfg["constants"]["lambda2"] = [2.0, 0.0, 0.0]
    with pytest.raises(ConstructionError, match="independent"):
        build(cfg)


@settings(max_examples=40, deadline=None)
@given(q=st.floats(0.0, 1.0))
def test_monotone_inverse_against_brentq(q):
    kappa, A0, beta0 = 5 / 3, 1.0, 0.6
    vel, _, _ = fast_velocity(kappa, A0, beta0, (0.05, 20.0))
    F = lambda rho: 2.0 * vel(rho)
    inv = MonotoneInverse(F, lambda rho: 2.0 * fast_speed(rho, kappa, A0, beta0) / rho, 0.05, 20.0)
    target = inv.Flo + q * (inv.Fhi - inv.Flo)
    ref = brentq(lambda x: float(F(np.array([x]))[0]) - target, 0.05, 20.0, xtol=1e-15, rtol=1e-15)
    assert float(inv(np.array([target]))[0]) == pytest.approx(ref, rel=1e-9)


def test_monotone_inverse_outside_range_is_nan():
    inv = MonotoneInverse(lambda r: np.log(r), lambda r: 1 / r, 0.5, 2.0)
    out = inv(np.array([np.log(0.1), 0.0, np.log(5.0)]))
    assert np.isnan(out[0]) and np.isnan(out[2])
    assert out[1] == pytest.approx(1.0, rel=1e-12)
    with pytest.raises(ConstructionError):
        MonotoneInverse(lambda r: -r, lambda r: -np.ones_like(r), 0.5, 2.0)


def test_ff_kappa2_closed_form_matches_inverse():
    # two routes to rho: the closed form and a numerical inverse of F = 2 v
    sol = build(fixture("FF_kappa2")["solution"])
    assert sol.metadata["density_map"] == "closed-form"
    vel, name, _ = fast_velocity(2.0, sol.A0, sol.beta0, (0.05, 20.0))
    assert name == "printed"
    inv = MonotoneInverse(lambda q: 2.0 * vel(q), lambda q: 2.0 * sol.c(q) / q, 0.05, 20.0)
    s = np.linspace(-1, 1, 9)
    r = np.linspace(-1, 1, 9)[::-1]
    diff = sol.profiles["f"](r) - sol.profiles["g"](s)
    assert np.allclose(sol.rho(s, r), inv(diff), rtol=1e-10)
    assert np.allclose(sol.rho(s, r), diff ** 2 / (16 * (2 * sol.A0 + sol.H0sq)), rtol=1e-14)


def test_ff_kappa2_static_state():
    # f = -g = const gives a uniform state at rest
    sol = ff_counter({"f": 2.0, "g": -2.0}, {"A0": 1.0, "H0": 1.0})
    assert sol.tag == "FF_kappa2"
    u = sol.state(np.linspace(-1, 1, 5), np.linspace(-1, 1, 5))
    assert np.allclose(u[0], 16.0 / (16 * 3.0))
    assert np.allclose(u[2:5], 0.0)
    fld = sample_field(sol, GridSpec.from_dict({"t": 0.5, "x": [-0.5, 0.5, 16]}), with_stencil=True)
    rep = pde_residual(fld)
    assert max(e["linf"] for e in rep.entries) <= 1e-12


def test_ff_rejects_empty_range():
    with pytest.raises(ConstructionError):
        ff_counter({"f": 500.0, "g": -500.0}, {"A0": 1.0, "H0": 1.0, "rho_bracket": [0.1, 2.0]}, kappa=3.0)
    with pytest.raises(InputError):
        ff_counter({"f": 1.0, "g": -1.0}, {"A0": 1.0, "H0": 0.0})


def test_fe1_variants():
    with pytest.raises(InputError):
        fe1_counter({"rho": 1.0, "A": 1.0}, {"C2": 4.0}, kappa=5 / 3)
    with pytest.raises(ConstructionError):
        fe1_counter({"rho": 1.0, "A": 3.0}, {"C2": 4.0}, kappa=2.0)
    sol = build(fixture("FE1_kappa2")["solution"])
    r = np.linspace(-1, 1, 5)
    assert np.allclose(sol.Hcal(r) ** 2, 4.0 - 2 * sol.profiles["A"](r))


def test_ee_aligned_rejects_coincident_wave_vectors():
    with pytest.raises(ConstructionError):
        ee_aligned({"rho": 1.0, "w": 0.0, "H": 1.0}, {"p0": 2.0, "phi0": 0.3, "theta0": 0.3})


@pytest.mark.parametrize("name", ["EE_aligned", "EE_2a", "EE_2b"])
def test_ee_general_system(name):
    fx = fixture(name)
    sol = build(fx["solution"])
    norms = []
    for n in (32, 64):
        fld = sample_field(sol, GridSpec.from_dict(fx["grid"]).refined(n), with_stencil=True)
        norms.append(ee_general_check(fld))
    for key in norms[0]:
        coarse, fine = norms[0][key][1], norms[1][key][1]
        assert fine <= 1e-12 or coarse / fine >= 3.0, key


def test_ee_2a_warns_on_coupling(caplog):
    cfg = fixture("EE_2a")["solution"]
    cfg["profiles"]["w"] = {"kind": "sin", "a": 0.2}
    with caplog.at_level(logging.WARNING):
        sol = build(cfg)
    assert sol.metadata["w_theta_coupling"] > 0
    assert "continuity" in caplog.text


def test_aa_field_on_sphere():
    sol = build(fixture("AA")["solution"])
    s, r = np.linspace(-1, 1, 11), np.linspace(-1, 1, 11)[::-1]
    H = sol.H(s, r)
    assert np.allclose(np.linalg.norm(H, axis=0), sol.constants["Hcal0"])
