import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from riemann_mhd.checks import PerturbedSolution
from riemann_mhd.errors import InputError
from riemann_mhd.gmc import (gmc_commutator_residual, gmc_span_residual, gmc_tangency_residual, jacobian,
                             jacobian_rank, phase_gradients)
from riemann_mhd.phase import phase2_batch
from riemann_mhd.registry import DOUBLE_FIXTURES, SIMPLE_FIXTURES, build, fixture
from riemann_mhd.verify import GridSpec

WINDOW = ((-1.0, 1.0), (-1.0, 1.0))


def _sol(name):
    return build(fixture(name)["solution"])


class Synthetic:
    """Bare surface u(s, r) with user-chosen wave vectors, for negative controls."""

    metadata = {}

    def __init__(self, waves):
        self.waves = waves

    def state(self, s, r):
        s, r = np.asarray(s, float), np.asarray(r, float)
        return np.stack([1 + 0.1 * s, 1 + 0.1 * r] + [0 * s] * 6)


def _twisting_waves(s, r):
    o, z = np.ones_like(s), np.zeros_like(s)
    return np.stack([o, np.cos(r), np.sin(r), z]), np.stack([z, z, z, o])


def _straight_waves(s, r):
    o, z = np.ones_like(s), np.zeros_like(s)
    return np.stack([o, o, z, z]), np.stack([z, z, o, o])


@pytest.mark.parametrize("name", ["AA", "FF_planar", "FE1_counter", "FF_counter", "AE1", "EE_2b"])
def test_coordinate_fields_commute(name):
    assert gmc_commutator_residual(_sol(name)) <= 1e-6


def test_commutator_negative_control():
    # gamma_1 = e1 + r e2, gamma_2 = e3 do not commute: [g1, g2] = -e2
    def fields(s, r):
        g1 = np.zeros((8, s.size))
        g2 = np.zeros((8, s.size))
        g1[0], g1[1] = 1.0, r
        g2[2] = 1.0
        return g1, g2
    res = gmc_commutator_residual(Synthetic(_straight_waves), window=WINDOW, gamma_fields=fields)
    assert res == pytest.approx(1.0, rel=1e-6)
    assert res > 1e-2


def test_span_negative_control():
    # d lambda^1/dr = (0, -sin r, cos r, 0) leaves span{lambda^1, lambda^2}
    assert gmc_span_residual(Synthetic(_twisting_waves), window=WINDOW) > 1e-2
    assert gmc_span_residual(Synthetic(_straight_waves), window=WINDOW) <= 1e-12


@pytest.mark.parametrize("name", ["AA", "FE1_counter", "FF_counter", "FE1_perp_kappa2"])
def test_span_condition_holds(name):
    assert gmc_span_residual(_sol(name)) <= 1e-6


@pytest.mark.parametrize("name", DOUBLE_FIXTURES)
def test_tangency(name):
    assert gmc_tangency_residual(_sol(name)) <= 1e-8


def test_window_required():
    with pytest.raises(InputError):
        gmc_span_residual(Synthetic(_straight_waves))


@pytest.mark.parametrize("name", ["AA", "FF_planar", "AE1"])
def test_phase_gradients_against_finite_differences(name):
    sol = _sol(name)
    X = np.array([[0.1, 0.05], [0.1, -0.2], [0.05, 0.1], [0.2, -0.1]])
    s, r, gs, gr, ok = phase_gradients(sol, X)
    assert ok.all()
    h = 1e-6
    for mu in range(4):
        dX = np.zeros((4, 1))
        dX[mu] = h
        sp, rp, *_ = phase2_batch(sol.waves, X + dX)
        sm, rm, *_ = phase2_batch(sol.waves, X - dX)
        assert np.allclose((sp - sm) / (2 * h), gs[mu], atol=1e-6)
        assert np.allclose((rp - rm) / (2 * h), gr[mu], atol=1e-6)


@pytest.mark.parametrize("name", SIMPLE_FIXTURES)
def test_simple_wave_rank_one(name):
    fx = fixture(name)
    sol = build(fx["solution"])
    g = GridSpec.from_dict(fx["grid"])
    pts = [(float(g.times()[0]), [a if not hasattr(a, "nodes") else a.nodes()[k] for a in (g.x, g.y, g.z)])
           for k in (5, 20, 40)]
    for t, x in pts:
        assert jacobian_rank(sol, t, x) == 1


@settings(max_examples=20, deadline=None)
@given(x=st.floats(-0.4, 0.4), z=st.floats(-0.4, 0.4))
def test_double_wave_rank_bound(x, z):
    # rank can drop where a profile is stationary (c'(0) = 0 here), never rise
    sol = _sol("AA")
    assert 1 <= jacobian_rank(sol, 0.1, [x, 0.0, z]) <= 2


def test_double_wave_rank_two_at_generic_point():
    assert jacobian_rank(_sol("AA"), 0.1, [0.3, 0.0, 0.35]) == 2


def test_perturbation_raises_rank():
    sol = PerturbedSolution(_sol("Fast_kappa2"), "H", 1e-3)
    assert jacobian_rank(sol, 0.05, [0.1, 0.1, 0.2]) >= 2


def test_jacobian_shape_and_time_derivative():
    sol = _sol("E3")
    J = jacobian(sol, 0.1, [0.1, 0.0, 0.1])
    assert J.shape == (8, 4)
    # rho_t = -(v0 . 1) rho_x for the entropic density wave along (1, 1, 1)
    assert J[0, 0] == pytest.approx(-sum(sol.constants["v0"]) * J[0, 1], rel=1e-6)
