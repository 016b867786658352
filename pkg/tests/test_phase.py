import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from riemann_mhd.errors import GradientCatastrophe
from riemann_mhd.phase import CATASTROPHIC, OK, phase2_batch, phase_batch, solve_phase, solve_phase2


class Burgers:
    """lambda(r) = (-k r, 1, 0, 0): r = x - k r t, so r = x / (1 + k t) and phi = 1 + k t."""

    def __init__(self, k):
        self.k = k

    def wave(self, r):
        r = np.asarray(r, dtype=float)
        return np.stack([-self.k * r, np.ones_like(r), np.zeros_like(r), np.zeros_like(r)])


class Pair:
    """Two Burgers-type phases in x and y, with a weak coupling through s*r in lambda1_0."""

    def __init__(self, k1, k2, c=0.0):
        self.k1, self.k2, self.c = k1, k2, c

    def waves(self, s, r):
        s, r = np.asarray(s, float), np.asarray(r, float)
        z, o = np.zeros_like(s), np.ones_like(s)
        return (np.stack([-self.k1 * s - self.c * s * r, o, z, z]), np.stack([-self.k2 * r, z, o, z]))


def test_linear_phase_is_exact():
    sol = Burgers(0.0)
    ps = solve_phase(sol, 2.0, [0.3, 1.0, -1.0])
    assert ps.r == 0.3 and ps.phi == pytest.approx(1.0)


@settings(max_examples=60, deadline=None)
@given(k=st.floats(-0.9, 2.0), t=st.floats(0.0, 1.0), x=st.floats(-2.0, 2.0))
def test_burgers_phase(k, t, x):
    ps = solve_phase(Burgers(k), t, [x, 0.0, 0.0])
    assert ps.r == pytest.approx(x / (1 + k * t), rel=1e-12, abs=1e-12)
    assert ps.phi == pytest.approx(1 + k * t, rel=1e-6)


def test_catastrophe_detected():
    # phi = 1 - t vanishes at t = 1
    with pytest.raises(GradientCatastrophe):
        solve_phase(Burgers(-1.0), 1.0, [0.5, 0.0, 0.0])
    _, _, _, status = phase_batch(Burgers(-1.0).wave, np.array([[0.5, 1.0], [0.2, 0.2], [0, 0], [0, 0]]))
    assert status.tolist() == [OK, CATASTROPHIC]


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 1000))
def test_batch_result_independent_of_grouping(seed):
    rng = np.random.default_rng(seed)
    X = np.vstack([rng.uniform(0, 0.5, 40), rng.uniform(-1, 1, (3, 40))])
    wave = Burgers(0.7).wave
    r_all = phase_batch(wave, X)[0]
    perm = rng.permutation(40)
    r_perm = phase_batch(wave, X[:, perm])[0]
    assert np.array_equal(r_all[perm], r_perm)
    halves = np.concatenate([phase_batch(wave, X[:, :17])[0], phase_batch(wave, X[:, 17:])[0]])
    assert np.array_equal(r_all, halves)


@settings(max_examples=40, deadline=None)
@given(t=st.floats(0.0, 0.8), x=st.floats(-1.0, 1.0), y=st.floats(-1.0, 1.0))
def test_rank2_uncoupled(t, x, y):
    ps = solve_phase2(Pair(0.5, -0.4), t, [x, y, 0.0])
    assert ps.s == pytest.approx(x / (1 + 0.5 * t), abs=1e-12)
    assert ps.r == pytest.approx(y / (1 - 0.4 * t), abs=1e-12)
    assert np.allclose(ps.Phi, np.diag([1 + 0.5 * t, 1 - 0.4 * t]), atol=1e-6)


def test_rank2_coupled_residual():
    sol = Pair(0.5, 0.3, c=0.4)
    X = np.array([[0.3, 0.5], [0.4, -0.7], [0.2, 0.9], [0.0, 0.0]])
    s, r, P, _, status = phase2_batch(sol.waves, X)
    assert (status == OK).all()
    l1, l2 = sol.waves(s, r)
    assert np.allclose(s, np.einsum("ik,ik->k", l1, X), atol=1e-13)
    assert np.allclose(r, np.einsum("ik,ik->k", l2, X), atol=1e-13)


def test_rank2_catastrophe():
    with pytest.raises(GradientCatastrophe):
        solve_phase2(Pair(-1.0, 0.2), 1.0, [0.3, 0.1, 0.0])
