import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra import numpy as hnp

from liftlearn import fom
from liftlearn.data import SnapshotSet, VariableLayout
from liftlearn.errors import DimensionError
from liftlearn.lifting import (LiftingMap, cubic_rd_structure, lift_deriv, lift_snapshots,
                               lift_state, lifted_rhs_cubic_rd, unlift_state)

LAY = VariableLayout(("s",), 9)
CUBIC = LiftingMap("cubic_rd", LAY)


def test_out_layout_names():
    assert CUBIC.out_layout.names == ("s", "s2")
    assert CUBIC.out_layout.n == 18
    assert LiftingMap("identity", LAY).out_layout == LAY


def test_rejects_unknown_or_multivariable():
    with pytest.raises(ValueError):
        LiftingMap("square", LAY)
    with pytest.raises(ValueError):
        LiftingMap("cubic_rd", VariableLayout(("u", "v"), 3))


def test_lift_small_values():
    s = np.array([0.0, 1.0, -2.0, 0.5, 3.0, 0, 0, 0, 0])
    w = lift_state(CUBIC, s)
    np.testing.assert_array_equal(w[9:], [0, 1, 4, 0.25, 9, 0, 0, 0, 0])
    np.testing.assert_array_equal(unlift_state(CUBIC, w), s)


def test_lift_deriv_is_chain_rule():
    # oracle: central difference of T along s_dot
    rng = np.random.default_rng(3)
    s, sd = rng.standard_normal(9), rng.standard_normal(9)
    eps = 1e-6
    fd = (lift_state(CUBIC, s + eps * sd) - lift_state(CUBIC, s - eps * sd)) / (2 * eps)
    np.testing.assert_allclose(lift_deriv(CUBIC, s, sd), fd, atol=1e-8)


def test_dimension_errors():
    with pytest.raises(DimensionError):
        lift_state(CUBIC, np.zeros(8))
    with pytest.raises(DimensionError):
        lift_deriv(CUBIC, np.zeros(9), np.zeros((9, 2)))
    with pytest.raises(DimensionError):
        lifted_rhs_cubic_rd(np.zeros(7), 0.1)


def test_lift_snapshots_requires_derivs():
    snaps = SnapshotSet(np.ones((9, 2)), [0.0, 1.0], LAY)
    with pytest.raises(ValueError, match="derivatives"):
        lift_snapshots(CUBIC, snaps)
    lifted = lift_snapshots(CUBIC, snaps.with_derivs(np.full((9, 2), 2.0)))
    np.testing.assert_array_equal(lifted.derivs[9:], 4.0)
    assert lifted.layout.names == ("s", "s2")


@settings(max_examples=50, deadline=None)
@given(s=hnp.arrays(np.float64, 12, elements=st.floats(-3, 3)),
       D=st.floats(0.01, 5.0))
def test_lifted_dynamics_exact(s, D):
    # dT/dt evaluated along the cubic dynamics equals a(T(s)) + h(T(s), T(s))
    s = s.copy()
    p = fom.FomProblem("cubic_reaction_diffusion", 12, D, bc=(s[0], s[-1]))
    lmap = LiftingMap("cubic_rd", p.layout)
    f = fom.rhs_eval(p, s)
    lhs = lift_deriv(lmap, s, f)
    rhs = lifted_rhs_cubic_rd(lift_state(lmap, s), p.dx, D)
    scale = 1 + np.max(np.abs(s)) ** 4 + D * np.max(np.abs(s)) ** 2 / p.dx**2
    np.testing.assert_allclose(rhs, lhs, atol=1e-12 * scale)


def test_structure_bilinear_symmetry_not_required():
    # h need not be symmetric, but h(w, w) must be the quadratic part
    rng = np.random.default_rng(0)
    st_ = cubic_rd_structure(10, 0.1, 1.0)
    w = rng.standard_normal(20)
    q = st_.bilinear(w, w)
    assert np.allclose(st_.bilinear(2 * w, w), 2 * q)
    assert np.allclose(st_.bilinear(w, 3 * w), 3 * q)
