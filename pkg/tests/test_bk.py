import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ergolab import bk, invariant
from ergolab.errors import InvalidInput


def rot(th):
    return np.array([[np.cos(th), -np.sin(th)], [np.sin(th), np.cos(th)]])


@pytest.fixture(scope="module")
def circle():
    return invariant.bk_from_linear_action([rot(2 * np.pi / 256)], (1.0, 0.0))


def swap_system(weights=(0.3, 0.7)):
    S = np.array([[0.0, 1.0], [1.0, 0.0]])
    pts = np.array([[1.0, 0.0], [0.0, 1.0]])
    sysm = invariant.BKSystem(pts, np.array(weights), [S], [np.array([1, 0])], invariant.operator_bound([S]))
    sysm.diagnostics = {"equicontinuous": True, "minimal": True}
    return sysm


def test_circle_metric_is_euclidean(circle):
    M = bk.invariant_metric(circle)
    assert np.allclose(M.table, circle.distance_table(), atol=1e-12)
    assert M.invariance_residual < 1e-8


def test_swap_metric_is_euclidean():
    sysm = swap_system()
    M = bk.invariant_metric(sysm)
    assert np.allclose(M.table, sysm.distance_table())


def test_conjugated_rotation_metric():
    A = np.array([[2.0, 1.0], [0.0, 1.0]])
    S = A @ rot(2 * np.pi / 32) @ np.linalg.inv(A)
    sysm = invariant.bk_from_linear_action([S], (1.0, 0.0))
    M = bk.invariant_metric(sysm)
    d = sysm.distance_table()
    assert np.all(M.table >= d - 1e-12)
    assert np.any(M.table > d + 1e-3)
    assert M.invariance_residual < 1e-8
    # doubling the sample (adding S^2 as a generator) changes nothing on a closed orbit
    sys2 = invariant.bk_from_linear_action([S, S @ S], (1.0, 0.0))
    assert np.allclose(bk.invariant_metric(sys2).table, M.table, atol=1e-9)


def test_global_support(circle):
    out = bk.global_support_check(circle, circle.weights, 0.1)
    assert out["supported"] and out["min_ball_mass"] > 0


def test_global_support_zero_weight_point():
    sysm = swap_system((1.0, 0.0))
    out = bk.global_support_check(sysm, sysm.weights, 0.5)
    assert not out["supported"]


def test_global_support_nonuniform():
    sysm = swap_system((0.3, 0.7))
    out = bk.global_support_check(sysm, sysm.weights, 0.5)
    assert out["supported"] and out["min_ball_mass"] == pytest.approx(0.3)


def test_circle_witness(circle):
    W = bk.nonergodic_product_witness(circle, eps=0.1)
    # oracle: pairs at index difference j with 2 sin(pi j / 256) < eps / 2C form a band
    r = 0.1 / (2 * circle.C)
    band = sum(1 for j in range(256) if 2 * abs(np.sin(np.pi * j / 256)) < r)
    assert W.measure == pytest.approx(band / 256, abs=1e-12)
    assert 0.01 < W.measure < 0.99
    assert W.witnessed and W.containment
    assert W.invariance_defect < 1e-9
    d = circle.distance_table()
    assert np.all(W.O_eps[W.D_eps]) and np.all(d[W.O_eps] < 0.1)


def test_large_eps_gives_no_witness(circle):
    W = bk.nonergodic_product_witness(circle, eps=2 * 2 * circle.C + 1)
    assert not W.witnessed and "shrink" in W.note and W.measure == pytest.approx(1.0)


def test_swap_witness():
    sysm = swap_system((0.3, 0.7))
    W = bk.nonergodic_product_witness(sysm, P=np.array([0.5, 0.5]), eps=0.5)
    assert W.measure == pytest.approx(0.3 * 0.5 + 0.7 * 0.5)
    assert np.array_equal(W.O_eps, np.eye(2, dtype=bool))


def test_witness_rejects_noninvariant_P():
    with pytest.raises(InvalidInput):
        bk.nonergodic_product_witness(swap_system(), P=np.array([0.2, 0.8]), eps=0.5)
    with pytest.raises(InvalidInput):
        bk.nonergodic_product_witness(swap_system(), eps=0.0)


@settings(max_examples=20, deadline=None)
@given(st.floats(0.01, 3.0), st.floats(0.01, 3.0))
def test_witness_monotone_in_eps(e1, e2, ):
    sysm = invariant.bk_from_linear_action([rot(2 * np.pi / 64)], (1.0, 0.0))
    lo, hi = sorted((e1, e2))
    assert bk.nonergodic_product_witness(sysm, eps=lo).measure <= bk.nonergodic_product_witness(sysm, eps=hi).measure


def test_witness_csv(circle):
    W = bk.nonergodic_product_witness(circle, eps=0.1)
    text = W.to_csv()
    assert text.splitlines()[0] == "i,j,in_D_eps,in_O_eps"
    assert len(text.splitlines()) == 256 * 256 + 1
