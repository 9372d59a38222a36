import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ergolab import groups
from ergolab.errors import InvalidInput
from ergolab.groups import HEISENBERG, INT_LATTICE, REAL, TORUS

reals = st.floats(-50, 50, allow_nan=False, allow_infinity=False)
heis = st.builds(groups.heisenberg, reals, reals, reals)
ints = st.integers(-10**6, 10**6)


def close(g, h, tol=1e-12):
    return g.kind == h.kind and np.allclose(g.coords, h.coords, rtol=0, atol=tol * max(1.0, *map(abs, g.coords)))


def test_heisenberg_product_example():
    g = groups.heisenberg(1, 0, 0) * groups.heisenberg(0, 1, 0)
    assert g.coords == (1.0, 1.0, 1.0)
    oracle = groups.heisenberg(1, 0, 0).as_matrix() @ groups.heisenberg(0, 1, 0).as_matrix()
    assert np.array_equal(g.as_matrix(), oracle)


def test_heisenberg_inverse_example():
    g = groups.inverse(groups.heisenberg(1, 2, 3))
    assert g.coords == (-1.0, -2.0, -1.0)
    assert np.allclose(g.as_matrix(), np.linalg.inv(groups.heisenberg(1, 2, 3).as_matrix()))


def test_identity_laws():
    e = groups.identity(HEISENBERG)
    g = groups.heisenberg(0.3, -2.0, 7.5)
    assert e * g == g and g * e == g
    assert groups.inverse(e) == e


def test_torus_wraps():
    assert (groups.torus(0.75) * groups.torus(0.5)).coords == (0.25,)
    assert groups.inverse(groups.torus(0.25)).coords == (0.75,)
    assert groups.torus(-1e-18).coords[0] < 1.0


def test_kind_mismatch_rejected():
    with pytest.raises(InvalidInput):
        groups.compose(groups.lattice(1), groups.torus(0.1))
    with pytest.raises(InvalidInput):
        groups.compose(groups.lattice(1), groups.lattice(1, 2))


def test_lattice_needs_integers():
    with pytest.raises(InvalidInput):
        groups.lattice(0.5)


def test_character_examples():
    chi = groups.Character((2,), TORUS)
    assert abs(chi(groups.torus(0.25)) - (-1)) < 1e-15
    assert groups.Character((0,), TORUS)(groups.torus(0.37)) == 1
    a, b = 0.1234, 0.9
    chi1 = groups.Character((1,), TORUS)
    assert abs(chi1(groups.torus(a) * groups.torus(b)) - chi1(groups.torus(a)) * chi1(groups.torus(b))) < 1e-12


def test_character_dimension_mismatch():
    with pytest.raises(InvalidInput):
        groups.character_eval(groups.Character((1, 2), TORUS), groups.torus(0.5))


@settings(max_examples=200, deadline=None)
@given(heis, heis, heis)
def test_heisenberg_associativity(g, h, k):
    assert close((g * h) * k, g * (h * k))


@settings(max_examples=200, deadline=None)
@given(heis, heis)
def test_heisenberg_matches_matrix_oracle(g, h):
    assert np.allclose((g * h).as_matrix(), g.as_matrix() @ h.as_matrix(), rtol=1e-12, atol=1e-12)


@settings(max_examples=200, deadline=None)
@given(heis)
def test_heisenberg_inverse_law(g):
    e = groups.identity(HEISENBERG)
    assert close(g * groups.inverse(g), e, 1e-12)
    assert close(groups.inverse(g) * g, e, 1e-12)


@given(st.lists(ints, min_size=2, max_size=2), st.lists(ints, min_size=2, max_size=2), st.lists(ints, min_size=2, max_size=2))
def test_lattice_associativity_exact(x, y, z):
    g, h, k = groups.lattice(*x), groups.lattice(*y), groups.lattice(*z)
    assert (g * h) * k == g * (h * k)
    assert g * groups.inverse(g) == groups.identity(INT_LATTICE, 2)


@given(st.floats(0, 1, exclude_max=True), st.floats(0, 1, exclude_max=True), st.integers(-20, 20))
def test_torus_character_homomorphism(x, y, k):
    chi = groups.Character((k,), TORUS)
    g, h = groups.torus(x), groups.torus(y)
    assert abs(chi(g * h) - chi(g) * chi(h)) < 1e-12
    assert abs(abs(chi(g)) - 1) < 1e-15


@given(reals, reals, st.floats(-5, 5))
def test_real_character_homomorphism(x, y, f):
    chi = groups.Character((f,), REAL)
    assert abs(chi(groups.real(x) * groups.real(y)) - chi(groups.real(x)) * chi(groups.real(y))) < 1e-9


def test_power_matches_repeated_product():
    g = groups.heisenberg(1.5, -0.5, 2.0)
    M = np.linalg.matrix_power(g.as_matrix(), 5)
    assert np.allclose(groups.power(g, 5).as_matrix(), M)
    assert np.allclose(groups.power(g, -2).as_matrix(), np.linalg.inv(g.as_matrix() @ g.as_matrix()))


def test_folner_examples():
    assert [g.coords[0] for g in groups.folner_box(INT_LATTICE, 2)] == [-2, -1, 0, 1, 2]
    assert [g.coords[0] for g in groups.folner_box(REAL, 1, 0.5)] == [-1.0, -0.5, 0.0, 0.5, 1.0]
    w = groups.folner_box(HEISENBERG, 1, 1.0)
    assert len(w) == 27
    pts = {g.coords for g in w}
    assert all(groups.inverse(g).coords in pts for g in w)
    assert groups.identity(HEISENBERG).coords in pts


@pytest.mark.parametrize("kind,step", [(INT_LATTICE, 1.0), (REAL, 0.25), (TORUS, 0.1), (HEISENBERG, 0.5)])
def test_folner_symmetric_and_growing(kind, step):
    w1, w2 = groups.folner_box(kind, 2, step), groups.folner_box(kind, 4, step)
    assert len(w2) > len(w1)
    pts = np.array([g.coords for g in w1])
    for g in w1:
        gap = np.abs(pts - np.array(groups.inverse(g).coords))
        if kind == TORUS:
            gap = np.minimum(gap, 1 - gap)
        assert gap.max(axis=1).min() < 1e-12
    assert groups.identity(kind, w1.dim).coords in {g.coords for g in w1}


def test_folner_rejects_bad_radius():
    with pytest.raises(InvalidInput):
        groups.folner_box(INT_LATTICE, 0)
    with pytest.raises(InvalidInput):
        groups.folner_box("SL2", 3)


def test_folner_mean_of_character_decays():
    chi = groups.Character((math.sqrt(2) - 1,), INT_LATTICE)
    m10 = abs(groups.folner_mean(chi, groups.folner_box(INT_LATTICE, 10)))
    m1000 = abs(groups.folner_mean(chi, groups.folner_box(INT_LATTICE, 1000)))
    assert m1000 < m10 and m1000 < 1e-2
