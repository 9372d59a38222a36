import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import linalg

from ergolab import invariant, spaces
from ergolab.errors import InvalidInput


def odometer(n, p):
    space, T = spaces.build_odometer(n, p)
    return space, T, spaces.koopman_of(T)


def minus_one_report(reports):
    return next(r for r in reports if r.dim == 1 and abs(r.matrices[0][0, 0] + 1) < 1e-8)


def test_rotation_modes_are_one_dimensional():
    a = 0.1234
    space, U = spaces.build_fourier_rotation(1, 3, [a])
    found = invariant.find_invariant_subspaces([U])
    assert sorted(r.dim for r in found) == [1] * 6
    for r in found:
        k = space.modes[np.argmax(np.abs(r.frames[:, 0]))][0]
        assert k != 0
        assert abs(r.matrices[0][0, 0] - np.exp(2j * np.pi * k * a)) < 1e-12


def test_odometer_minus_one_subspace():
    space, T, U = odometer(2, 0.3)
    r = minus_one_report(invariant.find_invariant_subspaces([U]))
    # the composition representative has constant modulus
    v = r.frames[:, 0]
    assert np.ptp(np.abs(v)) < 1e-10
    # oracle: exact 4x4 eigendecomposition
    w, V = np.linalg.eig(U.to_dense())
    f = V[:, np.argmin(np.abs(w + 1))]
    overlap = abs(space.inner(r.basis[:, 0], f)) / space.norm(f)
    assert overlap == pytest.approx(1.0, abs=1e-12)


def test_measure_on_singletons_n2():
    space, T, U = odometer(2, 0.3)
    r = minus_one_report(invariant.find_invariant_subspaces([U]))
    mu = invariant.build_invariant_measure(r)
    assert mu.sum() == pytest.approx(1.0, abs=1e-10)
    singles = [[i] for i in range(4)]
    assert invariant.invariance_defect(mu, T.perm, singles) < 1e-12
    # m itself is not invariant
    assert invariant.invariance_defect(space.weights, T.perm, singles) > 0.05


def test_measure_on_cylinders_n4():
    space, T, U = odometer(4, 0.3)
    r = minus_one_report(invariant.find_invariant_subspaces([U]))
    mu = invariant.build_invariant_measure(r)
    cyl = invariant.cylinder_sets(4)
    assert len(cyl) == 81
    assert invariant.invariance_defect(mu, T.perm, cyl) < 1e-10
    assert r.orthogonality_defect() < 1e-10
    assert np.all(mu > 0)


def test_measure_preserving_gives_m():
    space, T, U = odometer(3, 0.5)
    r = minus_one_report(invariant.find_invariant_subspaces([U]))
    assert np.allclose(invariant.build_invariant_measure(r), space.weights)


def test_surrogate_is_empty():
    ops = invariant.weakly_mixing_surrogate(16, seed=0)
    assert invariant.find_invariant_subspaces(ops, tol=1e-8) == []
    # commutant rank oracle on the mean-zero space
    c = np.full(16, 0.25)
    Q = linalg.null_space(c[None, :])
    Rs = [Q.T @ U.frame_dense() @ Q for U in ops]
    sysm = np.vstack([np.kron(R.T, np.eye(15)) - np.kron(np.eye(15), R) for R in Rs])
    s = np.linalg.svd(sysm, compute_uv=False)
    assert int(np.sum(s < 1e-9)) == 1


def block_oracle(ops, Q, dims):
    """Undo the known change of basis and read the block sizes off the sparsity pattern."""
    mask = np.zeros((sum(dims),) * 2, dtype=bool)
    for U in ops:
        B = Q.conj().T @ U.frame_dense() @ Q
        mask |= np.abs(B) > 1e-10
    # connected components of the support graph
    n = len(mask)
    seen, sizes = set(), []
    for s in range(n):
        if s in seen:
            continue
        stack, comp = [s], 0
        seen.add(s)
        while stack:
            i = stack.pop()
            comp += 1
            for j in np.flatnonzero(mask[i] | mask[:, i]):
                if j not in seen:
                    seen.add(j)
                    stack.append(j)
        sizes.append(comp)
    return sorted(sizes)


@settings(max_examples=10, deadline=None)
@given(st.lists(st.integers(1, 5), min_size=1, max_size=5).filter(lambda d: sum(d) <= 16), st.integers(0, 1000))
def test_detector_matches_block_oracle(dims, seed):
    ops, Q = invariant.block_system(dims, seed)
    found = invariant.find_invariant_subspaces(ops, tol=1e-8, seed=seed)
    assert sorted(r.dim for r in found) == block_oracle(ops, Q, dims) == sorted(dims)
    for r in found:
        assert r.residual < 1e-8
        assert r.orthogonality_defect() < 3 * max(r.residual, 1e-12) + 1e-10


def test_detector_rejects_oversized_search():
    space, T, U = odometer(2, 0.3)
    with pytest.raises(InvalidInput):
        invariant.find_invariant_subspaces([U], max_dim=13)


def test_bk_factor_of_rotation_mode():
    a = 0.1234
    space, U = spaces.build_fourier_rotation(1, 3, [a])
    r = next(r for r in invariant.find_invariant_subspaces([U])
             if space.modes[np.argmax(np.abs(r.frames[:, 0]))][0] == 1)
    sysm = invariant.extract_bk_factor(r, [[a]])
    radii = np.linalg.norm(sysm.points, axis=1)
    assert np.allclose(radii, 1.0)
    th = 2 * np.pi * a
    R = np.array([[np.cos(th), -np.sin(th)], [np.sin(th), np.cos(th)]])
    assert np.allclose(sysm.matrices[0], R, atol=1e-12)
    assert sysm.diagnostics["equivariance_residual"] < 1e-9


def test_bk_factor_of_odometer_sign():
    space, T, U = odometer(4, 0.3)
    r = minus_one_report(invariant.find_invariant_subspaces([U]))
    sysm = invariant.extract_bk_factor(r, [T.perm])
    assert sysm.size == 2
    assert np.allclose(np.sort(np.linalg.norm(sysm.points, axis=1)), [1, 1])
    assert np.allclose(sysm.points[0], -sysm.points[1], atol=1e-12)
    assert np.array_equal(sysm.actions[0], [1, 0])
    assert sysm.diagnostics["equivariance_residual"] < 1e-10
    assert sysm.weights.sum() == pytest.approx(1.0)
    assert sysm.C >= max(np.linalg.norm(S, 2) for S in sysm.matrices)


def test_bk_factor_rejects_constants():
    space = spaces.point_space(np.full(4, 0.25))
    r = invariant.InvariantSubspaceReport(
        space, np.ones((4, 1), complex), np.full((4, 1), 0.5, complex), [np.eye(1)], [0.0], 0
    )
    with pytest.raises(InvalidInput):
        invariant.extract_bk_factor(r, [np.arange(4)])


def test_report_serializes():
    from ergolab.io import dumps_canonical

    space, T, U = odometer(2, 0.3)
    r = invariant.find_invariant_subspaces([U])[0]
    assert '"dim": 1' in dumps_canonical(r.to_dict())
