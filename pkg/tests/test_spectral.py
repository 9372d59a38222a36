import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ergolab import spaces, spectral
from ergolab.errors import InvalidInput

GOLDEN = (math.sqrt(5) - 1) / 2
A2, A3 = math.sqrt(2) - 1, math.sqrt(3) - 1


def rotation(alpha, K=30):
    return spaces.build_fourier_rotation(1, K, [alpha])[1]


def odometer(n, p):
    return spaces.koopman_of(spaces.build_odometer(n, p)[1])


def test_correlation_of_rotation_mode():
    U = rotation(0.2, 3)
    f = np.zeros(U.dim, dtype=complex)
    f[U.space.mode_index((1,))] = 1
    c = spectral.correlation_sequence(U, f, 10)
    n = np.arange(-10, 11)
    assert np.allclose(c, np.exp(2j * np.pi * n * 0.2), atol=1e-13)
    assert np.all(spectral.correlation_sequence(U, np.zeros(U.dim), 5) == 0)


def test_correlation_of_cycle_eigenvector():
    U = odometer(2, 0.5)
    P = U.to_dense()
    w, V = np.linalg.eig(P)
    f = V[:, np.argmin(np.abs(w - 1j))]
    c = spectral.correlation_sequence(U, f, 8)
    n = np.arange(-8, 9)
    nf2 = U.space.norm(f) ** 2
    assert np.allclose(c, (1j) ** n * nf2, atol=1e-12)


@settings(max_examples=25, deadline=None)
@given(st.integers(2, 6), st.sampled_from([0.3, 0.5, 0.7]), st.integers(0, 2**32 - 1))
def test_correlation_hermitian(n, p, seed):
    U = odometer(n, p)
    f = np.random.default_rng(seed).standard_normal(U.dim)
    c = spectral.correlation_sequence(U, f, 20)
    assert np.allclose(c[::-1], np.conj(c))
    assert c[20].real == pytest.approx(U.space.norm(f) ** 2)


def test_golden_atom():
    N = 2048
    c = np.exp(2j * np.pi * np.arange(-N, N + 1) * GOLDEN)
    est = spectral.spectral_estimate(c)
    assert len(est.atoms) == 1
    loc, mass = est.atoms[0]
    assert abs(loc - GOLDEN) < 1 / 2048
    assert abs(mass - 1) < 1e-3
    assert est.density.min() > -1e-9
    assert abs(est.grid_mass - 1) < 1e-6


def test_white_noise_has_no_atoms():
    c = np.zeros(2 * 512 + 1, dtype=complex)
    c[512] = 1
    est = spectral.spectral_estimate(c)
    assert est.atoms == []
    assert np.allclose(est.density, 1.0)


def test_cosine_gives_two_half_atoms():
    N, a = 1024, 0.2
    n = np.arange(-N, N + 1)
    c = np.cos(2 * np.pi * n * a).astype(complex)
    est = spectral.spectral_estimate(c)
    assert len(est.atoms) == 2
    locs = sorted(loc for loc, _ in est.atoms)
    assert abs(locs[0] - a) < 1 / N and abs(locs[1] - (1 - a)) < 1 / N
    assert all(abs(m - 0.5) < 1e-3 for _, m in est.atoms)


def test_mass_conserved_across_windows():
    n = np.arange(-2048, 2049)
    c = 0.6 * np.exp(2j * np.pi * n * 0.3) + 0.4 * (n == 0)
    for N in (512, 2048):
        est = spectral.spectral_estimate(c[2048 - N : 2048 + N + 1])
        assert abs(est.grid_mass - 1.0) < 1e-6


def test_rejects_non_positive_definite():
    c = np.zeros(21, dtype=complex)
    c[10] = 1
    c[11] = c[9] = 2
    with pytest.raises(InvalidInput):
        spectral.spectral_estimate(c)


def test_rotation_eigenvalues_are_modes():
    K, a = 5, 0.1234
    e = spectral.eigenvalue_set(rotation(a, K))
    want = {k: np.exp(2j * np.pi * k * a) for k in range(-K, K + 1)}
    assert len(e) == 2 * K + 1
    for lab, val in zip(e.labels, e.values):
        assert abs(val - want[lab[0]]) < 1e-14


def test_identity_eigenvalues():
    space, _ = spaces.build_odometer(3, 0.3)
    e = spectral.eigenvalue_set(spaces.identity_operator(space))
    assert e.multiplicity(1.0) == 8


def test_odometer_roots_match_dense_oracle():
    U = odometer(4, 0.3)
    e = spectral.eigenvalue_set(U)
    roots = np.exp(2j * np.pi * np.arange(16) / 16)
    dense = np.linalg.eigvals(U.to_dense())
    for r in roots:
        assert np.min(np.abs(e.values - r)) < 1e-8
        assert np.min(np.abs(dense - r)) < 1e-8
        assert e.multiplicity(r, 1e-8) == 1
    for i in range(len(e)):
        assert e.modulus_ratio(i) < 1 + 1e-8


def test_eigenfunctions_satisfy_equation():
    U = odometer(3, 0.7)
    e = spectral.eigenvalue_set(U)
    for lam, v in zip(e.values, e.vectors.T):
        assert U.space.norm(U(v) - lam * v) < 1e-12


def integer_resonances(a, b, K):
    return [(k, l) for k in range(-K, K + 1) for l in range(-K, K + 1)
            if (k, l) != (0, 0) and abs((k * a + l * b) - round(k * a + l * b)) < 1e-9]


def test_multiplier_irrational_pair_is_ergodic():
    assert integer_resonances(A2, A3, 30) == []
    v = spectral.multiplier_test(rotation(A2), rotation(A3))
    assert v.verdict == "ergodic" and v.agrees_with_oracle
    assert v.oracle["window_residual"] > 0.1


def test_multiplier_resonant_pair():
    v = spectral.multiplier_test(rotation(A2), rotation(2 * A2))
    assert v.verdict == "not-ergodic" and v.agrees_with_oracle
    assert v.witness["mode"] == [2, -1]
    assert v.witness["residual"] < 1e-12


def test_multiplier_odometers_share_minus_one():
    v = spectral.multiplier_test(odometer(4, 0.3), odometer(4, 0.5))
    assert v.verdict == "not-ergodic" and v.agrees_with_oracle
    assert abs(v.witness["eigenvalue_T"] + 1) < 1e-12
    assert abs(v.witness["eigenvalue_S"] + 1) < 1e-12


def test_multiplier_odometer_rotation_ergodic():
    gaps = [abs(np.exp(2j * np.pi * j / 16) * np.exp(2j * np.pi * m * A2) - 1)
            for j in range(16) for m in range(-30, 31) if m != 0]
    assert min(gaps) > 1e-3
    v = spectral.multiplier_test(odometer(4, 0.3), rotation(A2))
    assert v.verdict == "ergodic" and v.agrees_with_oracle


def test_multiplier_requires_measure_preserving_S():
    with pytest.raises(InvalidInput):
        spectral.multiplier_test(rotation(A2), odometer(3, 0.3))


def test_multiplier_never_matches_trivial_character():
    v = spectral.multiplier_test(rotation(A2, 5), rotation(A3, 5))
    assert v.matches == 0


@settings(max_examples=10, deadline=None)
@given(st.integers(1, 4), st.integers(1, 4), st.sampled_from([0.3, 0.5, 0.7]))
def test_odometer_pairs_agree_with_oracle(n1, n2, p):
    v = spectral.multiplier_test(odometer(max(n1, 2), p), odometer(max(n2, 2), 0.5), window=256)
    assert v.agrees_with_oracle
