"""Gaussian systems attached to unitary representations.

The Gaussian action is carried here by its chaos data: the covariance of the first
chaos, samples of the process, and the symmetric tensor powers on which the
Koopman representation acts.
"""

from __future__ import annotations

import itertools
import math
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from . import groups
from .errors import InvalidInput, NumericalFailure, check_size
from .groups import FolnerWindow, GroupElement

DEFAULT_TAU = 0.05
FIXED_TOL = 1e-8


class UnitaryRep:
    """A unitary representation g -> pi(g).

    Subclasses provide ``matrix`` (finite dimensional) or override ``apply`` and
    ``inner`` (coefficient-evaluable, e.g. a grid model of L2(R)).
    """

    kind = groups.INT_LATTICE
    dim = 1
    finite = True

    def matrix(self, g: GroupElement) -> np.ndarray:
        raise NotImplementedError

    def apply(self, g: GroupElement, v) -> np.ndarray:
        return self.matrix(g) @ np.asarray(v, dtype=complex)

    def inner(self, u, v) -> complex:
        return complex(np.vdot(v, u))

    def coefficient(self, g: GroupElement, f1, f2) -> complex:
        """<pi(g) f1, f2>."""
        return self.inner(self.apply(g, f1), f2)

    def window_coefficients(self, window: FolnerWindow, f1, f2) -> np.ndarray:
        return np.array([self.coefficient(g, f1, f2) for g in window.sample])

    def test_vectors(self) -> list:
        return [np.eye(self.dim, dtype=complex)[:, i] for i in range(self.dim)]


class CharacterRep(UnitaryRep):
    """chi(g) = exp(2 pi i <alpha, g>) on Z^d or R^d."""

    def __init__(self, alpha, kind: str = groups.INT_LATTICE):
        self.alpha = tuple(np.atleast_1d(np.asarray(alpha, dtype=float)))
        self.kind = kind
        self.chi = groups.Character(self.alpha, kind)

    def matrix(self, g):
        return np.array([[groups.character_eval(self.chi, g)]])


class MatrixPowerRep(UnitaryRep):
    """n -> V^n on Z, for a unitary V."""

    def __init__(self, V):
        V = np.asarray(V, dtype=complex)
        if np.linalg.norm(V.conj().T @ V - np.eye(len(V)), 2) > 1e-10:
            raise InvalidInput("generator is not unitary")
        self.V = V
        self.dim = len(V)
        w, Z = np.linalg.eig(V)
        self._eig = (w / np.abs(w), Z, np.linalg.inv(Z))

    def matrix(self, g):
        (n,) = g.coords
        w, Z, Zi = self._eig
        return (Z * w[None, :] ** n) @ Zi


class DirectSumRep(UnitaryRep):
    def __init__(self, *reps):
        kinds = {r.kind for r in reps}
        if len(kinds) != 1 or not all(r.finite for r in reps):
            raise InvalidInput("direct sums need finite representations of one group kind")
        self.reps = reps
        self.kind = kinds.pop()
        self.dim = sum(r.dim for r in reps)

    def matrix(self, g):
        out = np.zeros((self.dim, self.dim), dtype=complex)
        i = 0
        for r in self.reps:
            out[i : i + r.dim, i : i + r.dim] = r.matrix(g)
            i += r.dim
        return out


class HeisenbergScalarRep(UnitaryRep):
    """pi_{alpha,beta}(M(a,b,c)) = exp(i(alpha a + beta b))."""

    kind = groups.HEISENBERG

    def __init__(self, alpha: float, beta: float):
        self.alpha, self.beta = float(alpha), float(beta)

    def matrix(self, g):
        a, b, _ = g.coords
        return np.array([[np.exp(1j * (self.alpha * a + self.beta * b))]])


def random_unitary(n: int, rng) -> np.ndarray:
    z = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))[None, :]


def gaussian_covariance(rep: UnitaryRep, v, elements) -> np.ndarray:
    """C_ij = Re <pi(g_j^-1 g_i) v, v>, the covariance of X^{g_i} and X^{g_j}."""
    elements = list(elements)
    if not elements:
        raise InvalidInput("need at least one group element")
    v = np.asarray(v, dtype=complex)
    if np.sqrt(abs(rep.inner(v, v))) == 0:
        raise InvalidInput("cyclic vector must be non-zero")
    k = len(elements)
    C = np.empty((k, k))
    for i, gi in enumerate(elements):
        for j, gj in enumerate(elements):
            C[i, j] = rep.coefficient(groups.compose(groups.inverse(gj), gi), v, v).real
    C = (C + C.T) / 2
    low = np.linalg.eigvalsh(C)[0] if k else 0.0
    if low < -1e-8 * max(1.0, abs(C).max()):
        raise NumericalFailure(
            f"covariance has eigenvalue {low:.2e}: representation and group law are inconsistent"
        )
    return C


def gram_covariance(rep: UnitaryRep, v, elements) -> np.ndarray:
    """Real Gram matrix of the vectors pi(g_i) v."""
    vecs = [rep.apply(g, v) for g in elements]
    return np.array([[rep.inner(a, b).real for b in vecs] for a in vecs])


def psd_factor(C, tol: float = 1e-8) -> np.ndarray:
    """L with L L^T = C, via the symmetric eigendecomposition (tolerates singular C)."""
    C = np.asarray(C, dtype=float)
    if C.ndim != 2 or C.shape[0] != C.shape[1]:
        raise InvalidInput("covariance must be square")
    if not np.allclose(C, C.T, atol=1e-12 * max(1.0, np.abs(C).max(initial=0.0))):
        raise InvalidInput("covariance must be symmetric")
    if C.size == 0:
        return C.copy()
    w, Q = np.linalg.eigh(C)
    scale = max(1.0, abs(w).max())
    if w[0] < -tol * scale:
        raise InvalidInput(f"covariance is not positive semidefinite (eigenvalue {w[0]:.2e})")
    w = np.where(w > tol * scale, w, 0.0)
    return Q * np.sqrt(w)[None, :]


def sample_gaussian_process(C, n_samples: int, seed: int = 0) -> np.ndarray:
    """Rows are independent centred Gaussian vectors with covariance C."""
    if n_samples < 0:
        raise InvalidInput("n_samples must be non-negative")
    L = psd_factor(C)
    rng = np.random.default_rng(seed)
    Z = rng.standard_normal((n_samples, L.shape[1]))
    return Z @ L.T


def symmetric_basis(d: int, n: int) -> list:
    """Occupation tuples (n_1, ..., n_d) with sum n, in lexicographic order of sorted index multisets."""
    return [
        tuple(Counter(c).get(i, 0) for i in range(d))
        for c in itertools.combinations_with_replacement(range(d), n)
    ]


def _permanent(A: np.ndarray) -> complex:
    """Ryser's formula."""
    n = A.shape[0]
    if n == 0:
        return 1.0 + 0j
    total = 0j
    for mask in range(1, 1 << n):
        cols = [j for j in range(n) if mask >> j & 1]
        rowsum = A[:, cols].sum(axis=1)
        total += (-1) ** len(cols) * np.prod(rowsum)
    return (-1) ** n * total


def sym_tensor_power(U, n: int) -> np.ndarray:
    """Matrix of U^{(x) n} on the symmetric subspace, orthonormal occupation basis.

    <beta| U^{(x)n} |alpha> = perm(U[rows(beta), cols(alpha)]) / sqrt(prod alpha! prod beta!).
    """
    U = np.asarray(U, dtype=complex)
    d = U.shape[0]
    if n < 0:
        raise InvalidInput("tensor power must be non-negative")
    dim = math.comb(d + n - 1, n)
    check_size(dim * dim, f"symmetric power of order {n}")
    basis = symmetric_basis(d, n)
    idx = [np.repeat(np.arange(d), occ) for occ in basis]
    norm = [math.prod(math.factorial(k) for k in occ) for occ in basis]
    out = np.empty((dim, dim), dtype=complex)
    for r, (ri, nr) in enumerate(zip(idx, norm)):
        for c, (ci, nc) in enumerate(zip(idx, norm)):
            out[r, c] = _permanent(U[np.ix_(ri, ci)]) / math.sqrt(nr * nc)
    return out


@dataclass
class GaussianVerdict:
    verdict: str
    route: str
    evidence: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        ev = {k: v for k, v in self.evidence.items() if k != "fixed_vector"}
        return {"verdict": self.verdict, "route": self.route, "evidence": ev}


def _fixed_vector_route(rep: UnitaryRep, window: FolnerWindow) -> GaussianVerdict:
    d = rep.dim
    check_size(d**4, "averaged pi (x) conj(pi) operator")
    mats = [rep.matrix(g) for g in window.sample]
    A = sum(np.kron(M, M.conj()) for M in mats) / len(mats)
    w, Z = np.linalg.eig(A)
    i = int(np.argmin(np.abs(w - 1.0)))
    v = Z[:, i] / np.linalg.norm(Z[:, i])
    residual = max(float(np.linalg.norm(np.kron(M, M.conj()) @ v - v)) for M in mats)
    fixed = residual < FIXED_TOL
    return GaussianVerdict(
        "not-weakly-mixing" if fixed else "weakly-mixing",
        "fixed-vector",
        {
            "window_radius": window.radius,
            "window_size": len(window),
            "averaged_eigenvalue": w[i],
            "fixed_vector_residual": residual,
            "fixed_vector": v,
        },
    )


def _coefficient_means(rep, window, vectors):
    best = 0.0
    for f1 in vectors:
        for f2 in vectors:
            vals = rep.window_coefficients(window, f1, f2)
            best = max(best, float(np.mean(np.abs(vals))))
    return best


def gaussian_ergodicity_verdict(
    rep: UnitaryRep,
    window: FolnerWindow,
    tau: float = DEFAULT_TAU,
    vectors=None,
    route: str | None = None,
) -> GaussianVerdict:
    """Weak mixing of pi, which decides ergodicity of the associated Gaussian action.

    Finite representations: look for a fixed vector of the window average of
    pi (x) conj(pi). Otherwise: Folner means of |<pi(g) v_i, v_j>| at radii N and 2N.
    """
    if route is None:
        route = "fixed-vector" if rep.finite else "coefficient"
    if route == "fixed-vector":
        if not rep.finite:
            raise InvalidInput("fixed-vector route needs a finite-dimensional representation")
        return _fixed_vector_route(rep, window)
    vectors = rep.test_vectors() if vectors is None else list(vectors)
    big = window.doubled()
    m1 = _coefficient_means(rep, window, vectors)
    m2 = _coefficient_means(rep, big, vectors)
    evidence = {
        "radii": [window.radius, big.radius],
        "means": [m1, m2],
        "ratio": m2 / m1 if m1 > 0 else 0.0,
        "tau": tau,
        "step": window.step,
    }
    if m2 < m1 and m2 < tau:
        verdict = "weakly-mixing"
    elif m1 > tau and m2 >= m1:
        verdict = "not-weakly-mixing"
    else:
        verdict = "inconclusive"
    return GaussianVerdict(verdict, "coefficient", evidence)
