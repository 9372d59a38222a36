"""Finite measure-space models, non-singular maps and their Koopman operators.

Two models are provided. ``fourier`` spaces hold trigonometric coefficients on
the mode box |k_i| <= K of the d-torus, where rotations act diagonally and
exactly. ``point`` spaces hold n weighted atoms, where a non-singular map is a
permutation together with its Radon-Nikodym weights m(Tx)/m(x).

Operators are stored in function coordinates: (U f)(x) = sqrt(w(x)) f(Tx).
The unitary frame v = sqrt(m) f turns U into a unitary matrix W, and for the
exact maps built here W acts on frame vectors by plain composition, so the
constant function corresponds to the all-ones frame vector.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInput, NumericalFailure, check_size

FOURIER = "fourier"
POINT = "point"
PRODUCT = "product"


@dataclass(frozen=True, eq=False)
class MeasureSpace:
    kind: str
    weights: np.ndarray
    d: int = 0
    K: int = 0
    modes: np.ndarray | None = None
    factors: tuple = field(default=())
    labels: tuple = field(default=())

    @property
    def size(self) -> int:
        return len(self.weights)

    def constant(self) -> np.ndarray:
        """The constant function 1 in this space's coordinates."""
        if self.kind == FOURIER:
            e0 = np.zeros(self.size)
            e0[self._zero_mode()] = 1.0
            return e0
        if self.kind == POINT:
            return np.ones(self.size)
        out = np.ones(1)
        for fac in self.factors:
            out = np.kron(out, fac.constant())
        return out

    def constant_frame(self) -> np.ndarray:
        """Unit frame vector of the constant function under composition."""
        if self.kind == FOURIER:
            return self.constant()
        if self.kind == POINT:
            return np.full(self.size, 1.0 / np.sqrt(self.size))
        out = np.ones(1)
        for fac in self.factors:
            out = np.kron(out, fac.constant_frame())
        return out

    def _zero_mode(self) -> int:
        return int(np.flatnonzero(~self.modes.any(axis=1))[0])

    def mode_index(self, mode) -> int:
        if self.kind != FOURIER:
            raise InvalidInput("mode lookup needs a Fourier space")
        mode = np.asarray(mode).reshape(-1)
        hits = np.flatnonzero((self.modes == mode).all(axis=1))
        if len(hits) == 0:
            raise InvalidInput(f"mode {tuple(mode)} outside the cutoff K={self.K}")
        return int(hits[0])

    def norm(self, f) -> float:
        return l2_norm(self, f)

    def inner(self, f, h) -> complex:
        return complex(np.sum(np.asarray(f) * np.conj(h) * self.weights))

    def to_dict(self) -> dict:
        out = {"kind": self.kind}
        if self.kind == FOURIER:
            out.update(d=self.d, K=self.K)
        elif self.kind == POINT:
            out["weights"] = self.weights
            if self.labels:
                out["labels"] = list(self.labels)
        else:
            out["factors"] = [f.to_dict() for f in self.factors]
        return out


def fourier_space(d: int, K: int) -> MeasureSpace:
    if d < 1 or K < 0:
        raise InvalidInput(f"Fourier space needs d >= 1 and K >= 0, got d={d}, K={K}")
    modes = np.array(list(itertools.product(range(-K, K + 1), repeat=d)), dtype=int)
    return MeasureSpace(FOURIER, np.ones(len(modes)), d=d, K=K, modes=modes)


def point_space(weights, labels=()) -> MeasureSpace:
    w = np.asarray(weights, dtype=float)
    if w.ndim != 1 or len(w) == 0:
        raise InvalidInput("point space weights must be a non-empty vector")
    if np.any(w < 0):
        raise InvalidInput("point space weights must be non-negative")
    if abs(w.sum() - 1.0) > 1e-12:
        raise InvalidInput(f"point space weights sum to {w.sum()!r}, not 1")
    return MeasureSpace(POINT, w, labels=tuple(labels))


def product_space(*factors: MeasureSpace) -> MeasureSpace:
    flat = []
    for f in factors:
        flat.extend(f.factors if f.kind == PRODUCT else (f,))
    w = np.ones(1)
    for f in flat:
        w = np.kron(w, f.weights)
    return MeasureSpace(PRODUCT, w, factors=tuple(flat))


def l2_norm(space: MeasureSpace, f) -> float:
    f = np.asarray(f)
    return float(np.sqrt(np.sum(np.abs(f) ** 2 * space.weights)))


@dataclass(frozen=True, eq=False)
class NonSingularMap:
    """A bijection of a point space with rn_weight(x) = d(m o T)/dm (x) = m(Tx)/m(x)."""

    space: MeasureSpace
    perm: np.ndarray
    rn_weight: np.ndarray

    def __post_init__(self):
        n = self.space.size
        perm = np.asarray(self.perm, dtype=int)
        if self.space.kind != POINT:
            raise InvalidInput("non-singular maps are defined on point spaces")
        if perm.shape != (n,) or sorted(perm.tolist()) != list(range(n)):
            raise InvalidInput("state map must be a permutation of the states")
        rn = np.asarray(self.rn_weight, dtype=float)
        if rn.shape != (n,):
            raise InvalidInput("one Radon-Nikodym weight per state is required")
        object.__setattr__(self, "perm", perm)
        object.__setattr__(self, "rn_weight", rn)

    @property
    def measure_preserving(self) -> bool:
        return bool(np.allclose(self.rn_weight, 1.0, rtol=0, atol=1e-12))

    def __call__(self, x):
        return self.perm[x]

    def power(self, k: int) -> "NonSingularMap":
        perm = np.arange(self.space.size)
        for _ in range(k):
            perm = self.perm[perm]
        m = self.space.weights
        with np.errstate(divide="ignore", invalid="ignore"):
            rn = m[perm] / m
        return NonSingularMap(self.space, perm, rn)

    def to_dict(self) -> dict:
        return {"space": self.space.to_dict(), "perm": self.perm, "rn_weight": self.rn_weight}


def map_from_permutation(space: MeasureSpace, perm) -> NonSingularMap:
    perm = np.asarray(perm, dtype=int)
    m = space.weights
    with np.errstate(divide="ignore", invalid="ignore"):
        rn = m[perm] / m
    return NonSingularMap(space, perm, rn)


def odometer_states(n: int) -> np.ndarray:
    """Row x holds the binary digits (x_1, ..., x_n) of state x; x_1 is the digit that moves first."""
    idx = np.arange(2**n)
    return (idx[:, None] >> np.arange(n)[None, :]) & 1


def build_odometer(n: int, p: float) -> tuple[MeasureSpace, NonSingularMap]:
    """n-digit adding machine with the product measure giving digit 0 weight p."""
    if int(n) != n or not 2 <= n <= 20:
        raise InvalidInput(f"odometer needs 2 <= bits <= 20, got {n}")
    if not 0.0 < p < 1.0:
        raise InvalidInput(f"odometer bias p must lie in (0, 1), got {p}")
    n = int(n)
    digits = odometer_states(n)
    ones = digits.sum(axis=1)
    m = p ** (n - ones) * (1.0 - p) ** ones
    m = m / m.sum()
    labels = tuple("".join(map(str, row)) for row in digits)
    space = point_space(m, labels)
    perm = (np.arange(2**n) + 1) % (2**n)
    # carry run: r leading 1-digits flip to 0 and the next 0 flips to 1
    run = np.zeros(2**n, dtype=int)
    for x in range(2**n):
        r = 0
        while r < n and digits[x, r] == 1:
            r += 1
        run[x] = r
    q = (1.0 - p) / p
    rn = np.where(run < n, q ** (1 - run).astype(float), (1.0 / q) ** n)
    return space, NonSingularMap(space, perm, rn)


@dataclass(frozen=True, eq=False)
class KoopmanOperator:
    """Matrix of U_T in function coordinates.

    Monomial form: (U f)[x] = scale[x] * f[perm[x]]. Dense form: U f = matrix @ f.
    """

    space: MeasureSpace
    perm: np.ndarray | None = None
    scale: np.ndarray | None = None
    matrix: np.ndarray | None = None
    label: str = ""

    def __post_init__(self):
        if (self.matrix is None) == (self.perm is None):
            raise InvalidInput("a Koopman operator is either monomial or dense")
        check_size(self.entries, f"operator {self.label or ''}".strip())

    @property
    def dim(self) -> int:
        return self.space.size

    @property
    def monomial(self) -> bool:
        return self.perm is not None

    @property
    def diagonal(self) -> bool:
        return self.monomial and bool(np.all(self.perm == np.arange(self.dim)))

    @property
    def entries(self) -> int:
        return self.dim if self.monomial else self.dim**2

    def apply(self, f) -> np.ndarray:
        f = np.asarray(f)
        if self.monomial:
            return self.scale * f[self.perm]
        return self.matrix @ f

    __call__ = apply

    def to_dense(self) -> np.ndarray:
        if not self.monomial:
            return np.array(self.matrix, dtype=complex)
        out = np.zeros((self.dim, self.dim), dtype=complex)
        out[np.arange(self.dim), self.perm] = self.scale
        return out

    def frame_phase(self) -> np.ndarray:
        """Monomial unitary frame: (W v)[x] = phase[x] * v[perm[x]]."""
        sq = np.sqrt(self.space.weights)
        return sq * self.scale / sq[self.perm]

    def frame_dense(self) -> np.ndarray:
        sq = np.sqrt(self.space.weights)
        if self.monomial:
            out = np.zeros((self.dim, self.dim), dtype=complex)
            out[np.arange(self.dim), self.perm] = self.frame_phase()
            return out
        return sq[:, None] * self.matrix / sq[None, :]

    def to_frame(self, f) -> np.ndarray:
        return np.sqrt(self.space.weights) * np.asarray(f)

    def from_frame(self, v) -> np.ndarray:
        return np.asarray(v) / np.sqrt(self.space.weights)

    def compose(self, other: "KoopmanOperator") -> "KoopmanOperator":
        """self @ other."""
        if self.monomial and other.monomial:
            return KoopmanOperator(
                self.space, other.perm[self.perm], self.scale * other.scale[self.perm]
            )
        return KoopmanOperator(self.space, matrix=self.to_dense() @ other.to_dense())

    def power(self, k: int) -> "KoopmanOperator":
        if k < 0:
            raise InvalidInput("only non-negative powers of an isometry are formed")
        out = identity_operator(self.space)
        base = self
        while k:
            if k & 1:
                out = out.compose(base)
            base = base.compose(base)
            k >>= 1
        return out

    def to_dict(self) -> dict:
        out = {"space": self.space.to_dict(), "label": self.label}
        if self.monomial:
            out.update(form="monomial", perm=self.perm, scale=self.scale)
        else:
            out.update(form="dense", matrix=self.matrix)
        return out


def identity_operator(space: MeasureSpace) -> KoopmanOperator:
    n = space.size
    return KoopmanOperator(space, np.arange(n), np.ones(n, dtype=complex), label="identity")


def operator_from_unitary(W, weights=None, label: str = "") -> KoopmanOperator:
    """Wrap a unitary frame matrix as a Koopman operator on a point space."""
    W = np.asarray(W, dtype=complex)
    n = W.shape[0]
    if W.shape != (n, n):
        raise InvalidInput("unitary must be square")
    w = np.full(n, 1.0 / n) if weights is None else np.asarray(weights, dtype=float)
    space = point_space(w)
    sq = np.sqrt(space.weights)
    return KoopmanOperator(space, matrix=W * sq[None, :] / sq[:, None], label=label)


def build_fourier_rotation(d: int, K: int, angles) -> tuple[MeasureSpace, KoopmanOperator]:
    """Rotation x -> x + angles on T^d, diagonal on the modes |k_i| <= K."""
    if K < 1:
        raise InvalidInput(f"mode cutoff K must be at least 1, got {K}")
    angles = np.atleast_1d(np.asarray(angles, dtype=float))
    if angles.shape != (d,):
        raise InvalidInput(f"need {d} rotation angles, got {angles.shape}")
    space = fourier_space(d, K)
    # reduce each k*alpha mod 1 separately so integer multiples stay exact
    phase = np.mod(space.modes * angles[None, :], 1.0).sum(axis=1)
    scale = np.exp(2j * np.pi * phase)
    label = "rotation(" + ", ".join(repr(float(a)) for a in angles) + f"; K={K})"
    return space, KoopmanOperator(space, np.arange(space.size), scale, label=label)


def koopman_of(T: NonSingularMap) -> KoopmanOperator:
    w = T.rn_weight
    if np.any(~np.isfinite(w)) or np.any(w <= 0):
        raise NumericalFailure("Radon-Nikodym weight is zero or infinite: map is not non-singular")
    mass = float(np.sum(w * T.space.weights))
    if abs(mass - 1.0) > 1e-9:
        raise NumericalFailure(f"pushforward mass {mass!r} differs from 1: weights inconsistent")
    return KoopmanOperator(
        T.space, T.perm.copy(), np.sqrt(w).astype(complex), label="koopman"
    )


def product_koopman(U: KoopmanOperator, V: KoopmanOperator) -> KoopmanOperator:
    """Koopman operator of the product system, the Kronecker product U (x) V."""
    space = product_space(U.space, V.space)
    n2 = V.dim
    if U.monomial and V.monomial:
        check_size(U.dim * V.dim, "product operator")
        perm = (U.perm[:, None] * n2 + V.perm[None, :]).reshape(-1)
        scale = np.kron(U.scale, V.scale)
        return KoopmanOperator(space, perm, scale, label=f"{U.label} x {V.label}")
    check_size((U.dim * V.dim) ** 2, "dense product operator")
    return KoopmanOperator(
        space, matrix=np.kron(U.to_dense(), V.to_dense()), label=f"{U.label} x {V.label}"
    )
