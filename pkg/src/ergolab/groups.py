"""Group elements for Z^d, T^d, R^d and H3(R), characters, and Folner windows.

Heisenberg elements use the matrix coordinates of

    M(a, b, c) = [[1, a, c], [0, 1, b], [0, 0, 1]]

so that M(a,b,c) M(a',b',c') = M(a+a', b+b', c+c'+a b').
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidInput

INT_LATTICE = "Z"
TORUS = "T"
REAL = "R"
HEISENBERG = "H3"
KINDS = (INT_LATTICE, TORUS, REAL, HEISENBERG)


def _wrap(x: float) -> float:
    y = x - math.floor(x)
    # x just below an integer can round up to exactly 1.0
    return 0.0 if y >= 1.0 else y + 0.0  # + 0.0 turns -0.0 into 0.0


@dataclass(frozen=True)
class GroupElement:
    kind: str
    coords: tuple

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvalidInput(f"unknown group kind {self.kind!r}; supported: {KINDS}")
        coords = tuple(self.coords)
        if self.kind == INT_LATTICE:
            if any(int(c) != c for c in coords):
                raise InvalidInput(f"lattice coordinates must be integers, got {coords}")
            coords = tuple(int(c) for c in coords)
        elif self.kind == TORUS:
            coords = tuple(_wrap(float(c)) for c in coords)
        else:
            coords = tuple(float(c) for c in coords)
        if self.kind == HEISENBERG and len(coords) != 3:
            raise InvalidInput("Heisenberg elements carry exactly three coordinates (a, b, c)")
        object.__setattr__(self, "coords", coords)

    @property
    def dim(self) -> int:
        return len(self.coords)

    def __mul__(self, other: "GroupElement") -> "GroupElement":
        return compose(self, other)

    def as_matrix(self) -> np.ndarray:
        if self.kind != HEISENBERG:
            raise InvalidInput("only Heisenberg elements have a 3x3 matrix form")
        a, b, c = self.coords
        return np.array([[1.0, a, c], [0.0, 1.0, b], [0.0, 0.0, 1.0]])


def heisenberg(a: float, b: float, c: float) -> GroupElement:
    return GroupElement(HEISENBERG, (a, b, c))


def lattice(*n: int) -> GroupElement:
    return GroupElement(INT_LATTICE, n)


def torus(*x: float) -> GroupElement:
    return GroupElement(TORUS, x)


def real(*x: float) -> GroupElement:
    return GroupElement(REAL, x)


def identity(kind: str, dim: int = 1) -> GroupElement:
    if kind == HEISENBERG:
        return GroupElement(kind, (0.0, 0.0, 0.0))
    return GroupElement(kind, (0,) * dim)


def compose(g: GroupElement, h: GroupElement) -> GroupElement:
    if g.kind != h.kind or g.dim != h.dim:
        raise InvalidInput(f"cannot compose {g.kind}^{g.dim} with {h.kind}^{h.dim}")
    if g.kind == HEISENBERG:
        a, b, c = g.coords
        a2, b2, c2 = h.coords
        return GroupElement(HEISENBERG, (a + a2, b + b2, c + c2 + a * b2))
    return GroupElement(g.kind, tuple(x + y for x, y in zip(g.coords, h.coords)))


def inverse(g: GroupElement) -> GroupElement:
    if g.kind == HEISENBERG:
        a, b, c = g.coords
        return GroupElement(HEISENBERG, (-a, -b, a * b - c))
    return GroupElement(g.kind, tuple(-x for x in g.coords))


def power(g: GroupElement, n: int) -> GroupElement:
    out = identity(g.kind, g.dim)
    base = g if n >= 0 else inverse(g)
    for _ in range(abs(n)):
        out = compose(out, base)
    return out


@dataclass(frozen=True)
class Character:
    """chi(g) = exp(2 pi i <frequency, g>) on Z^d, T^d or R^d."""

    frequency: tuple
    kind: str = TORUS

    def __post_init__(self):
        if self.kind == HEISENBERG:
            raise InvalidInput("characters are provided for abelian kinds only")
        if self.kind not in KINDS:
            raise InvalidInput(f"unknown group kind {self.kind!r}")
        freq = tuple(self.frequency)
        if self.kind == TORUS:
            if any(int(f) != f for f in freq):
                raise InvalidInput("torus characters need integer frequencies")
            freq = tuple(int(f) for f in freq)
        else:
            freq = tuple(float(f) for f in freq)
        object.__setattr__(self, "frequency", freq)

    def __call__(self, g: GroupElement) -> complex:
        return character_eval(self, g)


def character_eval(chi: Character, g: GroupElement) -> complex:
    if g.kind != chi.kind or g.dim != len(chi.frequency):
        raise InvalidInput(
            f"character on {chi.kind}^{len(chi.frequency)} evaluated at {g.kind}^{g.dim}"
        )
    if chi.kind == TORUS:
        # integer frequency: reduce each product mod 1 before exponentiating
        phase = sum(_wrap(k * x) for k, x in zip(chi.frequency, g.coords))
    else:
        phase = sum(k * x for k, x in zip(chi.frequency, g.coords))
    return complex(np.exp(2j * np.pi * phase))


@dataclass(frozen=True)
class FolnerWindow:
    kind: str
    radius: int
    step: float
    dim: int
    sample: tuple

    def __len__(self) -> int:
        return len(self.sample)

    def __iter__(self):
        return iter(self.sample)

    def doubled(self) -> "FolnerWindow":
        return folner_box(self.kind, 2 * self.radius, self.step, self.dim)


def _grid(N: float, step: float) -> list:
    m = int(math.floor(N / step + 1e-9))
    return [k * step for k in range(-m, m + 1)]


def folner_box(kind: str, N: int, step: float = 1.0, dim: int | None = None) -> FolnerWindow:
    """Symmetric box sample of radius N.

    Lattice: integer points of [-N, N]^d. Reals: the grid step*Z inside [-N, N]^d.
    Torus: the points k*step mod 1 for |k| <= N. Heisenberg: a, b on the grid of
    [-N, N] and the centred coordinate c - ab/2 on the same grid, which makes the
    sample closed under inversion.
    """
    if kind not in KINDS:
        raise InvalidInput(f"no Folner windows for {kind!r}; supported amenable kinds: {KINDS}")
    if int(N) != N or N < 1:
        raise InvalidInput(f"window radius must be a positive integer, got {N}")
    if not step > 0:
        raise InvalidInput("window step must be positive")
    N = int(N)
    if kind == HEISENBERG:
        axis = _grid(N, step)
        sample = tuple(
            GroupElement(HEISENBERG, (a, b, z + a * b / 2.0))
            for a, b, z in itertools.product(axis, axis, axis)
        )
        return FolnerWindow(kind, N, float(step), 3, sample)
    dim = 1 if dim is None else dim
    if kind == INT_LATTICE:
        axis = list(range(-N, N + 1))
    elif kind == REAL:
        axis = _grid(N, step)
    else:
        axis = sorted({_wrap(k * step) for k in range(-N, N + 1)})
    sample = tuple(GroupElement(kind, pt) for pt in itertools.product(axis, repeat=dim))
    return FolnerWindow(kind, N, float(step), dim, sample)


def folner_mean(func, window: FolnerWindow) -> complex:
    """Average of func over the window, the finite stand-in for the invariant mean."""
    vals = [func(g) for g in window.sample]
    return sum(vals) / len(vals)


def coordinate_distance(g: GroupElement, h: GroupElement) -> float:
    """Euclidean distance of coordinates (H3 has no preferred metric; this is a convention)."""
    if g.kind != h.kind:
        raise InvalidInput("distance between different group kinds")
    if g.kind == TORUS:
        return math.sqrt(sum(min(abs(x - y), 1 - abs(x - y)) ** 2 for x, y in zip(g.coords, h.coords)))
    return math.dist(g.coords, h.coords)
