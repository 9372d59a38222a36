"""Representations of the real Heisenberg group and the rigid-but-weakly-mixing example.

M(a, b, c) acts on L2(R) by [pi_gamma(M(a,b,c)) f](t) = exp(i gamma (c + b t)) f(t + a).
The line is modelled by the uniform grid t = s*k on [-L, L]; translations must be
multiples of s, and mass pushed past the ends is dropped and reported.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import groups
from .errors import InvalidInput
from .gaussian import DEFAULT_TAU, HeisenbergScalarRep, UnitaryRep, gaussian_ergodicity_verdict
from .groups import FolnerWindow, GroupElement

SNAP_TOL = 1e-9


def heis_rep_scalar(alpha: float, beta: float, g: GroupElement) -> complex:
    """exp(i(alpha a + beta b)); the centre acts trivially."""
    return complex(HeisenbergScalarRep(alpha, beta).matrix(g)[0, 0])


def central_phase(gamma: float, turns: int, extra: float) -> float:
    """gamma*(2 pi turns + extra) reduced mod 2 pi without the cancellation error of the raw sum."""
    frac = math.fmod(gamma * turns, 1.0)
    return 2 * math.pi * frac + gamma * extra


class HeisenbergL2Rep(UnitaryRep):
    """pi_gamma on the grid model of L2(R)."""

    kind = groups.HEISENBERG
    finite = False

    def __init__(self, gamma: float = 1.0, L: float = 12.0, step: float = 0.01):
        if gamma == 0:
            raise InvalidInput("gamma must be non-zero")
        if not (L > 0 and step > 0):
            raise InvalidInput("grid half-width and step must be positive")
        self.gamma = float(gamma)
        self.L = float(L)
        self.step = float(step)
        m = int(round(L / step))
        if abs(m * step - L) > SNAP_TOL * max(1.0, L):
            raise InvalidInput(f"L={L} is not a multiple of the step {step}")
        self.t = np.arange(-m, m + 1) * step
        self.dim = len(self.t)

    def snap(self, a: float) -> int:
        k = round(a / self.step)
        if abs(k * self.step - a) > SNAP_TOL * max(1.0, abs(a)):
            raise InvalidInput(
                f"translation a={a} is off the grid; nearest valid value is {k * self.step!r}"
            )
        return int(k)

    def _shift(self, f, k: int) -> np.ndarray:
        out = np.zeros_like(f)
        n = len(f)
        if k >= 0:
            if k < n:
                out[: n - k] = f[k:]
        elif -k < n:
            out[-k:] = f[: n + k]
        return out

    def apply(self, g: GroupElement, f) -> np.ndarray:
        a, b, c = g.coords
        f = np.asarray(f, dtype=complex)
        if f.shape != self.t.shape:
            raise InvalidInput(f"grid function must have {self.dim} samples")
        return np.exp(1j * self.gamma * (c + b * self.t)) * self._shift(f, self.snap(a))

    def matrix(self, g):
        raise InvalidInput("the grid model is coefficient-evaluable only; no dense matrix")

    def inner(self, u, v) -> complex:
        return complex(np.vdot(v, u) * self.step)

    def norm(self, f) -> float:
        return math.sqrt(abs(self.inner(f, f)))

    def boundary_loss(self, g: GroupElement, f) -> float:
        """||f||^2 - ||pi(g) f||^2, the squared mass shifted off the grid."""
        return self.norm(f) ** 2 - self.norm(self.apply(g, f)) ** 2

    def _ab_coefficient(self, a: float, b: float, f1, f2) -> complex:
        shifted = self._shift(np.asarray(f1, dtype=complex), self.snap(a))
        return complex(np.vdot(f2, np.exp(1j * self.gamma * b * self.t) * shifted) * self.step)

    def coefficient(self, g: GroupElement, f1, f2) -> complex:
        a, b, c = g.coords
        return np.exp(1j * self.gamma * c) * self._ab_coefficient(a, b, f1, f2)

    def window_coefficients(self, window: FolnerWindow, f1, f2) -> np.ndarray:
        cache = {}
        out = np.empty(len(window), dtype=complex)
        for i, g in enumerate(window.sample):
            a, b, c = g.coords
            if (a, b) not in cache:
                cache[(a, b)] = self._ab_coefficient(a, b, f1, f2)
            out[i] = np.exp(1j * self.gamma * c) * cache[(a, b)]
        return out

    def test_vectors(self) -> list:
        return [gaussian_vector(self)]


def gaussian_vector(rep: HeisenbergL2Rep) -> np.ndarray:
    """pi^(-1/4) exp(-t^2/2) on the grid, unit norm in L2(R)."""
    return (np.pi**-0.25 * np.exp(-rep.t**2 / 2)).astype(complex)


def gaussian_coefficient_modulus(a, b, gamma: float = 1.0):
    """|<pi_gamma(M(a,b,c)) f, f>| for the unit Gaussian f."""
    return np.exp(-np.asarray(a) ** 2 / 4 - gamma**2 * np.asarray(b) ** 2 / 4)


def box_average_closed_form(N: float, gamma: float = 1.0) -> float:
    """(1/2N)^2 times the integral of exp(-a^2/4 - gamma^2 b^2/4) over [-N, N]^2."""
    fa = math.sqrt(math.pi) * math.erf(N / 2) / N
    fb = math.sqrt(math.pi) * math.erf(abs(gamma) * N / 2) / (abs(gamma) * N)
    return fa * fb


@dataclass
class RigiditySequence:
    gamma: float
    n: np.ndarray
    elements: list
    angles: np.ndarray
    r: np.ndarray
    norm: float

    def to_csv(self) -> str:
        from .io import csv_text

        return csv_text(["n", "r_n"], zip(self.n.tolist(), self.r.tolist()))


def rigidity_element(n: int) -> GroupElement:
    return groups.heisenberg(0.0, 0.0, 2 * math.pi * n + 1.0 / n)


def rigidity_profile(gamma: float, f, n_max: int, rep: HeisenbergL2Rep | None = None) -> RigiditySequence:
    """r_n = ||pi_gamma(g_n) f - f|| along g_n = M(0, 0, 2 pi n + 1/n).

    g_n is central, so pi(g_n) is the scalar exp(i theta_n) and
    r_n = 2 |sin(theta_n / 2)| ||f|| with theta_n reduced exactly.
    """
    if n_max < 1:
        raise InvalidInput("n_max must be at least 1")
    f = np.asarray(f, dtype=complex)
    nf = rep.norm(f) if rep is not None else float(np.linalg.norm(f))
    ns = np.arange(1, n_max + 1)
    angles = np.array([central_phase(gamma, int(n), 1.0 / n) for n in ns])
    r = 2 * np.abs(np.sin(angles / 2)) * nf
    return RigiditySequence(float(gamma), ns, [rigidity_element(int(n)) for n in ns], angles, r, nf)


@dataclass
class WeakMixingTrace:
    gamma: float
    radii: list
    means: list
    closed_form: list
    c_spread: float = 0.0

    def to_csv(self) -> str:
        from .io import csv_text

        return csv_text(["N", "mean"], zip(self.radii, self.means))


def weak_mixing_mean(rep: HeisenbergL2Rep, f1, f2, window: FolnerWindow) -> float:
    """Window average of |<pi_gamma(g) f1, f2>|."""
    if window.kind != groups.HEISENBERG:
        raise InvalidInput("weak_mixing_mean needs a Heisenberg window")
    return float(np.mean(np.abs(rep.window_coefficients(window, f1, f2))))


def weak_mixing_trace(rep: HeisenbergL2Rep, f1, f2, radii, step: float = 1.0) -> WeakMixingTrace:
    means, c_spread = [], 0.0
    for N in radii:
        w = groups.folner_box(groups.HEISENBERG, N, step)
        vals = np.abs(rep.window_coefficients(w, f1, f2))
        means.append(float(vals.mean()))
        # the modulus ignores c: compare each value with the one at the same (a, b), c = 0
        base = {}
        for g, v in zip(w.sample, vals):
            key = (g.coords[0], g.coords[1])
            base.setdefault(key, v)
            c_spread = max(c_spread, abs(v - base[key]))
    closed = [box_average_closed_form(N, rep.gamma) for N in radii]
    return WeakMixingTrace(rep.gamma, list(radii), means, closed, float(c_spread))


@dataclass
class HeisenbergVerdict:
    rigid: bool
    weakly_mixing: bool
    rigidity: RigiditySequence
    trace: WeakMixingTrace
    evidence: dict = field(default_factory=dict)

    @property
    def conclusion(self) -> str:
        if self.rigid and self.weakly_mixing:
            return "weakly mixing, not mildly mixing"
        if self.weakly_mixing:
            return "weakly mixing; no rigidity detected"
        return "not shown weakly mixing"


def _decreasing(x) -> bool:
    return all(b < a for a, b in zip(x[:-1], x[1:]))


def heisenberg_verdict(
    gamma: float = 1.0,
    L: float = 12.0,
    step: float = 0.01,
    n_max: int = 100,
    radii=(10, 20),
    tau: float = DEFAULT_TAU,
) -> HeisenbergVerdict:
    """Both limits for pi_gamma: r_n -> 0 along g_n and window means -> 0."""
    rep = HeisenbergL2Rep(gamma, L, step)
    f = gaussian_vector(rep)
    rig = rigidity_profile(gamma, f, n_max, rep)
    trace = weak_mixing_trace(rep, f, f, radii)
    tail = rig.r[len(rig.r) // 2 :]
    rigid = bool(_decreasing(tail) and tail[-1] < 2 * abs(gamma) / n_max * rig.norm + 1e-12)
    window = groups.folner_box(groups.HEISENBERG, radii[0])
    gv = gaussian_ergodicity_verdict(rep, window, tau, vectors=[f])
    wm = gv.verdict == "weakly-mixing" and _decreasing(trace.means)
    at_gn = abs(rep.coefficient(rig.elements[-1], f, f))
    evidence = {
        "gaussian_verdict": gv.to_dict(),
        "rate": "r_n ~ |gamma|/n * ||f||",
        "coefficient_modulus_at_g_n": at_gn,
        "norm_squared": rig.norm**2,
        "boundary_loss_M200": rep.boundary_loss(groups.heisenberg(2.0, 0.0, 0.0), f),
        "c_invariance_spread": trace.c_spread,
    }
    return HeisenbergVerdict(rigid, wm, rig, trace, evidence)


def truncation_irreducibility(n: int = 17, tol: float = 1e-3, seed: int = 0) -> dict:
    """Detector run on the finite clock-and-shift model of pi_gamma.

    The cyclic shift and the clock exp(2 pi i k / n) generate an irreducible
    representation of the finite Heisenberg group; the detector should find nothing.
    Truncation can fake near-invariant subspaces, hence the loose tolerance.
    """
    from .invariant import find_invariant_subspaces
    from .spaces import operator_from_unitary

    shift = np.roll(np.eye(n), 1, axis=0)
    clock = np.diag(np.exp(2j * np.pi * np.arange(n) / n))
    ops = [operator_from_unitary(shift, label="shift"), operator_from_unitary(clock, label="clock")]
    found = find_invariant_subspaces(ops, max_dim=min(12, n - 1), tol=tol, seed=seed)
    return {
        "size": n,
        "tol": tol,
        "subspaces_found": [r.dim for r in found],
        "irreducible": not found,
        "caveat": "truncated model; near-invariant subspaces may be artefacts",
    }
