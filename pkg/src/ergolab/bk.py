"""Invariant metric, global support and the non-ergodic product witness for BK systems."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInput, NumericalFailure
from .invariant import BKSystem
from .io import csv_text

GROUP_CAP = 4096


def group_closure(actions, n: int, cap: int = GROUP_CAP) -> list:
    """All permutations in the group generated by the given cloud permutations."""
    ident = tuple(range(n))
    gens = [tuple(int(x) for x in a) for a in actions]
    seen = {ident}
    out = [np.arange(n)]
    frontier = [ident]
    while frontier:
        nxt = []
        for p in frontier:
            for g in gens:
                q = tuple(g[i] for i in p)
                if q not in seen:
                    if len(seen) >= cap:
                        raise InvalidInput(f"sampled group exceeds {cap} elements")
                    seen.add(q)
                    out.append(np.array(q))
                    nxt.append(q)
        frontier = nxt
    return out


def _require_closed(sys: BKSystem):
    if not sys.closed:
        raise InvalidInput("cloud is not invariant under the sampled maps; refine the sample")


@dataclass
class InvariantMetric:
    table: np.ndarray
    lower: float
    upper: float
    invariance_residual: float
    group_order: int

    def to_dict(self) -> dict:
        return {
            "lower_ratio": self.lower,
            "upper_ratio": self.upper,
            "invariance_residual": self.invariance_residual,
            "group_order": self.group_order,
        }


def invariant_metric(sys: BKSystem, check_triangle: bool = True) -> InvariantMetric:
    """D(x, y) = sup over the sampled group of d(g x, g y)."""
    _require_closed(sys)
    if sys.diagnostics.get("equicontinuous") is False:
        raise InvalidInput("equicontinuity diagnostic failed; no invariant metric is built")
    d = sys.distance_table()
    group = group_closure(sys.actions, sys.size)
    D = d.copy()
    for p in group:
        D = np.maximum(D, d[np.ix_(p, p)])
    if check_triangle:
        # D[i,k] <= D[i,j] + D[j,k]
        worst = max(float(np.max(D - D[:, j : j + 1] - D[j : j + 1, :])) for j in range(sys.size))
        if worst > 1e-9:
            raise NumericalFailure(f"triangle inequality fails by {worst:.2e}")
    resid = 0.0
    for a in sys.actions:
        resid = max(resid, float(np.abs(D[np.ix_(a, a)] - D).max()))
    off = ~np.eye(sys.size, dtype=bool)
    ratio = D[off] / d[off]
    return InvariantMetric(D, float(ratio.min()), float(ratio.max()), resid, len(group))


def global_support_check(sys: BKSystem, measure, eps: float, metric: InvariantMetric | None = None) -> dict:
    """Smallest measure of a D-ball of radius eps centred at a cloud point."""
    if sys.diagnostics.get("minimal") is False:
        raise InvalidInput("minimality diagnostic failed")
    measure = np.asarray(measure, dtype=float)
    D = (metric or invariant_metric(sys)).table
    masses = (D < eps).astype(float) @ measure
    i = int(np.argmin(masses))
    return {"supported": bool(masses[i] > 0), "min_ball_mass": float(masses[i]), "argmin": i}


@dataclass
class WitnessSets:
    eps: float
    C: float
    D_eps: np.ndarray
    O_eps: np.ndarray
    measure: float
    verdict: str
    containment: bool
    invariance_defect: float
    iterations: int
    note: str = ""

    @property
    def witnessed(self) -> bool:
        return self.verdict == "non-ergodic product witnessed"

    def to_dict(self) -> dict:
        return {
            "eps": self.eps,
            "C": self.C,
            "D_eps_pairs": int(self.D_eps.sum()),
            "O_eps_pairs": int(self.O_eps.sum()),
            "measure": self.measure,
            "verdict": self.verdict,
            "containment": self.containment,
            "invariance_defect": self.invariance_defect,
            "iterations": self.iterations,
            "note": self.note,
        }

    def to_csv(self) -> str:
        n = self.D_eps.shape[0]
        rows = (
            (i, j, int(self.D_eps[i, j]), int(self.O_eps[i, j]))
            for i in range(n)
            for j in range(n)
        )
        return csv_text(["i", "j", "in_D_eps", "in_O_eps"], rows)


def _saturate(O, actions):
    it = 0
    while True:
        it += 1
        new = O.copy()
        for a in actions:
            inv = np.argsort(a)
            # (i, j) in O  =>  (a[i], a[j]) in O, i.e. O'[k, l] = O[inv k, inv l]
            new |= O[np.ix_(inv, inv)]
        if np.array_equal(new, O):
            return O, it
        O = new


def nonergodic_product_witness(sys: BKSystem, P=None, eps: float = 0.1, m=None) -> WitnessSets:
    """(m x P)(O_eps) for the saturation O_eps of D_eps = {d < eps / 2C}.

    P defaults to the normalised counting measure on the cloud (the Haar projection
    when the cloud is a group orbit); m defaults to the cloud's own weights.
    """
    if not eps > 0:
        raise InvalidInput("eps must be positive")
    _require_closed(sys)
    n = sys.size
    P = np.full(n, 1.0 / n) if P is None else np.asarray(P, dtype=float)
    m = sys.weights if m is None else np.asarray(m, dtype=float)
    for a in sys.actions:
        inv = np.argsort(a)
        if np.abs(P[inv] - P).max() > 1e-9:
            raise InvalidInput("P is not invariant under the sampled action")
    d = sys.distance_table()
    D_eps = d < eps / (2 * sys.C)
    O_eps, iters = _saturate(D_eps.copy(), sys.actions)
    prod = np.outer(m, P)
    measure = float(prod[O_eps].sum())
    containment = bool(np.all(O_eps[D_eps]) and np.all(d[O_eps] < eps))
    defect = 0.0
    for a in sys.actions:
        inv = np.argsort(a)
        moved = O_eps[np.ix_(inv, inv)]
        defect = max(defect, float(prod[moved ^ O_eps].sum()))
    note = ""
    if 1e-6 < measure < 1 - 1e-6:
        verdict = "non-ergodic product witnessed"
    else:
        verdict = "no witness"
        note = "O_eps has full measure: shrink eps" if measure >= 1 - 1e-6 else "O_eps is null"
    return WitnessSets(eps, sys.C, D_eps, O_eps, measure, verdict, containment, defect, iters, note)
