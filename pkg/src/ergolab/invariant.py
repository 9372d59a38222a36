"""Finite-dimensional invariant subspaces, the induced invariant measure, and the factor map.

Subspaces are searched in the unitary frame, where the generators act as unitary
matrices W_g. A generic self-adjoint element H of the commutant {X : X W_g = W_g X}
is diagonalised; its eigenspaces are common invariant subspaces and, for generic
H, minimal ones.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg

from .errors import InvalidInput, NumericalFailure, check_size
from .spaces import FOURIER, POINT, KoopmanOperator, MeasureSpace, operator_from_unitary

MAX_SEARCH_DIM = 12
BOUNDED_RATIO = 10.0


@dataclass
class InvariantSubspaceReport:
    space: MeasureSpace
    basis: np.ndarray  # columns f_j, orthonormal in L2(m)
    frames: np.ndarray  # same functions in the unitary frame
    matrices: list  # A_g with U_g f_j = sum_i A_g[j, i] f_i
    residuals: list
    seed: int
    bounded: bool = True
    notes: list = field(default_factory=list)

    @property
    def dim(self) -> int:
        return self.basis.shape[1]

    @property
    def residual(self) -> float:
        return max(self.residuals) if self.residuals else 0.0

    def phi(self) -> np.ndarray:
        return np.sum(np.abs(self.basis) ** 2, axis=1) / self.dim

    def orthogonality_defect(self) -> float:
        return max(
            (np.linalg.norm(A.conj().T @ A - np.eye(self.dim), 2) for A in self.matrices),
            default=0.0,
        )

    def to_dict(self) -> dict:
        return {
            "dim": self.dim,
            "seed": self.seed,
            "residuals": self.residuals,
            "matrices": [np.stack([A.real, A.imag], axis=-1) for A in self.matrices],
            "basis": np.stack([self.basis.real, self.basis.imag], axis=-1),
            "bounded": self.bounded,
            "notes": self.notes,
        }


def commutant_basis(mats, rtol: float = 1e-9) -> list:
    """Basis of {X : X M = M X for all M}, from the null space of the stacked system."""
    n = mats[0].shape[0]
    eye = np.eye(n)
    # column-major vec: vec(XM - MX) = (M^T kron I - I kron M) vec(X)
    rows = [np.kron(M.T, eye) - np.kron(eye, M) for M in mats]
    system = np.vstack(rows)
    _, s, vh = np.linalg.svd(system)
    scale = max(s[0], 1.0) if len(s) else 1.0
    s_full = np.concatenate([s, np.zeros(vh.shape[0] - len(s))])
    null = vh[s_full <= rtol * scale].conj()
    cond_gap = s_full[s_full > rtol * scale]
    if len(cond_gap) and cond_gap.min() < 1e3 * rtol * scale:
        raise NumericalFailure(
            f"commutant solve is ill-conditioned: smallest retained singular value {cond_gap.min():.2e}"
        )
    return [v.reshape(n, n, order="F") for v in null]


def _clusters(values, gap):
    order = np.argsort(values)
    groups = [[order[0]]]
    for a, b in zip(order[:-1], order[1:]):
        if values[b] - values[a] > gap:
            groups.append([b])
        else:
            groups[-1].append(b)
    return groups


def find_invariant_subspaces(
    ops,
    max_dim: int = MAX_SEARCH_DIM,
    tol: float = 1e-9,
    seed: int = 0,
    retries: int = 3,
) -> list:
    """Minimal common invariant subspaces of dimension <= max_dim.

    The constant function is split off first whenever every generator fixes it.
    Returns an empty list when nothing small is invariant; that is a verdict.
    """
    ops = list(ops)
    if not ops:
        raise InvalidInput("need at least one generator")
    space = ops[0].space
    if any(U.space is not space and U.dim != space.size for U in ops):
        raise InvalidInput("all generators must act on the same space")
    if max_dim > MAX_SEARCH_DIM:
        raise InvalidInput(f"max_dim is capped at {MAX_SEARCH_DIM}")
    n = space.size
    check_size(n * n, "invariant-subspace search")
    Ws = [U.frame_dense() for U in ops]
    for W in Ws:
        if np.linalg.norm(W.conj().T @ W - np.eye(n), 2) > 1e-8:
            raise InvalidInput("generator is not an isometry in the unitary frame")
    c = space.constant_frame()
    c = c / np.linalg.norm(c)
    notes = []
    if all(np.linalg.norm(W @ c - c) <= tol for W in Ws):
        Q = linalg.null_space(np.conj(c)[None, :])
        notes.append("constant direction split off")
    else:
        Q = np.eye(n, dtype=complex)
    if Q.shape[1] == 0:
        return []
    Rs = [Q.conj().T @ W @ Q for W in Ws]
    comm = commutant_basis(Rs)
    m = Q.shape[1]
    rng = np.random.default_rng(seed)
    for attempt in range(retries + 1):
        used_seed = seed + attempt
        rng = np.random.default_rng(used_seed)
        coef = rng.standard_normal(len(comm)) + 1j * rng.standard_normal(len(comm))
        H = sum(a * X for a, X in zip(coef, comm))
        H = H + H.conj().T
        ev, evec = np.linalg.eigh(H)
        spread = max(np.ptp(ev), 1.0)
        groups = _clusters(ev, 1e-7 * spread)
        gaps = np.diff(np.sort(ev))
        near = gaps[(gaps > 1e-7 * spread) & (gaps < 1e-4 * spread)]
        if len(near) == 0:
            break
    else:
        notes.append("eigenvalue collisions persisted after retries")
    out = []
    for grp in groups:
        d = len(grp)
        if d > max_dim:
            continue
        V = Q @ evec[:, grp]
        mats, res = [], []
        for W in Ws:
            M = V.conj().T @ W @ V
            res.append(float(np.linalg.norm(W @ V - V @ M, 2)))
            mats.append(M.T)
        if max(res) > tol:
            continue
        basis = V / np.sqrt(space.weights)[:, None]
        bounded = bool(np.all(np.abs(basis).max(axis=0) <= BOUNDED_RATIO))
        out.append(
            InvariantSubspaceReport(space, basis, V, mats, res, used_seed, bounded, list(notes))
        )
    out.sort(key=lambda r: (r.dim, -r.residual))
    return [r for r in out if r.bounded]


def build_invariant_measure(report: InvariantSubspaceReport) -> np.ndarray:
    """mu = phi * m with phi = (1/d) sum_j |f_j|^2."""
    mu = report.phi() * report.space.weights
    return mu


def invariance_defect(mu, perm, sets) -> float:
    """max over sets B of |mu(T B) - mu(B)| for a point map given as a permutation."""
    mu = np.asarray(mu)
    worst = 0.0
    for B in sets:
        B = np.asarray(B, dtype=int)
        worst = max(worst, abs(mu[perm[B]].sum() - mu[B].sum()))
    return float(worst)


def cylinder_sets(n_bits: int) -> list:
    """All cylinders of the n-digit odometer: every digit fixed to 0, 1 or left free."""
    states = np.arange(2**n_bits)
    digits = (states[:, None] >> np.arange(n_bits)[None, :]) & 1
    out = []
    for pattern in itertools.product((None, 0, 1), repeat=n_bits):
        mask = np.ones(len(states), dtype=bool)
        for k, v in enumerate(pattern):
            if v is not None:
                mask &= digits[:, k] == v
        out.append(np.flatnonzero(mask))
    return out


@dataclass
class BKSystem:
    """A linear equicontinuous action on a finite point cloud in R^n.

    ``actions[g][i]`` is the cloud index of S_g y_i, or -1 if S_g y_i left the cloud.
    """

    points: np.ndarray
    weights: np.ndarray
    matrices: list
    actions: list
    C: float
    diagnostics: dict = field(default_factory=dict)

    @property
    def size(self) -> int:
        return len(self.points)

    @property
    def closed(self) -> bool:
        return all(np.all(a >= 0) for a in self.actions)

    def distance_table(self) -> np.ndarray:
        diff = self.points[:, None, :] - self.points[None, :, :]
        return np.sqrt(np.sum(diff**2, axis=-1))

    def to_csv(self) -> str:
        from .io import csv_text

        header = [f"y{i}" for i in range(self.points.shape[1])] + ["weight"]
        return csv_text(header, (list(p) + [w] for p, w in zip(self.points, self.weights)))

    def to_dict(self) -> dict:
        return {
            "points": self.points,
            "weights": self.weights,
            "matrices": self.matrices,
            "C": self.C,
            "diagnostics": self.diagnostics,
        }


def realify(A: np.ndarray) -> np.ndarray:
    return np.block([[A.real, -A.imag], [A.imag, A.real]])


def _dedupe(points, weights, tol):
    reps, w, index = [], [], np.empty(len(points), dtype=int)
    for i, p in enumerate(points):
        for j, r in enumerate(reps):
            if np.linalg.norm(p - r) <= tol:
                index[i] = j
                w[j] += weights[i]
                break
        else:
            index[i] = len(reps)
            reps.append(p)
            w.append(weights[i])
    return np.array(reps), np.array(w), index


def _locate(points, targets, tol):
    out = np.full(len(targets), -1, dtype=int)
    for i, t in enumerate(targets):
        d = np.linalg.norm(points - t, axis=1)
        j = int(np.argmin(d))
        if d[j] <= tol:
            out[i] = j
    return out


def operator_bound(matrices) -> float:
    return 1.05 * max(np.linalg.norm(S, 2) for S in matrices)


def _diagnostics(sys: BKSystem, tol: float) -> dict:
    d = sys.distance_table()
    table = []
    for eps in (0.5, 0.1, 0.02):
        delta = eps / (2 * sys.C)
        close = d < delta
        worst = 0.0
        for S in sys.matrices:
            img = sys.points @ S.T
            dd = np.sqrt(np.sum((img[:, None, :] - img[None, :, :]) ** 2, axis=-1))
            if np.any(close):
                worst = max(worst, float(dd[close].max()))
        table.append({"epsilon": eps, "delta": delta, "max_image_distance": worst, "ok": worst < eps})
    minimal = None
    if sys.closed and sys.size:
        start = int(np.argmax(sys.weights))
        seen = {start}
        frontier = [start]
        while frontier:
            nxt = []
            for i in frontier:
                for a in sys.actions:
                    j = int(a[i])
                    if j not in seen:
                        seen.add(j)
                        nxt.append(j)
            frontier = nxt
        minimal = len(seen) == sys.size
    return {
        "equicontinuity": table,
        "equicontinuous": all(r["ok"] for r in table),
        "minimal": minimal,
    }


def bk_from_linear_action(matrices, start, max_points: int = 4096, tol: float = 1e-9) -> BKSystem:
    """Orbit cloud of ``start`` under the group generated by ``matrices``, uniform weights."""
    mats = [np.asarray(S, dtype=float) for S in matrices]
    pts = [np.asarray(start, dtype=float)]
    frontier = [0]
    while frontier:
        nxt = []
        for i in frontier:
            for S in mats:
                y = S @ pts[i]
                if all(np.linalg.norm(y - p) > tol for p in pts):
                    if len(pts) >= max_points:
                        raise InvalidInput(f"orbit exceeds {max_points} points: action not of finite order")
                    pts.append(y)
                    nxt.append(len(pts) - 1)
        frontier = nxt
    points = np.array(pts)
    if len(points) < 2:
        raise InvalidInput("degenerate cloud: orbit is a single point")
    weights = np.full(len(points), 1.0 / len(points))
    actions = [_locate(points, points @ S.T, tol) for S in mats]
    sys = BKSystem(points, weights, mats, actions, operator_bound(mats))
    sys.diagnostics = _diagnostics(sys, tol)
    sys.diagnostics["equivariance_residual"] = 0.0
    return sys


def extract_bk_factor(report: InvariantSubspaceReport, actions, points=None, tol: float = 1e-9) -> BKSystem:
    """Factor map F(x) = (Re f_1, ..., Re f_d, Im f_1, ..., Im f_d)(x) and the matrices S_g.

    The f_j are the composition (L-infinity) representatives of the subspace, i.e. its
    frame vectors scaled to unit RMS under counting measure. ``actions`` lists one entry
    per generator of the report: a state permutation on point spaces, a shift vector on
    Fourier spaces. Fourier factors are evaluated at ``points`` (default: a 256-point grid).
    """
    space = report.space
    if len(actions) != len(report.matrices):
        raise InvalidInput("need one action per generator matrix in the report")
    if space.kind == POINT:
        vals = report.frames * np.sqrt(space.size)
        weights = space.weights
        moved = [vals[np.asarray(a, dtype=int)] for a in actions]
    elif space.kind == FOURIER:
        if points is None:
            axis = np.arange(256) / 256
            points = np.array(list(itertools.product(axis, repeat=space.d)))
        points = np.asarray(points, dtype=float).reshape(-1, space.d)
        ev = lambda x: np.exp(2j * np.pi * x @ space.modes.T) @ report.frames
        vals = ev(points)
        weights = np.full(len(points), 1.0 / len(points))
        moved = [ev(points + np.asarray(a, dtype=float).reshape(1, -1)) for a in actions]
    else:
        raise InvalidInput("factor extraction needs a point or Fourier space")
    F = np.hstack([vals.real, vals.imag])
    if np.ptp(F, axis=0).max() <= tol:
        raise InvalidInput("trivial factor: the subspace functions are constant")
    mats = [realify(A) for A in report.matrices]
    resid = 0.0
    for S, mv in zip(mats, moved):
        Fm = np.hstack([mv.real, mv.imag])
        resid = max(resid, float(np.abs(Fm - F @ S.T).max()))
    if resid > max(tol, 10 * report.residual):
        raise NumericalFailure(f"factor equivariance residual {resid:.2e} exceeds tolerance")
    points_y, w, _ = _dedupe(F, weights, 1e-9)
    acts = [_locate(points_y, points_y @ S.T, 1e-7) for S in mats]
    sys = BKSystem(points_y, w / w.sum(), mats, acts, operator_bound(mats))
    sys.diagnostics = _diagnostics(sys, tol)
    sys.diagnostics["equivariance_residual"] = resid
    return sys


def _haar_unitary(n: int, rng) -> np.ndarray:
    z = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))[None, :]


def block_system(block_dims, seed: int = 0, n_gens: int = 2):
    """Generators Q (B_1 + ... + B_k) Q^H with independent Haar blocks and a Haar Q.

    Two or more generic generators make every block irreducible and the blocks pairwise
    inequivalent, so the minimal invariant subspaces are exactly the blocks.
    Returns (operators, Q).
    """
    dims = [int(d) for d in block_dims]
    if not dims or min(dims) < 1:
        raise InvalidInput("block dimensions must be positive")
    n = sum(dims)
    rng = np.random.default_rng(seed)
    Q = _haar_unitary(n, rng)
    ops = []
    for g in range(n_gens):
        B = linalg.block_diag(*[_haar_unitary(d, rng) for d in dims])
        ops.append(operator_from_unitary(Q @ B @ Q.conj().T, label=f"block-gen-{g}"))
    return ops, Q


def weakly_mixing_surrogate(n: int = 16, seed: int = 0, n_gens: int = 2):
    """Constants plus one irreducible (n-1)-dimensional block on the mean-zero space.

    A single unitary always has one-dimensional eigenspaces, so the surrogate uses
    ``n_gens`` generic generators sharing the constant direction.
    """
    if n < 2:
        raise InvalidInput("surrogate needs at least two states")
    rng = np.random.default_rng(seed)
    c = np.full(n, 1 / np.sqrt(n), dtype=complex)
    Q = np.column_stack([c, linalg.null_space(c[None, :].conj())])
    ops = []
    for g in range(n_gens):
        B = linalg.block_diag(np.eye(1), _haar_unitary(n - 1, rng))
        ops.append(operator_from_unitary(Q @ B @ Q.conj().T, label=f"surrogate-gen-{g}"))
    return ops
