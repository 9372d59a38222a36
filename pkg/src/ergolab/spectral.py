"""Correlation sequences, Fejer spectral estimates, eigenvalue sets and the multiplier test."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import linalg
from scipy.optimize import minimize_scalar

from .errors import InvalidInput, NumericalFailure, check_size
from .io import csv_text
from .spaces import FOURIER, POINT, PRODUCT, KoopmanOperator, product_koopman

ATOM_CELL_FACTOR = 10.0
ATOM_STABILITY = 0.2
FIXED_VECTOR_THRESHOLD = 1e-8


def correlation_sequence(U: KoopmanOperator, f, N: int) -> np.ndarray:
    """c(n) = <U^n f, f> for n = -N..N, stored at index n + N."""
    if N < 0:
        raise InvalidInput("window N must be non-negative")
    f = np.asarray(f, dtype=complex)
    pos = np.empty(N + 1, dtype=complex)
    g = f
    for n in range(N + 1):
        pos[n] = U.space.inner(g, f)
        g = U.apply(g)
    return np.concatenate([np.conj(pos[:0:-1]), pos])


@dataclass
class SpectralEstimate:
    window: int
    locations: np.ndarray
    density: np.ndarray
    atoms: list
    total_mass: float
    grid_mass: float

    def to_dict(self) -> dict:
        return {
            "window": self.window,
            "total_mass": self.total_mass,
            "grid_mass": self.grid_mass,
            "atoms": [{"location": loc, "mass": mass} for loc, mass in self.atoms],
            "grid_size": len(self.locations),
        }

    def to_csv(self) -> str:
        return csv_text(["location", "density"], zip(self.locations, self.density))


def _fejer_weights(N: int) -> np.ndarray:
    n = np.arange(-N, N + 1)
    return 1.0 - np.abs(n) / (N + 1)


def _fejer_at(c: np.ndarray, theta) -> np.ndarray:
    N = (len(c) - 1) // 2
    n = np.arange(-N, N + 1)
    theta = np.atleast_1d(theta)
    return np.real(np.exp(-2j * np.pi * np.outer(theta, n)) @ (_fejer_weights(N) * c))


def _cell_mass(c: np.ndarray, theta: float, Nw: int) -> float:
    """Fejer mass of the window-Nw estimate on the cell |x - theta| < 1/(2(Nw+1))."""
    N = (len(c) - 1) // 2
    cw = c[N - Nw : N + Nw + 1]
    n = np.arange(-Nw, Nw + 1)
    half = 1.0 / (2 * (Nw + 1))
    h = np.where(n == 0, 2 * half, np.sin(2 * np.pi * n * half) / (np.pi * np.where(n == 0, 1, n)))
    return float(np.real(np.sum(_fejer_weights(Nw) * cw * h * np.exp(-2j * np.pi * n * theta))))


def _point_mass(c: np.ndarray, theta: float) -> float:
    N = (len(c) - 1) // 2
    n = np.arange(-N, N + 1)
    return float(np.real(np.mean(c * np.exp(-2j * np.pi * n * theta))))


def spectral_estimate(c, grid_factor: int = 8) -> SpectralEstimate:
    """Fejer-smoothed spectral density of a positive-definite sequence on [0, 1).

    Convention: c(n) = integral of exp(2 pi i n x) d sigma(x), so c(n) = exp(2 pi i n a)
    has its atom at a. Atoms are declared where a cell of width 1/(N+1) carries Fejer
    mass above 10/N and that mass moves by less than 20% between windows N/2 and N.
    """
    c = np.asarray(c, dtype=complex)
    if c.ndim != 1 or len(c) % 2 == 0:
        raise InvalidInput("correlation sequence must have odd length 2N+1")
    N = (len(c) - 1) // 2
    if N >= 1 and not np.allclose(c[::-1], np.conj(c), atol=1e-9 * max(1.0, abs(c[N]))):
        raise InvalidInput("correlation sequence is not Hermitian: c(-n) != conj c(n)")
    total = float(np.real(c[N]))
    M = grid_factor * (N + 1)
    buf = np.zeros(M, dtype=complex)
    n = np.arange(-N, N + 1)
    np.add.at(buf, n % M, _fejer_weights(N) * c)
    density = np.real(np.fft.fft(buf))
    locations = np.arange(M) / M
    low = density.min()
    if low < -1e-3:
        raise InvalidInput(f"density reaches {low:.3g}: sequence is not positive-definite")
    atoms = []
    if N >= 2 and total > 0:
        atoms = _detect_atoms(c, density, locations, total)
    return SpectralEstimate(N, locations, density, atoms, total, float(density.mean()))


def _detect_atoms(c, density, locations, total):
    N = (len(c) - 1) // 2
    M = len(density)
    half = max(1, M // (2 * (N + 1)))
    kernel = np.ones(2 * half + 1)
    padded = np.concatenate([density[-half:], density, density[:half]])
    box = np.convolve(padded, kernel, mode="valid") / M
    threshold = ATOM_CELL_FACTOR / N
    is_peak = (density >= np.roll(density, 1)) & (density >= np.roll(density, -1))
    cand = np.flatnonzero(is_peak & (box > 0.5 * threshold))
    cand = cand[np.argsort(-density[cand])]
    accepted = []
    for j in cand:
        t0 = locations[j]
        if any(min(abs(t0 - a), 1 - abs(t0 - a)) < 1.0 / (N + 1) for a, _ in accepted):
            continue
        res = minimize_scalar(
            lambda t: -_fejer_at(c, t)[0],
            bounds=(t0 - 1.0 / M, t0 + 1.0 / M),
            method="bounded",
            options={"xatol": 1e-13},
        )
        theta = float(res.x) % 1.0
        cell = _cell_mass(c, theta, N)
        if cell <= threshold:
            continue
        coarse = _cell_mass(c, theta, N // 2)
        if abs(cell - coarse) >= ATOM_STABILITY * cell:
            continue
        mass = min(max(_point_mass(c, theta), 0.0), total)
        if mass > 0:
            accepted.append((theta, mass))
    return sorted(accepted)


@dataclass
class EigenData:
    """Unit-modulus eigenpairs. ``vectors`` are L2(m)-normalised eigenfunctions of U,
    ``frames`` the same functions in the unitary frame (the composition eigenfunctions)."""

    space: object
    values: np.ndarray
    vectors: np.ndarray
    frames: np.ndarray
    residuals: np.ndarray
    labels: list = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.values)

    def multiplicity(self, value: complex, tol: float = 1e-9) -> int:
        return int(np.sum(np.abs(self.values - value) < tol))

    def modulus_ratio(self, i: int) -> float:
        """max/min modulus of eigenfunction i viewed as a function on the space."""
        space = self.space
        v = self.frames[:, i]
        if space.kind == POINT:
            a = np.abs(v)
            return float(a.max() / a.min()) if a.min() > 0 else float("inf")
        if space.kind == FOURIER:
            if np.count_nonzero(np.abs(v) > 1e-12) == 1:
                return 1.0
            pts = np.linspace(0.0, 1.0, 4 * space.K + 3, endpoint=False)
            grid = np.array(np.meshgrid(*([pts] * space.d), indexing="ij")).reshape(space.d, -1).T
            vals = np.abs(np.exp(2j * np.pi * grid @ space.modes.T) @ v)
            return float(vals.max() / vals.min()) if vals.min() > 0 else float("inf")
        raise InvalidInput("modulus ratio is defined for single point or Fourier spaces")

    def to_dict(self) -> dict:
        return {
            "values": self.values,
            "residuals": self.residuals,
            "labels": [list(lab) for lab in self.labels],
        }


def _mode_labels(space):
    if space.kind == FOURIER:
        return [tuple(int(k) for k in row) for row in space.modes]
    if space.kind == PRODUCT and all(f.kind == FOURIER for f in space.factors):
        labs = [[]]
        for fac in space.factors:
            labs = [a + list(map(int, row)) for a in labs for row in fac.modes]
        return [tuple(x) for x in labs]
    return None


def _cycles(perm):
    seen = np.zeros(len(perm), dtype=bool)
    out = []
    for start in range(len(perm)):
        if seen[start]:
            continue
        cyc = [start]
        seen[start] = True
        x = perm[start]
        while x != start:
            cyc.append(x)
            seen[x] = True
            x = perm[x]
        out.append(np.array(cyc))
    return out


def eigenvalue_set(U: KoopmanOperator, tol: float = 1e-9) -> EigenData:
    """All unit-modulus eigenpairs of U with residual at most tol.

    Monomial operators are solved exactly cycle by cycle; dense ones through a
    complex Schur form (orthonormal eigenvectors for normal matrices).
    """
    n = U.dim
    sq = np.sqrt(U.space.weights)
    if U.monomial:
        phase = U.frame_phase()
        modes = _mode_labels(U.space) if U.diagonal else None
        values, frames, labels = [], [], []
        for ci, cyc in enumerate(_cycles(U.perm)):
            L = len(cyc)
            rho = np.prod(phase[cyc])
            for k in range(L):
                lam = abs(rho) ** (1.0 / L) * np.exp(1j * (np.angle(rho) + 2 * np.pi * k) / L)
                steps = lam / phase[cyc[:-1]]
                vals = np.concatenate([[1.0 + 0j], np.cumprod(steps)])
                v = np.zeros(n, dtype=complex)
                v[cyc] = vals / np.sqrt(np.sum(np.abs(vals) ** 2))
                values.append(lam)
                frames.append(v)
                labels.append(modes[cyc[0]] if modes is not None else (ci, k))
        values = np.array(values)
        frames = np.array(frames).T if frames else np.zeros((n, 0), dtype=complex)
        Wf = phase[:, None] * frames[U.perm, :]
    else:
        check_size(U.entries, "dense eigenproblem")
        W = U.frame_dense()
        T, Z = linalg.schur(W, output="complex")
        values = np.diag(T).copy()
        frames = Z
        labels = [(i,) for i in range(n)]
        Wf = W @ frames
    residuals = np.linalg.norm(Wf - frames * values[None, :], axis=0)
    unit = np.abs(np.abs(values) - 1.0) <= tol
    bad = unit & (residuals > tol)
    if np.any(bad):
        raise NumericalFailure(
            f"eigensolver residual {residuals[bad].max():.3e} exceeds tol {tol:.1e} "
            f"on {int(bad.sum())} unit-modulus eigenpairs"
        )
    keep = np.flatnonzero(unit)
    frames = frames[:, keep]
    return EigenData(
        U.space,
        values[keep],
        frames / sq[:, None],
        frames,
        residuals[keep],
        [labels[i] for i in keep],
    )


def _complement_basis(c: np.ndarray) -> np.ndarray:
    c = c / np.linalg.norm(c)
    return linalg.null_space(np.conj(c)[None, :])


def fixed_vector_oracle(P: KoopmanOperator, window: int = 1024, cap: int = 4_000_000) -> dict:
    """Direct search for fixed vectors of P orthogonal to the constants.

    Reports two residuals over unit vectors v orthogonal to the constant function:
    ``generator_residual`` = min ||W v - v|| for the generator alone, and
    ``window_residual`` = min RMS over |n| <= window of ||W^n v - v||, i.e. the
    deviation from invariance under the whole Folner window. The vector attaining
    the window minimum is declared fixed when ||W v - v|| < 1e-8.
    """
    n = P.dim
    c = P.space.constant_frame()
    support = np.flatnonzero(np.abs(c) > 0)
    if P.diagonal and len(support) == 1:
        lam = np.delete(P.frame_phase(), support[0])
        gen = np.abs(lam - 1.0)
        avg = np.ones(len(lam), dtype=complex)
        pw = np.ones(len(lam), dtype=complex)
        for _ in range(window):
            pw = pw * lam
            avg += pw + np.conj(pw)
        avg = np.real(avg) / (2 * window + 1)
        best = int(np.argmax(avg))
        idx = np.delete(np.arange(n), support[0])[best]
        vec = np.zeros(n, dtype=complex)
        vec[idx] = 1.0
        top = float(avg[best])
        generator = float(gen.min())
    else:
        check_size(n * n, "fixed-vector oracle", cap)
        Q = _complement_basis(c)
        A = np.eye(n, dtype=complex)
        if P.monomial:
            phase = P.frame_phase()
            W = np.zeros((n, n), dtype=complex)
            W[np.arange(n), P.perm] = phase
            perm_k, ph_k = np.arange(n), np.ones(n, dtype=complex)
            Sk = np.zeros((n, n), dtype=complex)
            for _ in range(window):
                ph_k = phase * ph_k[P.perm]
                perm_k = perm_k[P.perm]
                Sk[np.arange(n), perm_k] += ph_k
            A += Sk + Sk.conj().T
        else:
            W = P.frame_dense()
            T, Z = linalg.schur(W, output="complex")
            lam = np.diag(T)
            pw = np.ones(n, dtype=complex)
            acc = np.zeros(n, dtype=complex)
            for _ in range(window):
                pw = pw * lam
                acc += pw
            A += (Z * acc[None, :]) @ Z.conj().T
            A += ((Z * acc[None, :]) @ Z.conj().T).conj().T
        A /= 2 * window + 1
        B = Q.conj().T @ A @ Q
        B = (B + B.conj().T) / 2
        ev, evec = np.linalg.eigh(B)
        top = float(ev[-1])
        vec = Q @ evec[:, -1]
        G = Q.conj().T @ (2 * np.eye(n) - W - W.conj().T) @ Q
        generator = float(np.sqrt(max(np.linalg.eigvalsh((G + G.conj().T) / 2)[0], 0.0)))
    window_residual = float(np.sqrt(max(2.0 * (1.0 - top), 0.0)))
    vec = vec / np.linalg.norm(vec)
    if P.monomial:
        Wv = P.frame_phase() * vec[P.perm]
    else:
        Wv = P.frame_dense() @ vec
    vector_residual = float(np.linalg.norm(Wv - vec))
    return {
        "window": window,
        "generator_residual": generator,
        "window_residual": window_residual,
        "vector_residual": vector_residual,
        "fixed": vector_residual < FIXED_VECTOR_THRESHOLD,
        "vector": P.from_frame(vec),
    }


@dataclass
class MultiplierVerdict:
    verdict: str
    resolution: str
    witness: dict | None
    matches: int
    oracle: dict
    assumptions: dict

    @property
    def ergodic(self) -> bool:
        return self.verdict == "ergodic"

    @property
    def agrees_with_oracle(self) -> bool:
        return self.oracle["fixed"] == (not self.ergodic)

    def to_dict(self) -> dict:
        oracle = {k: v for k, v in self.oracle.items() if k != "vector"}
        out = {
            "verdict": self.verdict,
            "resolution": self.resolution,
            "matches": self.matches,
            "oracle": oracle,
            "oracle_agrees": self.agrees_with_oracle,
            "assumptions": self.assumptions,
            "witness": None,
        }
        if self.witness is not None:
            out["witness"] = {k: v for k, v in self.witness.items() if k != "function"}
        return out


def _resolution(space) -> str:
    if space.kind == FOURIER:
        return f"Fourier modes |k| <= {space.K} (d={space.d})"
    if space.kind == POINT:
        return f"{space.size} states"
    return " x ".join(_resolution(f) for f in space.factors)


def _unit_eigen_count(e: EigenData, tol: float) -> int:
    return e.multiplicity(1.0, tol)


def multiplier_test(T: KoopmanOperator, S: KoopmanOperator, tol: float = 1e-9, window: int = 1024) -> MultiplierVerdict:
    """Decide ergodicity of T x S by intersecting e(T) with the atoms of S's reduced spectrum.

    For the exact finite models the spectral type of S is atomic, carried by its
    eigenvalues; T x S has an invariant non-constant function exactly when
    lambda_T * lambda_S = 1 for some pair with lambda_S != 1.
    """
    one = S.space.constant()
    if S.space.norm(S.apply(one) - one) > tol:
        raise InvalidInput("S must be measure-preserving: U_S does not fix the constant function")
    eT = eigenvalue_set(T, tol)
    eS = eigenvalue_set(S, tol)
    if _unit_eigen_count(eS, tol) != 1:
        raise InvalidInput(
            f"S is not ergodic at its resolution: eigenvalue 1 has multiplicity {_unit_eigen_count(eS, tol)}"
        )
    if _unit_eigen_count(eT, tol) != 1:
        raise InvalidInput(
            f"T is not ergodic at its resolution: eigenvalue 1 has multiplicity {_unit_eigen_count(eT, tol)}"
        )
    reduced = np.flatnonzero(np.abs(eS.values - 1.0) >= tol)
    gap = np.abs(np.outer(eT.values, eS.values[reduced]) - 1.0)
    hits = np.argwhere(gap < tol)
    P = product_koopman(T, S)
    witness = None
    if len(hits):

        def key(h):
            i, j = h
            lt = eT.labels[i] + eS.labels[reduced[j]]
            real = abs(eT.values[i].imag) < tol
            return (not real, sum(abs(x) for x in lt), tuple(-x for x in lt))

        i, j = min((tuple(h) for h in hits), key=key)
        j = reduced[j]
        w = np.kron(eT.vectors[:, i], eS.vectors[:, j])
        residual = P.space.norm(P.apply(w) - w) / P.space.norm(w)
        witness = {
            "label_T": list(eT.labels[i]),
            "label_S": list(eS.labels[j]),
            "eigenvalue_T": eT.values[i],
            "eigenvalue_S": eS.values[j],
            "mode": list(eT.labels[i]) + list(eS.labels[j]),
            "residual": float(residual),
            "function": w,
        }
    oracle = fixed_vector_oracle(P, window)
    return MultiplierVerdict(
        verdict="not-ergodic" if witness is not None else "ergodic",
        resolution=_resolution(T.space) + " | " + _resolution(S.space),
        witness=witness,
        matches=int(len(hits)),
        oracle=oracle,
        assumptions={
            "T_properly_ergodic": "assumed, not checkable at finite scale",
            "truncation": "verdict holds for the truncated models",
        },
    )
