"""Batch runner: ``ergolab <kind> --config <path> [--out <path>] [--seed <int>]``.

Exit codes: 0 ran (the verdict may be negative), 2 invalid input, 3 numerical
failure, 4 size cap exceeded.
"""

from __future__ import annotations

import argparse
import copy
import datetime as _dt
import json
import sys
import time
from pathlib import Path

import jsonschema
import numpy as np

from . import __version__, bk, gaussian, groups, heisenberg, invariant, spaces, spectral
from .errors import ErgolabError, InvalidInput
from .io import csv_text, dumps_canonical, to_plain, write_atomic

KINDS = ("multiplier", "odometer", "bk", "subspace", "gaussian", "heisenberg")

_pos = {"type": "number", "exclusiveMinimum": 0}
_posint = {"type": "integer", "minimum": 1}
_prob = {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1}
_angles = {"oneOf": [{"type": "number"}, {"type": "array", "items": {"type": "number"}, "minItems": 1}]}

_rotation = {
    "type": "object",
    "properties": {"type": {"const": "rotation"}, "alpha": _angles, "K": _posint},
    "required": ["type", "alpha", "K"],
    "additionalProperties": False,
}
_odometer = {
    "type": "object",
    "properties": {"type": {"const": "odometer"}, "n": _posint, "p": _prob},
    "required": ["type", "n", "p"],
    "additionalProperties": False,
}
_blocks = {
    "type": "object",
    "properties": {
        "type": {"const": "blocks"},
        "dims": {"type": "array", "items": _posint, "minItems": 1},
        "generators": _posint,
    },
    "required": ["type", "dims"],
    "additionalProperties": False,
}
_surrogate = {
    "type": "object",
    "properties": {"type": {"const": "surrogate"}, "n": {"type": "integer", "minimum": 2}, "generators": _posint},
    "required": ["type"],
    "additionalProperties": False,
}
_circle_cloud = {
    "type": "object",
    "properties": {"type": {"const": "circle_cloud"}, "points": {"type": "integer", "minimum": 2}},
    "required": ["type", "points"],
    "additionalProperties": False,
}
_linear_cloud = {
    "type": "object",
    "properties": {
        "type": {"const": "linear_cloud"},
        "matrices": {"type": "array", "minItems": 1, "items": {"type": "array"}},
        "start": {"type": "array", "items": {"type": "number"}, "minItems": 1},
    },
    "required": ["type", "matrices", "start"],
    "additionalProperties": False,
}

_common = {"kind": {"enum": list(KINDS)}, "seed": {"type": "integer", "minimum": 0}}


def _schema(props: dict, required: list) -> dict:
    return {
        "type": "object",
        "properties": {**_common, **props},
        "required": required,
        "additionalProperties": False,
    }


SCHEMAS = {
    "multiplier": _schema(
        {
            "T": {"oneOf": [_rotation, _odometer]},
            "S": {"oneOf": [_rotation, _odometer]},
            "tol": _pos,
            "window": _posint,
        },
        ["T", "S"],
    ),
    "odometer": _schema(
        {"n": _posint, "p": _prob, "N": _posint, "tol": _pos},
        ["n", "p"],
    ),
    "bk": _schema(
        {
            "system": {"oneOf": [_circle_cloud, _linear_cloud, _odometer]},
            "eps": _pos,
            "tol": _pos,
        },
        ["system", "eps"],
    ),
    "subspace": _schema(
        {
            "system": {"oneOf": [_rotation, _odometer, _blocks, _surrogate]},
            "max_dim": {"type": "integer", "minimum": 1, "maximum": invariant.MAX_SEARCH_DIM},
            "tol": _pos,
        },
        ["system"],
    ),
    "gaussian": _schema(
        {
            "rep": {
                "oneOf": [
                    {
                        "type": "object",
                        "properties": {"type": {"const": "character"}, "alpha": _angles},
                        "required": ["type", "alpha"],
                        "additionalProperties": False,
                    },
                    {
                        "type": "object",
                        "properties": {"type": {"const": "random_unitary"}, "dim": _posint},
                        "required": ["type", "dim"],
                        "additionalProperties": False,
                    },
                    {
                        "type": "object",
                        "properties": {
                            "type": {"const": "heisenberg"},
                            "gamma": {"type": "number", "not": {"const": 0}},
                            "L": _pos,
                            "step": _pos,
                        },
                        "required": ["type"],
                        "additionalProperties": False,
                    },
                ]
            },
            "elements": {"type": "integer", "minimum": 1},
            "n_samples": {"type": "integer", "minimum": 0},
            "fock_level": {"type": "integer", "minimum": 0},
            "window": _posint,
            "tau": _pos,
        },
        ["rep"],
    ),
    "heisenberg": _schema(
        {
            "gamma": {"type": "number", "not": {"const": 0}},
            "L": _pos,
            "step": _pos,
            "n_max": _posint,
            "radii": {"type": "array", "items": _posint, "minItems": 2},
            "tau": _pos,
        },
        [],
    ),
}


def validate(config: dict, kind: str) -> None:
    if kind not in SCHEMAS:
        raise InvalidInput(f"unknown experiment kind {kind!r}; choose from {', '.join(KINDS)}")
    if config.get("kind", kind) != kind:
        raise InvalidInput(f"config is for kind {config['kind']!r}, not {kind!r}")
    try:
        jsonschema.validate(config, SCHEMAS[kind])
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise InvalidInput(f"config error at {where}: {exc.message}") from None


# ---------------------------------------------------------------- builders


def _angle_list(alpha) -> list:
    return [float(a) for a in np.atleast_1d(alpha)]


def _koopman(sysd: dict) -> spaces.KoopmanOperator:
    if sysd["type"] == "rotation":
        angles = _angle_list(sysd["alpha"])
        return spaces.build_fourier_rotation(len(angles), sysd["K"], angles)[1]
    _, T = spaces.build_odometer(sysd["n"], sysd["p"])
    return spaces.koopman_of(T)


def _series(x, y) -> list:
    return [[float(a), float(b)] for a, b in zip(x, y)]


# ---------------------------------------------------------------- runners


def run_multiplier(cfg: dict, seed: int) -> dict:
    T, S = _koopman(cfg["T"]), _koopman(cfg["S"])
    v = spectral.multiplier_test(T, S, cfg.get("tol", 1e-9), cfg.get("window", 1024))
    return {"result": v.to_dict(), "series": {}}


def run_odometer(cfg: dict, seed: int) -> dict:
    tol = cfg.get("tol", 1e-9)
    _, T = spaces.build_odometer(cfg["n"], cfg["p"])
    U = spaces.koopman_of(T)
    eig = spectral.eigenvalue_set(U, tol)
    # correlations of the indicator of the first digit being 0
    f = (spaces.odometer_states(cfg["n"])[:, 0] == 0).astype(complex)
    c = spectral.correlation_sequence(U, f, cfg.get("N", 256))
    est = spectral.spectral_estimate(c)
    angles = np.mod(np.angle(eig.values) / (2 * np.pi), 1.0)
    order = np.argsort(angles)
    return {
        "result": {
            "measure_preserving": T.measure_preserving,
            "eigenvalues": eig.to_dict(),
            "spectral_estimate": est.to_dict(),
        },
        "series": {
            "eigenvalue_angles": _series(angles[order], np.abs(eig.values[order])),
            "spectral_density": _series(est.locations, est.density),
        },
    }


def run_bk(cfg: dict, seed: int) -> dict:
    sysd = cfg["system"]
    tol = cfg.get("tol", 1e-9)
    if sysd["type"] == "circle_cloud":
        th = 2 * np.pi / sysd["points"]
        R = np.array([[np.cos(th), -np.sin(th)], [np.sin(th), np.cos(th)]])
        sysm = invariant.bk_from_linear_action([R], (1.0, 0.0), tol=tol)
    elif sysd["type"] == "linear_cloud":
        try:
            mats = [np.array(m, dtype=float) for m in sysd["matrices"]]
        except ValueError as exc:
            raise InvalidInput(f"matrices must be numeric and rectangular: {exc}") from None
        start = np.array(sysd["start"], dtype=float)
        if any(M.shape != (len(start), len(start)) for M in mats):
            raise InvalidInput("each matrix must be square of the start vector's dimension")
        sysm = invariant.bk_from_linear_action(mats, start, tol=tol)
    else:
        _, T = spaces.build_odometer(sysd["n"], sysd["p"])
        U = spaces.koopman_of(T)
        found = invariant.find_invariant_subspaces([U], tol=tol, seed=seed)
        if not found:
            raise InvalidInput("no finite-dimensional invariant subspace, so no factor to build")
        sysm = invariant.extract_bk_factor(found[0], [T.perm], tol=tol)
    metric = bk.invariant_metric(sysm)
    support = bk.global_support_check(sysm, sysm.weights, cfg["eps"], metric)
    eps_values = sorted({cfg["eps"] * k for k in (0.25, 0.5, 1.0, 2.0, 4.0)})
    sweep = [bk.nonergodic_product_witness(sysm, eps=e).measure for e in eps_values]
    witness = bk.nonergodic_product_witness(sysm, eps=cfg["eps"])
    return {
        "result": {
            "cloud_size": sysm.size,
            "C": sysm.C,
            "diagnostics": sysm.diagnostics,
            "metric": metric.to_dict(),
            "support": support,
            "witness": witness.to_dict(),
        },
        "series": {"witness_measure_vs_eps": _series(eps_values, sweep)},
    }


def run_subspace(cfg: dict, seed: int) -> dict:
    sysd = cfg["system"]
    tol = cfg.get("tol", 1e-9)
    max_dim = cfg.get("max_dim", invariant.MAX_SEARCH_DIM)
    perm = None
    if sysd["type"] == "blocks":
        ops, _ = invariant.block_system(sysd["dims"], seed, sysd.get("generators", 2))
    elif sysd["type"] == "surrogate":
        ops = invariant.weakly_mixing_surrogate(sysd.get("n", 16), seed, sysd.get("generators", 2))
    elif sysd["type"] == "odometer":
        _, T = spaces.build_odometer(sysd["n"], sysd["p"])
        ops, perm = [spaces.koopman_of(T)], T.perm
    else:
        ops = [_koopman(sysd)]
    found = invariant.find_invariant_subspaces(ops, max_dim, tol, seed)
    out = []
    for rep in found:
        entry = {
            "dim": rep.dim,
            "residual": rep.residual,
            "orthogonality_defect": rep.orthogonality_defect(),
            "eigenvalues": [np.linalg.eigvals(A) for A in rep.matrices],
        }
        if perm is not None:
            mu = invariant.build_invariant_measure(rep)
            entry["measure"] = mu
            entry["measure_invariance_defect"] = invariant.invariance_defect(
                mu, perm, invariant.cylinder_sets(sysd["n"])
            )
        out.append(entry)
    dims = sorted(r.dim for r in found)
    return {
        "result": {"count": len(found), "dims": dims, "subspaces": out, "seed": seed},
        "series": {"subspace_dims": _series(range(len(dims)), dims)},
    }


def run_gaussian(cfg: dict, seed: int) -> dict:
    rd = cfg["rep"]
    tau = cfg.get("tau", gaussian.DEFAULT_TAU)
    N = cfg.get("window", 10)
    k = cfg.get("elements", 3)
    note = "the Gaussian action is represented by its chaos data (covariance and Fock operators)"
    result = {"representation_note": note}
    series = {}
    if rd["type"] == "heisenberg":
        rep = heisenberg.HeisenbergL2Rep(rd.get("gamma", 1.0), rd.get("L", 12.0), rd.get("step", 0.01))
        v = heisenberg.gaussian_vector(rep)
        elements = [groups.heisenberg(float(j), 0.0, 0.0) for j in range(k)]
        window = groups.folner_box(groups.HEISENBERG, N)
    else:
        if rd["type"] == "character":
            alpha = _angle_list(rd["alpha"])
            rep = gaussian.CharacterRep(alpha)
            dim = len(alpha)
        else:
            rep = gaussian.MatrixPowerRep(gaussian.random_unitary(rd["dim"], np.random.default_rng(seed)))
            dim = 1
        v = np.ones(rep.dim, dtype=complex) / np.sqrt(rep.dim)
        elements = [groups.lattice(*([j] * dim)) for j in range(k)]
        window = groups.folner_box(groups.INT_LATTICE, N, dim=dim)
    C = gaussian.gaussian_covariance(rep, v, elements)
    samples = gaussian.sample_gaussian_process(C, cfg.get("n_samples", 1000), seed)
    result["covariance"] = C
    result["min_covariance_eigenvalue"] = float(np.linalg.eigvalsh(C)[0])
    if len(samples):
        emp = samples.T @ samples / len(samples)
        result["empirical_covariance_max_error"] = float(np.abs(emp - C).max())
    if rep.finite and "fock_level" in cfg:
        n = cfg["fock_level"]
        Sg = gaussian.sym_tensor_power(rep.matrix(elements[-1]), n)
        result["fock"] = {
            "level": n,
            "dimension": Sg.shape[0],
            "unitarity_defect": float(np.linalg.norm(Sg.conj().T @ Sg - np.eye(len(Sg)), 2)),
        }
    verdict = gaussian.gaussian_ergodicity_verdict(rep, window, tau)
    result["verdict"] = verdict.to_dict()
    result["gaussian_system_ergodic"] = verdict.verdict == "weakly-mixing"
    if verdict.route == "coefficient":
        ev = verdict.evidence
        series["weak_mixing"] = _series(ev["radii"], ev["means"])
    return {"result": result, "series": series}


def run_heisenberg(cfg: dict, seed: int) -> dict:
    v = heisenberg.heisenberg_verdict(
        cfg.get("gamma", 1.0),
        cfg.get("L", 12.0),
        cfg.get("step", 0.01),
        cfg.get("n_max", 100),
        tuple(cfg.get("radii", (10, 20))),
        cfg.get("tau", gaussian.DEFAULT_TAU),
    )
    rig = v.rigidity
    return {
        "result": {
            "conclusion": v.conclusion,
            "rigid": v.rigid,
            "weakly_mixing": v.weakly_mixing,
            "norm": rig.norm,
            "r_last": float(rig.r[-1]),
            "window_means": v.trace.means,
            "closed_form_means": v.trace.closed_form,
            "evidence": v.evidence,
            "truncation_check": heisenberg.truncation_irreducibility(seed=seed),
        },
        "series": {
            "rigidity": _series(rig.n, rig.r),
            "weak_mixing": _series(v.trace.radii, v.trace.means),
        },
    }


RUNNERS = {
    "multiplier": run_multiplier,
    "odometer": run_odometer,
    "bk": run_bk,
    "subspace": run_subspace,
    "gaussian": run_gaussian,
    "heisenberg": run_heisenberg,
}


def run(config: dict, kind: str | None = None, seed: int | None = None) -> dict:
    """Validate, run and assemble the report; deterministic apart from ``timestamp``."""
    config = copy.deepcopy(config)
    kind = kind or config.get("kind")
    if kind is None:
        raise InvalidInput("config has no 'kind' and none was given")
    validate(config, kind)
    seed = int(config.get("seed", 0) if seed is None else seed)
    if seed < 0:
        raise InvalidInput("seed must be non-negative")
    config["kind"] = kind
    config["seed"] = seed
    t0 = time.perf_counter()
    body = RUNNERS[kind](config, seed)
    runtime = time.perf_counter() - t0
    return to_plain(
        {
            "kind": kind,
            "version": __version__,
            "seed": seed,
            "config": config,
            "result": body["result"],
            "series": body["series"],
            "timestamp": {
                "utc": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
                "runtime_s": runtime,
            },
        }
    )


def emit_plot_data(report: dict, series: str) -> str:
    available = sorted(report.get("series", {}))
    if series not in available:
        raise InvalidInput(f"unknown series {series!r}; available: {', '.join(available) or 'none'}")
    return csv_text(["x", "y"], (tuple(row) for row in report["series"][series]))


def strip_timestamp(report: dict) -> dict:
    return {k: v for k, v in report.items() if k != "timestamp"}


def _load_json(path: str) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise InvalidInput(f"cannot read {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise InvalidInput(f"{path} is not valid JSON: {exc}") from None
    if not isinstance(data, dict):
        raise InvalidInput(f"{path} must hold a JSON object")
    return data


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ergolab", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"ergolab {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    for kind in KINDS:
        s = sub.add_parser(kind, help=f"run a {kind} experiment")
        s.add_argument("--config", required=True)
        s.add_argument("--out", help="report path (default: stdout); series CSVs go next to it")
        s.add_argument("--seed", type=int)
    s = sub.add_parser("plot-data", help="extract one series of a report as CSV")
    s.add_argument("--report", required=True)
    s.add_argument("--series", required=True)
    s.add_argument("--out")
    return p


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        if args.command == "plot-data":
            text = emit_plot_data(_load_json(args.report), args.series)
            if args.out:
                write_atomic(args.out, text)
            else:
                sys.stdout.write(text)
            return 0
        report = run(_load_json(args.config), args.command, args.seed)
        text = dumps_canonical(report)
        if args.out:
            out = Path(args.out)
            write_atomic(out, text)
            for name in sorted(report["series"]):
                write_atomic(out.with_name(f"{out.stem}.{name}.csv"), emit_plot_data(report, name))
        else:
            sys.stdout.write(text)
        return 0
    except ErgolabError as exc:
        print(f"ergolab: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
