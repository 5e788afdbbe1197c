"""Problem files and the batch command line.

A problem file is YAML with these sections::

    kind: raw            # raw | vi | min
    name: dp1
    spaces:
      primal: {"1": 2}   # label: dimension
      dual: {"1": 2}     # for kind vi: common: <dim of G>
    operators:           # catalog descriptors, per family and block
      A: {"1": {type: normal_cone_box, lower: [0, 0], upper: [1, 1]}}
      C: {"1": {type: gradient_quadratic, P: [[1, 0], [0, 1]], c: [2, 0.6]}}
    linear:              # dense matrices as row lists
      - {dual: "1", primal: "1", matrix: [[1, 0], [0, 1]]}
    offsets: {sstar: {...}, r: {...}}
    schedule: {policy: full, P: 0, T: 0, seed: 0, lag_policy: zero}

Operator families are ``A C Q R Bm Bc Bl Dm Dc Dl`` for ``raw``,
``E F Bm Bc Bl`` for ``vi`` and ``f phi g psi h theta`` for ``min``.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping

import numpy as np
import yaml

from .frontends import MinSpec, VISpec, min_to_problem, vi_to_problem
from .operators import CouplingOp, LinearOp, catalog_build
from .problem import ProblemSpec, validate
from .schedule import Schedule
from .solver import NumericalError, ParameterError, StopRule, default_params, run

__all__ = [
    "ProblemFileError",
    "RunConfig",
    "parse_problem_file",
    "load_problem",
    "dump_problem",
    "problem_to_dict",
    "run_cli",
    "main",
]

_RAW_FAMILIES = {
    "A": ("resolvent", "primal"), "C": ("cocoercive", "primal"),
    "Q": ("lipschitz", "primal"),
    "Bm": ("resolvent", "dual"), "Bc": ("cocoercive", "dual"),
    "Bl": ("lipschitz", "dual"),
    "Dm": ("resolvent", "dual"), "Dc": ("cocoercive", "dual"),
    "Dl": ("lipschitz", "dual"),
}
_MIN_FAMILIES = {
    "f": ("resolvent", "primal"), "phi": ("cocoercive", "primal"),
    "g": ("resolvent", "dual"), "psi": ("cocoercive", "dual"),
    "h": ("resolvent", "dual"),
}


class ProblemFileError(ValueError):
    """Malformed problem file; the message names the offending field."""


def _fail(path, msg):
    raise ProblemFileError(f"{path}: {msg}")


def _mapping(node, path, required=True):
    if node is None:
        if required:
            _fail(path, "missing required section")
        return {}
    if not isinstance(node, Mapping):
        _fail(path, f"expected a mapping, got {type(node).__name__}")
    return node


def _dims(node, path):
    node = _mapping(node, path)
    out = {}
    for lab, dim in node.items():
        if isinstance(dim, bool) or not isinstance(dim, int) or dim < 1:
            _fail(f"{path}.{lab}", f"dimension must be a positive integer, "
                                   f"got {dim!r}")
        out[str(lab)] = dim
    if not out:
        _fail(path, "no blocks")
    return out


def _build(desc, role, dim, path):
    if not isinstance(desc, Mapping):
        _fail(path, "operator descriptor must be a mapping with a 'type'")
    try:
        return catalog_build(desc, role=role, dim=dim)
    except ValueError as exc:
        _fail(path, str(exc))


def _family(ops, name, role, dims, path):
    node = _mapping(ops.get(name), f"{path}.{name}", required=False)
    out = {}
    for lab, desc in node.items():
        lab = str(lab)
        if lab not in dims:
            _fail(f"{path}.{name}.{lab}", "does not name a block")
        out[lab] = _build(desc, role, dims[lab], f"{path}.{name}.{lab}")
    return out


def _matrix(node, shape, path):
    try:
        M = np.array(node, dtype=float, ndmin=2)
    except (TypeError, ValueError):
        _fail(path, "matrix must be a list of numeric rows")
    if M.ndim != 2:
        _fail(path, "matrix must be a list of rows")
    if shape is not None and M.shape != shape:
        _fail(path, f"has shape {M.shape[0]}x{M.shape[1]}, expected "
                    f"{shape[0]}x{shape[1]}")
    return M


def _linear(node, h_dims, g_dims, path):
    if node is None:
        return {}
    if not isinstance(node, list):
        _fail(path, "expected a list of {dual, primal, matrix} entries")
    out = {}
    for j, ent in enumerate(node):
        p = f"{path}[{j}]"
        ent = _mapping(ent, p)
        k, i = str(ent.get("dual")), str(ent.get("primal"))
        if k not in g_dims or i not in h_dims:
            _fail(p, f"(dual={k}, primal={i}) does not name a block pair")
        if "matrix" not in ent:
            _fail(p, "missing 'matrix'")
        out[(k, i)] = LinearOp(_matrix(ent["matrix"], (g_dims[k], h_dims[i]),
                                       f"{path}[{k},{i}]"))
    return out


def _offsets(node, name, dims, path):
    node = _mapping(node, path, required=False).get(name)
    node = _mapping(node, f"{path}.{name}", required=False)
    out = {}
    for lab, val in node.items():
        lab = str(lab)
        if lab not in dims:
            _fail(f"{path}.{name}.{lab}", "does not name a block")
        vec = np.asarray(val, dtype=float).reshape(-1)
        if vec.shape[0] != dims[lab]:
            _fail(f"{path}.{name}.{lab}", f"has length {vec.shape[0]}, "
                                          f"expected {dims[lab]}")
        out[lab] = vec
    return out


def _coupling(desc, h_layout, path):
    if desc is None:
        return None
    desc = _mapping(desc, path)
    kind = desc.get("type")
    if kind == "zero_operator":
        return CouplingOp.zero(h_layout)
    if kind == "linear_coupling":
        M = _matrix(desc.get("matrix"), (h_layout.total_dim,) * 2,
                    f"{path}.matrix")
        try:
            return CouplingOp.linear(h_layout, M)
        except ValueError as exc:
            _fail(path, str(exc))
    _fail(path, f"unknown coupling type {kind!r}")


def _parse_raw(doc, name):
    spaces = _mapping(doc.get("spaces"), "spaces")
    h_dims = _dims(spaces.get("primal"), "spaces.primal")
    g_dims = _dims(spaces.get("dual"), "spaces.dual")
    ops = _mapping(doc.get("operators"), "operators", required=False)
    if not ops:
        _fail("operators", "no blocks")
    unknown = set(ops) - set(_RAW_FAMILIES) - {"R"}
    if unknown:
        _fail("operators", f"unknown operator families {sorted(unknown)}")
    fams = {}
    for fam, (role, side) in _RAW_FAMILIES.items():
        fams[fam] = _family(ops, fam, role,
                            h_dims if side == "primal" else g_dims,
                            "operators")
    h_layout = ProblemSpec.build(h_dims, g_dims).h_layout
    R = _coupling(ops.get("R"), h_layout, "operators.R")
    L = _linear(doc.get("linear"), h_dims, g_dims, "linear")
    offs = doc.get("offsets")
    spec = ProblemSpec.build(
        h_dims, g_dims, R=R, L=L,
        sstar=_offsets(offs, "sstar", h_dims, "offsets"),
        r=_offsets(offs, "r", g_dims, "offsets"),
        nominal_alpha=float(doc.get("nominal_alpha", 1.0)), name=name,
        **fams)
    problems = validate(spec)
    if problems:
        _fail("problem", "; ".join(problems))
    return spec


def _parse_vi(doc, name):
    spaces = _mapping(doc.get("spaces"), "spaces")
    h_dims = _dims(spaces.get("primal"), "spaces.primal")
    m = spaces.get("common")
    if isinstance(m, bool) or not isinstance(m, int) or m < 1:
        _fail("spaces.common", f"dimension must be a positive integer, "
                               f"got {m!r}")
    ops = _mapping(doc.get("operators"), "operators", required=False)
    if not ops:
        _fail("operators", "no blocks")
    E = _family(ops, "E", "resolvent", h_dims, "operators")
    F = _family(ops, "F", "resolvent", h_dims, "operators")
    for fam, got in (("E", E), ("F", F)):
        missing = set(h_dims) - set(got)
        if missing:
            _fail(f"operators.{fam}", f"missing blocks {sorted(missing)}")
    single = {}
    for fam, role in (("Bm", "resolvent"), ("Bc", "cocoercive"),
                      ("Bl", "lipschitz")):
        if ops.get(fam) is not None:
            single[fam] = _build(ops[fam], role, m, f"operators.{fam}")
    lin = doc.get("linear")
    if not isinstance(lin, list):
        _fail("linear", "expected a list of {primal, matrix} entries")
    L = {}
    for j, ent in enumerate(lin):
        ent = _mapping(ent, f"linear[{j}]")
        i = str(ent.get("primal"))
        if i not in h_dims:
            _fail(f"linear[{j}]", f"primal={i} does not name a block")
        L[i] = _matrix(ent.get("matrix"), (m, h_dims[i]), f"linear[{i}]")
    missing = set(h_dims) - set(L)
    if missing:
        _fail("linear", f"missing maps for blocks {sorted(missing)}")
    return VISpec(E=E, F=F, L={i: L[i] for i in h_dims},
                  kbar=str(doc.get("kbar", "B")), name=name, **single)


def _parse_min(doc, name):
    spaces = _mapping(doc.get("spaces"), "spaces")
    h_dims = _dims(spaces.get("primal"), "spaces.primal")
    g_dims = _dims(spaces.get("dual"), "spaces.dual")
    ops = _mapping(doc.get("operators"), "operators", required=False)
    if not ops:
        _fail("operators", "no blocks")
    unknown = set(ops) - set(_MIN_FAMILIES) - {"theta"}
    if unknown:
        _fail("operators", f"unknown function families {sorted(unknown)}")
    fams = {fam: _family(ops, fam, role,
                         h_dims if side == "primal" else g_dims, "operators")
            for fam, (role, side) in _MIN_FAMILIES.items()}
    h_layout = ProblemSpec.build(h_dims, g_dims).h_layout
    theta = _coupling(ops.get("theta"), h_layout, "operators.theta")
    L = _linear(doc.get("linear"), h_dims, g_dims, "linear")
    return MinSpec(h_dims=h_dims, g_dims=g_dims, L=L, theta=theta, name=name,
                   **fams)


def parse_problem_file(text: str):
    """Parse problem-file text.

    Returns a :class:`ProblemSpec` (``kind: raw``), :class:`VISpec` or
    :class:`MinSpec`. Raises :class:`ProblemFileError` naming the offending
    line or field.
    """
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f"line {mark.line + 1}" if mark is not None else "file"
        raise ProblemFileError(f"{where}: invalid YAML ({exc})") from None
    doc = _mapping(doc, "file")
    kind = doc.get("kind", "raw")
    name = str(doc.get("name", ""))
    parsers = {"raw": _parse_raw, "vi": _parse_vi, "min": _parse_min}
    if kind not in parsers:
        _fail("kind", f"must be one of {sorted(parsers)}, got {kind!r}")
    return parsers[kind](doc, name)


def _to_problem(obj) -> ProblemSpec:
    try:
        if isinstance(obj, VISpec):
            obj = vi_to_problem(obj)
        elif isinstance(obj, MinSpec):
            obj = min_to_problem(obj)
    except ValueError as exc:
        raise ProblemFileError(f"operators: {exc}") from None
    problems = validate(obj)
    if problems:
        _fail("problem", "; ".join(problems))
    return obj


def load_problem(text: str) -> tuple[ProblemSpec, dict]:
    """Parse text into a validated :class:`ProblemSpec` and its schedule keys."""
    spec = _to_problem(parse_problem_file(text))
    doc = yaml.safe_load(text)
    sched = doc.get("schedule") or {}
    if not isinstance(sched, Mapping):
        _fail("schedule", "expected a mapping")
    return spec, dict(sched)


def _plain(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, Mapping):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


def _descriptor(op, path):
    if op.descriptor is None:
        raise ValueError(f"{path} was not built from the catalog and cannot "
                         f"be written to a problem file")
    desc = _plain(op.descriptor)
    # the parser fills in block dimensions; always writing them keeps
    # dump -> parse -> dump a fixed point
    if "dim" not in desc and getattr(op, "dim", None) is not None:
        desc["dim"] = int(op.dim)
    return desc


def problem_to_dict(spec: ProblemSpec) -> dict:
    """Plain-data form of a spec (the ``raw`` problem-file tree)."""
    ops = {}
    for fam, (_, side) in _RAW_FAMILIES.items():
        labels = spec.I if side == "primal" else spec.K
        family = getattr(spec, fam)
        ops[fam] = {lab: _descriptor(family[lab], f"{fam}[{lab}]")
                    for lab in labels}
    ops["R"] = _descriptor(spec.R, "R")
    linear = [{"dual": k, "primal": i, "matrix": op.matrix.tolist()}
              for (k, i), op in spec.L.items()]
    return {
        "kind": "raw",
        "name": spec.name,
        "spaces": {"primal": dict(spec.h_layout.blocks),
                   "dual": dict(spec.g_layout.blocks)},
        "operators": ops,
        "linear": linear,
        "offsets": {"sstar": {i: spec.sstar[i].tolist() for i in spec.I},
                    "r": {k: spec.r[k].tolist() for k in spec.K}},
    }


def dump_problem(spec: ProblemSpec) -> str:
    """Serialize a spec built from catalog operators to problem-file text."""
    return yaml.safe_dump(problem_to_dict(spec), sort_keys=False)


@dataclass
class RunConfig:
    problem: str
    variant: str = "weak"
    policy: str | None = None
    P: int | None = None
    T: int | None = None
    seed: int | None = None
    lag_policy: str | None = None
    lag: int | None = None
    sigma: float | None = None
    lam: float = 1.8
    eps_scale: float = 1.0
    tol: float = 1e-8
    max_iter: int = 10000
    trace: str | None = None
    out: str | None = None
    record_every: int = 1
    metric: str = "kt"

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError(f"tol must be positive, got {self.tol}")
        if self.max_iter < 1:
            raise ValueError(f"max_iter must be >= 1, got {self.max_iter}")
        if self.record_every < 1:
            raise ValueError("record_every must be >= 1")
        if not 0 < self.eps_scale <= 1:
            raise ValueError("eps_scale must lie in (0, 1]")


def _schedule(spec, file_keys, cfg):
    keys = {"policy": "full", "P": 0, "T": 0, "seed": 0,
            "lag_policy": "zero", "lag": None}
    keys.update({k: v for k, v in file_keys.items() if k in keys})
    for k in keys:
        val = getattr(cfg, k)
        if val is not None:
            keys[k] = val
    return Schedule(spec.I, spec.K, **keys)


def _solution(spec, report):
    st = report.state

    def blocks(vec, labels):
        return {lab: vec[lab].tolist() for lab in labels}

    return {
        "problem": spec.name,
        "variant": report.variant,
        "reason": report.reason,
        "iterations": report.iterations,
        "kt_residual": report.kt_residual,
        "saddle_residual": report.saddle_residual,
        "x": blocks(st.x, spec.I),
        "y": blocks(st.y, spec.K),
        "z": blocks(st.z, spec.K),
        "vstar": blocks(st.vstar, spec.K),
    }


def run_cli(cfg: RunConfig, stderr=None) -> int:
    """Run one configuration; returns the process exit status."""
    stderr = stderr if stderr is not None else sys.stderr
    try:
        text = Path(cfg.problem).read_text()
        spec, file_sched = load_problem(text)
        sched = _schedule(spec, file_sched, cfg)
        params = default_params(spec, sigma=cfg.sigma, lam=cfg.lam)
        if cfg.eps_scale != 1.0:
            params.eps *= cfg.eps_scale
        report = run(spec, sched, params, variant=cfg.variant,
                     stop=StopRule(tol=cfg.tol, max_iter=cfg.max_iter,
                                   metric=cfg.metric,
                                   record_every=cfg.record_every))
    except (OSError, ValueError, NumericalError) as exc:
        kind = "parameter" if isinstance(exc, ParameterError) else "input"
        print(f"error ({kind}): {exc}", file=stderr)
        return 1
    try:
        if cfg.trace:
            report.write_trace(cfg.trace)
        if cfg.out:
            Path(cfg.out).write_text(json.dumps(_solution(spec, report),
                                                indent=2) + "\n")
    except OSError as exc:
        print(f"error (output): {exc}", file=stderr)
        return 1
    print(f"{spec.name or 'problem'}: {report.reason} after "
          f"{report.iterations} iterations, kt residual "
          f"{report.kt_residual:.3e}", file=stderr)
    return 0 if report.converged else 2


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="saddlesplit",
        description="Solve a structured monotone inclusion from a problem "
                    "file with the block-iterative saddle-form solver.")
    p.add_argument("--problem", required=True, help="problem file (YAML)")
    p.add_argument("--variant", choices=("weak", "strong"), default="weak")
    p.add_argument("--policy",
                   choices=("full", "round_robin", "random_covering"))
    p.add_argument("--P", type=int, help="coverage window")
    p.add_argument("--T", type=int, help="largest lag")
    p.add_argument("--seed", type=int)
    p.add_argument("--lag-policy", dest="lag_policy",
                   choices=("zero", "fixed", "random"))
    p.add_argument("--lag", type=int, help="delay for --lag-policy fixed")
    p.add_argument("--sigma", type=float)
    p.add_argument("--lambda", dest="lam", type=float, default=1.8)
    p.add_argument("--eps-scale", dest="eps_scale", type=float, default=1.0)
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--max-iter", dest="max_iter", type=int, default=10000)
    p.add_argument("--metric", choices=("kt", "saddle"), default="kt")
    p.add_argument("--trace", help="trace CSV output path")
    p.add_argument("--out", help="solution JSON output path")
    p.add_argument("--record-every", dest="record_every", type=int,
                   default=1)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = RunConfig(**vars(args))
    except ValueError as exc:
        print(f"error (input): {exc}", file=sys.stderr)
        return 1
    return run_cli(cfg)


if __name__ == "__main__":
    sys.exit(main())
