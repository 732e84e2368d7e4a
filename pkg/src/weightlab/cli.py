"""Command-line entry point: ``weightlab <subcommand> ...``.

Exit codes: 0 pass, 1 assertion failure, 2 usage or config error, 3 numeric error.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import harness
from .corpus import LEMMAS, lemma_corpus, make_function
from .errors import ConfigError, NumericError, WeightlabError
from .grid import DyadicLattice, GridSpec, SampledFunction, canonical_shifts, load_csv
from .maximal import hl_maximal, iterated_maximal, orlicz_maximal, power_maximal
from .operators import (DecompositionPlan, apply_t_omega, commutator_apply, kernel_from_name,
                        lp_piece_apply, piece_decay_scan, summation_bound)
from .registry import load_registry
from .sparse import build_sparse_family, family_to_json, verify_sparsity
from .weights import (Weight, a1_constant, ap_constant, fujii_wilson_constant, make_symbol,
                      make_weight, rhi_check)
from .young import from_name

EXTRA_CHECKS = ("summation", "decomposition", "domination")


def parse_grid(text: str) -> GridSpec:
    """``1024`` (1D), ``1x1024``, ``2x64`` or ``64x64`` over ``[-1, 1)`` per axis."""
    parts = [int(t) for t in text.lower().split("x")]
    if len(parts) == 1:
        return GridSpec.uniform(1, parts[0])
    if len(parts) == 2 and parts[0] in (1, 2) and parts[1] > 2:
        return GridSpec.uniform(parts[0], parts[1])
    if len(parts) == 2:
        return GridSpec(2, ((-1.0, 1.0),) * 2, tuple(parts))
    raise argparse.ArgumentTypeError(f"bad grid {text!r}")


def _split(spec: str):
    kind, _, arg = spec.partition(":")
    return kind, arg


def function_from_spec(spec: str, grid: GridSpec, seed: int) -> SampledFunction:
    """``bump[:seed]``, ``step[:seed]``, ``constant[:c]``, ``zero`` or a CSV path."""
    if Path(spec).is_file():
        return load_csv(spec)
    kind, arg = _split(spec)
    params = {"seed": int(arg) if arg and kind in ("bump", "step", "lognormal") else seed}
    if kind == "constant" and arg:
        params["value"] = float(arg)
    return make_function(kind, params, grid)


def weight_from_spec(spec: str, grid: GridSpec, seed: int) -> Weight:
    """``constant[:c]``, ``power:alpha``, ``step:l1,l2,...``, ``lognormal[:sigma]`` or a CSV path."""
    if Path(spec).is_file():
        return Weight(load_csv(spec))
    kind, arg = _split(spec)
    if kind == "constant":
        params = {"value": float(arg or 1.0)}
    elif kind == "power":
        params = {"alpha": float(arg)}
    elif kind == "step":
        params = {"levels": [float(v) for v in arg.split(",")]}
    elif kind == "lognormal":
        params = {"sigma": float(arg or 1.0), "seed": seed}
    else:
        params = {}
    return make_weight(kind, params, grid)


def _emit(rows: list, args) -> None:
    """Write a list of flat dicts as CSV or JSON to ``--out`` or stdout."""
    if args.format == "json":
        text = json.dumps(rows, indent=2, sort_keys=True, default=float) + "\n"
    else:
        cols = list(rows[0]) if rows else []
        lines = [",".join(cols)]
        lines += [",".join(repr(r[c]) if isinstance(r[c], float) else str(r[c]) for c in cols)
                  for r in rows]
        text = "\n".join(lines) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)


def _cells(out: SampledFunction, name: str, **cols) -> list:
    centers = out.grid.centers()
    rows = []
    for i, v in enumerate(out.values.ravel()):
        row = {f"x{a}": float(c.ravel()[i]) for a, c in enumerate(centers)}
        row[name] = float(v)
        for k, c in cols.items():
            row[k] = float(c.ravel()[i])
        rows.append(row)
    return rows


def cmd_constants(args) -> int:
    w = weight_from_spec(args.weight, args.grid, args.seed)
    row = {"weight": args.weight}
    for p in args.p:
        row[f"ap_{p:g}"] = ap_constant(w, p, args.scope)
    row["a1"] = a1_constant(w, args.scope)
    row["ainf"] = fujii_wilson_constant(w, args.scope)
    row["r_w"] = rhi_check(w, None, args.scope).r_w
    _emit([row], args)
    return 0


def cmd_maximal(args) -> int:
    f = function_from_spec(args.function, args.grid, args.seed)
    kind, arg = _split(args.kind)
    if kind == "hl":
        out = hl_maximal(f, args.scope)
    elif kind == "power":
        out = power_maximal(f, float(arg), args.scope)
    elif kind == "iterated":
        out = iterated_maximal(f, int(arg), args.scope)
    elif kind == "orlicz":
        out = orlicz_maximal(f, from_name(arg or "llogl:1"), args.scope)
    else:
        raise ConfigError(f"unknown maximal operator {args.kind!r}")
    _emit(_cells(out, "value", f=f.values), args)
    return 0


def cmd_transform(args) -> int:
    f = function_from_spec(args.function, args.grid, args.seed)
    K = kernel_from_name(args.kernel, args.grid.dimension)
    if args.piece is None:
        def T(x):
            return apply_t_omega(x, K, args.eps_cells)
    else:
        plan = DecompositionPlan(args.grid.dimension, j_max=args.j_max)

        def T(x):
            return lp_piece_apply(x, K, plan, args.piece)
    if args.symbol:
        out = commutator_apply(make_symbol(args.symbol, {}, args.grid).base, T, f)
    else:
        out = T(f)
    _emit(_cells(out, "value", f=f.values), args)
    return 0


def cmd_sparse(args) -> int:
    f = function_from_spec(args.function, args.grid, args.seed)
    shifts = canonical_shifts(args.grid.dimension)
    lattices = [DyadicLattice(args.grid, s) for s in shifts] if args.scope == "full" else [
        DyadicLattice(args.grid)]
    families = [build_sparse_family(f, L, args.threshold) for L in lattices]
    if args.format == "json":
        text = "[" + ",\n".join(family_to_json(S) for S in families) + "]\n"
        if args.out:
            Path(args.out).write_text(text)
        else:
            sys.stdout.write(text)
        return 0
    rows = []
    for S in families:
        eta, ok = verify_sparsity(S)
        rows.append({"lattice": S.lattice.lattice_id, "cubes": len(S), "eta": eta,
                     "sparse": ok})
    _emit(rows, args)
    return 0 if all(r["sparse"] for r in rows) else 1


def _extra_check(name: str, registry: dict) -> list:
    if name == "summation":
        rows = []
        for a, c in registry["summation"].items():
            for t in np.round(np.arange(1, 100) / 100, 2):
                val = float(t) * summation_bound(float(a), float(t))
                rows.append({"case": f"alpha={a}|theta={t:g}", "lhs": val, "rhs": c,
                             "holds": val <= c})
        return rows
    if name == "decomposition":
        grid = GridSpec.uniform(1, 4096)
        K = kernel_from_name("hilbert")
        f = make_function("bump", {"seed": 0}, grid)
        errs = harness.reconstruction_errors(f, K, DecompositionPlan(1))
        thr = registry["reconstruction_threshold"]
        rows = [{"case": f"J={j}", "lhs": e, "rhs": thr,
                 "holds": (j == 0 or e <= errs[j - 1]) and (j < len(errs) - 1 or e <= thr)}
                for j, e in enumerate(errs)]
        scan = piece_decay_scan(K, DecompositionPlan(1), 2.0, grid)
        rows.append({"case": "decay_alpha", "lhs": 0.0, "rhs": scan.alpha,
                     "holds": scan.alpha > 0})
        return rows
    rows = []
    K = kernel_from_name("hilbert")
    for res in (1024, 4096):
        grid = GridSpec.uniform(1, res)
        fs = [make_function("bump", {"seed": s}, grid) for s in range(10)]
        b = make_symbol("linear", {}, grid).base
        for label, fits, c in (("T", harness.domination_table(fs, K), registry["domination"]["c_n"]),
                               ("[b,T]", harness.domination_table(fs, K, b),
                                registry["domination"]["c_n_commutator"])):
            for i, d in enumerate(fits):
                rows.append({"case": f"{label}|N={res}|f{i}", "lhs": d.c_fit, "rhs": c,
                             "holds": d.violations == 0 and d.c_fit <= c})
    return rows


def cmd_verify(args) -> int:
    registry = load_registry()
    if args.lemma in EXTRA_CHECKS:
        rows = _extra_check(args.lemma, registry)
    else:
        runner, asserted = LEMMAS[args.lemma]
        kwargs = {"tau": registry["tau"]} if args.lemma == "rhi" else {}
        cases = lemma_corpus(args.cases, args.grid.resolution[0], args.grid.dimension, args.seed)
        rows = [{"case": c.case, "lhs": c.lhs, "rhs": c.rhs, "holds": c.holds}
                for c in runner(cases, **kwargs)]
    _emit(rows, args)
    return 0 if all(r["holds"] for r in rows) else 1


def cmd_sweep(args) -> int:
    code, _ = harness.run_suite(args.config, args.out, log=lambda m: print(m, file=sys.stderr))
    return code


def cmd_calibrate(args) -> int:
    harness.calibrate(args.config, args.registry, log=lambda m: print(m, file=sys.stderr))
    return 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--grid", type=parse_grid, default=GridSpec.uniform(1, 1024),
                        help="resolution, e.g. 1024 or 2x64 (default 1024)")
    common.add_argument("--scope", choices=("dyadic", "full"), default="dyadic")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--out", default=None, help="output file (stdout if omitted)")
    common.add_argument("--format", choices=("csv", "json"), default="csv")

    parser = argparse.ArgumentParser(prog="weightlab", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("constants", parents=[common], help="weight constants")
    p.add_argument("weight", help="constant[:c] | power:alpha | step:l1,l2 | lognormal[:sigma] | CSV")
    p.add_argument("--p", type=float, nargs="+", default=[1.5, 2.0, 4.0])
    p.set_defaults(func=cmd_constants)

    p = sub.add_parser("maximal", parents=[common], help="maximal functions")
    p.add_argument("function", help="bump[:seed] | step[:seed] | constant[:c] | CSV")
    p.add_argument("--kind", default="hl", help="hl | power:r | iterated:k | orlicz:<young>")
    p.set_defaults(func=cmd_maximal)

    p = sub.add_parser("transform", parents=[common], help="apply T_Omega, a piece or a commutator")
    p.add_argument("function")
    p.add_argument("--kernel", default="hilbert")
    p.add_argument("--eps-cells", type=float, default=1)
    p.add_argument("--piece", type=int, default=None)
    p.add_argument("--j-max", type=int, default=6)
    p.add_argument("--symbol", default=None, help="linear | log | ... for [b, T]")
    p.set_defaults(func=cmd_transform)

    p = sub.add_parser("sparse", parents=[common], help="stopping-time sparse families")
    p.add_argument("function")
    p.add_argument("--threshold", type=float, default=None)
    p.set_defaults(func=cmd_sparse)

    p = sub.add_parser("verify", parents=[common], help="corpus check of one lemma")
    p.add_argument("lemma", choices=sorted(LEMMAS) + list(EXTRA_CHECKS))
    p.add_argument("--cases", type=int, default=120)
    p.set_defaults(func=cmd_verify, grid=GridSpec.uniform(1, 256))

    p = sub.add_parser("sweep", parents=[common], help="run an experiment config")
    p.add_argument("config", nargs="?", default=str(harness.DEFAULT_CONFIG))
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("calibrate", parents=[common], help="refit and freeze the registry")
    p.add_argument("config", nargs="?", default=str(harness.DEFAULT_CONFIG))
    p.add_argument("--registry", default=None)
    p.set_defaults(func=cmd_calibrate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return harness.EXIT_USAGE if exc.code else 0
    try:
        return args.func(args)
    except (ConfigError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return harness.EXIT_USAGE
    except NumericError as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return harness.EXIT_NUMERIC
    except (WeightlabError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return harness.EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
