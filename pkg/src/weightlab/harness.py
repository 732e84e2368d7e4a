"""Experiment configs, inequality-ratio sweeps, reports and calibration.

Every ratio row stores the constants that enter its right-hand side, so
``rhs == omega * bmo * factor * fnorm`` can be recomputed from the CSV.
Unvalued constants live in the frozen registry: :func:`calibrate` writes
them from a seed set disjoint from the acceptance runs, and :func:`run_suite`
only reads them.
"""
from __future__ import annotations

import csv
import io
import json
import re
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .corpus import LEMMAS, lemma_corpus, make_function
from .errors import ConfigError, NumericError, ParameterError, WeightlabError
from .grid import GridSpec, SampledFunction, lp_norm
from .maximal import hl_maximal, iterated_maximal, power_maximal
from .operators import (DecompositionPlan, KernelSpec, apply_t_omega, commutator_apply,
                        kernel_from_name, lp_piece_apply, piece_decay_scan, summation_bound)
from .registry import load_registry, write_registry
from .sparse import domination_fit, shifted_families
from .weights import (BmoSymbol, Weight, a1_constant, ap_constant, bmo_norm, exp_symbol_ap,
                      fujii_wilson_constant, make_symbol, make_weight, rhi_check)

__all__ = [
    "ExperimentConfig",
    "RatioRow",
    "RatioReport",
    "load_config",
    "parse_config",
    "ratio_theorem1",
    "ratio_theorem1_commutator",
    "ratio_corollary1",
    "ratio_corollary2",
    "ratio_buckley",
    "ratio_hrt_ap",
    "ratio_conjecture",
    "run_experiment",
    "run_suite",
    "write_reports",
    "calibrate",
    "reconstruction_errors",
    "domination_table",
    "DEFAULT_CONFIG",
    "EXIT_PASS",
    "EXIT_FAIL",
    "EXIT_USAGE",
    "EXIT_NUMERIC",
]

DEFAULT_CONFIG = Path(__file__).with_name("data") / "default.toml"
EXIT_PASS, EXIT_FAIL, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2, 3

# headroom applied to every fitted constant
HEADROOM = 1.25

COLUMNS = ("experiment", "case", "function", "weight", "symbol", "kernel", "variant",
           "p", "r", "theta", "q", "omega", "bmo", "ap", "a1", "ainf", "factor",
           "fnorm", "lhs", "rhs", "ratio")


# -- config -----------------------------------------------------------------

def _line_of(text: str, key: str, block: int = None) -> int:
    """Line of the first ``key =`` after the ``block``-th ``[[experiments]]`` header."""
    start = 0
    if block is not None:
        heads = [m.end() for m in re.finditer(r"^\s*\[\[experiments\]\]", text, flags=re.M)]
        start = heads[block] if block < len(heads) else 0
    m = re.compile(rf"^\s*{re.escape(key)}\s*=", flags=re.M).search(text, start)
    return text.count("\n", 0, m.start()) + 1 if m else 0


def _fail(text: str, source: str, key: str, msg: str, block: int = None):
    line = _line_of(text, key, block)
    where = f"{source}:{line}" if line else source
    raise ConfigError(f"{where}: field '{key}': {msg}")


def _as_list(v):
    return list(v) if isinstance(v, (list, tuple)) else [v]


def _expand(decls: list, section: str, text: str, source: str) -> dict:
    """Name -> params.  ``seeds`` and ``alphas`` lists expand into ``name:value`` entries."""
    out = {}
    for d in decls:
        d = dict(d)
        if "name" not in d or "kind" not in d:
            _fail(text, source, section, "every declaration needs 'name' and 'kind'")
        name = d.pop("name")
        variants = [(name, d)]
        for key, single in (("seeds", "seed"), ("alphas", "alpha")):
            if key in d:
                values = d.pop(key)
                variants = [(f"{n}:{v:g}" if isinstance(v, float) else f"{n}:{v}",
                             dict(p, **{single: v})) for n, p in variants for v in values]
        for n, p in variants:
            if n in out:
                _fail(text, source, "name", f"duplicate {section} name {n!r}")
            out[n] = p
    return out


@dataclass
class ExperimentConfig:
    """Parsed experiment document; see ``data/default.toml`` for the layout."""

    name: str
    grid: GridSpec
    scope: str
    weights: dict
    symbols: dict
    kernels: dict
    functions: dict
    experiments: list
    output: Path
    calibration_seed_offset: int = 1000
    tolerances: dict = field(default_factory=dict)
    source: str = "<config>"

    def function(self, name: str) -> SampledFunction:
        d = dict(self.functions[name])
        return make_function(d.pop("kind"), d, self.grid)

    def weight(self, name: str) -> Weight:
        d = dict(self.weights[name])
        return make_weight(d.pop("kind"), d, self.grid)

    def symbol(self, name: str) -> BmoSymbol:
        d = dict(self.symbols[name])
        return make_symbol(d.pop("kind"), d, self.grid)

    def kernel(self, name: str) -> KernelSpec:
        return kernel_from_name(self.kernels[name]["spec"], self.grid.dimension)

    def select(self, table: dict, patterns) -> list:
        """Names in ``table`` equal to a pattern or expanded from it (``pattern:*``)."""
        out = []
        for pat in _as_list(patterns):
            hits = [n for n in table if n == pat or n.startswith(pat + ":")]
            if not hits:
                raise ConfigError(f"{self.source}: no declaration matches {pat!r}")
            out += [h for h in hits if h not in out]
        return out

    def with_seed_offset(self, offset: int) -> "ExperimentConfig":
        """Copy whose seeded functions, weights and symbols draw from shifted seeds."""
        def shift(table):
            return {n: (dict(d, seed=d["seed"] + offset) if "seed" in d else d)
                    for n, d in table.items()}
        return ExperimentConfig(self.name, self.grid, self.scope, shift(self.weights),
                                shift(self.symbols), self.kernels, shift(self.functions),
                                self.experiments, self.output, self.calibration_seed_offset,
                                self.tolerances, self.source)


_RATIO_KINDS = ("theorem1", "theorem1_commutator", "corollary1", "corollary2", "buckley",
                "hrt_ap", "conjecture", "exp_symbol")
_COR1_VARIANTS = ("mw", "a1", "commutator-mw", "commutator-a1")


def parse_config(text: str, source: str = "<config>") -> ExperimentConfig:
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{source}: {exc}") from exc

    g = doc.get("grid", {})
    try:
        n = int(g.get("dimension", 1))
        res = g.get("resolution", 256)
        bounds = g.get("bounds", [[-1.0, 1.0]] * n)
        grid = GridSpec(n, bounds, _as_list(res) * (n if not isinstance(res, list) else 1))
    except (WeightlabError, TypeError, ValueError) as exc:
        _fail(text, source, "resolution", str(exc))
    scope = doc.get("scope", "dyadic")
    if scope not in ("dyadic", "full"):
        _fail(text, source, "scope", f"expected 'dyadic' or 'full', got {scope!r}")

    tables = {}
    for section in ("weights", "symbols", "kernels", "functions"):
        tables[section] = _expand(doc.get(section, []), section, text, source)

    experiments, ids = [], set()
    for i, e in enumerate(doc.get("experiments", [])):
        e = dict(e)
        eid, kind = e.get("id"), e.get("kind")
        if not eid:
            _fail(text, source, "id", "experiment without id", i)
        if eid in ids:
            _fail(text, source, "id", f"duplicate experiment id {eid!r}", i)
        ids.add(eid)
        if kind not in _RATIO_KINDS + ("verify",):
            _fail(text, source, "kind", f"unknown experiment kind {kind!r}", i)
        for p in _as_list(e.get("p", 2.0)):
            if not p > 1:
                _fail(text, source, "p", f"p must exceed 1, got {p}", i)
        for r in _as_list(e.get("r", 2.0)):
            if not r > 1:
                _fail(text, source, "r", f"r must exceed 1, got {r}", i)
        for th in _as_list(e.get("theta", 0.5)):
            if not 0 < th < 1:
                _fail(text, source, "theta", f"theta must lie in (0, 1), got {th}", i)
        if "q" in e:
            for q in _as_list(e["q"]):
                if not all(1 <= q < p for p in _as_list(e.get("p", 2.0))):
                    _fail(text, source, "q", f"q must lie in [1, p), got {q}", i)
        if kind == "corollary1" and e.get("variant", "mw") not in _COR1_VARIANTS:
            _fail(text, source, "variant", f"corollary1 variant must be one of {_COR1_VARIANTS}", i)
        if kind == "verify" and e.get("lemma") not in LEMMAS:
            _fail(text, source, "lemma", f"unknown lemma {e.get('lemma')!r}", i)
        if kind == "exp_symbol" and not float(e.get("alpha", 0.5)) > 0:
            _fail(text, source, "alpha", "alpha must be positive", i)
        experiments.append(e)

    cfg = ExperimentConfig(
        name=doc.get("name", "experiment"), grid=grid, scope=scope,
        weights=tables["weights"], symbols=tables["symbols"], kernels=tables["kernels"],
        functions=tables["functions"], experiments=experiments,
        output=Path(doc.get("output", {}).get("dir", "reports")),
        calibration_seed_offset=int(doc.get("calibration_seed_offset", 1000)),
        tolerances=dict(doc.get("tolerances", {})), source=source)
    for i, e in enumerate(experiments):
        for key, table in (("functions", cfg.functions), ("weights", cfg.weights),
                           ("symbol", cfg.symbols), ("kernel", cfg.kernels)):
            if key in e:
                try:
                    cfg.select(table, e[key])
                except ConfigError as exc:
                    _fail(text, source, key, str(exc), i)
    return cfg


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text, str(path))


# -- ratio rows -------------------------------------------------------------

@dataclass
class RatioRow:
    experiment: str = ""
    case: str = ""
    function: str = ""
    weight: str = ""
    symbol: str = ""
    kernel: str = ""
    variant: str = ""
    p: float = None
    r: float = None
    theta: float = None
    q: float = None
    omega: float = 1.0
    bmo: float = 1.0
    ap: float = None
    a1: float = None
    ainf: float = None
    factor: float = 1.0
    fnorm: float = 0.0
    lhs: float = 0.0
    rhs: float = 0.0

    @property
    def ratio(self) -> float:
        return self.lhs / self.rhs if self.rhs > 0 else (0.0 if self.lhs == 0 else np.inf)

    def as_dict(self) -> dict:
        return {c: getattr(self, c) for c in COLUMNS}


def _row(lhs, omega, bmo, factor, fnorm, **meta) -> RatioRow:
    rhs = omega * bmo * factor * fnorm
    return RatioRow(lhs=float(lhs), rhs=float(rhs), omega=float(omega), bmo=float(bmo),
                    factor=float(factor), fnorm=float(fnorm), **meta)


def _weight(w) -> Weight:
    return w if isinstance(w, Weight) else Weight(w)


def _apply(K: KernelSpec):
    return lambda x: apply_t_omega(x, K)


def _lhs(f, K, w_values, p, b=None, Tf=None):
    if Tf is None:
        T = _apply(K)
        Tf = commutator_apply(b.base if isinstance(b, BmoSymbol) else b, T, f) if b is not None else T(f)
    return lp_norm(Tf, f.like(w_values, nonnegative=True), p)


def _bmo(b, scope):
    return bmo_norm(b, scope) if b is not None else 1.0


def ratio_theorem1(f, u, K, p, r, theta, scope="dyadic", Tf=None, mu=None) -> RatioRow:
    """``||T f||_{L^p(u)}`` over ``||Omega|| (1-theta)^-1 (r')^(theta/p') ||f||_{L^p(M_{r/theta} u)}``.

    ``mu`` may carry a precomputed ``M_{r/theta} u``.
    """
    u = _weight(u)
    pp, rp = p / (p - 1), r / (r - 1)
    if mu is None:
        mu = power_maximal(u.base, r / theta, scope)
    factor = rp ** (theta / pp) / (1 - theta)
    return _row(_lhs(f, K, u.values, p, Tf=Tf), K.sup_norm, 1.0, factor,
                lp_norm(f, mu, p), p=p, r=r, theta=theta)


def ratio_theorem1_commutator(f, u, K, b, p, r, theta, scope="dyadic", Tf=None,
                              mu=None) -> RatioRow:
    """As :func:`ratio_theorem1` for ``[b, T]`` with exponent ``theta (1 + 1/p')`` and ``||b||_BMO``."""
    u = _weight(u)
    pp, rp = p / (p - 1), r / (r - 1)
    if mu is None:
        mu = power_maximal(u.base, r / theta, scope)
    factor = rp ** (theta * (1 + 1 / pp)) / (1 - theta)
    return _row(_lhs(f, K, u.values, p, b=b, Tf=Tf), K.sup_norm, _bmo(b, scope), factor,
                lp_norm(f, mu, p), p=p, r=r, theta=theta)


def ratio_corollary1(f, w, K, p, variant="mw", b=None, scope="dyadic", Tf=None) -> RatioRow:
    """Mixed ``A_1``-``A_inf`` bounds.

    ``mw``: ``[w]_{A_inf}^{1+1/p'} ||f||_{L^p(Mw)}``; ``a1``: ``[w]_{A_1}^{1/p}
    [w]_{A_inf}^{1+1/p'} ||f||_{L^p(w)}``; commutator variants raise the
    ``A_inf`` exponent by one and carry ``||b||_BMO``.
    """
    if variant not in _COR1_VARIANTS:
        raise ParameterError(f"unknown corollary1 variant {variant!r}")
    w = _weight(w)
    pp = p / (p - 1)
    comm = variant.startswith("commutator")
    if comm and b is None:
        raise ParameterError("commutator variants need a symbol b")
    ainf = fujii_wilson_constant(w, scope)
    factor = ainf ** ((2.0 if comm else 1.0) + 1 / pp)
    a1 = None
    if variant.endswith("a1"):
        a1 = a1_constant(w, scope)
        factor *= a1 ** (1 / p)
        fnorm = lp_norm(f, w.base, p)
    else:
        fnorm = lp_norm(f, hl_maximal(w.base, scope), p)
    return _row(_lhs(f, K, w.values, p, b=b if comm else None, Tf=Tf), K.sup_norm,
                _bmo(b if comm else None, scope), factor, fnorm, p=p, a1=a1, ainf=ainf,
                variant=variant)


def ratio_corollary2(f, w, K, p, q, b=None, scope="dyadic", Tf=None) -> RatioRow:
    """``[w]_{A_q}^2 ||f||_{L^p(w)}``, or the cube with ``||b||_BMO`` for the commutator."""
    if not 1 <= q < p:
        raise ParameterError(f"corollary 2 needs 1 <= q < p, got q={q}, p={p}")
    w = _weight(w)
    aq = a1_constant(w, scope) if q == 1 else ap_constant(w, q, scope)
    factor = aq ** (3 if b is not None else 2)
    return _row(_lhs(f, K, w.values, p, b=b, Tf=Tf), K.sup_norm, _bmo(b, scope), factor,
                lp_norm(f, w.base, p), p=p, q=q, ap=aq,
                variant="commutator" if b is not None else "")


def ratio_buckley(f, w, p, scope="dyadic") -> RatioRow:
    """``||M f||_{L^p(w)}`` over ``[w]_{A_p}^{1/(p-1)} ||f||_{L^p(w)}``."""
    w = _weight(w)
    ap = ap_constant(w, p, scope)
    lhs = lp_norm(hl_maximal(f, scope), w.base, p)
    return _row(lhs, 1.0, 1.0, ap ** (1 / (p - 1)), lp_norm(f, w.base, p), p=p, ap=ap)


def ratio_hrt_ap(f, w, K, p, b=None, scope="dyadic", Tf=None) -> RatioRow:
    """``[w]_{A_p}^{2 max(1, 1/(p-1))}``; the commutator uses ``3 max(...)``."""
    w = _weight(w)
    ap = ap_constant(w, p, scope)
    expo = (3 if b is not None else 2) * max(1.0, 1 / (p - 1))
    return _row(_lhs(f, K, w.values, p, b=b, Tf=Tf), K.sup_norm, _bmo(b, scope), ap ** expo,
                lp_norm(f, w.base, p), p=p, ap=ap,
                variant="commutator" if b is not None else "")


def ratio_conjecture(f, w, K, p, scope="dyadic", Tf=None) -> RatioRow:
    """Report-only: ``||T f||_{L^p(w)}`` over ``||Omega|| ||f||_{L^p(M^{[p]+1} w)}``."""
    w = _weight(w)
    k = int(np.floor(p)) + 1
    mk = iterated_maximal(w.base, k, scope)
    return _row(_lhs(f, K, w.values, p, Tf=Tf), K.sup_norm, 1.0, 1.0, lp_norm(f, mk, p),
                p=p, variant=f"M^{k}")


# -- reports ----------------------------------------------------------------

@dataclass
class RatioReport:
    experiment: str
    kind: str
    rows: list
    bound: float = None
    asserted: bool = True

    @property
    def ratios(self) -> np.ndarray:
        return np.array([r.ratio for r in self.rows], dtype=float)

    @property
    def max_ratio(self) -> float:
        return float(self.ratios.max()) if self.rows else 0.0

    @property
    def median_ratio(self) -> float:
        return float(np.median(self.ratios)) if self.rows else 0.0

    @property
    def fitted(self) -> float:
        """Smallest constant that makes every row hold."""
        return self.max_ratio

    @property
    def passed(self) -> bool:
        if not self.asserted or not self.rows:
            return True
        return self.bound is not None and self.max_ratio <= self.bound

    def summary(self) -> dict:
        return {"experiment": self.experiment, "kind": self.kind, "rows": len(self.rows),
                "max_ratio": self.max_ratio, "median_ratio": self.median_ratio,
                "fitted": self.fitted, "bound": self.bound, "asserted": self.asserted,
                "passed": self.passed}


def _registry_key(e: dict) -> str:
    return e["id"]


def _sweep(cfg: ExperimentConfig, e: dict):
    fnames = cfg.select(cfg.functions, e.get("functions", list(cfg.functions)))
    wnames = cfg.select(cfg.weights, e.get("weights", list(cfg.weights)))
    return fnames, wnames


def run_experiment(cfg: ExperimentConfig, e: dict, registry: dict = None) -> RatioReport:
    """Run one declared experiment and attach its frozen bound (if any)."""
    registry = load_registry() if registry is None else registry
    kind, eid, scope = e["kind"], e["id"], cfg.scope
    if kind == "verify":
        return _run_verify(cfg, e, registry)
    if kind == "exp_symbol":
        return _run_exp_symbol(cfg, e)

    K = cfg.kernel(e.get("kernel", next(iter(cfg.kernels))))
    kname = e.get("kernel", next(iter(cfg.kernels)))
    sname = e.get("symbol")
    b = cfg.symbol(sname) if sname else None
    comm = kind == "theorem1_commutator" or (kind == "corollary1" and
                                             e.get("variant", "mw").startswith("commutator"))
    if kind in ("corollary2", "hrt_ap") and e.get("commutator", False):
        comm = True
    if comm and b is None:
        raise ConfigError(f"{cfg.source}: experiment {eid!r} needs a 'symbol'")
    fnames, wnames = _sweep(cfg, e)
    ps, rs = _as_list(e.get("p", 2.0)), _as_list(e.get("r", 2.0))
    thetas = _as_list(e.get("theta", 0.5))
    qs = _as_list(e.get("q", 1.5))

    T = _apply(K)
    funcs = {n: cfg.function(n) for n in fnames}
    images = {}
    for n, f in funcs.items():
        images[n] = commutator_apply(b.base, T, f) if comm else T(f)
    rows = []
    for wn in wnames:
        w = cfg.weight(wn)
        for p in ps:
            for r in rs if kind.startswith("theorem1") else [None]:
                for th in thetas if kind.startswith("theorem1") else [None]:
                    mu = power_maximal(w.base, r / th, scope) if th is not None else None
                    for fn, f in funcs.items():
                        Tf = images[fn]
                        if kind == "theorem1":
                            row = ratio_theorem1(f, w, K, p, r, th, scope, Tf, mu)
                        elif kind == "theorem1_commutator":
                            row = ratio_theorem1_commutator(f, w, K, b, p, r, th, scope, Tf, mu)
                        elif kind == "corollary1":
                            row = ratio_corollary1(f, w, K, p, e.get("variant", "mw"),
                                                   b if comm else None, scope, Tf)
                        elif kind == "corollary2":
                            for q in qs:
                                rows.append(_label(ratio_corollary2(
                                    f, w, K, p, q, b if comm else None, scope, Tf),
                                    eid, fn, wn, sname if comm else "", kname))
                            continue
                        elif kind == "buckley":
                            row = ratio_buckley(f, w, p, scope)
                        elif kind == "hrt_ap":
                            row = ratio_hrt_ap(f, w, K, p, b if comm else None, scope, Tf)
                        else:
                            row = ratio_conjecture(f, w, K, p, scope, Tf)
                        rows.append(_label(row, eid, fn, wn, sname if comm else "",
                                           "" if kind == "buckley" else kname))
    asserted = kind != "conjecture" and e.get("assert", True)
    bound = registry.get("ratio", {}).get(_registry_key(e))
    return RatioReport(eid, kind, rows, bound, asserted)


def _label(row: RatioRow, eid, fn, wn, sname, kname) -> RatioRow:
    row.experiment, row.function, row.weight, row.symbol, row.kernel = eid, fn, wn, sname, kname
    parts = [fn, wn] + [f"{k}={getattr(row, k):g}" for k in ("p", "r", "theta", "q")
                        if getattr(row, k) is not None]
    row.case = "|".join(parts)
    return row


def _run_exp_symbol(cfg: ExperimentConfig, e: dict) -> RatioReport:
    """``[e^{s b}]_{A_p}^{1/p}`` for unit-BMO symbols and ``|s| <= alpha min(1, p-1)``.

    The fitted value of the report is an empirical ``beta``; only finiteness
    is asserted.
    """
    alpha, steps = float(e.get("alpha", 0.5)), int(e.get("steps", 11))
    rows = []
    for sname in cfg.select(cfg.symbols, e.get("symbols", list(cfg.symbols))):
        b = cfg.symbol(sname)
        b = b.normalized(cfg.scope) if b.norm(cfg.scope) > 0 else b
        for p in _as_list(e.get("p", 2.0)):
            smax = alpha * min(1.0, p - 1)
            for sv in np.linspace(-smax, smax, steps):
                ap = exp_symbol_ap(b, float(sv), p, cfg.scope)
                rows.append(RatioRow(experiment=e["id"], case=f"{sname}|p={p:g}|s={sv:.6g}",
                                     symbol=sname, variant="exp", p=p, ap=ap, fnorm=1.0,
                                     lhs=ap ** (1.0 / p), rhs=1.0))
    return RatioReport(e["id"], "exp_symbol", rows, sys.float_info.max, True)


def _run_verify(cfg: ExperimentConfig, e: dict, registry: dict) -> RatioReport:
    lemma = e["lemma"]
    runner, asserted = LEMMAS[lemma]
    cases = lemma_corpus(int(e.get("cases", 120)), int(e.get("resolution", 256)),
                         int(e.get("dimension", 1)), int(e.get("seed", 0)))
    kwargs = {}
    if lemma == "rhi":
        kwargs["tau"] = registry["tau"]
    if lemma == "rubio":
        kwargs["norm_factor"] = registry.get("rdf_norm_factor", 1.0)
    rows = []
    for c in runner(cases, **kwargs):
        rows.append(RatioRow(experiment=e["id"], case=c.case, variant=lemma,
                             lhs=float(c.lhs), rhs=float(c.rhs), fnorm=float(c.rhs)))
    if asserted:
        bound = 1.0 + 1e-9
    else:
        bound = registry.get("ratio", {}).get(e["id"])
    return RatioReport(e["id"], "verify", rows, bound, asserted or bound is not None)


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_reports(reports: list, out_dir, stem: str = "report") -> tuple:
    """Long-format CSV (one row per case) plus a JSON summary; returns both paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(COLUMNS)
    for rep in sorted(reports, key=lambda r: r.experiment):
        for row in rep.rows:
            d = row.as_dict()
            writer.writerow([_fmt(d[c]) for c in COLUMNS])
    csv_path = out / f"{stem}.csv"
    csv_path.write_text(buf.getvalue())
    summary = {"experiments": [r.summary() for r in sorted(reports, key=lambda r: r.experiment)],
               "passed": all(r.passed for r in reports)}
    json_path = out / f"{stem}.json"
    json_path.write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    return csv_path, json_path


def run_suite(config, out_dir=None, registry: dict = None, log: Callable = None) -> tuple:
    """Run every experiment of ``config`` (a path or :class:`ExperimentConfig`).

    Returns ``(exit_code, reports)``; reports are written even on failure.
    """
    try:
        cfg = config if isinstance(config, ExperimentConfig) else load_config(config)
    except ConfigError as exc:
        if log:
            log(str(exc))
        return EXIT_USAGE, []
    reports = []
    try:
        for e in cfg.experiments:
            rep = run_experiment(cfg, e, registry)
            reports.append(rep)
            if log:
                s = rep.summary()
                log(f"{s['experiment']:<28} rows={s['rows']:<5} max={s['max_ratio']:.4g} "
                    f"bound={s['bound']} {'PASS' if s['passed'] else 'FAIL'}")
    except NumericError as exc:
        if log:
            log(f"numeric error: {exc}")
        write_reports(reports, out_dir or cfg.output, cfg.name)
        return EXIT_NUMERIC, reports
    except ConfigError as exc:
        if log:
            log(str(exc))
        return EXIT_USAGE, reports
    write_reports(reports, out_dir or cfg.output, cfg.name)
    return (EXIT_PASS if all(r.passed for r in reports) else EXIT_FAIL), reports


# -- decomposition and domination tables ------------------------------------

def reconstruction_errors(f: SampledFunction, K: KernelSpec, plan: DecompositionPlan,
                          j_max: int = None) -> list:
    """Relative L2 error of ``sum_{j<=J}`` pieces against ``T f`` for ``J = 0..j_max``."""
    j_max = plan.j_max if j_max is None else j_max
    direct = apply_t_omega(f, K).values
    scale = np.linalg.norm(direct)
    acc = np.zeros_like(direct)
    errs = []
    for j in range(j_max + 1):
        acc = acc + lp_piece_apply(f, K, plan, j).values
        errs.append(float(np.linalg.norm(acc - direct) / scale) if scale > 0 else 0.0)
    return errs


def domination_table(functions: list, K: KernelSpec, b=None) -> list:
    """``c_fit`` and violations of ``|T f|`` (or ``|[b,T] f|``) against the shifted sparse sum."""
    out = []
    T = _apply(K)
    for f in functions:
        direct = commutator_apply(b, T, f) if b is not None else T(f)
        fit = domination_fit(f, direct, shifted_families(f), b=b)
        out.append(fit)
    return out


# -- calibration ------------------------------------------------------------

def _tau_for(cases, margin_ratio: float = 1.8) -> float:
    """Smallest tau (to 2 significant digits, rounded up) keeping every worst ratio below ``margin_ratio``."""
    lo, hi = 1e-3, 1e3

    def ok(t):
        return all(rhi_check(c.w, t).worst_ratio <= margin_ratio for c in cases)

    if not ok(hi):
        raise NumericError("reverse Hoelder fails even for tau = 1e3")
    for _ in range(60):
        mid = np.sqrt(lo * hi)
        lo, hi = (lo, mid) if ok(mid) else (mid, hi)
    digits = 10 ** (np.floor(np.log10(hi)) - 1)
    return float(np.ceil(hi / digits) * digits)


def calibrate(config=None, path=None, log: Callable = None) -> dict:
    """Fit every unvalued constant on seeds disjoint from the acceptance runs and freeze it.

    Ratio experiments use the config with ``calibration_seed_offset`` added
    to each seed; corpus lemmas use corpus seed 1 (acceptance uses 0).
    """
    cfg = config if isinstance(config, ExperimentConfig) else load_config(config or DEFAULT_CONFIG)
    say = log or (lambda *_: None)
    cal = cfg.with_seed_offset(cfg.calibration_seed_offset)
    cases = lemma_corpus(120, 256, 1, seed=1)
    entries = {"headroom": HEADROOM, "rdf_norm_factor": 1.0}

    entries["tau"] = _tau_for(cases)
    say(f"tau = {entries['tau']}")

    provisional = dict(entries, ratio={})
    ratios = {}
    for e in cal.experiments:
        if e["kind"] in ("conjecture", "exp_symbol"):
            continue
        if e["kind"] == "verify":
            if LEMMAS[e["lemma"]][1]:
                continue
            rep = _run_verify(cal, dict(e, seed=1), provisional)
        else:
            rep = run_experiment(cal, e, provisional)
        ratios[e["id"]] = HEADROOM * rep.max_ratio
        say(f"{e['id']}: fitted {rep.max_ratio:.6g}")
    entries["ratio"] = ratios

    alphas = (0.25, 0.5, 1.0)
    fine = np.linspace(0.005, 0.995, 199)
    entries["summation"] = {f"{a:g}": HEADROOM * max(t * summation_bound(a, t) for t in fine)
                            for a in alphas}

    grid = GridSpec.uniform(1, 4096)
    K = kernel_from_name("hilbert")
    plan = DecompositionPlan(1)
    bump = make_function("bump", {"center": 0.1, "width": 0.3}, grid)
    errs = reconstruction_errors(bump, K, plan)
    entries["reconstruction_threshold"] = max(HEADROOM * errs[-1], 1e-12)
    scan = piece_decay_scan(K, plan, 2.0, grid)
    entries["decay_alpha"] = {"hilbert": scan.alpha}

    fits = {}
    for res in (1024, 4096):
        g = GridSpec.uniform(1, res)
        fs = [make_function("bump", {"seed": cfg.calibration_seed_offset + s}, g) for s in range(10)]
        b = make_symbol("linear", {}, g).base
        fits[res] = (max(d.c_fit for d in domination_table(fs, K)),
                     max(d.c_fit for d in domination_table(fs, K, b)))
    entries["domination"] = {"c_n": HEADROOM * max(v[0] for v in fits.values()),
                             "c_n_commutator": HEADROOM * max(v[1] for v in fits.values())}
    out = write_registry(entries, path)
    say(f"registry written to {out}")
    return entries
