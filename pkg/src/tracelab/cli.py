"""Command-line front end.

Exit codes: 0 success, 1 validation failure, 2 budget exceeded, 64 usage error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__
from .cache import TableCache
from .config import CACHE_ENV, Config
from .experiments import ScanPlan, dimension_census, semidirect_scan, vanishing_scan
from .gns import center, decompose_trace, gns, invariant_vectors
from .groups import BudgetExceeded, IntegerMatrix, build_group
from .relative import OrbitBudgetExceeded, torus_limit_scan
from .spectral import GroupAlgebraElement, norm_conj, norm_pi
from .traces import ClassFunctionTrace, constant_trace, delta_trace, is_trace

EXIT_OK, EXIT_INVALID, EXIT_BUDGET, EXIT_USAGE = 0, 1, 2, 64


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


# ---------------------------------------------------------------------------
# argument helpers


def _ints(text: str) -> list[int]:
    try:
        return [int(x) for x in text.replace(" ", "").split(",") if x]
    except ValueError:
        raise UsageError(f"expected a comma-separated integer list, got {text!r}") from None


def _matrix(text: str) -> np.ndarray:
    """Rows separated by ';', entries by ','."""
    try:
        rows = [[int(x) for x in r.split(",")] for r in text.replace(" ", "").split(";")]
        return np.array(rows, dtype=np.int64)
    except ValueError:
        raise UsageError(f"malformed matrix {text!r}") from None


def parse_trace(spec: str, group, table) -> ClassFunctionTrace:
    """``irr:i``, ``delta``, ``one`` or ``mix:w*irr:i+w*irr:j`` with rational weights."""
    spec = spec.strip()
    if spec == "delta":
        return delta_trace(group, table)
    if spec == "one":
        return constant_trace(group, table)
    if spec.startswith("irr:"):
        i = int(spec[4:])
        if not 0 <= i < table.k:
            raise ValueError(f"row {i} out of range 0..{table.k - 1}")
        return ClassFunctionTrace.from_table_row(table, i, group)
    if spec.startswith("mix:"):
        weights: dict[int, Fraction] = {}
        for part in spec[4:].split("+"):
            w, _, term = part.partition("*")
            if not term.startswith("irr:"):
                raise UsageError(f"malformed mixture term {part!r}")
            i = int(term[4:])
            weights[i] = weights.get(i, Fraction(0)) + Fraction(w)
        if sum(weights.values()) != 1 or any(w < 0 for w in weights.values()):
            raise ValueError("mixture weights must be nonnegative and sum to 1")
        if any(not 0 <= i < table.k for i in weights):
            raise ValueError("mixture row out of range")
        return ClassFunctionTrace.from_components(table, weights, group, spec)
    raise UsageError(f"unknown trace spec {spec!r}")


def parse_element(spec: str, group) -> GroupAlgebraElement:
    if spec == "uniform-gens":
        gens = sorted({int(s) for s in group.generators} | {int(group.inv(s)) for s in group.generators})
        return GroupAlgebraElement.uniform(gens, group)
    if spec.startswith("uniform:"):
        return GroupAlgebraElement.uniform(_ints(spec[8:]), group)
    raise UsageError(f"unknown element spec {spec!r}")


def _fmt_complex(z, eps: float = 1e-10) -> str:
    z = complex(z)
    re_, im = (0.0 if abs(z.real) < eps else z.real), (0.0 if abs(z.imag) < eps else z.imag)
    return f"{re_:.10g}" if im == 0 else f"{re_:.10g}{im:+.10g}j"


def _jsonable(x):
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating,)):
        return float(x)
    if isinstance(x, complex):
        return [x.real, x.imag]
    if isinstance(x, Fraction):
        return str(x)
    if isinstance(x, Path):
        return str(x)
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    return x


def _dump(obj) -> str:
    return json.dumps(_jsonable(obj), sort_keys=True, indent=1)


def _manifest(args, cfg: Config, outputs: dict[str, str]) -> dict:
    argv = json.dumps(getattr(args, "_argv", []))
    return {
        "version": __version__,
        "command": args.command,
        "argv_sha256": hashlib.sha256(argv.encode()).hexdigest(),
        "config": cfg.echo(),
        "outputs": {k: hashlib.sha256(v.encode()).hexdigest() for k, v in outputs.items()},
    }


def _write(path: str | Path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)


def _table(cfg: Config, desc: str):
    group = build_group(desc, cfg.order_budget)
    cache = TableCache(cfg.cache_dir)
    return group, cache.get_or_compute(desc, group, class_budget=cfg.class_budget), cache


# ---------------------------------------------------------------------------
# subcommands


def cmd_chartable(args, cfg):
    group, table, cache = _table(cfg, args.group)
    degs = sorted(int(d) for d in table.degrees)
    print(f"{table.descriptor}: order {table.order}, {table.k} classes")
    print("degrees {" + ",".join(map(str, degs)) + "}")
    print(f"cache {'hit' if cache.hits else 'miss'}: {cache.path(args.group)}")
    if args.show:
        for i, row in enumerate(table.values):
            print(i, " ".join(str(v) for v in row))
    return EXIT_OK


def cmd_trace_check(args, cfg):
    group, table, _ = _table(cfg, args.group)
    phi = parse_trace(args.trace, group, table)
    rep = is_trace(phi, tol=0.0 if args.exact else cfg.tol, seed=cfg.seed)
    print(_dump(rep.__dict__ | {"ok": rep.ok}))
    return EXIT_OK if rep.ok else EXIT_INVALID


def cmd_gns(args, cfg):
    group, table, _ = _table(cfg, args.group)
    phi = parse_trace(args.trace, group, table)
    model = gns(phi)
    inv = invariant_vectors(model).shape[1]
    cd = center(model, seed=cfg.seed)
    out = {"trace": phi.label, "dim_H": model.dim, "dim_invariant": inv, "dim_center": cd.dim,
           "center_method": cd.method, "is_character": inv == 1}
    print(_dump(out))
    if args.out:
        _write(args.out, model.to_json())
    return EXIT_OK


def cmd_decompose(args, cfg):
    group, table, _ = _table(cfg, args.group)
    phi = parse_trace(args.trace, group, table)
    parts = decompose_trace(phi, seed=cfg.seed)
    for w, chi in parts:
        print(f"{w:.12g}\t" + " ".join(_fmt_complex(z) for z in chi.class_values))
    return EXIT_OK


def cmd_gap(args, cfg):
    group, table, _ = _table(cfg, args.group)
    phi = parse_trace(args.trace, group, table)
    a = parse_element(args.a, group)
    fn = {"pi": norm_pi, "conj": norm_conj}[args.lemma]
    rep = fn(phi, a, args.beta, seed=cfg.seed, tol=cfg.tol)
    text = _dump(rep.to_dict())
    print(text)
    out = args.out or f"gap-{args.lemma}.json"
    _write(out, text + "\n")
    _write(Path(out).with_suffix(".manifest.json"), _dump(_manifest(args, cfg, {out: text})) + "\n")
    return EXIT_OK if rep.agree else EXIT_INVALID


def cmd_scan_vanishing(args, cfg):
    if args.plan:
        try:
            plan = ScanPlan.from_json(Path(args.plan).read_text())
        except (json.JSONDecodeError, TypeError, KeyError) as exc:
            raise UsageError(f"malformed plan: {exc}") from None
    else:
        if not (args.moduli and args.probe):
            raise UsageError("give --plan or both --moduli and --probe")
        probes = [IntegerMatrix.of(_matrix(p)) for p in args.probe]
        plan = ScanPlan(args.family, args.d, _ints(args.moduli), probes, args.filter,
                        order_budget=cfg.order_budget, class_budget=cfg.class_budget, seed=cfg.seed)
    series = vanishing_scan(plan, cfg.cache_dir, cfg.workers)
    text = series.to_csv()
    sys.stdout.write(text)
    for f in series.flags:
        print(f"# {f}", file=sys.stderr)
    out = args.out or plan.output
    if out:
        series.write(out, plan.to_dict(), cfg.echo())
    return EXIT_BUDGET if series.truncated_at is not None else EXIT_OK


def cmd_scan_semidirect(args, cfg):
    a = _matrix(args.probe_a) if args.probe_a else np.eye(args.d, dtype=np.int64)
    v = _ints(args.probe_v)
    if len(v) != args.d:
        raise ValueError("translation part has the wrong length")
    series = semidirect_scan(args.d, _ints(args.primes), (a, v), cfg.cache_dir, cfg.order_budget,
                             cfg.workers)
    sys.stdout.write(series.to_csv())
    for f in series.flags:
        print(f"# {f}", file=sys.stderr)
    if args.out:
        series.write(args.out, {"d": args.d, "primes": _ints(args.primes), "a": a, "v": v},
                     cfg.echo())
    return EXIT_BUDGET if series.truncated_at is not None else EXIT_OK


def cmd_scan_torus(args, cfg):
    qs = _ints(args.q) if args.q else list(range(2, args.qmax + 1))
    series = torus_limit_scan(args.d, qs, args.ball, cfg.orbit_budget)
    text = series.to_csv()
    if args.out:
        _write(args.out, text)
        man = _manifest(args, cfg, {args.out: text}) | {"maxima": series.maxima,
                                                        "flags": series.flags}
        _write(Path(args.out).with_suffix(".manifest.json"), _dump(man) + "\n")
        for q, m in series.maxima.items():
            print(f"q={q}\tmax|phi|={m:.12g}\t{series.flags.get(q, '')}".rstrip())
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_census(args, cfg):
    c = dimension_census(_ints(args.moduli), args.family, args.d, cfg.cache_dir, cfg.order_budget)
    for m, ds in c.degrees.items():
        print(f"{m}\tlinear={c.linear[m]}\tdegrees {{" + ",".join(map(str, ds)) + "}")
    print("degree\tmoduli containing it")
    for deg, n in c.aggregate.items():
        print(f"{deg}\t{n}")
    if args.out:
        _write(args.out, c.to_csv())
    return EXIT_BUDGET if c.truncated_at is not None else EXIT_OK


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="tracelab", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("--cache-dir", help=f"table cache (default ${CACHE_ENV} or ~/.cache/tracelab)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tol", type=float, default=1e-9)
    p.add_argument("--order-budget", type=int, default=Config.order_budget)
    p.add_argument("--class-budget", type=int, default=Config.class_budget)
    p.add_argument("--orbit-budget", type=int, default=Config.orbit_budget)
    p.add_argument("--workers", type=int, default=1)
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    s = sub.add_parser("chartable", help="compute or load a character table")
    s.add_argument("group")
    s.add_argument("--show", action="store_true", help="print the exact values")
    s.set_defaults(fn=cmd_chartable)

    for name, fn, hlp in (("trace-check", cmd_trace_check, "test the trace axioms"),
                          ("gns", cmd_gns, "GNS dimensions and center"),
                          ("decompose", cmd_decompose, "split a trace into characters")):
        s = sub.add_parser(name, help=hlp)
        s.add_argument("--group", required=True)
        s.add_argument("--trace", required=True, help="irr:i, delta, one or mix:w*irr:i+...")
        if name == "trace-check":
            s.add_argument("--exact", action="store_true")
        if name == "gns":
            s.add_argument("--out")
        s.set_defaults(fn=fn)

    s = sub.add_parser("gap", help="compare a norm bound with its trace inequality")
    s.add_argument("--group", required=True)
    s.add_argument("--trace", required=True)
    s.add_argument("--a", default="uniform-gens", help="uniform-gens or uniform:i,j,...")
    s.add_argument("--beta", type=float, required=True)
    s.add_argument("--lemma", choices=("pi", "conj"), default="pi")
    s.add_argument("--out")
    s.set_defaults(fn=cmd_gap)

    s = sub.add_parser("scan-vanishing", help="character values at probes over moduli")
    s.add_argument("--plan")
    s.add_argument("--family", default="sl", choices=("sl", "aff"))
    s.add_argument("--d", type=int, default=2)
    s.add_argument("--moduli")
    s.add_argument("--probe", action="append", help="matrix as 'a,b;c,d' (repeatable)")
    s.add_argument("--filter", default="nontrivial", choices=("nontrivial", "faithful"))
    s.add_argument("--out")
    s.set_defaults(fn=cmd_scan_vanishing)

    s = sub.add_parser("scan-semidirect", help="vanishing over SL_d(F_p) x| F_p^d")
    s.add_argument("--d", type=int, default=3)
    s.add_argument("--primes", required=True)
    s.add_argument("--probe-a", help="linear part 'a,b,c;...' (default identity)")
    s.add_argument("--probe-v", required=True, help="translation part 'x,y,...'")
    s.add_argument("--out")
    s.set_defaults(fn=cmd_scan_semidirect)

    s = sub.add_parser("scan-torus", help="orbit traces of rational torus points")
    s.add_argument("--d", type=int, default=3)
    s.add_argument("--qmax", type=int, default=13)
    s.add_argument("--q", help="explicit denominators instead of 2..qmax")
    s.add_argument("--ball", type=int, default=2)
    s.add_argument("--out")
    s.set_defaults(fn=cmd_scan_torus)

    s = sub.add_parser("census", help="irreducible degrees per modulus")
    s.add_argument("--family", default="sl", choices=("sl", "aff"))
    s.add_argument("--d", type=int, default=2)
    s.add_argument("--moduli", required=True)
    s.add_argument("--out")
    s.set_defaults(fn=cmd_census)
    return p


def main(argv: list[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError("a subcommand is required")
        args._argv = argv
        cfg = Config(args.cache_dir, args.order_budget, args.class_budget, args.orbit_budget,
                     args.tol, args.seed, args.workers)
        return args.fn(args, cfg)
    except UsageError as exc:
        print(parser.format_usage().rstrip(), file=sys.stderr)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (BudgetExceeded, OrbitBudgetExceeded) as exc:
        print(f"budget exceeded: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except ValueError as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
