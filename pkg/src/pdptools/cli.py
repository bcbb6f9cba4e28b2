"""Command-line interface.

Exit codes: 0 success, 2 invalid configuration, 3 verification failure,
4 resource cap exceeded.  Errors are reported as one line on stderr of the
form ``pdptools: error[<kind>]: <message>``.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from typing import Sequence

import numpy as np

from . import __version__
from .core import PdParams, SizeBiasedPartition
from .discrete import evidence_indicators, evidence_multiplicities
from .errors import PdpError, ResourceCapError
from .fragcoag import sample_tree
from .laws import (
    approx_expected_M,
    approx_var_M,
    dirichlet_series_bound,
    evidence_nonatomic,
    expected_M,
    expected_M_geometric,
    expected_M_zeta,
    geometric_bound,
    partition_size_pmf,
    var_M,
)
from .samplers import NonAtomicBase, sample_crp, sample_gem, sample_pdd, sample_pdp, spawn_rngs
from .stirling import build_log_table, build_ratio_table
from .verify import run_suite

OUTPUT_DIR_ENV = "PDPTOOLS_OUTPUT_DIR"

EXIT_OK, EXIT_CONFIG, EXIT_VERIFY, EXIT_RESOURCE = 0, 2, 3, 4


class ConfigError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def _g(x) -> str:
    x = float(x)
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return f"{x:.17g}"


def _csv(header: Sequence[str], rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_g(v) if isinstance(v, (float, np.floating)) else v for v in row])
    return buf.getvalue()


def _json(obj) -> str:
    return json.dumps(obj, separators=(",", ":"), sort_keys=True) + "\n"


def _table_out(args, header, rows, extra=None) -> str:
    rows = list(rows)
    if args.format == "json":
        obj = {"columns": list(header), "rows": [[float(v) if isinstance(v, np.floating) else v for v in r] for r in rows]}
        if extra:
            obj.update(extra)
        return _json(obj)
    return _csv(header, rows)


def _params(args) -> PdParams:
    return PdParams(args.a, args.b)


def _rngs(args):
    return spawn_rngs(args.seed, args.replicates)


# ----------------------------------------------------------------- commands


def cmd_sample(args) -> str:
    P = _params(args)
    kind = args.kind
    if kind in ("gem", "pdd"):
        draw = sample_gem if kind == "gem" else sample_pdd
        rows = []
        for r, rng in enumerate(_rngs(args)):
            wv = draw(P, rng, mass_epsilon=args.mass_epsilon, max_atoms=args.max_atoms)
            rows.extend((r, k, float(w)) for k, w in enumerate(wv.weights, start=1))
            rows.append((r, "residual", float(wv.residual)))
        return _table_out(args, ("replicate", "k", "weight"), rows)
    _need_n(args)
    if kind == "crp":
        rows = []
        for r, rng in enumerate(_rngs(args)):
            part = sample_crp(P, args.n, rng)
            rows.extend((r, i, m) for i, m in enumerate(part.assignments, start=1))
        return _table_out(args, ("replicate", "item", "block"), rows)
    if kind == "pdp":
        rows = []
        for r, rng in enumerate(_rngs(args)):
            data, part = sample_pdp(P, NonAtomicBase(), args.n, rng)
            rows.extend((r, i, m, float(x)) for i, (m, x) in enumerate(zip(part.assignments, data), start=1))
        return _table_out(args, ("replicate", "item", "block", "value"), rows)
    # tree
    schedule = _schedule(args)
    trees = [sample_tree(args.n, schedule, args.b, len(schedule), rng) for rng in _rngs(args)]
    if args.format == "json":
        if len(trees) == 1:
            return _json(trees[0].to_dict())
        return _json([t.to_dict() for t in trees])
    rows = []
    for r, tree in enumerate(trees):
        d = tree.to_dict()
        parent = {e["child"]: e["parent"] for e in d["edges"]}
        rows.extend(
            (r, n["id"], n["depth"], parent.get(n["id"], ""), " ".join(map(str, n["members"]))) for n in d["nodes"]
        )
    return _csv(("replicate", "id", "depth", "parent", "members"), rows)


def _schedule(args):
    if not args.schedule:
        raise ConfigError("sample tree needs --schedule")
    try:
        schedule = tuple(float(x) for x in args.schedule.split(","))
    except ValueError as exc:
        raise ConfigError(f"bad --schedule: {exc}") from None
    if args.maxdepth is not None and args.maxdepth != len(schedule):
        raise ConfigError(f"--maxdepth {args.maxdepth} disagrees with a schedule of length {len(schedule)}")
    if args.a is not None and args.a != schedule[0]:
        raise ConfigError("--a must equal the first schedule entry when both are given")
    return schedule


def _need_n(args):
    if args.n is None or args.n < 1:
        raise ConfigError("--n must be a positive integer")


def cmd_table(args) -> str:
    _need_n(args)
    if args.kind == "stirling":
        table = build_log_table(args.a, args.n, t_max=args.t_max or args.n, stripe=args.stripe)
        body = table.to_csv()
        value = "log_S"
    else:
        table = build_ratio_table(args.a, args.n, t_max=args.t_max)
        body = table.to_csv()
        value = "V"
    if args.format == "csv":
        return body
    rows = [line.split(",") for line in body.splitlines()[1:]]
    return _json({"a": args.a, "columns": ["n", "t", value], "rows": [[int(n), int(t), float(v)] for n, t, v in rows]})


def cmd_pmf(args) -> str:
    _need_n(args)
    pmf = partition_size_pmf(args.n, _params(args))
    return _table_out(args, ("M", "probability"), ((m, float(p)) for m, p in enumerate(pmf, start=1)))


def cmd_moments(args) -> str:
    _need_n(args)
    P = _params(args)
    rows = [
        ("mean", expected_M(P, args.n), approx_expected_M(P, args.n)),
        ("variance", var_M(P, args.n), approx_var_M(P, args.n)),
    ]
    return _table_out(args, ("quantity", "exact", "approx"), rows)


def cmd_bounds(args) -> str:
    Ns = [int(float(x)) for x in args.ns.split(",")]
    rows = []
    for kind, params, bound, oracle in (
        ("geometric", args.r, geometric_bound, expected_M_geometric),
        ("zeta", args.s, dirichlet_series_bound, expected_M_zeta),
    ):
        if args.kind not in ("all", kind):
            continue
        for p in (float(x) for x in params.split(",")):
            for N in Ns:
                bnd, orc = bound(p, N), oracle(p, N)
                rows.append((kind, p, N, bnd, orc, bnd - orc))
    return _table_out(args, ("family", "parameter", "N", "bound", "oracle", "slack"), rows)


def read_counts(path: str) -> list[tuple[int, int | None, float]]:
    """Rows ``count,multiplicity,log_base_mass``; the multiplicity may be blank
    or the column omitted.  A header line and ``#`` comments are skipped."""
    out = []
    with open(path, newline="") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            cells = [c.strip() for c in line.split(",")]
            if lineno == 1 and not cells[0].lstrip("-").isdigit():
                continue
            try:
                if len(cells) == 2:
                    out.append((int(cells[0]), None, float(cells[1])))
                elif len(cells) == 3:
                    out.append((int(cells[0]), int(cells[1]) if cells[1] else None, float(cells[2])))
                else:
                    raise ValueError(f"expected 2 or 3 columns, got {len(cells)}")
            except ValueError as exc:
                raise ConfigError(f"{path}:{lineno}: {exc}") from None
    if not out:
        raise ConfigError(f"{path}: no rows")
    return out


def cmd_evidence(args) -> str:
    P = _params(args)
    rows_in = read_counts(args.counts)
    counts = [c for c, _, _ in rows_in]
    if any(c < 1 for c in counts):
        raise ConfigError("counts must be positive")
    base_log = [lb for _, _, lb in rows_in]
    mults = [t for _, t, _ in rows_in]
    labels = [m for m, c in enumerate(counts, start=1) for _ in range(c)]
    part = SizeBiasedPartition(tuple(labels))
    rows = [("nonatomic", evidence_nonatomic(part, base_log, P))]
    if all(t is not None for t in mults):
        ev = evidence_multiplicities(counts, mults, base_log, P)
        rows.append(("multiplicity", ev))
        # one indicator pattern: the first t_m items of each value carry indicators
        ind = [1 if i < t else 0 for c, t in zip(counts, mults) for i in range(c)]
        rows.append(("indicator", evidence_indicators(part, ind, base_log, P)))
    elif any(t is not None for t in mults):
        raise ConfigError("multiplicity column must be filled on every row or none")
    return _table_out(args, ("form", "log_evidence"), rows)


def cmd_verify(args) -> str:
    def report(line):
        print(line, file=sys.stdout, flush=True)

    results, timing = run_suite(args.kind, seed=args.seed, report=report)
    args._verify_failed = not (all(r.passed for r in results) and timing.passed)
    return ""


def cmd_pdd_curves(args) -> str:
    P = _params(args)
    rows = []
    for r, rng in enumerate(_rngs(args)):
        wv = sample_pdd(P, rng, mass_epsilon=args.mass_epsilon, max_atoms=args.max_atoms)
        rows.extend((r, k, float(w)) for k, w in enumerate(wv.weights[: args.points], start=1))
    return _table_out(args, ("replicate", "rank", "weight"), rows)


# ------------------------------------------------------------------- parser


def _common(p, need_ab=True):
    p.add_argument("--a", type=float, default=None if not need_ab else 0.0, help="discount, 0 <= a < 1")
    p.add_argument("--b", type=float, default=1.0, help="concentration, b > -a")
    p.add_argument("--n", type=int, help="number of items")
    p.add_argument("--seed", type=int, default=0, help="64-bit seed (default 0)")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--output", help="output file; default stdout or $" + OUTPUT_DIR_ENV)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="pdptools", description="Pitman-Yor / Poisson-Dirichlet toolkit")
    parser.add_argument("--version", action="version", version=f"pdptools {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("sample", help="draw weights, partitions, data or trees")
    p.add_argument("kind", choices=("gem", "pdd", "crp", "pdp", "tree"))
    _common(p, need_ab=False)
    p.add_argument("--replicates", type=int, default=1)
    p.add_argument("--mass-epsilon", type=float, default=1e-12)
    p.add_argument("--max-atoms", type=int, default=10**6)
    p.add_argument("--schedule", help="comma-separated discounts for trees")
    p.add_argument("--maxdepth", type=int)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("table", help="dump a Stirling log table or ratio table")
    p.add_argument("kind", choices=("stirling", "ratio"))
    _common(p)
    p.add_argument("--t-max", type=int)
    p.add_argument("--stripe", type=int, default=1)
    p.set_defaults(func=cmd_table)

    p = sub.add_parser("pmf", help="law of the number of blocks")
    _common(p)
    p.set_defaults(func=cmd_pmf)

    p = sub.add_parser("moments", help="mean and variance of the number of blocks")
    _common(p)
    p.set_defaults(func=cmd_moments)

    p = sub.add_parser("bounds", help="series bounds on the expected number of distinct draws")
    _common(p)
    p.add_argument("--kind", choices=("all", "geometric", "zeta"), default="all")
    p.add_argument("--r", default="0.3,0.5,0.8,0.95", help="geometric ratios")
    p.add_argument("--s", default="1.5,2,3", help="zeta exponents")
    p.add_argument("--ns", default="100,1000,10000,1000000", help="sample sizes")
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("evidence", help="log evidence of a counts file")
    _common(p)
    p.add_argument("--counts", required=True, help="CSV rows count,multiplicity,log_base_mass")
    p.set_defaults(func=cmd_evidence)

    p = sub.add_parser("verify", help="run the built-in acceptance checks")
    p.add_argument("kind", choices=("quick", "full"))
    p.add_argument("--seed", type=int, default=20240521)
    p.set_defaults(func=cmd_verify, format="csv", output=None)

    p = sub.add_parser("pdd-curves", help="sorted weight samples for rank plots")
    _common(p)
    p.add_argument("--replicates", type=int, default=1)
    p.add_argument("--points", type=int, default=1000)
    p.add_argument("--mass-epsilon", type=float, default=1e-12)
    p.add_argument("--max-atoms", type=int, default=10**6)
    p.set_defaults(func=cmd_pdd_curves)
    return parser


def _validate(args):
    if not 0 <= args.seed < 2**64:
        raise ConfigError("--seed must be in [0, 2^64)")
    if getattr(args, "a", None) is None and getattr(args, "kind", None) != "tree" and args.command == "sample":
        args.a = 0.0
    if args.command == "sample" and args.kind == "tree":
        schedule = _schedule(args)
        args.a = schedule[0]
    if getattr(args, "a", None) is not None and hasattr(args, "b"):
        PdParams(args.a, args.b)
    for name in ("replicates", "points", "max_atoms", "stripe"):
        if getattr(args, name, 1) is not None and getattr(args, name, 1) < 1:
            raise ConfigError(f"--{name.replace('_', '-')} must be positive")


def _destination(args) -> str | None:
    if args.output:
        return args.output
    root = os.environ.get(OUTPUT_DIR_ENV)
    if not root:
        return None
    stem = args.command + (f"-{args.kind}" if hasattr(args, "kind") and isinstance(args.kind, str) else "")
    return os.path.join(root, f"{stem}.{args.format}")


def _fail(kind: str, message: str, code: int) -> int:
    message = " ".join(str(message).split())
    print(f"pdptools: error[{kind}]: {message}", file=sys.stderr)
    return code


def main(argv: Sequence[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        _validate(args)
        args._verify_failed = False
        text = args.func(args)
        dest = _destination(args)
        if text:
            if dest:
                os.makedirs(os.path.dirname(os.path.abspath(dest)), exist_ok=True)
                with open(dest, "w", newline="") as fh:
                    fh.write(text)
            else:
                sys.stdout.write(text)
        if args._verify_failed:
            return _fail("verification", "one or more checks failed", EXIT_VERIFY)
        return EXIT_OK
    except ConfigError as exc:
        return _fail("config", exc, EXIT_CONFIG)
    except ResourceCapError as exc:
        return _fail("resource", exc, EXIT_RESOURCE)
    except (PdpError, ValueError, OSError) as exc:
        return _fail("config", exc, EXIT_CONFIG)
    except MemoryError as exc:
        return _fail("resource", exc or "out of memory", EXIT_RESOURCE)


if __name__ == "__main__":
    sys.exit(main())
