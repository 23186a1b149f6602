"""Command-line entry point: ``cayleysparse {sparsify,profile,gadget,bench}``.

Group specs::

    cyclic:N | f2:K | dihedral:M | sym:M | product:SPEC,SPEC | table:PATH

``product:`` splits at its first comma, so nest products on the right
(``product:cyclic:2,product:cyclic:3,sym:3``).

Generator specs::

    all | I,J,... | file:PATH | random:COUNT[:SEED]

``random:`` draws ``COUNT`` distinct non-identity elements and, for undirected
modes, adds their inverses.

Exit codes: 0 success, 2 parse or config error, 3 verification failure,
4 numerical tolerance failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import re
import statistics
import sys
import time
from datetime import datetime, timezone
from pathlib import Path

from .cayley import (
    CayleyGraph,
    GeneratorSet,
    GeneratorSetError,
    edge_list,
    parse_generator_text,
    random_generators,
)
from .config import get_tolerances
from .gadget import GadgetError, build_and_gadget, verify_and_gadget
from .groups import (
    GroupActionError,
    GroupTable,
    GroupTableError,
    load_table,
    make_cyclic,
    make_dihedral,
    make_f2k,
    make_product,
    make_symmetric,
)
from .sparsifier import (
    DEFAULT_C,
    DEFAULT_SEED,
    LaplacianContext,
    important_count,
    importance_profile,
    importances,
    sample_sparsifier,
    sparsify_directed,
    sparsify_weighted,
    upper_triangular_greedy,
)
from .spectral import NumericalToleranceError
from .verify import (
    MAX_EXHAUSTIVE_VERTICES,
    verify_cuts_exhaustive,
    verify_cuts_sampled,
    verify_spectral,
)

SCHEMA_VERSION = 1
EXIT_OK, EXIT_CONFIG, EXIT_VERIFY, EXIT_NUMERIC = 0, 2, 3, 4
MODES = ("sparsify", "sparsify-weighted", "sparsify-directed")
DEFAULT_ALPHAS = (0.05, 0.1, 0.2, 0.5)
BENCH_FIELDS = (
    "group",
    "order",
    "gens",
    "mode",
    "eps",
    "trials",
    "pass_rate",
    "median_kept_pairs",
    "median_kept_generators",
    "runtime_s",
)


class ConfigError(ValueError):
    pass


# --- group and generator specs ------------------------------------------


def _positive_int(text: str, what: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise ConfigError(f"{what} must be an integer, got {text!r}") from None
    if v < 1:
        raise ConfigError(f"{what} must be positive, got {v}")
    return v


def parse_group(spec: str) -> GroupTable:
    kind, sep, arg = spec.partition(":")
    if not sep:
        raise ConfigError(f"bad group spec {spec!r}")
    if kind == "cyclic":
        return make_cyclic(_positive_int(arg, "cyclic order"))
    if kind == "f2":
        return make_f2k(_positive_int(arg, "f2 rank"))
    if kind == "dihedral":
        return make_dihedral(_positive_int(arg, "dihedral degree"))
    if kind == "sym":
        return make_symmetric(_positive_int(arg, "symmetric degree"))
    if kind == "product":
        left, comma, right = arg.partition(",")
        if not comma:
            raise ConfigError(f"product needs two comma-separated factors: {spec!r}")
        return make_product(parse_group(left), parse_group(right))
    if kind == "table":
        return load_table(arg)
    raise ConfigError(f"unknown group kind {kind!r}")


def parse_gens(spec: str, group: GroupTable, *, directed: bool, symmetrize: bool = False) -> GeneratorSet:
    if spec == "all":
        elems = [g for g in range(group.n) if g != group.identity]
        return GeneratorSet.build(group, elems, directed=directed)
    if spec.startswith("random:"):
        parts = spec.split(":")[1:]
        if len(parts) not in (1, 2):
            raise ConfigError(f"bad random generator spec {spec!r}")
        count = _positive_int(parts[0], "random generator count")
        seed = int(parts[1]) if len(parts) == 2 else 0
        return random_generators(group, count, seed, directed=directed)
    if spec.startswith("file:"):
        elems, weights = parse_generator_text(Path(spec[5:]).read_text())
        return GeneratorSet.build(group, elems, weights, directed=directed, symmetrize=symmetrize)
    try:
        elems = [int(t) for t in spec.split(",") if t.strip()]
    except ValueError:
        raise ConfigError(f"bad generator spec {spec!r}") from None
    if not elems:
        raise ConfigError("empty generator list")
    return GeneratorSet.build(group, elems, directed=directed, symmetrize=symmetrize)


def expand_group_range(spec: str) -> list[str]:
    """``f2:4..10`` expands to ``f2:4 .. f2:10``; other specs pass through."""
    m = re.fullmatch(r"(.*?)(\d+)\.\.(\d+)", spec)
    if not m:
        return [spec]
    prefix, lo, hi = m.group(1), int(m.group(2)), int(m.group(3))
    return [f"{prefix}{k}" for k in range(lo, hi + 1)]


def _check_eps_arg(eps: float) -> None:
    if not 0 < eps < 1:
        raise ConfigError(f"eps must lie in (0, 1), got {eps}")


# --- runs -----------------------------------------------------------------


def run_mode(h: CayleyGraph, mode: str, eps: float, big_c: float, seed: int, threads: int):
    if mode == "sparsify":
        return sample_sparsifier(h, eps, big_c, seed, threads=threads)
    if mode == "sparsify-weighted":
        return sparsify_weighted(h, eps, big_c, seed, threads=threads)
    return sparsify_directed(h, eps, big_c, seed, threads=threads)


def run_verification(h: CayleyGraph, h_tilde: CayleyGraph, kind: str, eps: float, trials: int, seed: int):
    if kind == "spectral":
        if h.directed:
            raise ConfigError("spectral verification needs an undirected mode; use cuts")
        return verify_spectral(h, h_tilde, eps)
    if kind == "cuts":
        if h.n > MAX_EXHAUSTIVE_VERTICES:
            raise ConfigError(f"exhaustive cuts need at most {MAX_EXHAUSTIVE_VERTICES} vertices; use cuts-sampled")
        return verify_cuts_exhaustive(h, h_tilde, eps)
    return verify_cuts_sampled(h, h_tilde, eps, trials, seed)


def _write_edges(path: Path, h: CayleyGraph) -> None:
    path.write_text("".join(f"{u} {v} {w!r}\n" for u, v, w in edge_list(h)))


def _emit(text: str, output: str | None) -> None:
    if output:
        Path(output).write_text(text)
    else:
        sys.stdout.write(text)


def _dump(report: dict, no_timestamp: bool) -> str:
    if not no_timestamp:
        report["timestamp"] = datetime.now(timezone.utc).isoformat()
    return json.dumps(report, indent=2) + "\n"


def cmd_sparsify(args) -> int:
    _check_eps_arg(args.eps)
    directed = args.mode == "sparsify-directed"
    group = parse_group(args.group)
    gens = parse_gens(args.gens, group, directed=directed, symmetrize=args.symmetrize)
    if args.mode == "sparsify" and not gens.is_unit_weight:
        raise ConfigError("weighted generators need --mode sparsify-weighted")
    h = CayleyGraph.cayley(group, gens)
    result = run_mode(h, args.mode, args.eps, args.C, args.seed, args.threads)
    h_tilde = result.graph(h)
    reports = [
        run_verification(h, h_tilde, kind, args.eps, args.trials, args.seed).to_dict()
        for kind in dict.fromkeys(args.verify or [])
    ]
    report = {
        "schemaVersion": SCHEMA_VERSION,
        "command": "sparsify",
        "group": group.name,
        "order": group.n,
        "gens": args.gens,
        "generatorCount": len(gens),
        "eps": args.eps,
        "C": args.C,
        "seed": args.seed,
        "result": result.to_dict(),
        "profile": result.profile.to_dict(),
        "verification": reports,
    }
    if args.export_edges:
        _write_edges(Path(f"{args.export_edges}.input.txt"), h)
        _write_edges(Path(f"{args.export_edges}.sparse.txt"), h_tilde)
    _emit(_dump(report, args.no_timestamp), args.output)
    return EXIT_OK if all(r["pass"] for r in reports) else EXIT_VERIFY


def cmd_profile(args) -> int:
    group = parse_group(args.group)
    gens = parse_gens(args.gens, group, directed=False, symmetrize=args.symmetrize)
    h = CayleyGraph.cayley(group, gens)
    try:
        alphas = sorted(float(a) for a in args.alphas.split(","))
    except ValueError:
        raise ConfigError(f"bad alpha list {args.alphas!r}") from None
    if any(not 0 < a <= 1 for a in alphas):
        raise ConfigError("alphas must lie in (0, 1]")
    ctx = LaplacianContext(h)
    imps = importances(h, context=ctx, threads=args.threads)
    ln3 = math.log(h.n) ** 3 if h.n > 1 else 0.0
    rows = []
    for a in alphas:
        count = important_count(h, a, imps=imps)
        steps = upper_triangular_greedy(h, a, args.C, context=ctx, imps=imps)
        rows.append(
            {
                "alpha": a,
                "importantCount": count,
                "reference": ln3 / a,
                "alphaTimesCount": a * count,
                "greedyLength": len(steps),
                "greedyReps": [s.rep for s in steps],
            }
        )
    report = {
        "schemaVersion": SCHEMA_VERSION,
        "command": "profile",
        "group": group.name,
        "order": group.n,
        "gens": args.gens,
        "C": args.C,
        "importances": {str(r): v for r, v in sorted(imps.items())},
        "importanceSum": sum(imps.values()),
        "rows": rows,
    }
    _emit(_dump(report, args.no_timestamp), args.output)
    return EXIT_OK


def cmd_gadget(args) -> int:
    group = parse_group(args.group)
    try:
        gadget = build_and_gadget(group, args.r)
    except GadgetError as exc:
        raise ConfigError(str(exc)) from None
    check = verify_and_gadget(gadget)
    report = {"schemaVersion": SCHEMA_VERSION, "command": "gadget"} | gadget.to_dict(bool(check))
    if check.witness is not None:
        report["witness"] = list(check.witness)
    _emit(_dump(report, args.no_timestamp), args.emit)
    return EXIT_OK if check else EXIT_VERIFY


def _bench_rows(specs: list[str]) -> list[tuple[str, str, str]]:
    rows = []
    for spec in specs:
        parts = spec.split(";")
        if len(parts) not in (2, 3):
            raise ConfigError(f"bench row must be GROUP;GENS[;undirected|directed], got {spec!r}")
        kind = parts[2] if len(parts) == 3 else "undirected"
        if kind not in ("undirected", "directed"):
            raise ConfigError(f"unknown bench row kind {kind!r}")
        rows += [(g, parts[1], kind) for g in expand_group_range(parts[0])]
    return rows


def bench_row(group_spec: str, gens_spec: str, kind: str, eps: float, trials: int, big_c: float,
              seed: int, threads: int, cut_trials: int) -> dict:
    group = parse_group(group_spec)
    directed = kind == "directed"
    gens = parse_gens(gens_spec, group, directed=directed)
    h = CayleyGraph.cayley(group, gens)
    start = time.perf_counter()
    passes, pairs, kept = 0, [], []
    if directed:
        mode = "sparsify-directed"
    else:
        mode = "sparsify" if gens.is_unit_weight else "sparsify-weighted"
    ctx = profile = None
    if mode == "sparsify":
        ctx = LaplacianContext(h)
        profile = importance_profile(h, eps, big_c, context=ctx, threads=threads)
    for t in range(trials):
        if mode == "sparsify":
            res = sample_sparsifier(h, eps, big_c, seed + t, profile=profile, context=ctx)
        else:
            res = run_mode(h, mode, eps, big_c, seed + t, threads)
        if directed:
            h_tilde = res.graph(h)
            if h.n <= MAX_EXHAUSTIVE_VERTICES:
                ok = verify_cuts_exhaustive(h, h_tilde, eps, directed=True).passed
            else:
                ok = verify_cuts_sampled(h, h_tilde, eps, cut_trials, seed + t).passed
        else:
            lo, hi = res.certificate
            ok = verify_spectral_band(lo, hi, eps)
        passes += ok
        pairs.append(res.kept_pair_count)
        kept.append(res.kept_generator_count)
    return {
        "group": group.name,
        "order": group.n,
        "gens": len(gens),
        "mode": kind,
        "eps": eps,
        "trials": trials,
        "pass_rate": passes / trials if trials else float("nan"),
        "median_kept_pairs": statistics.median(pairs) if pairs else float("nan"),
        "median_kept_generators": statistics.median(kept) if kept else float("nan"),
        "runtime_s": round(time.perf_counter() - start, 3),
    }


def verify_spectral_band(lo: float, hi: float, eps: float) -> bool:
    slack = get_tolerances().verify_slack
    return lo >= 1 - eps - slack and hi <= 1 + eps + slack


def cmd_bench(args) -> int:
    _check_eps_arg(args.eps)
    if args.trials < 1:
        raise ConfigError("trials must be positive")
    out = open(args.output, "w", newline="") if args.output else sys.stdout
    try:
        writer = csv.DictWriter(out, fieldnames=BENCH_FIELDS, lineterminator="\n")
        writer.writeheader()
        for group_spec, gens_spec, kind in _bench_rows(args.row or []):
            writer.writerow(
                bench_row(group_spec, gens_spec, kind, args.eps, args.trials, args.C,
                          args.seed, args.threads, args.cut_trials)
            )
            out.flush()
    finally:
        if out is not sys.stdout:
            out.close()
    return EXIT_OK


# --- argument parsing -----------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cayleysparse", description="Cayley graph sparsification toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, *, gens=True):
        p.add_argument("--group", required=True, help="group spec, e.g. f2:6 or dihedral:3")
        if gens:
            p.add_argument("--gens", default="all", help="generator spec (default: all)")
            p.add_argument("--symmetrize", action="store_true",
                           help="average weights of s and s^-1 instead of rejecting asymmetric input")
        p.add_argument("--output", help="write the report here instead of stdout")
        p.add_argument("--no-timestamp", action="store_true", help="omit the timestamp field")
        p.add_argument("--C", type=float, default=DEFAULT_C, help=f"oversampling constant (default {DEFAULT_C:g})")
        p.add_argument("--threads", type=int, default=1, help="worker threads for importance computation")

    p = sub.add_parser("sparsify", help="sample a sparsifier and optionally verify it")
    common(p)
    p.add_argument("--mode", choices=MODES, default="sparsify")
    p.add_argument("--eps", type=float, default=0.5)
    p.add_argument("--seed", type=int, default=DEFAULT_SEED, help=f"RNG seed (default {DEFAULT_SEED})")
    p.add_argument("--verify", action="append", choices=("spectral", "cuts", "cuts-sampled"))
    p.add_argument("--trials", type=int, default=10_000, help="random cuts for cuts-sampled")
    p.add_argument("--export-edges", metavar="PREFIX",
                   help="write PREFIX.input.txt and PREFIX.sparse.txt as 'u v w' lines")
    p.set_defaults(func=cmd_sparsify)

    p = sub.add_parser("profile", help="importance counts and greedy lengths over an alpha sweep")
    common(p)
    p.add_argument("--alphas", default=",".join(map(str, DEFAULT_ALPHAS)))
    p.set_defaults(func=cmd_profile)

    p = sub.add_parser("gadget", help="build and exhaustively check the AND gadget")
    p.add_argument("--group", required=True)
    p.add_argument("--r", type=int, required=True, help="arity")
    p.add_argument("--emit", help="write the gadget JSON here instead of stdout")
    p.add_argument("--no-timestamp", action="store_true")
    p.set_defaults(func=cmd_gadget)

    p = sub.add_parser("bench", help="seeded sweep written as CSV")
    p.add_argument("--row", action="append",
                   help="GROUP;GENS[;undirected|directed], GROUP may end in a range like f2:4..10")
    p.add_argument("--eps", type=float, default=0.5)
    p.add_argument("--trials", type=int, default=20)
    p.add_argument("--C", type=float, default=DEFAULT_C)
    p.add_argument("--seed", type=int, default=DEFAULT_SEED, help="trial t uses seed + t")
    p.add_argument("--cut-trials", type=int, default=2000, help="sampled cuts for large directed rows")
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--output", help="CSV path (default stdout)")
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    if getattr(args, "threads", 1) < 1:
        print("error: --threads must be positive", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return args.func(args)
    except NumericalToleranceError as exc:
        print(f"numerical tolerance failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ConfigError, GroupTableError, GroupActionError, GeneratorSetError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
