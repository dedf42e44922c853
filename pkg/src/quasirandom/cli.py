"""Command-line entry point.

Every report is JSON (sorted keys, two-space indent) carrying the run
configuration, the seed and the library version, so repeated runs with the
same arguments are byte-identical. Exit codes: 0 for a definite result, 2 for
an inconclusive one, 1 for errors and failed verifications.
"""

from __future__ import annotations

import argparse
import hashlib
import itertools
import json
import sys
from fractions import Fraction
from pathlib import Path

from . import __version__
from .algebraicity import DEFAULT_THRESHOLD, DEFAULT_WINDOWS, UNKNOWN, SearchBounds, acl_of, in_acl, is_highly_algebraic
from .measures import Event, erdos_renyi, fibered_cocycle, marked_pipeline, nu_default, quasi_invariance_test, sample_stream
from .perms import FinSupPermutation
from .separation import (
    CompactSetSpec,
    PermTree,
    build_tree,
    documented_k,
    exhaustive_pair_check,
    verify_tree,
)
from .structures import builtin, oracle_from_spec

EXIT_OK, EXIT_ERROR, EXIT_UNKNOWN = 0, 1, 2
SAMPLE_LISTING_LIMIT = 1000


def _int_list(text: str) -> tuple[int, ...]:
    text = text.strip()
    return tuple(int(x) for x in text.replace(" ", ",").split(",") if x) if text else ()


def _read_json(path: str):
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def _structure(args):
    if args.spec:
        return oracle_from_spec(_read_json(args.spec))
    params = {"F": args.F} if args.F is not None else {}
    return builtin(args.family, **params)


def _bounds(args) -> SearchBounds:
    return SearchBounds(
        cbar_bound=args.cbar_bound,
        search_window=args.search_window,
        max_tuple_len=args.max_tuple_len,
        witness_count=args.witness_count,
        witness_window=args.witness_window,
        threshold=args.threshold,
        windows=args.windows,
        route=args.route,
    )


def _sampler(args):
    """The base sampler, anchor tuple and parameter count for a sampling family."""
    fam = args.family.lower()
    if fam == "marked":
        F = args.F if args.F is not None else tuple(range(args.ell))
        if len(F) != args.ell:
            raise ValueError(f"--F has {len(F)} entries but --ell is {args.ell}")
        base, _ = marked_pipeline(F, Fraction(args.p))
        return base, F, args.ell
    if fam in ("er", "erdos-renyi", "erdos_renyi"):
        if args.ell != 0:
            raise ValueError("the Erdős–Rényi sampler takes no parameters; use --ell 0")
        return erdos_renyi(Fraction(args.p)), (), 0
    raise ValueError(f"sampling supports the marked and er families, not {args.family!r}")


# ---------------------------------------------------------------------------
# commands; each returns (report, exit code)
# ---------------------------------------------------------------------------


def cmd_analyze(args):
    s = _structure(args)
    verdict = is_highly_algebraic(s, _bounds(args))
    code = EXIT_UNKNOWN if verdict.status == "unknown" else EXIT_OK
    return {"structure": s.describe(), "verdict": verdict.to_json()}, code


def cmd_acl(args):
    s = _structure(args)
    a_bar = _int_list(args.abar)
    if args.b is not None:
        v = in_acl(s, a_bar, args.b, args.threshold, args.windows, args.route)
        return {"structure": s.describe(), "a_bar": list(a_bar), "b": args.b, "verdict": v.to_json()}, (
            EXIT_UNKNOWN if v.member == UNKNOWN else EXIT_OK
        )
    est = acl_of(s, a_bar, range(args.candidates), args.threshold, args.windows, args.route)
    return {"structure": s.describe(), "acl": est.to_json()}, EXIT_UNKNOWN if est.unknown else EXIT_OK


def _sample_digest(rows) -> str:
    h = hashlib.sha256()
    for fs, arrays in rows:
        h.update(repr(fs.c_bar).encode())
        for name in sorted(arrays.arrays):
            h.update(name.encode())
            h.update(arrays.arrays[name].tobytes())
    return h.hexdigest()


def cmd_sample(args):
    base, anchor, ell = _sampler(args)
    nu = nu_default(ell)
    rows = list(sample_stream(nu, base, anchor, args.n, args.count, args.seed))
    params = {}
    for fs, _ in rows:
        params[str(list(fs.c_bar))] = params.get(str(list(fs.c_bar)), 0) + 1
    fact_totals = {}
    for _, arrays in rows:
        for name, arr in arrays.arrays.items():
            fact_totals[name] = fact_totals.get(name, 0) + int(arr.sum())
    report = {
        "measure": nu.to_json(),
        "sampler": base.law_descriptor(),
        "anchor": list(anchor),
        "count": len(rows),
        "n": args.n,
        "digest": _sample_digest(rows),
        "param_histogram": params,
        "mean_facts": {k: v / max(len(rows), 1) for k, v in sorted(fact_totals.items())},
    }
    if args.count <= SAMPLE_LISTING_LIMIT and not args.summary:
        report["samples"] = [
            {"c_bar": list(fs.c_bar), "rejections": fs.rejections, "facts": arrays.to_window().to_json()["facts"]}
            for fs, arrays in rows
        ]
    return report, EXIT_OK


def cmd_cocycle(args):
    g = FinSupPermutation.parse(args.g)
    c_bar = _int_list(args.cbar)
    nu = nu_default(len(c_bar))
    value = fibered_cocycle(nu, g, c_bar)
    return {"g": str(g), "c_bar": list(c_bar), "measure": nu.to_json(), "cocycle": value.to_json()}, EXIT_OK


def _default_events() -> list[Event]:
    return [
        Event("c0=0", "param", index=0, value=0, expected_ratio=Fraction(2)),
        Event("c0=1", "param", index=0, value=1, expected_ratio=Fraction(1, 2)),
        Event("E(2,3)", "fact", relation="E", tuple=(2, 3), expected_ratio=Fraction(1)),
    ]


def cmd_test_quasi(args):
    base, anchor, ell = _sampler(args)
    g = FinSupPermutation.parse(args.g)
    if args.events:
        data = _read_json(args.events)
        events = [Event.from_json(e) for e in (data["events"] if isinstance(data, dict) else data)]
    else:
        events = _default_events()
    nu = nu_default(ell)
    stream = sample_stream(nu, base, anchor, args.n, args.count, args.seed)
    report = quasi_invariance_test(stream, g, events, nu, alpha=args.alpha)
    return {"measure": nu.to_json(), "anchor": list(anchor), "test": report}, EXIT_OK if report["pass"] else EXIT_ERROR


def _load_k(args) -> CompactSetSpec:
    if args.k:
        return CompactSetSpec.from_json(_read_json(args.k))
    return documented_k(args.family)


def cmd_separate(args):
    K = _load_k(args)
    s = builtin(K.family)
    tree = build_tree(s, K, args.depth)
    return {"tree": tree.to_json()}, EXIT_OK


def cmd_verify(args):
    data = _read_json(args.tree)
    tree = PermTree.from_json(data.get("tree", data))
    K = CompactSetSpec.from_json(_read_json(args.k)) if args.k else CompactSetSpec.from_json(tree.k_spec)
    result = verify_tree(tree, K)
    if not args.full:
        result.pop("certificates")
    if args.exhaustive and result["ok"]:
        counts = {
            f"{a},{b}": exhaustive_pair_check(tree, K, a, b)
            for a, b in itertools.combinations(tree.leaves(), 2)
        }
        result["exhaustive_overlaps"] = counts
        result["ok"] = result["ok"] and not any(counts.values())
    return {"verification": result}, EXIT_OK if result["ok"] else EXIT_ERROR


# ---------------------------------------------------------------------------
# parser and output
# ---------------------------------------------------------------------------


def _add_structure_args(p):
    p.add_argument("--family", default="matching", help="built-in family: matching, starforest, pureset, marked")
    p.add_argument("--spec", help="JSON structure spec (overrides --family)")
    p.add_argument("--F", type=_int_list, default=None, help="marked points, e.g. 0,1")


def _add_acl_args(p):
    p.add_argument("--threshold", type=int, default=DEFAULT_THRESHOLD)
    p.add_argument("--windows", type=_int_list, default=DEFAULT_WINDOWS)
    p.add_argument("--route", choices=("auto", "exact", "count"), default="auto")


def _add_sampling_args(p, count: int, n: int):
    p.add_argument("--family", default="marked", help="marked or er")
    p.add_argument("--ell", type=int, default=1, help="parameter tuple length")
    p.add_argument("--F", type=_int_list, default=None, help="anchor points (default 0..ell-1)")
    p.add_argument("--p", default="1/2", help="edge probability as a fraction")
    p.add_argument("--n", type=int, default=n, help="window size")
    p.add_argument("--count", type=int, default=count)
    p.add_argument("--seed", type=int, default=0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="quasirandom", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--out", help="write the report here instead of stdout")
        p.add_argument("--format", choices=("json", "text"), default="json")

    p = sub.add_parser("analyze", help="decide high algebraicity with certificates")
    _add_structure_args(p)
    _add_acl_args(p)
    b = SearchBounds()
    p.add_argument("--cbar-bound", type=int, default=b.cbar_bound)
    p.add_argument("--search-window", type=int, default=b.search_window)
    p.add_argument("--max-tuple-len", type=int, default=b.max_tuple_len)
    p.add_argument("--witness-count", type=int, default=b.witness_count)
    p.add_argument("--witness-window", type=int, default=b.witness_window)
    common(p)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("acl", help="algebraic closure membership")
    _add_structure_args(p)
    _add_acl_args(p)
    p.add_argument("--abar", default="", help="comma-separated tuple")
    p.add_argument("--b", type=int, default=None, help="single candidate; omit to scan --candidates")
    p.add_argument("--candidates", type=int, default=16)
    common(p)
    p.set_defaults(func=cmd_acl)

    p = sub.add_parser("sample", help="draw from the quasi-invariant measure")
    _add_sampling_args(p, count=10, n=16)
    p.add_argument("--summary", action="store_true", help="omit per-sample listings")
    common(p)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("cocycle", help="exact Radon–Nikodym cocycle")
    p.add_argument("--g", required=True, help='permutation in cycle notation, e.g. "(0 1)"')
    p.add_argument("--cbar", required=True, help="comma-separated parameter tuple")
    common(p)
    p.set_defaults(func=cmd_cocycle)

    p = sub.add_parser("test-quasi", help="importance-weighted quasi-invariance test")
    _add_sampling_args(p, count=100_000, n=8)
    p.add_argument("--g", default="(0 1)")
    p.add_argument("--events", help="JSON list of events (default: c0=0, c0=1, E(2,3))")
    p.add_argument("--alpha", type=float, default=0.001)
    common(p)
    p.set_defaults(func=cmd_test_quasi)

    p = sub.add_parser("separate", help="build a separation tree")
    p.add_argument("--family", default="matching", choices=("matching", "starforest"))
    p.add_argument("--k", help="compact-set JSON (default: the documented example)")
    p.add_argument("--depth", type=int, default=3)
    common(p)
    p.set_defaults(func=cmd_separate)

    p = sub.add_parser("verify", help="replay every certificate of a separation tree")
    p.add_argument("--tree", required=True)
    p.add_argument("--k", help="compact-set JSON (default: the one embedded in the tree)")
    p.add_argument("--exhaustive", action="store_true", help="also count overlapping windows exactly")
    p.add_argument("--full", action="store_true", help="include every certificate")
    common(p)
    p.set_defaults(func=cmd_verify)
    return parser


def _config(args) -> dict:
    cfg = {}
    for k, v in sorted(vars(args).items()):
        if k in ("func", "out", "format"):
            continue
        cfg[k] = list(v) if isinstance(v, tuple) else v
    return cfg


def _text(report: dict) -> str:
    if "cocycle" in report:
        return report["cocycle"]["ratio"]
    if "verdict" in report and "headline" in report["verdict"]:
        v = report["verdict"]
        case = f" (case {v['case']})" if v.get("case") else ""
        return f"{v['status']}{case}: {v['headline']}"
    if "verification" in report:
        return "ok" if report["verification"]["ok"] else f"FAILED: {report['verification']['failing_pairs'] or report['verification']['invariant_problems']}"
    if "test" in report:
        return "\n".join(f"{r['event']['name']}: z={r['z_weighted']:.3f} pass={r['pass']}" for r in report["test"]["events"])
    return json.dumps(report, sort_keys=True)


def render(report: dict, fmt: str) -> str:
    if fmt == "text":
        return _text(report) + "\n"
    return json.dumps(report, sort_keys=True, indent=2, ensure_ascii=True) + "\n"


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        report, code = args.func(args)
    except (ValueError, KeyError, TypeError, OSError, RuntimeError, json.JSONDecodeError) as exc:
        err = {"error": type(exc).__name__, "message": str(exc), "config": _config(args), "version": __version__}
        print(json.dumps(err, sort_keys=True, indent=2), file=sys.stderr)
        return EXIT_ERROR
    report = {"config": _config(args), "seed": getattr(args, "seed", None), "version": __version__} | report
    text = render(report, args.format)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return code
