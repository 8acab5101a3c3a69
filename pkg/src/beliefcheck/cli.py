"""Command-line front end.

Exit codes: 0 when the expected verdict is reached (for the two canned
verifications, "counterexample confirmed"; for user files, pipeline
completion), 1 when a verification ends with an unexpected verdict, 2 for
usage or input errors.  Reports are deterministic for fixed inputs and
flags; JSON is the canonical format and text a rendering of it.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from fractions import Fraction

from . import additive, pipeline, rescaling, triples
from .domain import (DomainError, build_halpern, format_rational,
                     parse_rational, parse_structure, serialize_structure,
                     structure_digest)
from .search import DEFAULT_TIERS, SearchConfig, describe, search
from .pairs import ConflictError, build_pair_table, dump_pairs
from .report import plain, to_json, to_text
from .values import build_value_index

_ENV_THREADS = "BELIEFCHECK_THREADS"


def _default_threads() -> int:
    try:
        return max(1, int(os.environ.get(_ENV_THREADS, "1")))
    except ValueError:
        return 1


def _add_output_opts(p):
    p.add_argument("--format", choices=("json", "text"), default="text",
                   help="report format (default text)")
    p.add_argument("--timings", action="store_true",
                   help="include wall-clock timings (off by default so "
                        "reports are byte-identical across runs)")


def _emit(args, report, timings):
    out = (to_json(report, timings if args.timings else None)
           if args.format == "json"
           else to_text(report, timings if args.timings else None))
    sys.stdout.write(out)


def _read_structure(path):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return parse_structure(fh.read())
    except OSError as e:
        raise DomainError("cannot read %s: %s" % (path, e)) from None


def _build_parser():
    ap = argparse.ArgumentParser(
        prog="beliefcheck",
        description="Exact verification of conditional-belief structures.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("verify-halpern",
                       help="verify the canonical 12-world counterexample")
    p.add_argument("--delta", metavar="R",
                   help="override the perturbation magnitude (exact rational)")
    p.add_argument("--exhaustive-triples", action="store_true",
                   help="include the 5^n constrained-triple and additive "
                        "sweeps (minutes at 12 worlds)")
    p.add_argument("--qcc", action="store_true",
                   help="include the comparative-order axiom suite")
    p.add_argument("--appendix", action="store_true",
                   help="include the closeness/profile suite")
    p.add_argument("--threads", type=int, default=_default_threads())
    _add_output_opts(p)

    p = sub.add_parser("verify-fine",
                       help="verify the 13-world anchored variant")
    p.add_argument("--restricted", action="store_true",
                   help="restrict conditioning sets to the anchored family")
    p.add_argument("--table", action="store_true",
                   help="build the full combination table (adds the "
                        "exhaustive collision search in restricted mode)")
    p.add_argument("--threads", type=int, default=_default_threads())
    _add_output_opts(p)

    p = sub.add_parser("verify-appendix",
                       help="closeness, not-good census, trichotomy, and "
                            "profile identities on the 12-world structure")
    p.add_argument("--threads", type=int, default=_default_threads())
    _add_output_opts(p)

    p = sub.add_parser("check", help="full pipeline on a structure file")
    p.add_argument("file")
    p.add_argument("--exhaustive-triples", action="store_true")
    p.add_argument("--qcc", action="store_true")
    p.add_argument("--appendix", action="store_true")
    p.add_argument("--fast", action="store_true",
                   help="pair table, witness search, and rescaling only")
    p.add_argument("--threads", type=int, default=_default_threads())
    _add_output_opts(p)

    p = sub.add_parser("rescale-check",
                       help="multiplicative-rescaling feasibility for a "
                            "structure file")
    p.add_argument("file")
    _add_output_opts(p)

    p = sub.add_parser("enumerate",
                       help="stream pair keys or constrained triples")
    p.add_argument("kind", choices=("pairs", "triples", "rtriples"))
    p.add_argument("file")
    p.add_argument("--limit", type=int, default=0,
                   help="stop after N records (0 = all)")
    _add_output_opts(p)

    p = sub.add_parser("search",
                       help="randomized search for violating structures")
    p.add_argument("--worlds", type=int, default=6)
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tiers", nargs="+", metavar="R",
                   help="ascending weight magnitude tiers (exact rationals)")
    p.add_argument("--pure", action="store_true",
                   help="generate unperturbed probability structures")
    p.add_argument("--threads", type=int, default=_default_threads())
    _add_output_opts(p)
    return ap


def _cmd_verify_halpern(args) -> int:
    delta = parse_rational(args.delta) if args.delta else None
    structure = build_halpern(delta)
    pr = pipeline.run_pipeline(
        structure, exhaustive_triples=args.exhaustive_triples,
        include_qcc=args.qcc, include_appendix=args.appendix,
        command="verify-halpern")
    _emit(args, pr.report, pr.timings)
    return 0 if pr.verdict == "counterexample confirmed" else 1


def _cmd_verify_fine(args) -> int:
    pr = pipeline.fine_report(restricted=args.restricted,
                              build_table=args.table)
    _emit(args, pr.report, pr.timings)
    return 0 if pr.verdict == "counterexample confirmed" else 1


def _cmd_verify_appendix(args) -> int:
    pr = pipeline.appendix_report()
    _emit(args, pr.report, pr.timings)
    return 0 if pr.verdict == "pass" else 1


def _cmd_check(args) -> int:
    structure = _read_structure(args.file)
    pr = pipeline.run_pipeline(
        structure, exhaustive_triples=args.exhaustive_triples,
        include_qcc=args.qcc, include_appendix=args.appendix,
        fast=args.fast, command="check")
    _emit(args, pr.report, pr.timings)
    return 0


def _cmd_rescale_check(args) -> int:
    structure = _read_structure(args.file)
    verdict = rescaling.rescale_structure(structure)
    payload = {
        "command": "rescale-check",
        "structure": structure_digest(structure),
        "status": verdict.status,
    }
    if verdict.status == "Infeasible":
        payload["forced_groups"] = verdict.forced_groups
        payload["certificate_equations"] = len(verdict.certificate or ())
    else:
        payload["assignment_form"] = verdict.assignment_form
    if args.format == "json":
        sys.stdout.write(json.dumps(plain(payload), indent=2,
                                    sort_keys=True) + "\n")
    else:
        for k in sorted(payload):
            sys.stdout.write("%s: %s\n" % (k, plain(payload[k])))
    return 0


def _cmd_enumerate(args) -> int:
    structure = _read_structure(args.file)
    if structure.n > 12:
        raise DomainError("enumerate supports at most 12 worlds")
    vi = build_value_index(structure)
    if args.kind == "pairs":
        table = build_pair_table(vi)
        stream = dump_pairs(table)
    elif args.kind == "triples":
        stream = ({"x": r["x"], "y": r["y"], "z": r["z"],
                   "chain": ["0x%x" % u for u in r["chain"]]}
                  for r in triples.enumerate_constrained(vi))
    else:
        stream = ({"x": r.x, "y": r.y, "z": r.z, "U": "0x%x" % r.U,
                   "A": "0x%x" % r.A, "B1": "0x%x" % r.B1,
                   "B2": "0x%x" % r.B2}
                  for r in additive.enumerate_r_constrained(vi))
    count = 0
    for rec in stream:
        rec = plain(rec)
        if args.format == "json":
            sys.stdout.write(json.dumps(rec, sort_keys=True) + "\n")
        else:
            sys.stdout.write("  ".join("%s=%s" % (k, rec[k])
                                       for k in rec) + "\n")
        count += 1
        if args.limit and count >= args.limit:
            break
    return 0


def _cmd_search(args) -> int:
    tiers = (tuple(parse_rational(t) for t in args.tiers)
             if args.tiers else DEFAULT_TIERS)
    config = SearchConfig(
        worlds=args.worlds, trials=args.trials, seed=args.seed,
        tiers=tiers, perturb=not args.pure, threads=max(1, args.threads))
    findings = search(config)
    payload = {
        "command": "search",
        "worlds": config.worlds,
        "trials": config.trials,
        "seed": config.seed,
        "tiers": [format_rational(Fraction(t)) for t in config.tiers],
        "perturbed": config.perturb,
        "findings": [dict(describe(f),
                          structure=serialize_structure(
                              f.structure).splitlines())
                     for f in findings],
        "finding_count": len(findings),
    }
    if args.format == "json":
        sys.stdout.write(json.dumps(plain(payload), indent=2,
                                    sort_keys=True) + "\n")
    else:
        sys.stdout.write("search: %d findings in %d trials\n"
                         % (len(findings), config.trials))
        for f in findings:
            d = describe(f)
            sys.stdout.write("  trial %d: %s (witnesses=%d, rescaling=%s)\n"
                             % (d["trial"], d["verdict"], d["witnesses"],
                                d["rescaling"]))
    return 0


_COMMANDS = {
    "verify-halpern": _cmd_verify_halpern,
    "verify-fine": _cmd_verify_fine,
    "verify-appendix": _cmd_verify_appendix,
    "check": _cmd_check,
    "rescale-check": _cmd_rescale_check,
    "enumerate": _cmd_enumerate,
    "search": _cmd_search,
}


def main(argv=None) -> int:
    ap = _build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as e:
        return 2 if e.code not in (0, None) else 0
    try:
        return _COMMANDS[args.command](args)
    except (DomainError, ConflictError) as e:
        sys.stderr.write("error: %s\n" % e)
        return 2


if __name__ == "__main__":
    sys.exit(main())
