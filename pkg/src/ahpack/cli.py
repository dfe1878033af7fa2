"""Command line entry point: ``ahpack VERB [options]``."""
from __future__ import annotations

import argparse
import sys
from fractions import Fraction
from pathlib import Path
from typing import List, Optional

from . import baselines, engine, verifier
from .numerics import RationalParseError, format_rational, parse_rational
from .params import ParamsError, canonical_path, dump_params, load_params, reconstruct_params
from .scenarios import make_scenario
from .weights import (UVW, build_weight_function, format_weight_table, load_uvw_table,
                      load_weight_table, published_table_paths, weight_table_from_published)

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_DATA = 0, 1, 2, 3

VERBS = ("pack", "verify-scenario", "verify-all", "simulate", "opt", "reconstruct", "export-weights")


class DataError(Exception):
    pass


def _rational(text: str) -> Fraction:
    try:
        return parse_rational(text)
    except RationalParseError as exc:
        raise argparse.ArgumentTypeError(str(exc))


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ahpack", description="Advanced Harmonic bin packing toolkit")
    sub = p.add_subparsers(dest="verb", required=True, metavar="VERB")

    def common(sp):
        sp.add_argument("--params", type=Path, default=canonical_path())
        sp.add_argument("--uvw", type=Path, default=None, help="uvw table (default: shipped)")
        sp.add_argument("--out", type=Path, default=None)
        return sp

    sp = common(sub.add_parser("pack", help="pack sizes read from stdin, print the trace"))
    sp.add_argument("--audit", action="store_true", help="check invariants after every item")

    sp = common(sub.add_parser("verify-scenario", help="certify one scenario"))
    sp.add_argument("--x", type=_rational, required=True)
    sp.add_argument("--y", type=_rational, required=True)
    sp.add_argument("--w", type=_rational)
    sp.add_argument("--u", type=_rational)
    sp.add_argument("--v", type=_rational)
    sp.add_argument("--weights", type=Path, help="weight table used directly instead of alphas")
    sp.add_argument("--target", type=_rational, default=verifier.THEOREM_BOUND)

    sp = common(sub.add_parser("verify-all", help="certify every scenario"))
    sp.add_argument("--jobs", type=int, default=1)
    sp.add_argument("--target", type=_rational, default=verifier.THEOREM_BOUND)
    sp.add_argument("--search", action="store_true",
                    help="search non-canonical uvw for scenarios without data")

    sp = common(sub.add_parser("simulate", help="run AH on a generated stream"))
    sp.add_argument("--gen", default="uniform(1/1000000,1)")
    sp.add_argument("--n", type=int, default=10000)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--psi", type=int, default=200)
    sp.add_argument("--audit", action="store_true")
    sp.add_argument("--fallback-w", type=_rational, default=None,
                    help="w for scenarios without uvw data (non-canonical)")

    sp = common(sub.add_parser("opt", help="exact optimum for sizes read from stdin"))
    sp.add_argument("--max-items", type=int, default=18)

    sp = common(sub.add_parser("reconstruct", help="recover alphas from weight tables"))
    sp.add_argument("--weights", type=Path, action="append",
                    help="weight table file (repeatable; default: shipped tables)")
    sp.add_argument("--hint", action="append", default=[],
                    help="class:types, e.g. 183:1,3,14")

    sp = common(sub.add_parser("export-weights", help="print a scenario's weight table"))
    sp.add_argument("--x", type=_rational, required=True)
    sp.add_argument("--y", type=_rational, required=True)
    sp.add_argument("--w", type=_rational)
    sp.add_argument("--u", type=_rational)
    sp.add_argument("--v", type=_rational)
    return p


def parse_args(argv: Optional[List[str]] = None) -> argparse.Namespace:
    return build_parser().parse_args(argv)


def _emit(args, text: str):
    if args.out is not None:
        args.out.write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _uvw_table(args):
    path = args.uvw or (Path(__file__).parent / "data" / "canonical.uvw")
    return load_uvw_table(path)


def _uvw_from_args(args, scenario, table):
    if args.w is None:
        return _uvw_table(args).lookup(scenario)
    return UVW(args.w, args.u, args.v)


def _read_stdin_sizes() -> List[Fraction]:
    try:
        return baselines.read_sizes(sys.stdin.read())
    except RationalParseError as exc:
        raise DataError(str(exc))


def cmd_pack(args, table) -> int:
    st = engine.new_state(table)
    lines = []
    for s in _read_stdin_sizes():
        if not 0 < s <= 1:
            raise DataError(f"item size {s} outside (0,1]")
        lines.append(st.pack_item(s).line())
        if args.audit:
            rep = engine.audit(st, full=False)
            if not rep.ok:
                for c in rep.failures():
                    print(f"audit: {c.name}: {c.witness}", file=sys.stderr)
                return EXIT_FAIL
    _emit(args, "".join(l + "\n" for l in lines))
    print(f"bins={st.bins_used()}", file=sys.stderr)
    return EXIT_OK


def cmd_verify_scenario(args, table) -> int:
    sc = make_scenario(args.x, args.y, table)
    if args.weights:
        pub = load_weight_table(args.weights)
        if (pub.x, pub.y) != (sc.x, sc.y):
            raise DataError(f"weight table is for ({pub.x},{pub.y}], not {sc.label()}")
        rep = verifier.verify_weight_function(weight_table_from_published(pub, table), table)
    else:
        rep = verifier.verify_scenario(sc, table, _uvw_from_args(args, sc, table))
    _emit(args, verifier.format_report_line(rep))
    if rep.status == verifier.MISSING:
        print(f"no uvw data for {sc.label()}", file=sys.stderr)
        return EXIT_DATA
    if rep.status != verifier.CERTIFIED or rep.r > args.target:
        return EXIT_FAIL
    return EXIT_OK


def cmd_verify_all(args, table) -> int:
    if args.out is not None and args.out.exists():
        # drop an old footer so the file stays append-only per scenario
        kept = [l for l in args.out.read_text().splitlines(True) if not l.startswith("GLOBAL")]
        args.out.write_text("".join(kept))
    rep = verifier.verify_all(table, _uvw_table(args), jobs=args.jobs, out=args.out, search=args.search)
    footer = verifier.format_footer(rep)
    if args.out is not None:
        with open(args.out, "a") as fh:
            fh.write(footer)
    else:
        sys.stdout.write("".join(verifier.format_report_line(r) for r in rep.reports) + footer)
    for s in rep.uncovered:
        print(f"uncovered {s.label()}", file=sys.stderr)
    bad = rep.failures() or [r for r in rep.certified if r.r > args.target]
    return EXIT_FAIL if bad else EXIT_OK


def cmd_simulate(args, table) -> int:
    inst = baselines.generate_instance(args.gen, args.n, args.seed, table)
    st, problems = engine.run_stream(table, inst.sizes, audit_each=args.audit)
    for p in problems:
        print(f"audit: {p}", file=sys.stderr)
    ver = verifier.empirical_check(st, table, _uvw_table(args), psi=args.psi, fallback_w=args.fallback_w)
    out = [f"items={len(inst.sizes)} bins={st.bins_used()}"]
    for name in ("nf", "ff", "bf", "harmonic(12)"):
        if name in ("ff", "bf") and args.n > 20000:
            continue  # quadratic reference packers
        out.append(f"{name}={baselines.run_baseline(name, inst).bin_count}")
    out.append(f"size_lower_bound={baselines.opt_exact(inst, max_items=0).bin_count}")
    if ver.weight is not None:
        out.append(f"weight={format_rational(ver.weight, decimal=True)}")
        out.append(f"a={format_rational(ver.a)} scenario={ver.scenario.label()}")
    out.append(f"verdict={ver.status}{'' if ver.canonical else ' (non-canonical uvw)'} {ver.note}".rstrip())
    _emit(args, "\n".join(out) + "\n")
    return EXIT_FAIL if problems or ver.status == "fail" else EXIT_OK


def cmd_opt(args, table) -> int:
    res = baselines.opt_exact(baselines.Instance(_read_stdin_sizes()), args.max_items)
    _emit(args, f"bins={res.bin_count} method={res.method}\n" +
          (" ".join(map(str, res.assignment)) + "\n" if res.assignment else ""))
    return EXIT_OK


def cmd_reconstruct(args, table) -> int:
    paths = args.weights or published_table_paths()
    hints = {}
    for h in args.hint:
        j, types = h.split(":")
        hints[int(j)] = tuple(int(i) for i in types.split(","))
    rec, report = reconstruct_params([load_weight_table(p) for p in paths], table.boundaries, hints)
    for j, r in report.classes.items():
        if r.status != "determined":
            print(f"class {j}: {r.status} ({r.note})", file=sys.stderr)
    print(f"tiny candidates: {len(report.tiny_candidates)}", file=sys.stderr)
    _emit(args, dump_params(rec))
    return EXIT_OK if not report.undetermined() and rec.tiny else EXIT_FAIL


def cmd_export_weights(args, table) -> int:
    sc = make_scenario(args.x, args.y, table)
    uvw = _uvw_from_args(args, sc, table)
    if uvw is None:
        raise DataError(f"no uvw data for {sc.label()}")
    _emit(args, format_weight_table(build_weight_function(sc, table, uvw)))
    return EXIT_OK


COMMANDS = {
    "pack": cmd_pack, "verify-scenario": cmd_verify_scenario, "verify-all": cmd_verify_all,
    "simulate": cmd_simulate, "opt": cmd_opt, "reconstruct": cmd_reconstruct,
    "export-weights": cmd_export_weights,
}


def run_command(args: argparse.Namespace) -> int:
    try:
        table = load_params(args.params)
        return COMMANDS[args.verb](args, table)
    except (DataError, ParamsError, RationalParseError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


def main(argv: Optional[List[str]] = None) -> int:
    try:
        args = parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    return run_command(args)


if __name__ == "__main__":
    sys.exit(main())
