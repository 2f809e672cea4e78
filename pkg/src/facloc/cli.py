"""Command-line front end: ``python -m facloc <verb> ...`` or ``facloc <verb>``.

Every verb prints one JSON report (or writes it to ``--out``).  Reports are
deterministic: keys are sorted, wall-clock timings are left out unless
``--timings`` is given, and the only varying field is ``timestamp``.

Exit codes: 0 success, 1 usage error, 2 a checked property failed.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from fractions import Fraction
from typing import Callable, Sequence

from . import plane
from .amd import AmdFlags, solve_optimal_mechanism
from .mechanisms import MECHANISM_NAMES, Mechanism, UnsupportedError, get_mechanism
from .metric import (
    InvalidSpaceError,
    MetricSpace,
    fig4_graph,
    load_graph,
    make_circle,
    make_path,
    spider_graph,
    star_graph,
)
from .verification import (
    BudgetExceeded,
    check_dominates,
    check_strategyproof,
    pcd_bad_family,
    qcd_family_ratio,
    worst_ratio,
)

EXIT_OK, EXIT_USAGE, EXIT_VIOLATION = 0, 1, 2

BUILTIN_SPACES: dict[str, Callable[[], MetricSpace]] = {
    "fig4": fig4_graph,
    "star3": lambda: star_graph(3),
    "spider322": lambda: spider_graph((3, 2, 2)),
}

SPACE_FORMS = ("circle:<M>", "path:<m>", "graph:<file.json>", "builtin:" + "|".join(BUILTIN_SPACES))

SWEEP_COLUMNS = ["M", "alpha", "alpha_peaks_only", "vars", "rows", "seconds"]

REPORT_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "facloc report",
    "type": "object",
    "required": ["verb", "status", "timestamp", "config", "values"],
    "properties": {
        "verb": {"type": "string"},
        "status": {"enum": ["ok", "violation"]},
        "timestamp": {"type": "string"},
        "config": {"type": "object"},
        "witness": {},
        "values": {"type": "object"},
    },
    "additionalProperties": False,
}


class UsageError(Exception):
    pass


def parse_space(spec: str) -> MetricSpace:
    """Resolve a space spec such as ``circle:8`` or ``builtin:fig4``."""
    kind, _, arg = spec.partition(":")
    try:
        if kind == "circle":
            return make_circle(int(arg))
        if kind == "path":
            return make_path(int(arg))
        if kind == "builtin":
            if arg not in BUILTIN_SPACES:
                raise UsageError(f"unknown builtin space {arg!r}; known: {', '.join(BUILTIN_SPACES)}")
            return BUILTIN_SPACES[arg]()
        if kind == "graph":
            return load_graph(arg)
        if spec.endswith(".json"):
            return load_graph(spec)
    except (ValueError, InvalidSpaceError, OSError) as exc:
        raise UsageError(f"bad space {spec!r}: {exc}") from exc
    raise UsageError(f"unknown space {spec!r}; forms: {', '.join(SPACE_FORMS)}")


def parse_mechanism(spec: str) -> Mechanism:
    try:
        return get_mechanism(spec)
    except (KeyError, ValueError, ZeroDivisionError) as exc:
        raise UsageError(f"unknown mechanism {spec!r}; known: {', '.join(MECHANISM_NAMES)}") from exc


def parse_range(text: str) -> range:
    """``3..12`` (inclusive) or a single integer."""
    lo, sep, hi = text.partition("..")
    try:
        return range(int(lo), int(hi if sep else lo) + 1)
    except ValueError as exc:
        raise UsageError(f"bad range {text!r}; expected e.g. 3..12") from exc


def _jsonable(v):
    if isinstance(v, Fraction):
        return str(v)
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if hasattr(v, "item"):  # numpy scalar
        return v.item()
    return v


def _strip_timings(v):
    if isinstance(v, dict):
        return {k: _strip_timings(x) for k, x in v.items() if not k.endswith("seconds")}
    if isinstance(v, list):
        return [_strip_timings(x) for x in v]
    return v


@dataclass
class Report:
    verb: str
    config: dict
    ok: bool = True
    values: dict = field(default_factory=dict)
    witness: object = None

    def to_json(self, timings: bool = False, timestamp: str | None = None) -> dict:
        values = _jsonable(self.values)
        if not timings:
            values = _strip_timings(values)
        return {
            "verb": self.verb,
            "status": "ok" if self.ok else "violation",
            "timestamp": timestamp or datetime.now(timezone.utc).isoformat(timespec="seconds"),
            "config": _jsonable(self.config),
            "witness": _jsonable(self.witness),
            "values": values,
        }


def validate_report(obj: dict) -> None:
    """Check a report against :data:`REPORT_SCHEMA` (needs ``jsonschema``)."""
    import jsonschema

    jsonschema.validate(obj, REPORT_SCHEMA)


def dumps(obj: dict) -> str:
    return json.dumps(obj, sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def _write_csv(path: str | None, columns: Sequence[str], rows: list[dict]) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=list(columns), lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: r.get(k, "") for k in columns})
    text = buf.getvalue()
    if path:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    return text


# ---------------------------------------------------------------- verbs


def cmd_verify_sp(args) -> Report:
    space, mech = parse_space(args.space), parse_mechanism(args.mech)
    viol = check_strategyproof(mech, space, args.n, workers=args.workers)
    rep = Report("verify-sp", dict(mech=args.mech, space=space.name, n=args.n))
    rep.ok = viol is None
    rep.witness = None if viol is None else viol.to_json()
    rep.values = {"result": "no violation" if viol is None else "violation", "profiles": space.m**args.n}
    if args.csv:
        _write_csv(args.csv, ["mech", "space", "n", "violation"],
                   [dict(mech=args.mech, space=space.name, n=args.n, violation=int(viol is not None))])
    return rep


def cmd_dominates(args) -> Report:
    space = parse_space(args.space)
    f, g = parse_mechanism(args.f), parse_mechanism(args.g)
    res = check_dominates(f, g, space, args.n)
    rep = Report("dominates", dict(f=args.f, g=args.g, space=space.name, n=args.n), ok=res.dominates)
    rep.values = res.to_json()
    rep.witness = rep.values["strict_witness"] if res.dominates else rep.values["counterexample"]
    return rep


def cmd_worst_ratio(args) -> Report:
    space, mech = parse_space(args.space), parse_mechanism(args.mech)
    res = worst_ratio(mech, space, args.n)
    rep = Report("worst-ratio", dict(mech=args.mech, space=space.name, n=args.n, expect=args.expect))
    rep.values = res.to_json()
    rep.witness = rep.values["witness"]
    if args.expect is not None:
        rep.ok = res.worst_ratio == Fraction(args.expect)
    if args.csv:
        _write_csv(args.csv, ["mech", "space", "n", "worst_ratio", "witness"],
                   [dict(mech=args.mech, space=space.name, n=args.n, worst_ratio=str(res.worst_ratio),
                         witness=" ".join(map(str, rep.witness or [])))])
    return rep


def cmd_family(args) -> Report:
    if args.kind == "qcd":
        grid = [Fraction(i, args.grid) for i in range(1, args.grid // 3 + 1)]
        rows = [dict(x=str(x), ratio=str(qcd_family_ratio(x)), ratio_float=float(qcd_family_ratio(x))) for x in grid]
        best = max(grid, key=qcd_family_ratio)
        rep = Report("family", dict(kind="qcd", grid=args.grid))
        rep.values = {"argmax": str(best), "max_ratio": str(qcd_family_ratio(best)), "points": len(rows)}
        rep.witness = str(best)
        if args.csv:
            _write_csv(args.csv, ["x", "ratio", "ratio_float"], rows)
        return rep
    ks = args.k or [1, 4, 25, 100, 10_000]
    reports = [pcd_bad_family(k) for k in ks]
    rep = Report("family", dict(kind="pcd", k=ks))
    rep.values = {"instances": [r.to_json() for r in reports]}
    rep.witness = reports[-1].description
    if args.csv:
        _write_csv(args.csv, ["k", "n", "x", "ratio", "paper_lower_bound"],
                   [dict(k=r.k, n=r.n, x=r.x, ratio=r.ratio, paper_lower_bound=r.paper_lower_bound) for r in reports])
    return rep


def cmd_amd(args) -> Report:
    space = parse_space(args.space)
    flags = _flags(args.flags)
    try:
        sol = solve_optimal_mechanism(space, args.n, flags, mode=args.mode)
    except (UnsupportedError, InvalidSpaceError) as exc:
        raise UsageError(str(exc)) from exc
    table_path = None
    if args.table_out:
        table_path = args.table_out
        with open(table_path, "w", encoding="utf-8") as fh:
            fh.write(dumps(sol.table_json()))
    rep = Report("amd", dict(space=space.name, n=args.n, flags=flags.label(), mode=args.mode))
    cert = sol.certificate
    rep.ok = cert.get("sp_violation") is None and bool(cert.get("table_ratio_matches", True))
    if args.expect is not None:
        rep.ok = rep.ok and Fraction(str(sol.alpha)) == Fraction(args.expect)
    rep.values = dict(sol.to_json(), table_path=table_path)
    rep.witness = cert.get("sp_violation")
    return rep


def _flags(text: str | None) -> AmdFlags:
    try:
        return AmdFlags.parse(text)
    except (KeyError, ValueError) as exc:
        raise UsageError(str(exc)) from exc


def sweep_point(M: int, mode: str = "rational", base_flags: str = "fix_first_agent,anonymity_links,merge") -> dict:
    """One row of the circle sweep: unrestricted and peaks-only alpha on ``C_M``."""
    t0 = time.perf_counter()
    full = solve_optimal_mechanism(make_circle(M), 3, AmdFlags.parse(base_flags), mode=mode, validate=False)
    peaks = solve_optimal_mechanism(
        make_circle(M), 3, AmdFlags.parse(",".join(filter(None, [base_flags, "peaks_only"]))), mode=mode, validate=False
    )
    return dict(
        M=M,
        alpha=str(full.alpha) if mode == "rational" else repr(full.alpha),
        alpha_peaks_only=str(peaks.alpha) if mode == "rational" else repr(peaks.alpha),
        vars=full.stats["variables"],
        rows=full.stats["rows"],
        seconds=round(time.perf_counter() - t0, 3),
    )


def run_sweep(Ms: Sequence[int], mode: str = "rational", workers: int = 1, base_flags: str = "fix_first_agent,anonymity_links,merge") -> list[dict]:
    if workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            return list(pool.map(sweep_point, Ms, [mode] * len(Ms), [base_flags] * len(Ms)))
    return [sweep_point(M, mode, base_flags) for M in Ms]


def sweep_checks(rows: list[dict]) -> dict:
    """Properties the sweep asserts: peaks-only equals unrestricted, even M below 7/6."""
    bad_peaks = [r["M"] for r in rows if Fraction(r["alpha"]) != Fraction(r["alpha_peaks_only"])]
    bad_even = [r["M"] for r in rows if r["M"] % 2 == 0 and Fraction(r["alpha"]) > Fraction(7, 6) + Fraction(1, 10**9)]
    return {"peaks_only_mismatch": bad_peaks, "even_above_7_6": bad_even}


def cmd_amd_sweep(args) -> Report:
    Ms = parse_range(args.circle)
    if Ms.start < 3:
        raise UsageError("circle sweep needs M >= 3")
    _flags(args.flags)
    rows = run_sweep(list(Ms), args.mode, args.workers, args.flags)
    text = _write_csv(args.csv, SWEEP_COLUMNS, rows)
    checks = sweep_checks(rows)
    rep = Report("amd-sweep", dict(circle=f"{Ms.start}..{Ms.stop - 1}", mode=args.mode, flags=args.flags))
    rep.ok = not checks["peaks_only_mismatch"] and not checks["even_above_7_6"]
    rep.values = {"rows": rows, "checks": checks, "csv_path": args.csv}
    if not args.csv and not args.out:
        sys.stderr.write(text)
    return rep


def cmd_plane_mm(args) -> Report:
    rep = Report("plane-mm", dict(search=args.search, grid_step=args.grid_step, restrict_non_obtuse=args.restrict_non_obtuse,
                                  bound_check=args.bound_check, trials=args.trials))
    if args.search:
        ratio, inst = plane.mm_worst_ratio_search(grid_step=args.grid_step, restrict_non_obtuse=args.restrict_non_obtuse)
        rep.values = {"ratio": ratio, "x": inst.x, "y": inst.y, "z": inst.z}
        rep.witness = [inst.x, inst.y, inst.z]
        rep.ok = ratio <= 2**0.5
    if args.bound_check:
        worst = {}
        for D in args.bound_check:
            worst[str(D)] = plane.mm_ratio_bound_check(D, trials=args.trials)
        rep.values["bound_check"] = worst
        rep.ok = rep.ok and all(v <= D**0.5 + 1e-9 for D, v in zip(args.bound_check, worst.values()))
    if not args.search and not args.bound_check:
        raise UsageError("plane-mm needs --search and/or --bound-check D [D ...]")
    return rep


def cmd_plane_demo(args) -> Report:
    demo = plane.demo_optimal_not_sp(step=args.step)
    rep = Report("plane-demo-manipulation", dict(step=args.step))
    rep.values = demo.to_json()
    rep.witness = rep.values
    rep.ok = demo.gain > 1e-6
    return rep


# ---------------------------------------------------------------- report table


@dataclass
class Cell:
    row: str
    space: str
    expected: str
    value: str
    verified: bool


def report_table(sweep_max: int = 8, mechanisms: dict[str, Mechanism] | None = None, mode: str = "rational") -> list[Cell]:
    """Recompute the computable cells of the three-agent bounds table.

    ``mechanisms`` overrides the registry entries (``rd``, ``pd``, ``pcd``,
    ``qcd``), which lets tests plug in a broken mechanism.
    """
    mechs = {"rd": get_mechanism("rd"), "pd": get_mechanism("pd"), "pcd": get_mechanism("pcd"),
             "qcd": get_mechanism("qcd:q=1/4")}
    mechs.update(mechanisms or {})
    cells = []

    def ratio_cell(row, mech, space, expected):
        r = worst_ratio(mech, space, 3).worst_ratio
        cells.append(Cell(row, space.name, str(expected), str(r), r == expected))

    ratio_cell("RD", mechs["rd"], make_circle(12), Fraction(4, 3))
    ratio_cell("RD", mechs["rd"], star_graph(3), Fraction(4, 3))
    ratio_cell("PD", mechs["pd"], make_circle(12), Fraction(5, 4))
    ratio_cell("PD", mechs["pd"], star_graph(3), Fraction(4, 3))
    ratio_cell("PCD", mechs["pcd"], make_circle(8), Fraction(5, 4))
    ratio_cell("1/4-QCD", mechs["qcd"], make_circle(8), Fraction(7, 6))
    lb = solve_optimal_mechanism(fig4_graph(), 3, mode=mode)
    ok = lb.certificate.get("sp_violation") is None and lb.certificate.get("table_ratio_matches", False)
    cells.append(Cell("LP lower bound", "builtin:fig4", "13/12", str(lb.alpha), bool(ok) and lb.alpha == Fraction(13, 12)))
    if sweep_max >= 3:
        for r in run_sweep(range(3, sweep_max + 1), mode):
            good = Fraction(r["alpha"]) == Fraction(r["alpha_peaks_only"]) and (
                r["M"] % 2 or Fraction(r["alpha"]) <= Fraction(7, 6))
            cells.append(Cell("LP circle", f"circle:{r['M']}", "peaks-only equal" + (", <= 7/6" if r["M"] % 2 == 0 else ""),
                              f"{r['alpha']} / {r['alpha_peaks_only']}", bool(good)))
    return cells


def format_table(cells: list[Cell]) -> str:
    head = ("bound", "space", "expected", "computed", "status")
    rows = [head] + [(c.row, c.space, c.expected, c.value, "verified" if c.verified else "FAILED") for c in cells]
    widths = [max(len(r[i]) for r in rows) for i in range(len(head))]
    return "\n".join("  ".join(s.ljust(w) for s, w in zip(r, widths)).rstrip() for r in rows) + "\n"


def cmd_report_table(args) -> Report:
    cells = report_table(args.sweep_max, mode=args.mode)
    sys.stderr.write(format_table(cells)) if args.out else sys.stdout.write(format_table(cells))
    rep = Report("report-table", dict(sweep_max=args.sweep_max, mode=args.mode))
    rep.ok = all(c.verified for c in cells)
    rep.values = {"cells": [c.__dict__ for c in cells]}
    rep.witness = [f"{c.row} {c.space}" for c in cells if not c.verified] or None
    return rep


# ---------------------------------------------------------------- parser


class _Parser(argparse.ArgumentParser):
    """argparse exits with 2 on bad usage; this program reserves 2 for violations."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _env_workers() -> int:
    try:
        return max(1, int(os.environ.get("FACLOC_WORKERS", "1")))
    except ValueError:
        return 1


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="facloc", description="Facility location mechanisms on graphs, circles and the plane.")
    sub = p.add_subparsers(dest="verb", required=True, parser_class=_Parser)

    def common(sp, space=True, n=True):
        if space:
            sp.add_argument("--space", required=True, help="one of " + ", ".join(SPACE_FORMS))
        if n:
            sp.add_argument("--n", type=int, default=3, help="number of agents (default 3)")
        sp.add_argument("--out", help="write the JSON report here instead of stdout")
        sp.add_argument("--csv", help="also write a CSV table to this path")
        sp.add_argument("--workers", type=int, default=_env_workers(),
                        help="parallel processes (default $FACLOC_WORKERS or 1)")
        sp.add_argument("--timings", action="store_true", help="include wall-clock timings in the report")

    sp = sub.add_parser("verify-sp", help="exhaustive strategyproofness check")
    sp.add_argument("--mech", required=True)
    common(sp)
    sp.set_defaults(func=cmd_verify_sp)

    sp = sub.add_parser("dominates", help="does mechanism F dominate G")
    sp.add_argument("--f", required=True)
    sp.add_argument("--g", required=True)
    common(sp)
    sp.set_defaults(func=cmd_dominates)

    sp = sub.add_parser("worst-ratio", help="exact worst-case approximation ratio")
    sp.add_argument("--mech", required=True)
    sp.add_argument("--expect", help="exit 2 unless the ratio equals this fraction")
    common(sp)
    sp.set_defaults(func=cmd_worst_ratio)

    sp = sub.add_parser("family", help="parametric worst-case families")
    sp.add_argument("--kind", choices=["qcd", "pcd"], required=True)
    sp.add_argument("--grid", type=int, default=100, help="qcd: evaluate x = i/GRID for i <= GRID/3")
    sp.add_argument("--k", type=int, nargs="*", help="pcd: cluster sizes")
    common(sp, space=False, n=False)
    sp.set_defaults(func=cmd_family)

    sp = sub.add_parser("amd", help="solve the mechanism-design LP")
    sp.add_argument("--flags", default="", help="comma list of " + ", ".join(AmdFlags.names()))
    sp.add_argument("--mode", choices=["rational", "float"], default="rational")
    sp.add_argument("--table-out", help="write the optimal lottery table as JSON")
    sp.add_argument("--expect", help="exit 2 unless alpha equals this fraction")
    common(sp)
    sp.set_defaults(func=cmd_amd)

    sp = sub.add_parser("amd-sweep", help="LP values over circles C_M")
    sp.add_argument("--circle", default="3..12", help="inclusive range of M, e.g. 3..12")
    sp.add_argument("--mode", choices=["rational", "float"], default="rational")
    sp.add_argument("--flags", default="fix_first_agent,anonymity_links,merge",
                    help="symmetry flags used for both columns (peaks_only is added for the second)")
    common(sp, space=False, n=False)
    sp.set_defaults(func=cmd_amd_sweep)

    sp = sub.add_parser("plane-mm", help="multi-median ratio in the plane")
    sp.add_argument("--search", action="store_true", help="grid search for the worst triangle")
    sp.add_argument("--grid-step", type=float, default=0.01)
    sp.add_argument("--restrict-non-obtuse", action="store_true")
    sp.add_argument("--bound-check", type=int, nargs="*", metavar="D", help="random check of the sqrt(D) bound")
    sp.add_argument("--trials", type=int, default=10_000)
    common(sp, space=False, n=False)
    sp.set_defaults(func=cmd_plane_mm)

    sp = sub.add_parser("plane-demo-manipulation", help="profitable misreport against the optimal rule")
    sp.add_argument("--step", type=float, default=0.005)
    common(sp, space=False, n=False)
    sp.set_defaults(func=cmd_plane_demo)

    sp = sub.add_parser("report-table", help="recompute the bounds table")
    sp.add_argument("--sweep-max", type=int, default=8, help="largest circle in the LP rows (0 to skip)")
    sp.add_argument("--mode", choices=["rational", "float"], default="rational")
    common(sp, space=False, n=False)
    sp.set_defaults(func=cmd_report_table)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if getattr(args, "workers", 1) < 1:
            parser.error("--workers must be at least 1")
    except SystemExit as exc:  # --help (0) or a usage error (1)
        return int(exc.code or 0)
    try:
        rep = args.func(args)
    except (UsageError, UnsupportedError, BudgetExceeded) as exc:
        sys.stderr.write(f"facloc {args.verb}: {exc}\n")
        return EXIT_USAGE
    text = dumps(rep.to_json(timings=args.timings))
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK if rep.ok else EXIT_VIOLATION


if __name__ == "__main__":
    sys.exit(main())
