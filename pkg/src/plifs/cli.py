"""Command-line front end.

Commands: check, dim {natural|gdifs|punctured|determinant|box|all},
measure, render, esc.  Exit codes: 0 success, 2 malformed input, 3
computation error, 4 budget exceeded.  The enumeration budget defaults to
2^26 intervals; the PLIFS_BUDGET environment variable overrides it and
--budget overrides both.
"""

from __future__ import annotations

import argparse
import os
import sys

from . import gdifs as gd
from . import oracle
from .core import (
    Cplifs,
    DEFAULT_BUDGET,
    check_iosc,
    check_small,
    cylinders,
    generated_ifs,
    invariant_interval,
    regularity_diagnostic,
    word_str,
)
from .errors import BudgetExceeded, ParseError, PlifsError
from .pressure import natural_dimension
from .specfile import parse_spec_file


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def _parse_range(text: str) -> tuple[int, int]:
    if ".." in text:
        a, b = text.split("..", 1)
        return int(a), int(b)
    n = int(text)
    return n, n


def _budget(args) -> int:
    if getattr(args, "budget", None):
        return args.budget
    env = os.environ.get("PLIFS_BUDGET")
    if env:
        try:
            return int(env)
        except ValueError:
            raise ParseError(0, f"PLIFS_BUDGET={env!r} is not an integer") from None
    return DEFAULT_BUDGET


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="plifs", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("file", help="system description file")
        sp.add_argument("--budget", type=int, default=None, help="enumeration cap")

    c = sub.add_parser("check", help="structural report: type, injectivity, smallness, IOSC")
    common(c)
    c.add_argument("--depth", type=int, default=8, help="regularity certification depth")

    d = sub.add_parser("dim", help="dimension estimates")
    common(d)
    d.add_argument("method", choices=["natural", "gdifs", "punctured", "determinant", "box", "all"])
    d.add_argument("--n", default="6..11", help="level range A..B for the root sequence")
    d.add_argument("--level", type=int, default=6, help="punctured cylinder level")
    d.add_argument("--seed", type=int, default=0, help="sampling seed")
    d.add_argument("--tol", type=float, default=5e-2, help="cross-method agreement tolerance")
    d.add_argument("--csv", default=None, help="write method,param,value rows to this path")

    m = sub.add_parser("measure", help="cylinder-union measure bounds and verdict")
    common(m)
    m.add_argument("--n", default="1..12", help="level range A..B for the bound sequence")
    m.add_argument("--tol", type=float, default=1e-3, help="plateau threshold")

    r = sub.add_parser("render", help="cylinder intervals as CSV rows or an SVG strip chart")
    common(r)
    r.add_argument("--depth", type=int, default=4)
    r.add_argument("--format", choices=["csv", "svg"], default="csv")
    r.add_argument("--csv", default=None, help="also write the artifact to this path")

    e = sub.add_parser("esc", help="finite-depth separation diagnostic of the generated system")
    common(e)
    e.add_argument("--level", type=int, default=4, help="maximal composition depth")

    return p


def cmd_check(args) -> int:
    F = parse_spec_file(args.file)
    budget = _budget(args)
    print(f"maps: {F.m}, type vector: {F.type_vector}")
    lo, hi = invariant_interval(F)
    print(f"invariant interval: [{_fmt(lo)}, {_fmt(hi)}]")
    for k, f in enumerate(F.maps, 1):
        print(f"map {k}: injective {'yes' if f.is_injective() else 'no'}, max ratio {_fmt(f.max_ratio)}")
    small = check_small(F)
    if small.ok:
        print("small: yes")
    else:
        print(f"small: no (failing clauses: {', '.join(small.failing_clauses())})")
    iosc = check_iosc(F)
    print(f"IOSC: {'yes' if iosc.ok else 'no'} (gap {_fmt(iosc.min_gap)})")
    breaks = F.breaking_points()
    if not breaks:
        print("regular: trivially (no breaking points)")
        return 0
    for st in regularity_diagnostic(F, args.depth, budget):
        if st.status == "CERTIFIED_OFF_ATTRACTOR":
            print(f"break {_fmt(st.point)} (map {st.map_index}): CERTIFIED_OFF_ATTRACTOR at depth {st.depth}")
        else:
            words = ",".join(word_str(w) for w in st.witnesses[:8])
            more = "" if len(st.witnesses) <= 8 else f" (+{len(st.witnesses) - 8} more)"
            print(
                f"break {_fmt(st.point)} (map {st.map_index}): UNDECIDED_AT_DEPTH {st.depth}; "
                f"containing words: {words}{more}"
            )
    return 0


def _write_csv(path: str | None, rows: list[tuple[str, str, str]]) -> None:
    if not path:
        return
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("method,param,value\n")
        for row in rows:
            fh.write(",".join(row) + "\n")


def cmd_dim(args) -> int:
    F = parse_spec_file(args.file)
    budget = _budget(args)
    rows: list[tuple[str, str, str]] = []
    if args.method == "natural":
        n_min, n_max = _parse_range(args.n)
        est = natural_dimension(F, n_min, n_max, budget=budget)
        for n, s in zip(est.levels, est.roots):
            print(f"s_{n} = {_fmt(s)}")
            rows.append(("natural", str(n), _fmt(s)))
        print(f"estimate (max over last {est.window}): {_fmt(est.estimate)}")
    elif args.method == "gdifs":
        codes = gd.auto_codes(F)
        g = gd.associate_from_periodic(F, codes, budget=budget)
        value = gd.alpha(g)
        print(f"nodes: {g.q}, edges: {len(g.edges)}, codes: {len(codes)}")
        print(f"alpha = {_fmt(value)}")
        rows.append(("gdifs", str(g.q), _fmt(value)))
    elif args.method == "punctured":
        pl = gd.punctured_level(F, args.level, budget)
        note = "" if pl.whole_graph_strongly_connected else f" (largest scc of {pl.scc_size} used)"
        print(f"kept {pl.kept}, dropped {len(pl.dropped)}{note}")
        print(f"t_{pl.level} = {_fmt(pl.value)}")
        rows.append(("punctured", str(pl.level), _fmt(pl.value)))
    elif args.method == "determinant":
        det = gd.detect_fixed_point_family(F)
        if det is None:
            raise PlifsError("not a fixed-point-breaking family; determinant method not applicable")
        value = gd.q_root(det)
        print(f"determinant root = {_fmt(value)}")
        rows.append(("determinant", str(det.m), _fmt(value)))
    elif args.method == "box":
        cloud = oracle.chaos_game(F, 200_000, seed=args.seed)
        lo, hi = invariant_interval(F)
        scales = tuple((hi - lo) * 3.0**-j for j in range(2, 10))
        fit = oracle.box_dimension(cloud, scales)
        print(f"box estimate = {_fmt(fit.slope)} (raw {_fmt(fit.raw_slope)}, rss {_fmt(fit.residual)})")
        rows.append(("box", str(len(cloud)), _fmt(fit.slope)))
    else:  # all
        n_min, n_max = _parse_range(args.n)
        cfg = gd.DimConfig(
            n_min=n_min, n_max=n_max, punctured_k=args.level, seed=args.seed,
            budget=budget, agreement_tol=args.tol,
        )
        report = gd.dim_report(F, cfg)
        for e in report.estimates:
            if e.value is None:
                print(f"{e.method}: unavailable ({e.error})")
            else:
                print(f"{e.method}: {_fmt(e.value)}  [{e.detail}]")
                rows.append((e.method, "", _fmt(e.value)))
        for flag in report.flags:
            print(f"  {flag}")
        print(f"consistent: {'yes' if report.consistent else 'NO'}")
    _write_csv(args.csv, rows)
    return 0


def cmd_measure(args) -> int:
    F = parse_spec_file(args.file)
    budget = _budget(args)
    n_min, n_max = _parse_range(args.n)
    bounds = oracle.lebesgue_upper_bound(F, n_max, budget)
    for n, v in enumerate(bounds, 1):
        print(f"L_{n} = {_fmt(v)}")
    est = natural_dimension(F, max(1, n_min), n_max, budget=budget)
    verdict = oracle.measure_evidence(bounds, est.estimate, plateau_tol=args.tol)
    print(f"dimension estimate: {_fmt(est.estimate)}")
    print(f"verdict: {verdict.classification} (evidence, not proof)")
    return 0


def _render_csv(F: Cplifs, depth: int, budget: int) -> str:
    lines = ["word,left,right"]
    if depth == 0:
        lo, hi = invariant_interval(F)
        lines.append(f",{_fmt(lo)},{_fmt(hi)}")
    else:
        cyl = cylinders(F, depth, budget)
        for w in sorted(cyl.words()):
            lo, hi = cyl[w]
            lines.append(f"{word_str(w)},{_fmt(lo)},{_fmt(hi)}")
    return "\n".join(lines) + "\n"


def _render_svg(F: Cplifs, depth: int, budget: int) -> str:
    lo0, hi0 = invariant_interval(F)
    span = max(hi0 - lo0, 1e-12)
    width, margin, row_h, bar_h = 840.0, 20.0, 26.0, 18.0
    height = 2 * margin + (depth + 1) * row_h

    def x(v: float) -> float:
        return margin + (width - 2 * margin) * (v - lo0) / span

    rects = []
    for level in range(depth + 1):
        rows = [(lo0, hi0)] if level == 0 else list(cylinders(F, level, budget).entries.values())
        y = margin + level * row_h
        for a, b in rows:
            rects.append(
                f'<rect x="{_fmt(x(a))}" y="{_fmt(y)}" '
                f'width="{_fmt(max(0.0, x(b) - x(a)))}" height="{_fmt(bar_h)}" '
                f'fill="#3b6ea5" fill-opacity="0.85"/>'
            )
    body = "\n".join(rects)
    return (
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_fmt(width)}" '
        f'height="{_fmt(height)}" viewBox="0 0 {_fmt(width)} {_fmt(height)}">\n'
        f'<rect width="100%" height="100%" fill="white"/>\n{body}\n</svg>\n'
    )


def cmd_render(args) -> int:
    F = parse_spec_file(args.file)
    budget = _budget(args)
    if args.depth < 0:
        raise PlifsError("depth must be >= 0")
    text = (
        _render_csv(F, args.depth, budget)
        if args.format == "csv"
        else _render_svg(F, args.depth, budget)
    )
    sys.stdout.write(text)
    if args.csv:
        with open(args.csv, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    return 0


def cmd_esc(args) -> int:
    F = parse_spec_file(args.file)
    budget = _budget(args)
    sims = generated_ifs(F)
    print(f"generated similarities: {len(sims)}")
    for n in range(1, args.level + 1):
        rep = gd.esc_diagnostic(sims, n, budget)
        d = "inf" if rep.delta == float("inf") else _fmt(rep.delta)
        r = "inf" if rep.delta_root == float("inf") else _fmt(rep.delta_root)
        print(f"n={n}: delta={d} delta^(1/n)={r} ({rep.compositions} compositions)")
    print("finite-depth diagnostic only; not a separation proof")
    return 0


_DISPATCH = {
    "check": cmd_check,
    "dim": cmd_dim,
    "measure": cmd_measure,
    "render": cmd_render,
    "esc": cmd_esc,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 2
    try:
        return _DISPATCH[args.command](args)
    except ParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except BudgetExceeded as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
    except PlifsError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
