"""Command line front end.

Subcommands: ``topo`` (generate a topology file), ``analyze`` (safety report
and reliable set for a scenario), ``simulate`` (one seeded run, trace out),
``montecarlo`` (sweep over byzantine rates, CSV out, optional SVG chart).

Exit codes: 0 on success, 1 on usage errors (bad flags, unparsable values,
byzantine source), 2 on runtime errors (unreadable files, unsafe scenario
where a reliable set was demanded).
"""

from __future__ import annotations

import argparse
import math
import sys

from .analyzer import (
    check_safety,
    format_reliable_set,
    format_safety_report,
    reliable_set,
)
from .experiments import (
    DEFAULT_INFO,
    ExperimentConfig,
    format_csv,
    run_sweep,
    unsecured_baseline,
)
from .protocol import Setting
from .simulator import Forge, Scenario, Silent, format_trace, run
from .topology import load_topology, make_grid, make_torus, save_topology

GENUINE_INFO = DEFAULT_INFO
FORGED_INFO = b"m'"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits on its own; route everything through UsageError instead
    def error(self, message):
        raise UsageError(message)


def _setting_arg(text: str) -> Setting:
    # same dash-joined form the reports and CSV use, e.g. "1-2-5"
    try:
        return Setting(tuple(int(part) for part in text.replace(",", "-").split("-")))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad setting {text!r}: {exc}")


def _ids_arg(text: str) -> tuple[int, ...]:
    text = text.strip()
    if not text:
        return ()
    try:
        return tuple(int(part) for part in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad id list {text!r}")


def _lambdas_arg(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(part) for part in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad lambda list {text!r}")


def _write_out(text: str, out: str | None):
    if out is None:
        sys.stdout.write(text)
    else:
        with open(out, "w") as fh:
            fh.write(text)


def _load_scenario(args) -> Scenario:
    with open(args.topology) as fh:
        topo = load_topology(fh.read())
    byzantine = frozenset(args.byzantine)
    if args.source in byzantine:
        raise UsageError(f"source {args.source} cannot be byzantine")
    return Scenario(topo, args.source, byzantine, GENUINE_INFO)


def cmd_topo(args) -> int:
    maker = make_grid if args.kind == "grid" else make_torus
    _write_out(save_topology(maker(args.size)), args.out)
    return 0


def cmd_analyze(args) -> int:
    scenario = _load_scenario(args)
    if args.reliable_only:
        text = format_reliable_set(reliable_set(scenario, args.setting))
    else:
        report = check_safety(scenario, args.setting, find_all=True)
        text = format_safety_report(report)
        if report.safe:
            text += format_reliable_set(reliable_set(scenario, args.setting))
    _write_out(text, args.out)
    return 0


def cmd_simulate(args) -> int:
    scenario = _load_scenario(args)
    adversary = Silent() if args.adversary == "silent" else Forge(FORGED_INFO)
    trace = run(scenario, args.setting, adversary, args.seed, args.max_steps)
    _write_out(format_trace(trace), args.out)
    return 0


def cmd_montecarlo(args) -> int:
    config = ExperimentConfig(
        kind=args.kind,
        size=args.size,
        setting=args.setting,
        lambdas=args.lambdas,
        trials=args.trials,
        master_seed=args.seed,
        confidence=args.confidence,
        exclude_unsafe=args.exclude_unsafe,
    )
    rows = run_sweep(config, jobs=args.jobs)
    csv_text = format_csv(config, rows, baseline=(args.baseline == "unsecured"))
    _write_out(csv_text, args.out)
    if args.svg is not None:
        series = [(str(config.setting), [(r.lam, r.p_deliver) for r in rows])]
        if args.baseline == "unsecured":
            node_count = config.size * config.size
            series.append(
                ("unsecured", [(r.lam, unsecured_baseline(r.lam, node_count)) for r in rows])
            )
        with open(args.svg, "w") as fh:
            fh.write(_svg_chart(series))
    return 0


def _svg_chart(series: list[tuple[str, list[tuple[float, float]]]]) -> str:
    """Static delivery-vs-rate chart, log-scaled on the rate axis.

    Zero rates cannot sit on a log axis and are dropped from the drawing.
    """
    width, height = 640, 440
    left, right, top, bottom = 70, 20, 20, 50
    pts = [(lam, p) for _, data in series for lam, p in data if lam > 0]
    if pts:
        lo = math.floor(math.log10(min(lam for lam, _ in pts)))
        hi = math.ceil(math.log10(max(lam for lam, _ in pts)))
        if hi == lo:
            hi = lo + 1
    else:
        lo, hi = -4, 0

    def x(lam: float) -> float:
        return left + (math.log10(lam) - lo) / (hi - lo) * (width - left - right)

    def y(p: float) -> float:
        return top + (1.0 - p) * (height - top - bottom)

    colors = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#8c564b"]
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<line x1="{left}" y1="{y(0)}" x2="{width - right}" y2="{y(0)}" stroke="black"/>',
        f'<line x1="{left}" y1="{y(0)}" x2="{left}" y2="{y(1)}" stroke="black"/>',
    ]
    for k in range(lo, hi + 1):
        xx = x(10.0**k)
        parts.append(
            f'<line x1="{xx:.1f}" y1="{y(0)}" x2="{xx:.1f}" y2="{y(0) + 5}" stroke="black"/>'
        )
        parts.append(
            f'<text x="{xx:.1f}" y="{y(0) + 20}" font-size="11" text-anchor="middle">1e{k}</text>'
        )
    for p in (0.0, 0.25, 0.5, 0.75, 1.0):
        parts.append(
            f'<text x="{left - 8}" y="{y(p) + 4}" font-size="11" text-anchor="end">{p:g}</text>'
        )
    parts.append(
        f'<text x="{(left + width - right) / 2:.1f}" y="{height - 10}" font-size="12" '
        f'text-anchor="middle">byzantine rate</text>'
    )
    for idx, (label, data) in enumerate(series):
        color = colors[idx % len(colors)]
        drawable = [(lam, p) for lam, p in data if lam > 0]
        if drawable:
            points = " ".join(f"{x(lam):.1f},{y(p):.1f}" for lam, p in drawable)
            parts.append(
                f'<polyline points="{points}" fill="none" stroke="{color}" stroke-width="1.5"/>'
            )
        parts.append(
            f'<text x="{width - right - 5}" y="{top + 15 + 14 * idx}" font-size="11" '
            f'text-anchor="end" fill="{color}">{label}</text>'
        )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def build_parser() -> _Parser:
    parser = _Parser(prog="byzcast", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("topo", help="generate a topology file")
    p.add_argument("--kind", choices=("grid", "torus"), required=True)
    p.add_argument("--size", type=int, required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_topo)

    p = sub.add_parser("analyze", help="safety report and reliable set")
    p.add_argument("--topology", required=True)
    p.add_argument("--setting", type=_setting_arg, required=True)
    p.add_argument("--source", type=int, required=True)
    p.add_argument("--byzantine", type=_ids_arg, default=())
    p.add_argument("--reliable-only", action="store_true")
    p.add_argument("--out")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("simulate", help="one seeded protocol run")
    p.add_argument("--topology", required=True)
    p.add_argument("--setting", type=_setting_arg, required=True)
    p.add_argument("--source", type=int, required=True)
    p.add_argument("--byzantine", type=_ids_arg, default=())
    p.add_argument("--adversary", choices=("silent", "forge"), required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--max-steps", type=int)
    p.add_argument("--out")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("montecarlo", help="sweep byzantine rates, write CSV")
    p.add_argument("--kind", choices=("grid", "torus"), required=True)
    p.add_argument("--size", type=int, required=True)
    p.add_argument("--setting", type=_setting_arg, required=True)
    p.add_argument("--lambda", dest="lambdas", type=_lambdas_arg, required=True)
    p.add_argument("--trials", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--confidence", type=float, default=0.95)
    p.add_argument("--baseline", choices=("unsecured",))
    p.add_argument("--exclude-unsafe", action="store_true")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--svg")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_montecarlo)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except (KeyboardInterrupt, SystemExit):
        raise
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
