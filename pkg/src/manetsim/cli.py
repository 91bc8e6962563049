"""Command-line entry point: run scenarios, analyze traces, print per-node TCP tables."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path
from typing import Callable, Sequence

from . import metrics
from .network import simulate
from .scenario import PRESETS, ScenarioConfig, ScenarioError, load_preset, parse_scenario
from .selfish import AdversaryConfigError
from .trace import TraceError, read_trace

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_SCENARIO = 2
EXIT_TRACE = 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # argparse would exit 2, which means "scenario error" here
        self.print_usage(sys.stderr)
        raise UsageError(message)


def load_scenario(ref: str) -> ScenarioConfig:
    """Accept a scenario path or a preset name such as ``ids`` or ``ids.scn``."""
    path = Path(ref)
    if path.is_file():
        return parse_scenario(path)
    name = path.name.removesuffix(".scn")
    if name in PRESETS and (path.parent == Path(".")):
        return load_preset(name)
    raise ScenarioError(f"no such scenario file or preset: {ref}")


def _seed_path(out: Path, seed: int) -> Path:
    return out.with_name(f"{out.stem}.seed{seed}{out.suffix}")


def cmd_run(args: argparse.Namespace) -> int:
    try:
        cfg = load_scenario(args.scenario)
        if args.seed is not None:
            cfg.seed = args.seed
        cfg.validate()
    except (ScenarioError, AdversaryConfigError, ValueError, OSError) as exc:
        print(f"scenario error: {exc}", file=sys.stderr)
        return EXIT_SCENARIO

    out = Path(args.output)
    if args.seeds is None:
        with open(out, "w") as fh:
            _net, summary = simulate(cfg, fh, trace_mobility=args.trace_mobility)
        print(summary.line())
        return EXIT_OK

    if args.seeds < 1:
        print("--seeds must be at least 1", file=sys.stderr)
        return EXIT_USAGE
    base = cfg.seed
    print("seed,events,originated,delivered,pdf,trace")
    for seed in range(base, base + args.seeds):
        cfg.seed = seed
        path = _seed_path(out, seed)
        with open(path, "w") as fh:
            _net, s = simulate(cfg, fh, trace_mobility=args.trace_mobility)
        pdf = f"{100.0 * s.delivered / s.originated:.4f}" if s.originated else "NA"
        print(f"{seed},{s.events},{s.originated},{s.delivered},{pdf},{path}")
    return EXIT_OK


def _scalar(name: str, fn: Callable[[], float], fmt: str, summary: dict) -> None:
    try:
        value = fn()
    except metrics.MetricUndefined as exc:
        print(f"{name}: NA ({exc})")
        summary[name] = "NA"
        return
    print(f"{name}: {value:{fmt}}")
    summary[name] = value


def _series(name: str, series: list[tuple[float, float]], unit: str) -> None:
    values = [v for _t, v in series]
    peak = max(values, default=0.0)
    mean = sum(values) / len(values) if values else 0.0
    print(f"{name}: peak={peak:.2f}{unit} mean={mean:.2f}{unit} bins={len(values)}")


def cmd_analyze(args: argparse.Namespace) -> int:
    if args.bin <= 0:
        print("--bin must be positive", file=sys.stderr)
        return EXIT_USAGE
    try:
        records = read_trace(args.trace)
    except (TraceError, OSError) as exc:
        print(f"trace error: {exc}", file=sys.stderr)
        return EXIT_TRACE

    wanted = {m for m in ("pdf", "throughput", "nrl", "delay", "infection") if getattr(args, m)}
    if not wanted:
        wanted = {"pdf", "throughput", "nrl", "delay", "infection"}
    csv_dir = Path(args.csv) if args.csv else None
    if csv_dir is not None:
        csv_dir.mkdir(parents=True, exist_ok=True)

    summary: dict[str, float | str] = {}
    if "pdf" in wanted:
        _scalar("pdf", lambda: metrics.pdf(records), ".2f", summary)
    if "nrl" in wanted:
        _scalar("nrl", lambda: metrics.nrl(records), ".4f", summary)
        summary["routing_transmissions"] = float(metrics.routing_transmissions(records))
        print(f"routing transmissions: {metrics.routing_transmissions(records)}")
    if "delay" in wanted:
        _scalar("delay", lambda: metrics.avg_end_to_end_delay(records), ".6f", summary)
    if "throughput" in wanted:
        series = metrics.throughput_series(records, args.bin)
        _series("throughput", series, " pkt/s")
        if csv_dir is not None:
            metrics.write_series_csv(series, csv_dir / "throughput.csv")
    if "infection" in wanted:
        series = metrics.infection_series(records, args.bin)
        _series("infection", series, "%")
        if csv_dir is not None:
            metrics.write_series_csv(series, csv_dir / "infection.csv")
    if csv_dir is not None:
        metrics.write_summary_csv(summary, csv_dir / "summary.csv")

    report = metrics.check_conservation(records)
    if not report.ok:
        for line in report.violations[:20]:
            print(f"conservation: {line}", file=sys.stderr)
        return EXIT_TRACE
    return EXIT_OK


def cmd_tables(args: argparse.Namespace) -> int:
    try:
        records = read_trace(args.trace)
    except (TraceError, OSError) as exc:
        print(f"trace error: {exc}", file=sys.stderr)
        return EXIT_TRACE
    tables = metrics.per_node_tables(records)
    print(metrics.render_tables(tables), end="")
    if args.csv:
        metrics.write_tables_csv(tables, args.csv)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="manetsim", description="AODV selfish-node attack and IDS simulator")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    run = sub.add_parser("run", help="simulate a scenario and write its trace")
    run.add_argument("scenario", help="scenario file, or preset name: " + ", ".join(PRESETS))
    run.add_argument("-o", "--output", required=True, help="trace file to write")
    run.add_argument("--seed", type=int, help="override the scenario seed")
    run.add_argument("--seeds", type=int, metavar="N",
                     help="run N consecutive seeds, one trace and one summary row each")
    run.add_argument("--trace-mobility", action="store_true",
                     help="also log node positions every mobility step")
    run.set_defaults(func=cmd_run)

    an = sub.add_parser("analyze", help="compute metrics from a trace")
    an.add_argument("trace")
    an.add_argument("--pdf", action="store_true", help="packet delivery fraction, percent")
    an.add_argument("--throughput", action="store_true", help="deliveries per second per bin")
    an.add_argument("--nrl", action="store_true", help="normalized routing load")
    an.add_argument("--delay", action="store_true", help="mean end-to-end delay, seconds")
    an.add_argument("--infection", action="store_true", help="infection percentage per bin")
    an.add_argument("--bin", type=float, default=1.0, help="series bin width in seconds")
    an.add_argument("--csv", metavar="DIR", help="write CSV files into DIR")
    an.set_defaults(func=cmd_analyze)

    tb = sub.add_parser("tables", help="per-node TCP data and ACK tables")
    tb.add_argument("trace")
    tb.add_argument("--csv", metavar="DIR", help="write one CSV per column into DIR")
    tb.set_defaults(func=cmd_tables)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
