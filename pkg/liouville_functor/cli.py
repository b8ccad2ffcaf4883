"""CLI entry point."""

import argparse
import logging
import sys
from pathlib import Path

import mpmath
from dotenv import load_dotenv
from rich.console import Console
from rich.logging import RichHandler
from rich.markup import escape
from rich.table import Table

from .blocks import FAMILIES
from .config import DEFAULT_PRECISION, DEFAULT_SEED, DEFAULT_THREADS
from .errors import InputError
from .formats import parse_rational
from .main import Report, run
from .models import RunConfig

GLOBAL_OPTIONS = ("json", "precision", "threads", "seed", "verbose", "no_timing", "command", "action")


def _rational(text: str):
    try:
        return parse_rational(text)
    except InputError as exc:
        raise argparse.ArgumentTypeError(exc.message) from None


def _rational_list(text: str):
    return [_rational(part) for part in text.split(",") if part.strip()]


def _real(text: str) -> str:
    try:
        mpmath.mpf(text)
    except (ValueError, TypeError):
        raise argparse.ArgumentTypeError(f"{text!r} is not a real number") from None
    return text.strip()


def _complex_pair(text: str) -> tuple[str, str]:
    parts = text.split(",")
    if len(parts) != 2:
        raise argparse.ArgumentTypeError(f"expected 're,im', got {text!r}")
    return _real(parts[0]), _real(parts[1])


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--json", action="store_true", help="Emit a single JSON report on stdout")
    common.add_argument("--precision", type=int, default=DEFAULT_PRECISION, help="Significant digits for numeric output")
    common.add_argument("--threads", type=int, default=DEFAULT_THREADS, help="Workers for grid computations")
    common.add_argument("--seed", type=int, default=DEFAULT_SEED, help="Seed for randomized checks")
    common.add_argument("--verbose", "-v", action="store_true", help="Log progress to stderr")
    common.add_argument("--no-timing", action="store_true", help="Report timing_ms as null")

    parser = argparse.ArgumentParser(
        prog="liouville-functor",
        description="Exact computations for Liouville conformal blocks, Schottky groups and pants moves.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    graphs = sub.add_parser("graphs", help="Stable graphs").add_subparsers(dest="action", required=True)
    p = graphs.add_parser("enumerate", parents=[common], help="Trivalent classes of type (g, n)")
    p.add_argument("--genus", type=int, required=True)
    p.add_argument("--tails", type=int, required=True)
    p = graphs.add_parser("validate", parents=[common], help="Validate a graph file and describe its curve")
    p.add_argument("graph", type=Path)

    schottky = sub.add_parser("schottky", help="Schottky generators").add_subparsers(dest="action", required=True)
    p = schottky.add_parser("verify", parents=[common], help="Check the identities of the phi_h")
    p.add_argument("--graph", type=Path, required=True)
    p.add_argument("--alpha", type=Path, default=None, help="Alpha table (random tables when omitted)")
    p.add_argument("--cutoff", type=int, default=4)
    p.add_argument("--samples", type=int, default=100)

    p = sub.add_parser("gram", parents=[common], help="Gram matrix of the Shapovalov form")
    p.add_argument("--level", type=int, required=True)
    p.add_argument("--b", type=_rational, required=True)
    p.add_argument("--delta", type=_rational, required=True)

    p = sub.add_parser("char", parents=[common], help="Verma module character")
    p.add_argument("--delta", type=_rational, required=True)
    p.add_argument("--order", type=int, required=True)

    p = sub.add_parser("weight", parents=[common], help="Conformal dimension from momentum, alpha or length")
    p.add_argument("--b", type=_rational, required=True)
    source = p.add_mutually_exclusive_group()
    source.add_argument("--momentum", type=_rational)
    source.add_argument("--alpha", type=_rational)
    source.add_argument("--length", type=_real)

    p = sub.add_parser("block4", parents=[common], help="Four-point sphere block")
    p.add_argument("--b", type=_rational, required=True)
    for name in ("d1", "d2", "d3", "d4"):
        p.add_argument(f"--{name}", type=_rational, required=True)
    p.add_argument("--dbeta", type=_rational_list, required=True, help="Internal weight(s), comma separated")
    p.add_argument("--order", type=int, required=True)
    p.add_argument("--family", choices=FAMILIES, default="window")

    p = sub.add_parser("torus1", parents=[common], help="One-point torus block")
    p.add_argument("--b", type=_rational, required=True)
    p.add_argument("--dext", type=_rational, required=True)
    p.add_argument("--dbeta", type=_rational, required=True)
    p.add_argument("--order", type=int, required=True)
    p.add_argument("--diagnostic", action="store_true", help="Pair with the Shapovalov form instead")
    p.add_argument("--family", choices=FAMILIES, default="window")

    p = sub.add_parser("pants", parents=[common], help="Block glued along a pants decomposition")
    p.add_argument("--b", type=_rational, required=True)
    p.add_argument("--graph", type=Path, required=True, help="Trivalent graph file")
    p.add_argument("--beta", type=Path, required=True, help="Internal weight per edge")
    p.add_argument("--externals", type=Path, required=True, help="External weight per tail")
    p.add_argument("--order", type=int, required=True, help="Total degree in the q_e")
    p.add_argument("--family", choices=FAMILIES, default="window")

    p = sub.add_parser("wave", parents=[common], help="Evaluate a block series as a wave function")
    p.add_argument("--coeffs", type=Path, required=True)
    p.add_argument("--q", type=_complex_pair, required=True, help="re,im")
    p.add_argument("--winding", type=int, default=0)
    p.add_argument("--half-twist", action="store_true")

    p = sub.add_parser("moves", parents=[common], help="Fusing-move graph on trivalent classes")
    p.add_argument("--genus", type=int, required=True)
    p.add_argument("--tails", type=int, required=True)

    p = sub.add_parser("phase", parents=[common], help="Phase of a move word")
    p.add_argument("--word", type=Path, required=True)
    p.add_argument("--beta", type=Path, required=True)

    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    command = args.command if getattr(args, "action", None) is None else f"{args.command} {args.action}"
    params = {k: v for k, v in vars(args).items() if k not in GLOBAL_OPTIONS}
    return RunConfig(
        command=command,
        params=params,
        output="json" if args.json else "human",
        precision=args.precision,
        threads=args.threads,
        seed=args.seed,
        timing=not args.no_timing,
    )


def _render(console: Console, err: Console, report: Report) -> None:
    if report.error is not None:
        err.print(f"\n[bold red]Error:[/] {escape(report.error['message'])}\n")
        return
    result = report.result
    if report.command == "gram":
        basis = report.meta["basis"]
        table = Table(title=f"Gram matrix (c = {report.meta['central_charge']})")
        table.add_column("")
        for label in basis:
            table.add_column(label, justify="right")
        for label, row in zip(basis, result):
            table.add_row(label, *row)
        console.print(table)
    elif isinstance(result, dict) and "coefficients" in result:
        table = Table(title=f"q^{result['delta_beta']} * sum c_n q^n")
        table.add_column("n", justify="right")
        table.add_column("c_n", justify="right")
        for n, c in enumerate(result["coefficients"]):
            table.add_row(str(n), c)
        console.print(table)
    else:
        console.print_json(data=result)
    if report.timing_ms is not None:
        err.print(f"[dim]{report.timing_ms} ms[/]")


def main(argv: list[str] | None = None) -> int:
    load_dotenv()

    args = build_parser().parse_args(argv)
    config = config_from_args(args)

    err = Console(stderr=True)
    if args.verbose:
        logging.basicConfig(
            level=logging.DEBUG,
            format="%(message)s",
            handlers=[RichHandler(console=err, show_path=False)],
        )

    try:
        if config.is_json:
            report = run(config)
            sys.stdout.write(report.to_json())
        else:
            with err.status("") as status:
                report = run(config, on_progress=lambda msg: status.update(f"[bold cyan]{escape(msg)}[/]"))
            _render(Console(), err, report)
    except KeyboardInterrupt:
        err.print("\n[yellow]Cancelled.[/]")
        return 1
    except Exception as e:
        err.print(f"\n[bold red]Error:[/] {escape(str(e))}\n")
        return 1
    return report.status


if __name__ == "__main__":
    sys.exit(main())
