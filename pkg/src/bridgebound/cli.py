"""Command-line interface.

Four subcommands: ``price`` one configuration, ``sweep`` it over monitoring
frequencies, ``table`` to reproduce a published reference table with golden
checks, and ``fit`` to estimate a convergence rate from a sweep CSV.
Outputs are UTF-8 CSV with a header (JSON with ``--format json``); the
``table`` subcommand prints its comparison report as text by default.

Exit codes: 0 success, 1 validation or usage error, 2 golden-check failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys

from .estimators import price as price_option
from .harness import (
    CSV_HEADER,
    SweepSpec,
    fit_from_csv,
    report_rows,
    reproduce_table,
    run_sweep,
)
from .model import ModelError, load_config

__all__ = ["main"]


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors; keep 2 for golden failures only.
        return 0 if exc.code == 0 else 1
    try:
        return args.func(args)
    except (ModelError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bridgebound",
        description="Monte Carlo pricing of continuously monitored barrier options",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("price", help="price one configuration")
    p.add_argument("config", help="shipped config name or JSON path")
    p.add_argument("--paths", type=int, default=100_000, help="number of Monte Carlo paths")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--alpha", type=float, default=0.05, help="confidence interval level")
    p.add_argument("--workers", type=int, default=1)
    _output_args(p)
    p.set_defaults(func=_cmd_price)

    p = sub.add_parser("sweep", help="price over a list of monitoring frequencies")
    p.add_argument("config")
    p.add_argument("--m", required=True, help="comma-separated step counts, e.g. 1,2,4,16")
    p.add_argument("--paths", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    _output_args(p)
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("table", help="reproduce a published table and check it")
    p.add_argument("table_id", type=int, choices=(1, 2, 3, 4))
    p.add_argument("--paths", type=int, default=None, help="override published path counts")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--format", choices=("text", "json"), default="text")
    p.add_argument("--output", default=None)
    p.set_defaults(func=_cmd_table)

    p = sub.add_parser("fit", help="fit a convergence rate from a sweep CSV")
    p.add_argument("csv_path")
    p.add_argument("--kind", required=True, choices=("exp", "power"))
    _output_args(p)
    p.set_defaults(func=_cmd_fit)

    return parser


def _output_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--output", default=None, help="write to a file instead of stdout")


def _emit(text: str, output: str | None) -> None:
    if output is None:
        sys.stdout.write(text)
        if not text.endswith("\n"):
            sys.stdout.write("\n")
    else:
        with open(output, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def _rows_to_csv(rows: list[dict[str, str]]) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=CSV_HEADER, lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)
    return buf.getvalue()


def _cmd_price(args: argparse.Namespace) -> int:
    model, option = load_config(args.config)
    report = price_option(
        model,
        option,
        args.paths,
        seed=args.seed,
        alpha=args.alpha,
        workers=args.workers,
    )
    label = _label(args.config)
    m = model.grid.n_steps
    if args.format == "json":
        payload = {"config": label, "m": m}
        payload.update(report.to_dict())
        _emit(json.dumps(payload, indent=2), args.output)
    else:
        _emit(_rows_to_csv(report_rows(label, m, report)), args.output)
    return 0


def _cmd_sweep(args: argparse.Namespace) -> int:
    try:
        m_values = tuple(int(part) for part in args.m.split(",") if part.strip())
    except ValueError:
        raise ValueError(f"--m must be comma-separated integers, got {args.m!r}")
    spec = SweepSpec(
        config=args.config,
        m_values=m_values,
        n_paths=args.paths,
        seed=args.seed,
        output=args.output if args.format == "csv" else None,
    )
    reports = run_sweep(spec, workers=args.workers)
    label = _label(args.config)
    if args.format == "json":
        payload = {
            "config": label,
            "n_paths": args.paths,
            "seed": args.seed,
            "results": [{"m": m, **reports[m].to_dict()} for m in sorted(reports)],
        }
        _emit(json.dumps(payload, indent=2), args.output)
    elif args.output is None:
        rows = []
        for m in sorted(reports):
            rows.extend(report_rows(label, m, reports[m]))
        _emit(_rows_to_csv(rows), None)
    return 0


def _cmd_table(args: argparse.Namespace) -> int:
    report = reproduce_table(
        args.table_id, n_paths=args.paths, seed=args.seed, workers=args.workers
    )
    if args.format == "json":
        payload = {
            "table": report.table_id,
            "ok": report.ok,
            "checks": [
                {
                    "label": c.label,
                    "value": c.value,
                    "std_error": c.std_error,
                    "target": c.target,
                    "target_se": c.target_se,
                    "z_score": c.z_score,
                    "passed": c.passed,
                }
                for c in report.checks
            ],
        }
        _emit(json.dumps(payload, indent=2), args.output)
    else:
        _emit(report.format(), args.output)
    return 0 if report.ok else 2


def _cmd_fit(args: argparse.Namespace) -> int:
    kind = "exponential" if args.kind == "exp" else "power"
    fit = fit_from_csv(args.csv_path, kind)
    if args.format == "json":
        payload = {
            "model_kind": fit.model_kind,
            "slope": fit.slope,
            "intercept": fit.intercept,
            "r_squared": fit.r_squared,
            "m_used": list(fit.m_used),
        }
        _emit(json.dumps(payload, indent=2), args.output)
    else:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(("model_kind", "slope", "intercept", "r_squared", "m_used"))
        writer.writerow(
            (
                fit.model_kind,
                repr(fit.slope),
                repr(fit.intercept),
                repr(fit.r_squared),
                ";".join(str(m) for m in fit.m_used),
            )
        )
        _emit(buf.getvalue(), args.output)
    return 0


def _label(config: str) -> str:
    name = config.rsplit("/", 1)[-1]
    return name[:-5] if name.endswith(".json") else name


if __name__ == "__main__":
    sys.exit(main())
