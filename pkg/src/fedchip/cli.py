"""Command-line entry point.

Subcommands:
    gen           generate a synthetic corpus (JSONL)
    partition     split a corpus into client sub-datasets
    analyze       pairwise divergence table across client datasets
    simulate      run the full federated/centralized/independent comparison
    evaluate      derive the plot-ready CSV bundle from a results directory
    parse-report  extract PPA metrics from synthesis-report text files

Exit codes: 0 success, 1 validation/usage error, 2 I/O error. When a
subcommand takes --seed and none is given, the FEDCHIP_SEED environment
variable is used (default 0).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import __version__
from .corpus import generate_synthetic, load_corpus, save_corpus
from .errors import ValidationError
from .partitioner import DirichletSpec, partition_corpus
from .pipeline import emit_report, simulate_run, write_divergence_csv
from .report_parser import parse_batch
from .runconfig import load_run_config


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on usage errors by default; the CLI contract says 1
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _resolve_seed(value: int | None) -> int:
    if value is not None:
        return value
    return int(os.environ.get("FEDCHIP_SEED", "0"))


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="fedchip", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"fedchip {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p_gen = sub.add_parser("gen", help="generate a synthetic corpus")
    p_gen.add_argument("--count", type=int, required=True, help="number of records")
    p_gen.add_argument("--seed", type=int, default=None, help="RNG seed (default: FEDCHIP_SEED or 0)")
    p_gen.add_argument("--out", required=True, help="output JSONL path")

    p_part = sub.add_parser("partition", help="cluster a corpus into client datasets")
    p_part.add_argument("--in", dest="corpus", required=True, help="input corpus JSONL")
    p_part.add_argument("--k", type=int, default=3, help="number of clients (default 3)")
    p_part.add_argument("--fraction", type=float, default=0.2,
                        help="fraction of points reassigned (default 0.2)")
    p_part.add_argument("--alpha", type=float, default=1.0,
                        help="symmetric Dirichlet concentration (default 1.0)")
    p_part.add_argument("--dirichlet-mode", choices=("per-point", "per-batch"),
                        default="per-point",
                        help="fresh probability vector per point, or one shared vector")
    p_part.add_argument("--seed", type=int, default=None, help="RNG seed (default: FEDCHIP_SEED or 0)")
    p_part.add_argument("--out-dir", required=True, help="directory for client_<i>.jsonl + partition.json")

    p_an = sub.add_parser("analyze", help="divergence table across client datasets")
    p_an.add_argument("--clients", required=True, help="directory holding client_<i>.jsonl files")
    p_an.add_argument("--bins", type=int, default=50, help="histogram bins (default 50)")
    p_an.add_argument("--measure", choices=("kl", "jsd", "both"), default="both",
                      help="divergence measure(s) to report (default both)")
    p_an.add_argument("--bits", action="store_true",
                      help="report divergences in bits instead of nats")
    p_an.add_argument("--out", required=True, help="output CSV path")

    p_sim = sub.add_parser("simulate", help="run the full training comparison")
    p_sim.add_argument("--config", required=True, help="TOML run configuration")
    p_sim.add_argument("--out", required=True, help="results directory")

    p_ev = sub.add_parser("evaluate", help="emit the plot-ready report bundle")
    p_ev.add_argument("--results", required=True, help="results directory from simulate")
    p_ev.add_argument("--out-dir", required=True, help="directory for the CSV bundle")

    p_pr = sub.add_parser("parse-report", help="extract PPA metrics from report files")
    p_pr.add_argument("paths", nargs="+", help="report text files")
    p_pr.add_argument("--out", required=True, help="output JSONL path")

    return parser


def _cmd_gen(args) -> int:
    corpus = generate_synthetic(args.count, _resolve_seed(args.seed))
    save_corpus(corpus, args.out)
    print(f"wrote {len(corpus)} records to {args.out}")
    return 0


def _cmd_partition(args) -> int:
    corpus = load_corpus(args.corpus)
    spec = DirichletSpec(alpha=args.alpha, fraction=args.fraction)
    partition, subcorpora = partition_corpus(
        corpus,
        spec,
        seed=_resolve_seed(args.seed),
        k=args.k,
        per_point=(args.dirichlet_mode == "per-point"),
    )
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    for i, sub in enumerate(subcorpora):
        save_corpus(sub, out_dir / f"client_{i}.jsonl")
    partition.save(out_dir / "partition.json")
    sizes = ", ".join(str(len(sub)) for sub in subcorpora)
    print(f"wrote {args.k} client files to {out_dir} (sizes: {sizes})")
    return 0


def _cmd_analyze(args) -> int:
    clients_dir = Path(args.clients)
    client_files = sorted(clients_dir.glob("client_*.jsonl"))
    if not client_files:
        raise FileNotFoundError(f"no client_*.jsonl files in {clients_dir}")
    subcorpora = [load_corpus(path) for path in client_files]
    measures = {"kl": ("KL",), "jsd": ("JSD",), "both": ("KL", "JSD")}[args.measure]
    write_divergence_csv(subcorpora, Path(args.out), bins=args.bins,
                         measures=measures, bits=args.bits)
    print(f"wrote divergence table to {args.out}")
    return 0


def _cmd_simulate(args) -> int:
    cfg = load_run_config(args.config)
    summary = simulate_run(cfg, args.out)
    print(json.dumps(summary, indent=2, sort_keys=True))
    return 0


def _cmd_evaluate(args) -> int:
    emit_report(args.results, args.out_dir)
    print(f"wrote divergence.csv, chip_scenarios.csv, scatter.csv to {args.out_dir}")
    return 0


def _cmd_parse_report(args) -> int:
    items = parse_batch(args.paths)
    with open(args.out, "w", encoding="utf-8") as fh:
        for item in items:
            if item.ok:
                fh.write(json.dumps({
                    "source": item.source,
                    "area_um2": item.metrics.area,
                    "total_power_w": item.metrics.total_power,
                    "slack_ns": item.metrics.slack,
                }, sort_keys=True))
                fh.write("\n")
            else:
                print(f"{item.source}: {item.error}", file=sys.stderr)
    parsed = sum(item.ok for item in items)
    print(f"parsed {parsed}/{len(items)} reports into {args.out}")
    return 0


_COMMANDS = {
    "gen": _cmd_gen,
    "partition": _cmd_partition,
    "analyze": _cmd_analyze,
    "simulate": _cmd_simulate,
    "evaluate": _cmd_evaluate,
    "parse-report": _cmd_parse_report,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return _COMMANDS[args.command](args)
    except SystemExit as exc:  # argparse --help/usage paths
        return int(exc.code or 0)
    except (ValidationError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
