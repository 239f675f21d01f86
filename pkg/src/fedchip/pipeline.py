"""End-to-end simulation runs and plot-ready report bundles.

`simulate_run` drives the whole pipeline (corpus -> partition -> three
training scenarios -> Chip@k scoring) and leaves a results directory behind;
`emit_report` turns a results directory into three flat CSV tables ready for
downstream plotting. Both are deterministic: same config, same bytes.
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

from .corpus import Corpus, generate_synthetic, load_corpus, save_corpus, train_test_split
from .divergence import LN2, divergence_matrix
from .errors import ValidationError
from .evaluator import EvalReport, chip_at_k, sigma_thresholds
from .fedsim.federation import (
    HistoryRow,
    candidate_sets,
    run_centralized,
    run_federated,
    run_independent,
)
from .fedsim.model import SurrogateModel
from .partitioner import DirichletSpec, partition_corpus
from .runconfig import RunConfig
from .seeding import SPLIT_TAG, child_seed

DIVERGENCE_HEADER = ["metric", "measure", "cluster_i", "cluster_j", "value"]
CHIP_HEADER = ["scenario", "k", "chip"]
SCATTER_HEADER = ["description_id", "candidate_index", "metric", "ground_truth", "generated"]
HISTORY_HEADER = ["round", "client_id", "loss", "chip_at_1"]

_SCATTER_METRICS = (("area", "area_um2"), ("power", "total_power_w"), ("slack", "slack_ns"))


def _write_csv(path: Path, header: list[str], rows: list[list]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def _write_json(path: Path, obj) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_history_csv(path: Path, history: list[HistoryRow]) -> None:
    rows = []
    for row in history:
        chip = "" if row.chip_at_1 is None else row.chip_at_1
        loss = "" if math.isnan(row.loss) else row.loss
        rows.append([row.round, row.client_id, loss, chip])
    _write_csv(path, HISTORY_HEADER, rows)


def write_divergence_csv(
    subcorpora: list[Corpus],
    path: Path,
    bins: int = 50,
    measures: tuple[str, ...] = ("KL", "JSD"),
    bits: bool = False,
) -> None:
    """Pairwise divergence table over the client corpora, one row per pair."""
    rows = []
    for metric in ("area", "power", "slack"):
        for measure in measures:
            matrix = divergence_matrix(subcorpora, metric, bins=bins, measure=measure)
            for i in range(matrix.shape[0]):
                for j in range(matrix.shape[1]):
                    if i == j:
                        continue
                    value = float(matrix[i, j])
                    if bits:
                        value /= LN2
                    rows.append([metric, measure, i, j, value])
    _write_csv(path, DIVERGENCE_HEADER, rows)


def _metrics_obj(metrics) -> dict:
    return {
        "area_um2": metrics.area,
        "total_power_w": metrics.total_power,
        "slack_ns": metrics.slack,
    }


def simulate_run(cfg: RunConfig, out_dir: str | Path) -> dict:
    """Run the full pipeline into `out_dir` and return the summary object.

    Results layout:
        run_config.json            normalized echo of the configuration
        clients/client_<i>.jsonl   full per-client sub-corpora
        clients/partition.json     labels, centroids, reassigned ids
        test.jsonl                 pooled held-out test corpus
        history_<scenario>.csv     round, client_id, loss, chip_at_1
        eval_<scenario>.csv        per-description candidate counts (n, c)
        candidates.jsonl           federated-model candidates vs ground truth
        summary.json               Chip@k per scenario
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "clients").mkdir(exist_ok=True)

    if cfg.data.corpus_path is not None:
        corpus = load_corpus(cfg.data.corpus_path)
    else:
        corpus = generate_synthetic(cfg.data.count, cfg.data.seed)

    spec = DirichletSpec(alpha=cfg.partition.alpha, fraction=cfg.partition.fraction)
    partition, subcorpora = partition_corpus(
        corpus, spec, seed=cfg.data.seed, k=cfg.partition.k, per_point=cfg.partition.per_point
    )
    partition.save(out / "clients" / "partition.json")
    for i, sub in enumerate(subcorpora):
        save_corpus(sub, out / "clients" / f"client_{i}.jsonl")

    train_corpora: list[Corpus] = []
    test_parts: list[Corpus] = []
    for i, sub in enumerate(subcorpora):
        if len(sub) <= cfg.data.test_size:
            raise ValidationError(
                f"client {i} has {len(sub)} records, too few for test_size="
                f"{cfg.data.test_size}"
            )
        train_part, test_part = train_test_split(
            sub, cfg.data.test_size, seed=child_seed(cfg.data.seed, SPLIT_TAG, i)
        )
        if len(train_part) < cfg.train.batch_size:
            raise ValidationError(
                f"client {i} train split ({len(train_part)}) smaller than batch_size"
            )
        train_corpora.append(train_part)
        test_parts.append(test_part)
    pooled_test = Corpus(tuple(rec for part in test_parts for rec in part))
    save_corpus(pooled_test, out / "test.jsonl")

    thresholds = sigma_thresholds(corpus)
    eval_args = (
        {"eval_corpus": pooled_test, "thresholds": thresholds}
        if cfg.eval.per_round
        else {}
    )

    fed_adapter, fed_hist = run_federated(train_corpora, cfg.train, **eval_args)
    cent_adapter, cent_hist = run_centralized(train_corpora, cfg.train, **eval_args)
    indep = run_independent(train_corpora, cfg.train, **eval_args)

    write_history_csv(out / "history_federated.csv", fed_hist)
    write_history_csv(out / "history_centralized.csv", cent_hist)
    indep_hist = [row for _, hist in indep for row in hist]
    write_history_csv(out / "history_independent.csv", indep_hist)

    model = SurrogateModel.create(cfg.train.seed)  # same base as inside the runs
    ks = cfg.eval.ks
    slack_mode = cfg.eval.slack_mode

    def score(adapter) -> tuple[EvalReport, list]:
        sets = candidate_sets(model, adapter, pooled_test, cfg.train)
        return chip_at_k(sets, thresholds, ks, slack_mode), sets

    fed_report, fed_sets = score(fed_adapter)
    cent_report, _ = score(cent_adapter)
    indep_reports = [score(adapter)[0] for adapter, _ in indep]

    fed_report.write_csv(out / "eval_federated.csv")
    cent_report.write_csv(out / "eval_centralized.csv")
    for i, report in enumerate(indep_reports):
        report.write_csv(out / f"eval_independent_{i}.csv")

    with open(out / "candidates.jsonl", "w", encoding="utf-8") as fh:
        for cand_set in fed_sets:
            fh.write(
                json.dumps(
                    {
                        "description_id": cand_set.description_id,
                        "gt": _metrics_obj(cand_set.gt),
                        "candidates": [_metrics_obj(c) for c in cand_set.candidates],
                    },
                    sort_keys=True,
                )
            )
            fh.write("\n")

    k0 = ks[0]
    summary = {
        "k": list(ks),
        "centralized": cent_report.chip_at_k[k0],
        "federated": fed_report.chip_at_k[k0],
        "independent": [r.chip_at_k[k0] for r in indep_reports],
        "chip_at_k": {
            "centralized": {str(k): cent_report.chip_at_k[k] for k in ks},
            "federated": {str(k): fed_report.chip_at_k[k] for k in ks},
            "independent": [
                {str(k): r.chip_at_k[k] for k in ks} for r in indep_reports
            ],
        },
    }
    _write_json(out / "summary.json", summary)
    _write_json(out / "run_config.json", cfg.to_json_obj())
    return summary


def emit_report(results_dir: str | Path, out_dir: str | Path) -> None:
    """Derive the three plot-ready CSVs from a completed results directory.

    Missing inputs raise FileNotFoundError (exit code 2 on the CLI).
    """
    results = Path(results_dir)
    clients_dir = results / "clients"
    summary_path = results / "summary.json"
    candidates_path = results / "candidates.jsonl"
    for needed in (clients_dir, summary_path, candidates_path):
        if not needed.exists():
            raise FileNotFoundError(f"missing input: {needed}")
    client_files = sorted(clients_dir.glob("client_*.jsonl"))
    if not client_files:
        raise FileNotFoundError(f"no client_*.jsonl files in {clients_dir}")

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    subcorpora = [load_corpus(path) for path in client_files]
    write_divergence_csv(subcorpora, out / "divergence.csv")

    with open(summary_path, "r", encoding="utf-8") as fh:
        summary = json.load(fh)
    chip_rows = []
    detail = summary["chip_at_k"]
    for scenario in ("centralized", "federated"):
        for k, value in sorted(detail[scenario].items(), key=lambda kv: int(kv[0])):
            chip_rows.append([scenario, int(k), value])
    for i, per_k in enumerate(detail["independent"]):
        for k, value in sorted(per_k.items(), key=lambda kv: int(kv[0])):
            chip_rows.append([f"independent_{i}", int(k), value])
    _write_csv(out / "chip_scenarios.csv", CHIP_HEADER, chip_rows)

    scatter_rows = []
    with open(candidates_path, "r", encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            obj = json.loads(line)
            for idx, cand in enumerate(obj["candidates"]):
                for metric, key in _SCATTER_METRICS:
                    scatter_rows.append(
                        [obj["description_id"], idx, metric, obj["gt"][key], cand[key]]
                    )
    _write_csv(out / "scatter.csv", SCATTER_HEADER, scatter_rows)
