"""fedchip: federated fine-tuning simulator and chip-design evaluation toolkit.

Pipeline at a glance: generate or load a corpus of (instruction, design,
PPA-metrics) records, split it into non-IID client datasets (k-means plus
Dirichlet reassignment), train low-rank adapters locally on each client and
aggregate them with FedAvg, then score generated designs with the Chip@k
metric under a three-sigma acceptance rule.
"""

from .corpus import (
    Corpus,
    DesignParams,
    DesignRecord,
    NormStats,
    PpaMetrics,
    cost_model,
    generate_synthetic,
    load_corpus,
    save_corpus,
    train_test_split,
    zscore_normalize,
)
from .divergence import Histogram, build_histogram, divergence_matrix, js_divergence, kl_divergence
from .errors import ParseError, ValidationError
from .evaluator import (
    CandidateSet,
    EvalReport,
    SigmaThresholds,
    accepts,
    chip_at_k,
    chip_at_k_single,
    deviations,
    sigma_thresholds,
)
from .partitioner import DirichletSpec, Partition, dirichlet_reassign, kmeans, partition_corpus
from .report_parser import BatchItem, ReportDoc, parse_batch, parse_ppa

__version__ = "0.1.0"
