"""Experiment harness: instance chains, timed runs, statistics and reports."""
from deckrec.bench.harness import (AlgoSpec, ExperimentConfig, ExperimentResult, PartialResults,
                                   RunRow, rows_from_jsonl, run_experiment)
from deckrec.bench.report import emit_report, format_table, load_report, mask_timing
from deckrec.bench.stats import WelchResult, pairwise_welch, welch_test
from deckrec.bench.timing import time_algorithm

__all__ = [
    "AlgoSpec", "ExperimentConfig", "ExperimentResult", "PartialResults", "RunRow",
    "rows_from_jsonl", "run_experiment", "emit_report", "format_table", "load_report", "mask_timing",
    "WelchResult", "pairwise_welch", "welch_test", "time_algorithm",
]
