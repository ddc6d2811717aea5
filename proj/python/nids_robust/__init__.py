"""Adversarial robustness toolkit for flow-based intrusion detection."""

from ._core import (
    Model,
    Pipeline,
    bce,
    checksum,
    fgsm,
    majority_vote,
    metrics,
    percentile,
    run_ablation_synth,
    run_experiment_synth,
    significance_test,
    synth_csv,
    synth_schema_path,
    train_model,
)

__all__ = [
    "Model",
    "Pipeline",
    "bce",
    "checksum",
    "fgsm",
    "majority_vote",
    "metrics",
    "percentile",
    "run_ablation_synth",
    "run_experiment_synth",
    "significance_test",
    "synth_csv",
    "synth_schema_path",
    "train_model",
]
