from ppgssl.eval.metrics import (
    MetricSummary,
    binary_auc,
    macro_ovr_auc,
    relative_mse,
    relative_mse_from_arrays,
    summarize,
)
from ppgssl.eval.splits import (
    FoldPlan,
    LosoPlan,
    derive_seed,
    few_shot_sample,
    loso_splits,
    subject_stratified_folds,
)
from ppgssl.eval.experiments import (
    BASELINE_CFG,
    DOWNSTREAM_METHODS,
    PRETEXT_CFG,
    ExperimentReport,
    ReportRow,
    checkpoint_name,
    run_bi,
    run_downstream,
    run_pretext,
)
from ppgssl.eval.reports import (
    merge_reports,
    read_detail_csv,
    write_detail_csv,
    write_summary_csv,
)

__all__ = [
    "BASELINE_CFG",
    "DOWNSTREAM_METHODS",
    "ExperimentReport",
    "FoldPlan",
    "LosoPlan",
    "MetricSummary",
    "PRETEXT_CFG",
    "ReportRow",
    "binary_auc",
    "checkpoint_name",
    "derive_seed",
    "few_shot_sample",
    "loso_splits",
    "macro_ovr_auc",
    "merge_reports",
    "read_detail_csv",
    "relative_mse",
    "relative_mse_from_arrays",
    "run_bi",
    "run_downstream",
    "run_pretext",
    "subject_stratified_folds",
    "summarize",
    "write_detail_csv",
    "write_summary_csv",
]
