from .config import (
    CONFIG_SCHEMA,
    apply_overrides,
    default_config,
    load_config,
    resolve_scope_kind,
    write_resolved_config,
)
from .report import (
    CSV_HEADER,
    POSITIONAL_HEADER,
    EvalReport,
    PositionalRow,
    ReportRow,
    emit_positional,
    emit_report,
    load_report_csv,
)
from .runner import (
    ExperimentConfig,
    RunResult,
    grid_search,
    prepare_dataset,
    prepare_model,
    run_experiment,
    sample_eval_users,
    scope_ablation,
)
from .figures import render_figures

__all__ = [
    "CONFIG_SCHEMA",
    "CSV_HEADER",
    "POSITIONAL_HEADER",
    "EvalReport",
    "ExperimentConfig",
    "PositionalRow",
    "ReportRow",
    "RunResult",
    "apply_overrides",
    "default_config",
    "emit_positional",
    "emit_report",
    "grid_search",
    "load_config",
    "load_report_csv",
    "prepare_dataset",
    "prepare_model",
    "render_figures",
    "resolve_scope_kind",
    "run_experiment",
    "sample_eval_users",
    "scope_ablation",
    "write_resolved_config",
]
