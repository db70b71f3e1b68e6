from .config import BENCHMARKS, MODELS, NETWORKS, ExperimentConfig, UsageError, derived_seed
from .pipeline import cmd_backtest, cmd_fit, cmd_forecast, cmd_ingest, run_all
from .report import cmd_report
