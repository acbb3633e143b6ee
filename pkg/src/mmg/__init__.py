"""Deterministic multi-market minority game simulator and measurement toolkit."""

__version__ = "0.1.0"

from .config import ConfigError, GameConfig, MarketTopology
from .engine import (
    GameState,
    RunRecords,
    TickRecord,
    aggregate_demand,
    choose_active_strategy,
    init_game,
    minority_action,
    payoff,
    run,
    step,
)
from .metrics import (
    CriticalFluctuation,
    ModeThresholds,
    MuHistogram,
    SeriesStats,
    SwitchSeries,
    big_small_markets,
    classify_mode,
    detect_critical_history,
    fluctuation_frequency,
    mu_histogram,
    predicted_irregular,
    predicted_occupancies,
    relaxation_time,
    series_stats,
    split_detected,
    switch_series,
)
from .experiments import (
    RunSummary,
    SweepPoint,
    SweepSpec,
    ensemble_run,
    estimate_critical_q,
    figure_dataset,
    q_sweep,
    summarize_run,
)
from .rng import game_rng, subseed
from .strategies import (
    Endowment,
    History,
    StrategyTable,
    draw_strategies,
    encode_action,
    evaluate_strategy,
    update_history,
)

__all__ = [
    "__version__",
    "ConfigError",
    "GameConfig",
    "MarketTopology",
    "GameState",
    "RunRecords",
    "TickRecord",
    "Endowment",
    "History",
    "StrategyTable",
    "CriticalFluctuation",
    "ModeThresholds",
    "MuHistogram",
    "SeriesStats",
    "SwitchSeries",
    "RunSummary",
    "SweepPoint",
    "SweepSpec",
    "aggregate_demand",
    "big_small_markets",
    "choose_active_strategy",
    "classify_mode",
    "detect_critical_history",
    "draw_strategies",
    "encode_action",
    "ensemble_run",
    "estimate_critical_q",
    "evaluate_strategy",
    "figure_dataset",
    "fluctuation_frequency",
    "game_rng",
    "init_game",
    "minority_action",
    "mu_histogram",
    "payoff",
    "predicted_irregular",
    "predicted_occupancies",
    "q_sweep",
    "relaxation_time",
    "run",
    "series_stats",
    "split_detected",
    "step",
    "subseed",
    "summarize_run",
    "switch_series",
    "update_history",
]
