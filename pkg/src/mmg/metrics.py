"""Estimators over run records and closed-form occupancy predictors.

All estimators are pure functions of the columnar records. Windows are
half-open tick ranges ``[start, stop)``; ``None`` means the last half of
the run, which excludes the transient before the occupancies settle.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .engine import RunRecords

__all__ = [
    "SeriesStats",
    "MuHistogram",
    "SwitchSeries",
    "CriticalFluctuation",
    "ModeThresholds",
    "MODES",
    "resolve_window",
    "series_stats",
    "mu_histogram",
    "switch_series",
    "fluctuation_frequency",
    "relaxation_time",
    "predicted_occupancies",
    "predicted_irregular",
    "detect_critical_history",
    "split_detected",
    "classify_mode",
    "big_small_markets",
]

MODES = ("random", "herd-symmetric", "herd-asymmetric", "cooperation")

#: Default threshold for a "large" fluctuation: |A| >= theta * O separates
#: full-market collective events from ordinary sqrt(O)-scale noise.
DEFAULT_THETA = 0.9


def resolve_window(n_ticks: int, window: tuple[int, int] | None) -> tuple[int, int]:
    """Validate ``window`` against the recorded range; ``None`` -> last half."""
    if window is None:
        window = (n_ticks // 2, n_ticks)
    start, stop = int(window[0]), int(window[1])
    if not 0 <= start < stop <= n_ticks:
        raise ValueError(f"window [{start}, {stop}) invalid for {n_ticks} recorded ticks")
    return start, stop


@dataclass(frozen=True)
class SeriesStats:
    """Per-market time averages over a measurement window."""

    window: tuple[int, int]
    mean_occupancy: np.ndarray  # (K,)
    mean_demand: np.ndarray  # (K,)
    per_capita_var: np.ndarray  # (K,) mean(A^2) / mean(O)


def series_stats(records: RunRecords, window: tuple[int, int] | None = None) -> SeriesStats:
    """Window averages of occupancy and demand, and per-capita demand variance.

    The per-capita variance is mean(A_k^2) / mean(O_k) over the window, not
    a variance of per-tick ratios. Markets empty throughout the window get
    variance 0.
    """
    a, b = resolve_window(records.n_ticks, window)
    occ = records.occupancy[a:b].astype(np.float64)
    dem = records.demand[a:b].astype(np.float64)
    mean_occ = occ.mean(axis=0)
    mean_sq = (dem**2).mean(axis=0)
    var = np.divide(mean_sq, mean_occ, out=np.zeros_like(mean_sq), where=mean_occ > 0)
    return SeriesStats(
        window=(a, b),
        mean_occupancy=mean_occ,
        mean_demand=dem.mean(axis=0),
        per_capita_var=var,
    )


def big_small_markets(stats: SeriesStats) -> tuple[int, int]:
    """(big, small) market indices by window-mean occupancy; per-run labels."""
    return int(np.argmax(stats.mean_occupancy)), int(np.argmin(stats.mean_occupancy))


@dataclass(frozen=True)
class MuHistogram:
    """Empirical distribution of one market's history values."""

    market: int
    window: tuple[int, int]
    counts: np.ndarray  # (2**m,)
    p: np.ndarray  # (2**m,) counts normalized to 1


def mu_histogram(
    records: RunRecords, market: int, window: tuple[int, int] | None = None
) -> MuHistogram:
    a, b = resolve_window(records.n_ticks, window)
    values = records.history[a:b, market]
    counts = np.bincount(values, minlength=1 << records.memory).astype(np.int64)
    return MuHistogram(market=market, window=(a, b), counts=counts, p=counts / (b - a))


@dataclass(frozen=True)
class CriticalFluctuation:
    """First large fluctuation on a market and the recurrences of its history."""

    market: int
    history: int
    first_tick: int
    recurrences: np.ndarray  # all later ticks where the history value recurs


def detect_critical_history(
    records: RunRecords, market: int, theta: float = DEFAULT_THETA
) -> CriticalFluctuation | None:
    """History preceding the first fluctuation with |A| >= theta * O > 0."""
    occ = records.occupancy[:, market]
    dem = records.demand[:, market]
    hits = np.flatnonzero((occ > 0) & (np.abs(dem) >= theta * occ))
    if len(hits) == 0:
        return None
    t1 = int(hits[0])
    mu_c = int(records.history[t1, market])
    later = np.flatnonzero(records.history[:, market] == mu_c)
    return CriticalFluctuation(
        market=market, history=mu_c, first_tick=t1, recurrences=later[later > t1]
    )


@dataclass(frozen=True)
class SwitchSeries:
    """Per-tick market-switch counts, optionally conditioned on recurrences.

    Switching triggered by a recurrence at tick t shows up in the choices of
    tick t+1, so the conditioned mean is taken over C(t+1).
    """

    c: np.ndarray  # (T,)
    mean_c_at_recurrence: float | None = None
    recurrence_ticks: np.ndarray | None = None


def switch_series(
    records: RunRecords, market: int | None = None, theta: float = DEFAULT_THETA
) -> SwitchSeries:
    c = records.n_switched
    if market is None:
        return SwitchSeries(c=c)
    crit = detect_critical_history(records, market, theta)
    if crit is None or len(crit.recurrences) == 0:
        return SwitchSeries(c=c)
    after = crit.recurrences[crit.recurrences + 1 < records.n_ticks] + 1
    mean_c = float(c[after].mean()) if len(after) else None
    return SwitchSeries(c=c, mean_c_at_recurrence=mean_c, recurrence_ticks=crit.recurrences)


def fluctuation_frequency(
    records: RunRecords,
    market: int,
    theta: float = DEFAULT_THETA,
    window: tuple[int, int] | None = None,
) -> float:
    """Rate of ticks with |A| >= theta * O on a non-empty market."""
    if not 0 < theta <= 1:
        raise ValueError(f"theta must be in (0, 1], got {theta}")
    a, b = resolve_window(records.n_ticks, window)
    occ = records.occupancy[a:b, market]
    dem = records.demand[a:b, market]
    return float(np.count_nonzero((occ > 0) & (np.abs(dem) >= theta * occ)) / (b - a))


def relaxation_time(
    records: RunRecords,
    n_agents: int,
    n_strategies: int,
    belt: float = 0.05,
    min_stay: int = 50,
) -> int | None:
    """First tick from which every occupancy stays in the +-belt*N band
    around one of the split levels N/2**s and N(1 - 1/2**s) until the end
    of the recorded range.

    "Forever" is only checkable to the end of the run; to keep a lucky
    final tick from counting as stabilization, the terminal in-band
    stretch must span at least ``min_stay`` ticks, else None.
    """
    if not 0 < belt < 1:
        raise ValueError(f"belt must be in (0, 1), got {belt}")
    low = n_agents / (1 << n_strategies)
    high = n_agents - low
    tol = belt * n_agents
    occ = records.occupancy
    near = (np.abs(occ - low) <= tol) | (np.abs(occ - high) <= tol)
    ok = near.all(axis=1)
    if ok.all():
        tau = 0
    else:
        last_bad = int(np.flatnonzero(~ok)[-1])
        tau = last_bad + 1
    if tau >= records.n_ticks or records.n_ticks - tau < min_stay:
        return None
    return tau


def predicted_occupancies(n_agents: int, n_markets: int, n_strategies: int) -> list[float]:
    """Asymptotic occupancies, largest market first; sums exactly to N.

    With r = 1/2**s, the k-th largest market keeps N(1-r)r**(k-1) agents
    and the smallest keeps the remainder N r**(K-1).
    """
    if n_markets < 1 or n_strategies < 1:
        raise ValueError("n_markets and n_strategies must be >= 1")
    r = 1.0 / (1 << n_strategies)
    if n_markets == 1:
        return [float(n_agents)]
    out = [n_agents * (1 - r) * r**k for k in range(n_markets - 1)]
    out.append(n_agents * r ** (n_markets - 1))
    return out


def predicted_irregular(n1: int, n2: int, n_strategies: int) -> tuple[float, float]:
    """Large-n1 asymptote of the exclusive market and limit of the shared one."""
    if n1 < 0 or n2 < 0 or n_strategies < 1:
        raise ValueError("need n1, n2 >= 0 and n_strategies >= 1")
    r = 1.0 / (1 << n_strategies)
    return n1 + (1 - r) * n2, n2 * r


def split_detected(
    records: RunRecords,
    window: tuple[int, int] | None = None,
    gap_frac: float = 0.2,
    sustain: float = 0.9,
) -> bool:
    """True when the occupancy gap exceeds gap_frac * N on at least a
    ``sustain`` fraction of the window's ticks."""
    a, b = resolve_window(records.n_ticks, window)
    occ = records.occupancy[a:b]
    n_agents = int(occ[0].sum())
    gap = occ.max(axis=1) - occ.min(axis=1)
    return bool(np.mean(gap > gap_frac * n_agents) >= sustain)


@dataclass(frozen=True)
class ModeThresholds:
    """Per-capita variance bands for mode labels; boundary 1.0 is random."""

    herd_var: float = 1.5
    coop_var: float = 0.75


def classify_mode(
    stats: SeriesStats, split: bool, thresholds: ModeThresholds = ModeThresholds()
) -> str:
    """Heuristic game-mode label from stationary statistics.

    A persistent split wins outright; otherwise the largest per-capita
    variance decides between herd, cooperation and random.
    """
    if split:
        return "herd-asymmetric"
    peak = float(np.max(stats.per_capita_var))
    if peak > thresholds.herd_var:
        return "herd-symmetric"
    if peak < thresholds.coop_var:
        return "cooperation"
    return "random"
