"""Ensemble orchestration: multi-seed runs, parameter sweeps, figure data.

Every ensemble derives one child seed per run index from the master seed,
so per-run results never move when the ensemble grows and aggregation in
run-index order is deterministic. Failed runs are kept in the output with
their error message instead of aborting the ensemble.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .config import ConfigError, GameConfig, MarketTopology
from .engine import RunRecords, init_game, run, step
from .metrics import (
    DEFAULT_THETA,
    CriticalFluctuation,
    SeriesStats,
    big_small_markets,
    classify_mode,
    detect_critical_history,
    fluctuation_frequency,
    mu_histogram,
    relaxation_time,
    series_stats,
    split_detected,
    switch_series,
)
from .rng import subseed

__all__ = [
    "RunSummary",
    "SweepSpec",
    "SweepPoint",
    "summarize_run",
    "ensemble_run",
    "q_sweep",
    "estimate_critical_q",
    "aggregate_point",
    "sweep_table",
    "figure_dataset",
    "FIGURE_NAMES",
]


@dataclass(eq=False)
class RunSummary:
    """Stationary-regime observables of one seeded run."""

    run_index: int
    seed: int
    stats: SeriesStats | None = None
    big_market: int | None = None
    small_market: int | None = None
    split: bool | None = None
    mode: str | None = None
    tau0: int | None = None
    nu: float | None = None
    critical: CriticalFluctuation | None = None
    mean_c_at_recurrence: float | None = None
    records: RunRecords | None = None
    error: str | None = None

    @property
    def failed(self) -> bool:
        return self.error is not None


def summarize_run(
    records: RunRecords,
    run_index: int = 0,
    seed: int = 0,
    theta: float = DEFAULT_THETA,
    window: tuple[int, int] | None = None,
    n_strategies: int = 2,
    keep_records: bool = False,
) -> RunSummary:
    """Condense one run's records into the standard per-seed summary."""
    stats = series_stats(records, window)
    big, small = big_small_markets(stats)
    split = split_detected(records, window)
    n_agents = records.n_agents
    tau0 = relaxation_time(records, n_agents, n_strategies)
    nu = fluctuation_frequency(records, big, theta, window)
    crit = detect_critical_history(records, big, theta)
    sw = switch_series(records, market=big, theta=theta)
    return RunSummary(
        run_index=run_index,
        seed=seed,
        stats=stats,
        big_market=big,
        small_market=small,
        split=split,
        mode=classify_mode(stats, split),
        tau0=tau0,
        nu=nu,
        critical=crit,
        mean_c_at_recurrence=sw.mean_c_at_recurrence,
        records=records if keep_records else None,
    )


def ensemble_run(
    cfg: GameConfig,
    ticks: int,
    n_seeds: int,
    theta: float = DEFAULT_THETA,
    window: tuple[int, int] | None = None,
    keep_records: bool = False,
) -> list[RunSummary]:
    """Run ``n_seeds`` independent games on substreams of ``cfg.seed``.

    A run that raises is recorded as failed and does not abort the rest.
    """
    if n_seeds < 1:
        raise ConfigError(f"seeds: must be >= 1, got {n_seeds}")
    out: list[RunSummary] = []
    for i in range(n_seeds):
        child = subseed(cfg.seed, i)
        try:
            records = run(replace(cfg, seed=child), ticks)
            out.append(
                summarize_run(
                    records,
                    run_index=i,
                    seed=child,
                    theta=theta,
                    window=window,
                    n_strategies=cfg.n_strategies,
                    keep_records=keep_records,
                )
            )
        except Exception as exc:  # noqa: BLE001 - per-seed isolation is the contract
            out.append(RunSummary(run_index=i, seed=child, error=str(exc)))
    return out


@dataclass(frozen=True)
class SweepSpec:
    """One-parameter ensemble sweep.

    ``param`` is "N" (regular games, total population varies) or "n1"
    (irregular games, exclusive population varies at fixed ``n2``).
    """

    base: GameConfig
    param: str
    values: tuple[int, ...]
    n_seeds: int = 10
    ticks: int = 5000
    window: tuple[int, int] | None = None
    theta: float = DEFAULT_THETA
    n2: int | None = None

    def configs(self) -> list[tuple[int, GameConfig]]:
        if self.param == "N":
            return [(v, replace(self.base, n_agents=v, topology=MarketTopology.regular()))
                    for v in self.values]
        if self.param == "n1":
            n2 = self.n2 if self.n2 is not None else (self.base.topology.n2 or 0)
            if n2 < 0:
                raise ConfigError("n2: must be >= 0 for an n1 sweep")
            return [
                (v, replace(self.base, n_agents=v + n2, n_markets=2,
                            topology=MarketTopology.irregular(v, n2)))
                for v in self.values
            ]
        raise ConfigError(f"sweep: unknown parameter {self.param!r}")


def _mean_std(values: list[float]) -> tuple[float, float]:
    if not values:
        return float("nan"), float("nan")
    arr = np.asarray(values, dtype=np.float64)
    return float(arr.mean()), float(arr.std(ddof=1)) if len(arr) > 1 else 0.0


@dataclass(eq=False)
class SweepPoint:
    """Cross-seed aggregation at one swept value; 'big'/'small' follow each
    run's own labeling, per-market columns follow market indices."""

    value: int
    q: float
    n_seeds: int
    n_failed: int
    o_big: tuple[float, float]
    o_small: tuple[float, float]
    var_big: tuple[float, float]
    var_small: tuple[float, float]
    o_by_market: np.ndarray  # (K, 2) mean, std
    var_by_market: np.ndarray  # (K, 2)
    tau0: tuple[float, float]
    tau0_defined: int
    nu: tuple[float, float]
    split_fraction: float


def aggregate_point(value: int, q: float, summaries: list[RunSummary]) -> SweepPoint:
    """Reduce per-seed summaries in run-index order; tau0 averages only the
    runs where it is defined (the count is reported alongside)."""
    good = [s for s in summaries if not s.failed]
    if not good:
        raise RuntimeError(f"all {len(summaries)} runs failed at value {value}")
    k_markets = len(good[0].stats.mean_occupancy)
    o_by = np.empty((k_markets, 2))
    var_by = np.empty((k_markets, 2))
    for k in range(k_markets):
        o_by[k] = _mean_std([float(s.stats.mean_occupancy[k]) for s in good])
        var_by[k] = _mean_std([float(s.stats.per_capita_var[k]) for s in good])
    tau_vals = [float(s.tau0) for s in good if s.tau0 is not None]
    return SweepPoint(
        value=value,
        q=q,
        n_seeds=len(summaries),
        n_failed=len(summaries) - len(good),
        o_big=_mean_std([float(s.stats.mean_occupancy[s.big_market]) for s in good]),
        o_small=_mean_std([float(s.stats.mean_occupancy[s.small_market]) for s in good]),
        var_big=_mean_std([float(s.stats.per_capita_var[s.big_market]) for s in good]),
        var_small=_mean_std([float(s.stats.per_capita_var[s.small_market]) for s in good]),
        o_by_market=o_by,
        var_by_market=var_by,
        tau0=_mean_std(tau_vals) if tau_vals else (float("nan"), float("nan")),
        tau0_defined=len(tau_vals),
        nu=_mean_std([float(s.nu) for s in good]),
        split_fraction=float(np.mean([bool(s.split) for s in good])),
    )


def q_sweep(spec: SweepSpec) -> list[SweepPoint]:
    """Ensemble at every swept value, output ordered by Q."""
    points = []
    for value, cfg in spec.configs():
        summaries = ensemble_run(cfg, spec.ticks, spec.n_seeds, spec.theta, spec.window)
        q = value / (1 << cfg.memory)
        points.append(aggregate_point(value, q, summaries))
    points.sort(key=lambda p: p.q)
    return points


def estimate_critical_q(
    points: list[SweepPoint], low: float = 0.25, high: float = 0.75
) -> float | None:
    """Midpoint of the narrowest Q interval over which the split fraction
    crosses from below ``low`` to above ``high``; None when it never does."""
    pts = sorted(points, key=lambda p: p.q)
    best: tuple[float, float] | None = None
    for i, a in enumerate(pts):
        if a.split_fraction >= low:
            continue
        for b in pts[i + 1 :]:
            if b.split_fraction > high:
                width = b.q - a.q
                if best is None or width < best[0]:
                    best = (width, (a.q + b.q) / 2)
                break
    return None if best is None else best[1]


# --- figure datasets -------------------------------------------------------

FIGURE_NAMES = (
    "fig3", "fig4", "fig5", "fig6", "fig6_0", "fig6_1", "fig7", "fig8", "fig010",
)

Table = dict[str, np.ndarray]


def _series_table(cfgs: list[GameConfig], ticks: int, col: str) -> Table:
    ns, ts, out = [], [], {f"{col}{k + 1}": [] for k in range(cfgs[0].n_markets)}
    for cfg in cfgs:
        rec = run(cfg, ticks)
        data = rec.occupancy if col == "O" else rec.demand
        ns.append(np.full(ticks, cfg.n_agents))
        ts.append(rec.t)
        for k in range(cfg.n_markets):
            out[f"{col}{k + 1}"].append(data[:, k])
    table: Table = {"N": np.concatenate(ns), "t": np.concatenate(ts)}
    for key, chunks in out.items():
        table[key] = np.concatenate(chunks)
    return table


def _fig5_table(cfg: GameConfig, ticks: int) -> Table:
    rec = run(cfg, ticks)
    return {
        "t": rec.t,
        "O1": rec.occupancy[:, 0],
        "O2": rec.occupancy[:, 1],
        "A1": rec.demand[:, 0],
        "A2": rec.demand[:, 1],
        "C": rec.n_switched,
    }


def _fig6_table(cfg: GameConfig, ticks: int, theta: float) -> Table:
    """Utility traces of three agents picked by how many of their strategies
    on the first fluctuating market won at the fluctuation tick (2, 1, 0);
    lowest agent index represents each class."""
    state = init_game(cfg)
    n, k_markets, s = state.utilities.shape
    traces = np.empty((ticks + 1, n, k_markets, s))
    traces[0] = state.utilities
    recs = []
    for i in range(ticks):
        recs.append(step(state))
        traces[i + 1] = state.utilities
    records = RunRecords.from_ticks(recs, cfg.memory)

    hit = None
    for t in range(ticks):
        occ, dem = records.occupancy[t], records.demand[t]
        mask = (occ > 0) & (np.abs(dem) >= theta * occ)
        if mask.any():
            hit = (t, int(np.argmax(mask)))
            break
    if hit is None:
        raise RuntimeError(
            "no large fluctuation within the run; lengthen it or change the seed"
        )
    t1, k_star = hit
    winner = int(records.minority[t1, k_star])
    mu_c = int(records.history[t1, k_star])
    n_good = (state.tables[:, k_star, :, mu_c] == winner).sum(axis=1)

    klass_of = {2: "both-good", 1: "one-good", 0: "none-good"}
    cols: Table = {
        "klass": [], "agent": [], "t": [],
    }
    for k in range(k_markets):
        for i in range(s):
            cols[f"U_m{k + 1}_s{i + 1}"] = []
    for count in (2, 1, 0):
        agents = np.flatnonzero(n_good == count)
        if len(agents) == 0:
            continue
        agent = int(agents[0])
        cols["klass"].append(np.array([klass_of[count]] * (ticks + 1)))
        cols["agent"].append(np.full(ticks + 1, agent))
        cols["t"].append(np.arange(ticks + 1))
        for k in range(k_markets):
            for i in range(s):
                cols[f"U_m{k + 1}_s{i + 1}"].append(traces[:, agent, k, i])
    return {key: np.concatenate(chunks) for key, chunks in cols.items()}


def _fig6_0_tables(cfgs: list[GameConfig], ticks: int) -> dict[str, Table]:
    out: dict[str, Table] = {}
    for cfg in cfgs:
        rec = run(cfg, ticks)
        stats = series_stats(rec, window=(0, ticks))
        big, small = big_small_markets(stats)
        for label, k in (("big", big), ("small", small)):
            h = mu_histogram(rec, k, window=(0, ticks))
            out[f"fig6_0_N{cfg.n_agents}_{label}"] = {
                "mu": np.arange(len(h.counts)),
                "count": h.counts,
                "p": h.p,
            }
    return out


def _fig6_1_table(base: GameConfig, values: list[int], ticks: int, n_seeds: int) -> Table:
    qs, taus, stds, counts = [], [], [], []
    for v in values:
        summaries = ensemble_run(replace(base, n_agents=v), ticks, n_seeds)
        tau_vals = [float(s.tau0) for s in summaries if not s.failed and s.tau0 is not None]
        mean, std = _mean_std(tau_vals) if tau_vals else (float("nan"), float("nan"))
        qs.append(v / (1 << base.memory))
        taus.append(mean)
        stds.append(std)
        counts.append(len(tau_vals))
    return {
        "Q": np.array(qs),
        "N": np.array(values),
        "tau0_mean": np.array(taus),
        "tau0_std": np.array(stds),
        "n_defined": np.array(counts),
        "n_seeds": np.full(len(values), n_seeds),
    }


def sweep_table(points: list[SweepPoint], value_col: str) -> Table:
    table: Table = {
        value_col: np.array([p.value for p in points]),
        "Q": np.array([p.q for p in points]),
    }
    for name in ("o_big", "o_small", "var_big", "var_small", "nu", "tau0"):
        pairs = [getattr(p, name) for p in points]
        table[f"{name}_mean"] = np.array([x[0] for x in pairs])
        table[f"{name}_std"] = np.array([x[1] for x in pairs])
    k_markets = points[0].o_by_market.shape[0]
    for k in range(k_markets):
        table[f"o_m{k + 1}_mean"] = np.array([p.o_by_market[k, 0] for p in points])
        table[f"o_m{k + 1}_std"] = np.array([p.o_by_market[k, 1] for p in points])
        table[f"var_m{k + 1}_mean"] = np.array([p.var_by_market[k, 0] for p in points])
        table[f"var_m{k + 1}_std"] = np.array([p.var_by_market[k, 1] for p in points])
    table["tau0_defined"] = np.array([p.tau0_defined for p in points])
    table["split_fraction"] = np.array([p.split_fraction for p in points])
    table["n_seeds"] = np.array([p.n_seeds for p in points])
    table["n_failed"] = np.array([p.n_failed for p in points])
    return table


def figure_dataset(name: str, **overrides) -> dict[str, Table]:
    """Dataset behind a canned experiment, keyed by output file stem.

    Overrides: ``seed`` (master), ``ticks``, ``n_seeds``, ``values``,
    ``theta`` where the experiment uses them.
    """
    if name not in FIGURE_NAMES:
        raise ValueError(f"unknown figure {name!r}; known: {', '.join(FIGURE_NAMES)}")
    seed = int(overrides.pop("seed", 0))
    theta = float(overrides.pop("theta", DEFAULT_THETA))

    def pick(key, default):
        val = overrides.pop(key, default)
        return val

    if name in ("fig3", "fig4"):
        ticks = int(pick("ticks", 5000))
        values = list(pick("values", [11, 253, 1447]))
        cfgs = [GameConfig(n_agents=v, seed=subseed(seed, i)) for i, v in enumerate(values)]
        table = _series_table(cfgs, ticks, "O" if name == "fig3" else "A")
        out = {name: table}
    elif name == "fig5":
        ticks = int(pick("ticks", 300))
        cfg = GameConfig(n_agents=int(pick("values", [1600])[0]), seed=subseed(seed, 0),
                         init_utilities="uniform")
        out = {name: _fig5_table(cfg, ticks)}
    elif name == "fig6":
        ticks = int(pick("ticks", 300))
        cfg = GameConfig(n_agents=int(pick("values", [1600])[0]), seed=subseed(seed, 0),
                         init_utilities="uniform")
        out = {name: _fig6_table(cfg, ticks, theta)}
    elif name == "fig6_0":
        ticks = int(pick("ticks", 5000))
        values = list(pick("values", [1447, 11]))
        cfgs = [GameConfig(n_agents=v, seed=subseed(seed, i)) for i, v in enumerate(values)]
        out = _fig6_0_tables(cfgs, ticks)
    elif name == "fig6_1":
        ticks = int(pick("ticks", 5000))
        n_seeds = int(pick("n_seeds", 10))
        values = list(pick("values", [253, 362, 512, 724, 1024, 1447, 2048]))
        out = {name: _fig6_1_table(GameConfig(n_agents=values[0], seed=seed), values,
                                   ticks, n_seeds)}
    elif name == "fig7":
        spec = SweepSpec(
            base=GameConfig(n_agents=11, seed=seed),
            param="N",
            values=tuple(pick("values", [11, 64, 128, 256, 512, 1024, 1447])),
            n_seeds=int(pick("n_seeds", 10)),
            ticks=int(pick("ticks", 5000)),
            theta=theta,
        )
        out = {name: sweep_table(q_sweep(spec), "N")}
    elif name == "fig8":
        n2 = int(pick("n2", 301))
        spec = SweepSpec(
            base=GameConfig(n_agents=2 * n2, seed=seed,
                            topology=MarketTopology.irregular(n2, n2)),
            param="n1",
            values=tuple(pick("values", [301, 1000, 3000, 10000])),
            n_seeds=int(pick("n_seeds", 10)),
            ticks=int(pick("ticks", 5000)),
            theta=theta,
            n2=n2,
        )
        out = {name: sweep_table(q_sweep(spec), "N1")}
    else:  # fig010
        ticks = int(pick("ticks", 5000))
        cfg = GameConfig(n_agents=int(pick("values", [3001])[0]), seed=subseed(seed, 0),
                         n_markets=3)
        rec = run(cfg, ticks)
        table: Table = {"t": rec.t}
        for k in range(3):
            table[f"A{k + 1}"] = rec.demand[:, k]
        for k in range(3):
            table[f"O{k + 1}"] = rec.occupancy[:, k]
        out = {name: table}

    if overrides:
        raise ValueError(f"unused overrides for {name}: {sorted(overrides)}")
    return out
