"""Tick loop of the multi-market minority game.

Each tick runs in a pinned order: (1) every agent activates its
highest-utility strategy across its linked markets, ties resolved per
config; (2) occupancy and signed demand are aggregated per market over the
active agents; (3) the minority action is -sign(demand), with the
zero-demand rule deciding balanced or empty markets; (4) every strategy on
every linked market -- active and passive alike -- is scored with
``-action * g(demand)`` evaluated at this tick's pre-update histories;
(5) the minority actions are shifted into the histories; (6) the number of
agents whose active market changed since the previous tick is recorded.

Randomness is consumed in a pinned order: at init, endowment bits, then
uniform initial utilities (when enabled), then one initial history per
market; per tick, one draw per tie-broken agent in agent index order
(random tie-breaking only), then one coin per balanced market in market
index order (coin rule only). A (config, seed) pair therefore determines
the full trajectory bit for bit.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterator

import numpy as np

from .config import ConfigError, GameConfig
from .rng import game_rng
from .strategies import Endowment, draw_strategies

__all__ = [
    "TickRecord",
    "RunRecords",
    "GameState",
    "init_game",
    "choose_active_strategy",
    "aggregate_demand",
    "minority_action",
    "payoff",
    "step",
    "run",
]


@dataclass(frozen=True)
class TickRecord:
    """Observables of one tick; immutable once emitted."""

    t: int
    occupancy: np.ndarray  # (K,) agents active per market
    demand: np.ndarray  # (K,) signed sum of active actions
    minority: np.ndarray  # (K,) winning action per market
    history: np.ndarray  # (K,) history value the tick was played at
    n_switched: int  # agents whose active market changed vs previous tick
    choices: np.ndarray | None = None  # (N, 3) market, slot, action; heavy trace


@dataclass(eq=False)
class RunRecords:
    """Columnar stack of tick records for a whole run."""

    memory: int
    t: np.ndarray  # (T,)
    occupancy: np.ndarray  # (T, K)
    demand: np.ndarray  # (T, K)
    minority: np.ndarray  # (T, K)
    history: np.ndarray  # (T, K)
    n_switched: np.ndarray  # (T,)

    @property
    def n_ticks(self) -> int:
        return self.t.shape[0]

    @property
    def n_markets(self) -> int:
        return self.occupancy.shape[1]

    @property
    def n_agents(self) -> int:
        return int(self.occupancy[0].sum())

    def tick(self, i: int) -> TickRecord:
        return TickRecord(
            t=int(self.t[i]),
            occupancy=self.occupancy[i],
            demand=self.demand[i],
            minority=self.minority[i],
            history=self.history[i],
            n_switched=int(self.n_switched[i]),
        )

    def __iter__(self) -> Iterator[TickRecord]:
        return (self.tick(i) for i in range(self.n_ticks))

    @classmethod
    def from_ticks(cls, ticks: list[TickRecord], memory: int) -> "RunRecords":
        if not ticks:
            raise ValueError("cannot build RunRecords from an empty tick list")
        return cls(
            memory=memory,
            t=np.array([r.t for r in ticks], dtype=np.int64),
            occupancy=np.stack([r.occupancy for r in ticks]),
            demand=np.stack([r.demand for r in ticks]),
            minority=np.stack([r.minority for r in ticks]),
            history=np.stack([r.history for r in ticks]),
            n_switched=np.array([r.n_switched for r in ticks], dtype=np.int64),
        )


@dataclass(eq=False)
class GameState:
    """Full mutable state of one game run."""

    config: GameConfig
    rng: np.random.Generator
    endowment: Endowment
    utilities: np.ndarray  # (N, K, s) float64
    histories: np.ndarray  # (K,) int64
    last_market: np.ndarray | None = None  # (N,) active market at t-1
    t: int = 0
    choice_mask: np.ndarray = field(init=False)  # (N, K*s) linked-strategy mask

    def __post_init__(self) -> None:
        s = self.endowment.n_strategies
        self.choice_mask = np.repeat(self.endowment.link_mask, s, axis=1)

    @property
    def tables(self) -> np.ndarray:
        return self.endowment.actions


def init_game(cfg: GameConfig) -> GameState:
    """Draw the endowment, initial utilities and initial histories."""
    cfg.validate()
    rng = game_rng(cfg.seed)
    link_mask = cfg.topology.link_mask(cfg.n_agents, cfg.n_markets)
    endowment = draw_strategies(
        rng, cfg.n_agents, cfg.n_markets, cfg.n_strategies, cfg.memory, link_mask
    )
    utilities = np.zeros((cfg.n_agents, cfg.n_markets, cfg.n_strategies), dtype=np.float64)
    if cfg.init_utilities == "uniform":
        n_linked = int(link_mask.sum())
        utilities[link_mask] = rng.uniform(
            cfg.u_low, cfg.u_high, size=(n_linked, cfg.n_strategies)
        )
    histories = rng.integers(0, 1 << cfg.memory, size=cfg.n_markets, dtype=np.int64)
    return GameState(
        config=cfg, rng=rng, endowment=endowment, utilities=utilities, histories=histories
    )


def aggregate_demand(actions: "list[int] | np.ndarray") -> int:
    """Signed sum of actions: surplus of +1 over -1 choices."""
    return int(np.sum(actions)) if len(actions) else 0


def minority_action(
    demand: int,
    rng: np.random.Generator | None = None,
    rule: str = "coin",
) -> int:
    """Winning action -sign(demand); balanced demand falls to ``rule``."""
    if demand > 0:
        return -1
    if demand < 0:
        return 1
    if rule == "plus-one":
        return 1
    if rule == "coin":
        if rng is None:
            raise ValueError("coin rule needs a generator to resolve zero demand")
        return int(2 * rng.integers(0, 2) - 1)
    raise ConfigError(f"zero_demand: unknown rule {rule!r}")


def payoff(action: int, demand: int, kind: str, n_agents: int | None = None) -> float:
    """Reward ``-action * g(demand)`` of one strategy for one tick."""
    if kind == "linear":
        g = float(demand)
    elif kind == "sign":
        g = float(np.sign(demand))
    elif kind == "scaled":
        if not n_agents:
            raise ValueError("scaled payoff needs n_agents")
        g = demand / n_agents
    else:
        raise ConfigError(f"payoff: unknown kind {kind!r}")
    return -action * g


def _gain(demand: np.ndarray, cfg: GameConfig) -> np.ndarray:
    if cfg.payoff == "linear":
        return demand.astype(np.float64)
    if cfg.payoff == "sign":
        return np.sign(demand).astype(np.float64)
    return demand / cfg.n_agents  # scaled


def _actions_at_histories(state: GameState) -> np.ndarray:
    """(N, K, s) action of every strategy at the current histories."""
    n, k_markets, s, _ = state.tables.shape
    acts = np.empty((n, k_markets, s), dtype=np.int8)
    for k in range(k_markets):
        acts[:, k, :] = state.tables[:, k, :, state.histories[k]]
    return acts


def _choose_all(state: GameState) -> np.ndarray:
    """Flat (market*s + slot) choice per agent; consumes RNG only on ties."""
    n, _, s = state.utilities.shape
    util = np.where(state.choice_mask, state.utilities.reshape(n, -1), -np.inf)
    best = util.max(axis=1)
    is_max = util == best[:, None]
    choice = is_max.argmax(axis=1)  # first maximizer = lowest (market, slot)
    if state.config.tie_break == "random":
        counts = is_max.sum(axis=1)
        tied = counts > 1
        if tied.any():
            pick = state.rng.integers(0, counts[tied])
            ranks = np.cumsum(is_max[tied], axis=1)
            choice[tied] = (ranks == pick[:, None] + 1).argmax(axis=1)
    return choice


def choose_active_strategy(state: GameState, agent: int) -> tuple[int, int, int]:
    """(market, slot, action) of the agent's highest-utility strategy.

    Under random tie-breaking a tie consumes one draw from the game
    generator, exactly as the full tick loop would for this agent.
    """
    s = state.config.n_strategies
    util = np.where(
        state.choice_mask[agent], state.utilities[agent].reshape(-1), -np.inf
    )
    maximizers = np.flatnonzero(util == util.max())
    if len(maximizers) == 1 or state.config.tie_break == "lowest-index":
        flat = int(maximizers[0])
    else:
        flat = int(maximizers[state.rng.integers(0, len(maximizers))])
    market, slot = divmod(flat, s)
    action = int(state.tables[agent, market, slot, state.histories[market]])
    return market, slot, action


def step(state: GameState, record_choices: bool = False) -> TickRecord:
    """Advance the game by one tick and return its observables."""
    cfg = state.config
    n, k_markets, s = state.utilities.shape
    mu = state.histories.copy()

    acts = _actions_at_histories(state)

    # (1) strategy choice
    choice = _choose_all(state)
    market = choice // s
    action = acts.reshape(n, -1)[np.arange(n), choice]

    # (2) aggregation over active agents
    occupancy = np.bincount(market, minlength=k_markets).astype(np.int64)
    demand = np.bincount(market, weights=action, minlength=k_markets).astype(np.int64)

    # (3) minority action, zero-demand markets resolved in market order
    minority = -np.sign(demand)
    balanced = demand == 0
    if balanced.any():
        if cfg.zero_demand == "coin":
            minority[balanced] = 2 * state.rng.integers(0, 2, size=int(balanced.sum())) - 1
        else:
            minority[balanced] = 1

    # (4) score every linked strategy, active and passive; unlinked entries
    # hold action 0 and stay untouched
    state.utilities -= acts * _gain(demand, cfg)[None, :, None]

    # (5) histories shift in the minority actions
    bits = (minority + 1) >> 1
    state.histories = ((mu << 1) | bits) & ((1 << cfg.memory) - 1)

    # (6) market-switch count; first tick defined as 0
    if state.last_market is None:
        n_switched = 0
    else:
        n_switched = int((market != state.last_market).sum())
    state.last_market = market

    choices = None
    if record_choices:
        choices = np.stack([market, choice % s, action.astype(np.int64)], axis=1)

    record = TickRecord(
        t=state.t,
        occupancy=occupancy,
        demand=demand,
        minority=minority.astype(np.int64),
        history=mu,
        n_switched=n_switched,
        choices=choices,
    )
    state.t += 1
    return record


def run(
    cfg: GameConfig,
    ticks: int,
    sink: Callable[[TickRecord], None] | None = None,
    collect: bool = True,
    record_choices: bool = False,
) -> RunRecords | None:
    """Play ``ticks`` ticks from a fresh game.

    Each record is handed to ``sink`` before the next tick begins. With
    ``collect=False`` nothing is accumulated (bounded memory); otherwise
    the full columnar record of the run is returned.
    """
    if ticks < 1:
        raise ConfigError(f"T: must be >= 1, got {ticks}")
    state = init_game(cfg)
    k_markets = cfg.n_markets
    if collect:
        out = RunRecords(
            memory=cfg.memory,
            t=np.empty(ticks, dtype=np.int64),
            occupancy=np.empty((ticks, k_markets), dtype=np.int64),
            demand=np.empty((ticks, k_markets), dtype=np.int64),
            minority=np.empty((ticks, k_markets), dtype=np.int64),
            history=np.empty((ticks, k_markets), dtype=np.int64),
            n_switched=np.empty(ticks, dtype=np.int64),
        )
    for i in range(ticks):
        rec = step(state, record_choices=record_choices)
        if collect:
            out.t[i] = rec.t
            out.occupancy[i] = rec.occupancy
            out.demand[i] = rec.demand
            out.minority[i] = rec.minority
            out.history[i] = rec.history
            out.n_switched[i] = rec.n_switched
        if sink is not None:
            sink(rec)
    return out if collect else None
