"""Game configuration and market topology."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "ConfigError",
    "MarketTopology",
    "GameConfig",
    "PAYOFF_KINDS",
    "TIE_BREAKS",
    "ZERO_DEMAND_RULES",
    "INIT_UTILITIES",
    "MAX_MEMORY",
]

PAYOFF_KINDS = ("linear", "sign", "scaled")
TIE_BREAKS = ("random", "lowest-index")
ZERO_DEMAND_RULES = ("coin", "plus-one")
INIT_UTILITIES = ("zero", "uniform")
MAX_MEMORY = 24  # keeps 2**m indexable in a machine word with headroom


class ConfigError(ValueError):
    """Invalid configuration; carries an optional source location."""

    def __init__(self, message: str, line: int | None = None, col: int | None = None):
        self.line = line
        self.col = col
        if line is not None:
            message = f"line {line}, col {col}: {message}"
        super().__init__(message)


@dataclass(frozen=True)
class MarketTopology:
    """Which markets each agent may act on.

    ``regular``: every agent is linked to all markets. ``irregular`` (two
    markets): the first n1 agents are linked only to market 0, the
    remaining n2 agents to both.
    """

    kind: str
    n1: int | None = None
    n2: int | None = None

    @classmethod
    def regular(cls) -> "MarketTopology":
        return cls(kind="regular")

    @classmethod
    def irregular(cls, n1: int, n2: int) -> "MarketTopology":
        return cls(kind="irregular", n1=n1, n2=n2)

    def validate(self, n_agents: int, n_markets: int) -> None:
        if self.kind == "regular":
            return
        if self.kind != "irregular":
            raise ConfigError(f"topology: unknown kind {self.kind!r}")
        if self.n1 is None or self.n2 is None:
            raise ConfigError("topology: irregular requires n1 and n2")
        if self.n1 < 0 or self.n2 < 0:
            raise ConfigError("topology: n1 and n2 must be >= 0")
        if n_markets != 2:
            raise ConfigError("topology: irregular is defined for exactly 2 markets")
        if self.n1 + self.n2 != n_agents:
            raise ConfigError(
                f"topology: n1 + n2 = {self.n1 + self.n2} does not match N = {n_agents}"
            )
        if self.n1 + self.n2 < 1:
            raise ConfigError("topology: at least one agent required")

    def link_mask(self, n_agents: int, n_markets: int) -> np.ndarray:
        """(N, K) boolean mask; every agent has at least one link."""
        self.validate(n_agents, n_markets)
        mask = np.ones((n_agents, n_markets), dtype=bool)
        if self.kind == "irregular":
            mask[: self.n1, 1] = False
        return mask


@dataclass(frozen=True)
class GameConfig:
    """Complete, seedable description of one game."""

    n_agents: int
    seed: int
    n_markets: int = 2
    n_strategies: int = 2
    memory: int = 5
    payoff: str = "linear"
    topology: MarketTopology = MarketTopology.regular()
    init_utilities: str = "zero"
    u_low: float = 0.0
    u_high: float = 1.0
    tie_break: str = "random"
    zero_demand: str = "coin"

    @property
    def q(self) -> float:
        """Control parameter: agents per history pattern, N / 2**m."""
        return self.n_agents / (1 << self.memory)

    def validate(self) -> None:
        if self.n_agents < 1:
            raise ConfigError(f"N: must be >= 1, got {self.n_agents}")
        if self.n_markets < 1:
            raise ConfigError(f"K: must be >= 1, got {self.n_markets}")
        if self.n_strategies < 1:
            raise ConfigError(f"s: must be >= 1, got {self.n_strategies}")
        if not 1 <= self.memory <= MAX_MEMORY:
            raise ConfigError(f"m: must be in [1, {MAX_MEMORY}], got {self.memory}")
        if self.payoff not in PAYOFF_KINDS:
            raise ConfigError(f"payoff: must be one of {PAYOFF_KINDS}, got {self.payoff!r}")
        if self.init_utilities not in INIT_UTILITIES:
            raise ConfigError(
                f"init_utilities: must be one of {INIT_UTILITIES}, got {self.init_utilities!r}"
            )
        if self.init_utilities == "uniform" and not self.u_low < self.u_high:
            raise ConfigError(f"u_low/u_high: need u_low < u_high, got [{self.u_low}, {self.u_high}]")
        if self.tie_break not in TIE_BREAKS:
            raise ConfigError(f"tie_break: must be one of {TIE_BREAKS}, got {self.tie_break!r}")
        if self.zero_demand not in ZERO_DEMAND_RULES:
            raise ConfigError(
                f"zero_demand: must be one of {ZERO_DEMAND_RULES}, got {self.zero_demand!r}"
            )
        self.topology.validate(self.n_agents, self.n_markets)
