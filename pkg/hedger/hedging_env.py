"""
Hedging Environment
Episodic MDP for hedging a short American put along a simulated path

State: (S_t / K, time to maturity in years, previous position).
Reward per rebalance:
    R_t = -|A_t (S_t - S_{t-1}) - (C_t - C_{t-1})| - kappa (A_t - A_{t-1})^2 S_t
with C taken from the pricer at both ends of the step. Episodes always run
every step; the counterparty does not exercise during training.
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import pandas as pd

from hedger.clamping import ClampStats
from hedger.errors import ConfigurationError, ParameterError, SourceError
from hedger.market_models import ModelParams, PathSet, TimeGrid, simulate_path
from hedger.pricers.base import OptionPricer

logger = logging.getLogger(__name__)

TRANSCRIPT_COLUMNS = ["episode", "t", "S", "sigma", "C", "A", "R"]


@dataclass(frozen=True)
class EnvConfig:
    strike: float
    maturity: float
    n_rebalances: int = 25
    kappa: float = 0.005

    def __post_init__(self):
        if not self.strike > 0:
            raise ParameterError(f"strike must be positive, got {self.strike}")
        if self.n_rebalances < 1:
            raise ParameterError(f"n_rebalances must be >= 1, got {self.n_rebalances}")
        if self.kappa < 0:
            raise ParameterError(f"kappa must be non-negative, got {self.kappa}")

    @property
    def grid(self) -> TimeGrid:
        return TimeGrid(self.maturity, self.n_rebalances)


@dataclass(frozen=True)
class EnvState:
    price_ratio: float
    tau: float
    prev_action: float

    def as_array(self) -> np.ndarray:
        return np.array([self.price_ratio, self.tau, self.prev_action])


def hedging_reward(
    action: float, prev_action: float, s_prev: float, s_next: float, c_prev: float, c_next: float, kappa: float
) -> float:
    hedge_error = abs(action * (s_next - s_prev) - (c_next - c_prev))
    return -hedge_error - kappa * (action - prev_action) ** 2 * s_next


@dataclass
class HedgingEnv:
    """Drives episodes from either a model (fresh path per seed) or a fixed PathSet."""

    config: EnvConfig
    pricer: OptionPricer
    model: Optional[ModelParams] = None
    paths: Optional[PathSet] = None
    path_seed: int = 0
    record_transcript: bool = False
    action_clamps: ClampStats = field(default_factory=ClampStats)

    def __post_init__(self):
        if (self.model is None) == (self.paths is None):
            raise ConfigurationError("exactly one of model or paths must be given")
        if self.paths is not None and self.paths.grid != self.config.grid:
            raise ConfigurationError("path grid does not match the rebalance grid")
        self._path: Optional[PathSet] = None
        self._step = 0
        self._prev_action = 0.0
        self._c_now = 0.0
        self._episode = -1
        self._rows: list = []
        self.finished = True

    def _draw(self, episode_seed: int) -> PathSet:
        if self.paths is not None:
            if episode_seed >= self.paths.n_paths:
                raise SourceError(f"path source exhausted at episode {episode_seed} ({self.paths.n_paths} paths)")
            return self.paths.path(episode_seed)
        return simulate_path(self.model, self.config.grid, self.path_seed, episode_seed)

    def _state(self) -> EnvState:
        grid = self.config.grid
        s = float(self._path.prices[0, self._step])
        tau = grid.maturity - grid.time_at(self._step)
        return EnvState(s / self.config.strike, max(tau, 0.0), self._prev_action)

    def _vol(self, step: int) -> Optional[float]:
        return None if self._path.vols is None else float(self._path.vols[0, step])

    def _record(self, step: int, c: float, action: float, reward: float) -> None:
        vol = self._vol(step)
        self._rows.append(
            {
                "episode": self._episode,
                "t": self.config.grid.time_at(step),
                "S": float(self._path.prices[0, step]),
                "sigma": math.nan if vol is None else vol,
                "C": c,
                "A": action,
                "R": reward,
            }
        )

    def _option_value(self, step: int) -> float:
        s = float(self._path.prices[0, step])
        return float(self.pricer.price(s, self.config.grid.time_at(step), self._vol(step)))

    def reset(self, episode_seed: int) -> EnvState:
        self._path = self._draw(int(episode_seed))
        self._step = 0
        self._prev_action = 0.0
        self._episode = int(episode_seed)
        self._c_now = self._option_value(0)
        self.finished = False
        if self.record_transcript:
            self._record(0, self._c_now, 0.0, 0.0)
        return self._state()

    def step(self, action: float) -> tuple[EnvState, float]:
        if self.finished:
            raise SourceError("episode finished; call reset first")
        clamped = min(0.0, max(-1.0, float(action)))
        self.action_clamps.record(1, int(clamped != action))
        if clamped != action:
            logger.debug(f"[Env] ⚠ Action {action:.6f} clamped to {clamped}")

        n = self._step
        s_prev = float(self._path.prices[0, n])
        s_next = float(self._path.prices[0, n + 1])
        c_prev = self._c_now
        c_next = self._option_value(n + 1)
        reward = hedging_reward(clamped, self._prev_action, s_prev, s_next, c_prev, c_next, self.config.kappa)

        if self.record_transcript:
            self._record(n + 1, c_next, clamped, reward)
        self._step = n + 1
        self._prev_action = clamped
        self._c_now = c_next
        self.finished = self._step == self.config.n_rebalances
        return self._state(), reward

    def transcript(self) -> pd.DataFrame:
        return pd.DataFrame(self._rows, columns=TRANSCRIPT_COLUMNS)
