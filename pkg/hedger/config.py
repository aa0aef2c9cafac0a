"""
Configuration
Environment settings and the pydantic experiment configuration tree
"""
import json
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from hedger.agent.ddpg import AgentHyperparams
from hedger.errors import ConfigurationError
from hedger.market_models import GbmParams, ModelParams, SvParams


@dataclass(frozen=True)
class Settings:
    data_dir: Path
    cache_dir: Path
    db_path: Path
    log_level: str


def get_settings() -> Settings:
    """Read HEDGER_* variables (call load_dotenv() first in entry points)."""
    data_dir = Path(os.getenv("HEDGER_DATA_DIR", "data"))
    return Settings(
        data_dir=data_dir,
        cache_dir=Path(os.getenv("HEDGER_CACHE_DIR", str(data_dir / "cache"))),
        db_path=Path(os.getenv("HEDGER_DB_PATH", str(data_dir / "hedger_runs.db"))),
        log_level=os.getenv("HEDGER_LOG_LEVEL", "INFO").upper(),
    )


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class ModelSpec(_Strict):
    s0: float = Field(100.0, gt=0)
    mu: float = 0.05
    sigma: float = Field(0.2, gt=0)
    nu: float = Field(0.1, ge=0)
    rho: float = Field(-0.4, ge=-1, le=1)
    sigma_buyer: Optional[float] = Field(None, gt=0)

    def gbm(self, sigma: Optional[float] = None) -> GbmParams:
        return GbmParams(self.s0, self.mu, self.sigma if sigma is None else sigma)

    def sv(self) -> SvParams:
        return SvParams(self.s0, self.mu, self.sigma, self.nu, self.rho)

    @property
    def buyer_sigma(self) -> float:
        return self.sigma if self.sigma_buyer is None else self.sigma_buyer


class OptionSpec(_Strict):
    strike: float = Field(100.0, gt=0)
    maturity: float = Field(1.0, gt=0)
    r: float = 0.05


class TrainingSpec(_Strict):
    episodes: int = Field(5000, ge=1)
    steps: int = Field(25, ge=1)
    actor_lr: float = Field(5e-6, gt=0)
    critic_lr: float = Field(5e-4, gt=0)
    gamma: float = Field(1.0, ge=0, le=1)
    batch_size: int = Field(64, ge=1)
    tau: float = Field(0.005, ge=0, le=1)
    noise_start: float = Field(0.2, ge=0)
    noise_end: float = Field(0.02, ge=0)
    kappa: float = Field(0.005, ge=0)
    buffer_capacity: int = Field(100_000, ge=1)
    warmup: int = Field(1000, ge=0)
    tree_steps: int = Field(5000, ge=1)
    cheb_nodes: tuple[int, int] = (50, 20)
    cheb_mc: int = Field(1000, ge=100)
    pilot_paths: int = Field(1000, ge=100)

    def hyperparams(self) -> AgentHyperparams:
        return AgentHyperparams(
            actor_lr=self.actor_lr,
            critic_lr=self.critic_lr,
            gamma=self.gamma,
            batch_size=self.batch_size,
            tau=self.tau,
            noise_start=self.noise_start,
            noise_end=self.noise_end,
            episodes=self.episodes,
            steps_per_episode=self.steps,
            kappa=self.kappa,
            buffer_capacity=self.buffer_capacity,
            warmup=self.warmup,
        )


class TestSpec(_Strict):
    n_paths: int = Field(10_000, ge=1)
    rebalances: int = Field(100, ge=1)
    lambdas: list[float] = [0.0, 0.03]
    transcripts: int = Field(0, ge=0)

    @field_validator("lambdas")
    @classmethod
    def _non_negative(cls, v):
        if not v or any(lam < 0 for lam in v):
            raise ValueError("lambdas must be a non-empty list of non-negative rates")
        return v


class SeedSpec(_Strict):
    train: int = Field(0, ge=0)
    test: int = Field(1, ge=0)
    pricer: int = Field(2, ge=0)
    calibration: int = Field(3, ge=0)


def _data_file(*parts: str):
    return Field(default_factory=lambda: str(get_settings().data_dir.joinpath(*parts)))


class DataSpec(_Strict):
    """Input files; defaults resolve under HEDGER_DATA_DIR."""

    option_chain: str = _data_file("fixtures", "option_chain.csv")
    asset_paths: str = _data_file("fixtures", "asset_paths.csv")
    reference: str = _data_file("reference", "published_pnl.csv")
    symbol_params: Optional[str] = None
    agent: Optional[str] = None
    agents_dir: Optional[str] = None


class ExperimentConfig(_Strict):
    mode: Literal["gbm", "sv-arbitrary", "sv-calibrated"] = "gbm"
    model: ModelSpec = Field(default_factory=ModelSpec)
    option: OptionSpec = Field(default_factory=OptionSpec)
    training: TrainingSpec = Field(default_factory=TrainingSpec)
    test: TestSpec = Field(default_factory=TestSpec)
    seeds: SeedSpec = Field(default_factory=SeedSpec)
    data: DataSpec = Field(default_factory=DataSpec)
    out: str = "runs/latest"

    @model_validator(mode="after")
    def _check_mode(self):
        if self.mode != "gbm" and self.model.sigma_buyer is not None:
            raise ValueError("sigma_buyer only applies to gbm mode")
        return self

    @property
    def is_sv(self) -> bool:
        return self.mode != "gbm"

    def model_params(self) -> ModelParams:
        return self.model.sv() if self.is_sv else self.model.gbm()

    def require_files(self, *names: str) -> None:
        """ConfigurationError unless each named data file is set and exists."""
        for name in names:
            value = getattr(self.data, name)
            if value is None or not Path(value).exists():
                raise ConfigurationError(f"data.{name} does not point to an existing file: {value}")

    def dump(self, path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(self.model_dump_json(indent=2))
        return path


def load_config(path: Optional[str] = None, overrides: Optional[dict] = None) -> ExperimentConfig:
    """JSON file (optional) with dotted-key overrides, validated by pydantic."""
    payload: dict = {}
    if path is not None:
        file = Path(path)
        if not file.exists():
            raise ConfigurationError(f"config file not found: {file}")
        payload = json.loads(file.read_text())
    for dotted, value in (overrides or {}).items():
        if value is None:
            continue
        node = payload
        *parents, leaf = dotted.split(".")
        for key in parents:
            node = node.setdefault(key, {})
        node[leaf] = value
    return ExperimentConfig.model_validate(payload)
