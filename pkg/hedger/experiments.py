"""
Experiments
Wiring from an ExperimentConfig to pricers, environments, agents and reports
"""
import logging
from dataclasses import dataclass
from datetime import date
from pathlib import Path
from typing import Optional

import numpy as np
import pandas as pd

from hedger.agent import AgentParams, load_checkpoint, save_checkpoint, train
from hedger.black_scholes import BsInputs, put_price
from hedger.builders import binomial_pricer, chebyshev_pricer
from hedger.calibration import OptionQuote, calibrate_chain
from hedger.config import ExperimentConfig
from hedger.data_io import (
    calibration_frame,
    load_option_chain,
    load_price_series,
    load_reference_table,
    load_symbol_params,
    write_frame,
    write_json,
    write_symbol_params,
)
from hedger.errors import ConfigurationError, LookupFailure
from hedger.evaluator import (
    AgentStrategy,
    BinomialStrategy,
    BsDeltaStrategy,
    HedgeReport,
    evaluate,
    evaluate_empirical,
)
from hedger.hedging_env import EnvConfig, HedgingEnv
from hedger.market_models import GbmParams, SvParams, TimeGrid, simulate_gbm, simulate_sv
from hedger.pricers.lsmc import lsmc_put_price

logger = logging.getLogger(__name__)

# cost rate of the published empirical P&L table
REFERENCE_LAMBDA = 0.03


# ============================================================================
# Option selection for calibrated runs
# ============================================================================

@dataclass(frozen=True)
class OptionFilter:
    symbol: Optional[str] = None
    maturity: Optional[date] = None
    strike: Optional[float] = None

    def matches(self, quote: OptionQuote) -> bool:
        return (
            (self.symbol is None or quote.symbol == self.symbol)
            and (self.maturity is None or quote.maturity == self.maturity)
            and (self.strike is None or abs(quote.strike - self.strike) < 1e-9)
        )


def select_quotes(cfg: ExperimentConfig, selection: OptionFilter) -> list:
    cfg.require_files("option_chain")
    quotes = [q for q in load_option_chain(cfg.data.option_chain) if selection.matches(q)]
    if not quotes:
        raise LookupFailure(f"no quotes match {selection}")
    return quotes


def calibrated_config(cfg: ExperimentConfig, quote: OptionQuote, symbol_params: dict) -> ExperimentConfig:
    """Per-option config: spot, strike, maturity, iv and averaged (rho, nu); steps from the price-series calendar."""
    if quote.symbol not in symbol_params:
        raise LookupFailure(f"no calibrated parameters for {quote.symbol}")
    params = symbol_params[quote.symbol]
    series = load_price_series(cfg.data.asset_paths, quote.symbol)
    steps = series.trading_days(quote.quote_date, quote.maturity)
    update = {
        "model": cfg.model.model_copy(
            update={"s0": quote.close, "mu": cfg.option.r, "sigma": quote.iv, "rho": params.rho, "nu": params.nu}
        ),
        "option": cfg.option.model_copy(update={"strike": quote.strike, "maturity": quote.maturity_years}),
        "training": cfg.training.model_copy(update={"steps": steps}),
        "test": cfg.test.model_copy(update={"rebalances": steps}),
    }
    return cfg.model_copy(update=update)


def _symbol_params(cfg: ExperimentConfig) -> dict:
    cfg.require_files("symbol_params", "asset_paths")
    return load_symbol_params(cfg.data.symbol_params)


# ============================================================================
# Pricers
# ============================================================================

def agent_pricer(cfg: ExperimentConfig, n_steps: int):
    """Pricer built from the training model's own parameters."""
    opt, tr = cfg.option, cfg.training
    if cfg.is_sv:
        return chebyshev_pricer(
            cfg.model.sv(), opt.strike, opt.r, TimeGrid(opt.maturity, n_steps),
            tuple(tr.cheb_nodes), tr.cheb_mc, tr.pilot_paths, cfg.seeds.pricer,
        )
    return binomial_pricer(cfg.model.s0, opt.strike, opt.r, cfg.model.sigma, opt.maturity, tr.tree_steps)


# ============================================================================
# Training
# ============================================================================

def train_agent(cfg: ExperimentConfig, out_dir: Path, transcripts: int = 0, name: str = "agent") -> dict:
    """Writes ``{name}.npz`` and ``{name}_training_curve.csv`` into ``out_dir``."""
    pricer = agent_pricer(cfg, cfg.training.steps)
    env_config = EnvConfig(cfg.option.strike, cfg.option.maturity, cfg.training.steps, cfg.training.kappa)
    env = HedgingEnv(env_config, pricer, model=cfg.model_params(), path_seed=cfg.seeds.train)
    hp = cfg.training.hyperparams()
    agent, curve = train(env, hp, cfg.seeds.train)

    save_checkpoint(agent, out_dir / f"{name}.npz")
    write_frame(curve, out_dir / f"{name}_training_curve.csv")
    if transcripts:
        write_frame(episode_transcripts(agent, env, transcripts), out_dir / f"{name}_transcripts.csv")
    tail = curve.tail(min(len(curve), 100))
    return {
        "episodes": hp.episodes,
        "final_reward": float(tail["total_reward"].mean()),
        "action_clamped": env.action_clamps.clamped,
    }


def episode_transcripts(agent: AgentParams, env: HedgingEnv, n_episodes: int) -> pd.DataFrame:
    """Greedy replays of the first ``n_episodes`` paths with (t, S, sigma, C, A, R) rows."""
    env.record_transcript = True
    for episode in range(n_episodes):
        state = env.reset(episode)
        while not env.finished:
            state, _ = env.step(float(agent.policy(state.as_array())[0]))
    env.record_transcript = False
    return env.transcript()


def train_calibrated(cfg: ExperimentConfig, selection: OptionFilter, out_dir: Path) -> dict:
    symbol_params = _symbol_params(cfg)
    summaries = {}
    for quote in select_quotes(cfg, selection):
        option_cfg = calibrated_config(cfg, quote, symbol_params)
        summaries[quote.key] = train_agent(option_cfg, out_dir / "agents", name=quote.key)
    return summaries


# ============================================================================
# Evaluation on simulated paths
# ============================================================================

def load_agent(path: Optional[str]) -> Optional[AgentParams]:
    if path is None:
        return None
    return load_checkpoint(path)


def _reports_for(strategies, paths, c0, boundary, cfg, record) -> list:
    return [
        evaluate(strategy, paths, c0, boundary, cfg.option.r, lam, cfg.option.strike, record)
        for lam in cfg.test.lambdas
        for strategy in strategies
    ]


def evaluate_simulated(cfg: ExperimentConfig, agent: Optional[AgentParams] = None) -> tuple[list, pd.DataFrame]:
    """Reports for every strategy and cost rate, plus sample position paths."""
    opt, model = cfg.option, cfg.model
    grid = TimeGrid(opt.maturity, cfg.test.rebalances)
    strategies = [] if agent is None else [AgentStrategy(agent, opt.strike)]
    record = cfg.test.transcripts > 0

    if cfg.is_sv:
        params = model.sv()
        surface = agent_pricer(cfg, cfg.test.rebalances)
        paths = simulate_sv(params, grid, cfg.test.n_paths, cfg.seeds.test)
        strategies.append(BsDeltaStrategy(opt.strike, opt.r))
        reports = _reports_for(strategies, paths, surface, surface.boundary, cfg, record)
    else:
        tree = agent_pricer(cfg, cfg.test.rebalances)
        buyer_tree = tree
        if model.sigma_buyer is not None and model.sigma_buyer != model.sigma:
            buyer_tree = binomial_pricer(
                model.s0, opt.strike, opt.r, model.sigma_buyer, opt.maturity, cfg.training.tree_steps
            )
        paths = simulate_gbm(GbmParams(model.s0, model.mu, model.buyer_sigma), grid, cfg.test.n_paths, cfg.seeds.test)
        strategies += [BsDeltaStrategy(opt.strike, opt.r, model.sigma), BinomialStrategy(tree)]
        c0 = float(tree.price(model.s0, 0.0))
        reports = _reports_for(strategies, paths, c0, buyer_tree.boundary, cfg, record)

    return reports, position_samples(reports, paths, cfg.test.transcripts)


def position_samples(reports: list, paths, n_paths: int) -> pd.DataFrame:
    rows = []
    for report in reports:
        if report.positions is None:
            continue
        for i in range(min(n_paths, report.n)):
            for n in range(report.positions.shape[1]):
                rows.append(
                    {
                        "strategy": report.label,
                        "lambda": report.lam,
                        "path": i,
                        "step": n,
                        "t": paths.grid.time_at(n),
                        "S": paths.prices[i, n],
                        "position": report.positions[i, n],
                    }
                )
    return pd.DataFrame(rows)


def summary_frame(reports: list, **extra) -> pd.DataFrame:
    return pd.DataFrame([{**extra, **report.summary()} for report in reports])


def write_reports(reports: list, out_dir: Path, prefix: str = "") -> pd.DataFrame:
    for report in reports:
        slug = report.label.lower().replace(" ", "_")
        write_frame(report.to_frame(), out_dir / f"{prefix}report_{slug}_lam{report.lam:g}.csv")
    summary = summary_frame(reports)
    write_frame(summary, out_dir / f"{prefix}summary.csv")
    write_json({"reports": summary.to_dict(orient="records")}, out_dir / f"{prefix}summary.json")
    return summary


def evaluate_calibrated(cfg: ExperimentConfig, selection: OptionFilter, out_dir: Path) -> pd.DataFrame:
    """Per-option reports on calibrated-model paths, aggregated per (symbol, maturity)."""
    symbol_params = _symbol_params(cfg)
    frames = []
    for quote in select_quotes(cfg, selection):
        option_cfg = calibrated_config(cfg, quote, symbol_params)
        agent = _agent_for(cfg, quote)
        reports, _ = evaluate_simulated(option_cfg, agent)
        write_reports(reports, out_dir / "per_option" / quote.key)
        frames.append(
            summary_frame(reports, symbol=quote.symbol, maturity=quote.maturity.isoformat(), strike=quote.strike)
        )
    per_option = pd.concat(frames, ignore_index=True)
    write_frame(per_option, out_dir / "summary_per_option.csv")
    by_symbol = (
        per_option.groupby(["symbol", "maturity", "strategy", "lambda"], as_index=False)[["mean", "std"]].mean()
    )
    write_frame(by_symbol, out_dir / "summary_by_symbol.csv")
    return by_symbol


def _agent_for(cfg: ExperimentConfig, quote: OptionQuote) -> Optional[AgentParams]:
    if cfg.data.agents_dir is not None:
        path = Path(cfg.data.agents_dir) / f"{quote.key}.npz"
        if path.exists():
            return load_checkpoint(path)
        logger.warning(f"[Experiment] ⚠ No agent for {quote.key} in {cfg.data.agents_dir}")
        return None
    return load_agent(cfg.data.agent)


# ============================================================================
# Empirical paths
# ============================================================================

def evaluate_empirical_chain(cfg: ExperimentConfig, selection: OptionFilter) -> tuple[pd.DataFrame, pd.DataFrame]:
    """Per-option P&L on observed closes for every configured lambda, plus per-maturity means.

    The published reference columns are joined on the ``REFERENCE_LAMBDA`` rows only.
    """
    symbol_params = _symbol_params(cfg)
    rows = []
    for quote in select_quotes(cfg, selection):
        option_cfg = calibrated_config(cfg, quote, symbol_params)
        params = option_cfg.model.sv()
        series = load_price_series(cfg.data.asset_paths, quote.symbol).between(quote.quote_date, quote.maturity)
        surface = agent_pricer(option_cfg, len(series) - 1)

        strategies = [BsDeltaStrategy(quote.strike, cfg.option.r)]
        agent = _agent_for(cfg, quote)
        if agent is not None:
            strategies.insert(0, AgentStrategy(agent, quote.strike))
        for lam in cfg.test.lambdas:
            row = {"symbol": quote.symbol, "maturity": quote.maturity.isoformat(), "strike": quote.strike,
                   "lambda": float(lam), "rl_pnl": np.nan, "delta_pnl": np.nan}
            for strategy in strategies:
                run = evaluate_empirical(
                    strategy, list(series.dates), series.closes, quote.maturity, quote.strike, quote.iv,
                    params, cfg.option.r, lam, surface, surface.boundary, quote.maturity_years,
                )
                row["rl_pnl" if isinstance(strategy, AgentStrategy) else "delta_pnl"] = run.pnl
            rows.append(row)

    table = pd.DataFrame(rows)
    if cfg.data.reference and Path(cfg.data.reference).exists():
        reference = load_reference_table(cfg.data.reference).rename(
            columns={"rl_mean": "reference_rl", "delta_mean": "reference_delta"}
        )
        reference["lambda"] = REFERENCE_LAMBDA
        table = table.merge(reference, on=["symbol", "maturity", "strike", "lambda"], how="left")
    means = table.groupby(["symbol", "maturity", "lambda"], as_index=False)[["rl_pnl", "delta_pnl"]].mean()
    return table, means


# ============================================================================
# Calibration, prices, boundaries
# ============================================================================

def calibrate_quotes(cfg: ExperimentConfig, selection: OptionFilter, out_dir: Path) -> dict:
    quotes = select_quotes(cfg, selection)
    results, averaged = calibrate_chain(quotes, cfg.option.r, seed=cfg.seeds.calibration)
    write_frame(calibration_frame(results), out_dir / "calibration.csv")
    write_symbol_params(averaged, out_dir / "symbol_params.json")
    return {
        "options": len(results),
        "unconverged": sum(not res.converged for res in results),
        "symbols": {s: {"rho": p.rho, "nu": p.nu} for s, p in averaged.items()},
    }


def price_summary(
    s0: float, k: float, r: float, sigma: float, maturity: float, tree_steps: int,
    chebyshev: bool = False, lsmc: bool = False, steps: int = 100, seed: int = 0,
    nodes: tuple = (50, 2), mc_per_node: int = 1000,
) -> dict:
    """American (tree) and European prices, with optional Chebyshev and LSMC cross-checks."""
    tree = binomial_pricer(s0, k, r, sigma, maturity, tree_steps)
    american = float(tree.price(s0, 0.0))
    european = float(put_price(BsInputs(s0, k, r, sigma, maturity)))
    out = {"binomial": american, "european": european, "premium": american - european}
    if chebyshev:
        params = SvParams(s0, r, sigma, 0.0, 0.0)
        surface = chebyshev_pricer(params, k, r, TimeGrid(maturity, steps), nodes, mc_per_node, seed=seed)
        out["chebyshev"] = float(surface.price(s0, 0.0, sigma))
    if lsmc:
        paths = simulate_gbm(GbmParams(s0, r, sigma), TimeGrid(maturity, steps), 20_000, seed)
        out["lsmc"] = lsmc_put_price(paths, k, r)
    return out


def boundary_table(
    s0: float, k: float, r: float, sigma: float, maturity: float,
    tree_steps: int, steps: int, n_s: int = 50, mc_per_node: int = 1000, seed: int = 0,
) -> pd.DataFrame:
    """Binomial and Chebyshev (constant-vol) exercise boundaries on the Chebyshev time grid."""
    tree = binomial_pricer(s0, k, r, sigma, maturity, tree_steps)
    params = SvParams(s0, r, sigma, 0.0, 0.0)
    surface = chebyshev_pricer(
        params, k, r, TimeGrid(maturity, steps), (n_s, 2), mc_per_node, seed=seed, boundary_method="root"
    )
    times = surface.domain.grid.times
    tree_idx = np.rint(times / tree.grid.dt).astype(int)
    cheb = surface.boundary
    return pd.DataFrame(
        {
            "step": np.arange(len(times)),
            "t": times,
            "binomial_critical": [tree.boundary.critical_price(t) for t in times],
            "binomial_no_exercise": tree.boundary.no_exercise[tree_idx],
            "chebyshev_critical": [cheb.critical_price(t, sigma) for t in times],
            "chebyshev_no_exercise": cheb.no_exercise[:, len(cheb.vol_nodes) // 2],
        }
    )


def boundary_gap(table: pd.DataFrame, maturity: float, lo: float = 0.1, hi: float = 0.9) -> float:
    """Max relative gap between the two boundaries over t in [lo T, hi T]."""
    window = table[(table["t"] >= lo * maturity) & (table["t"] <= hi * maturity)]
    if window.empty:
        raise ConfigurationError("no boundary rows inside the comparison window")
    gap = (window["chebyshev_critical"] - window["binomial_critical"]).abs() / window["binomial_critical"]
    return float(gap.max())
