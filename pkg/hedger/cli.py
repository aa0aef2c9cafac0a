"""
Command Line
train | calibrate | evaluate | evaluate-empirical | price | boundary | serve
"""
import argparse
import hashlib
import logging
import shutil
import sys
from datetime import date
from pathlib import Path
from typing import Optional

from dotenv import load_dotenv
from pydantic import ValidationError

from hedger import experiments
from hedger.config import ExperimentConfig, get_settings, load_config
from hedger.database import record_run
from hedger.errors import HedgerError

logger = logging.getLogger("hedger.cli")

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_INVALID = 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hedger", description="Deep hedging of American puts")
    parser.add_argument("--log-level", default=None, help="DEBUG, INFO, WARNING (default HEDGER_LOG_LEVEL)")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, out=True):
        p.add_argument("--config", help="experiment JSON")
        p.add_argument("--seed", type=int, help="base seed (train, test, pricer, calibration = seed + 0..3)")
        if out:
            p.add_argument("--out", help="output directory")
        return p

    def selection(p):
        p.add_argument("--symbol")
        p.add_argument("--maturity", type=date.fromisoformat, help="ISO date")
        p.add_argument("--strike", type=float)
        return p

    train = selection(common(sub.add_parser("train", help="train a DDPG hedging agent")))
    train.add_argument("--episodes", type=int)
    train.add_argument("--transcripts", type=int, default=0, help="greedy replay transcripts to write")

    selection(common(sub.add_parser("calibrate", help="fit (rho, nu) per option and symbol")))

    evaluate = selection(common(sub.add_parser("evaluate", help="hedge simulated test paths")))
    evaluate.add_argument("--agent", help="agent checkpoint (.npz)")
    evaluate.add_argument("--lambda", dest="lambdas", type=float, action="append", help="cost rate (repeatable)")
    evaluate.add_argument("--paths", type=int)
    evaluate.add_argument("--steps", type=int, help="rebalances")
    evaluate.add_argument("--transcripts", type=int, help="write positions for the first N paths")

    empirical = selection(common(sub.add_parser("evaluate-empirical", help="hedge observed daily paths")))
    empirical.add_argument("--agent", help="agent checkpoint (.npz)")
    empirical.add_argument("--agents-dir", help="directory of per-option checkpoints")
    empirical.add_argument("--lambda", dest="lambdas", type=float, action="append")

    price = common(sub.add_parser("price", help="print American / European prices"), out=False)
    price.add_argument("--strike", type=float)
    price.add_argument("--steps", type=int, default=100, help="Chebyshev / LSMC time steps")
    price.add_argument("--chebyshev", action="store_true")
    price.add_argument("--lsmc", action="store_true")

    boundary = common(sub.add_parser("boundary", help="binomial vs Chebyshev exercise boundaries"))
    boundary.add_argument("--strike", type=float)
    boundary.add_argument("--steps", type=int, default=100)

    serve = sub.add_parser("serve", help="run the HTTP service")
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8000)
    return parser


def _overrides(args) -> dict:
    seed = getattr(args, "seed", None)
    overrides = {
        "out": getattr(args, "out", None),
        "option.strike": getattr(args, "strike", None),
        "training.episodes": getattr(args, "episodes", None),
        "test.lambdas": getattr(args, "lambdas", None),
        "test.n_paths": getattr(args, "paths", None),
        "test.transcripts": getattr(args, "transcripts", None) if args.command == "evaluate" else None,
        "data.agent": getattr(args, "agent", None),
        "data.agents_dir": getattr(args, "agents_dir", None),
    }
    if args.command == "evaluate":
        overrides["test.rebalances"] = args.steps
    if seed is not None:
        for offset, name in enumerate(("train", "test", "pricer", "calibration")):
            overrides[f"seeds.{name}"] = seed + offset
    return overrides


def _selection(args) -> experiments.OptionFilter:
    return experiments.OptionFilter(
        getattr(args, "symbol", None), getattr(args, "maturity", None), getattr(args, "strike", None)
    )


def _run(args, cfg: ExperimentConfig, out_dir: Path) -> dict:
    command = args.command
    if command == "train":
        if cfg.mode == "sv-calibrated":
            return experiments.train_calibrated(cfg, _selection(args), out_dir)
        return experiments.train_agent(cfg, out_dir, args.transcripts)

    if command == "calibrate":
        return experiments.calibrate_quotes(cfg, _selection(args), out_dir)

    if command == "evaluate":
        if cfg.mode == "sv-calibrated":
            by_symbol = experiments.evaluate_calibrated(cfg, _selection(args), out_dir)
            return {"rows": len(by_symbol)}
        agent = experiments.load_agent(cfg.data.agent)
        reports, samples = experiments.evaluate_simulated(cfg, agent)
        summary = experiments.write_reports(reports, out_dir)
        if not samples.empty:
            experiments.write_frame(samples, out_dir / "positions.csv")
        records = summary.to_dict(orient="records")
        for row in records:
            print(f"{row['strategy']:>10}  lambda={row['lambda']:<5g} mean={row['mean']:9.4f}  std={row['std']:8.4f}")
        return {"reports": records}

    if command == "evaluate-empirical":
        table, means = experiments.evaluate_empirical_chain(cfg, _selection(args))
        experiments.write_frame(table, out_dir / "empirical_pnl.csv")
        experiments.write_frame(means, out_dir / "empirical_means.csv")
        return {"rows": len(table), "lambdas": list(cfg.test.lambdas)}

    if command == "boundary":
        m, o = cfg.model, cfg.option
        table = experiments.boundary_table(
            m.s0, o.strike, o.r, m.sigma, o.maturity, cfg.training.tree_steps, args.steps,
            cfg.training.cheb_nodes[0], cfg.training.cheb_mc, cfg.seeds.pricer,
        )
        experiments.write_frame(table, out_dir / "boundary.csv")
        gap = experiments.boundary_gap(table, o.maturity)
        print(f"max relative boundary gap over [0.1T, 0.9T]: {gap:.4%}")
        return {"max_gap": gap}

    raise HedgerError(f"unknown command {command}")


def _price(args, cfg: ExperimentConfig) -> int:
    m, o = cfg.model, cfg.option
    prices = experiments.price_summary(
        m.s0, o.strike, o.r, m.sigma, o.maturity, cfg.training.tree_steps,
        chebyshev=args.chebyshev, lsmc=args.lsmc, steps=args.steps, seed=cfg.seeds.pricer,
        nodes=(cfg.training.cheb_nodes[0], 2), mc_per_node=cfg.training.cheb_mc,
    )
    for name, value in prices.items():
        print(f"{name:>10}: {value:.4f}")
    return EXIT_OK


def main(argv: Optional[list] = None) -> int:
    load_dotenv()
    settings = get_settings()
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=(args.log_level or settings.log_level).upper(),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )

    if args.command == "serve":
        import uvicorn

        uvicorn.run("hedger.main:app", host=args.host, port=args.port)
        return EXIT_OK

    try:
        cfg = load_config(getattr(args, "config", None), _overrides(args))
    except ValidationError as e:
        logger.error(f"Invalid configuration: {e.error_count()} error(s): {e.errors()[0]['msg']}")
        return EXIT_INVALID
    except HedgerError as e:
        logger.error(f"Invalid configuration: {e}")
        return EXIT_INVALID

    if args.command == "price":
        try:
            return _price(args, cfg)
        except HedgerError as e:
            logger.error(str(e))
            return EXIT_INVALID

    out_dir = Path(cfg.out)
    created = not out_dir.exists()
    out_dir.mkdir(parents=True, exist_ok=True)
    try:
        config_path = cfg.dump(out_dir / "config.json")
        summary = _run(args, cfg, out_dir)
    except BaseException as e:
        if created:
            shutil.rmtree(out_dir, ignore_errors=True)
        if isinstance(e, HedgerError):
            logger.error(str(e))
            return EXIT_INVALID
        if isinstance(e, KeyboardInterrupt):
            return EXIT_FAILURE
        logger.exception(f"{args.command} failed")
        return EXIT_FAILURE

    config_hash = hashlib.sha256(config_path.read_bytes()).hexdigest()
    run_id = record_run(args.command, config_hash, str(out_dir), summary)
    logger.info(f"[Run] ✓ {args.command} #{run_id} written to {out_dir}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
