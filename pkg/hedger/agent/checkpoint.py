"""
Agent Checkpoints
Versioned .npz layout: layer sizes, all four networks, hyperparameters JSON and seed
"""
import json
import logging
from pathlib import Path

import numpy as np

from hedger.agent.ddpg import AgentHyperparams, AgentParams
from hedger.agent.mlp import Mlp
from hedger.errors import DataError

logger = logging.getLogger(__name__)

FORMAT_VERSION = 1
_NETS = ("actor", "critic", "target_actor", "target_critic")


def save_checkpoint(agent: AgentParams, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    arrays = {
        "format_version": np.array(FORMAT_VERSION),
        "seed": np.array(agent.seed),
        "hyperparams": np.array(json.dumps(agent.hyperparams_dict(), sort_keys=True)),
    }
    for name in _NETS:
        net: Mlp = getattr(agent, name)
        arrays[f"{name}_sizes"] = np.array(net.sizes)
        arrays[f"{name}_output"] = np.array(net.output)
        for i, (w, b) in enumerate(zip(net.weights, net.biases)):
            arrays[f"{name}_w{i}"] = w
            arrays[f"{name}_b{i}"] = b
    with open(path, "wb") as f:
        np.savez(f, **arrays)
    logger.info(f"[Checkpoint] ✓ Saved agent to {path}")
    return path


def load_checkpoint(path) -> AgentParams:
    path = Path(path)
    if not path.exists():
        raise DataError(f"checkpoint not found: {path}")
    with np.load(path, allow_pickle=False) as data:
        version = int(data["format_version"])
        if version != FORMAT_VERSION:
            raise DataError(f"unsupported checkpoint format {version} in {path}")
        nets = {}
        for name in _NETS:
            sizes = tuple(int(s) for s in data[f"{name}_sizes"])
            n_layers = len(sizes) - 1
            nets[name] = Mlp(
                sizes,
                [data[f"{name}_w{i}"].copy() for i in range(n_layers)],
                [data[f"{name}_b{i}"].copy() for i in range(n_layers)],
                str(data[f"{name}_output"]),
            )
        hp = AgentHyperparams(**json.loads(str(data["hyperparams"])))
        seed = int(data["seed"])
    logger.debug(f"[Checkpoint] Loaded agent from {path}")
    return AgentParams(hp=hp, seed=seed, **nets)
