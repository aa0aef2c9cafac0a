"""
File Cache Module
SHA256-keyed cache of built pricers to avoid rebuilding identical trees and surfaces
"""
import hashlib
import json
import logging
from pathlib import Path
from typing import Any, Dict, Optional

import numpy as np

from hedger.config import get_settings

logger = logging.getLogger(__name__)

CACHE_FORMAT = 1


def get_cache_dir() -> Path:
    return get_settings().cache_dir


def get_cache_key(params: Dict[str, Any]) -> str:
    """
    SHA256 over the canonical JSON of the build parameters.

    Args:
        params: JSON-serialisable build description (kind, model, strike, grid, seed...)

    Returns:
        str: SHA256 hash (hex)
    """
    canonical = json.dumps(params, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def get_cache_path(kind: str, key: str) -> Path:
    """Get path to cache file for given pricer kind and key."""
    cache_dir = get_cache_dir()
    cache_dir.mkdir(parents=True, exist_ok=True)
    return cache_dir / f"{kind}_{key}.npz"


def get_cached_result(kind: str, key: str) -> Optional[Dict[str, np.ndarray]]:
    """
    Retrieve cached arrays if available.

    Returns:
        dict | None: Arrays as saved, or None on a miss or unreadable entry
    """
    path = get_cache_path(kind, key)
    if not path.exists():
        logger.debug(f"[Cache] Miss: {kind} {key[:8]}...")
        return None
    try:
        with np.load(path, allow_pickle=False) as data:
            arrays = {name: data[name] for name in data.files}
        if int(arrays.pop("cache_format", -1)) != CACHE_FORMAT:
            logger.warning(f"[Cache] Stale format for {kind} {key[:8]}..., ignoring")
            return None
        arrays.pop("cache_meta", None)
        logger.info(f"[Cache] ✓ Hit: {kind} {key[:8]}...")
        return arrays
    except Exception as e:
        logger.warning(f"[Cache] Error reading cache: {e}")
        return None


def save_to_cache(kind: str, key: str, arrays: Dict[str, np.ndarray], meta: Optional[Dict[str, Any]] = None) -> None:
    """
    Save pricer arrays to cache.

    Args:
        kind: Pricer family (e.g. "binomial", "chebyshev")
        key: Cache key from get_cache_key
        arrays: Output of the pricer's to_arrays()
        meta: Build parameters stored alongside for inspection
    """
    try:
        path = get_cache_path(kind, key)
        payload = dict(arrays)
        payload["cache_format"] = np.array(CACHE_FORMAT)
        payload["cache_meta"] = np.array(json.dumps(meta or {}, sort_keys=True, default=str))
        with open(path, "wb") as f:
            np.savez(f, **payload)
        logger.info(f"[Cache] ✓ Saved: {kind} {key[:8]}...")
    except Exception as e:
        logger.warning(f"[Cache] Error saving cache: {e}")


def clear_cache() -> int:
    """
    Clear all cached pricers.

    Returns:
        int: Number of files deleted
    """
    cache_dir = get_cache_dir()
    if not cache_dir.exists():
        return 0

    count = 0
    for path in cache_dir.glob("*.npz"):
        path.unlink()
        count += 1

    logger.info(f"[Cache] Cleared {count} cached results")
    return count
