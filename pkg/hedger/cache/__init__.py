"""
Cache Module
File-based caching for built pricers
"""

from .file_cache import (
    get_cached_result,
    save_to_cache,
    clear_cache,
    get_cache_key
)

__all__ = [
    'get_cached_result',
    'save_to_cache',
    'clear_cache',
    'get_cache_key'
]
