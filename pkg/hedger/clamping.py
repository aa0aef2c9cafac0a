"""
Clamp Counters
Bookkeeping for queries that fall outside a pricer's grid and get clamped
"""
import logging
from dataclasses import dataclass

logger = logging.getLogger(__name__)


@dataclass
class ClampStats:
    """Running count of clamped queries out of all queries seen."""

    total: int = 0
    clamped: int = 0

    def record(self, n_total: int, n_clamped: int) -> None:
        self.total += int(n_total)
        self.clamped += int(n_clamped)

    @property
    def fraction(self) -> float:
        return self.clamped / self.total if self.total else 0.0

    def warn_if_above(self, threshold: float, tag: str) -> bool:
        """Log a warning when the clamped share exceeds ``threshold``."""
        if self.fraction > threshold:
            logger.warning(
                f"[{tag}] ⚠ {self.fraction:.2%} of {self.total} queries clamped to the grid edge"
            )
            return True
        return False

    def reset(self) -> None:
        self.total = 0
        self.clamped = 0
