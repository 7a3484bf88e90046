"""
Tolerance tracking for numerical defects within a single run.

Records scalar defects (norm drift, unitarity, ...) and reports whether
the worst one has crossed a cap. Callers decide whether crossing the cap
aborts the run or is only reported.
"""

import logging

logger = logging.getLogger(__name__)


class ToleranceBudget:
    """Tracks the worst recorded defect against a limit."""

    def __init__(self, limit: float, label: str = "defect"):
        """Initialize with a cap. 0 means unlimited."""
        self.limit = limit
        self.label = label
        self.worst = 0.0
        self.count = 0

    def record(self, value: float) -> None:
        """Record one defect value."""
        self.count += 1
        if value > self.worst:
            self.worst = float(value)
            if self.exceeded:
                logger.debug(
                    "%s %.3e exceeds limit %.3e", self.label, value, self.limit
                )

    @property
    def exceeded(self) -> bool:
        """Return True if the worst defect has reached the limit."""
        if self.limit == 0:
            return False
        return self.worst >= self.limit

    @property
    def remaining(self) -> float:
        """Return headroom below the limit, or -1 if unlimited."""
        if self.limit == 0:
            return -1.0
        return max(0.0, self.limit - self.worst)
