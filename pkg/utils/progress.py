"""
Progress throttling for long runs: at most one log line every `every` iterations.
"""
import logging
from typing import Optional

logger = logging.getLogger(__name__)


class ProgressThrottle:
    """
    Decides which iterations get a progress line.

    Args:
        every: Emit on iterations that are multiples of `every`; 0 disables
        label: Prefix for the emitted lines
    """

    def __init__(self, every: int = 0, label: str = "run"):
        if every < 0:
            raise ValueError("every must be >= 0")
        self.every = every
        self.label = label
        self.emitted = 0

    def due(self, t: int) -> bool:
        return self.every > 0 and t > 0 and t % self.every == 0

    def report(self, t: int, divergence: float, extra: Optional[str] = None) -> bool:
        """Log a progress line if `t` is due; returns whether one was written."""
        if not self.due(t):
            return False
        self.emitted += 1
        message = f"{self.label} t={t} divergence={divergence:.6e}"
        if extra:
            message = f"{message} {extra}"
        logger.info(message)
        return True
