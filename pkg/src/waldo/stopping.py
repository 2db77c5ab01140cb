# Python standard library
from dataclasses import dataclass
from functools import cached_property
import math

# 3rd party imports from pypi
from scipy.stats import norm


class RunningStats:
    """Streaming mean and sample variance (Welford's update)."""

    __slots__ = ("count", "mean", "_m2")

    def __init__(self):
        self.count = 0
        self.mean = 0.0
        self._m2 = 0.0

    def push(self, value):
        self.count += 1
        delta = value - self.mean
        self.mean += delta / self.count
        self._m2 += delta * (value - self.mean)

    @property
    def variance(self):
        if self.count < 2:
            return 0.0
        return self._m2 / (self.count - 1)

    @property
    def std(self):
        return math.sqrt(self.variance)

    def __repr__(self):
        return f"RunningStats(count={self.count}, mean={self.mean:.6g}, std={self.std:.6g})"


@dataclass(frozen=True)
class StoppingCriterion:
    """When to stop launching walks from a node.
    @param delta <float>:
        Error margin: relative to the mean for walk lengths, absolute for gains
    @param alpha <float>:
        Confidence level of the normal-approximation interval
    @param min_walks <int>:
        No decision is taken before this many samples
    """

    delta: float = 0.05
    alpha: float = 0.99
    min_walks: int = 20

    def __post_init__(self):
        if not self.delta > 0:
            raise ValueError(f"delta must be positive, got {self.delta}")
        if not 0 < self.alpha < 1:
            raise ValueError(f"alpha must lie in (0, 1), got {self.alpha}")
        if int(self.min_walks) != self.min_walks or self.min_walks < 1:
            raise ValueError(f"min_walks must be a positive integer, got {self.min_walks}")

    @classmethod
    def from_config(cls, walks):
        """Build from the 'walks' section of the configuration."""
        return cls(
            delta=float(walks["delta"]),
            alpha=float(walks["alpha"]),
            min_walks=int(walks["min_walks"]),
        )

    @cached_property
    def quantile(self):
        """q with P[|N(0,1)| > q] = 1 - alpha; 2.5758 for alpha = 0.99."""
        return float(norm.isf((1.0 - self.alpha) / 2.0))

    def satisfied(self, stats, relative=True):
        """True once the interval mean ± delta (scaled by the mean when relative)
        holds with confidence alpha. A zero sample spread stops at the floor."""
        if stats.count < self.min_walks:
            return False
        sigma = stats.std
        if sigma == 0.0:
            return True
        margin = self.delta * stats.mean if relative else self.delta
        return margin * math.sqrt(stats.count) / sigma > self.quantile

    def half_width(self, stats):
        """Confidence half-width q·σ/√M of the current mean."""
        if stats.count == 0:
            return math.inf
        return self.quantile * stats.std / math.sqrt(stats.count)

    def to_dict(self):
        return {"delta": self.delta, "alpha": self.alpha, "min_walks": self.min_walks}
