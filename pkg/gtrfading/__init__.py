"""gtr-fading: Generalized Two-Ray fading statistics, MGF-based performance, Monte Carlo oracle."""

__version__ = "0.1.0"
