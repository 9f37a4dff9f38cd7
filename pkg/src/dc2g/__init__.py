"""Cost-to-go guided exploration: simulator, planners, dataset tools, benchmarks."""

__version__ = "0.1.0"
