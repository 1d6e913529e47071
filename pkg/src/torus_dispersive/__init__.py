"""Well-posedness analysis and simulation for a third-order dispersive operator on the 2-torus."""

__version__ = "0.1.0"
