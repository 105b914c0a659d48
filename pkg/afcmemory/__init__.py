"""AFC memory - simulation and analysis of atomic-frequency-comb optical memories."""

__version__ = "0.1.0"
