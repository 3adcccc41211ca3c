"""Ground states of almost-mass-critical 2D Gross-Pitaevskii functionals."""

__version__ = "0.1.0"
