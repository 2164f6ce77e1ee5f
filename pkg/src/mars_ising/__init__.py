"""Ising ground-state and MAX-CUT heuristics built around mean-field annealing from random states."""

__version__ = "0.1.0"
