"""Markov trace mobility models: exact stationary analysis and simulation."""
