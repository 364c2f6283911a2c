"""Spectral densities, 1/f scaling and Gillespie simulation of continuous-time Markov chains."""

from . import core, chain, analysis, simulation, pipeline, verify

__all__ = [
    "core",
    "chain",
    "analysis",
    "simulation",
    "pipeline",
    "verify",
]
