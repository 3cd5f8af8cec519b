"""Lattice protein folding with a CVaR-trained real-amplitude circuit."""

__version__ = "0.1.0"
