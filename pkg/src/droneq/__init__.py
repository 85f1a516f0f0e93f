"""Hybrid QAOA/classical toolkit for drone delivery routing and fleet scheduling."""

__version__ = "0.1.0"
