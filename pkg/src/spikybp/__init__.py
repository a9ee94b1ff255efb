"""Spiky measurement ensembles, basis-pursuit failure certificates, and
the LP machinery behind them."""

__version__ = "0.1.0"
