"""Realised-volatility panels and logarithmic multiplicative error models.

Turns raw tick data into five-minute realised-volatility and volume panels
and fits univariate and multivariate LogMEM specifications to measure how
volatility and trading activity propagate between venues.
"""

__version__ = "0.1.0"

from . import export, ingest, mem, prep, rvol, sim, vmem  # noqa: F401
