"""Charge-state dynamics of NV centers: blinking traces, count statistics,
power laws, dopant-assisted recombination, PLE scans and screening."""

from ._core import *  # noqa: F401,F403
from ._core import __doc__  # noqa: F401

__version__ = "0.1.0"
