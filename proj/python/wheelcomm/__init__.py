"""Wheel-sensor node simulation, pub/sub transport and log analysis."""

from ._wheelcomm import *  # noqa: F401,F403
from ._wheelcomm import __doc__  # noqa: F401

__version__ = "0.1.0"
