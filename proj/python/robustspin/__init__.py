"""Robust control pulses for a driven two-level spin."""

from ._core import *  # noqa: F401,F403
from ._core import __version__  # noqa: F401
