"""Resonance-assisted tunnelling splittings on a periodic quartic lattice."""

from ._core import *  # noqa: F401,F403
from ._core import __version__
