"""Gathering simulator for anonymous mobile agents on the square grid."""

from .grid import Cell, Configuration, GridError, enumerate_polyominoes, is_connected, is_contractible
from .engine import Lockstep, Outcome, RandomFair, Scripted, FreezeSubset, Trace, replay, run
from .contractible import cc_machine
from .connected import cg_machine
from .general import gg_machine
from .kernels import BACKEND

__version__ = "0.1.0"

__all__ = [
    "Cell", "Configuration", "GridError", "enumerate_polyominoes", "is_connected", "is_contractible",
    "Lockstep", "Outcome", "RandomFair", "Scripted", "FreezeSubset", "Trace", "replay", "run",
    "cc_machine", "cg_machine", "gg_machine", "BACKEND",
]
