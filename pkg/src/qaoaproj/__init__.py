"""Projector-target QAOA: symmetric-subspace simulation, closed forms and training."""

from .symsim import AngleSchedule, DickeState, OverlapResult, simulate

__all__ = ["AngleSchedule", "DickeState", "OverlapResult", "simulate"]
__version__ = "0.1.0"
