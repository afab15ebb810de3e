"""Arbitrage-free valuation of proof-of-work mining hardware.

Thin wrapper over the compiled ``_asicval`` extension.
"""

from ._asicval import *  # noqa: F401,F403
from ._asicval import (
    CalibrationError,
    DataError,
    DegenerateLatticeError,
    DomainError,
    ValidationError,
)

__all__ = [name for name in dir() if not name.startswith("_")]
