"""Posted prices for sequential buyers, with exact rational arithmetic.

The package computes static and dynamic posted prices that protect social
welfare against adversarial arrival orders and tie-breaking, simulates the
resulting markets exhaustively, and decides small systems of linear
inequalities by Fourier-Motzkin elimination.
"""

from .model import (
    CapacityError,
    InvariantViolation,
    Market,
    MarketError,
    ParseError,
    PreconditionError,
    as_rational,
    format_rational,
)

__all__ = [
    "CapacityError",
    "InvariantViolation",
    "Market",
    "MarketError",
    "ParseError",
    "PreconditionError",
    "as_rational",
    "format_rational",
]
