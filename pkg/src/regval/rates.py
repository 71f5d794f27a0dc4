"""Gross rate wrapper shared by the valuation and cost-of-capital layers."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import RateOutOfRangeError


@dataclass(frozen=True, order=True)
class GrossRate:
    """A gross (one-plus) rate of return over some horizon.

    Internally every rate is carried in gross form; the net rate and the
    percent form exist only for display.
    """

    gross: float

    def __post_init__(self) -> None:
        if not math.isfinite(self.gross):
            raise RateOutOfRangeError(f"gross rate must be finite, got {self.gross!r}")

    @classmethod
    def from_rate(cls, rate: float) -> "GrossRate":
        return cls(1.0 + rate)

    @property
    def rate(self) -> float:
        """Net rate, gross - 1."""
        return self.gross - 1.0

    @property
    def percent(self) -> float:
        return (self.gross - 1.0) * 100.0

    def __float__(self) -> float:
        return self.gross

    def format_percent(self, decimals: int = 2) -> str:
        return f"{self.percent:.{decimals}f}"


def as_gross(value: "GrossRate | float") -> float:
    """Accept either a GrossRate or a bare gross float and return the float."""
    return float(value)
