"""
Exact angles from the set {k*pi/4 | k = 0..7}.

Measurement and preparation angles in the protocols are always multiples of
pi/4, so they are stored as the integer ``k`` and only turned into a complex
phase when a projector or a state vector is built.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Union

import numpy as np

ANGLE_STEPS = 8


@dataclass(frozen=True, slots=True)
class Angle8:
    """An angle k*pi/4 with ``k`` reduced mod 8."""

    k: int
    """Multiple of pi/4, always in 0..7 after construction."""

    def __post_init__(self) -> None:
        if isinstance(self.k, bool) or not isinstance(self.k, (int, np.integer)):
            raise TypeError(f"Angle8 needs an integer multiple of pi/4, got {self.k!r}")
        object.__setattr__(self, "k", int(self.k) % ANGLE_STEPS)

    def __add__(self, other: Union["Angle8", int]) -> "Angle8":
        other_k = other.k if isinstance(other, Angle8) else int(other)
        return Angle8(self.k + other_k)

    __radd__ = __add__

    def __sub__(self, other: Union["Angle8", int]) -> "Angle8":
        other_k = other.k if isinstance(other, Angle8) else int(other)
        return Angle8(self.k - other_k)

    def __neg__(self) -> "Angle8":
        return Angle8(-self.k)

    def __int__(self) -> int:
        return self.k

    @property
    def radians(self) -> float:
        return self.k * np.pi / 4

    @property
    def phase(self) -> complex:
        """e^{i k pi/4}."""
        return complex(np.exp(1j * self.radians))

    @classmethod
    def pi(cls) -> "Angle8":
        return cls(4)

    @classmethod
    def all(cls) -> Iterator["Angle8"]:
        """The eight angles of S in increasing order."""
        return (cls(k) for k in range(ANGLE_STEPS))

    @classmethod
    def random(cls, rng: np.random.Generator) -> "Angle8":
        return cls(int(rng.integers(ANGLE_STEPS)))

    def __repr__(self) -> str:
        return f"Angle8({self.k}π/4)"
