"""Mirror dictionary between torus line classes and sheaves on an elliptic curve."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from .torus import GradedClass

__all__ = [
    "SheafClass",
    "MirrorImage",
    "WallScenario",
    "mirror_map",
    "sheaf_stable",
    "extension_wall",
    "mukai_sum",
]


@dataclass(frozen=True)
class SheafClass:
    rank: int
    degree: int

    def __post_init__(self):
        if self.rank < 0:
            raise ValueError("rank must be non-negative")
        if self.rank == 0 and self.degree == 0:
            raise ValueError("zero sheaf class")

    @property
    def slope(self) -> Fraction | None:
        """degree / rank, or None for torsion sheaves (infinite slope)."""
        return None if self.rank == 0 else Fraction(self.degree, self.rank)

    @property
    def name(self) -> str:
        if (self.rank, self.degree) == (1, 0):
            return "O"
        if (self.rank, self.degree) == (0, 1):
            return "O_p"
        if self.rank == 1:
            return f"O({self.degree}p)"
        if self.rank == 0:
            return f"torsion(length {self.degree})"
        return f"rank {self.rank} degree {self.degree}"

    def to_json(self) -> dict:
        slope = self.slope
        return {
            "rank": self.rank,
            "degree": self.degree,
            "stable": sheaf_stable(self),
            "slope": None if slope is None else float(slope),
            "slope_exact": None if slope is None else f"{slope.numerator}/{slope.denominator}",
            "name": self.name,
        }


@dataclass(frozen=True)
class MirrorImage:
    sheaf: SheafClass
    # derived-category degree shift carried alongside the sheaf
    shift: int = 0

    def to_json(self) -> dict:
        return {**self.sheaf.to_json(), "shift": self.shift}


def mirror_map(cls: GradedClass, allow_shift: bool = False) -> MirrorImage:
    """Send the line class ``(p, q)`` to the sheaf class ``(rank p, degree q)``.

    The class must have rank >= 0 orientation (p > 0, or p = 0 and q > 0)
    with phase in (-pi/2, pi/2].  With ``allow_shift`` any graded class is
    accepted: it is rotated into that window by ``[-m]`` and ``m`` is
    returned as the shift.
    """
    # phase window index: phi in (-pi/2, pi/2] + m*pi
    m = math.ceil((cls.phase_lift - 0.5 * math.pi) / math.pi - 1e-12)
    sign = -1 if m % 2 else 1
    p, q = sign * cls.p, sign * cls.q
    if m != 0 and not allow_shift:
        raise ValueError(
            "unnormalized orientation: shift the grading so the phase lies in (-pi/2, pi/2]"
        )
    if p < 0 or (p == 0 and q < 0):
        raise ValueError("phase lift is inconsistent with the class orientation")
    return MirrorImage(SheafClass(p, q), m)


def sheaf_stable(s: SheafClass) -> bool:
    """Stability on an elliptic curve: coprime rank and degree, or a single point."""
    if s.rank > 0:
        return math.gcd(s.rank, s.degree) == 1
    return s.degree == 1


@dataclass(frozen=True)
class WallScenario:
    """Slopes ``mu(E2) = mu`` and ``mu(E1) = mu - t`` for the extension ``0 -> E1 -> E -> E2 -> 0``."""

    mu: float
    t: float

    def __post_init__(self):
        if not (math.isfinite(self.mu) and math.isfinite(self.t)):
            raise ValueError("mu and t must be finite")


def extension_wall(scenario: WallScenario) -> dict:
    """Verdict for the non-split extension E of E2 by E1 at parameter t."""
    t = scenario.t
    out = {"mu": scenario.mu, "t": t, "slope_E1": scenario.mu - t, "slope_E2": scenario.mu}
    if t > 0:
        out.update(status="stable", destabilizer=None, representative="E")
    elif t == 0:
        out.update(status="semistable", destabilizer="E1", representative="E1+E2")
    else:
        out.update(status="unstable", destabilizer="E1", representative=None)
    return out


def mukai_sum(n: int, v1, v2) -> tuple[int, ...]:
    """Mukai vector of the extension on the far side of the wall.

    Surfaces (even n): ``v1 + v2``.  3-folds: ``v2 - v1``.
    """
    if n not in (2, 3):
        raise ValueError("n must be 2 or 3")
    v1, v2 = tuple(int(x) for x in v1), tuple(int(x) for x in v2)
    if len(v1) != len(v2):
        raise ValueError("Mukai vectors have different lengths")
    if not any(v1) or not any(v2):
        raise ValueError("zero Mukai vector")
    if n % 2 == 0:
        return tuple(a + b for a, b in zip(v1, v2))
    return tuple(b - a for a, b in zip(v1, v2))
