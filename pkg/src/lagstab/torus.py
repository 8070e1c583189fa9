"""Flat Calabi-Yau structure on the 2-torus and graded homology classes.

A torus is R^2 modulo the lattice spanned by two basis vectors.  The
holomorphic 1-form is ``exp(-i*alpha) * (dx + i dy)``, so integrating it over
a closed curve only depends on the curve's homology class.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from fractions import Fraction

import numpy as np

__all__ = [
    "TorusCY",
    "GradedClass",
    "STANDARD",
    "graded_class",
    "omega_integral",
    "phase_and_slope",
    "exact_slope",
    "shift_grading",
    "principal_arg",
]

LIFT_TOL = 1e-9


@dataclass(frozen=True)
class TorusCY:
    basis: tuple[tuple[float, float], tuple[float, float]] = ((1.0, 0.0), (0.0, 1.0))
    alpha: float = 0.0

    def __post_init__(self):
        b = tuple(tuple(float(c) for c in row) for row in self.basis)
        if len(b) != 2 or any(len(row) != 2 for row in b):
            raise ValueError("lattice basis must be two 2-vectors")
        object.__setattr__(self, "basis", b)
        object.__setattr__(self, "alpha", float(self.alpha))
        if self.determinant <= 0:
            raise ValueError("lattice basis must have positive determinant")

    @property
    def determinant(self) -> float:
        (a, b), (c, d) = self.basis
        return a * d - b * c

    @property
    def matrix(self) -> np.ndarray:
        """Columns are the two basis vectors."""
        return np.array(self.basis, dtype=float).T

    @property
    def is_standard(self) -> bool:
        return self.basis == ((1.0, 0.0), (0.0, 1.0)) and self.alpha == 0.0

    def translation(self, p: int, q: int) -> np.ndarray:
        """Deck translation ``p*basis_1 + q*basis_2`` in the universal cover."""
        (a, b), (c, d) = self.basis
        return np.array([p * a + q * c, p * b + q * d])

    def rotation(self) -> complex:
        return complex(math.cos(self.alpha), -math.sin(self.alpha))

    def to_json(self) -> dict:
        return {"basis": [list(row) for row in self.basis], "alpha": self.alpha}

    @classmethod
    def from_json(cls, data: dict) -> "TorusCY":
        basis = data.get("basis", [[1.0, 0.0], [0.0, 1.0]])
        return cls(basis=tuple(tuple(row) for row in basis), alpha=data.get("alpha", 0.0))


STANDARD = TorusCY()


def principal_arg(z: complex) -> float:
    """Argument in (-pi, pi]."""
    return math.atan2(z.imag, z.real)


@dataclass(frozen=True)
class GradedClass:
    """Integer homology class together with a real lift of its phase.

    ``phase_lift`` is data: two classes with the same ``(p, q)`` but lifts
    differing by ``2*pi*k`` are different graded objects.
    """

    p: int
    q: int
    phase_lift: float = field(default=0.0)

    def __post_init__(self):
        if int(self.p) != self.p or int(self.q) != self.q:
            raise ValueError("homology coordinates must be integers")
        object.__setattr__(self, "p", int(self.p))
        object.__setattr__(self, "q", int(self.q))
        object.__setattr__(self, "phase_lift", float(self.phase_lift))
        if self.p == 0 and self.q == 0:
            raise ValueError("zero homology class")

    @property
    def vector(self) -> tuple[int, int]:
        return (self.p, self.q)

    def lift_index(self, geometry: TorusCY = STANDARD) -> int:
        base = principal_arg(omega_integral((self.p, self.q), geometry))
        return round((self.phase_lift - base) / (2 * math.pi))

    def check(self, geometry: TorusCY = STANDARD) -> None:
        """Raise ValueError unless the lift is a lift of the true argument."""
        base = principal_arg(omega_integral((self.p, self.q), geometry))
        k = (self.phase_lift - base) / (2 * math.pi)
        if abs(k - round(k)) * 2 * math.pi > LIFT_TOL:
            raise ValueError(
                f"phase_lift {self.phase_lift!r} is not a lift of arg for class "
                f"({self.p}, {self.q})"
            )

    def to_json(self) -> dict:
        return {"p": self.p, "q": self.q, "phase_lift": self.phase_lift}

    @classmethod
    def from_json(cls, data: dict, geometry: TorusCY = STANDARD) -> "GradedClass":
        c = cls(data["p"], data["q"], data["phase_lift"])
        c.check(geometry)
        return c


def graded_class(p: int, q: int, lift_index: int = 0, geometry: TorusCY = STANDARD) -> GradedClass:
    """The class ``(p, q)`` with phase ``principal arg + 2*pi*lift_index``."""
    if p == 0 and q == 0:
        raise ValueError("zero homology class")
    base = principal_arg(omega_integral((p, q), geometry))
    return GradedClass(p, q, base + 2 * math.pi * lift_index)


def omega_integral(cls, geometry: TorusCY = STANDARD) -> complex:
    """Integral of the holomorphic form over a cycle in class ``cls``.

    ``cls`` may be a GradedClass or a pair of integers.  The integral
    telescopes, so the result is ``exp(-i alpha) * (v_x + i v_y)`` where ``v``
    is the deck translation of the class.
    """
    p, q = (cls.p, cls.q) if isinstance(cls, GradedClass) else cls
    if p == 0 and q == 0:
        raise ValueError("zero homology class")
    vx, vy = geometry.translation(p, q)
    return geometry.rotation() * complex(vx, vy)


def phase_and_slope(cls: GradedClass, geometry: TorusCY = STANDARD) -> tuple[float, float]:
    """Return ``(phi, mu)`` with ``mu = tan(phi) = Im/Re`` of the integral.

    A vertical class has ``mu = +inf`` whatever its orientation, so ``mu``
    is unchanged by ``phi -> phi + pi`` in every case.  Computing the ratio
    from the integral rather than ``tan(phi)`` keeps ``mu`` exact.
    """
    z = omega_integral(cls, geometry)
    if geometry.is_standard:
        re, im = cls.p, cls.q
    else:
        re, im = z.real, z.imag
    mu = math.inf if re == 0 else im / re
    return cls.phase_lift, mu


def exact_slope(cls, geometry: TorusCY = STANDARD) -> Fraction | None:
    """Slope as an exact rational on the standard torus; None when vertical."""
    if not geometry.is_standard:
        raise ValueError("exact slopes are only defined on the standard unit torus")
    p, q = (cls.p, cls.q) if isinstance(cls, GradedClass) else cls
    if p == 0 and q == 0:
        raise ValueError("zero homology class")
    if p == 0:
        return None
    return Fraction(q, p)


def shift_grading(cls: GradedClass, m: int) -> GradedClass:
    """Apply the shift ``[m]``: phase + m*pi, orientation reversed for odd m."""
    sign = -1 if m % 2 else 1
    return replace(cls, p=sign * cls.p, q=sign * cls.q, phase_lift=cls.phase_lift + m * math.pi)
