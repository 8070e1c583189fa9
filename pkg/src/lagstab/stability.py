"""Destabilizer search for graded classes on the 2-torus.

A class is destabilized when it splits as ``L1 # L2`` (a graded sum exists)
with ``phi(L1) >= phi(L2)``.  On the torus every sub-class has a straight
line representative, so it is enough to enumerate integer splittings.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .surgery import grading_compatible
from .torus import STANDARD, GradedClass, TorusCY, omega_integral, principal_arg

__all__ = ["Witness", "StabilityVerdict", "enumerate_decompositions", "is_stable"]

STABLE = "stable"
DESTABILIZED = "destabilized"
PARALLEL_ONLY = "parallel_only"

TWO_PI = 2 * math.pi


@dataclass(frozen=True)
class Witness:
    first: tuple[int, int, float]
    second: tuple[int, int, float]
    intersection_count: int
    compatible: bool
    destabilizing: bool
    # connected components of the resolved sum of line representatives
    components: int

    def to_json(self) -> dict:
        return {
            "first": {"p": self.first[0], "q": self.first[1], "phi": self.first[2]},
            "second": {"p": self.second[0], "q": self.second[1], "phi": self.second[2]},
            "intersection_count": self.intersection_count,
            "compatible": self.compatible,
            "destabilizing": self.destabilizing,
            "components": self.components,
        }


@dataclass(frozen=True)
class StabilityVerdict:
    status: str
    witnesses: tuple[Witness, ...]
    search_bound: int
    graded_class: GradedClass

    def to_json(self) -> dict:
        return {
            "class": self.graded_class.to_json(),
            "status": self.status,
            "search_bound": self.search_bound,
            "witnesses": [w.to_json() for w in self.witnesses],
        }


def _wrap(x: float) -> float:
    return math.pi - (math.pi - x) % TWO_PI


def _sub_lifts(cls: GradedClass, z1: complex, z2: complex) -> tuple[float, float]:
    """Lifts of the sub-class phases anchored to the class phase.

    ``phi1`` is the lift of arg(z1) nearest the class phase and
    ``phi2 - phi1`` is the principal difference, in (-pi, pi].
    """
    phi = cls.phase_lift
    phi1 = phi + _wrap(principal_arg(z1) - phi)
    phi2 = phi1 + _wrap(principal_arg(z2) - principal_arg(z1))
    return phi1, phi2


def enumerate_decompositions(cls: GradedClass, bound: int, geometry: TorusCY = STANDARD) -> list[Witness]:
    """All transverse splittings ``(p, q) = (p1, q1) + (p2, q2)`` up to ``bound``.

    Ordered lexicographically on ``(p1, q1)``.
    """
    p, q = cls.p, cls.q
    if bound < max(abs(p), abs(q)):
        raise ValueError("search bound must be at least max(|p|, |q|)")
    out = []
    for p1 in range(-bound, bound + 1):
        for q1 in range(-bound, bound + 1):
            p2, q2 = p - p1, q - q1
            if (p1, q1) == (0, 0) or (p2, q2) == (0, 0):
                continue
            if max(abs(p2), abs(q2)) > bound:
                continue
            det = p1 * q2 - p2 * q1
            if det == 0:
                continue
            z1 = omega_integral((p1, q1), geometry)
            z2 = omega_integral((p2, q2), geometry)
            phi1, phi2 = _sub_lifts(cls, z1, z2)
            compatible = grading_compatible(phi1, phi2)
            out.append(Witness(
                first=(p1, q1, phi1),
                second=(p2, q2, phi2),
                intersection_count=abs(det),
                compatible=compatible,
                destabilizing=compatible and phi1 >= phi2,
                components=math.gcd(p, q),
            ))
    return out


def is_stable(cls: GradedClass, bound: int, geometry: TorusCY = STANDARD) -> StabilityVerdict:
    """Stability verdict for a graded class on the torus.

    ``parallel_only`` means no graded sum of line representatives is
    connected: every resolution breaks into parallel copies of one line,
    which happens exactly for imprimitive classes.
    """
    witnesses = tuple(enumerate_decompositions(cls, bound, geometry))
    if any(w.destabilizing for w in witnesses):
        status = DESTABILIZED
    elif not any(w.compatible and w.components == 1 for w in witnesses):
        status = PARALLEL_ONLY
    else:
        status = STABLE
    return StabilityVerdict(status, witnesses, bound, cls)
