"""Dehn twists on pairing lattices and the graded twist calculus.

Homology lives in a lattice spanned by generators with an integer pairing
matrix.  Surfaces (n = 2) carry a symmetric pairing with spherical classes
of self-pairing -2; 3-folds (n = 3) an antisymmetric one.  Graded
expressions are formal terms over generators, built from shifts ``[m]``,
ordered graded connect sums ``#`` and twists ``T_a^k``.
"""

from __future__ import annotations

import cmath
import math
import re
from dataclasses import dataclass
from typing import Union

import numpy as np

__all__ = [
    "PairingLattice",
    "Leaf",
    "Sum",
    "Twist",
    "NotReducible",
    "dehn_twist_homology",
    "expression_class",
    "graded_twist_rewrite",
    "rewrite",
    "parse_expression",
    "format_expression",
    "phase_audit",
    "FamilyModel",
    "family_phases",
    "family_track",
    "K3_PARENTHETICAL",
]


class NotReducible(ValueError):
    """The small rewrite system cannot handle this expression."""


@dataclass(frozen=True)
class PairingLattice:
    pairing: tuple[tuple[int, ...], ...]
    n: int
    names: tuple[str, ...] = ()

    def __post_init__(self):
        g = np.array(self.pairing, dtype=np.int64)
        if g.ndim != 2 or g.shape[0] != g.shape[1]:
            raise ValueError("pairing must be a square matrix")
        if self.n not in (2, 3):
            raise ValueError("dimension parity n must be 2 or 3")
        if self.n == 2 and not np.array_equal(g, g.T):
            raise ValueError("n = 2 requires a symmetric pairing")
        if self.n == 3 and not np.array_equal(g, -g.T):
            raise ValueError("n = 3 requires an antisymmetric pairing")
        object.__setattr__(self, "pairing", tuple(tuple(int(x) for x in row) for row in g))
        names = self.names or tuple(f"L{i + 1}" for i in range(len(g)))
        if len(names) != len(g):
            raise ValueError("one name per generator")
        object.__setattr__(self, "names", tuple(names))

    @property
    def rank(self) -> int:
        return len(self.pairing)

    @property
    def matrix(self) -> np.ndarray:
        return np.array(self.pairing, dtype=np.int64)

    def pair(self, x, y) -> int:
        return int(np.asarray(x, dtype=np.int64) @ self.matrix @ np.asarray(y, dtype=np.int64))

    def index(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise KeyError(f"unknown generator {name!r}") from None

    def basis(self, a: int) -> np.ndarray:
        e = np.zeros(self.rank, dtype=np.int64)
        e[a] = 1
        return e

    def is_spherical(self, a: int) -> bool:
        return self.pairing[a][a] == (-2 if self.n == 2 else 0)

    @classmethod
    def a2_chain(cls, n: int) -> "PairingLattice":
        """Two spheres meeting once, with pairing <L1, L2> = +1."""
        if n == 2:
            return cls(((-2, 1), (1, -2)), 2)
        return cls(((0, 1), (-1, 0)), 3)


def dehn_twist_homology(lattice: PairingLattice, a: int, x, power: int = 1, opposite: bool = False) -> np.ndarray:
    """Picard-Lefschetz action of ``T_a**power`` on a lattice vector.

    n = 2: ``x -> x + <x, a> a``.  n = 3: ``x -> x - <a, x> a`` (so that
    ``T_a(a + b) = b`` when ``<a, b> = 1``); ``opposite`` flips the 3-fold sign.
    """
    if not lattice.is_spherical(a):
        raise ValueError(f"generator {lattice.names[a]} is not spherical")
    x = np.array(x, dtype=np.int64)
    va = lattice.basis(a)
    g = lattice.matrix
    sign = -1 if opposite else 1
    steps = abs(power)
    for _ in range(steps):
        if lattice.n == 2:
            x = x + int(x @ g @ va) * va
        elif power > 0:
            x = x - sign * int(va @ g @ x) * va
        else:
            x = x + sign * int(va @ g @ x) * va
    return x


WALL_TOL = 1e-9


# A claimed K3 identity says the twist squared adds twice the vanishing
# class.  The Picard-Lefschetz formula with self-pairing -2 gives the
# identity instead; kept here so callers can see both.
K3_PARENTHETICAL = {
    "claimed": "[T^2 L2] = [L2] + 2[L1]",
    "formula": "T^2 = identity on homology for self-pairing -2",
}


# --- graded expressions ----------------------------------------------------


@dataclass(frozen=True)
class Leaf:
    gen: str
    shift: int = 0


@dataclass(frozen=True)
class Sum:
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Twist:
    gen: str
    power: int
    body: "Expr"


Expr = Union[Leaf, Sum, Twist]


def format_expression(e: Expr) -> str:
    if isinstance(e, Leaf):
        return e.gen if e.shift == 0 else f"{e.gen}[{e.shift}]"
    if isinstance(e, Sum):
        return f"(sum {format_expression(e.left)} {format_expression(e.right)})"
    return f"(T {e.gen} {e.power} {format_expression(e.body)})"


_TOKEN = re.compile(r"\(|\)|[^\s()]+")
_LEAF = re.compile(r"^([A-Za-z_]\w*)(?:\[([+-]?\d+)\])?$")


def _shifted(e: Expr, m: int) -> Expr:
    """Push a grading shift down to the leaves."""
    if m == 0:
        return e
    if isinstance(e, Leaf):
        return Leaf(e.gen, e.shift + m)
    if isinstance(e, Sum):
        return Sum(_shifted(e.left, m), _shifted(e.right, m))
    return Twist(e.gen, e.power, _shifted(e.body, m))


def parse_expression(text: str) -> Expr:
    """Parse the prefix grammar.

    ``L1``, ``L1[-2]``, ``(sum X Y)``, ``(T L1 2 X)``, ``(shift X m)``.
    """
    tokens = _TOKEN.findall(text)
    pos = 0

    def take():
        nonlocal pos
        if pos >= len(tokens):
            raise ValueError("unexpected end of expression")
        tok = tokens[pos]
        pos += 1
        return tok

    def parse():
        tok = take()
        if tok == "(":
            head = take()
            if head == "sum":
                node = Sum(parse(), parse())
            elif head == "T":
                gen = take()
                node = Twist(gen, int(take()), parse())
            elif head == "shift":
                body = parse()
                node = _shifted(body, int(take()))
            else:
                raise ValueError(f"unknown operator {head!r}")
            if take() != ")":
                raise ValueError("expected ')'")
            return node
        m = _LEAF.match(tok)
        if not m:
            raise ValueError(f"bad token {tok!r}")
        return Leaf(m.group(1), int(m.group(2) or 0))

    node = parse()
    if pos != len(tokens):
        raise ValueError("trailing tokens in expression")
    return node


def expression_class(e: Expr, lattice: PairingLattice) -> np.ndarray:
    """Homology class; odd shifts reverse orientation."""
    if isinstance(e, Leaf):
        return (-1) ** (e.shift % 2) * lattice.basis(lattice.index(e.gen))
    if isinstance(e, Sum):
        return expression_class(e.left, lattice) + expression_class(e.right, lattice)
    return dehn_twist_homology(lattice, lattice.index(e.gen), expression_class(e.body, lattice), e.power)


def _twist_leaf(lattice: PairingLattice, a: str, leaf: Leaf, sign: int) -> Expr:
    """Single twist ``T_a**sign`` of a leaf."""
    n = lattice.n
    if leaf.gen == a:
        return Leaf(a, leaf.shift + sign * (1 - n))
    pair = lattice.pair(lattice.basis(lattice.index(a)), lattice.basis(lattice.index(leaf.gen)))
    if pair == 0:
        return leaf
    if pair != 1:
        raise NotReducible(f"<{a}, {leaf.gen}> = {pair}; rules need intersection +1")
    m = leaf.shift
    if sign > 0:
        return Sum(leaf, Leaf(a, m + 2 - n))
    return Sum(Leaf(a, m), leaf)


def _as_twist(lattice: PairingLattice, a: str, e: Expr):
    """Recognise ``e`` as ``T_a^j(b[m])``; returns (b[m], j) or None."""
    if isinstance(e, Twist) and e.gen == a and isinstance(e.body, Leaf) and e.body.gen != a:
        return e.body, e.power
    if isinstance(e, Sum) and isinstance(e.left, Leaf) and isinstance(e.right, Leaf):
        left, right = e.left, e.right
        if left.gen == a and right.gen != a and left.shift == right.shift:
            if _twist_leaf(lattice, a, right, -1) == e:
                return right, -1
        if right.gen == a and left.gen != a and _twist_leaf(lattice, a, left, 1) == e:
            return left, 1
    return None


def _absorb(lattice: PairingLattice, a: str, power: int, e: Expr) -> Expr:
    folded = _as_twist(lattice, a, e)
    if folded is not None:
        body, j = folded
        total = power + j
        if total == 0:
            return body
        if abs(total) == 1:
            return _twist_leaf(lattice, a, body, total)
        return Twist(a, total, body)
    if isinstance(e, Leaf):
        if e.gen == a:
            return Leaf(a, e.shift + power * (1 - lattice.n))
        if abs(power) == 1:
            return _twist_leaf(lattice, a, e, power)
        if lattice.pair(lattice.basis(lattice.index(a)), lattice.basis(lattice.index(e.gen))) == 0:
            return e
        return Twist(a, power, e)
    if isinstance(e, Sum):
        return Sum(_absorb(lattice, a, power, e.left), _absorb(lattice, a, power, e.right))
    raise NotReducible(f"cannot simplify nested twist {format_expression(e)}")


def _distribute(lattice: PairingLattice, a: str, power: int, e: Expr) -> Expr:
    if isinstance(e, Sum):
        return Sum(_distribute(lattice, a, power, e.left), _distribute(lattice, a, power, e.right))
    if isinstance(e, Leaf):
        if e.gen == a:
            return Leaf(a, e.shift + power * (1 - lattice.n))
        if abs(power) == 1:
            return _twist_leaf(lattice, a, e, power)
        if lattice.pair(lattice.basis(lattice.index(a)), lattice.basis(lattice.index(e.gen))) == 0:
            return e
        return Twist(a, power, e)
    raise NotReducible(f"cannot distribute over nested twist {format_expression(e)}")


def _normalise(lattice: PairingLattice, e: Expr, route: str) -> Expr:
    if isinstance(e, Leaf):
        lattice.index(e.gen)
        return e
    if isinstance(e, Sum):
        return Sum(_normalise(lattice, e.left, route), _normalise(lattice, e.right, route))
    return graded_twist_rewrite(lattice, _normalise(lattice, e.body, route), e.gen, e.power, route)


def graded_twist_rewrite(lattice: PairingLattice, expr: Expr, twist: str, power: int,
                         route: str = "absorb") -> Expr:
    """Apply ``T_twist**power`` to ``expr`` and reduce with the graded rules.

    Rules: ``T_a(a[m]) = a[m+1-n]``; ``T_a(b[m]) = b[m] # a[m+2-n]`` and
    ``T_a^{-1}(b[m]) = a[m] # b[m]`` for ``<a, b> = 1``; twists of disjoint
    generators are trivial.  ``route="absorb"`` first folds sums matching
    those patterns back into twists, then cancels powers;
    ``route="distribute"`` pushes the twist through every ``#`` and keeps
    higher powers on other generators unexpanded.
    """
    if route not in ("absorb", "distribute"):
        raise ValueError("route must be 'absorb' or 'distribute'")
    lattice.index(twist)
    if not lattice.is_spherical(lattice.index(twist)):
        raise ValueError(f"generator {twist} is not spherical")
    body = _normalise(lattice, expr, route)
    if power == 0:
        return body
    if route == "absorb":
        return _absorb(lattice, twist, power, body)
    return _distribute(lattice, twist, power, body)


def rewrite(lattice: PairingLattice, expr: Expr, route: str = "absorb") -> Expr:
    """Reduce every twist node of ``expr``."""
    return _normalise(lattice, expr, route)


# --- phase audit -----------------------------------------------------------


def _node_phase(e: Expr, phases: dict, magnitudes: dict) -> tuple[float, complex]:
    """Lifted phase of a node and its (unit-scaled) period."""
    key = format_expression(e)
    if key in phases:
        phi = float(phases[key])
        return phi, magnitudes.get(key, 1.0) * cmath.exp(1j * phi)
    if isinstance(e, Leaf):
        phi = float(phases[e.gen]) + e.shift * math.pi
        return phi, magnitudes.get(e.gen, 1.0) * cmath.exp(1j * phi)
    if isinstance(e, Twist):
        # a small monodromy loop leaves the phase of the body where it was
        return _node_phase(e.body, phases, magnitudes)
    lphi, lz = _node_phase(e.left, phases, magnitudes)
    rphi, rz = _node_phase(e.right, phases, magnitudes)
    z = lz + rz
    ref = 0.5 * (lphi + rphi)
    base = cmath.phase(z) if abs(z) > 0 else ref
    phi = base + 2 * math.pi * round((ref - base) / (2 * math.pi))
    return phi, z


def phase_audit(expr: Expr, phases: dict, magnitudes: dict | None = None) -> dict:
    """Check ``phi(left) < phi(right)`` at every ``#`` node.

    ``phases`` maps generator names (or formatted sub-expressions, which
    override) to real phases; a leaf ``g[m]`` gets ``phases[g] + m*pi``.
    """
    magnitudes = magnitudes or {}
    nodes = []

    def walk(e):
        if isinstance(e, Sum):
            walk(e.left)
            walk(e.right)
            lphi, _ = _node_phase(e.left, phases, magnitudes)
            rphi, _ = _node_phase(e.right, phases, magnitudes)
            nodes.append({
                "node": format_expression(e),
                "left_phase": lphi,
                "right_phase": rphi,
                "pass": lphi < rphi,
            })
        elif isinstance(e, Twist):
            walk(e.body)

    walk(expr)
    return {"expression": format_expression(expr), "nodes": nodes, "pass": all(n["pass"] for n in nodes)}


# --- 1-parameter families ----------------------------------------------------


@dataclass(frozen=True)
class FamilyModel:
    """Loop of complex structures near a nodal degeneration.

    ``path`` samples the base parameter u (closed: last sample repeats the
    first).  ``kind`` is ``"threefold"`` (period of the vanishing cycle
    proportional to u) or ``"k3"`` (base-changed surface family: the period is
    the continued square root of u**2).
    """

    path: tuple[complex, ...]
    kind: str = "threefold"
    baseline_phase: float = 0.0
    params: tuple[float, ...] = ()

    def __post_init__(self):
        if self.kind not in ("threefold", "k3"):
            raise ValueError("kind must be 'threefold' or 'k3'")
        path = tuple(complex(u) for u in self.path)
        if len(path) < 2:
            raise ValueError("path needs at least two samples")
        object.__setattr__(self, "path", path)
        params = self.params or tuple(np.linspace(0.0, 1.0, len(path)))
        if len(params) != len(path):
            raise ValueError("one parameter per sample")
        object.__setattr__(self, "params", tuple(float(t) for t in params))

    @classmethod
    def loop(cls, kind: str, radius: float = 1.0, samples: int = 256, winding: int = 1) -> "FamilyModel":
        t = np.linspace(0.0, 1.0, samples + 1)
        u = radius * np.exp(2j * np.pi * winding * t)
        u[-1] = u[0]
        return cls(tuple(u), kind, 0.0, tuple(t))

    @classmethod
    def constant(cls, kind: str = "threefold", value: complex = 1.0, samples: int = 16) -> "FamilyModel":
        t = np.linspace(0.0, 1.0, samples + 1)
        return cls(tuple([value] * (samples + 1)), kind, 0.0, tuple(t))


def _periods(model: FamilyModel) -> np.ndarray:
    u = np.array(model.path)
    if np.any(np.abs(u) == 0):
        raise ValueError("path passes through the singular fibre u = 0")
    if model.kind == "threefold":
        return u
    w = u * u
    z = np.empty_like(w)
    z[0] = u[0]
    for k in range(1, len(w)):
        r = np.sqrt(w[k])
        z[k] = r if abs(r - z[k - 1]) <= abs(r + z[k - 1]) else -r
    return z


def family_phases(model: FamilyModel):
    """Sample parameters, period moduli and the continuous lift of the period phase."""
    z = _periods(model)
    if np.any(np.abs(z) < 1e-300):
        raise ValueError("period vanishes on the path")
    steps = np.angle(z[1:] / z[:-1])
    if np.any(np.abs(steps) >= math.pi / 4):
        raise ValueError("path undersampled: phase changes by pi/4 or more in one step")
    lift = np.concatenate([[np.angle(z[0])], np.angle(z[0]) + np.cumsum(steps)])
    return np.array(model.params), np.abs(z), lift


def family_track(model: FamilyModel) -> tuple[int, list[tuple[float, int]]]:
    """Winding of the vanishing-cycle period and its wall crossings.

    A wall is a parameter where the lifted phase of the period passes the
    baseline phase modulo 2*pi; passing the baseline plus pi is not a wall.
    Returns ``(winding, [(parameter, direction), ...])``.
    """
    t, _, lift = family_phases(model)
    z = _periods(model)
    if abs(z[-1] - z[0]) > 1e-9 * max(1.0, abs(z[0])):
        raise ValueError("family path is not closed")
    winding = round((lift[-1] - lift[0]) / (2 * math.pi))
    g = lift - model.baseline_phase
    g = g - 2 * math.pi * np.round(g / (2 * math.pi))  # distance to nearest wall copy
    g[np.abs(g) < WALL_TOL] = 0.0  # rounding noise sits on the wall
    walls = []
    for k in range(len(lift) - 1):
        g0, g1 = g[k], g[k + 1]
        # skip the jump of the nearest-copy distance across baseline + pi
        if abs(g1 - g0) > math.pi:
            continue
        if (g0 < 0 <= g1) or (g0 >= 0 > g1):
            # a sample exactly on the wall is charged to the interval ending there
            frac = -g0 / (g1 - g0)
            tw = t[k] + (t[k + 1] - t[k]) * frac
            span = t[-1] - t[0]
            if tw >= t[-1]:
                tw -= span
            walls.append((float(tw), 1 if g1 > g0 else -1))
    return int(winding), sorted(walls)
