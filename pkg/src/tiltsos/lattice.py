"""Lattice geometry.

Three lattices live here: the square faces of Z^2 (where SOS heights sit),
the triangular lattice obtained by looking at Z^3 along (1,1,1), and its
hexagonal dual (black = up triangles, white = down triangles).

Conventions
-----------
* A face of Z^2 is ``(x1, x2)`` and covers ``[x1, x1+1] x [x2, x2+1]``.
* A plaquette is ``(orientation, x, y, z)``:
    - HORIZONTAL: ``[x,x+1] x [y,y+1] x {z}``
    - VERTICAL_B: ``{x} x [y,y+1] x [z,z+1]``  (wall crossed by an e1 step)
    - VERTICAL_C: ``[x,x+1] x {y} x [z,z+1]``  (wall crossed by an e2 step)
* Triangular lattice vertex of the point ``(x, y, z)`` is ``(x - z, y - z)``.
  Triangles are ``(kind, p, q)`` with kind UP = {(p,q),(p+1,q),(p+1,q+1)}
  and DOWN = {(p,q),(p,q+1),(p+1,q+1)}.
* Hexagonal coordinates of a triangle are ``(q, -p)``.  With this choice a
  white vertex ``w`` is matched to ``w`` (type a, horizontal lozenge),
  ``w + (1,0)`` (type b) or ``w + (0,1)`` (type c).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, NamedTuple

HORIZONTAL = 0
VERTICAL_B = 1
VERTICAL_C = 2
ORIENTATION_NAMES = ("horizontal", "vertical-b", "vertical-c")
TYPE_NAMES = ("a", "b", "c")

UP = 0     # black
DOWN = 1   # white


class Plaquette(NamedTuple):
    orientation: int
    x: int
    y: int
    z: int


class Tri(NamedTuple):
    kind: int
    p: int
    q: int


class HexEdge(NamedTuple):
    """A dimer: black vertex, white vertex (hexagonal coordinates) and type 0/1/2."""
    black: tuple
    white: tuple
    kind: int


def _as_fraction(t) -> Fraction:
    if isinstance(t, Fraction):
        return t
    if isinstance(t, str):
        return Fraction(t)
    return Fraction(t).limit_denominator(10**9)


class PeriodLattice:
    """Sub-lattice of Z^2 in Hermite normal form, used to reduce 2D points."""

    def __init__(self, v1: tuple[int, int], v2: tuple[int, int]):
        a, b = v1
        c, d = v2
        g, s, t = _xgcd(a, c)
        if g == 0:
            raise ValueError("degenerate period lattice")
        u1 = (s * a + t * c, s * b + t * d)
        w = (c // g * a - a // g * c, c // g * b - a // g * d)
        D = abs(w[1])
        if D == 0:
            raise ValueError("degenerate period lattice")
        A = abs(u1[0])
        B = u1[1] if u1[0] > 0 else -u1[1]
        self.A, self.B, self.D = A, B % D, D

    def reduce(self, p: int, q: int) -> tuple[int, int]:
        k, p = divmod(p, self.A)
        q = (q - k * self.B) % self.D
        return p, q

    @property
    def index(self) -> int:
        return self.A * self.D


def _xgcd(a: int, b: int) -> tuple[int, int, int]:
    x0, x1, y0, y1 = 1, 0, 0, 1
    while b:
        qt, a, b = a // b, b, a % b
        x0, x1 = x1, x0 - qt * x1
        y0, y1 = y1, y0 - qt * y1
    if a < 0:
        a, x0, y0 = -a, -x0, -y0
    return a, x0, y0


@dataclass(frozen=True)
class TorusGeometry:
    """N x N torus of square faces with tilted periodic heights.

    ``h(x1 + N, x2) = h(x1, x2) - m1`` and ``h(x1, x2 + N) = h(x1, x2) - m2``
    with ``(m1, m2) = (floor(theta1 N), floor(theta2 N))`` stored as ``drops``.
    """

    N: int
    slope: tuple = (0, 0)
    drops: tuple = field(init=False)

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 2:
            raise ValueError(f"torus side must be an integer >= 2, got {self.N}")
        th = tuple(_as_fraction(t) for t in self.slope)
        if len(th) != 2 or min(th) < 0:
            raise ValueError("slope must be a pair of nonnegative numbers")
        m = tuple(math.floor(t * self.N) for t in th)
        object.__setattr__(self, "drops", m)

    # -- derived data ---------------------------------------------------
    @property
    def faces(self) -> list[tuple[int, int]]:
        return [(i, j) for i in range(self.N) for j in range(self.N)]

    @property
    def lozenge_counts(self) -> tuple[int, int, int]:
        """(horizontal, b, c) plaquette counts of any monotone surface."""
        N, (m1, m2) = self.N, self.drops
        return (N * N, N * m1, N * m2)

    @property
    def open_regime(self) -> bool:
        """Exactly one slope coordinate vanishes (flagged, not forbidden)."""
        return (self.drops[0] == 0) != (self.drops[1] == 0)

    @property
    def fits_hex_torus(self) -> bool:
        return self.drops[0] + self.drops[1] <= self.N

    # -- the one place that does modular arithmetic ----------------------
    def wrap_face(self, x1: int, x2: int) -> tuple[int, int, int]:
        """Return (r1, r2, offset) with h(x1, x2) = h(r1, r2) + offset."""
        q1, r1 = divmod(x1, self.N)
        q2, r2 = divmod(x2, self.N)
        return r1, r2, -(self.drops[0] * q1 + self.drops[1] * q2)

    def wrap_point(self, x: int, y: int, z: int) -> tuple[int, int, int]:
        q1, r1 = divmod(x, self.N)
        q2, r2 = divmod(y, self.N)
        return r1, r2, z + self.drops[0] * q1 + self.drops[1] * q2

    def wrap_plaquette(self, p: Plaquette) -> Plaquette:
        x, y, z = self.wrap_point(p.x, p.y, p.z)
        return Plaquette(p.orientation, x, y, z)

    def wrap_edge(self, e):
        (x, y, z), axis = e
        return self.wrap_point(x, y, z), axis

    def period_lattice(self) -> PeriodLattice:
        N, (m1, m2) = self.N, self.drops
        return PeriodLattice((N + m1, m1), (m2, N + m2))

    def wrap_tri(self, t: Tri, lattice: PeriodLattice | None = None) -> Tri:
        lat = lattice or self.period_lattice()
        p, q = lat.reduce(t.p, t.q)
        return Tri(t.kind, p, q)


# --------------------------------------------------------------------------
# plaquette geometry

def plaquette_corners(p: Plaquette) -> tuple:
    o, x, y, z = p
    if o == HORIZONTAL:
        return ((x, y, z), (x + 1, y, z), (x, y + 1, z), (x + 1, y + 1, z))
    if o == VERTICAL_B:
        return ((x, y, z), (x, y + 1, z), (x, y, z + 1), (x, y + 1, z + 1))
    return ((x, y, z), (x + 1, y, z), (x, y, z + 1), (x + 1, y, z + 1))


def plaquette_edges(p: Plaquette) -> tuple:
    """The four unit edges of a plaquette as (base point, axis)."""
    o, x, y, z = p
    if o == HORIZONTAL:
        return (((x, y, z), 0), ((x, y + 1, z), 0), ((x, y, z), 1), ((x + 1, y, z), 1))
    if o == VERTICAL_B:
        return (((x, y, z), 1), ((x, y, z + 1), 1), ((x, y, z), 2), ((x, y + 1, z), 2))
    return (((x, y, z), 0), ((x, y, z + 1), 0), ((x, y, z), 2), ((x + 1, y, z), 2))


def project_111(p: Plaquette) -> tuple[Tri, Tri]:
    """Lozenge (black up-triangle, white down-triangle) under the (1,1,1) projection."""
    o, x, y, z = p
    a, b = x - z, y - z
    if o == HORIZONTAL:
        return Tri(UP, a, b), Tri(DOWN, a, b)
    if o == VERTICAL_B:
        return Tri(UP, a - 1, b), Tri(DOWN, a - 1, b - 1)
    return Tri(UP, a - 1, b - 1), Tri(DOWN, a, b - 1)


def lozenge_from_tris(black: Tri, white: Tri) -> int:
    """Type (0=a, 1=b, 2=c) of the lozenge made of two adjacent triangles."""
    d = (black.p - white.p, black.q - white.q)
    if d == (0, 0):
        return 0
    if d == (0, 1):
        return 1
    if d == (-1, 0):
        return 2
    raise ValueError(f"triangles {black} and {white} are not adjacent")


def tri_vertices(t: Tri) -> tuple:
    k, p, q = t
    if k == UP:
        return ((p, q), (p + 1, q), (p + 1, q + 1))
    return ((p, q), (p, q + 1), (p + 1, q + 1))


def tri_neighbors(t: Tri) -> tuple[Tri, Tri, Tri]:
    """Edge-adjacent triangles, ordered by the lozenge type they would form."""
    k, p, q = t
    if k == UP:
        return Tri(DOWN, p, q), Tri(DOWN, p, q - 1), Tri(DOWN, p + 1, q)
    return Tri(UP, p, q), Tri(UP, p, q + 1), Tri(UP, p - 1, q)


def hex_coords(t: Tri) -> tuple[int, int]:
    return (t.q, -t.p)


def tri_from_hex(kind: int, n: tuple[int, int]) -> Tri:
    return Tri(kind, -n[1], n[0])


def hex_edge(black: Tri, white: Tri) -> HexEdge:
    return HexEdge(hex_coords(black), hex_coords(white), lozenge_from_tris(black, white))


def lift_plaquette(kind: int, black: Tri, z: int) -> Plaquette:
    """Inverse of project_111 for a lozenge whose plaquette sits at level z."""
    if kind == HORIZONTAL:
        a, b = black.p, black.q
    elif kind == VERTICAL_B:
        a, b = black.p + 1, black.q
    else:
        a, b = black.p + 1, black.q + 1
    return Plaquette(kind, a + z, b + z, z)


# --------------------------------------------------------------------------
# height conventions

class NotMonotoneError(ValueError):
    pass


def heights_from_surface(plaquettes: Iterable[Plaquette], convention: str = "P001",
                         root=None) -> dict:
    """Read a height map off a plaquette set.

    P001 gives one height per square face (the level of its horizontal
    plaquette).  P111 gives one height per triangular-lattice vertex: the z
    coordinate of the unique surface point above it; overhangs make this
    ambiguous and raise ``NotMonotoneError``.  ``root`` (a face or vertex)
    shifts the map so that it vanishes there.
    """
    out: dict = {}
    if convention == "P001":
        for p in plaquettes:
            if p.orientation != HORIZONTAL:
                continue
            key = (p.x, p.y)
            if key in out:
                raise ValueError(f"two horizontal plaquettes above face {key}")
            out[key] = p.z
    elif convention == "P111":
        for p in plaquettes:
            for (x, y, z) in plaquette_corners(p):
                v = (x - z, y - z)
                old = out.get(v)
                if old is None:
                    out[v] = z
                elif old != z:
                    raise NotMonotoneError(f"vertex {v} is covered at heights {old} and {z}")
    else:
        raise ValueError(f"unknown convention {convention!r}")
    if root is not None:
        r = out[root]
        out = {k: v - r for k, v in out.items()}
    return out


def surface_from_p111(heights: dict, triangles: Iterable[Tri]) -> set:
    """Rebuild plaquettes from vertex heights, one per up-triangle of the region."""
    out = set()
    for t in triangles:
        if t.kind != UP:
            continue
        v0, v1, v2 = tri_vertices(t)
        z0, z1, z2 = heights[v0], heights[v1], heights[v2]
        if z0 == z1 == z2:
            out.add(lift_plaquette(HORIZONTAL, t, z0))
        elif z0 == z1 + 1 and z1 == z2:
            out.add(lift_plaquette(VERTICAL_B, t, z1))
        elif z0 == z1 and z1 == z2 + 1:
            out.add(lift_plaquette(VERTICAL_C, t, z2))
        else:
            raise NotMonotoneError(f"vertex heights {z0, z1, z2} do not fit a lozenge at {t}")
    return out


def tri_components(tris: Iterable[Tri], wrap=None) -> list[frozenset]:
    """Connected components of a triangle set under edge adjacency."""
    pool = set(tris)
    comps = []
    while pool:
        seed = pool.pop()
        comp = {seed}
        stack = [seed]
        while stack:
            t = stack.pop()
            for n in tri_neighbors(t):
                if wrap is not None:
                    n = wrap(n)
                if n in pool:
                    pool.remove(n)
                    comp.add(n)
                    stack.append(n)
        comps.append(frozenset(comp))
    comps.sort(key=lambda c: min(c))
    return comps
