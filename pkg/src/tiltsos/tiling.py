"""Monotone surfaces (lozenge tilings) on finite regions and on the torus.

A *domain* owns a list of free square faces and knows how to turn a height
vector on those faces into a set of plaquettes.  Two kinds exist:

``RegionDomain``
    a finite window of faces surrounded by a ring of faces with fixed
    heights (the boundary condition).  Plaquettes counted are the horizontal
    ones over the window plus the walls on every edge touching the window.
``TorusDomain``
    the N x N tilted torus of :class:`~tiltsos.lattice.TorusGeometry`.

Heights are stored as tuples aligned with ``domain.faces`` (lexicographic
order), which makes surfaces hashable and gives the canonical ordering used
by the enumerator.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Sequence

from .lattice import (
    HORIZONTAL, VERTICAL_B, VERTICAL_C, Plaquette, Tri, TorusGeometry,
    plaquette_edges, project_111,
)

DEFAULT_CAP = 60


class InconsistentBoundaryError(ValueError):
    pass


class CapExceededError(ValueError):
    pass


# --------------------------------------------------------------------------
# domains

class Domain:
    faces: tuple
    index: dict
    # each edge: (ia, ca, ib, cb, orientation, wx, wy); value = h[i] + c, or c if i < 0
    edges: list

    def value(self, heights: Sequence[int], face) -> int:
        raise NotImplementedError

    def edge_values(self, heights):
        for ia, ca, ib, cb, o, wx, wy in self.edges:
            za = heights[ia] + ca if ia >= 0 else ca
            zb = heights[ib] + cb if ib >= 0 else cb
            yield za, zb, o, wx, wy

    def canon(self, p: Plaquette) -> Plaquette:
        return p

    def canon_point(self, pt):
        return pt

    def canon_tri(self, t: Tri) -> Tri:
        return t

    def plaquettes(self, heights: Sequence[int]) -> frozenset:
        out = [Plaquette(HORIZONTAL, f[0], f[1], z) for f, z in zip(self.faces, heights)]
        canon = self.canon
        for za, zb, o, wx, wy in self.edge_values(heights):
            lo, hi = (za, zb) if za < zb else (zb, za)
            for z in range(lo, hi):
                out.append(canon(Plaquette(o, wx, wy, z)))
        return frozenset(out)

    def area(self, heights) -> int:
        total = len(self.faces)
        for za, zb, *_ in self.edge_values(heights):
            total += abs(za - zb)
        return total

    def is_monotone(self, heights) -> bool:
        return all(za >= zb for za, zb, *_ in self.edge_values(heights))

    def neighbors(self, i: int):
        """(j, offset, sign) for free neighbours: sign=+1 if face j lies after face i."""
        return self._nbrs[i]

    def _build_neighbors(self):
        nb = [[] for _ in self.faces]
        for ia, ca, ib, cb, *_ in self.edges:
            if ia >= 0 and ib >= 0:
                nb[ia].append((ib, cb - ca, +1))
                nb[ib].append((ia, ca - cb, -1))
        self._nbrs = [tuple(x) for x in nb]

    def fixed_bounds(self, i: int):
        """Lower/upper bounds on face i coming directly from fixed ring faces."""
        return self._fixed[i]

    def _build_fixed(self):
        fx = [[None, None] for _ in self.faces]
        for ia, ca, ib, cb, *_ in self.edges:
            if ia >= 0 and ib < 0:        # h(a) >= cb
                lo = cb - ca
                fx[ia][0] = lo if fx[ia][0] is None else max(fx[ia][0], lo)
            elif ib >= 0 and ia < 0:      # h(b) <= ca
                hi = ca - cb
                fx[ib][1] = hi if fx[ib][1] is None else min(fx[ib][1], hi)
        self._fixed = [tuple(x) for x in fx]


class RegionDomain(Domain):
    """A finite window of free faces with fixed heights on a surrounding ring."""

    def __init__(self, window: Iterable, boundary: dict, name: str = "region"):
        self.name = name
        self.faces = tuple(sorted(set(map(tuple, window))))
        self.index = {f: i for i, f in enumerate(self.faces)}
        self.boundary = {tuple(k): int(v) for k, v in boundary.items()}
        overlap = set(self.boundary) & set(self.index)
        if overlap:
            raise ValueError(f"faces both free and fixed: {sorted(overlap)[:4]}")
        edges = []
        seen = set()
        for f in self.faces:
            for d in ((1, 0), (0, 1), (-1, 0), (0, -1)):
                g = (f[0] + d[0], f[1] + d[1])
                if g not in self.index and g not in self.boundary:
                    raise ValueError(f"face {g} next to the window has no boundary height")
                a, b = (f, g) if d[0] + d[1] > 0 else (g, f)
                if (a, b) in seen:
                    continue
                seen.add((a, b))
                ia = self.index.get(a, -1)
                ib = self.index.get(b, -1)
                ca = 0 if ia >= 0 else self.boundary[a]
                cb = 0 if ib >= 0 else self.boundary[b]
                if b[0] == a[0] + 1:
                    edges.append((ia, ca, ib, cb, VERTICAL_B, b[0], a[1]))
                else:
                    edges.append((ia, ca, ib, cb, VERTICAL_C, a[0], b[1]))
        edges.sort(key=lambda e: (e[4], e[5], e[6]))
        self.edges = edges
        self._build_neighbors()
        self._build_fixed()

    def value(self, heights, face):
        i = self.index.get(face)
        if i is not None:
            return heights[i]
        return self.boundary[face]

    def full_map(self, heights) -> dict:
        out = dict(self.boundary)
        out.update(zip(self.faces, heights))
        return out

    def __repr__(self):
        return f"RegionDomain({self.name}, {len(self.faces)} faces)"


class TorusDomain(Domain):
    def __init__(self, geometry: TorusGeometry):
        self.geometry = geometry
        N = geometry.N
        self.name = f"torus{N}"
        self.faces = tuple(geometry.faces)
        self.index = {f: i for i, f in enumerate(self.faces)}
        edges = []
        for f in self.faces:
            ia = self.index[f]
            for axis in (0, 1):
                g = (f[0] + 1, f[1]) if axis == 0 else (f[0], f[1] + 1)
                r1, r2, off = geometry.wrap_face(*g)
                ib = self.index[(r1, r2)]
                if axis == 0:
                    edges.append((ia, 0, ib, off, VERTICAL_B, g[0], f[1]))
                else:
                    edges.append((ia, 0, ib, off, VERTICAL_C, f[0], g[1]))
        self.edges = edges
        self._build_neighbors()
        self._build_fixed()
        self._lattice = geometry.period_lattice()

    def canon(self, p):
        return self.geometry.wrap_plaquette(p)

    def canon_point(self, pt):
        return self.geometry.wrap_point(*pt)

    def canon_tri(self, t):
        return self.geometry.wrap_tri(t, self._lattice)

    def value(self, heights, face):
        r1, r2, off = self.geometry.wrap_face(*face)
        return heights[self.index[(r1, r2)]] + off

    def __repr__(self):
        g = self.geometry
        return f"TorusDomain(N={g.N}, drops={g.drops})"


# --------------------------------------------------------------------------
# region constructors

def hexagon_region(a: int, b: int, c: int) -> RegionDomain:
    """a x b x c hexagon as plane partitions in an a x b box of height c."""
    window = [(i, j) for i in range(a) for j in range(b)]
    boundary = {}
    for i in range(-1, a + 1):
        for j in range(-1, b + 1):
            if (i, j) in set(window):
                continue
            if i < 0 or j < 0:
                boundary[(i, j)] = c
            elif i >= a or j >= b:
                boundary[(i, j)] = 0
    return RegionDomain(window, _trim_ring(window, boundary), name=f"hexagon{a}x{b}x{c}")


def box_region(window: Iterable, top: int, bottom: int = 0, name="box") -> RegionDomain:
    """Window faces with the ring held at ``top`` before it and ``bottom`` after it.

    A ring face is "before" the window when some window face lies weakly to
    its south-east (componentwise >=); otherwise it is "after".
    """
    window = sorted(set(map(tuple, window)))
    ws = set(window)
    boundary = {}
    for (x1, x2) in window:
        for d in ((1, 0), (0, 1), (-1, 0), (0, -1)):
            g = (x1 + d[0], x2 + d[1])
            if g in ws or g in boundary:
                continue
            before = any(w[0] >= g[0] and w[1] >= g[1] for w in window)
            boundary[g] = top if before else bottom
    return RegionDomain(window, boundary, name=name)


def slit_hexagon(a: int, b: int, c: int) -> RegionDomain:
    """Hexagon whose lowest column (the far corner) is completely filled.

    Pinning the far corner at the top forces every face to the top, so the
    region has exactly one tiling.
    """
    window = [(i, j) for i in range(a) for j in range(b) if (i, j) != (a - 1, b - 1)]
    base = hexagon_region(a, b, c)
    boundary = dict(base.boundary)
    boundary[(a - 1, b - 1)] = c
    return RegionDomain(window, _trim_ring(window, boundary), name=f"slit{a}x{b}x{c}")


def slotted_hexagon(a: int, b: int, c: int, depth: int | None = None) -> RegionDomain:
    """Hexagon with a slot of faces cut in from the far side along column b // 2.

    The slot faces (i, b // 2) for i >= a - depth are frozen at the heights of
    the diagonal profile round(c * (1 - (i + j + 1) / (a + b))), which is
    monotone, so tilings exist on both sides of the slot.
    """
    depth = max(1, a // 2) if depth is None else depth
    j0 = b // 2
    slot = {(i, j0) for i in range(a - depth, a)}
    window = [(i, j) for i in range(a) for j in range(b) if (i, j) not in slot]
    base = hexagon_region(a, b, c)
    boundary = dict(base.boundary)
    for (i, j) in slot:
        boundary[(i, j)] = int(round(c * (1 - (i + j + 1) / (a + b))))
    return RegionDomain(window, _trim_ring(window, boundary), name=f"slotted{a}x{b}x{c}")


def _trim_ring(window, boundary):
    ws = set(window)
    keep = set()
    for (x1, x2) in ws:
        for d in ((1, 0), (0, 1), (-1, 0), (0, -1)):
            g = (x1 + d[0], x2 + d[1])
            if g not in ws:
                keep.add(g)
    return {g: boundary[g] for g in keep}


# --------------------------------------------------------------------------
# surfaces

@dataclass(frozen=True)
class Surface:
    """An integer height function on the free faces of a domain."""

    domain: Domain
    heights: tuple

    @cached_property
    def plaquettes(self) -> frozenset:
        return self.domain.plaquettes(self.heights)

    @cached_property
    def area(self) -> int:
        return self.domain.area(self.heights)

    @property
    def is_monotone(self) -> bool:
        return self.domain.is_monotone(self.heights)

    def height(self, face) -> int:
        return self.domain.value(self.heights, face)

    def shifted(self, s: int) -> "Surface":
        return type(self)(self.domain, tuple(z + s for z in self.heights))

    def with_heights(self, heights) -> "Surface":
        return type(self)(self.domain, tuple(heights))

    def counts(self) -> tuple[int, int, int]:
        n = [0, 0, 0]
        for p in self.plaquettes:
            n[p.orientation] += 1
        return tuple(n)

    def triangles(self) -> frozenset:
        out = set()
        canon = self.domain.canon_tri
        for p in self.plaquettes:
            for t in project_111(p):
                out.add(canon(t))
        return frozenset(out)

    def __le__(self, other):
        return all(a <= b for a, b in zip(self.heights, other.heights))

    def __ge__(self, other):
        return all(a >= b for a, b in zip(self.heights, other.heights))

    def __lt__(self, other):  # lexicographic, used for canonical ordering only
        return self.heights < other.heights


@dataclass(frozen=True)
class LozengeTiling(Surface):
    """A monotone surface.  Validated on construction."""

    def __post_init__(self):
        if not self.domain.is_monotone(self.heights):
            raise ValueError("heights are not monotone")

    def join(self, other: "LozengeTiling") -> "LozengeTiling":
        return LozengeTiling(self.domain, tuple(map(max, self.heights, other.heights)))

    def meet(self, other: "LozengeTiling") -> "LozengeTiling":
        return LozengeTiling(self.domain, tuple(map(min, self.heights, other.heights)))


def surface_from_plaquettes(domain: Domain, plaqs) -> Surface:
    """Inverse of ``domain.plaquettes``; raises if the set is not a surface."""
    hz = {}
    for p in plaqs:
        if p.orientation == HORIZONTAL:
            if (p.x, p.y) in hz:
                raise ValueError("two horizontal plaquettes over one face")
            hz[(p.x, p.y)] = p.z
    try:
        heights = tuple(hz[f] for f in domain.faces)
    except KeyError as exc:
        raise ValueError(f"face {exc} has no horizontal plaquette") from None
    s = Surface(domain, heights)
    if s.plaquettes != frozenset(plaqs):
        raise ValueError("plaquette set is not the surface of a height function")
    return s


def lozenge_count(domain: Domain) -> int:
    if isinstance(domain, TorusDomain):
        return sum(domain.geometry.lozenge_counts)
    lo, _ = monotone_bounds(domain)
    return domain.area(lo)


# --------------------------------------------------------------------------
# extremal tilings and enumeration

def monotone_bounds(domain: RegionDomain):
    """Pointwise (min, max) heights of monotone surfaces, by monotone closure.

    Upper bounds flow forward (a face is at most its predecessors), lower
    bounds flow backward.  Faces are processed in order of x1 + x2 which is
    a topological order for both relations.
    """
    if isinstance(domain, TorusDomain):
        raise ValueError("extremal tilings are defined for finite regions only")
    n = len(domain.faces)
    order = sorted(range(n), key=lambda i: (sum(domain.faces[i]), domain.faces[i]))
    hi = [None] * n
    for i in order:
        cands = [] if domain.fixed_bounds(i)[1] is None else [domain.fixed_bounds(i)[1]]
        for j, off, sign in domain.neighbors(i):
            if sign < 0 and hi[j] is not None:
                cands.append(hi[j] + off)
        hi[i] = min(cands) if cands else None
    lo = [None] * n
    for i in reversed(order):
        cands = [] if domain.fixed_bounds(i)[0] is None else [domain.fixed_bounds(i)[0]]
        for j, off, sign in domain.neighbors(i):
            if sign > 0 and lo[j] is not None:
                cands.append(lo[j] + off)
        lo[i] = max(cands) if cands else None
    if any(v is None for v in hi) or any(v is None for v in lo):
        raise InconsistentBoundaryError("region is not bounded by its ring")
    if any(a > b for a, b in zip(lo, hi)):
        raise InconsistentBoundaryError("boundary heights admit no monotone surface")
    lo, hi = tuple(lo), tuple(hi)
    if not (domain.is_monotone(lo) and domain.is_monotone(hi)):
        raise InconsistentBoundaryError("ring is itself not monotone")
    return lo, hi


def extremal_tilings(domain: RegionDomain):
    """(psi_max, psi_min) for a region."""
    lo, hi = monotone_bounds(domain)
    return LozengeTiling(domain, hi), LozengeTiling(domain, lo)


def enumerate_tilings(domain: Domain, cap: int = DEFAULT_CAP, strict: bool = True):
    """Every monotone surface of the domain, in lexicographic order of heights.

    On the torus the heights are rooted at face (0,0) = 0.  Raises
    ``CapExceededError`` if the lozenge count is above ``cap``; an
    inconsistent region raises unless ``strict`` is False (then ``[]``).
    """
    if isinstance(domain, TorusDomain):
        n_loz = sum(domain.geometry.lozenge_counts)
        if n_loz > cap:
            raise CapExceededError(f"{n_loz} lozenges > cap {cap}")
        return [LozengeTiling(domain, h) for h in _enumerate_torus(domain)]
    try:
        lo, hi = monotone_bounds(domain)
    except InconsistentBoundaryError:
        if strict:
            raise
        return []
    n_loz = domain.area(lo)
    if n_loz > cap:
        raise CapExceededError(f"{n_loz} lozenges > cap {cap}")
    n = len(domain.faces)
    preds = []
    for i in range(n):
        preds.append([(j, off) for j, off, sign in domain.neighbors(i) if sign < 0 and j < i])
    out = []
    cur = [0] * n

    def rec(i):
        if i == n:
            out.append(tuple(cur))
            return
        top = hi[i]
        for j, off in preds[i]:
            top = min(top, cur[j] + off)
        for v in range(lo[i], top + 1):
            cur[i] = v
            rec(i + 1)

    rec(0)
    return [LozengeTiling(domain, h) for h in out]


def _enumerate_torus(domain: TorusDomain):
    g = domain.geometry
    n = len(domain.faces)
    floor_ = -(g.drops[0] + g.drops[1])
    checks = [[] for _ in range(n)]   # edges whose later endpoint is i
    for ia, ca, ib, cb, *_ in domain.edges:
        checks[max(ia, ib)].append((ia, ca, ib, cb))
    cur = [0] * n
    out = []

    def ok(i):
        for ia, ca, ib, cb in checks[i]:
            if cur[ia] + ca < cur[ib] + cb:
                return False
        return True

    def rec(i):
        if i == n:
            out.append(tuple(cur))
            return
        for v in range(floor_, 1):
            cur[i] = v
            if ok(i):
                rec(i + 1)

    cur[0] = 0
    if ok(0):
        rec(1)
    return out


def torus_shifts_meeting(tiling: Surface, surface: Surface, slack: int = 1):
    """All vertical shifts of ``tiling`` sharing at least one plaquette with ``surface``."""
    lo = min(surface.heights) - max(tiling.heights) - sum(tiling.domain.geometry.drops) - slack
    hi = max(surface.heights) - min(tiling.heights) + sum(tiling.domain.geometry.drops) + slack
    out = []
    sp = surface.plaquettes
    for s in range(lo, hi + 1):
        t = tiling.shifted(s)
        if not sp.isdisjoint(t.plaquettes):
            out.append(t)
    return out


# --------------------------------------------------------------------------
# flips

def flip_face(t: LozengeTiling, face, delta: int):
    """Raise (delta=+1) or lower (-1) one column; returns None if not monotone."""
    d = t.domain
    i = d.index[face]
    z = t.heights[i] + delta
    for j, off, sign in d.neighbors(i):
        other = t.heights[j] + off
        if (sign > 0 and z < other) or (sign < 0 and z > other):
            return None
    lo, hi = d.fixed_bounds(i)
    if (lo is not None and z < lo) or (hi is not None and z > hi):
        return None
    h = list(t.heights)
    h[i] = z
    return LozengeTiling(d, tuple(h))


def flip(t: LozengeTiling, vertex):
    """Rotate the hexagon around a triangular-lattice vertex.

    Returns ``(tiling, True)`` on success and ``(t, False)`` when the three
    lozenges at ``vertex`` do not form a rotatable hexagon.
    """
    p, q = vertex
    plaqs = t.plaquettes
    canon = t.domain.canon
    for z in _lift_candidates(t, vertex):
        x, y = p + z, q + z
        top = (canon(Plaquette(HORIZONTAL, x - 1, y - 1, z)),
               canon(Plaquette(VERTICAL_B, x, y - 1, z - 1)),
               canon(Plaquette(VERTICAL_C, x - 1, y, z - 1)))
        if all(pl in plaqs for pl in top):
            face = _free_face(t.domain, x - 1, y - 1)
            if face is not None:
                new = flip_face(t, face, -1)
                if new is not None:
                    return new, True
        bottom = (canon(Plaquette(HORIZONTAL, x, y, z)),
                  canon(Plaquette(VERTICAL_B, x, y, z)),
                  canon(Plaquette(VERTICAL_C, x, y, z)))
        if all(pl in plaqs for pl in bottom):
            face = _free_face(t.domain, x, y)
            if face is not None:
                new = flip_face(t, face, +1)
                if new is not None:
                    return new, True
    return t, False


def _lift_candidates(t, vertex):
    p, q = vertex
    zs = set()
    for pl in t.plaquettes:
        for dz in range(-1, 2):
            zs.add(pl.z + dz)
    return sorted(z for z in zs)


def _free_face(domain, x, y):
    if isinstance(domain, TorusDomain):
        r1, r2, _ = domain.geometry.wrap_face(x, y)
        return (r1, r2)
    return (x, y) if (x, y) in domain.index else None


def flip_neighbors(t: LozengeTiling):
    out = []
    for f in t.domain.faces:
        for dlt in (+1, -1):
            s = flip_face(t, f, dlt)
            if s is not None:
                out.append(s)
    return out


# --------------------------------------------------------------------------
# level lines

_LEFT = {(1, 0): (0, 1), (0, 1): (-1, 0), (-1, 0): (0, -1), (0, -1): (1, 0)}

NE, SE, SW, NW = (-1, 0), (0, 1), (1, 0), (0, -1)
STEP_NAMES = {NE: "NE", SE: "SE", SW: "SW", NW: "NW"}


def level_edges(values: dict, k: int, active=None):
    """Directed dual edges of {x : h(x) >= k}, north (>= k) kept on the left.

    ``values`` maps faces to heights.  Only pairs of faces both present in
    ``values`` are considered, and if ``active`` is given at least one of the
    two must belong to it.
    """
    edges = []
    for (x1, x2), hu in values.items():
        for axis in (0, 1):
            v = (x1 + 1, x2) if axis == 0 else (x1, x2 + 1)
            hv = values.get(v)
            if hv is None:
                continue
            if active is not None and (x1, x2) not in active and v not in active:
                continue
            if axis == 0:
                a, b = (x1 + 1, x2), (x1 + 1, x2 + 1)
                if hu >= k > hv:
                    edges.append((a, b))
                elif hv >= k > hu:
                    edges.append((b, a))
            else:
                a, b = (x1 + 1, x2 + 1), (x1, x2 + 1)
                if hu >= k > hv:
                    edges.append((a, b))
                elif hv >= k > hu:
                    edges.append((b, a))
    edges.sort()
    return edges


def split_level_set(edges):
    """Pair directed edges into self-avoiding lines and loops.

    At a corner where the pairing is ambiguous (a saddle, two lines touching
    diagonally) the incoming edge continues with a left turn, which keeps
    diagonally adjacent north faces apart.  Returns ``(lines, loops)``, each
    a list of corner sequences.
    """
    out_at: dict = {}
    in_at: dict = {}
    for e in edges:
        out_at.setdefault(e[0], []).append(e)
        in_at.setdefault(e[1], []).append(e)
    nxt = {}
    starts = []
    for c in sorted(set(out_at) | set(in_at)):
        outs = list(out_at.get(c, []))
        ins = sorted(in_at.get(c, []))

        def rank(e_in, e_out):
            d_in = (e_in[1][0] - e_in[0][0], e_in[1][1] - e_in[0][1])
            d_out = (e_out[1][0] - e_out[0][0], e_out[1][1] - e_out[0][1])
            if d_out == _LEFT[d_in]:
                return 0
            if d_out == d_in:
                return 1
            return 2

        pairs = sorted(((rank(i, o), i, o) for i in ins for o in outs))
        used_in, used_out = set(), set()
        for _, i, o in pairs:
            if i in used_in or o in used_out:
                continue
            nxt[i] = o
            used_in.add(i)
            used_out.add(o)
        starts.extend(o for o in outs if o not in used_out)
    used = set()
    lines = []
    for e in sorted(starts):
        path = [e[0], e[1]]
        used.add(e)
        while e in nxt:
            e = nxt[e]
            used.add(e)
            path.append(e[1])
        lines.append(path)
    loops = []
    for e in edges:
        if e in used:
            continue
        first = e
        path = [e[0], e[1]]
        used.add(e)
        e = nxt[e]
        while e != first:
            used.add(e)
            path.append(e[1])
            e = nxt[e]
        loops.append(path)
    return lines, loops


def level_lines(values: dict, k: int, active=None):
    """Lines and loops of the level-k set of a height map on faces."""
    return split_level_set(level_edges(values, k, active))


def path_steps(path):
    return [(b[0] - a[0], b[1] - a[1]) for a, b in zip(path, path[1:])]


def step_faces(a, b):
    """(left face, right face) of the unit step a -> b."""
    d = (b[0] - a[0], b[1] - a[1])
    c1, c2 = a
    if d == SE:
        return (c1 - 1, c2), (c1, c2)
    if d == NW:
        return (c1, c2 - 1), (c1 - 1, c2 - 1)
    if d == NE:
        return (c1 - 1, c2 - 1), (c1 - 1, c2)
    if d == SW:
        return (c1, c2), (c1, c2 - 1)
    raise ValueError(f"not a unit step: {a} -> {b}")


def north_region(paths, faces: Iterable, seeds: dict | None = None):
    """Indicator of the north side of a family of level paths, by flood fill.

    Faces touching a path get their side from it; others inherit from
    neighbours reachable without crossing a path.  ``seeds`` can fix
    additional faces (e.g. ring faces).  Unreached faces are absent.
    """
    faces = set(faces)
    barrier = set()
    val = dict(seeds or {})
    for path in paths:
        for a, b in zip(path, path[1:]):
            lf, rf = step_faces(a, b)
            barrier.add(frozenset((lf, rf)))
            if lf in faces:
                val[lf] = 1
            if rf in faces:
                val[rf] = 0
    stack = [f for f in val if f in faces]
    while stack:
        f = stack.pop()
        for d in ((1, 0), (0, 1), (-1, 0), (0, -1)):
            g = (f[0] + d[0], f[1] + d[1])
            if g in faces and g not in val and frozenset((f, g)) not in barrier:
                val[g] = val[f]
                stack.append(g)
    return {f: v for f, v in val.items() if f in faces}
