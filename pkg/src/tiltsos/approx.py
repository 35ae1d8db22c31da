"""Deterministic level-line approximation of an SOS surface by a tiling.

Level lines live on the corners of the face lattice.  A tiling level line
uses only NE (-e1) and SE (+e2) steps; an SOS level line may also step SW
(+e1) and NW (-e2).  In picture coordinates X = c2 - c1 increases by one
along every NE/SE step, which is how excursions are straightened out.

Pipeline for one input (region D with holes, reference tiling phi, SOS h):

1. clip h between the extremal tilings of S = D minus holes;
2. split every level set into lines and loops (left turn at saddles) and
   erase the loops, re-clipping until no loop remains;
3. pick which hole-enclosing loops are sacrificed (innermost first, erase
   when their nested length beats eps^(1/3) times their area): their
   interiors and supports join S';
4. run the greedy shortcut on every level line, highest level first;
5. rebuild heights from the north sides of the output lines and clamp them
   into the extremal tilings of S'.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .lattice import HORIZONTAL, VERTICAL_B
from .tiling import (
    NE, NW, SE, SW, LozengeTiling, RegionDomain, Surface, box_region, extremal_tilings,
    hexagon_region, level_lines, monotone_bounds, path_steps, step_faces,
)

EXCESS_AREA = "excess-area"
GOOD_OVERLAP = "good-overlap"
EXCEPTIONAL = "exceptional"

_DIRS4 = ((1, 0), (0, 1), (-1, 0), (0, -1))


class MalformedInputError(ValueError):
    pass


# --------------------------------------------------------------------------
# input

@dataclass
class AlgorithmInput:
    """``domain`` is D (simply connected window plus fixed ring); ``holes`` are
    faces of D outside S, where h is pinned to phi."""

    domain: RegionDomain
    phi: dict
    h: dict
    holes: frozenset = frozenset()
    epsilon: float = 0.1

    @property
    def S(self):
        return [f for f in self.domain.faces if f not in self.holes]

    @property
    def s(self) -> int:
        return len(self.domain.faces) - len(self.holes)

    def subdomain(self, extra=()) -> RegionDomain:
        """S plus ``extra`` faces as free window; remaining holes join the ring."""
        free = set(self.S) | set(extra)
        ring = {f: z for f, z in self.domain.boundary.items()}
        for f in self.holes:
            if f not in free:
                ring[f] = self.phi[f]
        ring = {f: z for f, z in ring.items()
                if any((f[0] + d[0], f[1] + d[1]) in free for d in _DIRS4)}
        return RegionDomain(free, ring, name="S'")

    def surfaces(self, dom: RegionDomain | None = None):
        dom = dom or self.subdomain()
        h = Surface(dom, tuple(self.h[f] for f in dom.faces))
        phi = Surface(dom, tuple(self.phi[f] for f in dom.faces))
        return h, phi

    def excess(self) -> int:
        h, phi = self.surfaces()
        return h.area - phi.area

    def validate(self):
        d = self.domain
        if set(self.phi) != set(d.faces) or set(self.h) != set(d.faces):
            raise MalformedInputError("h and phi must be given on every face of D")
        if not self.holes <= set(d.faces):
            raise MalformedInputError("holes must be faces of D")
        if not d.is_monotone([self.phi[f] for f in d.faces]):
            raise MalformedInputError("phi is not a tiling of D")
        bad = [f for f in self.holes if self.h[f] != self.phi[f]]
        if bad:
            raise MalformedInputError(f"h disagrees with phi on the boundary at {bad[:3]}")
        if self.s == 0:
            raise MalformedInputError("S is empty")
        h, phi = self.surfaces()
        if h.plaquettes & phi.plaquettes:
            raise MalformedInputError("h meets phi")


# --------------------------------------------------------------------------
# paths

def picture_xy(c):
    """Corner -> (X, 2Y) with NE = (+1, +1), SE = (+1, -1)."""
    return c[1] - c[0], -(c[0] + c[1])


def corner_from_picture(X, Y2):
    return (-Y2 - X) // 2, (X - Y2) // 2


def reachable(a, p) -> bool:
    """p can be reached from a with NE/SE steps (closed quarter plane)."""
    return p[0] - a[0] <= 0 and p[1] - a[1] >= 0


def segment(a, b):
    """NE/SE lattice path from a to b nearest the straight segment (ties go down)."""
    Xa, Ya = picture_xy(a)
    Xb, Yb = picture_xy(b)
    n = Xb - Xa
    if n < 0 or abs(Yb - Ya) > n:
        raise ValueError(f"{b} not reachable from {a}")
    out = [a]
    for j in range(1, n + 1):
        L = Ya + Fraction((Yb - Ya) * j, n)
        par = (Ya + j) % 2
        base = math.floor(L)
        cands = [y for y in range(base - 2, base + 3) if y % 2 == par]
        y = min(cands, key=lambda v: (abs(v - L), v))
        out.append(corner_from_picture(Xa + j, y))
    assert out[-1] == tuple(b)
    return out


@dataclass
class Excursion:
    a: tuple
    b: tuple
    t_start: int
    t_end: int
    closed: bool = True     # False when the line ran out before re-entering


def greedy_level_line(path):
    """Copy NE/SE steps; at a SW/NW step from a, jump to the first later point
    of the path in the quarter plane reachable from a.  Returns (output, excursions)."""
    path = [tuple(p) for p in path]
    out = [path[0]]
    exc = []
    n = len(path) - 1
    t = 0
    while t < n:
        d = (path[t + 1][0] - path[t][0], path[t + 1][1] - path[t][1])
        if d in (NE, SE):
            out.append(path[t + 1])
            t += 1
            continue
        a = path[t]
        t2 = next((u for u in range(t + 1, n + 1) if reachable(a, path[u])), None)
        closed = t2 is not None
        if not closed:
            t2 = n
        b = path[t2]
        if reachable(a, b):
            out.extend(segment(a, b)[1:])
        else:
            out.append(b)   # malformed input; recorded as an open excursion
        exc.append(Excursion(a, b, t, t2, closed))
        t = t2
    return out, exc


def defects(path) -> int:
    return sum(1 for d in path_steps(path) if d in (SW, NW))


def is_tiling_path(path) -> bool:
    return all(d in (NE, SE) for d in path_steps(path))


# --------------------------------------------------------------------------
# level sets, loops, north sides

def _clip(values: dict, lo: dict, hi: dict) -> dict:
    return {f: max(lo[f], min(hi[f], z)) if f in lo else z for f, z in values.items()}


def loop_interior(loop, faces) -> set:
    """Faces of ``faces`` enclosed by the closed corner path (even-odd rule)."""
    xs = [c[0] for c in loop]
    ys = [c[1] for c in loop]
    x0, x1, y0, y1 = min(xs), max(xs), min(ys), max(ys)
    horiz = {}   # x1 cell index -> corner x2 of unit edges along e1
    for a, b in zip(loop, loop[1:]):
        if a[1] == b[1]:
            horiz.setdefault(min(a[0], b[0]), []).append(a[1])
    out = set()
    for f in faces:
        if not (x0 <= f[0] < x1 and y0 <= f[1] < y1):
            continue
        crossings = sum(1 for c2 in horiz.get(f[0], ()) if c2 > f[1])
        if crossings % 2:
            out.add(f)
    return out


def loop_support(loop) -> set:
    out = set()
    for a, b in zip(loop, loop[1:]):
        out.update(step_faces(a, b))
    return out


@dataclass
class LoopRecord:
    level: int
    length: int
    area: int
    interior: frozenset
    support: frozenset
    constraining: bool
    H: int = 0
    erased: bool = False


def north_indicator(paths, faces, seeds: dict):
    """1 on the north (left) side of the paths, flood-filled from ``seeds``.

    Ring seeds win over path sides; faces claimed by both sides of some
    path are reported in the second return value.
    """
    faces = set(faces)
    val = dict(seeds)
    barrier = set()
    clash = set()
    for p in paths:
        for a, b in zip(p, p[1:]):
            lf, rf = step_faces(a, b)
            barrier.add(frozenset((lf, rf)))
            for f, v in ((lf, 1), (rf, 0)):
                if f in faces and f not in seeds:
                    if val.get(f, v) != v:
                        clash.add(f)
                    val[f] = v
    stack = list(val)
    while stack:
        f = stack.pop()
        for d in _DIRS4:
            g = (f[0] + d[0], f[1] + d[1])
            if g in faces and g not in val and frozenset((f, g)) not in barrier:
                val[g] = val[f]
                stack.append(g)
    return val, clash


# --------------------------------------------------------------------------
# trace

@dataclass
class LineRecord:
    level: int
    gamma_reg: list
    gamma_psi: list
    excursions: list
    d: int
    g: int


@dataclass
class AlgorithmTrace:
    levels: dict = field(default_factory=dict)         # k -> [LineRecord]
    gamma_h: dict = field(default_factory=dict)        # k -> (lines, loops) of the raw input
    gamma_max: dict = field(default_factory=dict)
    gamma_min: dict = field(default_factory=dict)
    loops: list = field(default_factory=list)
    order_violations: list = field(default_factory=list)
    clashes: int = 0
    psi0_monotone: bool = True

    def n_excursions(self) -> int:
        return sum(len(r.excursions) for rs in self.levels.values() for r in rs)

    def total_defects(self) -> int:
        return sum(r.d for rs in self.levels.values() for r in rs)

    def length_h(self) -> int:
        return sum(len(p) - 1 for lines, loops in self.gamma_h.values() for p in lines + loops)

    def length_reg(self) -> int:
        return sum(len(r.gamma_reg) - 1 for rs in self.levels.values() for r in rs)

    def to_record(self) -> dict:
        return {
            "levels": {
                str(k): [{
                    "gamma_reg": [list(c) for c in r.gamma_reg],
                    "gamma_psi": [list(c) for c in r.gamma_psi],
                    "excursions": [{"a": list(e.a), "b": list(e.b), "t_start": e.t_start,
                                    "t_end": e.t_end, "closed": e.closed} for e in r.excursions],
                    "d": r.d, "g": r.g,
                } for r in rs] for k, rs in sorted(self.levels.items())
            },
            "loops": [{"level": lp.level, "length": lp.length, "area": lp.area, "H": lp.H,
                       "constraining": lp.constraining, "erased": lp.erased} for lp in self.loops],
            "order_violations": len(self.order_violations),
            "excursions": self.n_excursions(),
            "defects": self.total_defects(),
        }


# --------------------------------------------------------------------------
# preprocessing

@dataclass
class Preprocessed:
    h_reg: dict              # on D and ring
    loops: list
    S_prime: frozenset
    bound_ok: bool
    psi_min: dict
    psi_max: dict


def _bounds(dom: RegionDomain):
    lo, hi = monotone_bounds(dom)
    out_lo = dict(dom.boundary)
    out_hi = dict(dom.boundary)
    out_lo.update(zip(dom.faces, lo))
    out_hi.update(zip(dom.faces, hi))
    return out_lo, out_hi


def _loop_records(values: dict, window: set, holes) -> list:
    out = []
    for k in range(min(values.values()) + 1, max(values.values()) + 1):
        for lp in level_lines(values, k, window)[1]:
            inside = loop_interior(lp, window)
            out.append(LoopRecord(k, len(lp) - 1, len(inside), frozenset(inside),
                                  frozenset(loop_support(lp) & window), bool(inside & holes)))
    return out


def select_loops(records: list, epsilon: float) -> set:
    """Innermost first: a hole-enclosing loop is sacrificed, with every loop
    inside it, when the nested length H reaches eps^(1/3) times its area.
    Returns the faces freed (interiors and supports)."""
    eps3 = epsilon ** (1 / 3)
    cons = sorted((r for r in records if r.constraining), key=lambda r: (len(r.interior), r.level))
    freed = set()
    for r in cons:
        if r.erased:
            continue
        inner = [q for q in cons if not q.erased and q.interior <= r.interior]
        r.H = sum(q.length for q in inner)
        if r.H >= eps3 * r.area:
            for q in inner:
                q.erased = True
                freed |= q.interior | q.support
    return freed


def preprocess(inp: AlgorithmInput, select: bool = True, trace: AlgorithmTrace | None = None,
               max_rounds: int = 50) -> Preprocessed:
    """Choose S', clip h into the extremal tilings of S', erase every loop.

    Hole-enclosing loops are read off h extended by phi on the holes, before
    any clipping: once h is clipped into the extremal tilings of S, a pinned
    hole drags its whole upstream (or downstream) cone along and no loop can
    surround it any more.  With ``select=False`` nothing is sacrificed (S' = S).
    """
    D = inp.domain
    window = set(D.faces)
    full = {**D.boundary, **inp.h}
    if trace is not None:
        for k in range(min(full.values()) + 1, max(full.values()) + 1):
            trace.gamma_h[k] = level_lines(full, k, window)
    records = _loop_records(full, window, inp.holes)
    S_prime = set(inp.S)
    if select:
        S_prime |= select_loops(records, inp.epsilon)
    S_prime &= window
    bound_ok = len(S_prime) - inp.s <= inp.epsilon ** (2 / 3) * inp.s + 1e-12
    lo, hi = _bounds(inp.subdomain(S_prime - set(inp.S)))

    cur = _clip(full, lo, hi)
    for _ in range(max_rounds):
        found = [(k, lp) for k in range(min(cur.values()) + 1, max(cur.values()) + 1)
                 for lp in level_lines(cur, k, window)[1]]
        if not found:
            break
        new = dict(cur)
        for k, lp in found:
            for f in loop_interior(lp, window):
                # toggle the level-k indicator of f
                new[f] += -1 if cur[f] >= k else 1
        cur = _clip(new, lo, hi)
    else:
        raise RuntimeError("loop erasure did not terminate")
    if trace is not None:
        trace.loops = records
    return Preprocessed(cur, records, frozenset(S_prime), bound_ok, lo, hi)


# --------------------------------------------------------------------------
# main algorithm

@dataclass
class ApproxResult:
    psi: LozengeTiling
    classification: str
    excess: int
    gain: int
    s: int
    S_prime: frozenset
    bound_ok: bool
    boundary_ok: bool
    trace: AlgorithmTrace

    @property
    def monotone(self) -> bool:
        return self.psi.is_monotone


def _agree_steps(a, b) -> int:
    sa = set(zip(a, a[1:]))
    return sum(1 for e in zip(b, b[1:]) if e in sa)


def approximate(inp: AlgorithmInput, validate: bool = True) -> ApproxResult:
    """Approximate h by a tiling psi of S' and classify the input."""
    if validate:
        inp.validate()
    D = inp.domain
    window = set(D.faces)
    eps = inp.epsilon
    s = inp.s
    excess = inp.excess()
    is_excess = excess >= eps * s
    trace = AlgorithmTrace()
    pre = preprocess(inp, select=not is_excess, trace=trace)
    reg = pre.h_reg
    levels = range(min(reg.values()) + 1, max(reg.values()) + 1)

    lo, hi = pre.psi_min, pre.psi_max
    for k in levels:
        trace.gamma_max[k] = level_lines(hi, k, window)[0]
        trace.gamma_min[k] = level_lines(lo, k, window)[0]

    # highest level first
    north = {}
    ring = D.boundary
    for k in sorted(levels, reverse=True):
        lines, loops = level_lines(reg, k, window)
        assert not loops
        recs = []
        for ln in lines:
            out, exc = greedy_level_line(ln)
            recs.append(LineRecord(k, ln, out, exc, defects(ln), _agree_steps(ln, out)))
        trace.levels[k] = recs
        seeds = {f: int(z >= k) for f, z in ring.items()}
        val, clash = north_indicator([r.gamma_psi for r in recs], window | set(ring), seeds)
        trace.clashes += len(clash)
        north[k] = {f: val.get(f, int(reg[f] >= k)) for f in window}
        if k + 1 in north:
            bad = [f for f in window if north[k + 1][f] > north[k][f]]
            if bad:
                trace.order_violations.append((k, len(bad)))

    base = min(reg.values())
    psi0 = {f: base + sum(north[k][f] for k in levels) for f in window}
    trace.psi0_monotone = D.is_monotone([psi0[f] for f in D.faces])

    dom_p = inp.subdomain(pre.S_prime - set(inp.S))
    lo2, hi2 = _bounds(dom_p)
    psi_h = tuple(min(hi2[f], max(lo2[f], psi0[f])) for f in dom_p.faces)
    boundary_ok = all(psi0[f] == z for f, z in dom_p.boundary.items() if f in window)
    psi = LozengeTiling.__new__(LozengeTiling)
    object.__setattr__(psi, "domain", dom_p)
    object.__setattr__(psi, "heights", psi_h)

    h_s, phi_s = inp.surfaces(dom_p)
    gain = len(psi.plaquettes & h_s.plaquettes) - len(phi_s.plaquettes & h_s.plaquettes)
    if is_excess:
        cls = EXCESS_AREA
    elif gain >= eps ** (1 / 3) * s:
        cls = GOOD_OVERLAP
    else:
        cls = EXCEPTIONAL
    return ApproxResult(psi, cls, excess, gain, s, pre.S_prime, pre.bound_ok, boundary_ok, trace)


def satisfies_boundary(res: ApproxResult, inp: AlgorithmInput) -> bool:
    """psi agrees with phi on every ring face and on every hole outside S'."""
    dom = res.psi.domain
    if set(dom.faces) != set(res.S_prime):
        return False
    for f, z in dom.boundary.items():
        ref = inp.phi.get(f, inp.domain.boundary.get(f))
        if ref != z:
            return False
    return dom.is_monotone(res.psi.heights)


# --------------------------------------------------------------------------
# random inputs

def random_tiling(dom: RegionDomain, rng: np.random.Generator, steps: int | None = None) -> LozengeTiling:
    from .dynamics import flip_mcmc
    top, _ = extremal_tilings(dom)
    return flip_mcmc(top, steps or 40 * len(dom.faces) ** 1, rng)


def rectangle_region(rng: np.random.Generator, rows: int = 6, cols: int = 5, c: int = 6) -> RegionDomain:
    """A rectangle whose ring copies a random tiling of an enclosing hexagon."""
    big = hexagon_region(rows + 2, cols + 2, c)
    t = random_tiling(big, rng)
    full = big.full_map(t.heights)
    window = [(i, j) for i in range(1, rows + 1) for j in range(1, cols + 1)]
    ws = set(window)
    ring = {}
    for f in window:
        for d in _DIRS4:
            g = (f[0] + d[0], f[1] + d[1])
            if g not in ws:
                ring[g] = full[g]
    return RegionDomain(window, ring, name=f"rect{rows}x{cols}")


def _shared_faces(dom_S, h_surface, phi_surface):
    faces = set()
    for p in h_surface.plaquettes & phi_surface.plaquettes:
        if p.orientation == HORIZONTAL:
            cand = [(p.x, p.y)]
        elif p.orientation == VERTICAL_B:
            cand = [(p.x - 1, p.y), (p.x, p.y)]
        else:
            cand = [(p.x, p.y - 1), (p.x, p.y)]
        faces.update(f for f in cand if f in dom_S.index)
    return faces


def _components(faces):
    faces = set(faces)
    comps = []
    while faces:
        f = faces.pop()
        comp = {f}
        stack = [f]
        while stack:
            u = stack.pop()
            for d in _DIRS4:
                g = (u[0] + d[0], u[1] + d[1])
                if g in faces:
                    faces.remove(g)
                    comp.add(g)
                    stack.append(g)
        comps.append(comp)
    return comps


def make_input(D: RegionDomain, phi: dict, h: dict, epsilon: float) -> AlgorithmInput | None:
    """Pin faces to phi (turning them into holes) until h and phi are disjoint
    and S is connected.  None when nothing is left."""
    h = dict(h)
    holes = set()
    while True:
        inp = AlgorithmInput(D, phi, h, frozenset(holes), epsilon)
        if inp.s == 0:
            return None
        comps = _components(inp.S)
        if len(comps) > 1:
            keep = max(comps, key=lambda c: (len(c), min(c)))
            extra = set(inp.S) - keep
        else:
            dom_S = inp.subdomain()
            hs, ps = inp.surfaces(dom_S)
            extra = _shared_faces(dom_S, hs, ps)
        if not extra:
            return inp
        for f in extra:
            holes.add(f)
            h[f] = phi[f]


def _region(family: str, rng: np.random.Generator) -> RegionDomain:
    if family == "hexagon":
        return hexagon_region(6, 6, 6)
    if family == "rectangle":
        return rectangle_region(rng)
    if family == "slit":
        from .tiling import slit_hexagon
        return slit_hexagon(4, 4, 4)
    raise ValueError(f"unknown region family {family!r}")


def _bubble_heights(D, phi, other, up, noise, rng, allowed=None):
    """h strictly on one side of phi (on ``allowed`` faces), max/min with ``other``."""
    h = dict(phi)
    for f, o in zip(D.faces, other.heights):
        if allowed is not None and f not in allowed:
            continue
        z = max(o, phi[f] + 1) if up else min(o, phi[f] - 1)
        if rng.random() < noise:
            z += int(rng.choice([-2, -1, -1, 1, 1, 2]))
        # clear the walls towards fixed ring faces as well
        for d in _DIRS4:
            g = (f[0] + d[0], f[1] + d[1])
            if g in D.boundary:
                before = d[0] + d[1] < 0
                if up and before:
                    z = max(z, D.boundary[g])
                if not up and not before:
                    z = min(z, D.boundary[g])
        h[f] = max(z, phi[f] + 1) if up else min(z, phi[f] - 1)
    return h


def random_input(family: str, rng: np.random.Generator, epsilon: float = 0.1,
                 max_tries: int = 50) -> AlgorithmInput:
    """A random bubble of h against phi.

    Mostly phi is an extremal tiling of D and h sits strictly on the other
    side of it (max/min with an independent random tiling, plus sparse
    noise), sometimes with pillars reaching back up to phi; otherwise phi is random and h is pushed off it on a lower or
    upper set of phi.  Faces still touching phi are pinned as holes.
    """
    for _ in range(max_tries):
        D = _region(family, rng)
        other = random_tiling(D, rng)
        up = bool(rng.random() < 0.5)
        noise = float(rng.choice([0.0, 0.03, 0.1, 0.3]))
        if rng.random() < 0.75:
            top, bottom = extremal_tilings(D)
            phi = dict(zip(D.faces, (bottom if up else top).heights))
            h = _bubble_heights(D, phi, other, up, noise, rng)
            if rng.random() < 0.4:
                faces = D.faces
                for _ in range(int(rng.integers(1, 3))):
                    f = faces[int(rng.integers(len(faces)))]
                    h[f] = phi[f]
        else:
            phi = dict(zip(D.faces, random_tiling(D, rng).heights))
            vals = sorted(set(phi.values()))
            k = vals[int(rng.integers(len(vals)))]
            allowed = {f for f, z in phi.items() if (z <= k if up else z >= k)}
            h = _bubble_heights(D, phi, other, up, noise, rng, allowed)
        inp = make_input(D, phi, h, epsilon)
        if inp is not None:
            return inp
    raise RuntimeError("could not build a disjoint input")


# --------------------------------------------------------------------------
# hand-encoded excursion picture

# picture steps (dX, dY) of the drawn SOS line, dY in halves
FIGURE_STEPS = [(1, 1), (1, -1), (-1, -1), (1, -1), (1, -1), (1, 1), (1, 1), (1, 1), (-1, 1),
                (1, 1), (1, -1), (1, 1), (1, -1), (1, 1), (1, -1), (-1, -1), (1, -1), (1, 1),
                (1, 1), (1, 1), (-1, 1), (1, 1), (1, 1), (1, 1), (1, -1), (1, -1), (1, -1),
                (-1, -1), (1, -1)]
# the regularised line leaves the drawn one at (15, 2.5) and runs straight down to (19, 0.5)
FIGURE_REG_CUT = (15, 5)       # (X, 2Y)
FIGURE_REG_TAIL = [(1, -1), (1, -1), (1, -1), (1, -1)]
FIGURE_ENDPOINTS = [((2, 0), (4, -1)), ((6, 0), (7, 0.5)), ((9, 0.5), (10, 0)), ((14, 1), (16, 2))]


def figure_path(regularised: bool = True):
    """Corner path of the drawn level line; with the straightened tail when regularised."""
    X, Y2 = 0, 0
    pts = [(X, Y2)]
    for dx, dy in FIGURE_STEPS:
        X, Y2 = X + dx, Y2 + dy
        pts.append((X, Y2))
        if regularised and (X, Y2) == FIGURE_REG_CUT:
            for dx2, dy2 in FIGURE_REG_TAIL:
                X, Y2 = X + dx2, Y2 + dy2
                pts.append((X, Y2))
            break
    return [corner_from_picture(X, Y2) for X, Y2 in pts]


def corner_to_picture(c):
    X, Y2 = picture_xy(c)
    return (X, Y2 / 2)
