"""Overlap energies between a surface h and tilings, their minimizers, bubbles
and bubble groups, and the pinning potentials built on top of them.

Everything here works by enumeration: the set of competing tilings is either
all tilings of a finite region, or on the torus every vertical shift of every
rooted tiling that shares at least one plaquette with h.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable

from .lattice import HORIZONTAL, VERTICAL_B, VERTICAL_C, Plaquette, plaquette_edges, project_111, tri_components
from .tiling import (
    DEFAULT_CAP, LozengeTiling, Surface, TorusDomain, enumerate_tilings,
    surface_from_plaquettes, torus_shifts_meeting,
)

_rooted_cache: dict = {}


def candidate_tilings(h: Surface, cap: int = DEFAULT_CAP):
    """Tilings competing in the energy minimisation for the surface h."""
    d = h.domain
    if isinstance(d, TorusDomain):
        key = (d.geometry, cap)
        if key not in _rooted_cache:
            _rooted_cache[key] = enumerate_tilings(TorusDomain(d.geometry), cap=cap)
        out = []
        for t in _rooted_cache[key]:
            out.extend(torus_shifts_meeting(LozengeTiling(d, t.heights), h))
        return out
    return enumerate_tilings(d, cap=cap)


def half_space_test(phi: Surface, sign: int) -> Callable[[Plaquette], bool]:
    """Membership in the closed half-space above (sign=+1) or below (-1) phi."""
    d = phi.domain
    hv = phi.heights

    def val(face):
        return d.value(hv, face)

    def above(p: Plaquette) -> bool:
        if p.orientation == HORIZONTAL:
            return p.z >= val((p.x, p.y))
        u = (p.x - 1, p.y) if p.orientation == VERTICAL_B else (p.x, p.y - 1)
        return p.z >= min(val(u), val((p.x, p.y)))

    def below(p: Plaquette) -> bool:
        if p.orientation == HORIZONTAL:
            return p.z <= val((p.x, p.y))
        u = (p.x - 1, p.y) if p.orientation == VERTICAL_B else (p.x, p.y - 1)
        return p.z + 1 <= max(val(u), val((p.x, p.y)))

    return above if sign > 0 else below


def footprint(domain, plaqs) -> frozenset:
    canon = domain.canon_tri
    out = set()
    for p in plaqs:
        for t in project_111(p):
            out.add(canon(t))
    return frozenset(out)


def _wrap_tri(domain):
    return domain.canon_tri if isinstance(domain, TorusDomain) else None


# --------------------------------------------------------------------------

@dataclass(frozen=True)
class Bubble:
    faces: frozenset
    blue: frozenset   # faces belonging to the tiling

    @property
    def red(self) -> frozenset:
        return self.faces - self.blue

    def __len__(self):
        return len(self.faces)

    @property
    def H(self) -> int:
        return len(self.faces) - 2 * len(self.blue)


@dataclass
class MinimizerSummary:
    gmin: int
    psi_top: LozengeTiling
    psi_bot: LozengeTiling
    count: int
    minimizers: list
    components: list   # triangle sets of the free regions between psi_bot and psi_top


@dataclass
class BubbleGroup:
    bubbles: list
    connectors: list
    footprint: frozenset
    H: int = 0
    G_g: int = 0
    count: int = 1
    V1: int = 0

    @property
    def size(self) -> int:
        return sum(len(b) for b in self.bubbles)

    @property
    def area(self) -> float:
        """Footprint area in lozenges (two triangles each)."""
        return len(self.footprint) / 2

    def faces(self) -> frozenset:
        out = set()
        for b in self.bubbles:
            out |= b.faces
        return frozenset(out)


@dataclass
class PotentialSpec:
    kind: str = "V1"            # V1, V2 or general
    M0: int = 1000
    f: Callable | None = None   # component size rule for kind="general"

    def rule(self, S) -> int:
        n = len(S)
        if self.kind == "V2":
            return n if n >= self.M0 else 0
        if self.kind == "general":
            v = (self.f or (lambda comp: len(comp) // self.M0))(S)
            if not (n // self.M0 <= v <= n):
                raise ValueError(f"f(S)={v} outside [{n // self.M0}, {n}]")
            return v
        raise ValueError(self.kind)


# --------------------------------------------------------------------------

class EnergyContext:
    """A surface h together with a reference tiling phi on the same domain."""

    def __init__(self, h: Surface, phi: LozengeTiling, cap: int = DEFAULT_CAP,
                 tilings=None, debug: bool = False):
        if h.domain is not phi.domain and not _same_domain(h.domain, phi.domain):
            raise ValueError("h and phi live on different domains")
        self.h = h
        self.phi = phi
        self.domain = h.domain
        self.cap = cap
        self.debug = debug
        self._tilings = tilings

    @cached_property
    def tilings(self):
        if self._tilings is not None:
            return list(self._tilings)
        return candidate_tilings(self.h, self.cap)

    @cached_property
    def hp(self) -> frozenset:
        return self.h.plaquettes

    @cached_property
    def hphi(self) -> int:
        return len(self.hp & self.phi.plaquettes)


def _same_domain(a, b):
    if isinstance(a, TorusDomain) and isinstance(b, TorusDomain):
        return a.geometry == b.geometry
    return False


def overlap_energy(ctx: EnergyContext, psi: Surface) -> int:
    """G(psi) = |h & phi| - |h & psi|."""
    g = ctx.hphi - len(ctx.hp & psi.plaquettes)
    if ctx.debug:
        phi, pp = ctx.phi.plaquettes, psi.plaquettes
        sd = phi ^ pp
        alt = len(sd) / 2 - len(sd & (phi ^ ctx.hp))
        assert alt == g, (alt, g)
    return g


def alternate_energy(ctx: EnergyContext, psi: Surface) -> float:
    """The symmetric-difference form of G, valid for tilings psi."""
    phi, pp = ctx.phi.plaquettes, psi.plaquettes
    sd = phi ^ pp
    return len(sd) / 2 - len(sd & (phi ^ ctx.hp))


def half_energy(ctx: EnergyContext, psi: Surface, sign: int) -> int:
    """G restricted to rewards inside the closed half-space above/below phi."""
    inside = half_space_test(ctx.phi, sign)
    return ctx.hphi - sum(1 for p in ctx.hp & psi.plaquettes if inside(p))


def _black_map(t: Surface) -> dict:
    canon = t.domain.canon_tri
    return {canon(project_111(p)[0]): p for p in t.plaquettes}


def zero_range_weights(ctx: EnergyContext) -> dict:
    """g(f) per plaquette f of any candidate tiling, with G(psi) = sum_{f in psi} g(f)."""
    canon = ctx.domain.canon_tri
    lift = _black_map(ctx.phi)
    out = {}
    for t in ctx.tilings:
        for f in t.plaquettes:
            if f in out:
                continue
            b = canon(project_111(f)[0])
            out[f] = int(lift[b] in ctx.hp) - int(f in ctx.hp)
    return out


def _extremes(tilings, values):
    best = min(values)
    mins = [t for t, v in zip(tilings, values) if v == best]
    top, bot = mins[0], mins[0]
    for t in mins[1:]:
        top, bot = top.join(t), bot.meet(t)
    keys = {t.heights for t in mins}
    if top.heights not in keys or bot.heights not in keys:
        raise AssertionError("minimizer set is not a lattice")
    return best, mins, top, bot


def minimize(ctx: EnergyContext) -> MinimizerSummary:
    ts = ctx.tilings
    vals = [overlap_energy(ctx, t) for t in ts]
    gmin, mins, top, bot = _extremes(ts, vals)
    diff = top.plaquettes ^ bot.plaquettes
    comps = tri_components(footprint(ctx.domain, diff), wrap=_wrap_tri(ctx.domain))
    return MinimizerSummary(gmin, top, bot, len(mins), mins, comps)


def component_factorization(summary: MinimizerSummary, domain) -> tuple[int, list]:
    """(product of per-component choice counts, the counts)."""
    counts = []
    for comp in summary.components:
        seen = set()
        for t in summary.minimizers:
            seen.add(frozenset(p for p in t.plaquettes if domain.canon_tri(project_111(p)[0]) in comp))
        counts.append(len(seen))
    prod = 1
    for c in counts:
        prod *= c
    return prod, counts


def gbar_weights(ctx: EnergyContext, summary: MinimizerSummary | None = None) -> dict:
    """gbar(f) = 1{f_top in h} - 1{f in h} where f_top is the face of psi_top over f's black triangle."""
    summary = summary or minimize(ctx)
    canon = ctx.domain.canon_tri
    lift = _black_map(summary.psi_top)
    out = {}
    for t in ctx.tilings:
        for f in t.plaquettes:
            if f not in out:
                out[f] = int(lift[canon(project_111(f)[0])] in ctx.hp) - int(f in ctx.hp)
    return out


def gbar(ctx: EnergyContext, psi: Surface, gmin: int | None = None) -> int:
    if gmin is None:
        gmin = minimize(ctx).gmin
    return overlap_energy(ctx, psi) - gmin


# --------------------------------------------------------------------------
# bubbles

def _edge_key(domain):
    if isinstance(domain, TorusDomain):
        return domain.geometry.wrap_edge
    return lambda e: e


def plaquette_components(domain, plaqs) -> list[frozenset]:
    """Connected components of a plaquette set, adjacency = a shared unit edge."""
    wrap = _edge_key(domain)
    by_edge: dict = {}
    plaqs = list(plaqs)
    for p in plaqs:
        for e in plaquette_edges(p):
            by_edge.setdefault(wrap(e), []).append(p)
    pool = set(plaqs)
    out = []
    for p in sorted(plaqs):
        if p not in pool:
            continue
        pool.discard(p)
        comp, stack = {p}, [p]
        while stack:
            q = stack.pop()
            for e in plaquette_edges(q):
                for r in by_edge[wrap(e)]:
                    if r in pool:
                        pool.discard(r)
                        comp.add(r)
                        stack.append(r)
        out.append(frozenset(comp))
    return out


def bubbles(ctx_or_h, phi=None) -> list[Bubble]:
    """Components of phi ^ h, with faces of phi marked blue."""
    if isinstance(ctx_or_h, EnergyContext):
        h, phi = ctx_or_h.h, ctx_or_h.phi
    else:
        h = ctx_or_h
    pp = phi.plaquettes
    sd = pp ^ h.plaquettes
    return [Bubble(c, c & pp) for c in plaquette_components(h.domain, sd)]


# --------------------------------------------------------------------------
# bubble groups

@dataclass
class GroupAnalysis:
    groups: list
    psi_plus: LozengeTiling     # top minimizer of G^+
    psi_minus: LozengeTiling    # bottom minimizer of G^-
    delta_components: list
    summary: MinimizerSummary
    orphans: list = field(default_factory=list)   # delta components touching no bubble


def half_extremes(ctx: EnergyContext):
    ts = ctx.tilings
    _, _, top_plus, _ = _extremes(ts, [half_energy(ctx, t, +1) for t in ts])
    _, _, _, bot_minus = _extremes(ts, [half_energy(ctx, t, -1) for t in ts])
    return top_plus, bot_minus


def bubble_groups(ctx: EnergyContext, potential: PotentialSpec | None = None) -> GroupAnalysis:
    bs = bubbles(ctx)
    summary = minimize(ctx)
    plus, minus = half_extremes(ctx)
    wrap = _wrap_tri(ctx.domain)
    delta = plus.plaquettes ^ minus.plaquettes
    comps = tri_components(footprint(ctx.domain, delta), wrap=wrap)
    fps = [footprint(ctx.domain, b.faces) for b in bs]

    parent = list(range(len(bs)))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    touching = []
    for c in comps:
        hit = [i for i, fp in enumerate(fps) if not fp.isdisjoint(c)]
        touching.append(hit)
        for i in hit[1:]:
            parent[find(i)] = find(hit[0])
    members: dict = {}
    for i in range(len(bs)):
        members.setdefault(find(i), []).append(i)
    groups = []
    for root in sorted(members, key=lambda r: min(members[r])):
        idx = members[root]
        conn = [c for c, hit in zip(comps, touching) if any(i in idx for i in hit)]
        fp = set()
        for i in idx:
            fp |= fps[i]
        for c in conn:
            fp |= c
        g = BubbleGroup([bs[i] for i in idx], conn, frozenset(fp))
        g.H = sum(bs[i].H for i in idx)
        _group_minimum(ctx, g)
        g.V1 = g.G_g + sum(len(bs[i].blue) for i in idx)
        groups.append(g)
    orphans = [c for c, hit in zip(comps, touching) if not hit]
    return GroupAnalysis(groups, plus, minus, comps, summary, orphans)


def _group_minimum(ctx: EnergyContext, g: BubbleGroup):
    """G^g and minimizer count over tilings differing from phi only inside the footprint."""
    phi = ctx.phi.plaquettes
    best, count = None, 0
    for t in ctx.tilings:
        if not footprint(ctx.domain, t.plaquettes ^ phi) <= g.footprint:
            continue
        v = overlap_energy(ctx, t)
        if best is None or v < best:
            best, count = v, 1
        elif v == best:
            count += 1
    g.G_g = best
    g.count = count


def delete_bubbles(h: Surface, phi: LozengeTiling, faces) -> Surface:
    """Replace the given bubble faces of h by the phi faces they contain."""
    faces = frozenset(faces)
    new = (h.plaquettes - faces) | (phi.plaquettes & faces)
    return surface_from_plaquettes(h.domain, new)


# --------------------------------------------------------------------------
# potentials

def potential(h: Surface, spec: PotentialSpec | None = None, cap: int = DEFAULT_CAP,
              tilings=None) -> int:
    """Pinning potential of h, with the canonical top minimizer as closest tiling."""
    spec = spec or PotentialSpec()
    ts = list(tilings) if tilings is not None else candidate_tilings(h, cap)
    hp = h.plaquettes
    overlaps = [len(hp & t.plaquettes) for t in ts]
    best = max(overlaps)
    mins = [t for t, o in zip(ts, overlaps) if o == best]
    top = mins[0]
    for t in mins[1:]:
        top = top.join(t)
    missing = top.plaquettes - hp
    if spec.kind == "V1":
        return len(missing)
    comps = plaquette_components(h.domain, missing)
    return sum(spec.rule(c) for c in comps)


def closest_tiling(h: Surface, cap: int = DEFAULT_CAP, tilings=None) -> LozengeTiling:
    ts = list(tilings) if tilings is not None else candidate_tilings(h, cap)
    hp = h.plaquettes
    ov = [len(hp & t.plaquettes) for t in ts]
    best = max(ov)
    top = None
    for t, o in zip(ts, ov):
        if o == best:
            top = t if top is None else top.join(t)
    return top
