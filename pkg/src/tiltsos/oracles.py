"""Small instances with brute-force answers, shared by the verify suites and tests."""

from __future__ import annotations

from functools import lru_cache

import numpy as np

from .tiling import (LozengeTiling, RegionDomain, Surface, box_region, enumerate_tilings,
                     hexagon_region, slotted_hexagon)

_tiling_cache: dict = {}


def strip_region(length: int, width: int = 1, top: int = 1) -> RegionDomain:
    """length x width window, ring at ``top`` before it and 0 after it.

    With width 1 the tilings are the single steps of a 1D profile.
    """
    window = [(i, j) for i in range(length) for j in range(width)]
    return box_region(window, top, 0, name=f"strip{length}x{width}")


def l_region(a: int, b: int, cut: int, c: int) -> RegionDomain:
    """a x b box of height c with the last ``cut`` x ``cut`` corner removed from the window."""
    window = [(i, j) for i in range(a) for j in range(b) if not (i >= a - cut and j >= b - cut)]
    return box_region(window, c, 0, name=f"L{a}x{b}-{cut}x{c}")


@lru_cache(maxsize=None)
def small_regions():
    """Regions with at most a few hundred tilings, for randomized energy checks."""
    return (hexagon_region(2, 2, 2), hexagon_region(2, 2, 3), hexagon_region(1, 3, 3),
            strip_region(6, 2), l_region(3, 3, 1, 2), slotted_hexagon(3, 2, 2))


def tilings_of(dom: RegionDomain):
    key = (dom.name, dom.faces, tuple(sorted(dom.boundary.items())))
    if key not in _tiling_cache:
        _tiling_cache[key] = [LozengeTiling(dom, t.heights) for t in enumerate_tilings(dom)]
    return _tiling_cache[key]


def random_energy_instance(rng: np.random.Generator, dom: RegionDomain | None = None):
    """(h, phi, tilings): phi a uniform tiling, h a random SOS surface near the tilings.

    h starts from phi or from another tiling, then gets a few random
    +-1/+-2 bumps on random faces or small rectangles.
    """
    regions = small_regions()
    dom = dom or regions[int(rng.integers(len(regions)))]
    ts = tilings_of(dom)
    phi = ts[int(rng.integers(len(ts)))]
    base = ts[int(rng.integers(len(ts)))] if rng.random() < 0.5 else phi
    h = dict(zip(dom.faces, base.heights))
    faces = list(dom.faces)
    for _ in range(int(rng.integers(1, 4))):
        f = faces[int(rng.integers(len(faces)))]
        dz = int(rng.choice([-2, -1, 1, 2]))
        w1, w2 = int(rng.integers(1, 3)), int(rng.integers(1, 3))
        for i in range(w1):
            for j in range(w2):
                g = (f[0] + i, f[1] + j)
                if g in h:
                    h[g] += dz
    return Surface(phi.domain, tuple(h[f] for f in dom.faces)), phi, ts


def step_profile_instance():
    """Two bubbles on a 1D step, one dipping below phi and one rising above it.

    phi steps down at x = 10 of a length-20 strip.  h dips to 0 on [2, 9)
    and returns to 1 on [9, 10) (bubble 1, below phi), then rises back to 1
    on [14, 18) (bubble 2, above phi).  Returns (h, phi, bubble-1 x-range).
    """
    dom = strip_region(20, 1)
    prof_phi = [1 if x < 10 else 0 for x in range(20)]
    prof_h = [1 if (x < 2 or 9 <= x < 10 or 14 <= x < 18) else 0 for x in range(20)]
    phi = LozengeTiling(dom, tuple(prof_phi))
    h = Surface(dom, tuple(prof_h))
    return h, phi, (2, 9)
