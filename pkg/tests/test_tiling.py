from fractions import Fraction
from math import prod

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from tiltsos.approx import random_tiling
from tiltsos.lattice import TorusGeometry
from tiltsos.oracles import l_region, strip_region
from tiltsos.tiling import (NE, SE, CapExceededError, InconsistentBoundaryError, LozengeTiling,
                            Surface, TorusDomain, box_region, enumerate_tilings, extremal_tilings,
                            flip, flip_face, flip_neighbors, hexagon_region, level_lines,
                            lozenge_count, north_region, path_steps, slit_hexagon,
                            slotted_hexagon, surface_from_plaquettes)


def macmahon(a, b, c):
    return round(prod(Fraction(i + j + k - 1, i + j + k - 2)
                      for i in range(1, a + 1) for j in range(1, b + 1) for k in range(1, c + 1)))


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 3), st.integers(1, 3), st.integers(1, 3))
def test_hexagon_counts_match_product_formula(a, b, c):
    assert len(enumerate_tilings(hexagon_region(a, b, c))) == macmahon(a, b, c)


def test_known_counts():
    assert len(enumerate_tilings(hexagon_region(2, 2, 2))) == 20
    assert len(enumerate_tilings(hexagon_region(3, 3, 3))) == 980
    assert len(enumerate_tilings(slit_hexagon(3, 3, 3))) == 1
    assert len(enumerate_tilings(slotted_hexagon(2, 2, 2))) == 14
    assert len(enumerate_tilings(strip_region(6, 2))) == 28


def test_tilings_have_constant_lozenge_count():
    for dom in (hexagon_region(2, 3, 2), l_region(3, 3, 1, 2), slotted_hexagon(3, 2, 2)):
        ts = enumerate_tilings(dom)
        assert len({t.area for t in ts}) == 1
        assert ts[0].area == lozenge_count(dom)
        assert len({t.counts() for t in ts}) == 1


def test_cap_and_inconsistent_boundary():
    with pytest.raises(CapExceededError):
        enumerate_tilings(hexagon_region(4, 4, 4), cap=10)
    bad = box_region([(0, 0), (0, 1)], 0, 3)
    with pytest.raises(InconsistentBoundaryError):
        enumerate_tilings(bad)
    assert enumerate_tilings(bad, strict=False) == []


def test_non_monotone_heights_rejected():
    dom = hexagon_region(2, 2, 2)
    with pytest.raises(ValueError):
        LozengeTiling(dom, (0, 2, 0, 0))


def test_extremal_tilings_bound_every_tiling():
    for dom in (hexagon_region(2, 3, 3), l_region(3, 3, 1, 2), slotted_hexagon(3, 3, 2)):
        ts = enumerate_tilings(dom)
        top, bot = extremal_tilings(dom)
        assert top in ts and bot in ts
        assert all(bot <= t <= top for t in ts)
        assert not flip_neighbors(top) or all(s <= top for s in flip_neighbors(top))


def test_join_meet_closed():
    ts = enumerate_tilings(hexagon_region(2, 2, 3))
    rng = np.random.default_rng(0)
    for _ in range(100):
        a, b = (ts[i] for i in rng.integers(len(ts), size=2))
        j, m = a.join(b), a.meet(b)
        assert j in ts and m in ts
        assert a <= j and b <= j and m <= a and m <= b


def test_face_flip_is_involution_and_graph_connected():
    dom = hexagon_region(2, 3, 2)
    ts = enumerate_tilings(dom)
    for t in ts:
        for f in dom.faces:
            for d in (1, -1):
                s = flip_face(t, f, d)
                if s is not None:
                    assert flip_face(s, f, -d) == t
                    assert abs(s.area - t.area) == 0
    seen = {ts[0]}
    stack = [ts[0]]
    while stack:
        for s in flip_neighbors(stack.pop()):
            if s not in seen:
                seen.add(s)
                stack.append(s)
    assert seen == set(ts)


def test_vertex_flip_rotates_hexagons():
    dom = hexagon_region(2, 2, 2)
    ts = set(enumerate_tilings(dom))
    done = 0
    for t in ts:
        for p in range(-3, 4):
            for q in range(-3, 4):
                s, ok = flip(t, (p, q))
                if ok:
                    done += 1
                    assert s in ts and s != t
                    assert sum(abs(a - b) for a, b in zip(s.heights, t.heights)) == 1
                    back, ok2 = flip(s, (p, q))
                    assert ok2 and back == t
                else:
                    assert s is t
    assert done > 0


def test_surface_from_plaquettes_round_trip():
    dom = hexagon_region(3, 3, 3)
    rng = np.random.default_rng(1)
    for _ in range(20):
        t = random_tiling(dom, rng, steps=100)
        assert surface_from_plaquettes(dom, t.plaquettes).heights == t.heights


@pytest.mark.parametrize("N,theta", [(2, (0, 0)), (2, (Fraction(1, 2), Fraction(1, 2))),
                                     (3, (Fraction(1, 3), Fraction(2, 3)))])
def test_torus_tilings_conserve_counts(N, theta):
    dom = TorusDomain(TorusGeometry(N, theta))
    ts = enumerate_tilings(dom)
    assert ts
    counts = dom.geometry.lozenge_counts
    assert all(t.counts() == counts for t in ts)
    assert all(t.heights[0] == 0 for t in ts)


def test_flat_torus_has_single_rooted_tiling():
    dom = TorusDomain(TorusGeometry(3, (0, 0)))
    assert [t.heights for t in enumerate_tilings(dom)] == [(0,) * 9]


def test_level_lines_of_flat_surface_are_empty():
    dom = box_region([(i, j) for i in range(3) for j in range(3)], 1, 1)
    vals = dom.full_map((1,) * 9)
    for k in (0, 1, 2):
        lines, loops = level_lines(vals, k)
        assert lines == [] and loops == []


def test_level_lines_of_tilings():
    dom = hexagon_region(3, 3, 3)
    rng = np.random.default_rng(2)
    for _ in range(30):
        t = random_tiling(dom, rng, steps=200)
        vals = dom.full_map(t.heights)
        for k in range(1, 4):
            lines, loops = level_lines(vals, k)
            assert loops == []
            assert len(lines) == 1
            assert set(path_steps(lines[0])) <= {NE, SE}
            ring = {f: int(v >= k) for f, v in dom.boundary.items()}
            north = north_region(lines, vals, ring)
            assert north == {f: int(v >= k) for f, v in vals.items()}


def test_level_loops_of_a_bump():
    dom = box_region([(i, j) for i in range(4) for j in range(4)], 0, 0)
    h = [0] * 16
    h[dom.index[(1, 1)]] = 1
    h[dom.index[(1, 2)]] = 1
    vals = dom.full_map(h)
    lines, loops = level_lines(vals, 1)
    assert lines == [] and len(loops) == 1
    assert len(loops[0]) - 1 == 6
