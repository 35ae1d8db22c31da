
import numpy as np
import pytest

from tiltsos.approx import (EXCESS_AREA, GOOD_OVERLAP, AlgorithmInput, MalformedInputError,
                            approximate, corner_to_picture, defects, figure_path,
                            greedy_level_line, is_tiling_path, make_input, preprocess,
                            random_input, random_tiling, reachable, satisfies_boundary, segment)
from tiltsos.tiling import (NE, SE, box_region, extremal_tilings, hexagon_region, level_lines,
                            monotone_bounds, north_region, slit_hexagon)

STEPS = ((1, 0), (0, 1), (-1, 0), (0, -1))


def _walks(L):
    """Self-avoiding corner walks from the origin with 1..L steps."""
    path, seen = [(0, 0)], {(0, 0)}

    def rec():
        if len(path) > 1:
            yield list(path)
        if len(path) - 1 == L:
            return
        a = path[-1]
        for d in STEPS:
            b = (a[0] + d[0], a[1] + d[1])
            if b not in seen:
                seen.add(b)
                path.append(b)
                yield from rec()
                path.pop()
                seen.discard(b)

    yield from rec()


def test_segment_is_a_tiling_path():
    for b in [(0, 5), (-5, 0), (-2, 3), (-4, 4), (0, 0)]:
        s = segment((0, 0), b)
        assert s[0] == (0, 0) and s[-1] == b and is_tiling_path(s)
        assert len(s) - 1 == -b[0] + b[1]
    with pytest.raises(ValueError):
        segment((0, 0), (1, 0))


def test_greedy_keeps_monotone_lines():
    rng = np.random.default_rng(0)
    for _ in range(50):
        p = [(0, 0)]
        for d in rng.integers(2, size=12):
            s = (NE, SE)[d]
            p.append((p[-1][0] + s[0], p[-1][1] + s[1]))
        out, exc = greedy_level_line(p)
        assert out == p and exc == []


def test_greedy_exhaustive_small_walks():
    checked = 0
    for path in _walks(12):
        out, exc = greedy_level_line(path)
        if not all(e.closed for e in exc):
            continue
        checked += 1
        assert is_tiling_path(out)
        assert out[0] == path[0] and out[-1] == path[-1]
        assert len(out) <= len(path)
        assert len(exc) <= defects(path)
        for e in exc:
            assert reachable(e.a, e.b) and e.t_start < e.t_end
    assert checked > 10_000


def test_figure_path_excursions():
    out, exc = greedy_level_line(figure_path())
    assert is_tiling_path(out)
    assert len(exc) == 4
    assert corner_to_picture(out[-1]) == (19, 0.5)
    got = [(corner_to_picture(e.a), corner_to_picture(e.b)) for e in exc]
    assert got[0] == ((2, 0), (4, -1)) and got[1] == ((6, 0), (7, 0.5)) and got[3] == ((14, 1), (16, 2))


@pytest.mark.parametrize("family", ["hexagon", "rectangle", "slit"])
def test_postconditions_and_trace_invariants(family):
    rng = np.random.default_rng(hash(family) % 1000)
    for _ in range(15):
        inp = random_input(family, rng)
        res = approximate(inp)
        assert res.monotone
        assert satisfies_boundary(res, inp)
        assert res.bound_ok and len(res.S_prime) - inp.s <= inp.epsilon ** (2 / 3) * inp.s + 1e-12
        tr = res.trace
        assert tr.order_violations == []
        assert tr.clashes == 0
        assert tr.length_reg() <= tr.length_h()
        lo, hi = monotone_bounds(res.psi.domain)
        assert all(a <= z <= b for a, z, b in zip(lo, res.psi.heights, hi))
        for rs in tr.levels.values():
            for r in rs:
                assert is_tiling_path(r.gamma_psi)
                assert len(r.excursions) <= r.d
                assert r.gamma_psi[0] == r.gamma_reg[0] and r.gamma_psi[-1] == r.gamma_reg[-1]
        if family == "slit":
            assert res.classification != GOOD_OVERLAP


def test_output_lines_are_ordered_by_level():
    rng = np.random.default_rng(5)
    for _ in range(10):
        inp = random_input("hexagon", rng)
        res = approximate(inp)
        dom = res.psi.domain
        vals = dom.full_map(res.psi.heights)
        faces = set(dom.faces)
        prev = None
        for k in sorted(set(vals.values()))[1:]:
            ring = {f: int(z >= k) for f, z in dom.boundary.items()}
            north = north_region(level_lines(vals, k)[0], faces | set(ring), ring)
            if prev is not None:
                assert all(north[f] <= prev[f] for f in faces)
            prev = north


def test_tiling_input_is_returned_unchanged():
    dom = hexagon_region(4, 4, 4)
    rng = np.random.default_rng(2)
    t = random_tiling(dom, rng)
    phi = dict(zip(dom.faces, extremal_tilings(dom)[1].heights))
    h = dict(zip(dom.faces, t.heights))
    res = approximate(AlgorithmInput(dom, phi, h, frozenset(), 0.1), validate=False)
    assert res.psi.heights == t.heights
    assert res.excess == 0


def test_malformed_inputs_rejected():
    dom = hexagon_region(3, 3, 3)
    top, bot = extremal_tilings(dom)
    phi = dict(zip(dom.faces, bot.heights))
    with pytest.raises(MalformedInputError):
        AlgorithmInput(dom, phi, dict(phi), frozenset(), 0.1).validate()
    h = {f: z + 1 for f, z in phi.items()}
    f0 = dom.faces[0]
    with pytest.raises(MalformedInputError):
        AlgorithmInput(dom, phi, h, frozenset([f0]), 0.1).validate()
    with pytest.raises(MalformedInputError):
        AlgorithmInput(dom, {f0: 0}, h, frozenset(), 0.1).validate()


def test_loop_free_input_is_not_regularised():
    dom = hexagon_region(4, 4, 4)
    top, bot = extremal_tilings(dom)
    inp = make_input(dom, dict(zip(dom.faces, bot.heights)), dict(zip(dom.faces, top.heights)), 0.1)
    pre = preprocess(inp)
    assert pre.loops == []
    assert pre.S_prime == frozenset(inp.S)
    assert all(pre.h_reg[f] == inp.h[f] for f in dom.faces)


def test_tower_around_a_hole_is_sacrificed():
    window = [(i, j) for i in range(7) for j in range(7)]
    dom = box_region(window, 0, 0)
    phi = dict.fromkeys(dom.faces, 0)
    h = dict.fromkeys(dom.faces, 1)
    h[(3, 3)] = 0
    inp = AlgorithmInput(dom, phi, h, frozenset([(3, 3)]), 0.1)
    inp.validate()
    pre = preprocess(inp, select=True)
    assert (3, 3) in pre.S_prime and len(pre.S_prime) > inp.s
    assert any(lp.erased and lp.constraining for lp in pre.loops)
    assert pre.bound_ok
    res = approximate(inp)
    assert res.classification == EXCESS_AREA and res.monotone


def test_slit_region_never_claims_good_overlap():
    dom = slit_hexagon(4, 4, 4)
    assert len(set(h for h in [extremal_tilings(dom)[0].heights, extremal_tilings(dom)[1].heights])) == 1
    rng = np.random.default_rng(7)
    for _ in range(20):
        res = approximate(random_input("slit", rng))
        assert res.gain == 0 and res.classification != GOOD_OVERLAP
