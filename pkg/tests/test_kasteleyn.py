import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from tiltsos.kasteleyn import (KasteleynMatrix, RegionKasteleyn, SingularKasteleynError,
                               TriangleWeights, count_region, det_dense, det_torus,
                               instanton_decomposition, inverse_dense, inverse_entry,
                               inverse_torus, microcanonical_extract, pattern_probability,
                               sector_monomial, sector_table)
from tiltsos.oracles import l_region, small_regions, tilings_of
from tiltsos.stats import lozenge_set, pattern_frequency
from tiltsos.tiling import enumerate_tilings, hexagon_region, slit_hexagon, slotted_hexagon


@pytest.mark.parametrize("dom", list(small_regions()) + [slit_hexagon(3, 3, 3), l_region(4, 3, 2, 2)],
                         ids=lambda d: d.name)
def test_region_count_matches_enumeration(dom):
    assert count_region(dom) == len(enumerate_tilings(dom))


def test_count_from_triangle_set():
    dom = hexagon_region(2, 2, 2)
    tris = enumerate_tilings(dom)[0].triangles()
    assert count_region(set(tris)) == 20


def test_weighted_determinant_is_the_weighted_sum():
    dom = hexagon_region(2, 2, 2)
    w = (1.0, 0.7, 1.9)
    want = sum(np.prod([w[i] ** n for i, n in enumerate(t.counts())]) for t in enumerate_tilings(dom))
    got = abs(RegionKasteleyn.from_domain(dom, w).det())
    assert got == pytest.approx(want, rel=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 6), st.floats(0.2, 3.0), st.floats(0.2, 3.0), st.floats(0.2, 3.0),
       st.floats(0.0, 2 * math.pi), st.floats(0.0, 2 * math.pi))
def test_fourier_determinant_matches_lu(N, a, b, c, t1, t2):
    K = KasteleynMatrix(N, (a, b, c), (t1, t2))
    d = det_dense(K.dense())
    f = det_torus(K)
    if abs(d) < 1e-9 * max(a, b, c) ** (N * N):
        return  # numerically singular draw
    assert abs(f - d) / abs(d) < 1e-10


def test_zero_mode_gives_zero_and_singular_inverse():
    K = KasteleynMatrix(3, (1, 1, 1))
    assert K.zero_modes()
    assert det_torus(K) == 0
    assert abs(det_dense(K.dense())) < 1e-10
    with pytest.raises(SingularKasteleynError):
        inverse_entry(K, (0, 0), (0, 0))


def test_fourier_inverse_matches_dense_inverse():
    K = KasteleynMatrix(4, (1.0, 0.8, 1.3), (0.3, 1.1))
    assert np.allclose(inverse_torus(K), inverse_dense(K.dense()), atol=1e-12)


def test_pattern_probabilities_match_enumeration():
    dom = hexagon_region(2, 2, 3)
    ts = enumerate_tilings(dom)
    K = RegionKasteleyn.from_domain(dom)
    pool = sorted(set().union(*(lozenge_set(t) for t in ts)))
    rng = np.random.default_rng(0)
    checked = 0
    while checked < 40:
        k = int(rng.integers(1, 4))
        pat = [pool[i] for i in rng.choice(len(pool), size=k, replace=False)]
        tris = [t for e in pat for t in e]
        if len(set(tris)) != len(tris):
            with pytest.raises(ValueError):
                pattern_probability(K, pat)
            continue
        p = pattern_probability(K, pat)
        assert abs(p - pattern_frequency(ts, pat)[0]) < 1e-10
        checked += 1
    assert pattern_probability(K, []) == 1


def test_torus_single_edge_densities():
    # each white vertex is covered once, so the three edge probabilities sum to 1
    K = KasteleynMatrix(5, (1.0, 0.6, 0.9), (0.2, 0.5))
    ps = [pattern_probability(K, [(b, (0, 0))]) for b in ((0, 0), (1, 0), (0, 1))]
    assert abs(sum(ps) - 1) < 1e-12


def test_triangle_weights():
    tw = TriangleWeights((0.5, 0.25, 0.25))
    assert tw.w[0] == 1.0 and tw.w[1] == pytest.approx(math.sin(math.pi / 4))
    for z1, z2 in tw.newton_zeros():
        assert abs(z1) == pytest.approx(1) and abs(z2) == pytest.approx(1)
    with pytest.raises(ValueError):
        TriangleWeights((0.5, 0.5, 0.0))


@pytest.mark.parametrize("N", [2, 3])
def test_instanton_signs(N):
    tab = instanton_decomposition(N)
    assert tab.residual < 1e-8
    assert sum(tab.Z.values()) == sum(sector_table(N).values())
    w = (1.0, 0.9, 1.2)
    assert tab.det_prediction(w) == pytest.approx(det_dense(KasteleynMatrix(N, w).dense()).real, rel=1e-10)


def test_microcanonical_extraction_matches_sector_count():
    p = (1 / 3, 1 / 3, 1 / 3)
    w = TriangleWeights(p).w
    want = sector_monomial(3, 1, 1, w) * sector_table(3)[(1, 1)]
    got = microcanonical_extract(3, p)
    assert abs(got - want) / want < 1e-8
    with pytest.raises(ValueError):
        microcanonical_extract(2, (1 / 2, 1 / 4, 1 / 4))


def test_one_by_one_torus_is_the_newton_polynomial():
    a, b, c, t1, t2 = 1.0, 0.7, 1.3, 0.4, 2.2
    K = KasteleynMatrix(1, (a, b, c), (t1, t2))
    want = a + b * np.exp(1j * t1) + c * np.exp(1j * t2)
    assert det_torus(K) == pytest.approx(want, abs=1e-14)
    assert det_dense(K.dense()) == pytest.approx(want, abs=1e-14)


def test_single_hexagon():
    dom = hexagon_region(1, 1, 1)
    assert count_region(dom) == 2
    K = RegionKasteleyn.from_domain(dom)
    e = sorted(lozenge_set(enumerate_tilings(dom)[0]))[0]
    assert pattern_probability(K, [e]).real == pytest.approx(0.5, abs=1e-14)


@pytest.mark.parametrize("N", [2, 4])
def test_fourier_inverse_is_an_inverse(N):
    K = KasteleynMatrix(N, (1.0, 0.8, 1.3), (0.3, 1.1))
    inv = inverse_torus(K)
    assert np.abs(K.dense() @ inv - np.eye(N * N)).max() < 1e-10
    assert inverse_entry(K, (3, 1), (1, 0)) == pytest.approx(inverse_entry(K, (2, 1), (0, 0)), abs=1e-14)
