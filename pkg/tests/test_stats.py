from fractions import Fraction

import numpy as np
import pytest

from tiltsos import kernels
from tiltsos.dynamics import flip_mcmc
from tiltsos.kasteleyn import RegionKasteleyn, pattern_probability
from tiltsos.lattice import TorusGeometry
from tiltsos.sos import SOSField
from tiltsos.stats import TestFunction as Pairing
from tiltsos.stats import (InsufficientSamplesError, SampleBatch, bootstrap_ci,
                           connected_correlation, cumulant_decay, edge_densities,
                           gff_increment_variance, increments, lozenge_set, pairing,
                           pattern_frequency, shifted, synthetic_gff, torus_counts,
                           variance_profile, wall_indicators, weighted_log_fit)
from tiltsos.tiling import TorusDomain, enumerate_tilings, extremal_tilings, hexagon_region


def _exact_pairing_variance(N, f):
    k = 2 * np.pi * np.arange(N) / N
    lam = 4 - 2 * np.cos(k)[:, None] - 2 * np.cos(k)[None, :]
    lam[0, 0] = np.inf
    g = np.zeros((N, N))
    L = f.grid.shape[0]
    g[:L, :L] = f.grid
    F = np.fft.fft2(g)
    return float((np.abs(F) ** 2 / lam).sum() / N ** 2)


def test_shifted_applies_seams():
    g = TorusGeometry(6, (Fraction(1, 2), Fraction(1, 3)))
    h = SOSField.flat(g).heights
    for d in [(1, 0), (0, 1), (5, 4), (6, 6)]:
        s = shifted(h, g.drops, *d)
        f = SOSField(g, h, root=False)
        assert all(s[i, j] == f.value(i + d[0], j + d[1]) for i in range(6) for j in range(6))


def test_constant_fields_have_zero_variance():
    b = SampleBatch([np.full((32, 32), 3.0)] * 5)
    prof = variance_profile(b, n_boot=50)
    assert np.all(prof.var == 0)
    with pytest.raises(InsufficientSamplesError):
        variance_profile(SampleBatch([np.zeros((16, 16))]))
    with pytest.raises(ValueError):
        SampleBatch([np.zeros((4, 4)), np.zeros((5, 5))])


def test_gff_variance_is_unbiased():
    N = 16
    rng = np.random.default_rng(0)
    f = synthetic_gff(N, 10_000, rng)
    b = SampleBatch(list(f))
    for r in (1, 2, 4, 8):
        est = increments(b, (r, 0)).var()
        assert abs(est / gff_increment_variance(N, (r, 0)) - 1) < 0.02


def test_gff_log_slope_recovered():
    N = 64
    rng = np.random.default_rng(1)
    prof = variance_profile(SampleBatch(list(synthetic_gff(N, 60, rng))), rng=rng, n_boot=200,
                            fit_range=(4, 16))
    r = np.arange(4, 17)
    exact = [gff_increment_variance(N, (x, 0)) for x in r]
    c_true = weighted_log_fit(r, exact, np.ones(len(r)))[0]
    assert abs(prof.c / c_true - 1) < 0.1
    assert prof.r2 > 0.9
    assert all(a <= v <= b for a, v, b in zip(prof.lo, prof.var, prof.hi))


def test_weighted_log_fit_exact_line():
    r = np.arange(2, 20)
    c, b, r2 = weighted_log_fit(r, 0.3 * np.log(r) + 1.0, np.ones(len(r)))
    assert c == pytest.approx(0.3) and b == pytest.approx(1.0) and r2 == pytest.approx(1.0)


def test_bootstrap_is_seeded():
    x = np.random.default_rng(0).normal(size=40)
    a = bootstrap_ci(x, np.mean, np.random.default_rng(5), 300)
    b = bootstrap_ci(x, np.mean, np.random.default_rng(5), 300)
    assert a == b and a[0] < x.mean() < a[1]


def test_pairings():
    N = 32
    rng = np.random.default_rng(2)
    b = SampleBatch(list(synthetic_gff(N, 4000, rng)))
    zero = pairing(b, Pairing(np.zeros((4, 4))))
    assert np.all(zero.values == 0)
    with pytest.raises(ValueError):
        Pairing(np.ones((2, 2)))
    f4 = Pairing.delta_pair((2, 2), (6, 2), eps=1, size=12)
    f8 = Pairing.delta_pair((2, 2), (10, 2), eps=1, size=12)
    p4, p8 = pairing(b, f4), pairing(b, f8)
    e4, e8 = _exact_pairing_variance(N, f4), _exact_pairing_variance(N, f8)
    assert abs(p4.variance / e4 - 1) < 0.1 and abs(p8.variance / e8 - 1) < 0.1
    diff_se = np.sqrt(2 / len(b)) * (p4.variance + p8.variance)
    assert abs((p8.variance - p4.variance) - (e8 - e4)) < 3 * diff_se
    # antisymmetric test function on a symmetric ensemble
    assert abs(p4.values.mean()) < 4 * p4.values.std() / np.sqrt(len(b))
    assert p4.looks_normal in (True, False)


def test_edge_densities_fixed_by_slope():
    g = TorusGeometry(3, (Fraction(1, 3), Fraction(1, 3)))
    ts = enumerate_tilings(TorusDomain(g))
    n = np.array(g.lozenge_counts, dtype=float)
    assert edge_densities(ts) == tuple(n / n.sum())
    flat = TorusGeometry(4, (0, 0))
    assert edge_densities([(SOSField.flat(flat).heights, flat.drops)]) == (1.0, 0.0, 0.0)
    b, c = wall_indicators(SOSField.flat(g).heights, g.drops)
    assert b.sum() == 3 and c.sum() == 3
    with pytest.raises(ValueError):
        torus_counts(np.array([[0, 1], [0, 0]]), (0, 0))


def test_pair_frequency_matches_kasteleyn():
    dom = hexagon_region(3, 3, 3)
    K = RegionKasteleyn.from_domain(dom)
    rng = np.random.default_rng(3)
    t = extremal_tilings(dom)[0]
    samples = []
    for _ in range(3000):
        t = flip_mcmc(t, 60, rng)
        samples.append(t)
    pool = sorted(lozenge_set(samples[0]))
    # two lozenges of one type sharing a side, from a typical tiling
    for a in pool:
        for b in pool:
            if a < b and a[0] != b[0] and a[1] != b[1] and len(set(a) | set(b)) == 4:
                p = pattern_probability(K, [a, b]).real
                freq, se = pattern_frequency(samples, [a, b])
                assert abs(freq - p) < 5 * max(se, 0.005)
                return


def test_cumulants_of_independent_fields_vanish():
    rng = np.random.default_rng(4)
    x = rng.normal(size=(200, 16, 16))
    for offs in ([(0, 0), (0, 3)], [(0, 0), (0, 2), (0, 4)]):
        est, se = connected_correlation(x, offs)
        assert abs(est) < 4 * se
    with pytest.raises(ValueError):
        connected_correlation(x, [(0, 0)] * 4)


def test_cumulants_on_uniform_tilings():
    g = TorusGeometry(24, (Fraction(1, 3), Fraction(1, 3)))
    h = SOSField.flat(g).heights.copy()
    rng = np.random.default_rng(6)
    kernels.run_flips(h, g.drops, 200 * 24 * 24, rng)
    fields = []
    for _ in range(60):
        kernels.run_flips(h, g.drops, 20 * 24 * 24, rng)
        fields.append(wall_indicators(h, g.drops)[0].astype(float))
    cd = cumulant_decay(fields, range(1, 9))
    assert cd.monotone_beyond(4)
    assert np.all(np.abs(cd.k3) <= np.abs(cd.k2) + 2 * (cd.k2_se + cd.k3_se))
