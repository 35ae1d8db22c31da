from functools import lru_cache

import numpy as np
import pytest

from tiltsos.dynamics import (BubbleCatalog, CoupledGibbs, bubble_metropolis_step,
                              bubble_transition_matrix, coupled_contraction_experiment,
                              flip_mcmc, flip_mcmc_torus, move_graph_distances, mu_phi_vector,
                              sample_phi_given_h, stationary_vector, total_variation)
from tiltsos.energy import PotentialSpec
from tiltsos.ensembles import TorusModel
from tiltsos.lattice import TorusGeometry
from tiltsos.oracles import random_energy_instance, tilings_of
from tiltsos.sos import SOSField
from tiltsos.tiling import flip_face, hexagon_region


@lru_cache(maxsize=None)
def small_model():
    return TorusModel(TorusGeometry(2, (0.5, 0.5)), 0.5, 2.0, 0.5, PotentialSpec("V1"), window=1)


def test_flip_chain_transition_matrix_is_doubly_stochastic():
    dom = hexagon_region(2, 2, 2)
    ts = tilings_of(dom)
    idx = {t.heights: i for i, t in enumerate(ts)}
    n, k = len(ts), len(dom.faces)
    P = np.zeros((n, n))
    for a, t in enumerate(ts):
        for f in dom.faces:
            for d in (1, -1):
                s = flip_face(t, f, d)
                P[a, idx[s.heights] if s is not None else a] += 1 / (2 * k)
    assert np.allclose(P.sum(axis=1), 1)
    u = np.full(n, 1 / n)
    assert np.abs(u @ P - u).max() < 1e-15


def test_flip_mcmc_seeded_and_recorded():
    t = tilings_of(hexagon_region(2, 2, 2))[0]
    seen = []
    a = flip_mcmc(t, 500, np.random.default_rng(3), record=lambda h: seen.append(tuple(h)))
    b = flip_mcmc(t, 500, np.random.default_rng(3))
    assert a == b and len(seen) == 500 and seen[-1] == a.heights


def test_flip_mcmc_torus_rejects_non_tiling():
    g = TorusGeometry(4, (0, 0))
    h = SOSField(g, np.array([[0, 1, 0, 0]] * 4))
    with pytest.raises(ValueError):
        flip_mcmc_torus(h, 10, np.random.default_rng(0))


def test_phi_given_h_sampler_targets_overlap_weights():
    rng = np.random.default_rng(8)
    h, phi, ts = random_energy_instance(rng, hexagon_region(2, 2, 2))
    alpha = 0.7
    hp = h.plaquettes
    ov = {t.heights: len(hp & t.plaquettes) for t in ts}
    ok = [k for k, v in ov.items() if v > 0]
    w = np.array([np.exp(alpha * ov[k]) for k in ok])
    w /= w.sum()
    counts = dict.fromkeys(ok, 0)
    sample_phi_given_h(h, phi, alpha, 60_000, rng, record=lambda c: counts.__setitem__(tuple(c), counts[tuple(c)] + 1))
    emp = np.array([counts[k] for k in ok], dtype=float)
    emp /= emp.sum()
    assert 0.5 * np.abs(emp - w).sum() < 0.05


@pytest.mark.parametrize("alphahat", [0.5, 2.0, 6.0])
def test_bubble_chain_stationary_and_reversible(alphahat):
    ts = tilings_of(hexagon_region(2, 2, 2))
    cat = BubbleCatalog(ts[5], ts)
    P = bubble_transition_matrix(cat, alphahat)
    assert np.allclose(P.sum(axis=1), 1, atol=1e-14)
    mu = mu_phi_vector(cat, alphahat)
    F = mu[:, None] * P
    assert np.abs(F - F.T).max() < 1e-14
    assert np.abs(stationary_vector(P) - mu).max() < 1e-8


def test_bubble_step_matches_matrix_rows():
    ts = tilings_of(hexagon_region(2, 2, 2))
    cat = BubbleCatalog(ts[0], ts)
    P = bubble_transition_matrix(cat, 1.0)
    rng = np.random.default_rng(2)
    a = 7
    start = cat.tilings[a].plaquettes
    n = 40_000
    hits = np.zeros(len(ts))
    for _ in range(n):
        hits[cat.index[bubble_metropolis_step(start, cat, 1.0, rng.random(), rng.random())]] += 1
    assert 0.5 * np.abs(hits / n - P[a]).sum() < 0.02


def test_move_graph_is_connected():
    ts = tilings_of(hexagon_region(2, 2, 2))
    D = move_graph_distances(BubbleCatalog(ts[0], ts))
    assert (D >= 0).all() and (np.diag(D) == 0).all() and (D == D.T).all()


def test_contraction_decays():
    ts = tilings_of(hexagon_region(2, 2, 2))
    res = coupled_contraction_experiment(ts[0], 6.0, 4.0, 150, np.random.default_rng(0),
                                         n_boot=200, catalog=BubbleCatalog(ts[0], ts))
    assert res.mean_dist[0] == 1
    assert res.rate < 0 and res.ci[0] <= res.rate <= res.ci[1]


def test_coupled_gibbs_exact_invariance():
    g = CoupledGibbs(small_model())
    nh, nphi = len(g.h_list), len(g.phi_list)
    A = np.zeros((nh, nphi))       # phi | h
    for i, (js, cum) in enumerate(g.phi_given_h):
        A[i, js] = np.diff(np.concatenate([[0.0], cum]))
    B = np.zeros((nphi, nh))       # h | phi
    for j, (hs, cum) in enumerate(g._hp):
        B[j, hs] = np.diff(np.concatenate([[0.0], cum]))
    joint = g.joint_table()
    assert abs(sum(joint.values()) - 1) < 1e-12
    ph = np.zeros(nh)
    for (i, j), p in joint.items():
        ph[i] += p
    K = A @ B
    assert np.abs(ph @ K - ph).max() < 1e-12


def test_coupled_gibbs_samples_joint():
    g = CoupledGibbs(small_model())
    s = g.run(20_000, np.random.default_rng(1))
    assert total_variation(s, g.joint_table()) < 0.05
    t = g.run(50, np.random.default_rng(1))
    assert np.array_equal(t, s[:50])


def test_single_hexagon_flip_chain_is_fair():
    ts = tilings_of(hexagon_region(1, 1, 1))
    rng = np.random.default_rng(0)
    t, hits = ts[0], 0
    for _ in range(4000):
        t = flip_mcmc(t, 3, rng)
        hits += t.heights == ts[0].heights
    assert abs(hits / 4000 - 0.5) < 0.04


def test_add_then_erase_and_acceptance():
    ts = tilings_of(hexagon_region(2, 2, 2))
    cat = BubbleCatalog(ts[0], ts)
    phi = cat.phi.plaquettes
    k = next(i for i, b in enumerate(cat.bubbles) if len(b) == 6)
    kind, new = cat.move(phi, k)
    assert kind == "add"
    assert cat.move(new, k) == ("erase", phi)
    u = cat.cum[k] - 1e-12
    assert cat.pick(u) == k
    assert bubble_metropolis_step(phi, cat, 2.0, u, np.exp(-6) * 0.999) == new
    assert bubble_metropolis_step(phi, cat, 2.0, u, np.exp(-6) * 1.001) == phi


def test_identical_coupled_starts_stay_together():
    ts = tilings_of(hexagon_region(2, 2, 2))
    cat = BubbleCatalog(ts[0], ts)
    res = coupled_contraction_experiment(ts[0], 6.0, 2.0, 10, np.random.default_rng(0), n_times=5,
                                         n_boot=10, catalog=cat, starts=[(3, 3)])
    assert np.all(res.mean_dist == 0)


def test_phi_given_h_at_zero_alpha_is_uniform_flip_chain():
    rng = np.random.default_rng(3)
    h, phi, ts = random_energy_instance(rng, hexagon_region(2, 2, 2))
    # with alpha = 0 only the disjointness constraint remains
    counts = {}
    sample_phi_given_h(h, phi, 0.0, 40_000, rng,
                       record=lambda c: counts.__setitem__(tuple(c), counts.get(tuple(c), 0) + 1))
    meet = [t for t in ts if not t.plaquettes.isdisjoint(h.plaquettes)]
    assert set(counts) <= {t.heights for t in meet}
    freq = np.array([counts.get(t.heights, 0) for t in meet]) / 40_000
    assert 0.5 * np.abs(freq - 1 / len(meet)).sum() < 0.06
