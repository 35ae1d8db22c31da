import numpy as np
import pytest

from invariants import bubble_group_failures, minimizer_lattice_failures
from tiltsos.energy import (EnergyContext, PotentialSpec, alternate_energy, bubble_groups, bubbles,
                            closest_tiling, component_factorization, delete_bubbles, gbar,
                            gbar_weights, minimize, overlap_energy, potential, zero_range_weights)
from tiltsos.lattice import TorusGeometry
from tiltsos.oracles import random_energy_instance, step_profile_instance, tilings_of
from tiltsos.sos import SOSField
from tiltsos.tiling import Surface, TorusDomain, hexagon_region


@pytest.fixture
def instances():
    rng = np.random.default_rng(11)
    return [random_energy_instance(rng) for _ in range(60)]


def test_energy_forms_agree(instances):
    for h, phi, ts in instances:
        ctx = EnergyContext(h, phi, tilings=ts)
        g = zero_range_weights(ctx)
        for t in ts[:25]:
            G = overlap_energy(ctx, t)
            assert G == alternate_energy(ctx, t)
            assert G == sum(g[f] for f in t.plaquettes)
        assert overlap_energy(ctx, phi) == 0


def test_gbar_is_nonnegative_and_zero_range(instances):
    for h, phi, ts in instances[:30]:
        ctx = EnergyContext(h, phi, tilings=ts)
        s = minimize(ctx)
        w = gbar_weights(ctx, s)
        for t in ts[:25]:
            v = gbar(ctx, t, s.gmin)
            assert v >= 0
            assert v == sum(w[f] for f in t.plaquettes)
        assert component_factorization(s, h.domain)[0] == s.count


def test_minimizers_form_a_lattice(instances):
    for h, phi, ts in instances:
        assert minimizer_lattice_failures(h, phi, ts) == []


def test_bubble_heights_add_up(instances):
    for h, phi, ts in instances:
        bs = bubbles(h, phi)
        assert sum(b.H for b in bs) == h.area - phi.area
        assert sum(len(b) for b in bs) == len(h.plaquettes ^ phi.plaquettes)


def test_bubble_group_invariants(instances):
    for i, (h, phi, ts) in enumerate(instances):
        assert bubble_group_failures(h, phi, ts, delete=i) == []


def test_tiling_has_no_bubbles():
    ts = tilings_of(hexagon_region(2, 2, 2))
    phi = ts[3]
    assert bubbles(phi, phi) == []
    assert bubble_groups(EnergyContext(phi, phi, tilings=ts)).groups == []
    assert potential(phi, tilings=ts) == 0
    assert potential(ts[7], tilings=ts) == 0


def test_step_profile_groups_and_deletion():
    h, phi, (a, b) = step_profile_instance()
    ts = tilings_of(h.domain)
    ctx = EnergyContext(h, phi, tilings=ts)
    ga = bubble_groups(ctx)
    assert len(ga.groups) == 1 and len(ga.groups[0].bubbles) == 2
    s = ga.summary
    assert s.psi_top == s.psi_bot
    first = next(bb for bb in ga.groups[0].bubbles if min(p.x for p in bb.faces) <= a + 1)
    h2 = delete_bubbles(h, phi, first.faces)
    ga2 = bubble_groups(EnergyContext(h2, phi, tilings=ts))
    assert len(ga2.groups) == 1 and len(ga2.groups[0].bubbles) == 1
    s2 = ga2.summary
    # the plain minimizer interval grows after the deletion while delta does not
    assert len(s2.psi_top.plaquettes ^ s2.psi_bot.plaquettes) > 0
    union = lambda cs: frozenset().union(*cs) if cs else frozenset()
    assert union(ga2.delta_components) <= union(ga.delta_components)
    assert bubble_group_failures(h, phi, ts, delete=0) == []


def test_potentials(instances):
    for h, phi, ts in instances[:30]:
        v1 = potential(h, tilings=ts)
        assert v1 == min(len(t.plaquettes - h.plaquettes) for t in ts)
        assert potential(h, PotentialSpec("V2", M0=1000), tilings=ts) == 0
        assert potential(h, PotentialSpec("V2", M0=1), tilings=ts) == v1
        ga = bubble_groups(EnergyContext(h, phi, tilings=ts))
        assert sum(g.V1 for g in ga.groups) == v1
        top = closest_tiling(h, tilings=ts)
        assert len(top.plaquettes - h.plaquettes) == v1


def test_general_potential_rule_is_bounded():
    h, phi, ts = step_profile_instance()
    assert potential(h, PotentialSpec("general", M0=3), tilings=tilings_of(h.domain)) >= 0
    with pytest.raises(ValueError):
        potential(h, PotentialSpec("general", M0=1, f=lambda s: len(s) + 1), tilings=tilings_of(h.domain))


def test_torus_energy_uses_shifted_tilings():
    g = TorusGeometry(2, (0.5, 0.5))
    dom = TorusDomain(g)
    h = SOSField.flat(g).to_surface(dom)
    h2 = h.with_heights((0, -1, -1, -1))
    ctx = EnergyContext(h2, h, cap=100)
    s = minimize(ctx)
    assert s.gmin <= 0
    assert all(not t.plaquettes.isdisjoint(h2.plaquettes) for t in ctx.tilings)
