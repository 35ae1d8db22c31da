from functools import lru_cache

import numpy as np
import pytest
from scipy.special import logsumexp

from tiltsos.energy import PotentialSpec
from tiltsos.ensembles import (FiniteEnsemble, TorusModel, expansion_integral, grimmett_check,
                               three_measure_check)
from tiltsos.lattice import TorusGeometry


@lru_cache(maxsize=None)
def model(lam=0.0, window=1):
    return TorusModel(TorusGeometry(2, (0.5, 0.5)), 2.0, 2.0, lam, PotentialSpec("V1"), window=window)


def test_finite_ensemble_normalises():
    e = FiniteEnsemble(list(range(5)), [0.0, 1.0, -2.0, 3.0, 0.5])
    assert abs(e.probs.sum() - 1) < 1e-12
    assert e.expect(lambda s: 1.0) == pytest.approx(1.0, abs=1e-12)


def test_joint_law_normalises():
    m = model(0.5)
    logs = [m.log_joint(h, t) for h in m.surfaces for t in m.data(h).tilings]
    lZ = logsumexp(logs)
    assert abs(np.exp(np.array(logs) - lZ).sum() - 1) < 1e-12
    # summing the joint over phi gives the SOS weight of h
    for h in m.surfaces[:30]:
        assert m.log_marginal_h(h) == pytest.approx(m.log_sos(h), abs=1e-12)


def test_mu_integral_positive_and_decreasing():
    m = model()
    for h in m.surfaces[::7]:
        vals = [m.integral_mu(h, a) for a in (0.5, 1.0, 2.0, 4.0)]
        assert all(v >= -1e-15 for v in vals)
        assert all(a >= b - 1e-15 for a, b in zip(vals, vals[1:]))
        d = m.data(h)
        assert (d.gbar() >= 0).all()
        assert d.max_overlap - d.overlaps.max() == 0


def test_mu_closed_form_matches_quadrature():
    m = model()
    for h in m.surfaces[::5]:
        g = m.data(h).gbar()
        closed = expansion_integral(np.zeros_like(g), g, 2.0, "closed")
        quad, tail = expansion_integral(np.zeros_like(g), g, 2.0, "quadrature")
        assert tail < 1e-8
        assert abs(closed - quad) < 1e-6
        assert closed == pytest.approx(m.integral_mu(h, 2.0), abs=1e-12)


def test_grimmett_residual():
    m = model()
    worst = max(grimmett_check(m.data(h).gbar(), beta=m.alpha) for h in m.surfaces)
    assert worst < 1e-6
    with pytest.raises(ValueError):
        grimmett_check(np.array([1.0, 2.0]))


def test_overlap_energy_of_best_tiling_not_above_phi():
    m = model()
    for phi in m.rooted_tilings():
        for h in m.surfaces_meeting(phi)[:20]:
            d = m.data(h)
            assert d.overlaps[d.index[phi.heights]] - d.max_overlap <= 0


@pytest.mark.parametrize("lam", [0.0, 0.5])
def test_three_measure_decomposition(lam):
    m = model(lam)
    res, rows = three_measure_check(m, m.rooted_tilings())
    assert res < 1e-6
    assert len(rows) == len(m.rooted_tilings())


def test_three_measures_closed_form_agrees_with_quadrature():
    m = model(0.5)
    phi = m.rooted_tilings()[0]
    q = m.three_integrals(phi, "quadrature")
    c = m.three_integrals(phi, "closed")
    assert np.allclose(q, c, atol=1e-6)


def test_state_space_guard():
    with pytest.raises(ValueError):
        TorusModel(TorusGeometry(4, (0, 0)), 1, 1, window=3, max_states=1000)
