"""Property suites run by ``tiltsos verify``: quick versions of the invariants, one suite per module.

Each check returns ``(ok, detail)``; ``run_suites`` collects them into a
plain dict, leaving file output to the CLI.
"""

from __future__ import annotations

import math
import traceback
from itertools import combinations

import numpy as np


# -- lattice ---------------------------------------------------------------

def _lattice_projection(rng):
    from .lattice import Plaquette, project_111, lozenge_from_tris
    bad = 0
    for _ in range(200):
        o, x, y, z = int(rng.integers(3)), *map(int, rng.integers(-5, 6, size=3))
        p = Plaquette(o, x, y, z)
        q = Plaquette(o, x + 1, y + 1, z + 1)
        b1, w1 = project_111(p)
        b2, w2 = project_111(q)
        bad += (b1, w1) != (b2, w2) or lozenge_from_tris(b1, w1) != o
    return bad == 0, f"{bad} projection failures"


def _lattice_wrap(rng):
    from .lattice import TorusGeometry
    g = TorusGeometry(5, (0.4, 0.2))
    bad = 0
    for _ in range(200):
        x1, x2 = map(int, rng.integers(-20, 20, size=2))
        r1, r2, off = g.wrap_face(x1, x2)
        s1, s2, off2 = g.wrap_face(x1 + 5, x2)
        bad += (r1, r2) != (s1, s2) or off2 != off - g.drops[0]
    return bad == 0, f"{bad} wrap failures"


# -- tiling ------------------------------------------------------------------

def _tiling_enumeration(rng):
    from .tiling import enumerate_tilings, hexagon_region
    got = {s: len(enumerate_tilings(hexagon_region(*s))) for s in [(1, 1, 1), (2, 2, 2), (2, 2, 3)]}
    want = {(1, 1, 1): 2, (2, 2, 2): 20, (2, 2, 3): 50}
    return got == want, str(got)


def _tiling_lattice(rng):
    from .oracles import small_regions, tilings_of
    bad = 0
    for dom in small_regions():
        ts = tilings_of(dom)
        keys = {t.heights for t in ts}
        for _ in range(30):
            a, b = ts[int(rng.integers(len(ts)))], ts[int(rng.integers(len(ts)))]
            bad += a.join(b).heights not in keys or a.meet(b).heights not in keys
    return bad == 0, f"{bad} join/meet failures"


def _tiling_area(rng):
    from .oracles import small_regions, tilings_of
    bad = 0
    for dom in small_regions():
        areas = {len(t.plaquettes) for t in tilings_of(dom)}
        bad += len(areas) != 1
    return bad == 0, "all tilings of a region have equal area" if not bad else f"{bad} regions differ"


# -- kasteleyn ---------------------------------------------------------------

def _kasteleyn_counts(rng):
    from .kasteleyn import count_region
    from .oracles import small_regions, tilings_of
    bad = [d.name for d in small_regions() if count_region(d) != len(tilings_of(d))]
    return not bad, f"mismatches: {bad}"


def _kasteleyn_fourier(rng):
    from .kasteleyn import KasteleynMatrix, det_dense, det_torus
    worst = 0.0
    for N in (2, 3, 4):
        w = tuple(rng.uniform(0.3, 2.0, size=3))
        ph = tuple(rng.uniform(0, 2 * math.pi, size=2))
        K = KasteleynMatrix(N, w, ph)
        d = det_dense(K.dense())
        worst = max(worst, abs(det_torus(K) - d) / abs(d))
    return worst < 1e-10, f"max relative error {worst:.3g}"


def _kasteleyn_empty_pattern(rng):
    from .kasteleyn import RegionKasteleyn, pattern_probability
    from .tiling import hexagon_region
    p = pattern_probability(RegionKasteleyn.from_domain(hexagon_region(2, 2, 2)), [])
    return abs(p - 1) < 1e-14, f"P(empty) = {p}"


def _kasteleyn_micro(rng):
    from .kasteleyn import TriangleWeights, microcanonical_extract, sector_monomial, sector_table
    p = (1 / 3, 1 / 3, 1 / 3)
    w = TriangleWeights(p).w
    want = sector_monomial(3, 1, 1, w) * sector_table(3)[(1, 1)]
    got = microcanonical_extract(3, p)
    rel = abs(got - want) / want
    return rel < 1e-8, f"relative error {rel:.3g}"


# -- energy ------------------------------------------------------------------

def _energy_minimizer_lattice(rng):
    from .energy import EnergyContext, minimize, overlap_energy
    from .oracles import random_energy_instance
    bad = 0
    for _ in range(20):
        h, phi, ts = random_energy_instance(rng)
        ctx = EnergyContext(h, phi, tilings=ts)
        s = minimize(ctx)
        for a, b in combinations(s.minimizers[:8], 2):
            bad += overlap_energy(ctx, a.join(b)) != s.gmin or overlap_energy(ctx, a.meet(b)) != s.gmin
    return bad == 0, f"{bad} pairs left the minimizer set"


def _energy_bubble_sum(rng):
    from .energy import bubbles
    from .oracles import random_energy_instance
    bad = 0
    for _ in range(20):
        h, phi, _ = random_energy_instance(rng)
        bad += sum(b.H for b in bubbles(h, phi)) != len(h.plaquettes) - len(phi.plaquettes)
    return bad == 0, f"{bad} instances with sum H(B) != |h| - |phi|"


def _energy_group_bounds(rng):
    from .energy import EnergyContext, bubble_groups
    from .oracles import random_energy_instance
    bad = 0
    for _ in range(20):
        h, phi, ts = random_energy_instance(rng)
        ga = bubble_groups(EnergyContext(h, phi, tilings=ts))
        for g in ga.groups:
            bad += g.area > 5 * g.size
    return bad == 0, f"{bad} groups over the footprint bound"


# -- ensembles ---------------------------------------------------------------

def _small_model(lam=0.0):
    from .energy import PotentialSpec
    from .ensembles import TorusModel
    from .lattice import TorusGeometry
    return TorusModel(TorusGeometry(2, (0.5, 0.5)), 2.0, 2.0, lam, PotentialSpec("V1"), window=1)


def _ensembles_grimmett(rng):
    from .ensembles import grimmett_check
    m = _small_model()
    worst = max(grimmett_check(m.data(h).gbar(), beta=m.alpha) for h in m.surfaces[:40])
    return worst < 1e-6, f"max residual {worst:.3g}"


def _ensembles_three_measures(rng):
    from .ensembles import three_measure_check
    m = _small_model(0.5)
    res, _ = three_measure_check(m, m.rooted_tilings())
    return res < 1e-6, f"max deviation {res:.3g}"


# -- sos ---------------------------------------------------------------------

def _sos_slope_preserved(rng):
    from .lattice import TorusGeometry
    from .sos import SOSField, SOSParams, glauber_run
    g = TorusGeometry(8, (0.5, 0.25))
    h = SOSField.flat(g)
    before = h.loop_sums()
    h = glauber_run(h, SOSParams(0.7), 5000, rng)
    after = h.loop_sums()
    ok = all(np.array_equal(a, b) for a, b in zip(before, after))
    return ok, "loop sums unchanged" if ok else "slope changed"


def _sos_backends_agree(rng):
    from . import kernels
    if kernels.BACKEND != "cython":
        return True, "compiled kernel not built; only the Python backend exists"
    a = np.zeros((6, 6), dtype=np.int64)
    b = a.copy()
    kernels.run_glauber(a, (1, 2), 0.5, 4000, np.random.default_rng(7), "cython")
    kernels.run_glauber(b, (1, 2), 0.5, 4000, np.random.default_rng(7), "python")
    return bool(np.array_equal(a, b)), "identical trajectories"


# -- dynamics ----------------------------------------------------------------

def _dynamics_bubble_stationary(rng):
    from .dynamics import BubbleCatalog, bubble_transition_matrix, mu_phi_vector, stationary_vector
    from .oracles import tilings_of
    from .tiling import hexagon_region
    ts = tilings_of(hexagon_region(2, 2, 2))
    cat = BubbleCatalog(ts[0], ts)
    P = bubble_transition_matrix(cat, 2.0)
    err = float(np.abs(stationary_vector(P) - mu_phi_vector(cat, 2.0)).max())
    return err < 1e-8, f"max error {err:.3g}"


def _dynamics_flip_uniform(rng):
    from .dynamics import flip_mcmc
    from .oracles import tilings_of
    from .tiling import hexagon_region
    ts = tilings_of(hexagon_region(1, 2, 2))
    idx = {t.heights: i for i, t in enumerate(ts)}
    cnt = np.zeros(len(ts))
    t = ts[0]
    for _ in range(3000):
        t = flip_mcmc(t, 5, rng)
        cnt[idx[t.heights]] += 1
    tv = 0.5 * float(np.abs(cnt / cnt.sum() - 1 / len(ts)).sum())
    return tv < 0.06, f"TV to uniform {tv:.3f}"


# -- approx ------------------------------------------------------------------

def _approx_postconditions(rng):
    from .approx import approximate, random_input, satisfies_boundary
    bad = 0
    for fam in ("hexagon", "rectangle", "slit"):
        for _ in range(10):
            inp = random_input(fam, rng)
            res = approximate(inp)
            grow = len(res.S_prime) - len(inp.S)
            bad += not res.monotone or not satisfies_boundary(res, inp) or grow > inp.epsilon ** (2 / 3) * res.s
    return bad == 0, f"{bad} failures"


def _approx_greedy_shortens(rng):
    from .approx import figure_path, greedy_level_line, is_tiling_path
    path = figure_path()
    out, exc = greedy_level_line(path)
    ok = len(out) <= len(path) and is_tiling_path(out) and (out[0], out[-1]) == (path[0], path[-1])
    return ok, f"{len(path) - 1} steps in, {len(out) - 1} out, {len(exc)} excursions"


# -- stats -------------------------------------------------------------------

def _stats_gff_log_law(rng):
    from .stats import SampleBatch, synthetic_gff, variance_profile
    N = 32
    f = synthetic_gff(N, 40, rng)
    prof = variance_profile(SampleBatch(list(f)), rng=rng, n_boot=200, fit_range=(2, 8))
    return prof.r2 > 0.9 and 0.2 < prof.c < 0.45, f"slope {prof.c:.3f}, R2 {prof.r2:.3f}"


def _stats_bootstrap_reproducible(rng):
    from .stats import bootstrap_ci
    x = rng.normal(size=50)
    a = bootstrap_ci(x, np.mean, np.random.default_rng(3), 200, 0.95)
    b = bootstrap_ci(x, np.mean, np.random.default_rng(3), 200, 0.95)
    return a == b, "same seed, same interval"


SUITES = {
    "lattice": {"projection": _lattice_projection, "wrap": _lattice_wrap},
    "tiling": {"enumeration": _tiling_enumeration, "join_meet": _tiling_lattice, "area": _tiling_area},
    "kasteleyn": {"region_counts": _kasteleyn_counts, "fourier_vs_lu": _kasteleyn_fourier,
                  "empty_pattern": _kasteleyn_empty_pattern, "microcanonical": _kasteleyn_micro},
    "energy": {"minimizer_lattice": _energy_minimizer_lattice, "bubble_H_sum": _energy_bubble_sum,
               "group_footprint": _energy_group_bounds},
    "ensembles": {"grimmett": _ensembles_grimmett, "three_measures": _ensembles_three_measures},
    "sos": {"slope_preserved": _sos_slope_preserved, "backends_agree": _sos_backends_agree},
    "dynamics": {"bubble_stationary": _dynamics_bubble_stationary, "flip_uniform": _dynamics_flip_uniform},
    "approx": {"postconditions": _approx_postconditions, "greedy_shortens": _approx_greedy_shortens},
    "stats": {"gff_log_law": _stats_gff_log_law, "bootstrap_reproducible": _stats_bootstrap_reproducible},
}


def run_suites(names, seed: int = 0) -> dict:
    """{suite: {check: {"status": pass|fail|error, "detail": str}}}."""
    out = {}
    for k, name in enumerate(names):
        res = {}
        for j, (check, fn) in enumerate(SUITES[name].items()):
            rng = np.random.default_rng([seed, k, j])
            try:
                ok, detail = fn(rng)
                res[check] = {"status": "pass" if ok else "fail", "detail": detail}
            except Exception as exc:  # a crashing check is a failed check
                res[check] = {"status": "fail", "detail": f"{type(exc).__name__}: {exc}",
                              "traceback": traceback.format_exc(limit=3)}
        out[name] = res
    return out
