"""Markov chains on tilings and on (h, phi) pairs.

All randomness comes from ``numpy.random.Generator`` objects passed in by
the caller, so equal seeds give equal trajectories.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass

import numpy as np

from . import kernels
from .energy import plaquette_components
from .lattice import plaquette_edges
from .sos import SOSField
from .tiling import (
    DEFAULT_CAP, LozengeTiling, Surface, TorusDomain, enumerate_tilings, surface_from_plaquettes,
)


# --------------------------------------------------------------------------
# flips

class _FlipTables:
    """Neighbour constraints of each free face: z <= h[j] + off (pred) / z >= h[j] + off (succ)."""

    def __init__(self, domain):
        self.domain = domain
        n = len(domain.faces)
        self.upper = [[] for _ in range(n)]
        self.lower = [[] for _ in range(n)]
        for i in range(n):
            for j, off, sign in domain.neighbors(i):
                (self.lower if sign > 0 else self.upper)[i].append((j, off))
        self.fixed = [domain.fixed_bounds(i) for i in range(n)]
        # plaquettes touched by a move at face i: its own horizontal and the walls of its edges
        self.local_edges = [[] for _ in range(n)]
        for k, (ia, ca, ib, cb, o, wx, wy) in enumerate(domain.edges):
            if ia >= 0:
                self.local_edges[ia].append(k)
            if ib >= 0 and ib != ia:
                self.local_edges[ib].append(k)

    def allowed(self, h, i, z) -> bool:
        for j, off in self.upper[i]:
            if z > h[j] + off:
                return False
        for j, off in self.lower[i]:
            if z < h[j] + off:
                return False
        lo, hi = self.fixed[i]
        return (lo is None or z >= lo) and (hi is None or z <= hi)

    def local_plaquettes(self, h, i):
        from .lattice import Plaquette, HORIZONTAL
        d = self.domain
        out = [Plaquette(HORIZONTAL, *d.faces[i], h[i])]
        for k in self.local_edges[i]:
            ia, ca, ib, cb, o, wx, wy = d.edges[k]
            za = h[ia] + ca if ia >= 0 else ca
            zb = h[ib] + cb if ib >= 0 else cb
            lo, hi = min(za, zb), max(za, zb)
            for z in range(lo, hi):
                out.append(d.canon(Plaquette(o, wx, wy, z)))
        return out


def flip_mcmc(t: LozengeTiling, steps: int, rng: np.random.Generator, record=None) -> LozengeTiling:
    """Uniform-target flip chain: pick a face and a direction, apply if monotone.

    ``record`` (a callable) is invoked with the heights after every step.
    """
    tab = _FlipTables(t.domain)
    h = list(t.heights)
    n = len(h)
    faces = rng.integers(0, n, size=steps)
    ups = rng.random(steps) < 0.5
    for i, up in zip(faces.tolist(), ups.tolist()):
        z = h[i] + (1 if up else -1)
        if tab.allowed(h, i, z):
            h[i] = z
        if record is not None:
            record(h)
    return LozengeTiling(t.domain, tuple(h))


def flip_mcmc_torus(h: SOSField, steps: int, rng: np.random.Generator, backend=None) -> SOSField:
    """The same chain on a large torus tiling, through the compiled kernel."""
    if not h.is_monotone():
        raise ValueError("initial field must be monotone")
    out = h.copy()
    kernels.run_flips(out.heights, h.geometry.drops, steps, rng, backend)
    return out


def sample_phi_given_h(h: Surface, phi0: LozengeTiling, alpha: float, steps: int,
                       rng: np.random.Generator, record=None) -> LozengeTiling:
    """Metropolis flips with acceptance min(1, exp(alpha * change of |h & phi|)).

    Moves that would leave phi disjoint from h are rejected, so the chain
    stays on tilings meeting h.
    """
    hp = h.plaquettes
    tab = _FlipTables(phi0.domain)
    cur = list(phi0.heights)
    overlap = len(hp & phi0.plaquettes)
    if overlap == 0:
        raise ValueError("initial tiling does not meet h")
    n = len(cur)
    faces = rng.integers(0, n, size=steps)
    ups = rng.random(steps) < 0.5
    us = rng.random(steps)
    for i, up, u in zip(faces.tolist(), ups.tolist(), us.tolist()):
        z = cur[i] + (1 if up else -1)
        if tab.allowed(cur, i, z):
            before = sum(1 for p in tab.local_plaquettes(cur, i) if p in hp)
            old = cur[i]
            cur[i] = z
            after = sum(1 for p in tab.local_plaquettes(cur, i) if p in hp)
            delta = after - before
            if overlap + delta <= 0 or (delta < 0 and u >= math.exp(alpha * delta)):
                cur[i] = old
            else:
                overlap += delta
        if record is not None:
            record(cur)
    return LozengeTiling(phi0.domain, tuple(cur))


# --------------------------------------------------------------------------
# bubble Metropolis for mu given phi

class BubbleCatalog:
    """Candidate bubbles: connected pieces of phi ^ psi' over enumerated tilings psi'."""

    def __init__(self, phi: LozengeTiling, tilings=None, size_cap: int | None = None):
        self.phi = phi
        self.domain = phi.domain
        self.tilings = list(tilings) if tilings is not None else enumerate_tilings(phi.domain)
        pp = phi.plaquettes
        found = set()
        for t in self.tilings:
            for c in plaquette_components(self.domain, pp ^ t.plaquettes):
                if size_cap is None or len(c) <= size_cap:
                    found.add(c)
        self.bubbles = sorted(found, key=lambda c: (len(c), sorted(c)))
        self.sizes = np.array([len(b) for b in self.bubbles], dtype=float)
        self.rate = float(self.sizes.sum())
        self.cum = np.cumsum(self.sizes) / self.rate
        self.index = {t.plaquettes: k for k, t in enumerate(self.tilings)}
        self._wrap = (self.domain.geometry.wrap_edge if isinstance(self.domain, TorusDomain)
                      else (lambda e: e))

    def edges_of(self, plaqs):
        return {self._wrap(e) for p in plaqs for e in plaquette_edges(p)}

    def pick(self, u: float) -> int:
        return int(np.searchsorted(self.cum, u, side="right"))

    def move(self, psi_plaqs: frozenset, k: int):
        """(kind, new plaquettes) of the move with bubble k: kind in erase/add/none."""
        B = self.bubbles[k]
        diff = self.phi.plaquettes ^ psi_plaqs
        comps = plaquette_components(self.domain, diff) if diff else []
        if B in comps:
            return "erase", psi_plaqs ^ B
        if B.isdisjoint(diff) and self.edges_of(B).isdisjoint(self.edges_of(diff)):
            new = psi_plaqs ^ B
            if new in self.index:
                return "add", new
        return "none", psi_plaqs


def bubble_metropolis_step(psi_plaqs: frozenset, catalog: BubbleCatalog, alphahat: float,
                           u_pick: float, u_acc: float) -> frozenset:
    """One clock event with pre-drawn uniforms."""
    kind, new = catalog.move(psi_plaqs, catalog.pick(u_pick))
    if kind == "erase":
        return new
    if kind == "add":
        B = len(new ^ psi_plaqs)
        return new if u_acc < math.exp(-0.5 * alphahat * B) else psi_plaqs
    return psi_plaqs


def bubble_transition_matrix(catalog: BubbleCatalog, alphahat: float) -> np.ndarray:
    """Jump-chain transition matrix over the enumerated tilings."""
    n = len(catalog.tilings)
    P = np.zeros((n, n))
    w = catalog.sizes / catalog.rate
    for a, t in enumerate(catalog.tilings):
        tp = t.plaquettes
        for k in range(len(catalog.bubbles)):
            kind, new = catalog.move(tp, k)
            if kind == "none":
                P[a, a] += w[k]
                continue
            b = catalog.index[new]
            acc = 1.0 if kind == "erase" else math.exp(-0.5 * alphahat * len(catalog.bubbles[k]))
            P[a, b] += w[k] * acc
            P[a, a] += w[k] * (1 - acc)
    return P


def mu_phi_vector(catalog: BubbleCatalog, alphahat: float) -> np.ndarray:
    pp = catalog.phi.plaquettes
    lw = np.array([-0.5 * alphahat * len(pp ^ t.plaquettes) for t in catalog.tilings])
    w = np.exp(lw - lw.max())
    return w / w.sum()


def stationary_vector(P: np.ndarray, tol: float = 1e-14, max_iter: int = 200_000) -> np.ndarray:
    """Power iteration on the lazy chain (P + I) / 2."""
    n = P.shape[0]
    Q = 0.5 * (P + np.eye(n))
    v = np.full(n, 1.0 / n)
    for _ in range(max_iter):
        nv = v @ Q
        if np.abs(nv - v).sum() < tol:
            return nv
        v = nv
    return v


def move_graph_distances(catalog: BubbleCatalog) -> np.ndarray:
    """All-pairs number of add/erase moves (BFS in the move graph)."""
    n = len(catalog.tilings)
    adj = [set() for _ in range(n)]
    for a, t in enumerate(catalog.tilings):
        for k in range(len(catalog.bubbles)):
            kind, new = catalog.move(t.plaquettes, k)
            if kind != "none":
                b = catalog.index[new]
                adj[a].add(b)
                adj[b].add(a)
    D = np.full((n, n), -1, dtype=int)
    for s in range(n):
        D[s, s] = 0
        dq = deque([s])
        while dq:
            x = dq.popleft()
            for y in adj[x]:
                if D[s, y] < 0:
                    D[s, y] = D[s, x] + 1
                    dq.append(y)
    return D


@dataclass
class ContractionResult:
    times: np.ndarray
    mean_dist: np.ndarray
    rate: float
    ci: tuple
    trials: int


def _fit_rate(times, mean):
    ok = mean > 0
    if ok.sum() < 2:
        return -math.inf
    x, y = times[ok], np.log(mean[ok])
    return float(np.polyfit(x, y, 1)[0])


def coupled_contraction_experiment(phi: LozengeTiling, alphahat: float, t_horizon: float,
                                   trials: int, rng: np.random.Generator, n_times: int = 21,
                                   n_boot: int = 1000, catalog: BubbleCatalog | None = None,
                                   starts=None) -> ContractionResult:
    """Synchronised pairs from unit-distance starts; exponential fit of E[dist].

    Each trial draws a random adjacent pair (psi, psi') of the move graph,
    runs both chains off the same Poisson clock events and uniforms, and
    records the move-graph distance on a time grid.  The decay rate is the
    slope of log E[dist] against t; its CI is a bootstrap over trials.
    """
    cat = catalog or BubbleCatalog(phi)
    D = move_graph_distances(cat)
    times = np.linspace(0, t_horizon, n_times)
    if starts is None:
        pairs = np.argwhere(D == 1)
    else:
        pairs = np.array(starts)
    dists = np.zeros((trials, n_times))
    for tr in range(trials):
        a, b = pairs[rng.integers(len(pairs))]
        x, y = cat.tilings[a].plaquettes, cat.tilings[b].plaquettes
        t = 0.0
        gi = 0
        while gi < n_times:
            dt = rng.exponential(1.0 / cat.rate)
            while gi < n_times and times[gi] < t + dt:
                dists[tr, gi] = D[cat.index[x], cat.index[y]]
                gi += 1
            t += dt
            up, ua = rng.random(), rng.random()
            x = bubble_metropolis_step(x, cat, alphahat, up, ua)
            y = bubble_metropolis_step(y, cat, alphahat, up, ua)
    mean = dists.mean(axis=0)
    rate = _fit_rate(times, mean)
    boots = []
    for _ in range(n_boot):
        idx = rng.integers(0, trials, size=trials)
        boots.append(_fit_rate(times, dists[idx].mean(axis=0)))
    boots = np.array(boots)
    boots = boots[np.isfinite(boots)]
    if boots.size == 0:   # every resample coalesced at once
        ci = (-math.inf, -math.inf)
    else:
        ci = (float(np.quantile(boots, 0.025)), float(np.quantile(boots, 0.975)))
    return ContractionResult(times, mean, rate, ci, trials)


# --------------------------------------------------------------------------
# exact coupled Gibbs on (h, phi)

class CoupledGibbs:
    """Alternate exact draws of h | phi and phi | h from an enumerated joint law."""

    def __init__(self, model):
        self.model = model
        self.h_list = model.surfaces
        self.h_index = {h.heights: i for i, h in enumerate(self.h_list)}
        phis = model.phis()
        self.phi_list = phis
        self.phi_index = {p.heights: i for i, p in enumerate(phis)}
        self.phi_given_h = []
        self.h_given_phi = [[[], []] for _ in phis]
        for i, h in enumerate(self.h_list):
            d = model.data(h)
            lw = np.array([model.log_joint(h, t) for t in d.tilings])
            js = np.array([self.phi_index[t.heights] for t in d.tilings])
            p = np.exp(lw - lw.max())
            self.phi_given_h.append((js, np.cumsum(p) / p.sum()))
            for j, l in zip(js, lw):
                self.h_given_phi[j][0].append(i)
                self.h_given_phi[j][1].append(l)
        self._hp = []
        for js, lw in self.h_given_phi:
            lw = np.array(lw)
            p = np.exp(lw - lw.max())
            self._hp.append((np.array(js), np.cumsum(p) / p.sum()))

    def joint_table(self) -> dict:
        out = {}
        for i, h in enumerate(self.h_list):
            for t in self.model.data(h).tilings:
                out[(i, self.phi_index[t.heights])] = self.model.log_joint(h, t)
        keys = list(out)
        lw = np.array([out[k] for k in keys])
        p = np.exp(lw - lw.max())
        p /= p.sum()
        return dict(zip(keys, p))

    def run(self, sweeps: int, rng: np.random.Generator, start=None):
        if start is None:
            i = self.h_index[self.model.rooted[0].heights]
            j = self.phi_index[self.model.rooted[0].heights]
        else:
            i, j = start
        u = rng.random((sweeps, 2))
        out = np.zeros((sweeps, 2), dtype=np.int64)
        for s in range(sweeps):
            hs, cum = self._hp[j]
            i = int(hs[min(np.searchsorted(cum, u[s, 0], side="right"), len(hs) - 1)])
            js, cum = self.phi_given_h[i]
            j = int(js[min(np.searchsorted(cum, u[s, 1], side="right"), len(js) - 1)])
            out[s] = (i, j)
        return out


def coupled_gibbs_exact(model, sweeps: int, rng: np.random.Generator):
    """Stream of (h index, phi index) pairs; also returns the sampler for lookups."""
    g = CoupledGibbs(model)
    return g.run(sweeps, rng), g


def total_variation(samples: np.ndarray, exact: dict) -> float:
    counts: dict = {}
    for a, b in samples.tolist():
        counts[(a, b)] = counts.get((a, b), 0) + 1
    n = len(samples)
    keys = set(counts) | set(exact)
    return 0.5 * sum(abs(counts.get(k, 0) / n - exact.get(k, 0.0)) for k in keys)
