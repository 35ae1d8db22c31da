"""SOS height fields on the tilted torus and single-site Glauber dynamics."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .energy import PotentialSpec, potential
from .lattice import TorusGeometry
from .tiling import Surface, TorusDomain

TRUNCATION_WINDOW = 6


@dataclass
class SOSParams:
    beta: float
    lam: float = 0.0
    potential: PotentialSpec = field(default_factory=PotentialSpec)
    alpha: float | None = None

    def __post_init__(self):
        if not self.beta > 0:
            raise ValueError("beta must be positive")
        if self.lam < 0:
            raise ValueError("lambda must be nonnegative")
        if self.alpha is None:
            self.alpha = self.beta


class SOSField:
    """Integer heights on the N x N faces; h(x + N e_i) = h(x) - drops[i]."""

    def __init__(self, geometry: TorusGeometry, heights, root: bool = True):
        self.geometry = geometry
        h = np.array(heights, dtype=np.int64).reshape(geometry.N, geometry.N)
        if root:
            h = h - h[0, 0]
        self.heights = np.ascontiguousarray(h)

    @classmethod
    def flat(cls, geometry: TorusGeometry) -> "SOSField":
        """The staircase -floor(m1 x1 / N) - floor(m2 x2 / N); flat when the slope vanishes."""
        N, (m1, m2) = geometry.N, geometry.drops
        x = np.arange(N)
        h = -(m1 * x[:, None] // N) - (m2 * x[None, :] // N)
        return cls(geometry, h)

    @classmethod
    def from_surface(cls, s: Surface) -> "SOSField":
        g = s.domain.geometry
        return cls(g, np.array(s.heights).reshape(g.N, g.N))

    def copy(self) -> "SOSField":
        return SOSField(self.geometry, self.heights.copy(), root=False)

    def rooted(self) -> "SOSField":
        return SOSField(self.geometry, self.heights, root=True)

    def to_surface(self, domain: TorusDomain | None = None) -> Surface:
        d = domain or TorusDomain(self.geometry)
        return Surface(d, tuple(int(v) for v in self.heights.ravel()))

    def value(self, x1: int, x2: int) -> int:
        r1, r2, off = self.geometry.wrap_face(x1, x2)
        return int(self.heights[r1, r2]) + off

    def gradients(self):
        """Forward differences (h(x + e1) - h(x), h(x + e2) - h(x)), slope offsets applied."""
        h = self.heights
        m1, m2 = self.geometry.drops
        d1 = np.roll(h, -1, axis=0) - h
        d1[-1, :] -= m1
        d2 = np.roll(h, -1, axis=1) - h
        d2[:, -1] -= m2
        return d1, d2

    def loop_sums(self):
        """Sum of the gradient around each straight non-contractible loop (-drops)."""
        d1, d2 = self.gradients()
        return d1.sum(axis=0), d2.sum(axis=1)

    def is_monotone(self) -> bool:
        d1, d2 = self.gradients()
        return bool((d1 <= 0).all() and (d2 <= 0).all())

    def __eq__(self, other):
        return (isinstance(other, SOSField) and self.geometry == other.geometry
                and np.array_equal(self.heights - self.heights[0, 0],
                                   other.heights - other.heights[0, 0]))


def surface_area(h: SOSField) -> int:
    d1, d2 = h.gradients()
    return int(h.geometry.N ** 2 + np.abs(d1).sum() + np.abs(d2).sum())


def hamiltonian(h: SOSField, params: SOSParams, tilings=None) -> float:
    val = params.beta * surface_area(h)
    if params.lam:
        val += params.lam * potential(h.to_surface(), params.potential, tilings=tilings)
    return val


# --------------------------------------------------------------------------
# Glauber

def _neighbours(h: SOSField, i: int, j: int):
    return [h.value(i - 1, j), h.value(i + 1, j), h.value(i, j - 1), h.value(i, j + 1)]


def heatbath_distribution(h: SOSField, site, beta: float, extra: int = 0):
    """Exact conditional law of h(site) at lambda = 0.

    Returns ``(values, probs, tail_mass)`` for values in
    [min nbr - extra, max nbr + extra]; ``tail_mass`` is the probability of
    the rest.
    """
    nbs = _neighbours(h, *site)
    lo, hi = min(nbs), max(nbs)
    q = math.exp(-4 * beta)
    zs = list(range(lo - extra, hi + extra + 1))
    cost = [sum(abs(z - n) for n in nbs) for z in zs]
    cmin = min(cost)
    w = np.array([math.exp(-beta * (c - cmin)) for c in cost])
    wlo = math.exp(-beta * (sum(abs(lo - n) for n in nbs) - cmin))
    whi = math.exp(-beta * (sum(abs(hi - n) for n in nbs) - cmin))
    total = sum(math.exp(-beta * (sum(abs(z - n) for n in nbs) - cmin)) for z in range(lo, hi + 1))
    total += (wlo + whi) * q / (1 - q)
    probs = w / total
    return np.array(zs), probs, max(0.0, 1.0 - probs.sum())


def glauber_step(h: SOSField, params: SOSParams, site, rng: np.random.Generator,
                 tilings=None) -> SOSField:
    """Heat-bath resampling of one site; returns a new field.

    At lambda = 0 the conditional law is sampled exactly (geometric tails).
    At lambda > 0 the potential is recomputed for every candidate in
    [min nbr - W, max nbr + W], which needs an enumerable torus.
    """
    i, j = site
    out = h.copy()
    if params.lam == 0:
        sites = np.array([i * h.geometry.N + j], dtype=np.int64)
        u = rng.random(2)
        kernels._impl.glauber_heatbath(out.heights, *h.geometry.drops, float(params.beta), sites, u)
        return out
    nbs = _neighbours(h, i, j)
    zs = list(range(min(nbs) - TRUNCATION_WINDOW, max(nbs) + TRUNCATION_WINDOW + 1))
    logw = []
    for z in zs:
        out.heights[i, j] = z
        logw.append(-hamiltonian(out, params, tilings=tilings))
    logw = np.array(logw)
    p = np.exp(logw - logw.max())
    p /= p.sum()
    out.heights[i, j] = zs[int(rng.choice(len(zs), p=p))]
    return out


def glauber_run(h: SOSField, params: SOSParams, steps: int, rng: np.random.Generator,
                backend=None, debug: bool = False) -> SOSField:
    """``steps`` uniformly placed heat-bath updates (lambda = 0 only)."""
    if params.lam != 0:
        raise ValueError("bulk Glauber runs support lambda = 0; use glauber_step for lambda > 0")
    out = h.copy()
    before = out.loop_sums() if debug else None
    kernels.run_glauber(out.heights, h.geometry.drops, params.beta, steps, rng, backend)
    if debug:
        after = out.loop_sums()
        assert all(np.array_equal(a, b) for a, b in zip(before, after)), "slope changed"
    return out


def glauber_sweeps(h: SOSField, params: SOSParams, sweeps: int, rng, backend=None) -> SOSField:
    return glauber_run(h, params, sweeps * h.geometry.N ** 2, rng, backend)
