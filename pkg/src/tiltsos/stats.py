"""Estimators on batches of height fields and tilings.

Height fields are numpy arrays of shape (N, N) on the tilted torus with
drops (m1, m2): the value at x + N e_i is the stored value minus m_i.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import stats as sps

from .lattice import project_111


class InsufficientSamplesError(ValueError):
    pass


# --------------------------------------------------------------------------
# batches

@dataclass
class SampleBatch:
    fields: list
    drops: tuple = (0, 0)
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        shapes = {np.shape(f) for f in self.fields}
        if len(shapes) > 1:
            raise ValueError("batch mixes geometries")

    @property
    def N(self) -> int:
        return np.shape(self.fields[0])[0]

    def __len__(self):
        return len(self.fields)

    def array(self) -> np.ndarray:
        return np.asarray(self.fields, dtype=float)


def shifted(h: np.ndarray, drops, dx: int, dy: int) -> np.ndarray:
    """The field x -> h(x + (dx, dy)) with the seam offsets applied."""
    N = h.shape[0]
    m1, m2 = drops
    out = np.roll(h, (-dx, -dy), axis=(0, 1)).astype(float)
    i = np.arange(N)
    # number of seams crossed going from x to x + d
    c1 = (i + dx) // N
    c2 = (i + dy) // N
    out -= m1 * c1[:, None] + m2 * c2[None, :]
    return out


def increments(batch: SampleBatch, d) -> np.ndarray:
    """(samples, N, N) array of h(o + d) - h(o) over all base points o."""
    return np.stack([shifted(np.asarray(h), batch.drops, *d) - np.asarray(h, dtype=float)
                     for h in batch.fields])


# --------------------------------------------------------------------------
# bootstrap and fits

def bootstrap_ci(values: np.ndarray, stat, rng: np.random.Generator, n_boot: int = 1000,
                 level: float = 0.95):
    """Percentile CI of ``stat`` over resamples of the first axis of ``values``."""
    n = len(values)
    boots = np.array([stat(values[rng.integers(0, n, size=n)]) for _ in range(n_boot)])
    a = (1 - level) / 2
    return float(np.quantile(boots, a)), float(np.quantile(boots, 1 - a)), float(boots.std(ddof=1))


def weighted_log_fit(r, v, se):
    """Weighted least squares v = c log r + b, weights 1/se^2; returns (c, b, R^2)."""
    r, v, se = map(np.asarray, (r, v, se))
    w = 1.0 / np.maximum(se, 1e-12) ** 2
    X = np.log(r)
    W = w.sum()
    xm = (w * X).sum() / W
    ym = (w * v).sum() / W
    sxx = (w * (X - xm) ** 2).sum()
    c = (w * (X - xm) * (v - ym)).sum() / sxx
    b = ym - c * xm
    ss_res = (w * (v - (c * X + b)) ** 2).sum()
    ss_tot = (w * (v - ym) ** 2).sum()
    r2 = 1 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return float(c), float(b), float(r2)


@dataclass
class VarianceProfile:
    radii: np.ndarray
    var: np.ndarray
    lo: np.ndarray
    hi: np.ndarray
    se: np.ndarray
    c: float
    intercept: float
    r2: float

    def rows(self):
        return [{"r": int(r), "var": float(v), "ci_lo": float(a), "ci_hi": float(b), "se": float(s)}
                for r, v, a, b, s in zip(self.radii, self.var, self.lo, self.hi, self.se)]


def variance_profile(batch: SampleBatch, radii=None, rng: np.random.Generator | None = None,
                     n_boot: int = 500, fit_range=None) -> VarianceProfile:
    """Var(h(o + x) - h(o)) for x = (r, 0) and (0, r), averaged over o and both axes.

    Per-sample contributions are bootstrapped over samples; the log fit uses
    radii in ``fit_range`` (default [4, N/4]) with weights 1/se^2.
    """
    if len(batch) < 2:
        raise InsufficientSamplesError("need at least two samples")
    rng = rng or np.random.default_rng(0)
    N = batch.N
    radii = np.array(radii if radii is not None else range(1, N // 2 + 1))
    lo_r, hi_r = fit_range or (4, N // 4)
    var, lo, hi, se = [], [], [], []
    for r in radii:
        m1, m2 = [], []
        for d in ((r, 0), (0, r)):
            inc = increments(batch, d).reshape(len(batch), -1)
            m1.append(inc.mean(axis=1))
            m2.append((inc ** 2).mean(axis=1))
        # per-sample first and second moments; the variance is pooled over samples
        mom = np.stack([np.mean(m1, axis=0), np.mean(m2, axis=0)], axis=1)

        def stat(x):
            return float(x[:, 1].mean() - x[:, 0].mean() ** 2)

        v = stat(mom)
        a, b, s = bootstrap_ci(mom, stat, rng, n_boot)
        var.append(v), lo.append(a), hi.append(b), se.append(s)
    var, lo, hi, se = map(np.array, (var, lo, hi, se))
    mask = (radii >= lo_r) & (radii <= hi_r)
    if mask.sum() < 2:
        raise InsufficientSamplesError("fit range holds fewer than two radii")
    c, b, r2 = weighted_log_fit(radii[mask], var[mask], se[mask])
    return VarianceProfile(radii, var, lo, hi, se, c, b, r2)


def synthetic_gff(N: int, samples: int, rng: np.random.Generator, mass: float = 0.0) -> np.ndarray:
    """Discrete Gaussian free field on the N x N torus, density exp(-1/2 sum (grad h)^2).

    Var(h(x) - h(0)) = (2 / N^2) sum_{k != 0} (1 - cos k.x) / lambda_k, which
    grows like (1/pi) log|x|.
    """
    k = 2 * np.pi * np.arange(N) / N
    lam = 4 - 2 * np.cos(k)[:, None] - 2 * np.cos(k)[None, :] + mass
    lam[0, 0] = np.inf
    out = np.empty((samples, N, N))
    for s in range(samples):
        z = rng.standard_normal((N, N)) + 1j * rng.standard_normal((N, N))
        f = np.fft.ifft2(z / np.sqrt(lam)) * N
        out[s] = f.real
    # real parts of a complex field with E|z|^2 = 2 give the right covariance
    return out


def gff_increment_variance(N: int, x) -> float:
    k = 2 * np.pi * np.arange(N) / N
    lam = 4 - 2 * np.cos(k)[:, None] - 2 * np.cos(k)[None, :]
    lam[0, 0] = np.inf
    phase = k[:, None] * x[0] + k[None, :] * x[1]
    return float(2 * ((1 - np.cos(phase)) / lam).sum() / N ** 2)


# --------------------------------------------------------------------------
# pairings

@dataclass
class TestFunction:
    grid: np.ndarray
    anchor: tuple = (0, 0)

    def __post_init__(self):
        self.grid = np.asarray(self.grid, dtype=float)
        if abs(self.grid.sum()) > 1e-12 * max(1.0, np.abs(self.grid).sum()):
            raise ValueError("test functions must have mean zero")

    @classmethod
    def delta_pair(cls, x, y, eps: int = 2, size: int | None = None) -> "TestFunction":
        """Mollified delta at x minus mollified delta at y (boxes of radius eps)."""
        span = max(x[0], y[0], x[1], y[1]) + eps + 1
        size = size or span
        g = np.zeros((size, size))
        w = 1.0 / (2 * eps + 1) ** 2
        for (cx, cy), sgn in ((x, 1), (y, -1)):
            for i in range(cx - eps, cx + eps + 1):
                for j in range(cy - eps, cy + eps + 1):
                    g[i % size, j % size] += sgn * w
        return cls(g)


@dataclass
class PairingResult:
    values: np.ndarray
    variance: float
    ad_stat: float
    ad_critical_5pct: float

    @property
    def looks_normal(self) -> bool:
        return self.ad_stat < self.ad_critical_5pct


def pairing(batch: SampleBatch, f: TestFunction, n: int = 1) -> PairingResult:
    """<h(n .) - E h(n .), f> with f upsampled by n; Anderson-Darling diagnostic."""
    arr = batch.array()
    g = np.kron(f.grid, np.ones((n, n))) / n ** 2
    L = g.shape[0]
    if L > batch.N:
        raise ValueError("test function window exceeds the torus")
    ax, ay = f.anchor
    idx = (np.arange(ax, ax + L) % batch.N)[:, None], (np.arange(ay, ay + L) % batch.N)[None, :]
    win = arr[:, idx[0], idx[1]]
    win = win - win.mean(axis=0)
    vals = (win * g).sum(axis=(1, 2))
    if np.allclose(vals, 0) or len(vals) < 8:
        ad, crit = 0.0, np.inf
    else:
        res = sps.anderson(vals, dist="norm")
        ad, crit = float(res.statistic), float(res.critical_values[2])
    return PairingResult(vals, float(vals.var(ddof=1)) if len(vals) > 1 else 0.0, ad, crit)


# --------------------------------------------------------------------------
# edges

def edge_densities(tilings) -> tuple:
    """Fraction of lozenges of each type (a, b, c) pooled over a batch.

    Accepts tiling surfaces or monotone height arrays with drops given as
    ``(array, drops)`` pairs.
    """
    n = np.zeros(3)
    for t in tilings:
        if isinstance(t, tuple):
            h, drops = t
            n += torus_counts(np.asarray(h), drops)
        else:
            n += t.counts()
    return tuple(float(x) for x in n / n.sum())


def wall_indicators(h: np.ndarray, drops):
    """(b, c) wall occupation: 1 where the height drops across the e1 (e2) edge."""
    d1 = shifted(h, drops, 1, 0) - h
    d2 = shifted(h, drops, 0, 1) - h
    return (-d1).astype(int), (-d2).astype(int)


def torus_counts(h: np.ndarray, drops):
    b, c = wall_indicators(h, drops)
    if (b < 0).any() or (c < 0).any():
        raise ValueError("field is not monotone")
    return np.array([h.size, b.sum(), c.sum()], dtype=float)


def lozenge_set(tiling):
    """Projected lozenges (black, white) of a tiling surface."""
    return {project_111(p) for p in tiling.plaquettes}


def pattern_frequency(tilings, pattern) -> tuple[float, float]:
    """Fraction of tilings containing every lozenge of ``pattern`` and its binomial s.e."""
    pattern = [tuple(e) for e in pattern]
    hits = sum(1 for t in tilings if all(e in lozenge_set(t) for e in pattern))
    n = len(tilings)
    p = hits / n
    return p, float(np.sqrt(max(p * (1 - p), 1e-12) / n))


# --------------------------------------------------------------------------
# cumulants

def connected_correlation(fields, offsets) -> tuple[float, float]:
    """Joint cumulant of X(o + d) over d in ``offsets`` (k = 2 or 3), averaged over o.

    ``fields`` is (samples, N, N).  Returns (estimate, bootstrap-free s.e.
    across samples).
    """
    arr = np.asarray(fields, dtype=float)
    mu = arr.mean()
    xs = [np.roll(arr, (-dx, -dy), axis=(1, 2)) - mu for dx, dy in offsets]
    if len(xs) == 2:
        per = (xs[0] * xs[1]).mean(axis=(1, 2))
    elif len(xs) == 3:
        per = (xs[0] * xs[1] * xs[2]).mean(axis=(1, 2))
    else:
        raise ValueError("only 2- and 3-point cumulants are implemented")
    return float(per.mean()), float(per.std(ddof=1) / np.sqrt(len(per)))


@dataclass
class CumulantDecay:
    separations: np.ndarray
    k2: np.ndarray
    k2_se: np.ndarray
    k3: np.ndarray
    k3_se: np.ndarray
    exponent: float

    def monotone_beyond(self, start: int = 4) -> bool:
        """|k2| non-increasing past ``start`` up to the noise (2 s.e.)."""
        m = self.separations >= start
        a = np.abs(self.k2[m])
        s = self.k2_se[m]
        return bool(all(a[i + 1] <= a[i] + 2 * (s[i] + s[i + 1]) for i in range(len(a) - 1)))


def cumulant_decay(fields, separations, direction=(0, 1)) -> CumulantDecay:
    """2- and 3-point connected correlations of an occupation field along ``direction``.

    The 3-point offsets are (0, s, 2s).  The exponent is the slope of
    log|k2| against log s over separations where |k2| exceeds 2 s.e.
    """
    seps = np.array(list(separations))
    dx, dy = direction
    k2, s2, k3, s3 = [], [], [], []
    for s in seps:
        a, b = connected_correlation(fields, [(0, 0), (s * dx, s * dy)])
        c, d = connected_correlation(fields, [(0, 0), (s * dx, s * dy), (2 * s * dx, 2 * s * dy)])
        k2.append(a), s2.append(b), k3.append(c), s3.append(d)
    k2, s2, k3, s3 = map(np.array, (k2, s2, k3, s3))
    ok = np.abs(k2) > 2 * s2
    if ok.sum() >= 2:
        exponent = float(-np.polyfit(np.log(seps[ok]), np.log(np.abs(k2[ok])), 1)[0])
    else:
        exponent = float("nan")
    return CumulantDecay(seps, k2, s2, k3, s3, exponent)
