"""Kasteleyn matrices for lozenge tilings: torus (Fourier) and finite regions.

Hexagonal-lattice coordinates: black and white vertices are both labelled by
``n in Z^2`` (mod N on the torus).  A white ``w`` is joined to the blacks
``w`` (type a), ``w + e1`` (type b) and ``w + e2`` (type c).

Torus matrix, rows black / columns white::

    K(b, w) = a            if b == w
              b e^{i t1}   if b == w + e1
              c e^{i t2}   if b == w + e2

Under translation K is diagonal in Fourier space, with eigenvalues
``mu(k) = a + b e^{i k1} + c e^{i k2}`` on the shifted modes
``k in (2 pi / N) Z^2 + (t1, t2)``.  The production path uses that; dense LU
(scipy) is kept as an independent reference.
"""

from __future__ import annotations

import cmath
import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product

import numpy as np
import scipy.linalg

from .lattice import DOWN, UP, HexEdge, Tri, hex_coords, lozenge_from_tris, tri_neighbors

ZERO_MODE_TOL = 1e-12


class SingularKasteleynError(ArithmeticError):
    """A Fourier mode has mu(k) = 0, so K is not invertible."""

    def __init__(self, modes):
        super().__init__(f"zero mode(s) at {modes}")
        self.modes = modes


# --------------------------------------------------------------------------
# weights

@dataclass(frozen=True)
class TriangleWeights:
    """Edge weights from the triangle with angles pi*p, sides opposite (law of sines).

    Normalised so that the type-a weight is 1.
    """

    p: tuple
    w: tuple = field(init=False)

    def __post_init__(self):
        p = tuple(float(x) for x in self.p)
        if len(p) != 3 or min(p) <= 0 or abs(sum(p) - 1) > 1e-12:
            raise ValueError(f"p must be three positive numbers summing to 1, got {self.p}")
        s = [math.sin(math.pi * x) for x in p]
        object.__setattr__(self, "w", (1.0, s[1] / s[0], s[2] / s[0]))

    @classmethod
    def uniform(cls):
        return cls((1 / 3, 1 / 3, 1 / 3))

    def newton_zeros(self):
        """The two conjugate zeros of a + b z1 + c z2 on the unit torus.

        Found from the law of cosines on the weight triangle; each is checked
        to satisfy the polynomial.
        """
        a, b, c = self.w
        ca = (c * c - a * a - b * b) / (2 * a * b)
        cb = (b * b - a * a - c * c) / (2 * a * c)
        al, be = math.acos(max(-1.0, min(1.0, ca))), math.acos(max(-1.0, min(1.0, cb)))
        zs = []
        for sgn in (1, -1):
            z1, z2 = cmath.exp(1j * sgn * al), cmath.exp(-1j * sgn * be)
            if abs(a + b * z1 + c * z2) > 1e-9:
                raise ArithmeticError("weight triangle does not close")
            zs.append((z1, z2))
        return zs


def _w(weights):
    if isinstance(weights, TriangleWeights):
        return weights.w
    return tuple(float(x) for x in weights)


# --------------------------------------------------------------------------
# torus

@dataclass(frozen=True)
class KasteleynMatrix:
    N: int
    weights: object = (1.0, 1.0, 1.0)
    phases: tuple = (0.0, 0.0)

    @property
    def w(self):
        return _w(self.weights)

    def modes(self):
        """Shifted Fourier modes as an (N*N, 2) array, same order as ``spectrum``."""
        N = self.N
        g = 2 * np.pi * np.arange(N) / N
        k1, k2 = np.meshgrid(g + self.phases[0], g + self.phases[1], indexing="ij")
        return np.stack([k1.ravel(), k2.ravel()], axis=1)

    def spectrum(self) -> np.ndarray:
        a, b, c = self.w
        k = self.modes()
        return a + b * np.exp(1j * k[:, 0]) + c * np.exp(1j * k[:, 1])

    def zero_modes(self):
        mu = self.spectrum()
        return [tuple(k) for k, m in zip(self.modes(), mu) if abs(m) < ZERO_MODE_TOL]

    def index(self, n) -> int:
        return (n[0] % self.N) * self.N + (n[1] % self.N)

    def entry(self, b, w) -> complex:
        a_, b_, c_ = self.w
        N = self.N
        d = ((b[0] - w[0]) % N, (b[1] - w[1]) % N)
        val = 0j
        # on tiny tori several types can coincide
        if d == (0, 0):
            val += a_
        if d == (1 % N, 0):
            val += b_ * cmath.exp(1j * self.phases[0])
        if d == (0, 1 % N):
            val += c_ * cmath.exp(1j * self.phases[1])
        return val

    def dense(self) -> np.ndarray:
        N = self.N
        K = np.zeros((N * N, N * N), dtype=complex)
        a_, b_, c_ = self.w
        eb = b_ * cmath.exp(1j * self.phases[0])
        ec = c_ * cmath.exp(1j * self.phases[1])
        for i in range(N):
            for j in range(N):
                wi = self.index((i, j))
                K[wi, wi] += a_
                K[self.index((i + 1, j)), wi] += eb
                K[self.index((i, j + 1)), wi] += ec
        return K


def det_torus(K: KasteleynMatrix) -> complex:
    """Product of the Fourier eigenvalues; exactly 0 if a zero mode is present."""
    mu = K.spectrum()
    if np.any(np.abs(mu) < ZERO_MODE_TOL):
        return 0j
    # accumulate in log form to survive large N
    logs = np.log(mu)
    return complex(np.exp(np.sum(logs)))


def det_dense(M: np.ndarray) -> complex:
    """Reference determinant by LU with partial pivoting (LAPACK via scipy)."""
    if M.shape == (0, 0):
        return 1.0 + 0j
    with warnings.catch_warnings():
        # an exactly singular matrix is a legitimate zero determinant here
        warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
        lu, piv = scipy.linalg.lu_factor(M, check_finite=True)
    sign = (-1) ** int(np.sum(piv != np.arange(len(piv))))
    return complex(sign * np.prod(np.diag(lu)))


def inverse_entry(K: KasteleynMatrix, b, w) -> complex:
    """K^{-1}(w, b) = N^{-2} sum_k e^{i<k, b - w>} / mu(k) over the shifted modes.

    ``k`` in the phase factor runs over the unshifted grid (2 pi / N) Z^2, the
    phases only enter through mu.
    """
    mu = K.spectrum()
    bad = np.abs(mu) < ZERO_MODE_TOL
    if np.any(bad):
        raise SingularKasteleynError([tuple(k) for k in K.modes()[bad]])
    N = K.N
    g = 2 * np.pi * np.arange(N) / N
    k1, k2 = np.meshgrid(g, g, indexing="ij")
    d1, d2 = b[0] - w[0], b[1] - w[1]
    ph = np.exp(1j * (k1.ravel() * d1 + k2.ravel() * d2))
    return complex(np.sum(ph / mu) / (N * N))


def inverse_torus(K: KasteleynMatrix) -> np.ndarray:
    """Full K^{-1} (rows white, cols black) from ``inverse_entry`` values."""
    N = K.N
    out = np.zeros((N * N, N * N), dtype=complex)
    cache = {}
    for w in product(range(N), repeat=2):
        for b in product(range(N), repeat=2):
            d = ((b[0] - w[0]) % N, (b[1] - w[1]) % N)
            if d not in cache:
                cache[d] = inverse_entry(K, d, (0, 0))
            out[K.index(w), K.index(b)] = cache[d]
    return out


def inverse_dense(M: np.ndarray) -> np.ndarray:
    lu = scipy.linalg.lu_factor(M)
    return scipy.linalg.lu_solve(lu, np.eye(M.shape[0], dtype=M.dtype))


# --------------------------------------------------------------------------
# finite regions

class RegionKasteleyn:
    """Kasteleyn matrix of the dual graph of a finite triangle set.

    Rows are up (black) triangles, columns down (white) triangles.  With all
    weights positive the honeycomb is already Kasteleyn-flat, so |det| counts
    tilings of a simply connected region.
    """

    def __init__(self, triangles, weights=(1.0, 1.0, 1.0)):
        tris = set(triangles)
        self.blacks = sorted(t for t in tris if t.kind == UP)
        self.whites = sorted(t for t in tris if t.kind == DOWN)
        self.bindex = {t: i for i, t in enumerate(self.blacks)}
        self.windex = {t: i for i, t in enumerate(self.whites)}
        self.w = _w(weights)
        M = np.zeros((len(self.blacks), len(self.whites)))
        for t, i in self.bindex.items():
            for u in tri_neighbors(t):
                j = self.windex.get(u)
                if j is not None:
                    M[i, j] = self.w[lozenge_from_tris(t, u)]
        self.matrix = M

    @classmethod
    def from_domain(cls, domain, weights=(1.0, 1.0, 1.0)):
        from .tiling import monotone_bounds, Surface
        lo, _ = monotone_bounds(domain)
        return cls(Surface(domain, lo).triangles(), weights)

    def entry_of(self, e) -> float:
        black, white = _edge_tris(e)
        return self.matrix[self.bindex[black], self.windex[white]]

    def det(self) -> float:
        if len(self.blacks) != len(self.whites):
            return 0.0
        return det_dense(self.matrix).real


def count_region(region, tol: float = 1e-6) -> int:
    """Number of lozenge tilings of a simply connected region, via |det K|.

    ``region`` is a tiling domain or a set of triangles.
    """
    if isinstance(region, (set, frozenset, list, tuple)):
        K = RegionKasteleyn(region)
    else:
        K = RegionKasteleyn.from_domain(region)
    d = abs(K.det())
    n = round(d)
    if abs(d - n) > tol * max(1.0, d):
        raise ArithmeticError(f"determinant {d} is not an integer")
    return int(n)


def _edge_tris(e):
    if isinstance(e, HexEdge):
        from .lattice import tri_from_hex
        return tri_from_hex(UP, e.black), tri_from_hex(DOWN, e.white)
    black, white = e
    return black, white


def pattern_probability(K, pattern) -> complex:
    """prod_{e in P} K(e) * det(K^{-1} restricted to the pattern).

    ``K`` is a ``RegionKasteleyn`` or a ``KasteleynMatrix``; pattern edges are
    ``HexEdge`` or (black, white) pairs (triangles for regions, lattice
    points for the torus).
    """
    pattern = list(pattern)
    if not pattern:
        return 1.0 + 0j
    if isinstance(K, RegionKasteleyn):
        pairs = [_edge_tris(e) for e in pattern]
        _check_disjoint(pairs)
        if len(K.blacks) != len(K.whites):
            raise SingularKasteleynError([])
        try:
            Kinv = inverse_dense(K.matrix)
        except (np.linalg.LinAlgError, ValueError) as exc:
            raise SingularKasteleynError([]) from exc
        if not np.all(np.isfinite(Kinv)):
            raise SingularKasteleynError([])
        prod_w = 1.0
        for b, w in pairs:
            prod_w *= K.matrix[K.bindex[b], K.windex[w]]
        sub = np.array([[Kinv[K.windex[w], K.bindex[b]] for b, _ in pairs] for _, w in pairs])
        return complex(prod_w * det_dense(sub.astype(complex)))
    pairs = []
    for e in pattern:
        if isinstance(e, HexEdge):
            pairs.append((e.black, e.white))
        else:
            pairs.append(tuple(e))
    _check_disjoint(pairs)
    prod_w = 1 + 0j
    for b, w in pairs:
        prod_w *= K.entry(b, w)
    sub = np.array([[inverse_entry(K, b, w) for b, _ in pairs] for _, w in pairs])
    return complex(prod_w * det_dense(sub))


def _check_disjoint(pairs):
    bs = [b for b, _ in pairs]
    ws = [w for _, w in pairs]
    if len(set(bs)) != len(bs) or len(set(ws)) != len(ws):
        raise ValueError("pattern edges must be vertex-disjoint")


# --------------------------------------------------------------------------
# dimer covers of the hexagonal torus

def hex_torus_matchings(N: int):
    """All perfect matchings of the N x N hexagonal torus.

    Yields ``(sigma, types)`` where ``sigma[i]`` is the white index matched to
    black ``i`` and ``types[i]`` in {0, 1, 2}.
    """
    n = N * N
    idx = lambda i, j: (i % N) * N + (j % N)
    cands = []
    for i in range(N):
        for j in range(N):
            opts = []
            for t, w in ((0, idx(i, j)), (1, idx(i - 1, j)), (2, idx(i, j - 1))):
                if all(w != o for _, o in opts):
                    opts.append((t, w))
            cands.append(opts)
    used = [False] * n
    sigma = [0] * n
    types = [0] * n

    def rec(k):
        if k == n:
            yield tuple(sigma), tuple(types)
            return
        for t, w in cands[k]:
            if not used[w]:
                used[w] = True
                sigma[k], types[k] = w, t
                yield from rec(k + 1)
                used[w] = False

    yield from rec(0)


def _perm_sign(sigma) -> int:
    seen = [False] * len(sigma)
    s = 1
    for i in range(len(sigma)):
        if seen[i]:
            continue
        j, L = i, 0
        while not seen[j]:
            seen[j] = True
            j = sigma[j]
            L += 1
        if L % 2 == 0:
            s = -s
    return s


def sector_table(N: int, with_signs: bool = False) -> dict:
    """Number of matchings per sector (k, l), where #b = N k and #c = N l.

    With ``with_signs`` the value is (count, set of permutation signs), the
    permutation sign being taken relative to the all-a matching.
    """
    if N < 2:
        raise ValueError("N >= 2")
    out: dict = {}
    for sigma, types in hex_torus_matchings(N):
        nb, nc = types.count(1), types.count(2)
        if nb % N or nc % N:
            raise ArithmeticError(f"type counts ({nb},{nc}) not multiples of N={N}")
        key = (nb // N, nc // N)
        cnt, signs = out.get(key, (0, set()))
        if with_signs:
            signs = signs | {_perm_sign(sigma)}
        out[key] = (cnt + 1, signs)
    if with_signs:
        return out
    return {k: v[0] for k, v in out.items()}


def sector_monomial(N, k, l, w):
    a, b, c = w
    return a ** (N * N - N * k - N * l) * b ** (N * k) * c ** (N * l)


@dataclass
class InstantonTable:
    N: int
    Z: dict          # (k, l) -> number of matchings
    sign: dict       # (k, l) -> +1 / -1, fitted
    residual: float
    raw: dict        # (k, l) -> unrounded least-squares coefficient / Z

    def parity_sign(self, k, l) -> int:
        return self.sign[(k, l)]

    def det_prediction(self, weights) -> float:
        w = _w(weights)
        return sum(self.sign[s] * sector_monomial(self.N, *s, w) * z for s, z in self.Z.items())

    def unsigned_total(self, weights=(1, 1, 1)) -> float:
        w = _w(weights)
        return sum(sector_monomial(self.N, *s, w) * z for s, z in self.Z.items())


def instanton_decomposition(N: int, weights=None, n_fits: int | None = None,
                            seed: int = 0, tol: float = 1e-8) -> InstantonTable:
    """Fit the sector signs in det K = sum_s sign(s) a^.. b^.. c^.. Z(s).

    Z(s) comes from enumeration; the signs are unknown and fitted by least
    squares over several random weight triples (plus ``weights`` if given),
    then rounded.  Raises if the rounded fit does not reproduce every
    determinant or if the signs are not a function of the parities.
    """
    if N > 3:
        raise ValueError("sector enumeration is limited to N <= 3")
    Z = sector_table(N)
    sectors = sorted(Z)
    rng = np.random.default_rng(seed)
    n = n_fits or max(3, len(sectors) + 2)
    ws = [_w(weights)] if weights is not None else []
    while len(ws) < n:
        ws.append(tuple(rng.uniform(0.5, 1.5, size=3)))
    A = np.array([[sector_monomial(N, *s, w) * Z[s] for s in sectors] for w in ws])
    y = np.array([det_dense(KasteleynMatrix(N, w).dense()).real for w in ws])
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    sign = {s: int(np.sign(c)) for s, c in zip(sectors, coef)}
    if any(v == 0 for v in sign.values()):
        raise ArithmeticError("sign fit produced a zero coefficient")
    pred = A @ np.array([sign[s] for s in sectors])
    resid = float(np.max(np.abs(pred - y) / np.maximum(1.0, np.abs(y))))
    if resid > tol:
        raise ArithmeticError(f"sign fit residual {resid:.3g}")
    par = {}
    for s, v in sign.items():
        key = (s[0] % 2, s[1] % 2)
        if par.setdefault(key, v) != v:
            raise ArithmeticError("fitted signs are not a function of parities")
    return InstantonTable(N, Z, sign, resid, {s: float(c) for s, c in zip(sectors, coef)})


# --------------------------------------------------------------------------
# microcanonical extraction

def _sector_target(N, p):
    fr = [Fraction(x).limit_denominator(10 ** 6) for x in p]
    kb, kc = fr[1] * N, fr[2] * N
    if kb.denominator != 1 or kc.denominator != 1 or kb <= 0 or kc <= 0:
        raise ValueError(f"N*p_b and N*p_c must be positive integers (N={N}, p={p})")
    return int(kb), int(kc)


def phase_grid(N: int, p, method: str = "exact"):
    """Angles t1, t2 in [0, 2 pi) summed over, per coordinate.

    ``det K(t)`` depends on t only through e^{i N t}, so every representative
    of a class mod 2 pi / N gives the same value.  ``exact`` uses N + 1
    classes (enough to separate all sectors); ``roots`` uses N p_b and N p_c
    classes (e^{i N t} running over those roots of unity).
    """
    kb, kc = _sector_target(N, p)
    if method == "exact":
        m1 = m2 = N + 1
    elif method == "roots":
        m1, m2 = kb, kc
    else:
        raise ValueError(method)
    g1 = [2 * math.pi * j / (N * m1) for j in range(N * m1)]
    g2 = [2 * math.pi * j / (N * m2) for j in range(N * m2)]
    return g1, g2


def microcanonical_extract(N: int, p, method: str = "exact", weights=None) -> float:
    """a^{N^2 p_a} b^{N^2 p_b} c^{N^2 p_c} Z(N p_b, N p_c) by Fourier inversion in the phases.

    Sums det K(t1, t2) over the phase grid of ``phase_grid`` (one
    representative per class), with the compensating phase
    e^{-i N (k t1 + l t2)} for the target sector.  The overall sign is fixed
    by positivity.  ``roots`` reproduces the plain roots-of-unity sum, which
    also collects sectors congruent to the target modulo N p_b, N p_c.
    """
    kb, kc = _sector_target(N, p)
    w = TriangleWeights(tuple(p)).w if weights is None else _w(weights)
    if method == "exact":
        m1 = m2 = N + 1
    elif method == "roots":
        m1, m2 = kb, kc
    else:
        raise ValueError(method)
    total = 0j
    for j1 in range(m1):
        t1 = 2 * math.pi * j1 / (N * m1)
        for j2 in range(m2):
            t2 = 2 * math.pi * j2 / (N * m2)
            d = det_torus(KasteleynMatrix(N, w, (t1, t2)))
            total += d * cmath.exp(-1j * N * (kb * t1 + kc * t2))
    val = total / (m1 * m2)
    return abs(val.real) if abs(val.imag) < 1e-8 * max(1.0, abs(val)) else float("nan")
