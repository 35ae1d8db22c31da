# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled inner loops for the torus samplers.

Every kernel consumes pre-drawn random numbers so that the compiled and the
pure-Python versions (``_kernels_py``) produce identical trajectories.
"""

from libc.math cimport exp, log, floor


cdef inline long _nb(long[:, ::1] h, long N, long m1, long m2, long i, long j, int k) nogil:
    # k: 0 = i-1, 1 = i+1, 2 = j-1, 3 = j+1, with the slope offsets across the seam
    if k == 0:
        return h[N - 1, j] + m1 if i == 0 else h[i - 1, j]
    if k == 1:
        return h[0, j] - m1 if i == N - 1 else h[i + 1, j]
    if k == 2:
        return h[i, N - 1] + m2 if j == 0 else h[i, j - 1]
    return h[i, 0] - m2 if j == N - 1 else h[i, j + 1]


def glauber_heatbath(long[:, ::1] h, long m1, long m2, double beta,
                     long[::1] sites, double[::1] u):
    """Exact single-site heat-bath updates for weights exp(-beta * sum |grad h|).

    ``sites[t]`` is a flat face index, ``u[2t]`` and ``u[2t+1]`` the uniforms
    used by step t.  Heights outside [min nbr, max nbr] are reached through
    the exact geometric tails.
    """
    cdef long N = h.shape[0]
    cdef long T = sites.shape[0]
    cdef long t, s, i, j, z, lo, hi, k, a, best
    cdef long nb[4]
    cdef double q = exp(-4.0 * beta)
    cdef double w[64]
    cdef double tot, tail, acc, x, cost, cmin
    with nogil:
        for t in range(T):
            s = sites[t]
            i = s // N
            j = s - i * N
            lo = 1 << 60
            hi = -(1 << 60)
            for k in range(4):
                nb[k] = _nb(h, N, m1, m2, i, j, k)
                if nb[k] < lo:
                    lo = nb[k]
                if nb[k] > hi:
                    hi = nb[k]
            if hi - lo >= 64:
                # very rough configuration; fall back to the clipped range
                lo = hi - 63
            cmin = 1e300
            for z in range(lo, hi + 1):
                cost = 0
                for k in range(4):
                    a = z - nb[k]
                    cost += a if a >= 0 else -a
                w[z - lo] = cost
                if cost < cmin:
                    cmin = cost
            tot = 0
            for z in range(lo, hi + 1):
                w[z - lo] = exp(-beta * (w[z - lo] - cmin))
                tot += w[z - lo]
            tail = q / (1.0 - q)
            tot += (w[0] + w[hi - lo]) * tail
            x = u[2 * t] * tot
            acc = 0
            best = hi + 1
            for z in range(lo, hi + 1):
                acc += w[z - lo]
                if x < acc:
                    best = z
                    break
            if best == hi + 1:
                acc += w[hi - lo] * tail
                k = 1 + <long>floor(log(u[2 * t + 1]) / log(q)) if q > 0 else 1
                if x < acc:
                    best = hi + k
                else:
                    best = lo - k
            h[i, j] = best


def flip_chain(long[:, ::1] h, long m1, long m2, long[::1] sites, double[::1] u):
    """Uniform-target flip moves on a monotone torus height field.

    A step picks face ``sites[t]`` and direction up if ``u[t] < 0.5`` else
    down, and applies it when the result is still monotone.  Returns the
    number of accepted moves.
    """
    cdef long N = h.shape[0]
    cdef long T = sites.shape[0]
    cdef long t, s, i, j, z, acc = 0
    with nogil:
        for t in range(T):
            s = sites[t]
            i = s // N
            j = s - i * N
            if u[t] < 0.5:
                z = h[i, j] + 1
                if z <= _nb(h, N, m1, m2, i, j, 0) and z <= _nb(h, N, m1, m2, i, j, 2):
                    h[i, j] = z
                    acc += 1
            else:
                z = h[i, j] - 1
                if z >= _nb(h, N, m1, m2, i, j, 1) and z >= _nb(h, N, m1, m2, i, j, 3):
                    h[i, j] = z
                    acc += 1
    return acc
