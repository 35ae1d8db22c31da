"""Pure-Python versions of the compiled kernels (same signatures, same results)."""

import math


def _nb(h, N, m1, m2, i, j, k):
    if k == 0:
        return h[N - 1, j] + m1 if i == 0 else h[i - 1, j]
    if k == 1:
        return h[0, j] - m1 if i == N - 1 else h[i + 1, j]
    if k == 2:
        return h[i, N - 1] + m2 if j == 0 else h[i, j - 1]
    return h[i, 0] - m2 if j == N - 1 else h[i, j + 1]


def glauber_heatbath(h, m1, m2, beta, sites, u):
    N = h.shape[0]
    q = math.exp(-4.0 * beta)
    tail = q / (1.0 - q)
    logq = math.log(q) if q > 0 else None
    rows = h.tolist()

    def nb(i, j, k):
        if k == 0:
            return rows[N - 1][j] + m1 if i == 0 else rows[i - 1][j]
        if k == 1:
            return rows[0][j] - m1 if i == N - 1 else rows[i + 1][j]
        if k == 2:
            return rows[i][N - 1] + m2 if j == 0 else rows[i][j - 1]
        return rows[i][0] - m2 if j == N - 1 else rows[i][j + 1]

    for t, s in enumerate(sites.tolist()):
        i, j = divmod(s, N)
        nbs = [nb(i, j, k) for k in range(4)]
        lo, hi = min(nbs), max(nbs)
        if hi - lo >= 64:
            lo = hi - 63
        costs = [sum(abs(z - n) for n in nbs) for z in range(lo, hi + 1)]
        cmin = min(costs)
        w = [math.exp(-beta * (c - cmin)) for c in costs]
        tot = sum(w) + (w[0] + w[-1]) * tail
        x = u[2 * t] * tot
        acc = 0.0
        best = None
        for z, wz in zip(range(lo, hi + 1), w):
            acc += wz
            if x < acc:
                best = z
                break
        if best is None:
            acc += w[-1] * tail
            k = 1 + int(math.floor(math.log(u[2 * t + 1]) / logq)) if logq is not None else 1
            best = hi + k if x < acc else lo - k
        rows[i][j] = best
    h[:, :] = rows


def flip_chain(h, m1, m2, sites, u):
    N = h.shape[0]
    rows = h.tolist()
    acc = 0
    for t, s in enumerate(sites.tolist()):
        i, j = divmod(s, N)
        if u[t] < 0.5:
            z = rows[i][j] + 1
            up = rows[N - 1][j] + m1 if i == 0 else rows[i - 1][j]
            left = rows[i][N - 1] + m2 if j == 0 else rows[i][j - 1]
            if z <= up and z <= left:
                rows[i][j] = z
                acc += 1
        else:
            z = rows[i][j] - 1
            down = rows[0][j] - m1 if i == N - 1 else rows[i + 1][j]
            right = rows[i][0] - m2 if j == N - 1 else rows[i][j + 1]
            if z >= down and z >= right:
                rows[i][j] = z
                acc += 1
    h[:, :] = rows
    return acc
