import math

import numpy as np
from numba import njit

LN2 = math.log(2.0)
XMAX = 700.0 / LN2
_TRAIL = 512


@njit(cache=True)
def _phi(z):
    if z < 0.25:
        term = z
        acc = 0.0
        for k in range(2, 24):
            term *= z / k
            acc += (k - 1) * term
        return -acc
    return (1.0 - z) * math.exp(z) - 1.0


@njit(cache=True)
def _big_phi(x, a1, da, rho):
    return a1 * _phi(LN2 * x) + da * _phi(LN2 * rho * x)


@njit(cache=True)
def _big_phi_prime(x, a1, da, rho):
    z1 = LN2 * x
    z2 = LN2 * rho * x
    return -LN2 * (a1 * z1 * math.exp(z1) + da * rho * z2 * math.exp(z2))


@njit(cache=True)
def _rate(a1, da, rho, q):
    lo = 0.0
    hi = 1.0
    while _big_phi(hi, a1, da, rho) > -q:
        lo = hi
        hi *= 2.0
        if hi >= XMAX:
            hi = XMAX
            if _big_phi(hi, a1, da, rho) > -q:
                return XMAX, 0
            break
    # concave decreasing: Newton from the right end stays on the right of the root
    x = hi
    it = 0
    dxold = hi - lo
    while it < 400:
        it += 1
        f = _big_phi(x, a1, da, rho) + q
        if abs(f) <= 1e-15 * q:
            break
        if f < 0.0:
            hi = x
        else:
            lo = x
        if hi - lo <= 1e-15 * hi:
            break
        fp = _big_phi_prime(x, a1, da, rho)
        xn = x - f / fp if fp < 0.0 else 0.5 * (lo + hi)
        # far from the root the exponential makes Newton crawl; bisect unless it halves the step
        if not (lo < xn < hi) or 2.0 * abs(xn - x) > dxold:
            xn = 0.5 * (lo + hi)
        if abs(xn - x) <= 2e-16 * x:
            x = xn
            break
        dxold = abs(xn - x)
        x = xn
    return x, it


@njit(cache=True)
def solve_rate(a1, a2, rho, q):
    n = a1.shape[0]
    out = np.empty(n)
    for i in range(n):
        out[i], _ = _rate(a1[i], a2[i] - a1[i], rho[i], q)
    return out


@njit(cache=True)
def _budget(a1, a2, s, d2, B, alpha, t):
    q = alpha / B
    total = 0.0
    inner = 0
    for i in range(s.shape[0]):
        if s[i] > 0.0:
            x, it = _rate(a1[i], a2[i] - a1[i], d2[i] / s[i], q)
            inner += it
            t[i] = s[i] / (B * x)
            total += t[i]
        else:
            t[i] = 0.0
    return total, inner


@njit(cache=True)
def time_budget(a1, a2, s, d2, B, alpha):
    t = np.zeros(s.shape[0])
    total, _ = _budget(a1, a2, s, d2, B, alpha, t)
    return t, total


@njit(cache=True)
def time_allocation(a1, a2, s, d2, B, T):
    n = s.shape[0]
    t = np.zeros(n)
    trail_a = np.empty(_TRAIL)
    trail_s = np.empty(_TRAIL)
    k = 0
    if not np.any(s > 0.0):
        return t, 0.0, 0, 0, trail_a[:0], trail_s[:0]
    inner = 0
    alpha = 1.0
    total, it = _budget(a1, a2, s, d2, B, alpha, t)
    inner += it
    outer = 1
    if total > T:
        lo = alpha
        hi = 2.0 * alpha
        while True:
            total, it = _budget(a1, a2, s, d2, B, hi, t)
            inner += it
            outer += 1
            if total <= T or outer > 1100:
                break
            lo = hi
            hi *= 2.0
    else:
        hi = alpha
        lo = 0.5 * alpha
        while True:
            total, it = _budget(a1, a2, s, d2, B, lo, t)
            inner += it
            outer += 1
            if total >= T or outer > 1100:
                break
            hi = lo
            lo *= 0.5
    alpha = math.sqrt(lo * hi)
    while outer < 1400:
        alpha = math.sqrt(lo * hi)
        total, it = _budget(a1, a2, s, d2, B, alpha, t)
        inner += it
        outer += 1
        if k < _TRAIL:
            trail_a[k] = alpha
            trail_s[k] = total
            k += 1
        if abs(total - T) <= 1e-14 * T:
            break
        if total > T:
            lo = alpha
        else:
            hi = alpha
        if hi <= lo * (1.0 + 4e-16):
            break
    t *= T / total
    _close_frame(t, T)
    return t, alpha, outer, inner, trail_a[:k], trail_s[:k]


@njit(cache=True)
def _close_frame(t, T):
    # give the rounding remainder to the largest share so the shares add up to T
    k = 0
    for i in range(t.shape[0]):
        if t[i] > t[k]:
            k = i
    rest = 0.0
    for i in range(t.shape[0]):
        if i != k:
            rest += t[i]
    t[k] = T - rest


@njit(cache=True)
def _log2_affine(a1, da, u):
    # log2(a1 * 2**u + da), stable for large u
    p = math.log2(a1) + u
    if da <= 0.0:
        return p
    r = math.log2(da)
    m = max(p, r)
    return m + math.log2(2.0 ** (p - m) + 2.0 ** (r - m))


@njit(cache=True)
def _projected(g, d, lo, hi):
    if lo == hi:
        return 0.0
    if d <= lo:
        return min(g, 0.0)
    if d >= hi:
        return max(g, 0.0)
    return g


@njit(cache=True)
def _violation(a1, da, k1, k2, c, d1, d2, D1, D2, R1, R2):
    es = math.exp(min(LN2 * (d1 + d2) / c, 709.0))
    e2 = math.exp(min(LN2 * d2 / c, 709.0))
    g1 = LN2 * a1 * es - k1
    g2 = LN2 * a1 * es + LN2 * da * e2 - k2
    return max(abs(_projected(g1, d1, D1, R1)), abs(_projected(g2, d2, D2, R2)))


@njit(cache=True)
def _clamp(x, lo, hi):
    return min(max(x, lo), hi)


@njit(cache=True)
def _group_min(a1, a2, k1, k2, c, D1, D2, R1, R2):
    da = a2 - a1
    best = np.inf
    b1 = D1
    b2 = D2
    if k1 > 0.0 and da > 0.0 and k2 - k1 > 0.0:
        s = c * math.log2(k1 / (LN2 * a1))
        y = c * math.log2((k2 - k1) / (LN2 * da))
        x = s - y
        if D1 <= x <= R1 and D2 <= y <= R2:
            v = _violation(a1, da, k1, k2, c, x, y, D1, D2, R1, R2)
            if v < best:
                best, b1, b2 = v, x, y
    for j in range(2):
        x = D1 if j == 0 else R1
        if k2 > 0.0:
            y = _clamp(c * (math.log2(k2 / LN2) - _log2_affine(a1, da, x / c)), D2, R2)
        else:
            y = D2
        v = _violation(a1, da, k1, k2, c, x, y, D1, D2, R1, R2)
        if v < best:
            best, b1, b2 = v, x, y
    for j in range(2):
        y = D2 if j == 0 else R2
        if k1 > 0.0:
            x = _clamp(c * math.log2(k1 / (LN2 * a1)) - y, D1, R1)
        else:
            x = D1
        v = _violation(a1, da, k1, k2, c, x, y, D1, D2, R1, R2)
        if v < best:
            best, b1, b2 = v, x, y
    return b1, b2


@njit(cache=True)
def group_minimizer(a1, a2, k1, k2, c, D1, D2, R1, R2):
    n = a1.shape[0]
    d1 = np.empty(n)
    d2 = np.empty(n)
    for i in range(n):
        d1[i], d2[i] = _group_min(a1[i], a2[i], k1[i], k2[i], c[i], D1[i], D2[i], R1[i], R2[i])
    return d1, d2


@njit(cache=True)
def _load(a1, a2, C, P, D, R, c, beta, d):
    total = 0.0
    for i in range(a1.shape[0]):
        if c[i] > 0.0:
            d[i, 0], d[i, 1] = _group_min(
                a1[i], a2[i], (P[i, 0] - beta) * C[i, 0], (P[i, 1] - beta) * C[i, 1],
                c[i], D[i, 0], D[i, 1], R[i, 0], R[i, 1],
            )
        else:
            d[i, 0] = D[i, 0]
            d[i, 1] = D[i, 1]
        total += C[i, 0] * d[i, 0] + C[i, 1] * d[i, 1]
    return total


@njit(cache=True)
def data_allocation(a1, a2, C, P, D, R, c, F):
    n = a1.shape[0]
    d_lo = np.empty((n, 2))
    load_lo = _load(a1, a2, C, P, D, R, c, 0.0, d_lo)
    if load_lo <= F:
        return d_lo, 0.0, 0
    lo = 0.0
    hi = 0.0
    for i in range(n):
        hi = max(hi, P[i, 0], P[i, 1])
    d_hi = np.empty((n, 2))
    load_hi = _load(a1, a2, C, P, D, R, c, hi, d_hi)
    it = 0
    while load_hi > F and it < 200:
        lo, load_lo = hi, load_hi
        d_lo[:, :] = d_hi
        hi *= 2.0
        load_hi = _load(a1, a2, C, P, D, R, c, hi, d_hi)
        it += 1
    d_mid = np.empty((n, 2))
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if not (lo < mid < hi):
            break
        it += 1
        load_mid = _load(a1, a2, C, P, D, R, c, mid, d_mid)
        if load_mid > F:
            lo, load_lo = mid, load_mid
            d_lo[:, :] = d_mid
        else:
            hi, load_hi = mid, load_mid
            d_hi[:, :] = d_mid
            if load_hi == F:
                break
    theta = 0.0
    if load_lo > load_hi:
        theta = (F - load_hi) / (load_lo - load_hi)
    d = d_hi + theta * (d_lo - d_hi)
    return d, hi, it
