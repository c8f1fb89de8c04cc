import math

import numpy as np

LN2 = math.log(2.0)
XMAX = 700.0 / LN2
_SERIES_K = np.arange(2, 24, dtype=float)


def _phi(z):
    z = np.asarray(z, dtype=float)
    out = np.empty_like(z)
    small = z < 0.25
    if np.any(small):
        zs = z[small][:, None]
        # z**k / k! for k = 2..23 via cumulative products
        terms = np.cumprod(np.concatenate([zs, np.broadcast_to(zs, (zs.shape[0], _SERIES_K.size)) / _SERIES_K], axis=1), axis=1)[:, 1:]
        out[small] = -(terms * (_SERIES_K - 1.0)).sum(axis=1)
    big = ~small
    out[big] = (1.0 - z[big]) * np.exp(z[big]) - 1.0
    return out


def _big_phi(x, a1, da, rho):
    return a1 * _phi(LN2 * x) + da * _phi(LN2 * rho * x)


def _big_phi_prime(x, a1, da, rho):
    z1 = LN2 * x
    z2 = LN2 * rho * x
    return -LN2 * (a1 * z1 * np.exp(z1) + da * rho * z2 * np.exp(z2))


def _rates(a1, da, rho, q):
    n = a1.shape[0]
    lo = np.zeros(n)
    hi = np.ones(n)
    grow = _big_phi(hi, a1, da, rho) > -q
    while np.any(grow):
        lo[grow] = hi[grow]
        hi[grow] = np.minimum(2.0 * hi[grow], XMAX)
        at_cap = hi >= XMAX
        grow = grow & ~at_cap & (_big_phi(hi, a1, da, rho) > -q)
    x = hi.copy()
    dxold = hi - lo
    active = _big_phi(hi, a1, da, rho) <= -q
    iters = 0
    for _ in range(400):
        if not np.any(active):
            break
        iters += int(active.sum())
        xa = x[active]
        ia = np.flatnonzero(active)
        f = _big_phi(xa, a1[ia], da[ia], rho[ia]) + q
        done = np.abs(f) <= 1e-15 * q
        neg = f < 0.0
        hi[ia[neg]] = xa[neg]
        lo[ia[~neg]] = xa[~neg]
        done |= hi[ia] - lo[ia] <= 1e-15 * hi[ia]
        fp = _big_phi_prime(xa, a1[ia], da[ia], rho[ia])
        with np.errstate(divide="ignore", invalid="ignore"):
            xn = np.where(fp < 0.0, xa - f / fp, 0.5 * (lo[ia] + hi[ia]))
        # bisect where Newton leaves the bracket or fails to halve the previous step
        outside = ~((lo[ia] < xn) & (xn < hi[ia])) | (2.0 * np.abs(xn - xa) > dxold[ia])
        xn[outside] = 0.5 * (lo[ia] + hi[ia])[outside]
        stalled = np.abs(xn - xa) <= 2e-16 * xa
        upd = ~done
        dxold[ia[upd]] = np.abs(xn - xa)[upd]
        x[ia[upd]] = xn[upd]
        active[ia[done | stalled]] = False
    return x, iters


def solve_rate(a1, a2, rho, q):
    a1 = np.asarray(a1, dtype=float)
    x, _ = _rates(a1, np.asarray(a2, dtype=float) - a1, np.asarray(rho, dtype=float), float(q))
    return x


def _budget(a1, a2, s, d2, B, alpha):
    t = np.zeros(s.shape[0])
    m = s > 0.0
    if not np.any(m):
        return t, 0.0, 0
    x, it = _rates(a1[m], a2[m] - a1[m], d2[m] / s[m], alpha / B)
    t[m] = s[m] / (B * x)
    return t, float(t.sum()), it


def time_budget(a1, a2, s, d2, B, alpha):
    t, total, _ = _budget(a1, a2, s, d2, B, alpha)
    return t, total


def time_allocation(a1, a2, s, d2, B, T):
    a1, a2, s, d2 = (np.asarray(v, dtype=float) for v in (a1, a2, s, d2))
    if not np.any(s > 0.0):
        return np.zeros(s.shape[0]), 0.0, 0, 0, np.empty(0), np.empty(0)
    alpha = 1.0
    t, total, inner = _budget(a1, a2, s, d2, B, alpha)
    outer = 1
    if total > T:
        lo, hi = alpha, 2.0 * alpha
        while True:
            t, total, it = _budget(a1, a2, s, d2, B, hi)
            inner += it
            outer += 1
            if total <= T or outer > 1100:
                break
            lo, hi = hi, 2.0 * hi
    else:
        lo, hi = 0.5 * alpha, alpha
        while True:
            t, total, it = _budget(a1, a2, s, d2, B, lo)
            inner += it
            outer += 1
            if total >= T or outer > 1100:
                break
            lo, hi = 0.5 * lo, lo
    trail_a, trail_s = [], []
    while outer < 1400:
        alpha = math.sqrt(lo * hi)
        t, total, it = _budget(a1, a2, s, d2, B, alpha)
        inner += it
        outer += 1
        trail_a.append(alpha)
        trail_s.append(total)
        if abs(total - T) <= 1e-14 * T:
            break
        if total > T:
            lo = alpha
        else:
            hi = alpha
        if hi <= lo * (1.0 + 4e-16):
            break
    t = t * (T / total)
    _close_frame(t, T)
    return t, alpha, outer, inner, np.array(trail_a), np.array(trail_s)


def _close_frame(t, T):
    # give the rounding remainder to the largest share so the shares add up to T
    k = int(np.argmax(t))
    rest = 0.0
    for i in range(t.shape[0]):
        if i != k:
            rest += t[i]
    t[k] = T - rest


def _log2_affine(a1, da, u):
    p = np.log2(a1) + u
    with np.errstate(divide="ignore"):
        r = np.log2(np.where(da > 0.0, da, 0.0))
    return np.logaddexp2(p, r)


def _projected(g, d, lo, hi):
    out = np.where(d <= lo, np.minimum(g, 0.0), np.where(d >= hi, np.maximum(g, 0.0), g))
    return np.where(lo == hi, 0.0, out)


def _violation(a1, da, k1, k2, c, d1, d2, D1, D2, R1, R2):
    es = np.exp(np.minimum(LN2 * (d1 + d2) / c, 709.0))
    e2 = np.exp(np.minimum(LN2 * d2 / c, 709.0))
    g1 = LN2 * a1 * es - k1
    g2 = LN2 * a1 * es + LN2 * da * e2 - k2
    return np.maximum(np.abs(_projected(g1, d1, D1, R1)), np.abs(_projected(g2, d2, D2, R2)))


def group_minimizer(a1, a2, k1, k2, c, D1, D2, R1, R2):
    a1, a2, k1, k2, c, D1, D2, R1, R2 = (np.asarray(v, dtype=float) for v in (a1, a2, k1, k2, c, D1, D2, R1, R2))
    da = a2 - a1
    pos1 = k1 > 0.0
    pos2 = k2 > 0.0
    with np.errstate(divide="ignore", invalid="ignore"):
        free1 = c * np.log2(np.where(pos1, k1, 1.0) / (LN2 * a1))
        ok_int = pos1 & (da > 0.0) & (k2 - k1 > 0.0)
        y_int = c * np.log2(np.where(ok_int, k2 - k1, 1.0) / (LN2 * np.where(ok_int, da, 1.0)))
        log_k2 = np.log2(np.where(pos2, k2, 1.0) / LN2)
    x_int = free1 - y_int
    ok_int &= (D1 <= x_int) & (x_int <= R1) & (D2 <= y_int) & (y_int <= R2)

    cand1 = [np.where(ok_int, x_int, D1)]
    cand2 = [np.where(ok_int, y_int, D2)]
    for x in (D1, R1):
        y = np.where(pos2, np.clip(c * (log_k2 - _log2_affine(a1, da, x / c)), D2, R2), D2)
        cand1.append(x)
        cand2.append(y)
    for y in (D2, R2):
        x = np.where(pos1, np.clip(free1 - y, D1, R1), D1)
        cand1.append(x)
        cand2.append(y)
    X = np.stack(cand1)
    Y = np.stack(cand2)
    V = np.stack([_violation(a1, da, k1, k2, c, X[j], Y[j], D1, D2, R1, R2) for j in range(X.shape[0])])
    V[0] = np.where(ok_int, V[0], np.inf)
    pick = np.argmin(V, axis=0)
    idx = np.arange(a1.shape[0])
    return X[pick, idx], Y[pick, idx]


def _load(a1, a2, C, P, D, R, c, beta):
    d = D.copy()
    m = c > 0.0
    if np.any(m):
        k = (P[m] - beta) * C[m]
        d1, d2 = group_minimizer(a1[m], a2[m], k[:, 0], k[:, 1], c[m], D[m, 0], D[m, 1], R[m, 0], R[m, 1])
        d[m, 0] = d1
        d[m, 1] = d2
    # sequential sum so both backends round identically
    total = 0.0
    for i in range(d.shape[0]):
        total += C[i, 0] * d[i, 0] + C[i, 1] * d[i, 1]
    return d, total


def data_allocation(a1, a2, C, P, D, R, c, F):
    d_lo, load_lo = _load(a1, a2, C, P, D, R, c, 0.0)
    if load_lo <= F:
        return d_lo, 0.0, 0
    lo = 0.0
    hi = float(P.max())
    d_hi, load_hi = _load(a1, a2, C, P, D, R, c, hi)
    it = 0
    while load_hi > F and it < 200:
        lo, load_lo, d_lo = hi, load_hi, d_hi
        hi *= 2.0
        d_hi, load_hi = _load(a1, a2, C, P, D, R, c, hi)
        it += 1
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if not (lo < mid < hi):
            break
        it += 1
        d_mid, load_mid = _load(a1, a2, C, P, D, R, c, mid)
        if load_mid > F:
            lo, load_lo, d_lo = mid, load_mid, d_mid
        else:
            hi, load_hi, d_hi = mid, load_mid, d_mid
            if load_hi == F:
                break
    theta = (F - load_hi) / (load_lo - load_hi) if load_lo > load_hi else 0.0
    return d_hi + theta * (d_lo - d_hi), hi, it
