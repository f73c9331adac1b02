import math

import numpy as np
from numba import njit, prange


@njit(cache=True)
def corp_conditional_logdens(query, existing, two_r):
    out = np.empty(query.shape[0])
    for q in range(query.shape[0]):
        s = 0.0
        for j in range(existing.shape[0]):
            s += math.log(abs(math.sin(math.pi * (query[q] - existing[j]))))
        out[q] = two_r * s
    return out


@njit(cache=True)
def corp_joint_logdens(xs, two_r):
    s = 0.0
    n = xs.shape[0]
    for i in range(n):
        for j in range(i):
            v = abs(math.sin(math.pi * (xs[i] - xs[j])))
            if v == 0.0:
                return -np.inf
            s += math.log(v)
    return two_r * s


@njit(cache=True)
def corp_joint_grad(xs, two_r):
    n = xs.shape[0]
    g = np.zeros(n)
    for i in range(n):
        for j in range(i):
            a = math.pi * (xs[i] - xs[j])
            c = two_r * math.pi * math.cos(a) / math.sin(a)
            g[i] += c
            g[j] -= c
    return g


@njit(cache=True)
def corp_rejection_round(lo, width, log_env, existing, two_r, u_pos, u_acc):
    n_rounds, m = u_pos.shape
    out = np.full(m, np.nan)
    used = np.full(m, n_rounds)
    for k in range(m):
        for t in range(n_rounds):
            x = lo[k] + width[k] * u_pos[t, k]
            s = 0.0
            for j in range(existing.shape[0]):
                s += math.log(abs(math.sin(math.pi * (x - existing[j]))))
            if math.log(u_acc[t, k]) + log_env[k] <= two_r * s:
                out[k] = x
                used[k] = t + 1
                break
    return out, used


@njit(cache=True, parallel=True)
def polyline_distances(points, vertices):
    m, d = points.shape
    nseg = vertices.shape[0] - 1
    out = np.empty(m)
    for i in prange(m):
        best = np.inf
        for s in range(nseg):
            num = 0.0
            den = 0.0
            for c in range(d):
                e = vertices[s + 1, c] - vertices[s, c]
                num += (points[i, c] - vertices[s, c]) * e
                den += e * e
            t = 0.0
            if den > 0.0:
                t = min(1.0, max(0.0, num / den))
            dist2 = 0.0
            for c in range(d):
                diff = points[i, c] - vertices[s, c] - t * (vertices[s + 1, c] - vertices[s, c])
                dist2 += diff * diff
            if dist2 < best:
                best = dist2
        out[i] = math.sqrt(best)
    return out


@njit(cache=True)
def mh_independence_chain(x_prop, logp_prop, log_u, x0, logp0):
    n = x_prop.shape[0]
    chain = np.empty(n)
    x = x0
    lp = logp0
    accepted = 0
    for t in range(n):
        if log_u[t] < logp_prop[t] - lp:
            x = x_prop[t]
            lp = logp_prop[t]
            accepted += 1
        chain[t] = x
    return chain, accepted


@njit(cache=True)
def se_grad_terms(kinv_low, weights, k_signal, x, alpha, sigma2, jitter, fit_coef, cplx_coef):
    # Reads only the lower triangle of kinv_low; W = fit * ww' - cplx * K^-1.
    d, n = weights.shape
    g = np.zeros((d, 3))
    gx = np.zeros((d, n))
    for j in range(d):
        s0 = 0.0
        s1 = 0.0
        tr = 0.0
        for i in range(n):
            wi = weights[j, i]
            w = fit_coef * wi * wi - cplx_coef * kinv_low[j, i, i]
            tr += w
            s0 += w * k_signal[j, i, i]
            for k in range(i):
                diff = x[i] - x[k]
                wk = (fit_coef * wi * weights[j, k] - cplx_coef * kinv_low[j, i, k]) * k_signal[j, i, k]
                s0 += 2.0 * wk
                s1 += 2.0 * wk * diff * diff
                gx[j, i] += wk * diff
                gx[j, k] -= wk * diff
        g[j, 0] = 0.5 * s0 + 0.5 * jitter[j] * tr
        g[j, 1] = -0.5 * alpha[j] * s1
        g[j, 2] = 0.5 * sigma2[j] * tr
        for i in range(n):
            gx[j, i] *= -2.0 * alpha[j]
    return g, gx
