import numpy as np

_CHUNK = 1 << 20


def corp_conditional_logdens(query, existing, two_r):
    query = np.asarray(query, dtype=float)
    out = np.empty(query.shape[0])
    step = max(1, _CHUNK // max(existing.shape[0], 1))
    with np.errstate(divide="ignore"):
        for a in range(0, query.shape[0], step):
            diff = query[a : a + step, None] - existing[None, :]
            out[a : a + step] = two_r * np.log(np.abs(np.sin(np.pi * diff))).sum(axis=1)
    return out


def corp_joint_logdens(xs, two_r):
    i, j = np.tril_indices(xs.shape[0], k=-1)
    v = np.abs(np.sin(np.pi * (xs[i] - xs[j])))
    if np.any(v == 0.0):
        return -np.inf
    return two_r * float(np.log(v).sum())


def corp_joint_grad(xs, two_r):
    a = np.pi * (xs[:, None] - xs[None, :])
    np.fill_diagonal(a, np.pi / 2)  # cot(pi/2) = 0 drops the self term
    return two_r * np.pi * (np.cos(a) / np.sin(a)).sum(axis=1)


def corp_rejection_round(lo, width, log_env, existing, two_r, u_pos, u_acc):
    n_rounds, m = u_pos.shape
    x = lo[None, :] + width[None, :] * u_pos
    lf = corp_conditional_logdens(x.ravel(), existing, two_r).reshape(n_rounds, m)
    ok = np.log(u_acc) + log_env[None, :] <= lf
    hit = ok.any(axis=0)
    first = np.argmax(ok, axis=0)
    out = np.where(hit, x[first, np.arange(m)], np.nan)
    used = np.where(hit, first + 1, n_rounds)
    return out, used


def polyline_distances(points, vertices):
    starts = vertices[:-1]
    edges = vertices[1:] - starts
    den = np.einsum("sc,sc->s", edges, edges)
    safe = np.where(den > 0.0, den, 1.0)
    out = np.empty(points.shape[0])
    step = max(1, _CHUNK // max(starts.shape[0] * points.shape[1], 1))
    for a in range(0, points.shape[0], step):
        rel = points[a : a + step, None, :] - starts[None, :, :]
        t = np.where(den > 0.0, np.einsum("msc,sc->ms", rel, edges) / safe, 0.0)
        t = np.clip(t, 0.0, 1.0)
        diff = rel - t[:, :, None] * edges[None, :, :]
        out[a : a + step] = np.sqrt(np.einsum("msc,msc->ms", diff, diff).min(axis=1))
    return out


def mh_independence_chain(x_prop, logp_prop, log_u, x0, logp0):
    # Sequential by nature; kept as a plain loop so both backends agree exactly.
    chain = np.empty(x_prop.shape[0])
    x, lp, accepted = x0, logp0, 0
    for t in range(x_prop.shape[0]):
        if log_u[t] < logp_prop[t] - lp:
            x, lp = x_prop[t], logp_prop[t]
            accepted += 1
        chain[t] = x
    return chain, accepted


def se_grad_terms(kinv_low, weights, k_signal, x, alpha, sigma2, jitter, fit_coef, cplx_coef):
    low = np.tril(kinv_low)
    kinv = low + np.swapaxes(low, 1, 2)
    diag = np.arange(x.shape[0])
    kinv[:, diag, diag] *= 0.5
    w = fit_coef * weights[:, :, None] * weights[:, None, :] - cplx_coef * kinv
    diff = x[:, None] - x[None, :]
    wk = w * k_signal
    tr_w = np.trace(w, axis1=1, axis2=2)
    g = np.empty((weights.shape[0], 3))
    g[:, 0] = 0.5 * wk.sum(axis=(1, 2)) + 0.5 * jitter * tr_w
    g[:, 1] = -0.5 * alpha * np.einsum("dij,ij->d", wk, diff**2)
    g[:, 2] = 0.5 * sigma2 * tr_w
    gx = -2.0 * alpha[:, None] * np.einsum("dij,ij->di", wk, diff)
    return g, gx
