"""Numba kernels for the univariate (NIG) hot paths.

These duplicate the scalar formulas in :mod:`dpmseq.core` for speed; the test
suite cross-checks every kernel against the pure-Python implementations.
"""

import math

import numpy as np
from numba import njit

_LOG_2PI = math.log(2.0 * math.pi)


@njit(cache=True)
def digamma(x):
    """Digamma via upward recurrence and the asymptotic series (x > 0)."""
    r = 0.0
    while x < 10.0:
        r -= 1.0 / x
        x += 1.0
    inv = 1.0 / x
    inv2 = inv * inv
    series = (math.log(x) - 0.5 * inv
              - inv2 * (1.0 / 12.0
                        - inv2 * (1.0 / 120.0
                                  - inv2 * (1.0 / 252.0
                                            - inv2 / 240.0))))
    return r + series


@njit(cache=True)
def nig_log_pred(y, rho, nu, a, b):
    """Student-t log predictive with 2a dof, location rho, scale^2 b(nu+1)/a."""
    df = 2.0 * a
    s2 = b * (nu + 1.0) / a
    z2 = (y - rho) * (y - rho) / (df * s2)
    return (math.lgamma(0.5 * (df + 1.0)) - math.lgamma(0.5 * df)
            - 0.5 * math.log(df * math.pi * s2)
            - 0.5 * (df + 1.0) * math.log1p(z2))


@njit(cache=True)
def _nig_update(rho, nu, a, b, y, w):
    nu_new = 1.0 / (1.0 / nu + w)
    rho_new = nu_new * (rho / nu + w * y)
    a_new = a + 0.5 * w
    b_new = b + 0.5 * (w * y * y + rho * rho / nu - rho_new * rho_new / nu_new)
    return rho_new, nu_new, a_new, b_new


@njit(cache=True)
def _nig_step_bound(rho_p, nu_p, a_p, b_p, rho_n, nu_n, a_n, b_n,
                    w, log_qij, y, printed):
    """One cluster's contribution to the per-step variational bound.

    The parameter-change part is minus the NIG Kullback-Leibler divergence of
    the updated factor from the previous one; the likelihood part is the
    expected normal log density under the updated factor.  ``printed`` flips
    to the published variant (positive divergence sign and an inverted
    precision factor), kept for diagnostics only.
    """
    kl = (
        (a_n - a_p) * digamma(a_n) - math.lgamma(a_n) + math.lgamma(a_p)
        + a_p * (math.log(b_n) - math.log(b_p))
        + a_n * (b_p - b_n) / b_n
        + (rho_n - rho_p) ** 2 / (2.0 * nu_p) * a_n / b_n
        + 0.5 * (nu_n / nu_p - 1.0 - math.log(nu_n / nu_p))
    )
    if printed:
        ell = 0.5 * (digamma(a_n) - math.log(b_n)) - 0.5 * _LOG_2PI \
            - 0.5 * (nu_n + (y - rho_n) ** 2 * b_n / a_n)
        part1 = kl
    else:
        ell = 0.5 * (digamma(a_n) - math.log(b_n)) - 0.5 * _LOG_2PI \
            - 0.5 * (nu_n + (y - rho_n) ** 2 * a_n / b_n)
        part1 = -kl
    ent = 0.0
    if w > 0.0:
        ent = -w * math.log(w) + w * log_qij
    return part1 + w * ell + ent


@njit(cache=True)
def vsugs_core(ys, alpha, T, rho0, nu0, a0, b0, hard, printed_lb,
               weight_floor):
    """Single-pass soft (or indicator-forced) sequential fit, truncated at T.

    Returns per-cluster parameter arrays, soft counts, the (N, T) allocation
    matrix, per-step bound values and the realized cluster count.
    """
    N = ys.shape[0]
    rho = np.full(T, rho0)
    nu = np.full(T, nu0)
    a = np.full(T, a0)
    b = np.full(T, b0)
    counts = np.zeros(T)
    alloc = np.zeros((N, T))
    lbs = np.zeros(N)
    qij = np.empty(T)
    logq = np.empty(T)
    qhat = np.empty(T)
    K = 0
    for i0 in range(N):
        y = ys[i0]
        denom = alpha + i0
        new_slot = K < T
        L = K + 1 if new_slot else K
        for j in range(K):
            qij[j] = (counts[j] + alpha / T) / denom
        if new_slot:
            qij[K] = alpha * (1.0 - K / T) / denom
        for j in range(L):
            logq[j] = math.log(qij[j]) + nig_log_pred(y, rho[j], nu[j],
                                                      a[j], b[j])
        m = logq[0]
        for j in range(1, L):
            if logq[j] > m:
                m = logq[j]
        s = 0.0
        for j in range(L):
            qhat[j] = math.exp(logq[j] - m)
            s += qhat[j]
        for j in range(L):
            qhat[j] /= s
        if hard:
            k_best = 0
            for j in range(1, L):
                if qhat[j] > qhat[k_best]:
                    k_best = j
            for j in range(L):
                qhat[j] = 0.0
            qhat[k_best] = 1.0
        lb = 0.0
        for j in range(L):
            w = qhat[j]
            counts[j] += w
            alloc[i0, j] = w
            if w < weight_floor:
                continue
            rho_n, nu_n, a_n, b_n = _nig_update(rho[j], nu[j], a[j], b[j],
                                                y, w)
            lb += _nig_step_bound(rho[j], nu[j], a[j], b[j],
                                  rho_n, nu_n, a_n, b_n,
                                  w, math.log(qij[j]), y, printed_lb)
            rho[j] = rho_n
            nu[j] = nu_n
            a[j] = a_n
            b[j] = b_n
        lbs[i0] = lb
        if new_slot and qhat[K] > 0.0:
            K += 1
    return rho, nu, a, b, counts, alloc, lbs, K


@njit(cache=True)
def sugs_core(ys, alpha, rho0, nu0, a0, b0, trunc):
    """Greedy hard-allocation sequential fit.  ``trunc`` <= 0 runs the
    untruncated urn; otherwise the truncated urn with level ``trunc``."""
    N = ys.shape[0]
    cap = N if trunc <= 0 else min(trunc, N)
    rho = np.full(cap, rho0)
    nu = np.full(cap, nu0)
    a = np.full(cap, a0)
    b = np.full(cap, b0)
    counts = np.zeros(cap)
    labels = np.zeros(N, dtype=np.int64)
    step_lp = np.zeros(N)
    K = 0
    for i0 in range(N):
        y = ys[i0]
        if trunc <= 0:
            new_slot = True
        else:
            new_slot = K < trunc
        L = K + 1 if new_slot else K
        best = 0
        best_score = -np.inf
        best_lp = 0.0
        for j in range(L):
            lp = nig_log_pred(y, rho[j], nu[j], a[j], b[j])
            if j < K:
                if trunc <= 0:
                    prior_w = counts[j]
                else:
                    prior_w = counts[j] + alpha / trunc
            else:
                if trunc <= 0:
                    prior_w = alpha
                else:
                    prior_w = alpha * (1.0 - K / trunc)
            score = math.log(prior_w) + lp
            if score > best_score:
                best_score = score
                best = j
                best_lp = lp
        labels[i0] = best
        step_lp[i0] = best_lp
        counts[best] += 1.0
        rho_n, nu_n, a_n, b_n = _nig_update(rho[best], nu[best], a[best],
                                            b[best], y, 1.0)
        rho[best] = rho_n
        nu[best] = nu_n
        a[best] = a_n
        b[best] = b_n
        if best == K:
            K += 1
    return rho[:K].copy(), nu[:K].copy(), a[:K].copy(), b[:K].copy(), \
        counts[:K].copy(), labels, step_lp, K


@njit(cache=True)
def _cluster_log_pred(y, n, s1, s2, rho0, nu0, a0, b0):
    """Posterior-predictive t log density of y for a cluster summarized by
    its sufficient statistics (count, sum, sum of squares)."""
    nu_n = 1.0 / (1.0 / nu0 + n)
    rho_n = nu_n * (rho0 / nu0 + s1)
    a_n = a0 + 0.5 * n
    b_n = b0 + 0.5 * (s2 + rho0 * rho0 / nu0 - rho_n * rho_n / nu_n)
    return nig_log_pred(y, rho_n, nu_n, a_n, b_n)


@njit(cache=True)
def gibbs_core(ys, alpha, trunc, rho0, nu0, a0, b0, burnin, iters, thin,
               seed):
    """Collapsed Gibbs sampler for the (truncated) DPM of normals.

    Initializes by a sequential draw from each point's prior-process full
    conditional, then sweeps systematically.  Stored draws are relabeled to
    the order-of-appearance convention.  ``trunc`` <= 0 means untruncated.
    Deterministic for a fixed seed.
    """
    np.random.seed(seed)
    N = ys.shape[0]
    cap = N if trunc <= 0 else min(trunc, N)
    n = np.zeros(cap)
    s1 = np.zeros(cap)
    s2 = np.zeros(cap)
    z = np.full(N, -1, dtype=np.int64)
    K = 0
    draws = np.zeros((iters, N), dtype=np.int64)
    ndraws = np.zeros(iters, dtype=np.int64)
    logw = np.zeros(cap + 1)
    probs = np.zeros(cap + 1)
    total_sweeps = burnin + iters * thin
    stored = 0
    for sweep in range(total_sweeps + 1):
        for i in range(N):
            old = z[i]
            if old >= 0:
                n[old] -= 1.0
                s1[old] -= ys[i]
                s2[old] -= ys[i] * ys[i]
                if n[old] < 0.5:
                    # vacate: swap the last cluster into the empty slot
                    K -= 1
                    if old != K:
                        n[old] = n[K]
                        s1[old] = s1[K]
                        s2[old] = s2[K]
                        for m in range(N):
                            if z[m] == K:
                                z[m] = old
                    n[K] = 0.0
                    s1[K] = 0.0
                    s2[K] = 0.0
            if trunc <= 0:
                new_slot = True
            else:
                new_slot = K < trunc
            L = K + 1 if new_slot else K
            for j in range(K):
                if trunc <= 0:
                    prior_w = n[j]
                else:
                    prior_w = n[j] + alpha / trunc
                logw[j] = math.log(prior_w) + _cluster_log_pred(
                    ys[i], n[j], s1[j], s2[j], rho0, nu0, a0, b0)
            if new_slot:
                if trunc <= 0:
                    prior_w = alpha
                else:
                    prior_w = alpha * (1.0 - K / trunc)
                logw[K] = math.log(prior_w) + nig_log_pred(
                    ys[i], rho0, nu0, a0, b0)
            m = logw[0]
            for j in range(1, L):
                if logw[j] > m:
                    m = logw[j]
            tot = 0.0
            for j in range(L):
                probs[j] = math.exp(logw[j] - m)
                tot += probs[j]
            u = np.random.random() * tot
            acc = 0.0
            pick = L - 1
            for j in range(L):
                acc += probs[j]
                if u <= acc:
                    pick = j
                    break
            z[i] = pick
            n[pick] += 1.0
            s1[pick] += ys[i]
            s2[pick] += ys[i] * ys[i]
            if pick == K:
                K += 1
        if sweep == 0:
            continue  # sweep 0 only completes the sequential initialization
        eff = sweep - 1
        if eff >= burnin and (eff - burnin) % thin == 0 and stored < iters:
            # order-of-appearance relabeling
            relabel = np.full(cap, -1, dtype=np.int64)
            nxt = 0
            for i in range(N):
                if relabel[z[i]] < 0:
                    relabel[z[i]] = nxt
                    nxt += 1
                draws[stored, i] = relabel[z[i]]
            ndraws[stored] = nxt
            stored += 1
    return draws, ndraws
