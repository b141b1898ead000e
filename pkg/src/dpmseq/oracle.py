"""Gold-standard inference: a collapsed Gibbs sampler for the (truncated)
DPM and an exact-enumeration engine for tiny datasets."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Dict, Optional, Tuple

import numpy as np
from scipy.special import logsumexp

from . import _fast
from .core import (
    NIGParams, NIWParams, Params,
    nig_log_predictive, nig_log_predictive_arrays, nig_posterior_from_stats,
    nig_weighted_update, niw_log_predictive, niw_weighted_update,
)

ENUMERATION_CAP = 10


@dataclass(frozen=True)
class GibbsConfig:
    burnin: int
    iters: int
    seed: int
    thin: int = 1

    def __post_init__(self):
        if self.burnin < 0 or self.iters < 1 or self.thin < 1:
            raise ValueError(
                f"invalid GibbsConfig: burnin={self.burnin}, "
                f"iters={self.iters}, thin={self.thin}"
            )


@dataclass
class PosteriorSamples:
    """Retained allocation draws, relabeled to order of appearance."""

    allocation_draws: np.ndarray   # (iters, N) int labels, 0-based
    cluster_count_draws: np.ndarray


def collapsed_gibbs(data, alpha: float, prior: Params, cfg: GibbsConfig,
                    trunc: Optional[int] = None) -> PosteriorSamples:
    """Systematic-scan collapsed Gibbs over allocations with the component
    parameters integrated out.  Deterministic given ``cfg.seed``."""
    ys = np.asarray(data, dtype=float)
    if isinstance(prior, NIGParams) and ys.ndim == 2 and ys.shape[1] == 1:
        ys = ys[:, 0]
    if len(ys) < 1:
        raise ValueError("need at least one observation")
    if alpha <= 0:
        raise ValueError(f"alpha must be > 0, got {alpha}")
    if isinstance(prior, NIGParams) and ys.ndim == 1:
        t = 0 if trunc is None else int(trunc)
        draws, ndraws = _fast.gibbs_core(
            np.ascontiguousarray(ys), float(alpha), t,
            prior.rho, prior.nu, prior.a, prior.b,
            cfg.burnin, cfg.iters, cfg.thin, int(cfg.seed) % (2 ** 32))
        return PosteriorSamples(draws, ndraws)
    return _collapsed_gibbs_generic(ys, alpha, prior, cfg, trunc)


def _collapsed_gibbs_generic(ys, alpha, prior, cfg, trunc):
    """Reference-path sampler for multivariate (NIW) models; remove-then-
    reinsert bookkeeping over full parameter recomputation per cluster."""
    rng = np.random.default_rng(cfg.seed)
    N = len(ys)
    z = np.full(N, -1, dtype=np.int64)
    members: list[list[int]] = []
    draws = np.zeros((cfg.iters, N), dtype=np.int64)
    ndraws = np.zeros(cfg.iters, dtype=np.int64)
    stored = 0
    total = cfg.burnin + cfg.iters * cfg.thin
    for sweep in range(total + 1):
        for i in range(N):
            if z[i] >= 0:
                j = z[i]
                members[j].remove(i)
                if not members[j]:
                    members.pop(j)
                    z[z > j] -= 1
                z[i] = -1
            K = len(members)
            new_slot = trunc is None or K < trunc
            L = K + 1 if new_slot else K
            logw = np.empty(L)
            for j in range(K):
                p = _posterior_params(prior, ys[members[j]])
                nj = len(members[j])
                pw = nj if trunc is None else nj + alpha / trunc
                logw[j] = math.log(pw) + _log_pred(p, ys[i])
            if new_slot:
                pw = alpha if trunc is None else alpha * (1.0 - K / trunc)
                logw[K] = math.log(pw) + _log_pred(prior, ys[i])
            probs = np.exp(logw - logw.max())
            probs /= probs.sum()
            pick = int(rng.choice(L, p=probs))
            if pick == K:
                members.append([i])
            else:
                members[pick].append(i)
            z[i] = pick
        if sweep == 0:
            continue
        eff = sweep - 1
        if eff >= cfg.burnin and (eff - cfg.burnin) % cfg.thin == 0 \
                and stored < cfg.iters:
            draws[stored] = _canonical_relabel(z)
            ndraws[stored] = draws[stored].max() + 1
            stored += 1
    return PosteriorSamples(draws, ndraws)


def _canonical_relabel(z):
    out = np.empty_like(z)
    mapping: Dict[int, int] = {}
    for i, lab in enumerate(z):
        mapping.setdefault(int(lab), len(mapping))
        out[i] = mapping[int(lab)]
    return out


def _log_pred(p: Params, y):
    if isinstance(p, NIGParams):
        return float(nig_log_predictive(p, float(y)))
    return float(niw_log_predictive(p, np.asarray(y, dtype=float)))


def _posterior_params(prior: Params, ys) -> Params:
    p = prior
    for y in np.atleast_1d(ys) if isinstance(prior, NIGParams) \
            else np.atleast_2d(ys):
        if isinstance(prior, NIGParams):
            p = nig_weighted_update(p, float(y), 1.0)
        else:
            p = niw_weighted_update(p, y, 1.0)
    return p


# ---------------------------------------------------------------------------
# Rao-Blackwellized predictive from Gibbs draws
# ---------------------------------------------------------------------------

def gibbs_predictive_draws(samples: PosteriorSamples, data, prior: Params,
                           alpha: float, ys_eval,
                           trunc: Optional[int] = None) -> np.ndarray:
    """Per-draw predictive density values: for each retained allocation draw,
    the urn-weighted mixture of cluster posterior predictives at the
    evaluation points.  Returns an (iters, M) matrix."""
    data = np.asarray(data, dtype=float)
    univariate = isinstance(prior, NIGParams)
    if univariate and data.ndim == 2 and data.shape[1] == 1:
        data = data[:, 0]
    N = len(data)
    pts = np.atleast_1d(np.asarray(ys_eval, dtype=float)) if univariate \
        else np.atleast_2d(np.asarray(ys_eval, dtype=float))
    M = len(pts)
    iters = samples.allocation_draws.shape[0]
    out = np.empty((iters, M))
    denom = alpha + N
    if univariate:
        prior_lp = nig_log_predictive(prior, pts)
    for t in range(iters):
        z = samples.allocation_draws[t]
        K = int(samples.cluster_count_draws[t])
        n = np.bincount(z, minlength=K).astype(float)
        if trunc is None:
            w = n / denom
            w_new = alpha / denom
        else:
            w = (n + alpha / trunc) / denom
            w_new = alpha * (1.0 - K / trunc) / denom if K < trunc else 0.0
        if univariate:
            s1 = np.bincount(z, weights=data, minlength=K)
            s2 = np.bincount(z, weights=data ** 2, minlength=K)
            rho_n, nu_n, a_n, b_n = nig_posterior_from_stats(prior, n, s1, s2)
            comp = np.exp(nig_log_predictive_arrays(
                rho_n[:, None], nu_n[:, None], a_n[:, None], b_n[:, None],
                pts[None, :]))
            dens = w @ comp + w_new * np.exp(prior_lp)
        else:
            dens = np.zeros(M)
            for j in range(K):
                p = _posterior_params(prior, data[z == j])
                dens += w[j] * np.exp(
                    np.atleast_1d(niw_log_predictive(p, pts)))
            if w_new > 0:
                dens += w_new * np.exp(
                    np.atleast_1d(niw_log_predictive(prior, pts)))
        out[t] = dens
    return out


def gibbs_predictive(samples: PosteriorSamples, data, prior: Params,
                     alpha: float, ys_eval,
                     trunc: Optional[int] = None) -> np.ndarray:
    """Rao-Blackwellized posterior predictive density averaged over draws."""
    return gibbs_predictive_draws(
        samples, data, prior, alpha, ys_eval, trunc).mean(axis=0)


# ---------------------------------------------------------------------------
# Exact enumeration
# ---------------------------------------------------------------------------

@dataclass
class ExactPosterior:
    log_marginal: float
    allocation_posterior: Dict[Tuple[int, ...], float]
    predictive: Callable[[np.ndarray], np.ndarray]


def enumerate_exact(data, alpha: float, T: Optional[int],
                    prior: Params) -> ExactPosterior:
    """Brute-force posterior over growth-restricted allocation strings.

    Sums the urn prior (truncated when T is given) times the per-cluster
    closed-form marginal likelihoods over every admissible allocation of the
    N observations.  N is capped at ``ENUMERATION_CAP``.
    """
    ys = np.asarray(data, dtype=float)
    univariate = isinstance(prior, NIGParams)
    if univariate and ys.ndim == 2 and ys.shape[1] == 1:
        ys = ys[:, 0]
    N = len(ys)
    if N < 1:
        raise ValueError("need at least one observation")
    if N > ENUMERATION_CAP:
        raise ValueError(
            f"N={N} exceeds enumeration cap {ENUMERATION_CAP}")
    if alpha <= 0:
        raise ValueError(f"alpha must be > 0, got {alpha}")

    leaves: list[Tuple[Tuple[int, ...], float, list]] = []

    def recurse(i, labels, counts, params, logp):
        if i == N:
            leaves.append((tuple(labels), logp, list(params)))
            return
        K = len(counts)
        denom = alpha + i
        new_slot = T is None or K < T
        options = K + 1 if new_slot else K
        for j in range(options):
            if j < K:
                pw = counts[j] if T is None else counts[j] + alpha / T
                pj = params[j]
            else:
                pw = alpha if T is None else alpha * (1.0 - K / T)
                pj = prior
            step = math.log(pw / denom) + _log_pred(pj, ys[i])
            if univariate:
                p_new = nig_weighted_update(pj, float(ys[i]), 1.0)
            else:
                p_new = niw_weighted_update(pj, ys[i], 1.0)
            if j < K:
                counts[j] += 1
                old = params[j]
                params[j] = p_new
                recurse(i + 1, labels + [j], counts, params, logp + step)
                params[j] = old
                counts[j] -= 1
            else:
                counts.append(1)
                params.append(p_new)
                recurse(i + 1, labels + [j], counts, params, logp + step)
                params.pop()
                counts.pop()

    recurse(0, [], [], [], 0.0)
    logps = np.array([lp for _, lp, _ in leaves])
    log_marginal = float(logsumexp(logps))
    post = np.exp(logps - log_marginal)
    allocation_posterior = {lab: float(p)
                            for (lab, _, _), p in zip(leaves, post)}

    def predictive(ys_eval):
        pts = np.atleast_1d(np.asarray(ys_eval, dtype=float)) if univariate \
            else np.atleast_2d(np.asarray(ys_eval, dtype=float))
        dens = np.zeros(len(pts))
        denom = alpha + N
        for (labels, _, params), p_leaf in zip(leaves, post):
            counts = np.bincount(labels)
            K = len(counts)
            for j in range(K):
                pw = counts[j] if T is None else counts[j] + alpha / T
                dens += p_leaf * (pw / denom) * np.exp(
                    np.atleast_1d(_log_pred_vec(params[j], pts)))
            if T is None or K < T:
                pw = alpha if T is None else alpha * (1.0 - K / T)
                dens += p_leaf * (pw / denom) * np.exp(
                    np.atleast_1d(_log_pred_vec(prior, pts)))
        return dens

    return ExactPosterior(log_marginal, allocation_posterior, predictive)


def _log_pred_vec(p: Params, pts):
    if isinstance(p, NIGParams):
        return nig_log_predictive(p, pts)
    return niw_log_predictive(p, pts)
